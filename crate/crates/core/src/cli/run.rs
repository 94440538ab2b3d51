use std::fs;
use std::path::Path;

use super::config::{ExperimentParams, RunConfig};
use crate::checks::run_checks;
use crate::error::Result;
use crate::experiments::{
    ehrenfest_run, ordering_demo, packet_report, sigma_samples, survival_amplitude, temporal_double_slit,
    uncertainty_with_sweep,
};
use crate::field::packet;
use crate::io::write_field;
use crate::report::ExperimentReport;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_ASSERTION: u8 = 1;
pub const EXIT_ERROR: u8 = 2;

/// Runs the configured experiment and writes its artifacts into `out`.
pub fn execute(config: &RunConfig, out: &Path) -> Result<ExperimentReport> {
    fs::create_dir_all(out)?;
    let grid = &config.grid;
    let report = match &config.params {
        ExperimentParams::Packet(spec) => {
            let (field, rep) = packet_report(grid, spec)?;
            write_field(&field, &out.join("field"))?;
            rep
        }
        ExperimentParams::DoubleSlit { t1, t2, slit_sd, carrier_e } => {
            temporal_double_slit(grid, *t1, *t2, *slit_sd, *carrier_e)?
        }
        ExperimentParams::Ehrenfest { packet, sigma_span, n_samples } => {
            ehrenfest_run(packet, *sigma_span, *n_samples)?
        }
        ExperimentParams::Survival { packet: spec, sigma_max, n_samples } => {
            let mut rep = survival_amplitude(&packet(grid, spec)?, &sigma_samples(*sigma_max, *n_samples))?;
            rep.param("packet", spec);
            rep
        }
        ExperimentParams::Uncertainty { packet: spec, sweep } => uncertainty_with_sweep(grid, spec, *sweep, config.seed)?,
        ExperimentParams::OrderingDemo { log, clock } => {
            let demo = ordering_demo(log, config.seed, clock)?;
            let mut jsonl = Vec::new();
            demo.log.write_jsonl(&mut jsonl)?;
            fs::write(out.join("log.jsonl"), jsonl)?;
            fs::write(out.join("order.csv"), demo.order.to_csv()?)?;
            fs::write(out.join("distances.csv"), demo.distances.to_csv()?)?;
            demo.report
        }
        ExperimentParams::Check { quick } => run_checks(*quick, config.seed)?,
    };
    report.write(out)?;
    Ok(report)
}

/// One line per assertion.
pub fn print_assertions(report: &ExperimentReport) {
    for a in &report.assertions {
        let verdict = if a.pass { "PASS" } else { "FAIL" };
        let rel = match a.relation {
            crate::report::Relation::Eq => "=",
            crate::report::Relation::Ge => ">=",
            crate::report::Relation::Le => "<=",
        };
        println!("{verdict} {}: {} {rel} {} (tol {})", a.name, a.value, a.bound, a.tolerance);
    }
}

/// Runs `config` and maps the outcome to the exit-code contract: 0 when every
/// assertion passes, 1 when any fails, 2 on a configuration or runtime error.
pub fn run(config: &RunConfig, out: &Path) -> u8 {
    match execute(config, out) {
        Ok(rep) => {
            print_assertions(&rep);
            println!("wrote {}", out.display());
            if rep.passed() {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
