//! Invariant suite run by `evolparam check`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dirac::{commutator_residual, dirac_residual, gamma_set, kg_residual, plane_wave_spinor, sigma_rate_defect, CommutatorPair};
use crate::error::Result;
use crate::experiments::{ehrenfest_run, random_packet_spec, uncertainty_report, EhrenfestParams};
use crate::field::{gaussian_packet, normalize, packet, WaveField};
use crate::lattice::{forward_transform, inverse_transform, make_grid, SpacetimeGrid};
use crate::ordering::{random_log, relational_distances, universal_order, RandomLogSpec};
use crate::propagator::{
    drift_rate, natural_b, project_mass_shell, rest_energy_sq_from_sigma, sigma_tilde, Propagator, PropagatorConfig,
};
use crate::report::{Assertion, ExperimentReport};

fn random_field<R: Rng>(rng: &mut R, grid: SpacetimeGrid) -> Result<WaveField> {
    let amps = (0..grid.cells()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    Ok(normalize(&WaveField::from_amplitudes(grid, 1, amps)?)?.0)
}

/// Runs every invariant; `quick` shrinks grids and sample counts.
pub fn run_checks(quick: bool, seed: u64) -> Result<ExperimentReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ExperimentReport::new("check");
    rep.param("quick", quick);
    rep.param("seed", seed);
    let n = if quick { 32 } else { 128 };

    // transforms
    let g = make_grid(n, n, 16.0, 24.0, 1.0, 1.0)?;
    let f = random_field(&mut rng, g)?;
    let rec = forward_transform(&f)?;
    rep.assert(Assertion::at_most("parseval", (rec.norm_sq() - f.norm_sq()).abs(), 0.0, 1e-12));
    rep.assert(Assertion::at_most("round_trip", inverse_transform(&rec)?.distance(&f)?, 0.0, 1e-12));

    // propagation
    let np = if quick { 64 } else { 128 };
    let g = make_grid(np, np, 64.0, 64.0, 1.0, 1.0)?;
    let pk = gaussian_packet(&g, -2.0, -3.0, 3.0, 3.0, 0.5, 1.5)?;
    let prop = Propagator::new(&pk, &PropagatorConfig::natural())?;
    let mut worst: f64 = 0.0;
    for s in [0.1, 1.0, 10.0] {
        worst = worst.max((prop.at(s)?.norm() - 1.0).abs());
    }
    rep.assert(Assertion::at_most("unitarity", worst, 0.0, 1e-12));
    let fixed = PropagatorConfig::fixed(prop.b());
    let two_steps = Propagator::new(&prop.at(1.3)?, &fixed)?.at(2.1)?;
    rep.assert(Assertion::at_most("group_property", two_steps.distance(&prop.at(3.4)?)?, 0.0, 1e-12));

    let (vx, vt) = drift_rate(&pk, prop.b())?;
    let (x0, _, t0, _) = pk.position_moments()?;
    let (x1, _, t1, _) = prop.at(4.0)?.position_moments()?;
    let drift_err = ((x1 - x0) / 4.0 - vx).abs().max(((t1 - t0) / 4.0 - vt).abs());
    rep.assert(Assertion::at_most("drift_law", drift_err, 0.0, 1e-6));
    rep.assert(Assertion::close("natural_parametrization_rate", vt, 1.0, 1e-12));

    let mut params = EhrenfestParams::three_four_five();
    if quick {
        params.grid = SpacetimeGrid { n_x: 128, n_t: 128, l_x: 128.0, ..params.grid };
        params.grid.l_t = 128.0;
        params.x0 = -3.0;
        params.t0 = -5.0;
    }
    let eh = ehrenfest_run(&params, if quick { 10.0 } else { 20.0 }, 11)?;
    rep.assert(Assertion::close("natural_parametrization", eh.scalars["dt_dsigma"], 1.0, 1e-3));
    rep.assert(Assertion::close("group_velocity", eh.scalars["dx_dt"], 0.6, 1e-3));

    // Einstein relation mode by mode, over the whole grid
    let b = natural_b(&forward_transform(&pk)?)?;
    let mut einstein: f64 = 0.0;
    for a in 0..g.n_x {
        for j in 0..g.n_t {
            let (r, w) = (g.r_freq(a), g.t_freq(j));
            let direct = (g.hbar * w).powi(2) - (g.c * g.hbar * r).powi(2);
            einstein = einstein.max((rest_energy_sq_from_sigma(sigma_tilde(r, w, b, g.c), b, g.c, g.hbar) - direct).abs());
        }
    }
    rep.assert(Assertion::at_most("einstein_per_mode", einstein, 0.0, 1e-10));
    rep.assert(Assertion::at_most("sigma_rate", sigma_rate_defect(&forward_transform(&pk)?, b)?, 0.0, 1e-12));

    // spinors
    let mut clifford: f64 = 0.0;
    for n_s in [2, 4] {
        clifford = clifford.max(gamma_set(n_s)?.clifford_defect());
    }
    rep.assert(Assertion::at_most("clifford", clifford, 0.0, 0.0));
    let mut spinor: f64 = 0.0;
    let pairs = if quick { 20 } else { 100 };
    for n_s in [2, 4] {
        let gs = gamma_set(n_s)?;
        for _ in 0..pairs {
            let p: Vec<f64> = gs.spatial.iter().map(|_| rng.gen_range(-3.0..3.0)).collect();
            let e0 = rng.gen_range(0.1..3.0);
            let u = plane_wave_spinor(&p, e0, &gs, 1.0)?;
            spinor = spinor.max(dirac_residual(&u.components, &p, u.energy, e0, &gs, 1.0)?);
        }
    }
    rep.assert(Assertion::at_most("spinor_residual", spinor, 0.0, 1e-12));

    let lg = make_grid(32, 32, 8.0 * std::f64::consts::PI, 8.0 * std::f64::consts::PI, 1.0, 1.0)?;
    let shell = project_mass_shell(&forward_transform(&gaussian_packet(&lg, 0.0, 0.0, 3.0, 3.0, 0.75, 1.25)?)?, 1.0, 1e-6)?;
    rep.assert(Assertion::at_most("klein_gordon", kg_residual(&inverse_transform(&shell.field)?, 1.0)?, 0.0, 1e-6));

    // commutators
    let cg = make_grid(128, 128, 32.0, 32.0, 1.0, 1.0)?;
    let cf = gaussian_packet(&cg, 0.5, -0.5, 1.0, 1.2, 0.3, 0.8)?;
    for pair in [CommutatorPair::PositionMomentum, CommutatorPair::TimeEnergy] {
        let est = commutator_residual(pair, &cf)?;
        rep.assert(Assertion::at_most(format!("commutator[{}]", pair.label()), (est.constant - est.expected).norm(), 0.0, 1e-6));
    }

    // uncertainty sweep
    let ug = make_grid(64, 64, 32.0, 32.0, 1.0, 1.0)?;
    let mut least: f64 = f64::INFINITY;
    for _ in 0..if quick { 10 } else { 100 } {
        let spec = random_packet_spec(&mut rng, &ug);
        let u = uncertainty_report(&packet(&ug, &spec)?)?;
        least = least.min(u.scalars["xp_product"] / 0.5).min(u.scalars["te_product"] / 0.5);
    }
    rep.assert(Assertion::at_least("uncertainty_sweep", least, 1.0, 1e-3));

    // ordering
    let (mut sound, mut antisym, mut cycles) = (true, true, true);
    for _ in 0..if quick { 20 } else { 200 } {
        let spec = RandomLogSpec {
            subjects: rng.gen_range(1..=10),
            events: rng.gen_range(1..=100),
            messages: rng.gen_range(0..=150),
            simultaneity: 0.1,
            presentness: 0.0,
        };
        let log = random_log(&mut rng, &spec);
        let order = universal_order(&log)?;
        sound &= order.is_sound_for(&log);
        let clock = log.subjects().find(|s| !log.subject_events(s).is_empty()).unwrap_or("s0").to_string();
        let m = relational_distances(&log, &order, &clock)?;
        let k = m.len();
        for i in 0..k {
            for j in 0..k {
                antisym &= m.t(i, j) == -m.t(j, i);
            }
        }
        // with antisymmetry, zero triangles through a fixed event make every cycle sum zero
        for i in 0..k {
            for j in 0..k {
                cycles &= m.t(0, i) + m.t(i, j) + m.t(j, 0) == 0;
            }
        }
    }
    rep.assert(Assertion::holds("ordering_soundness", sound));
    rep.assert(Assertion::holds("distance_antisymmetry", antisym));
    rep.assert(Assertion::holds("cycle_sums", cycles));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let rep = run_checks(true, 1).unwrap();
        let failed: Vec<_> = rep.failures().collect();
        assert!(failed.is_empty(), "{failed:?}");
    }

    #[test]
    fn random_packets_meet_preconditions() {
        let g = make_grid(64, 32, 32.0, 16.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let spec = random_packet_spec(&mut rng, &g);
            packet(&g, &spec).unwrap();
        }
    }
}
