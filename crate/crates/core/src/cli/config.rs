//! Run configuration.
//!
//! A config is a TOML file with an `experiment` key, optional `out` and
//! `seed`, an optional `[grid]` section and one optional section named after
//! the experiment. Every key has a default; unknown keys are errors.
//!
//! ```toml
//! experiment = "double-slit"   # packet | double-slit | ehrenfest | survival
//!                              # | uncertainty | ordering-demo | check
//! out = "out/double-slit"      # output directory; --out overrides
//! seed = 0                     # for randomized sweeps; --seed overrides
//!
//! [grid]                       # not used by ordering-demo and check
//! n_x = 4                      # points along x, power of two >= 4
//! n_t = 1024                   # points along t, power of two >= 4
//! l_x = 4.0                    # periodic extent in x
//! l_t = 32.0                   # periodic extent in t
//! c = 1.0
//! hbar = 1.0
//!
//! [double_slit]
//! t1 = -2.0                    # lobe centers
//! t2 = 2.0
//! slit_sd = 0.1                # lobe sd of |Ψ|²
//! carrier_e = 10.0             # common carrier energy
//! ```
//!
//! Other sections and their keys:
//!
//! - `[packet]`: `x0, t0, sd_x, sd_t, p0, e_freq`
//! - `[ehrenfest]`: `x0, t0, sd_x, sd_t, p0, e0, shell_tol, sigma_span, n_samples`
//! - `[survival]`: `x0, t0, sd_x, sd_t, p0, e_freq, sigma_max, n_samples`
//! - `[uncertainty]`: `x0, t0, sd_x, sd_t, p0, e_freq, sweep` (number of random packets)
//! - `[ordering]`: `subjects, events, messages, simultaneity, presentness, clock`
//! - `[check]`: `quick`

use std::fmt;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::experiments::EhrenfestParams;
use crate::field::PacketSpec;
use crate::lattice::SpacetimeGrid;
use crate::ordering::RandomLogSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, column: usize, message: String },
    /// Every validation failure, each prefixed by its key path.
    Invalid(Vec<String>),
    Io(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, column, message } => write!(f, "config syntax error at {line}:{column}: {message}"),
            ConfigError::Invalid(errs) => {
                write!(f, "invalid config:")?;
                for e in errs {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Packet,
    DoubleSlit,
    Ehrenfest,
    Survival,
    Uncertainty,
    OrderingDemo,
    Check,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Packet,
        ExperimentKind::DoubleSlit,
        ExperimentKind::Ehrenfest,
        ExperimentKind::Survival,
        ExperimentKind::Uncertainty,
        ExperimentKind::OrderingDemo,
        ExperimentKind::Check,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Packet => "packet",
            ExperimentKind::DoubleSlit => "double-slit",
            ExperimentKind::Ehrenfest => "ehrenfest",
            ExperimentKind::Survival => "survival",
            ExperimentKind::Uncertainty => "uncertainty",
            ExperimentKind::OrderingDemo => "ordering-demo",
            ExperimentKind::Check => "check",
        }
    }

    fn section(self) -> &'static str {
        match self {
            ExperimentKind::Packet => "packet",
            ExperimentKind::DoubleSlit => "double_slit",
            ExperimentKind::Ehrenfest => "ehrenfest",
            ExperimentKind::Survival => "survival",
            ExperimentKind::Uncertainty => "uncertainty",
            ExperimentKind::OrderingDemo => "ordering",
            ExperimentKind::Check => "check",
        }
    }

    fn uses_grid(self) -> bool {
        !matches!(self, ExperimentKind::OrderingDemo | ExperimentKind::Check)
    }

    fn default_grid(self) -> SpacetimeGrid {
        let g = |n_x, n_t, l_x, l_t| SpacetimeGrid { n_x, n_t, l_x, l_t, c: 1.0, hbar: 1.0 };
        match self {
            ExperimentKind::DoubleSlit => g(4, 1024, 4.0, 32.0),
            ExperimentKind::Ehrenfest => EhrenfestParams::three_four_five().grid,
            ExperimentKind::Survival => g(64, 512, 64.0, 128.0),
            _ => g(64, 64, 32.0, 32.0),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentParams {
    Packet(PacketSpec),
    DoubleSlit { t1: f64, t2: f64, slit_sd: f64, carrier_e: f64 },
    Ehrenfest { packet: EhrenfestParams, sigma_span: f64, n_samples: usize },
    Survival { packet: PacketSpec, sigma_max: f64, n_samples: usize },
    Uncertainty { packet: PacketSpec, sweep: usize },
    OrderingDemo { log: RandomLogSpec, clock: String },
    Check { quick: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub grid: SpacetimeGrid,
    pub params: ExperimentParams,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    pub fn output_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out").join(self.experiment.id()))
    }
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Typed reads from one table, recording errors under `prefix`.
struct Reader<'a> {
    table: Option<&'a Table>,
    prefix: &'a str,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn new(table: Option<&'a Table>, prefix: &'a str) -> Self {
        Reader { table, prefix, errors: Vec::new() }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn err(&mut self, key: &str, msg: impl fmt::Display) {
        let p = self.path(key);
        self.errors.push(format!("{p}: {msg}"));
    }

    fn check_keys(&mut self, allowed: &[&str]) {
        let Some(t) = self.table else { return };
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(k, "unknown key");
            }
        }
    }

    fn value(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        match self.value(key) {
            None => default,
            Some(Value::Float(v)) if v.is_finite() => *v,
            Some(Value::Float(_)) => {
                self.err(key, "must be finite");
                default
            }
            Some(Value::Integer(v)) => *v as f64,
            Some(v) => {
                let msg = format!("expected a number, found {}", type_name(v));
                self.err(key, msg);
                default
            }
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let v = self.f64(key, default);
        if !(v > 0.0) {
            self.err(key, "must be positive");
        }
        v
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        match self.value(key) {
            None => default,
            Some(Value::Integer(v)) if *v >= 0 => *v as usize,
            Some(Value::Integer(_)) => {
                self.err(key, "must be non-negative");
                default
            }
            Some(v) => {
                let msg = format!("expected an integer, found {}", type_name(v));
                self.err(key, msg);
                default
            }
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        match self.value(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(v) => {
                let msg = format!("expected a boolean, found {}", type_name(v));
                self.err(key, msg);
                default
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.value(key) {
            None => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(v) => {
                let msg = format!("expected a string, found {}", type_name(v));
                self.err(key, msg);
                None
            }
        }
    }

    fn probability(&mut self, key: &str, default: f64) -> f64 {
        let v = self.f64(key, default);
        if !(0.0..=1.0).contains(&v) {
            self.err(key, "must lie in [0, 1]");
        }
        v
    }
}

fn sub_table<'a>(root: &'a Table, key: &str, errors: &mut Vec<String>) -> Option<&'a Table> {
    match root.get(key) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(v) => {
            errors.push(format!("{key}: expected a table, found {}", type_name(v)));
            None
        }
    }
}

fn read_grid(r: &mut Reader, default: SpacetimeGrid) -> SpacetimeGrid {
    r.check_keys(&["n_x", "n_t", "l_x", "l_t", "c", "hbar"]);
    let axis = |r: &mut Reader, key: &str, d: usize| {
        let n = r.usize(key, d);
        if !n.is_power_of_two() {
            r.err(key, "not a power of two");
        } else if n < 4 {
            r.err(key, "must be at least 4");
        }
        n
    };
    let n_x = axis(r, "n_x", default.n_x);
    let n_t = axis(r, "n_t", default.n_t);
    SpacetimeGrid {
        n_x,
        n_t,
        l_x: r.positive("l_x", default.l_x),
        l_t: r.positive("l_t", default.l_t),
        c: r.positive("c", default.c),
        hbar: r.positive("hbar", default.hbar),
    }
}

const PACKET_KEYS: [&str; 6] = ["x0", "t0", "sd_x", "sd_t", "p0", "e_freq"];

fn read_packet(r: &mut Reader, d: PacketSpec) -> PacketSpec {
    PacketSpec {
        x0: r.f64("x0", d.x0),
        t0: r.f64("t0", d.t0),
        sd_x: r.positive("sd_x", d.sd_x),
        sd_t: r.positive("sd_t", d.sd_t),
        p0: r.f64("p0", d.p0),
        e_freq: r.f64("e_freq", d.e_freq),
    }
}

fn with_keys<'k>(base: &[&'k str], extra: &[&'k str]) -> Vec<&'k str> {
    base.iter().chain(extra).copied().collect()
}

fn read_params(kind: ExperimentKind, r: &mut Reader, grid: SpacetimeGrid) -> ExperimentParams {
    match kind {
        ExperimentKind::Packet => {
            r.check_keys(&PACKET_KEYS);
            let d = PacketSpec { x0: 0.0, t0: 0.0, sd_x: 2.0, sd_t: 2.0, p0: 0.5, e_freq: 1.0 };
            ExperimentParams::Packet(read_packet(r, d))
        }
        ExperimentKind::DoubleSlit => {
            r.check_keys(&["t1", "t2", "slit_sd", "carrier_e"]);
            let t1 = r.f64("t1", -2.0);
            let t2 = r.f64("t2", 2.0);
            if t2 < t1 {
                r.err("t2", "must not precede t1");
            }
            ExperimentParams::DoubleSlit { t1, t2, slit_sd: r.positive("slit_sd", 0.1), carrier_e: r.f64("carrier_e", 10.0) }
        }
        ExperimentKind::Ehrenfest => {
            r.check_keys(&["x0", "t0", "sd_x", "sd_t", "p0", "e0", "shell_tol", "sigma_span", "n_samples"]);
            let d = EhrenfestParams::three_four_five();
            let packet = EhrenfestParams {
                grid,
                x0: r.f64("x0", d.x0),
                t0: r.f64("t0", d.t0),
                sd_x: r.positive("sd_x", d.sd_x),
                sd_t: r.positive("sd_t", d.sd_t),
                p0: r.f64("p0", d.p0),
                e0: r.positive("e0", d.e0),
                shell_tol: r.positive("shell_tol", d.shell_tol),
            };
            let sigma_span = r.positive("sigma_span", 20.0);
            let n_samples = r.usize("n_samples", 21);
            if n_samples < 2 {
                r.err("n_samples", "must be at least 2");
            }
            ExperimentParams::Ehrenfest { packet, sigma_span, n_samples }
        }
        ExperimentKind::Survival => {
            r.check_keys(&with_keys(&PACKET_KEYS, &["sigma_max", "n_samples"]));
            let d = PacketSpec { x0: 0.0, t0: 0.0, sd_x: 4.0, sd_t: 5.0, p0: 0.0, e_freq: 10.0 };
            let packet = read_packet(r, d);
            let sigma_max = r.positive("sigma_max", 40.0);
            let n_samples = r.usize("n_samples", 401);
            if n_samples < 2 {
                r.err("n_samples", "must be at least 2");
            }
            ExperimentParams::Survival { packet, sigma_max, n_samples }
        }
        ExperimentKind::Uncertainty => {
            r.check_keys(&with_keys(&PACKET_KEYS, &["sweep"]));
            let d = PacketSpec { x0: 0.0, t0: 0.0, sd_x: 1.5, sd_t: 2.0, p0: 0.4, e_freq: 2.0 };
            ExperimentParams::Uncertainty { packet: read_packet(r, d), sweep: r.usize("sweep", 100) }
        }
        ExperimentKind::OrderingDemo => {
            r.check_keys(&["subjects", "events", "messages", "simultaneity", "presentness", "clock"]);
            let log = RandomLogSpec {
                subjects: r.usize("subjects", 4),
                events: r.usize("events", 40),
                messages: r.usize("messages", 30),
                simultaneity: r.probability("simultaneity", 0.1),
                presentness: r.probability("presentness", 0.2),
            };
            if log.subjects == 0 {
                r.err("subjects", "must be at least 1");
            }
            let clock = r.string("clock").unwrap_or_else(|| "s0".to_string());
            ExperimentParams::OrderingDemo { log, clock }
        }
        ExperimentKind::Check => {
            r.check_keys(&["quick"]);
            ExperimentParams::Check { quick: r.bool("quick", false) }
        }
    }
}

/// Parses and validates a config, collecting every error.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Table = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Syntax { line, column, message: e.message().to_string() }
    })?;
    let mut errors = Vec::new();
    let mut top = Reader::new(Some(&root), "");
    let kind = match top.string("experiment") {
        None if root.get("experiment").is_none() => {
            top.err("experiment", "missing");
            None
        }
        None => None,
        Some(s) => {
            let k = ExperimentKind::parse(&s);
            if k.is_none() {
                let ids: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.id()).collect();
                top.err("experiment", format!("unknown experiment {s:?}, expected one of {}", ids.join(", ")));
            }
            k
        }
    };
    let out = top.string("out").map(PathBuf::from);
    let seed = match root.get("seed") {
        Some(Value::Integer(v)) if *v >= 0 => *v as u64,
        Some(Value::Integer(_)) => {
            top.err("seed", "must be non-negative");
            0
        }
        Some(v) => {
            top.err("seed", format!("expected an integer, found {}", type_name(v)));
            0
        }
        None => 0,
    };
    let mut allowed = vec!["experiment", "out", "seed"];
    if let Some(k) = kind {
        if k.uses_grid() {
            allowed.push("grid");
        }
        allowed.push(k.section());
    } else {
        allowed.push("grid");
        allowed.extend(ExperimentKind::ALL.iter().map(|k| k.section()));
    }
    top.check_keys(&allowed);
    errors.append(&mut top.errors);

    let Some(kind) = kind else { return Err(ConfigError::Invalid(errors)) };
    let mut gr = Reader::new(sub_table(&root, "grid", &mut errors), "grid");
    let grid = read_grid(&mut gr, kind.default_grid());
    errors.append(&mut gr.errors);
    let mut pr = Reader::new(sub_table(&root, kind.section(), &mut errors), kind.section());
    let params = read_params(kind, &mut pr, grid);
    errors.append(&mut pr.errors);

    if errors.is_empty() {
        Ok(RunConfig { experiment: kind, grid, params, out, seed })
    } else {
        Err(ConfigError::Invalid(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invalid(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(ConfigError::Invalid(e)) => e,
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config("experiment = \"ehrenfest\"\n").unwrap();
        assert_eq!(c.experiment, ExperimentKind::Ehrenfest);
        assert_eq!((c.grid.c, c.grid.hbar), (1.0, 1.0));
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_dir(), PathBuf::from("out/ehrenfest"));
    }

    #[test]
    fn grid_overrides_and_integer_floats() {
        let c = parse_config("experiment = \"packet\"\n[grid]\nn_x = 128\nl_x = 40\n[packet]\nsd_x = 3\n").unwrap();
        assert_eq!(c.grid.n_x, 128);
        assert_eq!(c.grid.l_x, 40.0);
        let ExperimentParams::Packet(p) = c.params else { panic!() };
        assert_eq!(p.sd_x, 3.0);
    }

    #[test]
    fn power_of_two_message() {
        let e = invalid("experiment = \"ehrenfest\"\n[grid]\nn_x = 7\n");
        assert_eq!(e, vec!["grid.n_x: not a power of two".to_string()]);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let e = invalid("experiment = \"packet\"\nfoo = 1\n[packet]\nsdx = 2.0\n");
        assert!(e.contains(&"foo: unknown key".to_string()), "{e:?}");
        assert!(e.contains(&"packet.sdx: unknown key".to_string()), "{e:?}");
    }

    #[test]
    fn all_errors_are_collected() {
        let e = invalid("experiment = \"double-slit\"\n[grid]\nn_t = 1000\nl_t = -1\n[double_slit]\nslit_sd = \"wide\"\nt1 = 3\nt2 = 1\n");
        assert_eq!(e.len(), 4, "{e:?}");
        assert!(e.iter().any(|m| m.starts_with("double_slit.slit_sd: expected a number")));
        assert!(e.iter().any(|m| m == "double_slit.t2: must not precede t1"));
    }

    #[test]
    fn sections_of_other_experiments_are_rejected() {
        let e = invalid("experiment = \"check\"\n[grid]\nn_x = 8\n[survival]\n");
        assert_eq!(e, vec!["grid: unknown key".to_string(), "survival: unknown key".to_string()]);
    }

    #[test]
    fn unknown_or_missing_experiment() {
        assert_eq!(invalid("seed = 1\n"), vec!["experiment: missing".to_string()]);
        let e = invalid("experiment = \"warp\"\n");
        assert!(e[0].starts_with("experiment: unknown experiment \"warp\""));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_config("experiment = \"packet\"\n[grid\nn_x = 4\n") {
            Err(ConfigError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column >= 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let start = doc.find("//! ```toml\n").unwrap() + 12;
        let end = start + doc[start..].find("//! ```").unwrap();
        let text: String = doc[start..end].lines().map(|l| l.trim_start_matches("//!").trim_start()).collect::<Vec<_>>().join("\n");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.experiment, ExperimentKind::DoubleSlit);
    }
}
