//! Canned experiments. Each returns an [`ExperimentReport`] whose assertions
//! can be recomputed from its series alone.
//!
//! Series and columns:
//!
//! | experiment | series | columns |
//! |---|---|---|
//! | packet | `marginal_x`, `marginal_t` | `x, probability` / `t, probability` |
//! | double-slit | `spectrum` | `energy, probability, single_slit` |
//! | double-slit | `peaks` | `energy, height` |
//! | ehrenfest | `trajectory` | `sigma, mean_x, mean_t, mean_p, mean_e` |
//! | survival | `survival` | `sigma, amplitude, gaussian, delta_sigma_tilde` |
//! | uncertainty | `moments` | `sd_x, sd_p, sd_t, sd_e, hbar, mean_e, delta_e0sq, delta_sigma` |
//! | uncertainty | `sweep` | `packet, xp_product, te_product` |
//! | ordering-demo | `clock` | `class, tau, size` |

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{check_inside, check_resolved, normalize, observables_with, packet, PacketSpec, ReciprocalField, WaveField};
use crate::lattice::{forward_transform, SpacetimeGrid};
use crate::ordering::{presentness_conflicts, random_log, relational_distances, universal_order, DistanceMatrix, EventLog, RandomLogSpec, UniversalOrder};
use crate::propagator::{natural_b, sigma_tilde, MassShell, Propagator, PropagatorConfig};
use crate::report::{Assertion, ExperimentReport, Series};

/// Relative tolerance on fringe spacing and envelope width.
pub const FRINGE_TOLERANCE: f64 = 0.02;
/// Peaks below this fraction of the global maximum are ignored.
pub const PEAK_THRESHOLD: f64 = 0.1;
pub const SLOPE_TOLERANCE: f64 = 1e-3;
pub const SURVIVAL_TOLERANCE: f64 = 0.01;
/// Survival samples are compared with the Gaussian law while it stays above this.
pub const SURVIVAL_FLOOR: f64 = 0.1;
/// Relative slack on the `ħ/2` bounds.
pub const UNCERTAINTY_SLACK: f64 = 1e-3;

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Energy marginal `Σ_r |c(r, w)|²` sorted by energy.
pub fn energy_spectrum(rec: &ReciprocalField) -> Vec<(f64, f64)> {
    let g = rec.grid();
    let mut by_b = vec![0.0; g.n_t];
    rec.for_each_mode(|_, b, _, _, wt| by_b[b] += wt);
    let mut out: Vec<(f64, f64)> = by_b.into_iter().enumerate().map(|(b, p)| (g.hbar * g.t_freq(b), p)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Local maxima at or above `threshold × max`, refined by a parabola through
/// the three samples around each maximum. Samples must be equally spaced.
pub fn find_peaks(spectrum: &[(f64, f64)], threshold: f64) -> Vec<(f64, f64)> {
    let top = spectrum.iter().map(|s| s.1).fold(0.0, f64::max);
    if spectrum.len() < 3 || top <= 0.0 {
        return Vec::new();
    }
    let step = spectrum[1].0 - spectrum[0].0;
    let mut peaks = Vec::new();
    for k in 1..spectrum.len() - 1 {
        let (l, m, r) = (spectrum[k - 1].1, spectrum[k].1, spectrum[k + 1].1);
        if m > l && m >= r && m >= threshold * top {
            let curv = l - 2.0 * m + r;
            let shift = if curv < 0.0 { 0.5 * (l - r) / curv } else { 0.0 };
            let height = m - 0.25 * (l - r) * shift;
            peaks.push((spectrum[k].0 + shift * step, height));
        }
    }
    peaks
}

fn weighted_sd(samples: &[(f64, f64)]) -> f64 {
    let w: f64 = samples.iter().map(|s| s.1).sum();
    let m = samples.iter().map(|s| s.0 * s.1).sum::<f64>() / w;
    (samples.iter().map(|s| (s.0 - m).powi(2) * s.1).sum::<f64>() / w).sqrt()
}

fn temporal_lobes(grid: &SpacetimeGrid, centers: &[f64], slit_sd: f64, carrier_e: f64) -> Result<WaveField> {
    let w0 = carrier_e / grid.hbar;
    let f = WaveField::from_fn(*grid, |_, t| {
        let env: f64 = centers.iter().map(|c| (-(t - c).powi(2) / (4.0 * slit_sd * slit_sd)).exp()).sum();
        Complex64::from_polar(env, -w0 * t)
    });
    Ok(normalize(&f)?.0)
}

/// Two equal Gaussian emission lobes at `t1` and `t2` sharing a carrier; the
/// energy spectrum shows fringes with spacing `2πħ/(t2 − t1)` under a
/// Gaussian envelope of width `ħ/(2·slit_sd)`. The field is uniform in x.
///
/// Peak positions are pulled toward the envelope center by a relative
/// amount of about `8·slit_sd²/Δt²`, so narrow lobes are needed for the 2%
/// spacing check.
pub fn temporal_double_slit(grid: &SpacetimeGrid, t1: f64, t2: f64, slit_sd: f64, carrier_e: f64) -> Result<ExperimentReport> {
    grid.validate()?;
    if ![t1, t2, slit_sd, carrier_e].iter().all(|v| v.is_finite()) || !(slit_sd > 0.0) {
        return Err(Error::InvalidParameter("double slit parameters must be finite with slit_sd > 0".into()));
    }
    if t2 < t1 {
        return Err(Error::InvalidParameter(format!("t2 = {t2} precedes t1 = {t1}")));
    }
    check_resolved("slit_sd", slit_sd, grid.dt())?;
    check_inside("t", t1, slit_sd, grid.t_min(), grid.t_max())?;
    check_inside("t", t2, slit_sd, grid.t_min(), grid.t_max())?;
    let hbar = grid.hbar;
    let delta = t2 - t1;
    let degenerate = delta == 0.0;
    let expected = if degenerate { f64::NAN } else { 2.0 * PI * hbar / delta };
    let bin = hbar * grid.dw();
    if !degenerate && expected < 4.0 * bin {
        return Err(Error::UnderResolved(format!(
            "fringe period {expected} spans fewer than 4 spectral bins of {bin}; need l_t >= {}",
            4.0 * delta
        )));
    }
    let envelope_expected = hbar / (2.0 * slit_sd);
    let nyquist = hbar * PI / grid.dt();
    if carrier_e.abs() + 6.0 * envelope_expected > nyquist {
        return Err(Error::UnderResolved(format!(
            "carrier {carrier_e} with envelope sd {envelope_expected} exceeds the energy Nyquist limit {nyquist}"
        )));
    }

    let centers: &[f64] = if degenerate { &[t1] } else { &[t1, t2] };
    let double = energy_spectrum(&forward_transform(&temporal_lobes(grid, centers, slit_sd, carrier_e)?)?);
    let single = energy_spectrum(&forward_transform(&temporal_lobes(grid, &[t1], slit_sd, carrier_e)?)?);
    let peaks = find_peaks(&double, PEAK_THRESHOLD);
    let spacing = if peaks.len() >= 2 {
        (peaks[peaks.len() - 1].0 - peaks[0].0) / (peaks.len() - 1) as f64
    } else {
        f64::NAN
    };
    let envelope_sd = weighted_sd(&single);

    let mut rep = ExperimentReport::new("double-slit");
    rep.param("grid", grid);
    rep.param("t1", t1);
    rep.param("t2", t2);
    rep.param("slit_sd", slit_sd);
    rep.param("carrier_e", carrier_e);
    rep.param("peak_threshold", PEAK_THRESHOLD);
    rep.scalar("fringe_spacing", spacing);
    rep.scalar("fringe_spacing_expected", expected);
    rep.scalar("peak_count", peaks.len() as f64);
    rep.scalar("envelope_sd", envelope_sd);
    rep.scalar("envelope_sd_expected", envelope_expected);
    if degenerate {
        rep.assert(Assertion::close("single_peak", peaks.len() as f64, 1.0, 0.0));
    } else {
        rep.assert(Assertion::close("fringe_spacing", spacing, expected, FRINGE_TOLERANCE * expected));
    }
    rep.assert(Assertion::close("envelope_sd", envelope_sd, envelope_expected, FRINGE_TOLERANCE * envelope_expected));

    let mut s = Series::new("spectrum", &["energy", "probability", "single_slit"]);
    for (d, o) in double.iter().zip(&single) {
        s.push(vec![d.0, d.1, o.1]);
    }
    let mut p = Series::new("peaks", &["energy", "height"]);
    for pk in &peaks {
        p.push(vec![pk.0, pk.1]);
    }
    rep.series.push(s);
    rep.series.push(p);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EhrenfestParams {
    pub grid: SpacetimeGrid,
    pub x0: f64,
    pub t0: f64,
    pub sd_x: f64,
    pub sd_t: f64,
    /// Carrier momentum; the carrier energy is put on the shell of `e0`.
    pub p0: f64,
    pub e0: f64,
    /// Half-width of the kept band in `ε² − c²p²`.
    pub shell_tol: f64,
}

impl EhrenfestParams {
    /// 3-4-5 packet: `ε₀ = 1`, `p = 0.75`, `ε = 1.25`.
    pub fn three_four_five() -> Self {
        EhrenfestParams {
            grid: SpacetimeGrid { n_x: 256, n_t: 256, l_x: 256.0, l_t: 256.0, c: 1.0, hbar: 1.0 },
            x0: -6.0,
            t0: -10.0,
            sd_x: 8.0,
            sd_t: 8.0,
            p0: 0.75,
            e0: 1.0,
            shell_tol: 1.0,
        }
    }

    pub fn carrier_energy(&self) -> f64 {
        (self.e0 * self.e0 + self.grid.c * self.grid.c * self.p0 * self.p0).sqrt()
    }
}

/// Propagates a positive-energy, shell-projected packet under the natural
/// parametrization and fits `d⟨t⟩/dσ` and `d⟨x⟩/d⟨t⟩` over `n_samples`
/// equally spaced values in `[0, sigma_span]`.
pub fn ehrenfest_run(params: &EhrenfestParams, sigma_span: f64, n_samples: usize) -> Result<ExperimentReport> {
    if !(sigma_span > 0.0) || !sigma_span.is_finite() || n_samples < 2 {
        return Err(Error::InvalidParameter(format!(
            "need sigma_span > 0 and n_samples >= 2, got {sigma_span} and {n_samples}"
        )));
    }
    let g = params.grid;
    g.validate()?;
    let spec = PacketSpec {
        x0: params.x0,
        t0: params.t0,
        sd_x: params.sd_x,
        sd_t: params.sd_t,
        p0: params.p0,
        e_freq: params.carrier_energy() / g.hbar,
    };
    let field = packet(&g, &spec)?;
    let config = PropagatorConfig {
        project_positive_energy: true,
        mass_shell: Some(MassShell { e0: params.e0, tol: params.shell_tol }),
        ..PropagatorConfig::natural()
    };
    let prop = Propagator::new(&field, &config)?;

    let mut s = Series::new("trajectory", &["sigma", "mean_x", "mean_t", "mean_p", "mean_e"]);
    let (mut sig, mut xs, mut ts) = (Vec::new(), Vec::new(), Vec::new());
    let (mut mean_p, mut mean_e, mut e0sq) = (0.0, 0.0, 0.0);
    for k in 0..n_samples {
        let sigma = sigma_span * k as f64 / (n_samples - 1) as f64;
        let f = prop.at(sigma)?;
        let obs = observables_with(&f, &prop.spectrum_at(sigma))?;
        s.push(vec![sigma, obs.mean_x, obs.mean_t, obs.mean_p, obs.mean_e]);
        sig.push(sigma);
        xs.push(obs.mean_x);
        ts.push(obs.mean_t);
        if k == 0 {
            (mean_p, mean_e, e0sq) = (obs.mean_p, obs.mean_e, obs.mean_e0sq);
        }
    }
    let dt_dsigma = ols_slope(&sig, &ts);
    let dx_dt = ols_slope(&ts, &xs);
    let group_velocity = g.c * g.c * mean_p / mean_e;

    let mut rep = ExperimentReport::new("ehrenfest");
    rep.param("packet", params);
    rep.param("sigma_span", sigma_span);
    rep.param("n_samples", n_samples);
    rep.scalar("b", prop.b());
    rep.scalar("mean_p", mean_p);
    rep.scalar("mean_e", mean_e);
    rep.scalar("mean_e0sq", e0sq);
    rep.scalar("dt_dsigma", dt_dsigma);
    rep.scalar("dx_dt", dx_dt);
    rep.scalar("group_velocity", group_velocity);
    rep.assert(Assertion::close("dt_dsigma", dt_dsigma, 1.0, SLOPE_TOLERANCE));
    rep.assert(Assertion::close("dx_dt", dx_dt, group_velocity, SLOPE_TOLERANCE));
    rep.series.push(s);
    Ok(rep)
}

/// Weighted spread `Δσ̃` of the σ̃ spectrum under evolution constant `b`.
pub fn sigma_tilde_spread(rec: &ReciprocalField, b: f64) -> Result<f64> {
    let c = rec.grid().c;
    let m = rec.mode_mean(|r, w| sigma_tilde(r, w, b, c))?;
    let v = rec.mode_mean(|r, w| (sigma_tilde(r, w, b, c) - m).powi(2))?;
    Ok(v.sqrt())
}

/// Weighted spread of `ε² − c²p²` over modes.
pub fn rest_energy_sq_spread(rec: &ReciprocalField) -> Result<f64> {
    let g = *rec.grid();
    let e0sq = move |r: f64, w: f64| (g.hbar * w).powi(2) - (g.c * g.hbar * r).powi(2);
    let m = rec.mode_mean(e0sq)?;
    Ok(rec.mode_mean(|r, w| (e0sq(r, w) - m).powi(2))?.sqrt())
}

/// `|⟨Ψ(0), Ψ(σ)⟩| = |Σ |c|² exp(−iσ̃σ)|` under natural `b`.
pub fn survival_curve(rec: &ReciprocalField, b: f64, sigmas: &[f64]) -> Vec<f64> {
    let c = rec.grid().c;
    let mut modes = Vec::new();
    rec.for_each_mode(|_, _, r, w, wt| {
        if wt > 0.0 {
            modes.push((sigma_tilde(r, w, b, c), wt));
        }
    });
    let total: f64 = modes.iter().map(|m| m.1).sum();
    sigmas
        .iter()
        .map(|&s| {
            let z: Complex64 = modes.iter().map(|&(st, wt)| Complex64::from_polar(wt, -st * s)).sum();
            z.norm() / total
        })
        .collect()
}

/// First σ where the samples fall to `level`, linearly interpolated.
fn first_crossing(sigmas: &[f64], values: &[f64], level: f64) -> f64 {
    for k in 1..values.len() {
        if values[k] <= level && values[k - 1] > level {
            let f = (values[k - 1] - level) / (values[k - 1] - values[k]);
            return sigmas[k - 1] + f * (sigmas[k] - sigmas[k - 1]);
        }
    }
    f64::NAN
}

/// Survival amplitude over `sigma_grid` (ascending from 0), compared with the
/// Gaussian law `exp(−Δσ̃²σ²/2)` wherever that law is at least 0.1. The decay
/// scale `Δσ` is read where the amplitude first reaches `e^{−1/2}`, and the
/// product `Δσ·Δ(ε₀²)` is reported against `ħ⟨ε⟩`.
pub fn survival_amplitude(field: &WaveField, sigma_grid: &[f64]) -> Result<ExperimentReport> {
    field.require_normalized()?;
    if sigma_grid.first() != Some(&0.0) || sigma_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("sigma grid must start at 0 and increase strictly".into()));
    }
    let rec = forward_transform(field)?;
    let g = *rec.grid();
    let b = natural_b(&rec)?;
    let spread = sigma_tilde_spread(&rec, b)?;
    let amps = survival_curve(&rec, b, sigma_grid);
    let gauss: Vec<f64> = sigma_grid.iter().map(|s| (-0.5 * (spread * s).powi(2)).exp()).collect();

    let mut worst: f64 = 0.0;
    let mut s = Series::new("survival", &["sigma", "amplitude", "gaussian", "delta_sigma_tilde"]);
    for k in 0..sigma_grid.len() {
        if gauss[k] >= SURVIVAL_FLOOR {
            worst = worst.max((amps[k] - gauss[k]).abs() / gauss[k]);
        }
        s.push(vec![sigma_grid[k], amps[k], gauss[k], spread]);
    }
    let delta_sigma = first_crossing(sigma_grid, &amps, (-0.5f64).exp());
    let mean_e = g.hbar * rec.mode_mean(|_, w| w)?;
    let delta_e0sq = rest_energy_sq_spread(&rec)?;
    let product = delta_sigma * delta_e0sq;
    let bound = g.hbar * mean_e;

    let mut rep = ExperimentReport::new("survival");
    rep.param("grid", g);
    rep.param("sigma_max", sigma_grid[sigma_grid.len() - 1]);
    rep.param("n_samples", sigma_grid.len());
    rep.param("delta_sigma_convention", "first sigma with amplitude <= exp(-1/2)");
    rep.scalar("b", b);
    rep.scalar("delta_sigma_tilde", spread);
    rep.scalar("delta_sigma", delta_sigma);
    rep.scalar("delta_e0sq", delta_e0sq);
    rep.scalar("mean_e", mean_e);
    rep.scalar("third_relation_product", product);
    rep.scalar("third_relation_bound", bound);
    rep.scalar("max_relative_deviation", worst);
    rep.assert(Assertion::close("initial_amplitude", amps[0], 1.0, 1e-12));
    rep.assert(Assertion::at_most("gaussian_decay", worst, 0.0, SURVIVAL_TOLERANCE));
    if delta_sigma.is_finite() {
        rep.assert(Assertion::at_least("third_relation", product, bound, UNCERTAINTY_SLACK * bound));
    }
    rep.series.push(s);
    Ok(rep)
}

/// Evenly spaced σ samples from 0 to `sigma_max`.
pub fn sigma_samples(sigma_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| sigma_max * k as f64 / (n.max(2) - 1) as f64).collect()
}

/// Uncertainty products against their bounds. The third relation uses the
/// survival-based `Δσ` when `⟨ε⟩ > 0` and the amplitude decays to `e^{−1/2}`
/// within `8/Δσ̃`.
pub fn uncertainty_report(field: &WaveField) -> Result<ExperimentReport> {
    field.require_normalized()?;
    let rec = forward_transform(field)?;
    let g = *rec.grid();
    let obs = observables_with(field, &rec)?;
    let half = g.hbar / 2.0;
    let xp = obs.sd_x * obs.sd_p;
    let te = obs.sd_t * obs.sd_e;
    let delta_e0sq = rest_energy_sq_spread(&rec)?;
    // the natural parametrization needs ⟨ε⟩ > 0; otherwise the third relation is not evaluated
    let delta_sigma = match natural_b(&rec) {
        Ok(b) => {
            let spread = sigma_tilde_spread(&rec, b)?;
            if spread > 0.0 {
                let sig = sigma_samples(8.0 / spread, 801);
                first_crossing(&sig, &survival_curve(&rec, b, &sig), (-0.5f64).exp())
            } else {
                f64::NAN
            }
        }
        Err(Error::NonPositiveEnergy(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    let third = delta_sigma * delta_e0sq;
    let third_bound = g.hbar * obs.mean_e;

    let mut rep = ExperimentReport::new("uncertainty");
    rep.param("grid", g);
    for (name, value, bound) in [("xp", xp, half), ("te", te, half), ("third", third, third_bound)] {
        rep.scalar(&format!("{name}_product"), value);
        rep.scalar(&format!("{name}_bound"), bound);
        rep.scalar(&format!("{name}_margin"), value - bound);
    }
    rep.assert(Assertion::at_least("xp_relation", xp, half, UNCERTAINTY_SLACK * half));
    rep.assert(Assertion::at_least("te_relation", te, half, UNCERTAINTY_SLACK * half));
    if third.is_finite() {
        rep.assert(Assertion::at_least("third_relation", third, third_bound, UNCERTAINTY_SLACK * third_bound));
    }
    let mut s = Series::new("moments", &["sd_x", "sd_p", "sd_t", "sd_e", "hbar", "mean_e", "delta_e0sq", "delta_sigma"]);
    s.push(vec![obs.sd_x, obs.sd_p, obs.sd_t, obs.sd_e, g.hbar, obs.mean_e, delta_e0sq, delta_sigma]);
    rep.series.push(s);
    Ok(rep)
}

/// Random packet that satisfies the resolution and clearance preconditions
/// on `grid`, with carriers below a third of the Nyquist frequencies.
pub fn random_packet_spec<R: Rng>(rng: &mut R, grid: &SpacetimeGrid) -> PacketSpec {
    let axis = |rng: &mut R, len: f64, step: f64| {
        let sd = rng.gen_range(2.0 * step..=(len / 12.0).max(2.0 * step));
        let room = len / 2.0 - 4.0 * sd - step;
        let center = if room > 0.0 { rng.gen_range(-room..=room) } else { 0.0 };
        (center, sd)
    };
    let (x0, sd_x) = axis(rng, grid.l_x, grid.dx());
    let (t0, sd_t) = axis(rng, grid.l_t, grid.dt());
    let kmax = PI / grid.dx() / 3.0;
    let wmax = PI / grid.dt() / 3.0;
    PacketSpec {
        x0,
        t0,
        sd_x,
        sd_t,
        p0: grid.hbar * rng.gen_range(-kmax..=kmax),
        e_freq: rng.gen_range(-wmax..=wmax),
    }
}

/// [`uncertainty_report`] for `spec`, extended with `sweep` random packets
/// drawn from `seed`; the sweep asserts that neither product falls below
/// `ħ/2·(1 − 10⁻³)`.
pub fn uncertainty_with_sweep(grid: &SpacetimeGrid, spec: &PacketSpec, sweep: usize, seed: u64) -> Result<ExperimentReport> {
    let mut rep = uncertainty_report(&packet(grid, spec)?)?;
    rep.param("packet", spec);
    rep.param("sweep", sweep);
    rep.param("seed", seed);
    if sweep == 0 {
        return Ok(rep);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = grid.hbar / 2.0;
    let mut s = Series::new("sweep", &["packet", "xp_product", "te_product"]);
    let mut least = f64::INFINITY;
    for k in 0..sweep {
        let f = packet(grid, &random_packet_spec(&mut rng, grid))?;
        let obs = observables_with(&f, &forward_transform(&f)?)?;
        let (xp, te) = (obs.sd_x * obs.sd_p, obs.sd_t * obs.sd_e);
        least = least.min(xp).min(te);
        s.push(vec![k as f64, xp, te]);
    }
    rep.scalar("sweep_min_product", least);
    rep.assert(Assertion::at_least("sweep_min_product", least, half, UNCERTAINTY_SLACK * half));
    rep.series.push(s);
    Ok(rep)
}

/// Builds a packet and reports its moments against the requested ones.
pub fn packet_report(grid: &SpacetimeGrid, spec: &PacketSpec) -> Result<(WaveField, ExperimentReport)> {
    let f = packet(grid, spec)?;
    let rec = forward_transform(&f)?;
    let obs = observables_with(&f, &rec)?;
    let mut rep = ExperimentReport::new("packet");
    rep.param("grid", grid);
    rep.param("packet", spec);
    rep.scalar("norm", f.norm());
    for (k, v) in [
        ("mean_x", obs.mean_x),
        ("mean_t", obs.mean_t),
        ("sd_x", obs.sd_x),
        ("sd_t", obs.sd_t),
        ("mean_p", obs.mean_p),
        ("mean_e", obs.mean_e),
        ("sd_p", obs.sd_p),
        ("sd_e", obs.sd_e),
        ("mean_e0sq", obs.mean_e0sq),
    ] {
        rep.scalar(k, v);
    }
    rep.assert(Assertion::close("norm", f.norm(), 1.0, 1e-12));
    rep.assert(Assertion::close("sd_x", obs.sd_x, spec.sd_x, 1e-3 * spec.sd_x));
    rep.assert(Assertion::close("sd_t", obs.sd_t, spec.sd_t, 1e-3 * spec.sd_t));

    let (mut mx, mut mt) = (vec![0.0; grid.n_x], vec![0.0; grid.n_t]);
    for s in 0..f.n_s() {
        for i in 0..grid.n_x {
            for j in 0..grid.n_t {
                let p = f.at(s, i, j).norm_sqr();
                mx[i] += p * grid.dt();
                mt[j] += p * grid.dx();
            }
        }
    }
    let mut sx = Series::new("marginal_x", &["x", "probability"]);
    for (i, p) in mx.into_iter().enumerate() {
        sx.push(vec![grid.x(i), p]);
    }
    let mut st = Series::new("marginal_t", &["t", "probability"]);
    for (j, p) in mt.into_iter().enumerate() {
        st.push(vec![grid.t(j), p]);
    }
    rep.series.push(sx);
    rep.series.push(st);
    Ok((f, rep))
}

/// Output of [`ordering_demo`].
#[derive(Debug, Clone)]
pub struct OrderingDemo {
    pub log: EventLog,
    pub order: UniversalOrder,
    pub distances: DistanceMatrix,
    pub report: ExperimentReport,
}

/// Random acyclic log, its universal order and clock distances, with the
/// soundness, antisymmetry, cycle-sum and minimum-tick invariants asserted.
pub fn ordering_demo(spec: &RandomLogSpec, seed: u64, clock: &str) -> Result<OrderingDemo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log = random_log(&mut rng, spec);
    let order = universal_order(&log)?;
    let m = relational_distances(&log, &order, clock)?;
    let n = m.len();
    let antisymmetric = (0..n).all(|i| (0..n).all(|j| m.t(i, j) == -m.t(j, i)));
    // with antisymmetry, zero triangles through one event imply every cycle sum is zero
    let triangles = (0..n).all(|i| (0..n).all(|j| m.t(0, i) + m.t(i, j) + m.t(j, 0) == 0));
    let ticks = log.subject_events(clock);
    let min_tick = ticks.windows(2).all(|w| {
        let d = m.between(&w[0].id, &w[1].id);
        if log.same_set(&w[0].id, &w[1].id) { d == Some(0) } else { d == Some(1) }
    });
    let conflicts = presentness_conflicts(&log, &m);

    let mut rep = ExperimentReport::new("ordering-demo");
    rep.param("log", spec);
    rep.param("seed", seed);
    rep.param("clock", clock);
    rep.scalar("events", log.len() as f64);
    rep.scalar("messages", log.messages().len() as f64);
    rep.scalar("classes", order.len() as f64);
    rep.scalar("clock_ticks", m.tau.last().copied().unwrap_or(0) as f64);
    rep.scalar("presentness_conflicts", conflicts.len() as f64);
    rep.assert(Assertion::holds("order_sound", order.is_sound_for(&log)));
    rep.assert(Assertion::holds("antisymmetry", antisymmetric));
    rep.assert(Assertion::holds("cycle_sums", triangles));
    rep.assert(Assertion::holds("minimum_tick", min_tick));
    let mut s = Series::new("clock", &["class", "tau", "size"]);
    let mut k = 0;
    for (c, class) in order.classes.iter().enumerate() {
        s.push(vec![c as f64, m.tau[k] as f64, class.len() as f64]);
        k += class.len();
    }
    rep.series.push(s);
    Ok(OrderingDemo { log, order, distances: m, report: rep })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_packet;

    fn slit_grid(n_t: usize, l_t: f64) -> SpacetimeGrid {
        SpacetimeGrid { n_x: 4, n_t, l_x: 4.0, l_t, c: 1.0, hbar: 1.0 }
    }

    /// Peaks of the closed form `env(ε)·cos²(εΔt/2ħ)`, found by dense sampling.
    fn analytic_peak_spacing(dt: f64, slit_sd: f64, carrier: f64) -> f64 {
        let env_sd = 1.0 / (2.0 * slit_sd);
        let f = |e: f64| (-(e - carrier).powi(2) / (2.0 * env_sd * env_sd)).exp() * (e * dt / 2.0).cos().powi(2);
        let step = 1e-5;
        let lo = carrier - 8.0 * env_sd;
        let n = (16.0 * env_sd / step) as usize;
        let vals: Vec<(f64, f64)> = (0..n).map(|k| (lo + k as f64 * step, f(lo + k as f64 * step))).collect();
        let top = vals.iter().map(|v| v.1).fold(0.0, f64::max);
        let peaks: Vec<f64> = (1..n - 1)
            .filter(|&k| vals[k].1 > vals[k - 1].1 && vals[k].1 >= vals[k + 1].1 && vals[k].1 >= 0.1 * top)
            .map(|k| vals[k].0)
            .collect();
        (peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64
    }

    #[test]
    fn ols_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        assert!((ols_slope(&x, &y) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn parabolic_refinement_is_exact_for_parabolas() {
        let s: Vec<(f64, f64)> = (0..7).map(|k| (k as f64 * 0.5, 4.0 - (k as f64 * 0.5 - 1.3).powi(2))).collect();
        let p = find_peaks(&s, 0.1);
        assert_eq!(p.len(), 1);
        assert!((p[0].0 - 1.3).abs() < 1e-12);
        assert!((p[0].1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn double_slit_spacing() {
        let rep = temporal_double_slit(&slit_grid(1024, 32.0), -2.0, 2.0, 0.1, 10.0).unwrap();
        let spacing = rep.scalars["fringe_spacing"];
        assert!(rep.passed(), "{:?}", rep.assertions);
        assert!((spacing - PI / 2.0).abs() < 0.02 * PI / 2.0);
        // the sampled estimate tracks the closed-form peak positions
        let oracle = analytic_peak_spacing(4.0, 0.1, 10.0);
        assert!((spacing - oracle).abs() < 2e-3 * oracle, "{spacing} vs {oracle}");
    }

    #[test]
    fn double_slit_envelope_width() {
        let rep = temporal_double_slit(&slit_grid(256, 64.0), -2.0, 2.0, 1.0, 0.0).unwrap();
        let env = rep.scalars["envelope_sd"];
        assert!((env - 0.5).abs() < 0.02 * 0.5, "{env}");
    }

    #[test]
    fn wide_lobes_bias_the_spacing() {
        // lobes of sd 1 four units apart leave too few fringes for the estimator
        let rep = temporal_double_slit(&slit_grid(256, 64.0), -2.0, 2.0, 1.0, 0.0).unwrap();
        let a = rep.assertions.iter().find(|a| a.name == "fringe_spacing").unwrap();
        assert!(!a.pass);
    }

    #[test]
    fn single_slit_has_one_peak() {
        let rep = temporal_double_slit(&slit_grid(1024, 32.0), 1.0, 1.0, 0.1, 10.0).unwrap();
        assert_eq!(rep.scalars["peak_count"], 1.0);
        assert!(rep.passed());
    }

    #[test]
    fn spacing_is_stable_under_refinement() {
        let a = temporal_double_slit(&slit_grid(1024, 32.0), -2.0, 2.0, 0.1, 10.0).unwrap().scalars["fringe_spacing"];
        let b = temporal_double_slit(&slit_grid(2048, 32.0), -2.0, 2.0, 0.1, 10.0).unwrap().scalars["fringe_spacing"];
        let c = temporal_double_slit(&slit_grid(2048, 64.0), -2.0, 2.0, 0.1, 10.0).unwrap().scalars["fringe_spacing"];
        assert!((a - b).abs() < 0.005 * a);
        assert!((a - c).abs() < 0.005 * a, "{a} {c}");
    }

    #[test]
    fn double_slit_preconditions() {
        let g = slit_grid(1024, 32.0);
        assert!(matches!(temporal_double_slit(&g, 2.0, -2.0, 0.1, 10.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(temporal_double_slit(&g, -2.0, 15.8, 0.1, 10.0), Err(Error::PacketClipped(_))));
        assert!(matches!(temporal_double_slit(&g, -2.0, 2.0, 0.01, 10.0), Err(Error::UnderResolved(_))));
        assert!(matches!(temporal_double_slit(&g, -6.0, 6.0, 0.1, 10.0), Err(Error::UnderResolved(_))));
        assert!(matches!(temporal_double_slit(&g, -2.0, 2.0, 0.1, 90.0), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn ehrenfest_three_four_five() {
        let rep = ehrenfest_run(&EhrenfestParams::three_four_five(), 20.0, 11).unwrap();
        assert!(rep.passed(), "{:?}", rep.assertions);
        assert!((rep.scalars["dx_dt"] - 0.6).abs() < 1e-3);
        assert!((rep.scalars["dt_dsigma"] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ehrenfest_rest_packet() {
        let p = EhrenfestParams { p0: 0.0, x0: 0.0, ..EhrenfestParams::three_four_five() };
        let rep = ehrenfest_run(&p, 20.0, 11).unwrap();
        assert!(rep.scalars["dx_dt"].abs() < 1e-3);
        assert!(rep.passed());
    }

    #[test]
    fn ehrenfest_runs_off_the_grid() {
        let mut p = EhrenfestParams::three_four_five();
        p.grid = SpacetimeGrid { n_x: 128, n_t: 128, l_x: 128.0, l_t: 128.0, ..p.grid };
        p.x0 = 0.0;
        p.t0 = 0.0;
        assert!(matches!(ehrenfest_run(&p, 200.0, 5), Err(Error::DomainExhausted(_))));
    }

    fn survival_field(sd_t: f64) -> WaveField {
        let g = SpacetimeGrid { n_x: 64, n_t: 512, l_x: 64.0, l_t: 128.0, c: 1.0, hbar: 1.0 };
        gaussian_packet(&g, 0.0, 0.0, 4.0, sd_t, 0.0, 10.0).unwrap()
    }

    #[test]
    fn survival_gaussian_spectrum() {
        let f = survival_field(5.0);
        let rep = survival_amplitude(&f, &sigma_samples(40.0, 401)).unwrap();
        assert!(rep.passed(), "{:?}", rep.assertions);
        let spread = rep.scalars["delta_sigma_tilde"];
        assert!((spread - 0.1).abs() < 1e-3, "{spread}");
        let s = rep.series_named("survival").unwrap();
        let a10 = s.rows.iter().find(|r| r[0] == 10.0).unwrap()[1];
        assert!((a10 - (-0.5f64).exp()).abs() < 0.01 * (-0.5f64).exp());
        assert!((rep.scalars["delta_sigma"] - 10.0).abs() < 0.1);
    }

    #[test]
    fn survival_single_mode_is_stationary() {
        let g = SpacetimeGrid { n_x: 8, n_t: 16, l_x: 8.0, l_t: 16.0, c: 1.0, hbar: 1.0 };
        let (r, w) = (g.r_freq(1), g.t_freq(3));
        let f = normalize(&WaveField::from_fn(g, |x, t| Complex64::from_polar(1.0, r * x - w * t))).unwrap().0;
        let rep = survival_amplitude(&f, &sigma_samples(100.0, 11)).unwrap();
        let s = rep.series_named("survival").unwrap();
        assert!(s.rows.iter().all(|row| (row[1] - 1.0).abs() < 1e-12));
        assert!(rep.passed());
    }

    #[test]
    fn survival_preconditions() {
        let f = survival_field(5.0);
        assert!(matches!(survival_amplitude(&f, &[0.5, 1.0]), Err(Error::InvalidParameter(_))));
        assert!(matches!(survival_amplitude(&f, &[0.0, 1.0, 1.0]), Err(Error::InvalidParameter(_))));
        let half = f.scaled(Complex64::new(0.5, 0.0));
        assert!(matches!(survival_amplitude(&half, &[0.0, 1.0]), Err(Error::NotNormalized(_))));
        assert!(matches!(uncertainty_report(&half), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn uncertainty_saturation() {
        let g = SpacetimeGrid { n_x: 64, n_t: 64, l_x: 32.0, l_t: 32.0, c: 1.0, hbar: 1.0 };
        let f = gaussian_packet(&g, 0.0, 0.0, 1.5, 2.0, 0.4, 2.0).unwrap();
        let rep = uncertainty_report(&f).unwrap();
        assert!(rep.passed(), "{:?}", rep.assertions);
        assert!((rep.scalars["xp_product"] - 0.5).abs() < 1e-3);
        assert!((rep.scalars["te_product"] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn packet_report_matches_request() {
        let g = SpacetimeGrid { n_x: 64, n_t: 64, l_x: 32.0, l_t: 32.0, c: 1.0, hbar: 1.0 };
        let spec = PacketSpec { x0: 1.0, t0: -1.0, sd_x: 2.0, sd_t: 1.5, p0: 0.5, e_freq: 1.0 };
        let (f, rep) = packet_report(&g, &spec).unwrap();
        assert!(rep.passed(), "{:?}", rep.assertions);
        let mx = rep.series_named("marginal_x").unwrap();
        let total: f64 = mx.column("probability").unwrap().iter().sum::<f64>() * g.dx();
        assert!((total - f.norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn ordering_demo_is_sound_and_deterministic() {
        let spec = RandomLogSpec { subjects: 5, events: 60, messages: 40, simultaneity: 0.1, presentness: 0.2 };
        let a = ordering_demo(&spec, 11, "s0").unwrap();
        assert!(a.report.passed(), "{:?}", a.report.assertions);
        let b = ordering_demo(&spec, 11, "s0").unwrap();
        assert_eq!(a.distances.to_csv().unwrap(), b.distances.to_csv().unwrap());
        assert_eq!(a.report.summary_json().unwrap(), b.report.summary_json().unwrap());
        assert!(matches!(ordering_demo(&spec, 11, "nobody"), Err(Error::NoClock(_))));
    }
}
