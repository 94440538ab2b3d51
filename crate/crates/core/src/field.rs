//! Wave fields over a [`SpacetimeGrid`], their reciprocal-space
//! counterparts, packet construction, moments and bin coarse-graining.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{forward_transform, SpacetimeGrid};

/// Tolerance on `‖Ψ‖²` for operations that require a normalized field.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Packets must keep this many standard deviations between their center and
/// every edge of the domain.
pub const CLEARANCE_SDS: f64 = 4.0;

/// Complex amplitudes `Ψ(s, x, t)` stored row-major as `(s, i_x, i_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: SpacetimeGrid,
    n_s: usize,
    amps: Vec<Complex64>,
}

/// Mode coefficients `c(s, r, w)` stored row-major as `(s, a, b)` where `a`
/// and `b` are DFT indices on the frequency lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalField {
    grid: SpacetimeGrid,
    n_s: usize,
    coeffs: Vec<Complex64>,
}

fn check_components(n_s: usize) -> Result<()> {
    match n_s {
        1 | 2 | 4 => Ok(()),
        _ => Err(Error::UnsupportedDimension(n_s)),
    }
}

fn first_non_finite(v: &[Complex64]) -> Option<usize> {
    v.iter().position(|z| !(z.re.is_finite() && z.im.is_finite()))
}

impl WaveField {
    pub fn from_amplitudes(grid: SpacetimeGrid, n_s: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_components(n_s)?;
        if amps.len() != n_s * grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} amplitudes, got {}",
                n_s * grid.cells(),
                amps.len()
            )));
        }
        if let Some(i) = first_non_finite(&amps) {
            return Err(Error::NonFiniteField(i));
        }
        Ok(WaveField { grid, n_s, amps })
    }

    pub fn zeros(grid: SpacetimeGrid, n_s: usize) -> Result<Self> {
        Self::from_amplitudes(grid, n_s, vec![Complex64::default(); n_s * grid.cells()])
    }

    /// Single-component field sampled from `f(x, t)`. Values are not checked
    /// for finiteness here; transforms reject non-finite fields.
    pub fn from_fn(grid: SpacetimeGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut amps = Vec::with_capacity(grid.cells());
        for i in 0..grid.n_x {
            let x = grid.x(i);
            for j in 0..grid.n_t {
                amps.push(f(x, grid.t(j)));
            }
        }
        WaveField { grid, n_s: 1, amps }
    }

    /// Multi-component field `Ψ_s(x, t) = spinor[s] · Ψ(x, t)` from a scalar
    /// field.
    pub fn with_spinor(&self, spinor: &[Complex64]) -> Result<Self> {
        if self.n_s != 1 {
            return Err(Error::ShapeMismatch("with_spinor needs a scalar field".into()));
        }
        check_components(spinor.len())?;
        let amps = spinor
            .iter()
            .flat_map(|&u| self.amps.iter().map(move |&a| u * a))
            .collect();
        Self::from_amplitudes(self.grid, spinor.len(), amps)
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn index(&self, s: usize, i: usize, j: usize) -> usize {
        (s * self.grid.n_x + i) * self.grid.n_t + j
    }

    pub fn at(&self, s: usize, i: usize, j: usize) -> Complex64 {
        self.amps[self.index(s, i, j)]
    }

    pub fn check_finite(&self) -> Result<()> {
        match first_non_finite(&self.amps) {
            Some(i) => Err(Error::NonFiniteField(i)),
            None => Ok(()),
        }
    }

    /// `Σ_s Σ_cells |Ψ|² dx dt`.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= NORM_TOLERANCE
    }

    pub fn require_normalized(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() <= NORM_TOLERANCE {
            Ok(())
        } else {
            Err(Error::NotNormalized(n))
        }
    }

    fn check_same_shape(&self, other: &WaveField) -> Result<()> {
        if self.grid != other.grid || self.n_s != other.n_s {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `⟨self, other⟩ = Σ conj(self)·other dx dt`.
    pub fn inner(&self, other: &WaveField) -> Result<Complex64> {
        self.check_same_shape(other)?;
        let sum: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(sum * self.grid.cell_measure())
    }

    /// L² distance `‖self − other‖`.
    pub fn distance(&self, other: &WaveField) -> Result<f64> {
        self.check_same_shape(other)?;
        let d: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((d * self.grid.cell_measure()).sqrt())
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        WaveField { grid: self.grid, n_s: self.n_s, amps: self.amps.iter().map(|a| a * k).collect() }
    }

    pub fn add(&self, other: &WaveField) -> Result<Self> {
        self.check_same_shape(other)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(WaveField { grid: self.grid, n_s: self.n_s, amps })
    }

    /// Applies `f(x, t, Ψ)` to every amplitude of every component.
    pub fn map_points(&self, f: impl Fn(f64, f64, Complex64) -> Complex64) -> Self {
        let g = self.grid;
        let mut amps = self.amps.clone();
        for s in 0..self.n_s {
            for i in 0..g.n_x {
                let x = g.x(i);
                for j in 0..g.n_t {
                    let k = self.index(s, i, j);
                    amps[k] = f(x, g.t(j), amps[k]);
                }
            }
        }
        WaveField { grid: g, n_s: self.n_s, amps }
    }

    /// Probability marginals over x and over t (not normalized).
    fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let mut px = vec![0.0; g.n_x];
        let mut pt = vec![0.0; g.n_t];
        for s in 0..self.n_s {
            for (i, px_i) in px.iter_mut().enumerate() {
                for (j, pt_j) in pt.iter_mut().enumerate() {
                    let w = self.amps[self.index(s, i, j)].norm_sqr();
                    *px_i += w;
                    *pt_j += w;
                }
            }
        }
        (px, pt)
    }

    /// Position-space moments `(mean_x, sd_x, mean_t, sd_t)` weighted by
    /// `|Ψ|²`, independent of the overall normalization.
    pub fn position_moments(&self) -> Result<(f64, f64, f64, f64)> {
        let (px, pt) = self.marginals();
        let g = self.grid;
        let (mx, sx) = weighted_moments(px.iter().enumerate().map(|(i, &w)| (g.x(i), w)))?;
        let (mt, st) = weighted_moments(pt.iter().enumerate().map(|(j, &w)| (g.t(j), w)))?;
        Ok((mx, sx, mt, st))
    }

    /// Checks that the field's center keeps [`CLEARANCE_SDS`] measured
    /// standard deviations from the domain edges on each axis.
    pub fn clearance(&self) -> Result<Clearance> {
        let (mx, sx, mt, st) = self.position_moments()?;
        let g = &self.grid;
        let inside = |m: f64, s: f64, lo: f64, hi: f64| m - CLEARANCE_SDS * s >= lo && m + CLEARANCE_SDS * s <= hi;
        Ok(Clearance {
            x: inside(mx, sx, g.x_min(), g.x_max()),
            t: inside(mt, st, g.t_min(), g.t_max()),
            mean_x: mx,
            sd_x: sx,
            mean_t: mt,
            sd_t: st,
        })
    }

    pub fn require_interior(&self) -> Result<()> {
        let c = self.clearance()?;
        if c.x && c.t {
            Ok(())
        } else {
            Err(Error::PacketClipped(format!(
                "center (x={:.4}, t={:.4}) with sd ({:.4}, {:.4}) is within {CLEARANCE_SDS} sd of the boundary",
                c.mean_x, c.mean_t, c.sd_x, c.sd_t
            )))
        }
    }
}

/// Result of a boundary clearance test along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clearance {
    pub x: bool,
    pub t: bool,
    pub mean_x: f64,
    pub sd_x: f64,
    pub mean_t: f64,
    pub sd_t: f64,
}

pub(crate) fn weighted_moments(it: impl Iterator<Item = (f64, f64)>) -> Result<(f64, f64)> {
    let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
    let samples: Vec<(f64, f64)> = it.collect();
    for &(v, w) in &samples {
        w0 += w;
        w1 += w * v;
    }
    if w0 <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mean = w1 / w0;
    for &(v, w) in &samples {
        w2 += w * (v - mean) * (v - mean);
    }
    Ok((mean, (w2 / w0).max(0.0).sqrt()))
}

impl ReciprocalField {
    pub fn from_coefficients(grid: SpacetimeGrid, n_s: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_components(n_s)?;
        if coeffs.len() != n_s * grid.cells() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                n_s * grid.cells(),
                coeffs.len()
            )));
        }
        if let Some(i) = first_non_finite(&coeffs) {
            return Err(Error::NonFiniteField(i));
        }
        Ok(ReciprocalField { grid, n_s, coeffs })
    }

    pub fn zeros(grid: SpacetimeGrid, n_s: usize) -> Result<Self> {
        Self::from_coefficients(grid, n_s, vec![Complex64::default(); n_s * grid.cells()])
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn index(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.grid.n_x + a) * self.grid.n_t + b
    }

    pub fn at(&self, s: usize, a: usize, b: usize) -> Complex64 {
        self.coeffs[self.index(s, a, b)]
    }

    pub fn set(&mut self, s: usize, a: usize, b: usize, v: Complex64) {
        let k = self.index(s, a, b);
        self.coeffs[k] = v;
    }

    pub fn check_finite(&self) -> Result<()> {
        match first_non_finite(&self.coeffs) {
            Some(i) => Err(Error::NonFiniteField(i)),
            None => Ok(()),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Probability weight of mode `(a, b)`, summed over spinor components.
    pub fn mode_weight(&self, a: usize, b: usize) -> f64 {
        (0..self.n_s).map(|s| self.at(s, a, b).norm_sqr()).sum()
    }

    /// Calls `f(a, b, r, w, weight)` for every mode of the lattice.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, usize, f64, f64, f64)) {
        let g = &self.grid;
        let stride = g.cells();
        for a in 0..g.n_x {
            let r = g.r_freq(a);
            for b in 0..g.n_t {
                let base = a * g.n_t + b;
                let w: f64 = (0..self.n_s).map(|s| self.coeffs[s * stride + base].norm_sqr()).sum();
                f(a, b, r, g.t_freq(b), w);
            }
        }
    }

    /// Multiplies every coefficient of mode `(a, b)` by `f(r, w)`.
    pub fn apply_mode_factor(&mut self, f: impl Fn(f64, f64) -> Complex64) {
        let g = self.grid;
        let stride = g.cells();
        for a in 0..g.n_x {
            let r = g.r_freq(a);
            for b in 0..g.n_t {
                let k = f(r, g.t_freq(b));
                let base = a * g.n_t + b;
                for s in 0..self.n_s {
                    self.coeffs[s * stride + base] *= k;
                }
            }
        }
    }

    /// Rescales to unit total weight, returning the previous weight.
    pub fn renormalize(&mut self) -> Result<f64> {
        let n = self.norm_sq();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let k = 1.0 / n.sqrt();
        self.coeffs.iter_mut().for_each(|c| *c *= k);
        Ok(n)
    }

    /// Weighted mean of `f(r, w)` over modes, normalized by the total weight.
    pub fn mode_mean(&self, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
        let (mut w0, mut acc) = (0.0, 0.0);
        self.for_each_mode(|_, _, r, w, wt| {
            w0 += wt;
            acc += wt * f(r, w);
        });
        if w0 <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(acc / w0)
    }
}

/// Moments of a normalized field. Momentum and energy are `ħr` and `ħw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mean_x: f64,
    pub mean_t: f64,
    pub sd_x: f64,
    pub sd_t: f64,
    pub mean_p: f64,
    pub mean_e: f64,
    pub sd_p: f64,
    pub sd_e: f64,
    /// Mean of `ε² − c²p²` over modes.
    pub mean_e0sq: f64,
}

/// Carrier and envelope of a Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub x0: f64,
    pub t0: f64,
    pub sd_x: f64,
    pub sd_t: f64,
    /// Carrier momentum; the spatial frequency is `p0/ħ`.
    pub p0: f64,
    /// Carrier temporal frequency; the energy is `ħ·e_freq`.
    pub e_freq: f64,
}

/// Normalized Gaussian packet
/// `exp(−(x−x0)²/(4sd_x²) − (t−t0)²/(4sd_t²)) · exp(i(p0·x/ħ − e_freq·t))`,
/// where `sd_x`, `sd_t` are the standard deviations of `|Ψ|²`.
pub fn gaussian_packet(grid: &SpacetimeGrid, x0: f64, t0: f64, sd_x0: f64, sd_t0: f64, p0: f64, e0_freq: f64) -> Result<WaveField> {
    packet(grid, &PacketSpec { x0, t0, sd_x: sd_x0, sd_t: sd_t0, p0, e_freq: e0_freq })
}

pub fn packet(grid: &SpacetimeGrid, spec: &PacketSpec) -> Result<WaveField> {
    grid.validate()?;
    let finite = [spec.x0, spec.t0, spec.sd_x, spec.sd_t, spec.p0, spec.e_freq];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("packet parameters must be finite".into()));
    }
    check_resolved("sd_x", spec.sd_x, grid.dx())?;
    check_resolved("sd_t", spec.sd_t, grid.dt())?;
    check_inside("x", spec.x0, spec.sd_x, grid.x_min(), grid.x_max())?;
    check_inside("t", spec.t0, spec.sd_t, grid.t_min(), grid.t_max())?;
    let k = spec.p0 / grid.hbar;
    let f = WaveField::from_fn(*grid, |x, t| {
        let dx = x - spec.x0;
        let dt = t - spec.t0;
        let env = (-dx * dx / (4.0 * spec.sd_x * spec.sd_x) - dt * dt / (4.0 * spec.sd_t * spec.sd_t)).exp();
        Complex64::from_polar(env, k * x - spec.e_freq * t)
    });
    Ok(normalize(&f)?.0)
}

pub(crate) fn check_resolved(name: &str, sd: f64, spacing: f64) -> Result<()> {
    if sd < 2.0 * spacing {
        return Err(Error::UnderResolved(format!("{name} = {sd} is below two grid spacings ({spacing})")));
    }
    Ok(())
}

pub(crate) fn check_inside(axis: &str, center: f64, sd: f64, lo: f64, hi: f64) -> Result<()> {
    if center - CLEARANCE_SDS * sd < lo || center + CLEARANCE_SDS * sd > hi {
        return Err(Error::PacketClipped(format!(
            "{axis}: center {center} with sd {sd} needs {CLEARANCE_SDS} sd clearance inside [{lo}, {hi})"
        )));
    }
    Ok(())
}

/// Rescales to unit norm and returns the previous norm.
pub fn normalize(field: &WaveField) -> Result<(WaveField, f64)> {
    let n = field.norm();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    if !n.is_finite() {
        field.check_finite()?;
    }
    Ok((field.scaled(Complex64::new(1.0 / n, 0.0)), n))
}

/// Position moments from `|Ψ|²`, momentum and energy moments from the mode
/// weights `|c|²`.
pub fn observables(field: &WaveField) -> Result<Observables> {
    field.require_normalized()?;
    let rec = forward_transform(field)?;
    observables_with(field, &rec)
}

pub(crate) fn observables_with(field: &WaveField, rec: &ReciprocalField) -> Result<Observables> {
    let (mean_x, sd_x, mean_t, sd_t) = field.position_moments()?;
    let g = rec.grid();
    let (hbar, c) = (g.hbar, g.c);
    let mut samples_p = Vec::with_capacity(g.cells());
    let mut samples_e = Vec::with_capacity(g.cells());
    let (mut w0, mut e0sq) = (0.0, 0.0);
    rec.for_each_mode(|_, _, r, w, wt| {
        let (p, e) = (hbar * r, hbar * w);
        samples_p.push((p, wt));
        samples_e.push((e, wt));
        w0 += wt;
        e0sq += wt * (e * e - c * c * p * p);
    });
    let (mean_p, sd_p) = weighted_moments(samples_p.into_iter())?;
    let (mean_e, sd_e) = weighted_moments(samples_e.into_iter())?;
    Ok(Observables { mean_x, mean_t, sd_x, sd_t, mean_p, mean_e, sd_p, sd_e, mean_e0sq: e0sq / w0 })
}

/// Bin amplitudes `a_j = Σ_bin Ψ dx dt`, one table per spinor component.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedAmplitudes {
    pub bin_x: usize,
    pub bin_t: usize,
    pub bins_x: usize,
    pub bins_t: usize,
    pub n_s: usize,
    /// Row-major `(s, bin_i, bin_j)`.
    pub amplitudes: Vec<Complex64>,
    /// `Σ |a_j|²` over all bins and components.
    pub total_probability: f64,
}

impl BinnedAmplitudes {
    pub fn at(&self, s: usize, bi: usize, bj: usize) -> Complex64 {
        self.amplitudes[(s * self.bins_x + bi) * self.bins_t + bj]
    }
}

pub fn coarse_grain(field: &WaveField, bin_x: usize, bin_t: usize) -> Result<BinnedAmplitudes> {
    let g = field.grid();
    if bin_x == 0 || bin_t == 0 || g.n_x % bin_x != 0 || g.n_t % bin_t != 0 {
        return Err(Error::BadBinning(format!(
            "bins {bin_x}x{bin_t} do not divide grid {}x{}",
            g.n_x, g.n_t
        )));
    }
    let (bins_x, bins_t) = (g.n_x / bin_x, g.n_t / bin_t);
    let n_s = field.n_s();
    let mut amplitudes = vec![Complex64::default(); n_s * bins_x * bins_t];
    let measure = g.cell_measure();
    for s in 0..n_s {
        for i in 0..g.n_x {
            for j in 0..g.n_t {
                let k = (s * bins_x + i / bin_x) * bins_t + j / bin_t;
                amplitudes[k] += field.at(s, i, j) * measure;
            }
        }
    }
    let total_probability = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    Ok(BinnedAmplitudes { bin_x, bin_t, bins_x, bins_t, n_s, amplitudes, total_probability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_grid;

    fn grid() -> SpacetimeGrid {
        make_grid(128, 128, 32.0, 32.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn centered_packet_moments() {
        let f = gaussian_packet(&grid(), 0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let o = observables(&f).unwrap();
        assert!(o.mean_x.abs() < 0.25 && o.mean_t.abs() < 0.25);
        assert!((o.sd_x - 1.0).abs() < 1e-3, "sd_x {}", o.sd_x);
        assert!((o.sd_x * o.sd_p - 0.5).abs() < 1e-3);
        assert!((o.sd_t * o.sd_e - 0.5).abs() < 1e-3);
    }

    #[test]
    fn carrier_shifts_momentum() {
        let f = gaussian_packet(&grid(), 2.0, -1.0, 1.5, 1.5, 0.75, 1.25).unwrap();
        let o = observables(&f).unwrap();
        assert!((o.mean_p - 0.75).abs() < 1e-3);
        assert!((o.mean_e - 1.25).abs() < 1e-3);
        assert!((o.mean_x - 2.0).abs() < grid().dx());
        assert!((o.mean_t + 1.0).abs() < grid().dt());
    }

    #[test]
    fn pure_mode_e0sq_is_one() {
        // spacing 0.25: r = 3·0.25, w = 5·0.25
        let g = make_grid(32, 32, 8.0 * std::f64::consts::PI, 8.0 * std::f64::consts::PI, 1.0, 1.0).unwrap();
        let (r0, w0) = (g.r_freq(3), g.t_freq(5));
        assert!((r0 - 0.75).abs() < 1e-14 && (w0 - 1.25).abs() < 1e-14);
        let f = normalize(&WaveField::from_fn(g, |x, t| Complex64::from_polar(1.0, r0 * x - w0 * t))).unwrap().0;
        let o = observables(&f).unwrap();
        assert!((o.mean_e0sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn packet_preconditions() {
        let g = grid();
        assert!(matches!(gaussian_packet(&g, 14.0, 0.0, 1.0, 1.0, 0.0, 0.0), Err(Error::PacketClipped(_))));
        assert!(matches!(gaussian_packet(&g, 0.0, 0.0, 0.3, 1.0, 0.0, 0.0), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn normalize_cases() {
        let g = grid();
        let f = gaussian_packet(&g, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let (n, prev) = normalize(&f.scaled(Complex64::new(2.0, 0.0))).unwrap();
        assert!((prev - 2.0).abs() < 1e-12);
        assert!((n.norm() - 1.0).abs() < 1e-14);
        let (same, prev) = normalize(&f).unwrap();
        assert!((prev - 1.0).abs() < 1e-14);
        assert!(same.distance(&f).unwrap() < 1e-15);
        assert!(matches!(normalize(&WaveField::zeros(g, 1).unwrap()), Err(Error::ZeroNorm)));
    }

    #[test]
    fn observables_require_normalization() {
        let f = gaussian_packet(&grid(), 0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let doubled = f.scaled(Complex64::new(2.0, 0.0));
        assert!(matches!(observables(&doubled), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn coarse_grain_whole_and_single() {
        let g = make_grid(16, 8, 4.0, 2.0, 1.0, 1.0).unwrap();
        let f = WaveField::from_fn(g, |x, t| Complex64::new(x + 0.5, t * t));
        let whole = coarse_grain(&f, 16, 8).unwrap();
        let direct: Complex64 = f.amplitudes().iter().sum::<Complex64>() * g.cell_measure();
        assert!((whole.at(0, 0, 0) - direct).norm() < 1e-12);
        let single = coarse_grain(&f, 1, 1).unwrap();
        for i in 0..16 {
            for j in 0..8 {
                assert!((single.at(0, i, j) - f.at(0, i, j) * g.cell_measure()).norm() < 1e-15);
            }
        }
        assert!(matches!(coarse_grain(&f, 3, 1), Err(Error::BadBinning(_))));
    }

    #[test]
    fn coarse_grain_two_lobes() {
        let g = make_grid(64, 64, 32.0, 32.0, 1.0, 1.0).unwrap();
        let left = gaussian_packet(&g, -8.0, -8.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let right = gaussian_packet(&g, 8.0, 8.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let f = normalize(&left.add(&right).unwrap()).unwrap().0;
        let bins = coarse_grain(&f, 32, 32).unwrap();
        // oracle: direct summation over the cells of each quadrant
        let m = g.cell_measure();
        for (bi, bj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let mut direct = Complex64::default();
            for i in bi * 32..(bi + 1) * 32 {
                for j in bj * 32..(bj + 1) * 32 {
                    direct += f.at(0, i, j) * m;
                }
            }
            assert!((bins.at(0, bi, bj) - direct).norm() < 1e-12);
        }
        let lobe = bins.at(0, 0, 0).norm();
        assert!(lobe > 1.0);
        assert!((bins.at(0, 1, 1).norm() - lobe).abs() < 1e-6 * lobe);
        assert!(bins.at(0, 0, 1).norm() < 1e-6 * lobe);
        assert!(bins.at(0, 1, 0).norm() < 1e-6 * lobe);
    }

    #[test]
    fn spinor_norm_sums_components() {
        let f = gaussian_packet(&grid(), 0.0, 0.0, 1.0, 1.0, 0.0, 0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let two = f.with_spinor(&[Complex64::new(h, 0.0), Complex64::new(0.0, h)]).unwrap();
        assert_eq!(two.n_s(), 2);
        assert!((two.norm_sq() - 1.0).abs() < 1e-12);
    }
}
