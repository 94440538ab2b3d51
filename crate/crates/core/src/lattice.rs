//! Discretized (x, t) rectangle, its frequency lattice, and the unitary
//! spectral transforms between position space and reciprocal space.
//!
//! Position-space modes are `exp(i(r·x − w·t))`, where `r` is the spatial
//! frequency and `w` the temporal frequency. With this kernel a field that
//! oscillates as `exp(−i w t)` with `w > 0` carries positive energy `ħw`.
//!
//! Frequency layout follows the usual DFT ordering on both axes: index `a`
//! maps to the integer `k = a` for `a < n/2` and `k = a − n` otherwise, and
//! the frequency is `2πk/L`. The Nyquist index `n/2` is therefore the most
//! negative frequency.
//!
//! Reciprocal coefficients are scaled so that `Σ |c|² = Σ |Ψ|² dx dt`, i.e.
//! each coefficient squared is the probability carried by its mode. Phases
//! are referenced to the first grid cell rather than the coordinate origin.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ReciprocalField, WaveField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    pub n_x: usize,
    pub n_t: usize,
    pub l_x: f64,
    pub l_t: f64,
    pub c: f64,
    pub hbar: f64,
}

/// Spatial and temporal frequency tables in DFT index order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
}

fn check_axis(name: &str, n: usize, len: f64) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!(
            "{name}: {n} points is not a power of two >= 4"
        )));
    }
    if !(len.is_finite() && len > 0.0) {
        return Err(Error::InvalidGrid(format!("{name}: extent {len} must be positive")));
    }
    Ok(())
}

/// Builds a validated grid with centered coordinates
/// `x ∈ [−L_x/2, L_x/2)` and `t ∈ [−L_t/2, L_t/2)`.
pub fn make_grid(n_x: usize, n_t: usize, l_x: f64, l_t: f64, c: f64, hbar: f64) -> Result<SpacetimeGrid> {
    SpacetimeGrid::new(n_x, n_t, l_x, l_t, c, hbar)
}

impl SpacetimeGrid {
    pub fn new(n_x: usize, n_t: usize, l_x: f64, l_t: f64, c: f64, hbar: f64) -> Result<Self> {
        check_axis("n_x", n_x, l_x)?;
        check_axis("n_t", n_t, l_t)?;
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidGrid(format!("c = {c} must be positive")));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidGrid(format!("hbar = {hbar} must be positive")));
        }
        Ok(SpacetimeGrid { n_x, n_t, l_x, l_t, c, hbar })
    }

    /// Grid in natural units, `c = ħ = 1`.
    pub fn natural(n_x: usize, n_t: usize, l_x: f64, l_t: f64) -> Result<Self> {
        Self::new(n_x, n_t, l_x, l_t, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.n_x, self.n_t, self.l_x, self.l_t, self.c, self.hbar).map(|_| ())
    }

    pub fn dx(&self) -> f64 {
        self.l_x / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        self.l_t / self.n_t as f64
    }

    pub fn cell_measure(&self) -> f64 {
        self.dx() * self.dt()
    }

    pub fn cells(&self) -> usize {
        self.n_x * self.n_t
    }

    pub fn x_min(&self) -> f64 {
        -0.5 * self.l_x
    }

    pub fn t_min(&self) -> f64 {
        -0.5 * self.l_t
    }

    pub fn x_max(&self) -> f64 {
        0.5 * self.l_x
    }

    pub fn t_max(&self) -> f64 {
        0.5 * self.l_t
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min() + i as f64 * self.dx()
    }

    pub fn t(&self, j: usize) -> f64 {
        self.t_min() + j as f64 * self.dt()
    }

    /// Spacing of the spatial frequency lattice, `2π/L_x`.
    pub fn dr(&self) -> f64 {
        2.0 * PI / self.l_x
    }

    /// Spacing of the temporal frequency lattice, `2π/L_t`.
    pub fn dw(&self) -> f64 {
        2.0 * PI / self.l_t
    }

    /// Spatial frequency of DFT index `a`.
    pub fn r_freq(&self, a: usize) -> f64 {
        signed_index(a, self.n_x) as f64 * self.dr()
    }

    /// Temporal frequency of DFT index `b`.
    pub fn t_freq(&self, b: usize) -> f64 {
        signed_index(b, self.n_t) as f64 * self.dw()
    }

    /// DFT index holding the integer frequency `k` (multiples of the lattice
    /// spacing), if representable.
    pub fn r_index(&self, k: i64) -> Option<usize> {
        unsigned_index(k, self.n_x)
    }

    pub fn t_index(&self, k: i64) -> Option<usize> {
        unsigned_index(k, self.n_t)
    }

    pub fn frequencies(&self) -> FrequencyGrid {
        FrequencyGrid {
            r: (0..self.n_x).map(|a| self.r_freq(a)).collect(),
            t: (0..self.n_t).map(|b| self.t_freq(b)).collect(),
        }
    }
}

fn signed_index(a: usize, n: usize) -> i64 {
    if a < n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

fn unsigned_index(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k >= -half && k < half {
        Some(if k >= 0 { k as usize } else { (k + n as i64) as usize })
    } else {
        None
    }
}

struct Plans {
    x: Arc<dyn Fft<f64>>,
    t: Arc<dyn Fft<f64>>,
}

impl Plans {
    /// The x axis uses `exp(−i r x)` in the forward direction and the t axis
    /// `exp(+i w t)`, matching the mode kernel `exp(i(r x − w t))`.
    fn new(grid: &SpacetimeGrid, forward: bool) -> Self {
        let mut planner = FftPlanner::new();
        if forward {
            Plans { x: planner.plan_fft_forward(grid.n_x), t: planner.plan_fft_inverse(grid.n_t) }
        } else {
            Plans { x: planner.plan_fft_inverse(grid.n_x), t: planner.plan_fft_forward(grid.n_t) }
        }
    }
}

/// Unscaled 2D transform of each spinor component in place. Layout is
/// `(s, i_x, i_t)` row-major.
fn transform_in_place(data: &mut [Complex64], grid: &SpacetimeGrid, n_s: usize, forward: bool) {
    let plans = Plans::new(grid, forward);
    let (nx, nt) = (grid.n_x, grid.n_t);
    let mut scratch = vec![Complex64::default(); plans.t.get_inplace_scratch_len().max(plans.x.get_inplace_scratch_len())];
    let mut column = vec![Complex64::default(); nx];
    for s in 0..n_s {
        let block = &mut data[s * nx * nt..(s + 1) * nx * nt];
        for row in block.chunks_exact_mut(nt) {
            plans.t.process_with_scratch(row, &mut scratch);
        }
        for j in 0..nt {
            for (i, v) in column.iter_mut().enumerate() {
                *v = block[i * nt + j];
            }
            plans.x.process_with_scratch(&mut column, &mut scratch);
            for (i, v) in column.iter().enumerate() {
                block[i * nt + j] = *v;
            }
        }
    }
}

/// Position space to reciprocal space.
pub fn forward_transform(field: &WaveField) -> Result<ReciprocalField> {
    field.check_finite()?;
    let grid = *field.grid();
    let mut data = field.amplitudes().to_vec();
    transform_in_place(&mut data, &grid, field.n_s(), true);
    let scale = (grid.cell_measure() / grid.cells() as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= scale);
    ReciprocalField::from_coefficients(grid, field.n_s(), data)
}

/// Reciprocal space back to position space; exact inverse of
/// [`forward_transform`].
pub fn inverse_transform(recip: &ReciprocalField) -> Result<WaveField> {
    recip.check_finite()?;
    let grid = *recip.grid();
    let mut data = recip.coefficients().to_vec();
    transform_in_place(&mut data, &grid, recip.n_s(), false);
    let scale = 1.0 / (grid.cell_measure() * grid.cells() as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= scale);
    WaveField::from_amplitudes(grid, recip.n_s(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid8() -> SpacetimeGrid {
        make_grid(8, 8, 8.0, 8.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn spacing_and_frequency() {
        let g = grid8();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.dt(), 1.0);
        let smallest = g.frequencies().r.into_iter().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
        assert!((smallest - 2.0 * PI / 8.0).abs() < 1e-15);
        assert!((smallest - 0.7854).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(make_grid(0, 8, 8.0, 8.0, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(12, 8, 8.0, 8.0, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(2, 8, 8.0, 8.0, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(8, 8, -1.0, 8.0, 1.0, 1.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(make_grid(8, 8, 8.0, 8.0, 0.0, 1.0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn centered_coordinates() {
        let g = grid8();
        assert_eq!(g.x(0), -4.0);
        assert_eq!(g.t(7), 3.0);
    }

    #[test]
    fn frequency_layout_is_symmetric_up_to_nyquist() {
        let g = make_grid(16, 8, 3.0, 5.0, 1.0, 1.0).unwrap();
        let f = g.frequencies();
        for k in 1..8i64 {
            let pos = f.r[g.r_index(k).unwrap()];
            let neg = f.r[g.r_index(-k).unwrap()];
            assert_eq!(pos, -neg);
        }
        assert!(f.r[8] < 0.0);
        assert_eq!(g.r_index(8), None);
        assert_eq!(g.t_index(-4), Some(4));
    }

    #[test]
    fn constant_field_lands_in_zero_mode() {
        let g = grid8();
        let f = WaveField::from_fn(g, |_, _| Complex64::new(1.0, 0.0));
        let rec = forward_transform(&f).unwrap();
        let total = rec.norm_sq();
        let zero = rec.at(0, 0, 0).norm_sqr();
        assert!((zero - total).abs() < 1e-12 * total);
    }

    #[test]
    fn pure_mode_has_single_coefficient() {
        let g = grid8();
        let (r0, w0) = (g.r_freq(2), g.t_freq(3));
        let f = WaveField::from_fn(g, |x, t| Complex64::from_polar(1.0, r0 * x - w0 * t));
        let rec = forward_transform(&f).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let w = rec.at(0, a, b).norm();
                if (a, b) == (2, 3) {
                    assert!(w > 1.0);
                } else {
                    assert!(w < 1e-12, "leak at ({a},{b}): {w}");
                }
            }
        }
    }

    #[test]
    fn random_round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = make_grid(32, 16, 5.0, 3.0, 1.0, 1.0).unwrap();
        for n_s in [1, 2] {
            let amps: Vec<Complex64> = (0..n_s * g.cells())
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = WaveField::from_amplitudes(g, n_s, amps).unwrap();
            let rec = forward_transform(&f).unwrap();
            let n0 = f.norm_sq();
            assert!((n0 - rec.norm_sq()).abs() <= 1e-12 * n0);
            let back = inverse_transform(&rec).unwrap();
            assert!(back.distance(&f).unwrap() <= 1e-12 * n0.sqrt());
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        let g = grid8();
        let mut amps = vec![Complex64::new(0.0, 0.0); g.cells()];
        amps[5] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(WaveField::from_amplitudes(g, 1, amps), Err(Error::NonFiniteField(5))));
    }
}
