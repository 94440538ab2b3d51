//! Clifford algebra, plane-wave spinors and the rest-energy constraints.
//!
//! The rest-energy operator acts on a plane wave with energy `ε` and
//! momentum `p` as `c·slash(p₄) = γ⁰ε − cγ·p`, the covariant contraction
//! with signature `(+, −, −, −)`. Its square is `(ε² − c²p²)·I`, so on the
//! mass shell it squares to `ε₀²·I`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ReciprocalField, WaveField};
use crate::lattice::{forward_transform, inverse_transform};
use crate::propagator::sigma_tilde;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Gamma matrices satisfying `{γ^μ, γ^ν} = 2η^{μν}I` with
/// `η = diag(+1, −1, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    pub n_s: usize,
    pub gamma0: CMatrix,
    pub spatial: Vec<CMatrix>,
}

fn pauli() -> [CMatrix; 3] {
    [
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

fn block(tl: &CMatrix, tr: &CMatrix, bl: &CMatrix, br: &CMatrix) -> CMatrix {
    let n = tl.nrows();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(tl);
    m.view_mut((0, n), (n, n)).copy_from(tr);
    m.view_mut((n, 0), (n, n)).copy_from(bl);
    m.view_mut((n, n), (n, n)).copy_from(br);
    m
}

/// `n_s = 2`: the 1+1D pair `γ⁰ = diag(1, −1)`, `γ¹ = [[0, 1], [−1, 0]]`.
/// `n_s = 4`: the standard Dirac representation.
pub fn gamma_set(n_s: usize) -> Result<GammaSet> {
    match n_s {
        2 => Ok(GammaSet {
            n_s,
            gamma0: CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
            spatial: vec![CMatrix::from_row_slice(2, 2, &[ZERO, ONE, -ONE, ZERO])],
        }),
        4 => {
            let id = CMatrix::identity(2, 2);
            let zero = CMatrix::zeros(2, 2);
            let gamma0 = block(&id, &zero, &zero, &(-&id));
            let spatial = pauli().iter().map(|s| block(&zero, s, &(-s), &zero)).collect();
            Ok(GammaSet { n_s, gamma0, spatial })
        }
        _ => Err(Error::UnsupportedDimension(n_s)),
    }
}

impl GammaSet {
    /// `γ^μ` with `μ = 0` the temporal matrix.
    pub fn gamma(&self, mu: usize) -> &CMatrix {
        if mu == 0 {
            &self.gamma0
        } else {
            &self.spatial[mu - 1]
        }
    }

    pub fn dimension(&self) -> usize {
        1 + self.spatial.len()
    }

    pub fn metric(mu: usize, nu: usize) -> f64 {
        match (mu, nu) {
            (0, 0) => 1.0,
            (a, b) if a == b => -1.0,
            _ => 0.0,
        }
    }

    pub fn anticommutator(&self, mu: usize, nu: usize) -> CMatrix {
        let (a, b) = (self.gamma(mu), self.gamma(nu));
        a * b + b * a
    }

    /// Largest entry of `{γ^μ, γ^ν} − 2η^{μν}I` over all pairs.
    pub fn clifford_defect(&self) -> f64 {
        let id = CMatrix::identity(self.n_s, self.n_s);
        let d = self.dimension();
        let mut worst: f64 = 0.0;
        for mu in 0..d {
            for nu in mu..d {
                let expected = &id * Complex64::new(2.0 * Self::metric(mu, nu), 0.0);
                let diff = self.anticommutator(mu, nu) - expected;
                worst = worst.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    fn check_momentum(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.spatial.len() {
            return Err(Error::InvalidParameter(format!(
                "momentum has {} components, gamma set has {} spatial matrices",
                p.len(),
                self.spatial.len()
            )));
        }
        Ok(())
    }

    /// `c·slash(p₄) = γ⁰ε − cγ·p`.
    pub fn slash(&self, energy: f64, p: &[f64], c: f64) -> Result<CMatrix> {
        self.check_momentum(p)?;
        let mut m = &self.gamma0 * Complex64::new(energy, 0.0);
        for (g, &pk) in self.spatial.iter().zip(p) {
            m -= g * Complex64::new(c * pk, 0.0);
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyBranch {
    Positive,
    Negative,
}

/// Unit-norm plane-wave spinor with its on-shell data. `energy` is
/// `+√(ε₀² + c²p²)` for both branches; the branch records which sign of
/// the energy the spinor solves for.
#[derive(Debug, Clone, PartialEq)]
pub struct Spinor {
    pub components: Vec<Complex64>,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub rest_energy: f64,
    pub branch: EnergyBranch,
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn on_shell_energy(p: &[f64], e0: f64, c: f64) -> f64 {
    let p2: f64 = p.iter().map(|x| x * x).sum();
    (e0 * e0 + c * c * p2).sqrt()
}

/// Pauli contraction `c(σ·p)χ` for a two-component `χ`.
fn sigma_dot(p: &[f64], c: f64, chi: [Complex64; 2]) -> [Complex64; 2] {
    let (px, py, pz) = (c * p[0], c * p[1], c * p[2]);
    let v = CMatrix::from_row_slice(2, 2, &[
        Complex64::new(pz, 0.0),
        Complex64::new(px, -py),
        Complex64::new(px, py),
        Complex64::new(-pz, 0.0),
    ]) * nalgebra::DVector::from_row_slice(&chi);
    [v[0], v[1]]
}

fn branch_spinors(p: &[f64], e0: f64, gammas: &GammaSet, c: f64, branch: EnergyBranch) -> Result<Vec<Spinor>> {
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(Error::NonPositiveRestEnergy(e0));
    }
    gammas.check_momentum(p)?;
    let eps = on_shell_energy(p, e0, c);
    let lead = Complex64::new(eps + e0, 0.0);
    let raw: Vec<Vec<Complex64>> = match (gammas.n_s, branch) {
        // eigenvectors of [[ε, −cp], [cp, −ε]] with eigenvalues ±ε₀
        (2, EnergyBranch::Positive) => vec![vec![lead, Complex64::new(c * p[0], 0.0)]],
        (2, EnergyBranch::Negative) => vec![vec![Complex64::new(c * p[0], 0.0), lead]],
        (4, _) => [[ONE, ZERO], [ZERO, ONE]]
            .into_iter()
            .map(|chi| {
                let s = sigma_dot(p, c, chi);
                match branch {
                    EnergyBranch::Positive => vec![chi[0] * lead, chi[1] * lead, s[0], s[1]],
                    EnergyBranch::Negative => vec![s[0], s[1], chi[0] * lead, chi[1] * lead],
                }
            })
            .collect(),
        _ => return Err(Error::UnsupportedDimension(gammas.n_s)),
    };
    Ok(raw
        .into_iter()
        .map(|v| Spinor { components: normalized(v), momentum: p.to_vec(), energy: eps, rest_energy: e0, branch })
        .collect())
}

/// Positive-energy solution `u` of `c·slash(p₄)u = ε₀u` with
/// `ε = +√(ε₀² + c²p²)`. For `n_s = 4` this is the spin-up solution.
pub fn plane_wave_spinor(p: &[f64], e0: f64, gammas: &GammaSet, c: f64) -> Result<Spinor> {
    Ok(branch_spinors(p, e0, gammas, c, EnergyBranch::Positive)?.remove(0))
}

/// All positive- and negative-energy spinors at momentum `p`: `n_s` vectors
/// in total. Negative-energy spinors satisfy `c·slash(p₄)v = −ε₀v`.
pub fn spinor_basis(p: &[f64], e0: f64, gammas: &GammaSet, c: f64) -> Result<Vec<Spinor>> {
    let mut all = branch_spinors(p, e0, gammas, c, EnergyBranch::Positive)?;
    all.extend(branch_spinors(p, e0, gammas, c, EnergyBranch::Negative)?);
    Ok(all)
}

/// Numerical rank of the Gram matrix of a set of spinors.
pub fn gram_rank(spinors: &[Spinor], eps: f64) -> usize {
    let n = spinors.len();
    let gram = CMatrix::from_fn(n, n, |i, j| {
        spinors[i].components.iter().zip(&spinors[j].components).map(|(a, b)| a.conj() * b).sum()
    });
    gram.rank(eps)
}

/// `‖c·slash(p₄)u − ε₀u‖ / ‖u‖` with `p₄ = (eps, p)`.
pub fn dirac_residual(u: &[Complex64], p: &[f64], eps: f64, e0: f64, gammas: &GammaSet, c: f64) -> Result<f64> {
    if u.len() != gammas.n_s {
        return Err(Error::ShapeMismatch(format!("spinor has {} components, expected {}", u.len(), gammas.n_s)));
    }
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroSpinor);
    }
    let v = nalgebra::DVector::from_column_slice(u);
    let r = gammas.slash(eps, p, c)? * &v - &v * Complex64::new(e0, 0.0);
    Ok(r.norm() / norm)
}

/// Relative L² norm of `(Ê₀² − ε₀²)Ψ`, with `Ê₀²` acting on each mode as
/// `(ħw)² − c²(ħr)²`.
pub fn kg_residual(field: &WaveField, e0: f64) -> Result<f64> {
    field.require_normalized()?;
    let rec = forward_transform(field)?;
    kg_residual_spectral(&rec, e0)
}

pub fn kg_residual_spectral(rec: &ReciprocalField, e0: f64) -> Result<f64> {
    let (c, hbar) = (rec.grid().c, rec.grid().hbar);
    let (mut w0, mut acc) = (0.0, 0.0);
    rec.for_each_mode(|_, _, r, w, wt| {
        let (p, e) = (hbar * r, hbar * w);
        let d = e * e - c * c * p * p - e0 * e0;
        w0 += wt;
        acc += wt * d * d;
    });
    if w0 <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((acc / w0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    Timelike,
    Lightlike,
    Spacelike,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRestEnergy {
    pub a: usize,
    pub b: usize,
    pub momentum: f64,
    pub energy: f64,
    pub weight: f64,
    /// `(ħw)² − c²(ħr)²`.
    pub e0_sq: f64,
    /// `√e0_sq` for timelike modes, 0 for lightlike, `None` for spacelike.
    pub e0: Option<f64>,
    pub class: ModeClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestEnergySpectrum {
    pub modes: Vec<ModeRestEnergy>,
    /// Weight-averaged ε₀ over timelike modes.
    pub mean: f64,
    /// Weighted standard deviation Δε₀ over timelike modes.
    pub sd: f64,
    /// Fraction of the total weight carried by timelike modes.
    pub timelike_weight: f64,
}

/// Per-mode rest energies. Lightlike and spacelike modes are flagged and
/// excluded from the summary statistics.
pub fn rest_energy_spectrum(recip: &ReciprocalField) -> RestEnergySpectrum {
    let (c, hbar) = (recip.grid().c, recip.grid().hbar);
    let mut modes = Vec::with_capacity(recip.grid().cells());
    recip.for_each_mode(|a, b, r, w, weight| {
        let (p, e) = (hbar * r, hbar * w);
        let e0_sq = e * e - c * c * p * p;
        let (class, e0) = if e0_sq > 0.0 {
            (ModeClass::Timelike, Some(e0_sq.sqrt()))
        } else if e0_sq == 0.0 {
            (ModeClass::Lightlike, Some(0.0))
        } else {
            (ModeClass::Spacelike, None)
        };
        modes.push(ModeRestEnergy { a, b, momentum: p, energy: e, weight, e0_sq, e0, class });
    });
    let (mut total, mut w0, mut w1) = (0.0, 0.0, 0.0);
    for m in &modes {
        total += m.weight;
        if m.class == ModeClass::Timelike {
            w0 += m.weight;
            w1 += m.weight * m.e0.unwrap_or(0.0);
        }
    }
    let (mean, sd) = if w0 > 0.0 {
        let mean = w1 / w0;
        let var = modes
            .iter()
            .filter(|m| m.class == ModeClass::Timelike)
            .map(|m| m.weight * (m.e0.unwrap_or(0.0) - mean).powi(2))
            .sum::<f64>()
            / w0;
        (mean, var.max(0.0).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    RestEnergySpectrum { modes, mean, sd, timelike_weight: if total > 0.0 { w0 / total } else { 0.0 } }
}

/// Largest deviation of `|σ̃|` from `ε₀²/(2ħ⟨ε⟩)` over timelike modes with
/// non-zero weight, at evolution constant `b`.
pub fn sigma_rate_defect(recip: &ReciprocalField, b: f64) -> Result<f64> {
    let g = *recip.grid();
    let mean_e = g.hbar * recip.mode_mean(|_, w| w)?;
    let mut worst: f64 = 0.0;
    recip.for_each_mode(|_, _, r, w, wt| {
        let (p, e) = (g.hbar * r, g.hbar * w);
        let e0_sq = e * e - g.c * g.c * p * p;
        if wt > 0.0 && e0_sq > 0.0 {
            let rate = sigma_tilde(r, w, b, g.c).abs();
            worst = worst.max((rate - e0_sq / (2.0 * g.hbar * mean_e)).abs());
        }
    });
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutatorPair {
    /// `[x, p̂]` with `p̂ = −iħ∂/∂x`; expected `iħ`.
    PositionMomentum,
    /// `[t, Ê]` with `Ê = iħ∂/∂t`; expected `−iħ`.
    TimeEnergy,
    /// `[x, Ê]`; expected 0.
    PositionEnergy,
    /// `[t, p̂]`; expected 0.
    TimeMomentum,
}

impl CommutatorPair {
    pub fn expected(self, hbar: f64) -> Complex64 {
        match self {
            CommutatorPair::PositionMomentum => Complex64::new(0.0, hbar),
            CommutatorPair::TimeEnergy => Complex64::new(0.0, -hbar),
            _ => ZERO,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CommutatorPair::PositionMomentum => "x,p",
            CommutatorPair::TimeEnergy => "t,E",
            CommutatorPair::PositionEnergy => "x,E",
            CommutatorPair::TimeMomentum => "t,p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorEstimate {
    /// `⟨ψ, [A, B]ψ⟩ / ⟨ψ, ψ⟩`.
    pub constant: Complex64,
    /// `‖[A, B]ψ − constant·ψ‖ / ‖ψ‖`.
    pub residual: f64,
    pub expected: Complex64,
}

fn apply_spectral(field: &WaveField, f: impl Fn(f64, f64) -> f64) -> Result<WaveField> {
    let mut rec = forward_transform(field)?;
    rec.apply_mode_factor(|r, w| Complex64::new(f(r, w), 0.0));
    inverse_transform(&rec)
}

/// Estimates the constant `[A, B]ψ / ψ` for a canonical operator pair on a
/// smooth interior test field. Derivative operators act spectrally.
pub fn commutator_residual(pair: CommutatorPair, test_field: &WaveField) -> Result<CommutatorEstimate> {
    test_field.require_interior()?;
    let hbar = test_field.grid().hbar;
    let mul_x = |f: &WaveField| f.map_points(|x, _, v| v * x);
    let mul_t = |f: &WaveField| f.map_points(|_, t, v| v * t);
    let p_op = |f: &WaveField| apply_spectral(f, |r, _| hbar * r);
    let e_op = |f: &WaveField| apply_spectral(f, |_, w| hbar * w);
    let psi = test_field;
    let (ab, ba) = match pair {
        CommutatorPair::PositionMomentum => (mul_x(&p_op(psi)?), p_op(&mul_x(psi))?),
        CommutatorPair::TimeEnergy => (mul_t(&e_op(psi)?), e_op(&mul_t(psi))?),
        CommutatorPair::PositionEnergy => (mul_x(&e_op(psi)?), e_op(&mul_x(psi))?),
        CommutatorPair::TimeMomentum => (mul_t(&p_op(psi)?), p_op(&mul_t(psi))?),
    };
    let comm = ab.add(&ba.scaled(-ONE))?;
    let nsq = psi.norm_sq();
    let constant = psi.inner(&comm)? / nsq;
    let residual = comm.distance(&psi.scaled(constant))? / nsq.sqrt();
    Ok(CommutatorEstimate { constant, residual, expected: pair.expected(hbar) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_packet, normalize};
    use crate::lattice::make_grid;
    use crate::propagator::{natural_b, project_mass_shell, project_positive_energy};
    use std::f64::consts::PI;

    fn exact_zero(m: &CMatrix) -> bool {
        m.iter().all(|z| *z == ZERO)
    }

    #[test]
    fn two_component_identities() {
        let g = gamma_set(2).unwrap();
        assert!(exact_zero(&g.anticommutator(0, 1)));
        assert_eq!(&g.gamma0 * &g.gamma0, CMatrix::identity(2, 2));
        assert_eq!(g.clifford_defect(), 0.0);
    }

    #[test]
    fn four_component_pairs_anticommute() {
        let g = gamma_set(4).unwrap();
        let mut checked = 0;
        for mu in 0..4 {
            for nu in (mu + 1)..4 {
                // direct multiplication, entry by entry
                let (a, b) = (g.gamma(mu), g.gamma(nu));
                for i in 0..4 {
                    for j in 0..4 {
                        let mut s = ZERO;
                        for k in 0..4 {
                            s += a[(i, k)] * b[(k, j)] + b[(i, k)] * a[(k, j)];
                        }
                        assert_eq!(s, ZERO, "pair ({mu},{nu})");
                    }
                }
                checked += 1;
            }
        }
        assert_eq!(checked, 6);
        assert_eq!(g.clifford_defect(), 0.0);
        assert!(matches!(gamma_set(3), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn rest_frame_spinor() {
        let g = gamma_set(2).unwrap();
        let u = plane_wave_spinor(&[0.0], 1.0, &g, 1.0).unwrap();
        assert_eq!(u.energy, 1.0);
        assert_eq!(u.components, vec![ONE, ZERO]);
        assert_eq!(dirac_residual(&u.components, &[0.0], 1.0, 1.0, &g, 1.0).unwrap(), 0.0);
        let wrong = [ZERO, ONE];
        assert!((dirac_residual(&wrong, &[0.0], 1.0, 1.0, &g, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(dirac_residual(&[ZERO, ZERO], &[0.0], 1.0, 1.0, &g, 1.0), Err(Error::ZeroSpinor)));
    }

    #[test]
    fn moving_spinor_is_on_shell() {
        let g = gamma_set(2).unwrap();
        let u = plane_wave_spinor(&[0.75], 1.0, &g, 1.0).unwrap();
        assert_eq!(u.energy, 1.25);
        let r = dirac_residual(&u.components, &[0.75], u.energy, 1.0, &g, 1.0).unwrap();
        assert!(r <= 1e-12);
        let n: f64 = u.components.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-15);
        assert!(matches!(plane_wave_spinor(&[0.75], 0.0, &g, 1.0), Err(Error::NonPositiveRestEnergy(_))));
    }

    #[test]
    fn four_component_basis() {
        let g = gamma_set(4).unwrap();
        let p = [0.3, -0.4, 1.1];
        let basis = spinor_basis(&p, 0.8, &g, 1.5).unwrap();
        assert_eq!(basis.len(), 4);
        for s in &basis {
            let target = match s.branch {
                EnergyBranch::Positive => s.rest_energy,
                EnergyBranch::Negative => -s.rest_energy,
            };
            let r = dirac_residual(&s.components, &p, s.energy, target, &g, 1.5).unwrap();
            assert!(r <= 1e-12, "{r}");
        }
        assert_eq!(gram_rank(&basis, 1e-10), 4);
    }

    #[test]
    fn two_component_completeness() {
        let g = gamma_set(2).unwrap();
        let basis = spinor_basis(&[2.0], 0.5, &g, 1.0).unwrap();
        assert_eq!(gram_rank(&basis, 1e-10), 2);
    }

    #[test]
    fn squared_slash() {
        for n_s in [2, 4] {
            let g = gamma_set(n_s).unwrap();
            let p: Vec<f64> = (0..g.spatial.len()).map(|k| 0.4 + 0.3 * k as f64).collect();
            let eps = on_shell_energy(&p, 1.3, 0.9);
            let m = g.slash(eps, &p, 0.9).unwrap();
            let sq = &m * &m - CMatrix::identity(n_s, n_s) * Complex64::new(1.69, 0.0);
            assert!(sq.iter().all(|z| z.norm() < 1e-12));
        }
    }

    fn lattice_grid() -> crate::lattice::SpacetimeGrid {
        make_grid(32, 32, 8.0 * PI, 8.0 * PI, 1.0, 1.0).unwrap()
    }

    #[test]
    fn kg_on_and_off_shell() {
        let g = lattice_grid();
        let mode = |k: f64, m: f64| {
            normalize(&WaveField::from_fn(g, |x, t| Complex64::from_polar(1.0, 0.25 * k * x - 0.25 * m * t))).unwrap().0
        };
        assert!(kg_residual(&mode(3.0, 5.0), 1.0).unwrap() < 1e-12);
        assert!((kg_residual(&mode(0.0, 8.0), 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kg_after_projection() {
        let g = lattice_grid();
        let f = gaussian_packet(&g, 0.0, 0.0, 3.0, 3.0, 0.75, 1.25).unwrap();
        let rec = forward_transform(&f).unwrap();
        let shell = project_mass_shell(&rec, 1.0, 1e-6).unwrap().field;
        let field = inverse_transform(&shell).unwrap();
        assert!(kg_residual(&field, 1.0).unwrap() <= 1e-6);
    }

    #[test]
    fn rest_energy_examples() {
        let g = lattice_grid();
        let mut rec = ReciprocalField::zeros(g, 1).unwrap();
        rec.set(0, g.r_index(3).unwrap(), g.t_index(5).unwrap(), ONE);
        let s = rest_energy_spectrum(&rec);
        assert!((s.mean - 1.0).abs() < 1e-12);
        assert!(s.sd.abs() < 1e-12);

        let mut light = ReciprocalField::zeros(g, 1).unwrap();
        light.set(0, g.r_index(4).unwrap(), g.t_index(4).unwrap(), ONE);
        let s = rest_energy_spectrum(&light);
        let m = s.modes.iter().find(|m| m.weight > 0.0).unwrap();
        assert_eq!(m.class, ModeClass::Lightlike);
        assert_eq!(m.e0, Some(0.0));
        assert_eq!(s.timelike_weight, 0.0);
    }

    #[test]
    fn two_point_rest_energy_statistics() {
        // ε₀ = 1.0 at (r, w) = (0, 1); ε₀ = 1.2 at (0, 1.2); spacing 0.2 in w
        let g = make_grid(8, 32, 8.0, 10.0 * PI, 1.0, 1.0).unwrap();
        let mut rec = ReciprocalField::zeros(g, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        rec.set(0, 0, g.t_index(5).unwrap(), Complex64::new(h, 0.0));
        rec.set(0, 0, g.t_index(6).unwrap(), Complex64::new(0.0, h));
        let s = rest_energy_spectrum(&rec);
        assert!((s.mean - 1.1).abs() < 1e-12);
        assert!((s.sd - 0.1).abs() < 1e-12);
    }

    #[test]
    fn commutators_on_interior_gaussian() {
        let g = make_grid(128, 128, 32.0, 32.0, 1.0, 1.0).unwrap();
        let f = gaussian_packet(&g, 0.5, -0.5, 1.0, 1.2, 0.3, 0.8).unwrap();
        let xp = commutator_residual(CommutatorPair::PositionMomentum, &f).unwrap();
        assert!((xp.constant - Complex64::new(0.0, 1.0)).norm() < 1e-6, "{:?}", xp);
        assert!(xp.residual < 1e-6);
        let te = commutator_residual(CommutatorPair::TimeEnergy, &f).unwrap();
        assert!((te.constant - Complex64::new(0.0, -1.0)).norm() < 1e-6);
        let xe = commutator_residual(CommutatorPair::PositionEnergy, &f).unwrap();
        assert!(xe.constant.norm() < 1e-6);

        let edge = WaveField::from_fn(g, |x, t| Complex64::new((-(x - 13.0).powi(2) / 4.0 - t * t / 4.0).exp(), 0.0));
        let edge = normalize(&edge).unwrap().0;
        assert!(matches!(commutator_residual(CommutatorPair::PositionMomentum, &edge), Err(Error::PacketClipped(_))));
    }

    #[test]
    fn sigma_rate_under_natural_b() {
        let g = lattice_grid();
        let f = gaussian_packet(&g, 0.0, 0.0, 3.0, 3.0, 0.75, 1.25).unwrap();
        let rec = project_positive_energy(&forward_transform(&f).unwrap()).unwrap().field;
        let b = natural_b(&rec).unwrap();
        assert!(sigma_rate_defect(&rec, b).unwrap() <= 1e-12);
    }
}
