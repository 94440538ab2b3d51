//! Evolution of wave fields in the evolution parameter σ.
//!
//! The free generator is diagonal on the frequency lattice: mode `(r, w)`
//! has eigenvalue `σ̃ = b(w²/c² − r²)` and is multiplied by `exp(−iσ̃Δσ)`.
//! With `b < 0` and positive-energy modes (`w > 0`) this sign gives
//! `d⟨x⟩/dσ = −2b⟨r⟩` and `d⟨t⟩/dσ = −2b⟨w⟩/c² > 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ReciprocalField, WaveField};
use crate::lattice::{forward_transform, inverse_transform};

/// Eigenvalue of the free generator for mode `(r, w)`.
pub fn sigma_tilde(r: f64, w: f64, b: f64, c: f64) -> f64 {
    b * (w * w / (c * c) - r * r)
}

/// Squared rest energy recovered from a mode's σ-eigenvalue,
/// `ε₀² = c²ħ²σ̃/b`.
pub fn rest_energy_sq_from_sigma(sigma_tilde: f64, b: f64, c: f64, hbar: f64) -> f64 {
    c * c * hbar * hbar * sigma_tilde / b
}

/// `b = −c²ħ/(2⟨ε⟩)`, the value that makes `d⟨t⟩/dσ = 1`.
pub fn natural_b_for_energy(mean_e: f64, c: f64, hbar: f64) -> Result<f64> {
    if !(mean_e > 0.0) {
        return Err(Error::NonPositiveEnergy(mean_e));
    }
    Ok(-c * c * hbar / (2.0 * mean_e))
}

/// Natural evolution constant of a spectrum, from its mean energy `ħ⟨w⟩`.
pub fn natural_b(recip: &ReciprocalField) -> Result<f64> {
    let g = recip.grid();
    let mean_w = recip.mode_mean(|_, w| w)?;
    natural_b_for_energy(g.hbar * mean_w, g.c, g.hbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionConstant {
    Fixed(f64),
    /// Derived once from the initial field's mean energy.
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassShell {
    pub e0: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub b: EvolutionConstant,
    pub project_positive_energy: bool,
    pub mass_shell: Option<MassShell>,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { b: EvolutionConstant::Natural, project_positive_energy: false, mass_shell: None }
    }
}

impl PropagatorConfig {
    pub fn fixed(b: f64) -> Self {
        PropagatorConfig { b: EvolutionConstant::Fixed(b), ..Default::default() }
    }

    pub fn natural() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if let EvolutionConstant::Fixed(b) = self.b {
            if !(b < 0.0) || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("evolution constant b = {b} must be negative")));
            }
        }
        if let Some(shell) = self.mass_shell {
            check_shell(shell.e0, shell.tol)?;
        }
        Ok(())
    }
}

fn check_shell(e0: f64, tol: f64) -> Result<()> {
    if !(e0 > 0.0) || !e0.is_finite() {
        return Err(Error::NonPositiveRestEnergy(e0));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("mass-shell tolerance {tol} must be positive")));
    }
    Ok(())
}

/// Rates `(d⟨x⟩/dσ, d⟨t⟩/dσ) = (−2b⟨r⟩, −2b⟨w⟩/c²)`.
pub fn drift_rate(field: &WaveField, b: f64) -> Result<(f64, f64)> {
    field.require_normalized()?;
    let rec = forward_transform(field)?;
    drift_rate_spectral(&rec, b)
}

pub fn drift_rate_spectral(rec: &ReciprocalField, b: f64) -> Result<(f64, f64)> {
    let c = rec.grid().c;
    let mean_r = rec.mode_mean(|r, _| r)?;
    let mean_w = rec.mode_mean(|_, w| w)?;
    Ok((-2.0 * b * mean_r, -2.0 * b * mean_w / (c * c)))
}

/// A projected spectrum together with the weight it kept before
/// renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub field: ReciprocalField,
    pub retained: f64,
}

fn project(recip: &ReciprocalField, keep: impl Fn(f64, f64) -> bool) -> Result<Projection> {
    let mut out = recip.clone();
    out.apply_mode_factor(|r, w| if keep(r, w) { Complex64::new(1.0, 0.0) } else { Complex64::default() });
    let retained = out.norm_sq();
    if retained <= 0.0 {
        return Err(Error::EmptyProjection);
    }
    out.renormalize()?;
    Ok(Projection { field: out, retained })
}

/// Zeroes every mode with `w ≤ 0` and renormalizes.
pub fn project_positive_energy(recip: &ReciprocalField) -> Result<Projection> {
    project(recip, |_, w| w > 0.0)
}

/// Keeps modes with `|(ħw)² − c²(ħr)² − e0²| ≤ tol` and renormalizes.
pub fn project_mass_shell(recip: &ReciprocalField, e0: f64, tol: f64) -> Result<Projection> {
    check_shell(e0, tol)?;
    let (c, hbar) = (recip.grid().c, recip.grid().hbar);
    project(recip, |r, w| {
        let (p, e) = (hbar * r, hbar * w);
        (e * e - c * c * p * p - e0 * e0).abs() <= tol
    })
}

/// Evolution of one prepared initial field. Projections and the natural
/// evolution constant are resolved once at construction.
#[derive(Debug, Clone)]
pub struct Propagator {
    initial: ReciprocalField,
    initial_field: WaveField,
    b: f64,
    watch_x: bool,
    watch_t: bool,
}

impl Propagator {
    pub fn new(field: &WaveField, config: &PropagatorConfig) -> Result<Self> {
        config.validate()?;
        field.require_normalized()?;
        let mut rec = forward_transform(field)?;
        if config.project_positive_energy {
            rec = project_positive_energy(&rec)?.field;
        }
        if let Some(shell) = config.mass_shell {
            rec = project_mass_shell(&rec, shell.e0, shell.tol)?.field;
        }
        let b = match config.b {
            EvolutionConstant::Fixed(b) => b,
            EvolutionConstant::Natural => natural_b(&rec)?,
        };
        let initial_field = if config.project_positive_energy || config.mass_shell.is_some() {
            inverse_transform(&rec)?
        } else {
            field.clone()
        };
        // Only axes on which the initial field is localized are watched;
        // plane-wave-like fields have no drift to run out of.
        let clear = initial_field.clearance()?;
        Ok(Propagator { initial: rec, initial_field, b, watch_x: clear.x, watch_t: clear.t })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Initial field after the configured projections.
    pub fn initial_field(&self) -> &WaveField {
        &self.initial_field
    }

    pub fn initial_spectrum(&self) -> &ReciprocalField {
        &self.initial
    }

    /// Spectrum at parameter value `sigma`.
    pub fn spectrum_at(&self, sigma: f64) -> ReciprocalField {
        let mut rec = self.initial.clone();
        if sigma != 0.0 {
            let (b, c) = (self.b, rec.grid().c);
            rec.apply_mode_factor(|r, w| Complex64::from_polar(1.0, -sigma_tilde(r, w, b, c) * sigma));
        }
        rec
    }

    pub fn at(&self, sigma: f64) -> Result<WaveField> {
        if sigma == 0.0 {
            return Ok(self.initial_field.clone());
        }
        let out = inverse_transform(&self.spectrum_at(sigma))?;
        if self.watch_x || self.watch_t {
            let clear = out.clearance()?;
            if (self.watch_x && !clear.x) || (self.watch_t && !clear.t) {
                return Err(Error::DomainExhausted(format!(
                    "at sigma = {sigma}: center (x={:.4}, t={:.4}), sd ({:.4}, {:.4})",
                    clear.mean_x, clear.mean_t, clear.sd_x, clear.sd_t
                )));
            }
        }
        Ok(out)
    }
}

/// Evolves `field` by `delta_sigma`.
pub fn propagate(field: &WaveField, config: &PropagatorConfig, delta_sigma: f64) -> Result<WaveField> {
    Propagator::new(field, config)?.at(delta_sigma)
}
