//! Wave fields on a 1+1D spacetime grid evolved in an evolution parameter σ
//! by an exact spectral propagator, with Dirac and Klein-Gordon constraint
//! checks, uncertainty-relation experiments and a causal event-ordering
//! library for sequential and relational time.

pub mod checks;
pub mod cli;
pub mod dirac;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod lattice;
pub mod ordering;
pub mod propagator;
pub mod report;

pub use error::{Error, Result};
pub use field::{gaussian_packet, normalize, observables, Observables, PacketSpec, ReciprocalField, WaveField};
pub use lattice::{forward_transform, inverse_transform, make_grid, SpacetimeGrid};
pub use propagator::{propagate, EvolutionConstant, PropagatorConfig, Propagator};
