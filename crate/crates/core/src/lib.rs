//! Integrated-information analysis of binary Markov systems.
//!
//! Build a [`Tpm`], pick a [`Subsystem`] and state, then ask for mechanism-level
//! distinctions, system-level big phi and complexes, TPM factorizations, or
//! the macro grains with maximal integration. The [`sim`] module generates
//! TPMs from lattice particle trajectories.

pub mod algebra;
pub mod error;
pub mod fixtures;
pub mod grain;
pub mod mechanism;
pub mod metric;
pub mod repertoire;
pub mod sim;
pub mod state;
pub mod system;
pub mod tpm;

/// Values at or below this count as zero (no distinction, no complex).
pub const ZERO_TOL: f64 = 1e-10;
/// Candidates within this of the best are treated as tied; the first wins.
pub const TIE_TOL: f64 = 1e-10;

pub use algebra::{factorize, product_residual, tensor_product, Factorization};
pub use error::{Error, Result};
pub use grain::{coarse_grain, grain_search, temporal_grain, CoarseGraining, GrainBudget, GrainSearch};
pub use mechanism::{CorePurview, Distinction, MechanismCut, SmallPhi};
pub use metric::Metric;
pub use repertoire::{Direction, Repertoire, Subsystem};
pub use sim::{simulate, SimConfig};
pub use state::{NodeSubset, SystemState};
pub use system::{
    cause_effect_structure, find_complexes, system_phi, CauseEffectStructure, Complex, ComplexSearch, PhiConfig,
    PhiMode, SystemCut,
};
pub use tpm::Tpm;
