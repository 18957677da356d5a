//! Measurements for identifying which of two unknown pure states a third
//! copy equals, when each of the three systems is split between two parties.
//!
//! The crate builds the permutation-symmetry operators on three copies of
//! `C^d`, the globally optimal and the optimal separable three-outcome
//! measurements, a Haar Monte Carlo estimator of their success
//! probabilities, and a local two-party protocol whose induced measurement
//! equals the separable optimum.
//!
//! Index conventions: a global basis vector `|i0 i1 i2>` has index
//! `i0 d^2 + i1 d + i2`, and each system index splits as `i = a d_b + b`
//! into Alice's and Bob's parts.
//!
//! ```
//! use pureid_core::{closed_form_separable, exact_success_probability, optimal_separable_povm, SpaceSpec};
//!
//! let spec = SpaceSpec::new(2, 2).unwrap();
//! let povm = optimal_separable_povm(&spec).unwrap();
//! let p = exact_success_probability(&povm);
//! assert!((p - closed_form_separable(2, 2)).abs() < 1e-12);
//! ```

pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod povm;
pub mod protocol;
pub mod symmetry;

pub use error::{Error, Result};
pub use linalg::{c64, hermitian_eig, kron, operator_norm, ComplexMatrix, EigenDecomposition, C64};
pub use montecarlo::{
    haar_state, haar_unitary, run_monte_carlo, sample_rng, McReport, StateVector,
};
pub use povm::{
    closed_form_global, closed_form_separable, exact_success_probability, global_optimal_povm,
    optimal_separable_povm, separable_povm, validate, Outcome, Povm, SeparableCoefficients,
    ValidationReport,
};
pub use protocol::{
    build_protocol, build_protocol_with_leader, induced_povm, run_protocol, simulate_run,
    summarize_runs, verify_equivalence, EquivalenceReport, ProtocolRun, ProtocolTree, Transcript,
};
pub use symmetry::{DimensionTable, Party, SectorLabel, SpaceSpec, SymmetryOperators};
