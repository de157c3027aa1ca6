//! Estimation of a low-rank matrix plus a structured-sparse matrix from noisy
//! linear observations.
//!
//! The estimator solves
//!
//! ```text
//! min  1/2 ||Y - X(theta + gamma)||_F^2 + lambda ||theta||_nuc + mu R(gamma)
//! s.t. spikiness(theta) <= alpha
//! ```
//!
//! where `R` is the elementwise l1 norm or the columnwise (2,1) norm. Besides
//! the solver the crate provides the parameter rules, error-bound diagnostics
//! and seeded generators for synthetic instances.

pub mod error;
pub mod matrix;
pub mod obsop;
pub mod record;
pub mod reg;
pub mod solver;
pub mod synth;
pub mod tuning;

pub use error::{Error, Result};
pub use matrix::{decomposition_error, norm, svd, DenseMatrix, NormKind, SvdFactors};
pub use obsop::{design_stats, Curvature, DesignStats, ObservationOperator, OperatorVariant};
pub use record::KvRecord;
pub use reg::{PenaltyParams, RegularizerKind, Support};
pub use solver::{solve_composite, two_step, DecompositionEstimate, ProblemInstance, SolverConfig, StepRule};
pub use synth::{GroundTruth, RngSeed};
pub use tuning::{BoundReport, NoiseModel, RateModel};
