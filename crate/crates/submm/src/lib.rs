//! Optimization of submodular set functions through tight modular bounds.
//!
//! A submodular function admits modular lower bounds built from permutation
//! chains and modular upper bounds built from marginal gains, both tight at a
//! chosen anchor set. Replacing the function by such a bound and optimizing
//! the bound exactly yields simple, fast minimization and maximization
//! schemes with provable guarantees. This crate provides:
//!
//! * [`oracle`]: normalized, call-counted evaluation of arbitrary set
//!   functions ([`Oracle`]), plus submodularity, monotonicity, and curvature
//!   checks.
//! * [`functions`]: a zoo of concrete function families and seeded random
//!   instance generation from a JSON problem description.
//! * [`semigradient`]: permutation-chain lower vectors, three closed-form
//!   upper vectors, and the modular bounds they induce.
//! * [`linopt`]: exact modular optimization over constraint families
//!   (cardinality, spanning trees, s-t paths, perfect matchings, matroids,
//!   knapsack).
//! * [`mmin`]: descent by iterated upper-bound minimization, lattice pruning
//!   to the interval `[A+, B+]`, and constrained descent with curvature
//!   bounds.
//! * [`mmax`]: ascent by iterated lower-bound maximization under several
//!   permutation schedules, plus constrained greedy variants.
//! * [`brute`]: exhaustive ground truth and certificates for the structural
//!   claims the fast algorithms rely on.

pub mod brute;
pub mod error;
pub mod functions;
pub mod graph;
pub mod linopt;
pub mod mmax;
pub mod mmin;
pub mod modular;
pub mod oracle;
pub mod semigradient;
pub mod set;

pub use error::{Error, Result};
pub use modular::ModularVector;
pub use oracle::Oracle;
pub use set::{GroundSet, SubsetMask};

/// Absolute tolerance for sign tests and float comparisons throughout.
pub const TOLERANCE: f64 = 1e-9;

/// One accepted iterate of a solver trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub set: SubsetMask,
    pub value: f64,
}
