//! Per-instance Laplace noise-scale optimization for sampling queries.
//!
//! Given a numeric dataset and a target privacy level `epsilon`, this crate
//! assigns every instance its own Laplace scale so that each instance meets
//! per-instance differential privacy while the randomized sampling-query
//! distribution stays close to the original histogram.
//!
//! The pipeline:
//!
//! 1. [`preprocess`] — margin-padded min-max normalization into `(0, 1)` and
//!    categorization into `K` uniform bins.
//! 2. [`mechanism`] — truncated-Laplace output masses per instance and bin,
//!    mixture distributions, the identical-scale baseline, and a seeded
//!    sampler.
//! 3. [`pdp`] — per-instance privacy-loss accounting (exact and conservative)
//!    and the sufficiency bounds on the smallest usable scale.
//! 4. [`game`] — the common-payoff assignment game and its best-response
//!    solver.
//! 5. [`evolution`] — a genetic-algorithm solver over assignment chromosomes.
//! 6. [`metrics`] — distribution-similarity metrics for evaluation.

pub mod error;
pub mod evolution;
pub mod game;
pub mod mechanism;
pub mod metrics;
pub mod pdp;
pub mod preprocess;
pub(crate) mod serde_nonfinite;

pub use error::{Error, Result};
pub use evolution::{ga_solve, GaConfig};
pub use game::{brd_solve, total_payoff, BrdConfig, Payoff, SolveOutcome, SolverTrace};
pub use mechanism::{ActionSet, Distribution, MassMatrix, VariancePlan};
pub use pdp::{AccountingMode, BoundVariant, PrivacyReport};
pub use preprocess::{BinnedDataset, NormalizationParams, RawDataset};
