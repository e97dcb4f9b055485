//! Stochastic non-convex optimization laboratory.
//!
//! Coordinate-wise AdaGrad, AdaGrad-Norm and SGD run on synthetic separable
//! objectives whose per-coordinate smoothness `L` and noise level `sigma` are
//! known exactly. On top of the runs sit the closed-form bound evaluators
//! (`Q`, `h(T)`, the l1 rate bound), log-log rate fitting over `(d, T)`
//! sweeps, and a resisting first-order oracle that materializes a 1-smooth
//! hard instance certifying the `d / (32 eps^2)` query lower bound.
//!
//! Module map:
//!
//! - [`problems`]: objectives with analytic gradients and smoothness vectors.
//! - [`oracle`]: unbiased stochastic gradients with exact coordinate variance.
//! - [`optimizers`]: the update rules, step-size diagnostics and the runner.
//! - [`metrics`]: norms, densities, bound evaluators, lemma checks, rate fits.
//! - [`lower_bound`]: bump segments, resisting oracle, hard instance, trials.
//! - [`harness`]: config parsing, experiments, sweeps, CSV and reports.

pub mod error;
pub mod harness;
pub mod lower_bound;
pub mod metrics;
pub mod optimizers;
pub mod oracle;
pub mod par;
pub mod problems;

pub use error::{Error, Result};
pub use optimizers::{Method, OptimizerState, RecordFlags, RunConfig, Trajectory};
pub use oracle::{NoiseDistribution, NoiseModel};
pub use problems::{ExtremeCase, Problem, ProblemKind};
