//! Pairwise ranking by empirical minimization of U-statistics.
//!
//! The crate provides, over synthetic generative models with finite feature
//! support:
//!
//! - exact second-order U-statistics, the split-sample block estimator, and
//!   the Hoeffding decomposition with exactly enumerated projections
//!   ([`ustat`]);
//! - ranking risks, optimal reference rules, excess-risk and noise-condition
//!   diagnostics, and ROC/AUC machinery with enumeration oracles ([`risk`]);
//! - empirical minimizers over finite rule classes, convex-surrogate
//!   boosting, kernel ranking in an RKHS ball, and the surrogate-to-ranking
//!   calibration transform ([`learners`]);
//! - closed-form risk-bound evaluators, Monte Carlo Rademacher averages,
//!   tail inequalities, and an empirical tail-versus-bound harness
//!   ([`bounds`]).
//!
//! Everything randomized takes an explicit [`rng::RngSeed`]; given equal
//! seeds and inputs, results are bit-identical.

pub mod battery;
pub mod bounds;
pub mod data;
pub mod error;
pub mod io;
pub mod learners;
pub mod numeric;
pub mod risk;
pub mod rng;
pub mod ustat;

pub use data::{Dataset, LabeledSample, SyntheticModel};
pub use error::{Error, Result};
pub use rng::RngSeed;
