//! Coin-betting learners for online linear and convex optimization.
//!
//! The main learner is [`RecursiveOptimizer`], which turns any online learner
//! for betting fractions into a full-matrix-adaptive learner without storing a
//! matrix. [`DiagOptimizer`] is the per-coordinate learner it is normally
//! stacked on. [`theory`] evaluates the closed-form regret bounds and
//! [`bench`] drives the synthetic experiments behind the `betfree` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bench;
pub mod diag;
pub mod doubling;
pub mod error;
pub mod learner;
pub mod oracle;
pub mod recursive;
pub mod safeguards;
pub mod theory;
pub mod vectorlab;

pub use baselines::{Adagrad, FixedFractionBettor};
pub use diag::{DiagConfig, DiagOptimizer};
pub use doubling::DoublingBettor;
pub use error::{Error, Result};
pub use learner::{play, LearnerStep, OnlineLearner, RegretLedger};
pub use recursive::RecursiveOptimizer;
pub use safeguards::{GmaxScaler, InitFractionClamp, MomentumOffset};
pub use vectorlab::{GradientVector, Norm, SeededRng};
