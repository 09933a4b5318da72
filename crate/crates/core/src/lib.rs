//! Optimal impulse dividend policies for refracted Levy risk processes with
//! exponential Parisian ruin and an ultimate bankruptcy barrier at -l.
//!
//! Two models are supported: Brownian motion with drift and the
//! Cramer-Lundberg process with exponential claims. For both, every scale
//! function is a two-term exponential sum, so the Parisian refracted scale
//! function [`parisian::ThetaBasis`] has a three-segment closed form.

// `!(x > 0.0)` is how NaN gets rejected along with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod expsum;
pub mod models;
pub mod optimizer;
pub mod parisian;
pub mod quad;
pub mod rng;
pub mod scale;
pub mod simulator;
pub mod valuation;

pub use error::{Error, Result};
pub use models::{validate, EconSpec, LevyModel, ProblemSpec, Process, RefractionSpec};
pub use parisian::ThetaBasis;
