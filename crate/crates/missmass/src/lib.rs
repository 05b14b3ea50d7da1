//! Estimation of the *missing mass* of a discrete distribution: the total
//! probability of symbols that never showed up in an i.i.d. sample.
//!
//! The crate provides:
//!
//! - [`dist`]: the distribution families the experiments run on (geometric,
//!   dithered geometric, Zipf, stretched exponential), with exact pmf/tail
//!   evaluation and seeded sampling.
//! - [`estimators`]: the empirical, Good-Turing and geometric plug-in
//!   estimators, the exact missing mass of a sample, and the analytic
//!   quantities backing the plug-in analysis (parameter-convergence rates,
//!   punctured-segment localization, expected singleton counts).
//! - [`coupling`]: a joint sampler for two dithered geometric distributions
//!   that differ in a single dithering index, together with detection of the
//!   pivotal event on which their missing masses separate by a fixed ratio
//!   while the samples are indistinguishable.
//! - [`certificate`]: closed-form evaluation of the lower bounds `eta1(k)`,
//!   `eta2(k)` on the pivotal-event probability and the certification that
//!   their infimum over `k` clears a configured threshold.
//! - [`pac`]: a Monte Carlo harness that measures relative-error failure
//!   frequencies `P{|M_hat/M - 1| > eps}` over a grid of sample sizes and
//!   reports an empirical PAC verdict.
//!
//! Everything that consumes randomness takes an explicit seed and is a pure
//! function of its inputs; see [`seed`] for how replicate streams are derived.

pub mod certificate;
pub mod coupling;
pub mod dist;
pub mod estimators;
pub mod pac;
pub mod sample;
pub mod seed;

pub(crate) mod numeric;

pub use dist::{DiscreteDist, DistSpec, ThetaFlag};
pub use estimators::EstimatorId;
pub use sample::SampleSummary;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty sample")]
    EmptySample,

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
