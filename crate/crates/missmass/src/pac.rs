//! Monte Carlo harness for relative-error learning of the missing mass.
//!
//! A trial draws `n` samples, computes the true missing mass `M` and an
//! estimate `M_hat`, and fails when `|M_hat/M - 1| > eps`. A curve runs a
//! grid of sample sizes with many replicates each and tallies failure
//! frequencies with binomial confidence half-widths. The verdict summarizes
//! whether the curve is consistent with convergence of the failure
//! probability below `delta`.
//!
//! A verdict is explicitly empirical: the learning property is asymptotic,
//! and a finite harness can only report consistency or witness persistent
//! failure, never prove the limit. Replicate seeds derive from
//! `(master seed, n, replicate index)`, so curves are reproducible row by
//! row and cells can be distributed across workers freely.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{DiscreteDist, DistSpec};
use crate::estimators::{estimate, missing_mass_true, EstimatorId};
use crate::numeric::binomial_ci99;
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Configuration of a failure-frequency curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PacConfig {
    pub dist: DistSpec,
    pub estimator: EstimatorId,
    /// Relative-error tolerance of the trial event.
    pub eps: f64,
    /// Failure-probability threshold used by the verdict.
    pub delta: f64,
    /// Strictly increasing sample sizes.
    pub n_grid: Vec<u64>,
    /// Replicates per grid point (>= 100 for meaningful confidence bands;
    /// smaller values are allowed and produce degenerate intervals).
    pub reps: u64,
    pub seed: u64,
}

impl PacConfig {
    pub fn validate(&self) -> Result<()> {
        let eps_ok = self.eps.is_finite() && self.eps > 0.0;
        if !eps_ok {
            return Err(Error::param(format!("eps must be > 0, got {}", self.eps)));
        }
        let delta_ok = self.delta > 0.0 && self.delta < 1.0;
        if !delta_ok {
            return Err(Error::param(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.reps == 0 {
            return Err(Error::param("reps must be >= 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::param("n_grid must be nonempty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(Error::param("n_grid must be strictly increasing and positive"));
        }
        self.dist.build().map(|_| ())
    }
}

/// Outcome of a single trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrialOutcome {
    /// `ratio = M_hat / M`; `failed` iff `|ratio - 1| > eps`.
    Defined { ratio: f64, failed: bool },
    /// The drawn sample left no measurable missing mass (`M = 0` within
    /// tolerance); the ratio is undefined. Has probability 0 for the four
    /// built-in families.
    UndefinedTruth,
}

/// One trial: draw, estimate, compare against the truth.
pub fn run_trial(
    dist: &DiscreteDist,
    estimator: EstimatorId,
    n: u64,
    eps: f64,
    seed: u64,
) -> Result<TrialOutcome> {
    if n == 0 {
        return Err(Error::pre("run_trial requires n >= 1"));
    }
    let eps_ok = eps.is_finite() && eps > 0.0;
    if !eps_ok {
        return Err(Error::param(format!("eps must be > 0, got {eps}")));
    }
    let s = dist.draw_n(n, seed);
    let truth = match missing_mass_true(dist, &s) {
        Some(m) => m,
        None => return Ok(TrialOutcome::UndefinedTruth),
    };
    let ratio = estimate(estimator, &s)?.estimate / truth;
    Ok(TrialOutcome::Defined {
        ratio,
        failed: (ratio - 1.0).abs() > eps,
    })
}

/// One row of a failure curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PacRow {
    pub n: u64,
    /// Failure frequency among defined replicates.
    pub failure_freq: f64,
    /// 99% binomial confidence half-width (1 when only one replicate ran).
    pub ci_halfwidth: f64,
    /// Mean of `M_hat/M` over defined replicates; absent if none were.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ratio: Option<f64>,
    /// Replicates with undefined ratio (`M = 0`), excluded from the
    /// frequency.
    pub reps_undefined: u64,
}

/// Failure-frequency curve over the sample-size grid.
#[derive(Clone, Debug, Serialize)]
pub struct PacCurve {
    pub rows: Vec<PacRow>,
}

impl PacCurve {
    /// CSV rendering with header `n,failure_freq,ci,mean_ratio,undefined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,failure_freq,ci,mean_ratio,undefined\n");
        for r in &self.rows {
            let mean = r
                .mean_ratio
                .map(|v| format!("{v}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.n, r.failure_freq, r.ci_halfwidth, mean, r.reps_undefined
            ));
        }
        out
    }
}

/// Run the full grid. Replicates parallelize per row; aggregation is
/// order-independent summation.
pub fn failure_curve(cfg: &PacConfig) -> Result<PacCurve> {
    cfg.validate()?;
    let dist = cfg.dist.build()?;
    let rows = cfg
        .n_grid
        .iter()
        .map(|&n| curve_row(&dist, cfg, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(PacCurve { rows })
}

fn curve_row(dist: &DiscreteDist, cfg: &PacConfig, n: u64) -> Result<PacRow> {
    let outcomes: Vec<TrialOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_trial(dist, cfg.estimator, n, cfg.eps, derive_seed(cfg.seed, n, rep)))
        .collect::<Result<Vec<_>>>()?;
    let mut failures = 0u64;
    let mut undefined = 0u64;
    let mut ratio_sum = 0.0;
    for outcome in &outcomes {
        match outcome {
            TrialOutcome::Defined { ratio, failed } => {
                ratio_sum += ratio;
                failures += u64::from(*failed);
            }
            TrialOutcome::UndefinedTruth => undefined += 1,
        }
    }
    let defined = cfg.reps - undefined;
    Ok(PacRow {
        n,
        failure_freq: if defined == 0 {
            0.0
        } else {
            failures as f64 / defined as f64
        },
        ci_halfwidth: binomial_ci99(failures, defined),
        mean_ratio: (defined > 0).then(|| ratio_sum / defined as f64),
        reps_undefined: undefined,
    })
}

/// Empirical verdict on a curve against threshold `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacVerdict {
    /// The last third of the grid has `failure_freq + ci < delta`.
    ConsistentWithPac,
    /// At the largest `n`, `failure_freq - ci > delta`.
    Inconsistent,
    /// Neither direction is resolved.
    Inconclusive,
}

impl std::fmt::Display for PacVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PacVerdict::ConsistentWithPac => "consistent-with-PAC",
            PacVerdict::Inconsistent => "inconsistent",
            PacVerdict::Inconclusive => "inconclusive",
        })
    }
}

/// Judge a curve. The consistency check looks at the trailing third of the
/// grid (rounded up); the inconsistency check looks at the largest `n` only.
pub fn pac_verdict(curve: &PacCurve, delta: f64) -> Result<PacVerdict> {
    if curve.rows.is_empty() {
        return Err(Error::pre("pac_verdict requires a nonempty curve"));
    }
    let rows = &curve.rows;
    let tail_len = rows.len().div_ceil(3);
    let tail = &rows[rows.len() - tail_len..];
    if tail.iter().all(|r| r.failure_freq + r.ci_halfwidth < delta) {
        return Ok(PacVerdict::ConsistentWithPac);
    }
    let last = rows.last().expect("nonempty");
    if last.failure_freq - last.ci_halfwidth > delta {
        return Ok(PacVerdict::Inconsistent);
    }
    Ok(PacVerdict::Inconclusive)
}
