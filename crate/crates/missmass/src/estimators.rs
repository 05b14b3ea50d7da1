//! Missing-mass estimators and the analytic quantities behind the geometric
//! plug-in analysis.
//!
//! The estimators:
//!
//! - empirical: the missing set has empirical probability 0, always.
//! - Good-Turing: the fraction of the sample made of symbols seen exactly
//!   once, `G_n = (#singletons)/n`. Its defining identity is
//!   `E[G_n] = sum_x p(x)(1-p(x))^(n-1) = E[M_(n-1)]`.
//! - geometric plug-in: fit `alpha_hat = 1 - n / sum X_i`, substitute it into
//!   the geometric pmf, and evaluate the fitted mass of the missing set.
//!
//! The supporting analysis of the plug-in: a Chebyshev rate `epsilon_n` for
//! the relative error of `alpha_hat`, and two-sided localization of the
//! punctured segment of the sample coverage, which together bound
//! `|M_check/M - 1|` at rate about `log(n)/sqrt(n)`.
//!
//! All functions here are pure; everything can be called concurrently.

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDist;
use crate::numeric::KahanSum;
use crate::sample::SampleSummary;
use crate::{Error, Result};

/// Which estimator to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    Empirical,
    GoodTuring,
    GeometricPlugin,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 3] = [
        EstimatorId::Empirical,
        EstimatorId::GoodTuring,
        EstimatorId::GeometricPlugin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorId::Empirical => "empirical",
            EstimatorId::GoodTuring => "good_turing",
            EstimatorId::GeometricPlugin => "geometric_plugin",
        }
    }
}

impl std::str::FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "empirical" => Ok(EstimatorId::Empirical),
            "good_turing" | "good-turing" => Ok(EstimatorId::GoodTuring),
            "geometric_plugin" | "geometric-plugin" | "plugin" => Ok(EstimatorId::GeometricPlugin),
            other => Err(Error::Config(format!("unknown estimator {other:?}"))),
        }
    }
}

impl std::fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Output of one estimator on one sample.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateResult {
    /// Estimated missing mass, in [0, 1].
    pub estimate: f64,
    pub estimator_id: EstimatorId,
    /// Side information (fitted parameter, clamping) where applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<EstimateAux>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateAux {
    pub alpha_hat: f64,
    /// True when the raw plug-in value fell outside [0, 1] and was clamped.
    pub clamped: bool,
}

/// Extremities of the punctured segment of a sample: `v_minus` is the
/// smallest missing symbol, `v_plus` the largest observed one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PuncturedSegment {
    pub v_minus: u64,
    pub v_plus: u64,
}

/// Exact missing mass of the sample under `dist`, via the complement
/// identity `M = 1 - sum_{x observed} p(x)` (a finite sum).
///
/// Returns `None` if the complement is not strictly positive within
/// tolerance; that cannot occur for the four built-in families (their
/// support is infinite) but callers must treat the ratio `M_hat/M` as
/// undefined in that case.
pub fn missing_mass_true(dist: &DiscreteDist, s: &SampleSummary) -> Option<f64> {
    let mut covered = KahanSum::default();
    for (sym, _) in s.iter() {
        covered.add(dist.pmf(sym));
    }
    let missing = 1.0 - covered.value();
    if missing <= 1e-13 {
        None
    } else {
        Some(missing)
    }
}

/// Good-Turing estimate: fraction of singletons in the data.
pub fn good_turing(s: &SampleSummary) -> Result<EstimateResult> {
    if s.n() == 0 {
        return Err(Error::EmptySample);
    }
    Ok(EstimateResult {
        estimate: s.singletons() as f64 / s.n() as f64,
        estimator_id: EstimatorId::GoodTuring,
        aux: None,
    })
}

/// Empirical estimate of the missing mass: identically 0.
pub fn empirical_missing(s: &SampleSummary) -> Result<EstimateResult> {
    if s.n() == 0 {
        return Err(Error::EmptySample);
    }
    Ok(EstimateResult {
        estimate: 0.0,
        estimator_id: EstimatorId::Empirical,
        aux: None,
    })
}

/// Moment fit of the geometric parameter: `alpha_hat = 1 - n / sum X_i`,
/// i.e. `1 - 1/sample_mean`. An all-ones sample legally yields 0. The value
/// is below 1 in exact arithmetic; sample means beyond 2^53 round it to 1.
pub fn alpha_hat(s: &SampleSummary) -> Result<f64> {
    if s.n() == 0 {
        return Err(Error::EmptySample);
    }
    let total = s.symbol_sum() as f64;
    Ok(1.0 - s.n() as f64 / total)
}

/// Geometric plug-in estimate: the fitted geometric mass of the missing set,
/// evaluated in complement form `1 - sum_{x observed} (1-a) a^(x-1)` with
/// `a = alpha_hat`. The exponent convention `x-1` makes the plug-in exactly
/// the family pmf with the fitted parameter substituted.
///
/// The result is clamped to [0, 1]; a clamp is reported, never silent.
pub fn geometric_plugin(s: &SampleSummary) -> Result<EstimateResult> {
    let a = alpha_hat(s)?;
    let mut covered = KahanSum::default();
    for (sym, _) in s.iter() {
        covered.add((1.0 - a) * crate::dist::pow_u64(a, sym - 1));
    }
    let raw = 1.0 - covered.value();
    let estimate = raw.clamp(0.0, 1.0);
    Ok(EstimateResult {
        estimate,
        estimator_id: EstimatorId::GeometricPlugin,
        aux: Some(EstimateAux {
            alpha_hat: a,
            clamped: estimate != raw,
        }),
    })
}

/// Run the estimator selected by `id`.
pub fn estimate(id: EstimatorId, s: &SampleSummary) -> Result<EstimateResult> {
    match id {
        EstimatorId::Empirical => empirical_missing(s),
        EstimatorId::GoodTuring => good_turing(s),
        EstimatorId::GeometricPlugin => geometric_plugin(s),
    }
}

/// Chebyshev convergence rate of `alpha_hat` at confidence `1 - delta`:
///
/// `eps_n = sqrt(alpha/(delta n)) * max(1, (1-alpha)/alpha) / (1 - sqrt(alpha/(delta n)))`
///
/// and its multiplicative form `eta_n = eps_n / (1 - eps_n)`. With
/// probability at least `1 - delta`, both `|alpha_hat/alpha - 1|` and
/// `|(1-alpha_hat)/(1-alpha) - 1|` are at most `eps_n`.
///
/// Requires `n > alpha/delta` (the denominator must stay positive).
pub fn epsilon_n(alpha: f64, delta: f64, n: u64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let delta_ok = delta.is_finite() && delta > 0.0;
    if !delta_ok {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    if (n as f64) <= alpha / delta {
        return Err(Error::pre(format!(
            "epsilon_n requires n > alpha/delta = {}, got n = {n}",
            alpha / delta
        )));
    }
    let r = (alpha / (delta * n as f64)).sqrt();
    let eps = r * (1.0f64).max((1.0 - alpha) / alpha) / (1.0 - r);
    let eta = eps / (1.0 - eps);
    Ok((eps, eta))
}

/// Punctured segment of a sample: smallest missing symbol and largest
/// observed symbol.
pub fn punctured_segment(s: &SampleSummary) -> Result<PuncturedSegment> {
    if s.n() == 0 {
        return Err(Error::EmptySample);
    }
    let mut v_minus = 1u64;
    for (sym, _) in s.iter() {
        if sym == v_minus {
            v_minus += 1;
        } else if sym > v_minus {
            break;
        }
    }
    let v_plus = s.max_symbol().expect("nonempty sample");
    Ok(PuncturedSegment { v_minus, v_plus })
}

/// Two-sided localization of the punctured segment of a geometric(alpha)
/// sample at confidence `1 - delta`:
///
/// `log_(1/alpha)(n) - log_(1/alpha)(1/((1-alpha) delta)) <= V- <= V+ <=
///  log_(1/alpha)(n) + 1 + log_(1/alpha)(1/((1-alpha) delta))`.
///
/// Valid for `delta < (1-alpha)/alpha^2`; the caller checks membership.
pub fn localization_bounds(alpha: f64, delta: f64, n: u64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let delta_ok = delta.is_finite() && delta > 0.0 && delta < (1.0 - alpha) / (alpha * alpha);
    if !delta_ok {
        return Err(Error::pre(format!(
            "localization requires 0 < delta < (1-alpha)/alpha^2 = {}, got {delta}",
            (1.0 - alpha) / (alpha * alpha)
        )));
    }
    let base = 1.0 / alpha;
    let log_b = |v: f64| v.ln() / base.ln();
    let center = log_b(n as f64);
    let spread = log_b(1.0 / ((1.0 - alpha) * delta));
    Ok((center - spread, center + 1.0 + spread))
}

/// Expected number of singletons, `sum_x n p(x) (1-p(x))^(n-1)`.
///
/// Divergence of this quantity along `n` is the sufficient condition for
/// Good-Turing to learn the missing mass in relative error; it stays bounded
/// for geometric-like tails and grows without bound for power laws.
///
/// The series is truncated with certified error below 1e-9: past the cut the
/// factor `(1-p)^(n-1)` is within `[1 - (n-1) sup_tail_pmf, 1]`, so the
/// remaining sum equals `n * tail_mass` up to that margin.
pub fn expected_singletons(dist: &DiscreteDist, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    truncated_series(dist, n, n as f64)
}

/// Expected missing mass after `n` draws, `sum_x p(x) (1-p(x))^n`.
///
/// `expected_missing_mass(dist, n-1)` equals `E[G_n]` by construction; the
/// two series are the same expression.
pub fn expected_missing_mass(dist: &DiscreteDist, n: u64) -> f64 {
    truncated_series(dist, n.saturating_add(1), 1.0)
}

/// Shared evaluator for `c * sum_x p(x) (1-p(x))^(n-1)`, truncated with a
/// certified error below 1e-9.
///
/// Two completions close the series at a cut `X`:
///
/// - generic: past the cut, `(1-p)^(n-1)` lies in `[1 - (n-1) sup_pmf, 1]`,
///   so the remainder is `c * tail_mass` within `c (n-1) sup_pmf tail_mass`.
///   Converges quickly for geometrically decaying tails.
/// - Zipf: the generic margin shrinks too slowly for power laws at large
///   `n`, but there the remainder's binomial expansion has analytic terms
///   `sum_{x>X} p(x)^k = zeta_tail(k s, X+1)/Z^k`. Once `(n-1) p(X+1) <= 1`
///   the expansion is alternating with decreasing terms, so truncating it
///   after `p^4` is bracketed by the `p^5` term.
fn truncated_series(dist: &DiscreteDist, n: u64, scale: f64) -> f64 {
    const TOL: f64 = 1e-9;
    debug_assert!(n >= 1);
    let mut acc = KahanSum::default();
    let mut covered = KahanSum::default();
    let nm1 = n as f64 - 1.0;
    let mut x = 0u64;
    loop {
        x += 1;
        let p = dist.pmf(x);
        if p > 0.0 {
            acc.add(scale * p * pow1m(p, n - 1));
            covered.add(p);
        }
        let tail = (1.0 - covered.value()).max(0.0);
        if tail == 0.0 {
            return acc.value();
        }
        let generic_err = scale * nm1 * dist.tail_pmf_sup(x + 1) * tail;
        if generic_err < TOL {
            return acc.value() + scale * tail - 0.5 * generic_err;
        }
        if let DiscreteDist::Zipf(z) = dist {
            if nm1 * z.pmf(x + 1) <= 1.0 {
                if let Some(remainder) = zipf_remainder(z, nm1, x, TOL / scale) {
                    return acc.value() + scale * remainder;
                }
            }
        }
    }
}

/// Binomial-expansion remainder `sum_{y > x} p(y) (1-p(y))^nm1` for Zipf.
///
/// Truncates the alternating expansion after the `p^4` term plus half of the
/// bracketing `p^5` term; `None` if that bracket still exceeds `tol`.
/// Requires `nm1 * p(x+1) <= 1` so the expansion terms decrease pointwise.
fn zipf_remainder(z: &crate::dist::Zipf, nm1: f64, x: u64, tol: f64) -> Option<f64> {
    let s = z.exponent();
    let zc = z.normalizer();
    let moment = |k: u32| crate::dist::zeta_tail(f64::from(k) * s, x + 1) / zc.powi(k as i32);
    // binomial(nm1, k): exact while nm1 stays below ~2^52
    let mut binom = [1.0f64; 5];
    for k in 1..5 {
        binom[k] = binom[k - 1] * (nm1 - (k as f64 - 1.0)) / k as f64;
    }
    let bracket = binom[4] * moment(5);
    let small_enough = bracket < 2.0 * tol; // false also on NaN
    if !small_enough {
        return None;
    }
    Some(
        moment(1) - binom[1] * moment(2) + binom[2] * moment(3) - binom[3] * moment(4)
            + 0.5 * bracket,
    )
}

/// `(1-p)^e` with the exponent taken in log space to avoid powi overflow.
fn pow1m(p: f64, e: u64) -> f64 {
    if e == 0 {
        1.0
    } else if p >= 1.0 {
        0.0
    } else {
        ((e as f64) * (-p).ln_1p()).exp()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistSpec;

    fn geometric_half() -> DiscreteDist {
        DistSpec::Geometric { alpha: 0.5 }.build().unwrap()
    }

    fn dithered(theta: &str, theta_default: char) -> DiscreteDist {
        DistSpec::Dithered {
            beta: 0.25,
            m: 1,
            theta: theta.into(),
            theta_default,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn missing_mass_complement_exact() {
        let d = geometric_half();
        let s = SampleSummary::from_draws([1, 2, 3, 1]);
        assert_eq!(missing_mass_true(&d, &s), Some(0.125));
    }

    #[test]
    fn missing_mass_dithered_pivotal_coverage() {
        // exact coverage of {1, ..., m+2k-1} leaves mass (2-theta_k) 2^-(m-k)
        for k in 1..=10u64 {
            let s = SampleSummary::from_draws(1..=(1 + 2 * k - 1));
            let scale = crate::numeric::pow2(-(1 + k as i32));
            // theta_k = beta: missing mass (2 - beta) 2^-(m+k), exactly
            let d = dithered("", '-');
            assert_eq!(missing_mass_true(&d, &s), Some((2.0 - 0.25) * scale));
            // theta_k = 1 - beta: (1 + beta) 2^-(m+k)
            let mut flags = "-".repeat(k as usize - 1);
            flags.push('+');
            let d = dithered(&flags, '-');
            assert_eq!(missing_mass_true(&d, &s), Some((1.0 + 0.25) * scale));
        }
    }

    #[test]
    fn good_turing_examples() {
        let all_distinct = SampleSummary::from_draws([3, 1, 4, 7]);
        assert_eq!(good_turing(&all_distinct).unwrap().estimate, 1.0);
        let repeated = SampleSummary::from_draws([2; 9]);
        assert_eq!(good_turing(&repeated).unwrap().estimate, 0.0);
        let mixed = SampleSummary::from_draws([1, 1, 2, 5]);
        assert_eq!(good_turing(&mixed).unwrap().estimate, 0.5);
    }

    #[test]
    fn empirical_is_zero() {
        for draws in [vec![1u64], vec![5; 100]] {
            let s = SampleSummary::from_draws(draws);
            assert_eq!(empirical_missing(&s).unwrap().estimate, 0.0);
        }
    }

    #[test]
    fn alpha_hat_examples() {
        let s = SampleSummary::from_draws([1, 1, 2]);
        assert_eq!(alpha_hat(&s).unwrap(), 0.25);
        let ones = SampleSummary::from_draws([1; 10]);
        assert_eq!(alpha_hat(&ones).unwrap(), 0.0);
    }

    #[test]
    fn alpha_hat_consistent_on_geometric() {
        let d = geometric_half();
        let s = d.draw_n(1_000_000, 31);
        let a = alpha_hat(&s).unwrap();
        assert!((a - 0.5).abs() < 0.004, "alpha_hat = {a}");
    }

    #[test]
    fn plugin_examples() {
        let s = SampleSummary::from_draws([1, 1, 2]);
        let r = geometric_plugin(&s).unwrap();
        assert_eq!(r.estimate, 0.0625);
        let aux = r.aux.unwrap();
        assert_eq!(aux.alpha_hat, 0.25);
        assert!(!aux.clamped);

        let ones = SampleSummary::from_draws([1; 5]);
        let r = geometric_plugin(&ones).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn epsilon_n_frozen_value() {
        // 50-digit reference evaluation of the formula
        let (eps, eta) = epsilon_n(0.5, 0.1, 1000).unwrap();
        assert!((eps - 0.07609113378759272).abs() < 1e-15);
        assert!((eta - 0.08235783481495383).abs() < 1e-15);
        assert!(eta > eps);
    }

    #[test]
    fn epsilon_n_monotone_and_guarded() {
        let mut prev = f64::INFINITY;
        for n in [10u64, 100, 1000, 10_000, 100_000] {
            let (eps, _) = epsilon_n(0.5, 0.1, n).unwrap();
            assert!(eps < prev);
            prev = eps;
        }
        // boundary n = alpha/delta rejected
        assert!(epsilon_n(0.5, 0.1, 5).is_err());
        assert!(epsilon_n(0.5, 0.1, 4).is_err());
        assert!(epsilon_n(0.5, 0.1, 6).is_ok());
    }

    #[test]
    fn punctured_examples() {
        let s = SampleSummary::from_draws([1, 2, 3]);
        let p = punctured_segment(&s).unwrap();
        assert_eq!(p, PuncturedSegment { v_minus: 4, v_plus: 3 });
        let s = SampleSummary::from_draws([1, 3, 7]);
        let p = punctured_segment(&s).unwrap();
        assert_eq!(p, PuncturedSegment { v_minus: 2, v_plus: 7 });
        let s = SampleSummary::from_draws([2]);
        let p = punctured_segment(&s).unwrap();
        assert_eq!(p, PuncturedSegment { v_minus: 1, v_plus: 2 });
    }

    #[test]
    fn localization_frozen_values() {
        let (lo, hi) = localization_bounds(0.5, 0.1, 1024).unwrap();
        assert!((lo - 5.678071905112638).abs() < 1e-12);
        assert!((hi - 15.321928094887362).abs() < 1e-12);
        assert!(localization_bounds(0.5, 3.0, 1024).is_err());
    }

    #[test]
    fn expected_singletons_base_cases() {
        for dist in [
            geometric_half(),
            DistSpec::Zipf { alpha: 0.5 }.build().unwrap(),
            dithered("", '-'),
        ] {
            assert!((expected_singletons(&dist, 1) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn expected_missing_mass_base_cases() {
        let d = geometric_half();
        assert!((expected_missing_mass(&d, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_missing_matches_direct_sum_geometric() {
        // independent oracle: direct summation to a far deeper cut
        let d = geometric_half();
        for n in [5u64, 13, 100] {
            let mut direct = 0.0;
            for x in 1..200u64 {
                let p = d.pmf(x);
                direct += p * (1.0 - p).powi(n as i32);
            }
            let got = expected_missing_mass(&d, n);
            assert!((got - direct).abs() < 1e-9, "n={n}: {got} vs {direct}");
        }
    }

    #[test]
    fn expected_singletons_zipf_matches_direct_sum() {
        // independent oracle: brute-force partial sum, sandwiched by its
        // truncation remainder (between 0 and n * tail_mass at the cutoff)
        let d = DistSpec::Zipf { alpha: 0.5 }.build().unwrap();
        let n = 1024u64;
        let cutoff = 40_000_000u64;
        let zeta2 = 1.6449340668482264;
        let mut direct = crate::numeric::KahanSum::default();
        for x in 1..=cutoff {
            let p = (x as f64).powf(-2.0) / zeta2;
            direct.add(n as f64 * p * ((n as f64 - 1.0) * (-p).ln_1p()).exp());
        }
        let remainder_cap = n as f64 * d.tail_mass(cutoff + 1);
        let got = expected_singletons(&d, n);
        assert!(
            got >= direct.value() - 1e-8 && got <= direct.value() + remainder_cap + 1e-8,
            "got {got}, direct {} + at most {remainder_cap}",
            direct.value()
        );
    }
}
