//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p missmass --test acceptance -- --nocapture` to see
//! the per-criterion lines; the Monte Carlo criteria take a few minutes.

use std::time::Instant;

use missmass::certificate::{
    epsilon_admissible, eta1, eta2, eta_certificate, separation_ratio, CertificateParams,
};
use missmass::coupling::{
    coupled_missing_masses, coupled_pmf, draw_coupled, estimate_pivotal_prob, is_pivotal,
    pivotal_rep_seed, CouplingParams,
};
use missmass::dist::DistSpec;
use missmass::estimators::{expected_missing_mass, expected_singletons, good_turing};
use missmass::pac::{failure_curve, pac_verdict, PacConfig, PacVerdict};
use missmass::seed::derive_seed;
use missmass::EstimatorId;
use rayon::prelude::*;

struct Criterion {
    id: u32,
    label: &'static str,
    started: Instant,
}

impl Criterion {
    fn new(id: u32, label: &'static str) -> Self {
        Self {
            id,
            label,
            started: Instant::now(),
        }
    }

    fn finish(self, pass: bool) {
        println!(
            "acceptance {:>2} ({}): {} [{:.1}s]",
            self.id,
            self.label,
            if pass { "PASS" } else { "FAIL" },
            self.started.elapsed().as_secs_f64()
        );
        assert!(pass, "acceptance criterion {} failed", self.id);
    }
}

/// Criterion 1: The certificate passes at the canonical constants, with the minimum
/// product inside [2e-4, 1e-3], in under a second.
#[test]
fn acceptance_1_certificate() {
    let c = Criterion::new(1, "eta certificate at canonical constants");
    let started = Instant::now();
    let report = eta_certificate(&CertificateParams::default()).unwrap();
    let elapsed = started.elapsed();
    let pass = report.pass
        && report.min_product >= 2e-4
        && report.min_product <= 1e-3
        && report.threshold == 2e-4
        && report.rows.len() == 50
        && elapsed.as_secs_f64() < 1.0;
    println!(
        "    min eta1*eta2 = {:.6e} (limit {:.6e}) in {:?}",
        report.min_product, report.limit_product, elapsed
    );
    c.finish(pass);
}

/// Criterion 2: Over >= 500 harvested pivotal samples at k = 1..3, the missing-mass
/// ratio is exactly 1.4 (all quantities dyadic) and the marginal samples are
/// identical.
#[test]
fn acceptance_2_separation() {
    let c = Criterion::new(2, "pivotal separation M/M' = 1.4 exactly");
    let reps = 1_000_000u64;
    let seed = 20_240_901u64;
    let mut harvested = 0u64;
    let mut all_exact = true;
    for k in 1..=3u32 {
        let params = CouplingParams::standard(k).unwrap();
        let n = 13 * (1u64 << (k - 1));
        let est = estimate_pivotal_prob(&params, n, reps, seed).unwrap();
        for &rep in &est.pivotal_reps {
            let cs = draw_coupled(&params, n, pivotal_rep_seed(seed, k, rep));
            if !is_pivotal(&cs) {
                all_exact = false;
                continue;
            }
            let (m, m_prime) = coupled_missing_masses(&cs);
            let (s, s_prime) = cs.marginal_summaries();
            if m / m_prime != 1.4 || s != s_prime {
                all_exact = false;
            }
            harvested += 1;
        }
    }
    println!("    harvested {harvested} pivotal samples from {} replicates", 3 * reps);
    c.finish(all_exact && harvested >= 500);
}

/// Criterion 3: Monte Carlo pivotal probability at k = 1, 2, 3 (n_k = 13, 26, 52)
/// exceeds eta1 eta2 - 4 sigma and clears 2e-4 after CI adjustment, at 1e7
/// replicates.
#[test]
fn acceptance_3_pivotal_probability() {
    let c = Criterion::new(3, "P(pivotal) above certificate bound and 2e-4");
    let reps = 10_000_000u64;
    let mut pass = true;
    for k in 1..=3u32 {
        let params = CouplingParams::standard(k).unwrap();
        let n = 13 * (1u64 << (k - 1));
        let est = estimate_pivotal_prob(&params, n, reps, 6021).unwrap();
        let bound = eta1(k, 0.25, 1, 6.5) * eta2(k, 0.25, 1, 6.5);
        let sigma = (est.p_hat * (1.0 - est.p_hat) / reps as f64).sqrt();
        let above_bound = est.p_hat >= bound - 4.0 * sigma;
        let above_eta = est.p_hat - est.ci_halfwidth > 2e-4;
        println!(
            "    k={k} n={n}: p_hat={:.4e} ci={:.1e} eta1*eta2={bound:.4e} -> bound {} / eta {}",
            est.p_hat,
            est.ci_halfwidth,
            if above_bound { "ok" } else { "violated" },
            if above_eta { "ok" } else { "violated" },
        );
        pass &= above_bound && above_eta;
    }
    c.finish(pass);
}

/// Criterion 4: Coupling correctness: exact marginalization on dyadic cells and the
/// empirical conditional block table within 4 sigma of
/// [[0.25, 0], [0.5, 0.25]] at 1e6 draws.
#[test]
fn acceptance_4_coupling_correctness() {
    let c = Criterion::new(4, "coupling marginals and conditional table");
    let mut pass = true;

    for k in 1..=3u32 {
        let params = CouplingParams::standard(k).unwrap();
        let theta = params.theta_dist();
        let theta_prime = params.theta_prime_dist();
        let a = params.block_first();
        let b = params.block_second();
        // diagonal rows below the block are the pmf itself
        for x in 1..a {
            pass &= coupled_pmf(&params, x, x) == theta.pmf(x);
            pass &= coupled_pmf(&params, x, x) == theta_prime.pmf(x);
        }
        // block rows and columns marginalize exactly (dyadic arithmetic)
        pass &= coupled_pmf(&params, a, a) == theta.pmf(a);
        pass &= coupled_pmf(&params, b, a) + coupled_pmf(&params, b, b) == theta.pmf(b);
        pass &= coupled_pmf(&params, a, a) + coupled_pmf(&params, b, a) == theta_prime.pmf(a);
        pass &= coupled_pmf(&params, a, b) + coupled_pmf(&params, b, b) == theta_prime.pmf(b);
        // tail rows: q(x, .) sums to p_theta(x) via the exact dyadic tail
        for x in b + 1..b + 40 {
            let row_tail = coupled_pmf(&params, x, b + 1) / theta_prime.pmf(b + 1)
                * theta_prime.tail_mass(b + 1);
            pass &= (row_tail - theta.pmf(x)).abs() <= f64::EPSILON * theta.pmf(x);
        }
    }

    // empirical conditional table at k = 1
    let params = CouplingParams::standard(1).unwrap();
    let cs = draw_coupled(&params, 1_000_000, 31_337);
    let (a, b) = (params.block_first(), params.block_second());
    let mut counts = [[0u64; 2]; 2];
    let mut in_block = 0u64;
    for &(x, xp) in cs.pairs() {
        if (x == a || x == b) && (xp == a || xp == b) {
            counts[(x - a) as usize][(xp - a) as usize] += 1;
            in_block += 1;
        }
    }
    let table = [[0.25, 0.0], [0.5, 0.25]];
    for i in 0..2 {
        for j in 0..2 {
            let freq = counts[i][j] as f64 / in_block as f64;
            let p = table[i][j];
            let sigma = (p * (1.0 - p) / in_block as f64).sqrt().max(1e-12);
            if (freq - p).abs() > 4.0 * sigma {
                println!("    block cell ({i},{j}): freq {freq} expected {p}");
                pass = false;
            }
        }
    }
    println!("    {in_block} of 1e6 pairs landed in the split block");
    c.finish(pass);
}

/// Criterion 5: Good-Turing identity: Monte Carlo mean of G_n matches
/// `sum p(x)(1-p(x))^(n-1)` within 4 sigma at 1e5 replicates, for each
/// family and n in {13, 100, 1000}.
#[test]
fn acceptance_5_good_turing_identity() {
    let c = Criterion::new(5, "E[G_n] = E[M_(n-1)] across families");
    let reps = 100_000u64;
    let specs = [
        DistSpec::Geometric { alpha: 0.5 },
        DistSpec::Dithered {
            beta: 0.25,
            m: 1,
            theta: String::new(),
            theta_default: '-',
        },
        DistSpec::Zipf { alpha: 0.5 },
        DistSpec::StretchedExp { alpha: 0.5 },
    ];
    let mut pass = true;
    for spec in &specs {
        let dist = spec.build().unwrap();
        for &n in &[13u64, 100, 1000] {
            let (sum, sumsq) = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let g = good_turing(&dist.draw_n(n, derive_seed(1105, n, rep)))
                        .unwrap()
                        .estimate;
                    (g, g * g)
                })
                .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
            let mean = sum / reps as f64;
            let var = (sumsq / reps as f64 - mean * mean).max(0.0);
            let sigma = (var / reps as f64).sqrt().max(1e-12);
            let want = expected_missing_mass(&dist, n - 1);
            let ok = (mean - want).abs() <= 4.0 * sigma;
            if !ok {
                println!(
                    "    {} n={n}: mean {mean:.6} vs {want:.6} (sigma {sigma:.2e})",
                    spec.family_name()
                );
            }
            pass &= ok;
        }
    }
    c.finish(pass);
}

fn landscape_config(
    dist: DistSpec,
    estimator: EstimatorId,
    eps: f64,
    delta: f64,
) -> PacConfig {
    PacConfig {
        dist,
        estimator,
        eps,
        delta,
        n_grid: (10..=16).map(|e| 1u64 << e).collect(),
        reps: 1000,
        seed: 420_817,
    }
}

/// Criterion 6a: Good-Turing on Zipf(1/2) is consistent-with-PAC at eps 0.5, delta 0.1
/// by n = 2^16.
#[test]
fn acceptance_6a_landscape_zipf_good_turing() {
    let c = Criterion::new(6, "landscape a: Good-Turing learns Zipf(1/2)");
    let cfg = landscape_config(
        DistSpec::Zipf { alpha: 0.5 },
        EstimatorId::GoodTuring,
        0.5,
        0.1,
    );
    let curve = failure_curve(&cfg).unwrap();
    let verdict = pac_verdict(&curve, cfg.delta).unwrap();
    let last = curve.rows.last().unwrap();
    println!(
        "    verdict {verdict}; failure freq at 2^16 = {:.4}",
        last.failure_freq
    );
    c.finish(verdict == PacVerdict::ConsistentWithPac && last.failure_freq < 0.05);
}

/// Criterion 6b: Good-Turing on Geometric(1/2) never reaches consistent-with-PAC on
/// the same grid.
#[test]
fn acceptance_6b_landscape_geometric_good_turing() {
    let c = Criterion::new(6, "landscape b: Good-Turing fails on Geometric(1/2)");
    let cfg = landscape_config(
        DistSpec::Geometric { alpha: 0.5 },
        EstimatorId::GoodTuring,
        0.5,
        0.1,
    );
    let curve = failure_curve(&cfg).unwrap();
    let verdict = pac_verdict(&curve, cfg.delta).unwrap();
    println!(
        "    verdict {verdict}; failure freqs {:?}",
        curve
            .rows
            .iter()
            .map(|r| (r.failure_freq * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    c.finish(verdict != PacVerdict::ConsistentWithPac);
}

/// Criterion 6c: The geometric plug-in is consistent-with-PAC on its own family at
/// eps 0.2, delta 0.1, for alpha in {0.3, 0.5, 0.7}.
#[test]
fn acceptance_6c_landscape_geometric_plugin() {
    let c = Criterion::new(6, "landscape c: plug-in learns Geometric(alpha)");
    let mut pass = true;
    for alpha in [0.3, 0.5, 0.7] {
        let cfg = landscape_config(
            DistSpec::Geometric { alpha },
            EstimatorId::GeometricPlugin,
            0.2,
            0.1,
        );
        let curve = failure_curve(&cfg).unwrap();
        let verdict = pac_verdict(&curve, cfg.delta).unwrap();
        println!("    alpha {alpha}: verdict {verdict}");
        pass &= verdict == PacVerdict::ConsistentWithPac;
    }
    c.finish(pass);
}

/// Criterion 7: Localization suite: violation frequency of the punctured-segment
/// bounds stays within delta + 3 sigma over the (alpha, delta, n) grid at
/// 1e4 replicates per cell.
#[test]
fn acceptance_7_localization() {
    use missmass::estimators::{localization_bounds, punctured_segment};
    let c = Criterion::new(7, "punctured-segment localization");
    let reps = 10_000u64;
    let mut pass = true;
    for alpha in [0.3, 0.5, 0.7] {
        let dist = DistSpec::Geometric { alpha }.build().unwrap();
        for delta in [0.05, 0.1] {
            for n in [1u64 << 10, 1 << 14] {
                let (lo, hi) = localization_bounds(alpha, delta, n).unwrap();
                let violations = (0..reps)
                    .into_par_iter()
                    .filter(|&rep| {
                        let s = dist.draw_n(n, derive_seed(7001, n ^ (rep << 1), rep));
                        let p = punctured_segment(&s).unwrap();
                        (p.v_minus as f64) < lo || (p.v_plus as f64) > hi
                    })
                    .count() as u64;
                let freq = violations as f64 / reps as f64;
                let sigma = (delta * (1.0 - delta) / reps as f64).sqrt();
                let ok = freq <= delta + 3.0 * sigma;
                if !ok {
                    println!("    alpha={alpha} delta={delta} n={n}: freq {freq}");
                }
                pass &= ok;
            }
        }
    }
    c.finish(pass);
}

/// Criterion 8: The expected-singletons condition separates the families: bounded and
/// small (< 10) for Geometric(1/2) up to n = 2^20, monotone increasing and
/// beyond 100 for Zipf(1/2).
#[test]
fn acceptance_8_singleton_divergence() {
    let c = Criterion::new(8, "expected singletons: bounded vs divergent");
    let geo = DistSpec::Geometric { alpha: 0.5 }.build().unwrap();
    let zipf = DistSpec::Zipf { alpha: 0.5 }.build().unwrap();
    let grid: Vec<u64> = (10..=20).map(|e| 1u64 << e).collect();
    let geo_values: Vec<f64> = grid.iter().map(|&n| expected_singletons(&geo, n)).collect();
    let zipf_values: Vec<f64> = grid
        .iter()
        .map(|&n| expected_singletons(&zipf, n))
        .collect();
    let geo_sup = geo_values.iter().cloned().fold(0.0, f64::max);
    let zipf_monotone = zipf_values.windows(2).all(|w| w[1] > w[0]);
    println!(
        "    geometric sup = {geo_sup:.4}; zipf: {:.1} -> {:.1} (monotone: {zipf_monotone})",
        zipf_values[0],
        zipf_values[10]
    );
    c.finish(geo_sup < 10.0 && zipf_monotone && zipf_values[10] > 100.0);
}

/// Criterion 9: Admissibility thresholds: eps = 1e-4 admissible at eta = 2e-4,
/// eps = 1/6 and eps >= eta/2 + anything are not.
#[test]
fn acceptance_9_admissibility() {
    let c = Criterion::new(9, "epsilon admissibility thresholds");
    let eta = 2e-4;
    let pass = epsilon_admissible(1e-4, 0.25, eta).unwrap()
        && !epsilon_admissible(1.0 / 6.0, 0.25, eta).unwrap()
        && !epsilon_admissible(1.1e-4, 0.25, eta).unwrap()
        && !epsilon_admissible(0.2, 0.25, eta).unwrap()
        && separation_ratio(0.25).unwrap() == 1.4;
    c.finish(pass);
}
