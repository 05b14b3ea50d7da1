//! Browser bindings for the missing-mass demo page.
//!
//! Three interactive operations, all JSON-in/JSON-out so the static page
//! needs no glue types: a pmf explorer over the four families, the eta
//! certificate curve, and an in-browser Monte Carlo of the coupled sampler.
//! Errors come back as `{"error": "..."}`.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use missmass::certificate::{eta_certificate, separation_ratio, CertificateParams};
use missmass::coupling::{
    coupled_missing_masses, draw_coupled, estimate_pivotal_prob, pivotal_rep_seed, CouplingParams,
};
use missmass::dist::DistSpec;

fn error_json(err: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": err.to_string() }).to_string()
}

#[derive(Serialize)]
struct PmfPoint {
    x: u64,
    pmf: f64,
}

#[derive(Serialize)]
struct PmfTable {
    family: &'static str,
    points: Vec<PmfPoint>,
    covered: f64,
    tail_beyond: f64,
}

/// Table of `{x, pmf}` covering at least `coverage` of the mass (capped at
/// `max_points` rows). `config` is the flat `key = value` distribution
/// format, e.g. `"family = zipf\nalpha = 0.5"`.
#[wasm_bindgen]
pub fn pmf_table(config: &str, coverage: f64, max_points: u32) -> String {
    let spec = match DistSpec::parse_kv(config) {
        Ok(s) => s,
        Err(e) => return error_json(e),
    };
    let dist = match spec.build() {
        Ok(d) => d,
        Err(e) => return error_json(e),
    };
    let coverage = coverage.clamp(0.0, 1.0 - 1e-9);
    let mut points = Vec::new();
    let mut covered = 0.0;
    let mut x = 0u64;
    while covered < coverage && points.len() < max_points.max(1) as usize {
        x += 1;
        let p = dist.pmf(x);
        covered += p;
        points.push(PmfPoint { x, pmf: p });
    }
    let table = PmfTable {
        family: spec.family_name(),
        points,
        covered,
        tail_beyond: dist.tail_mass(x + 1),
    };
    serde_json::to_string(&table).unwrap_or_else(error_json)
}

/// The eta certificate at the given parameters; returns the full report
/// (per-k rows, limit, minimum, pass flag) as JSON.
#[wasm_bindgen]
pub fn certificate_report(beta: f64, m: u32, c: f64, k_max: u32, threshold: f64) -> String {
    let params = CertificateParams {
        beta,
        m,
        c,
        k_max,
        threshold,
        rigorous: false,
    };
    match eta_certificate(&params) {
        Ok(report) => serde_json::to_string(&report).unwrap_or_else(error_json),
        Err(e) => error_json(e),
    }
}

#[derive(Serialize)]
struct CouplingDemo {
    k: u32,
    n: u64,
    reps: u32,
    pivotal_count: u64,
    p_hat: f64,
    ci_halfwidth: f64,
    eta_bound: f64,
    expected_ratio: f64,
    ratios_all_exact: bool,
    example_pairs: Vec<(u64, u64)>,
    example_missing_masses: Option<(f64, f64)>,
}

/// Monte Carlo pivotal-event demo at block `k` with the canonical constants
/// (`beta = 1/4`, `m = 1`, `n = 6.5 * 2^k`). Returns the pivotal frequency
/// against the certificate bound, verifies the forced missing-mass ratio on
/// every pivotal replicate, and includes one pivotal sample for display.
#[wasm_bindgen]
pub fn coupling_demo(k: u32, reps: u32, seed: u32) -> String {
    let params = match CouplingParams::standard(k) {
        Ok(p) => p,
        Err(e) => return error_json(e),
    };
    if k > 20 {
        return error_json("k > 20 makes the pivotal event unobservably rare in a browser run");
    }
    let n = 13u64 << (k - 1);
    let est = match estimate_pivotal_prob(&params, n, u64::from(reps.max(1)), u64::from(seed)) {
        Ok(e) => e,
        Err(e) => return error_json(e),
    };
    let expected_ratio = separation_ratio(params.beta()).expect("canonical beta");
    let eta_bound = missmass::certificate::eta1(k, 0.25, 1, 6.5)
        * missmass::certificate::eta2(k, 0.25, 1, 6.5);
    let mut ratios_all_exact = true;
    let mut example_pairs = Vec::new();
    let mut example_missing_masses = None;
    for (i, &rep) in est.pivotal_reps.iter().enumerate() {
        let cs = draw_coupled(&params, n, pivotal_rep_seed(u64::from(seed), k, rep));
        let (m_val, m_prime) = coupled_missing_masses(&cs);
        ratios_all_exact &= m_val / m_prime == expected_ratio;
        if i == 0 {
            example_pairs = cs.pairs().to_vec();
            example_missing_masses = Some((m_val, m_prime));
        }
    }
    let demo = CouplingDemo {
        k,
        n,
        reps,
        pivotal_count: est.pivotal_count,
        p_hat: est.p_hat,
        ci_halfwidth: est.ci_halfwidth,
        eta_bound,
        expected_ratio,
        ratios_all_exact,
        example_pairs,
        example_missing_masses,
    };
    serde_json::to_string(&demo).unwrap_or_else(error_json)
}
