//! `missmass`: seeded, scriptable missing-mass experiments.
//!
//! Subcommands: `sample`, `estimate`, `certify`, `coupling-demo`,
//! `pac-curve`, `singletons`. Every run writes its data file(s) plus a
//! `*.manifest.json` with the full parameter map; re-running a manifest's
//! parameters reproduces the data byte for byte.
//!
//! Exit codes: 0 success (and certificate pass), 1 certified fail or runtime
//! error, 2 usage/config error.

mod config;
mod manifest;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use missmass::certificate::{eta1, eta2, eta_certificate, separation_ratio, CertificateParams};
use missmass::coupling::{
    coupled_missing_masses, draw_coupled, estimate_pivotal_prob, is_pivotal, pivotal_rep_seed,
    CouplingParams,
};
use missmass::dist::{DiscreteDist, DistSpec, ThetaFlag};
use missmass::estimators::{
    estimate, expected_missing_mass, expected_singletons, good_turing, missing_mass_true,
};
use missmass::pac::{failure_curve, pac_verdict, PacConfig};
use missmass::seed::derive_seed;
use missmass::EstimatorId;

use config::{parse_u64_list, SectionedConfig};
use manifest::RunManifest;

const EXIT_FAIL: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(name = "missmass", version, about = "Missing-mass estimation experiments")]
struct Cli {
    /// Worker threads for Monte Carlo runs (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw n samples and write the count table as CSV
    Sample(SampleArgs),
    /// Run an estimator over replicated draws; CSV of estimates vs truth
    Estimate(EstimateArgs),
    /// Evaluate the eta certificate; exit 0 iff it passes
    Certify(CertifyArgs),
    /// Monte Carlo pivotal-event demo for the coupled sampler
    CouplingDemo(CouplingDemoArgs),
    /// Failure-frequency curve from a config file
    PacCurve(PacCurveArgs),
    /// Expected-singletons table over a sample-size grid
    Singletons(SingletonsArgs),
}

/// Distribution selection shared by several subcommands.
#[derive(Args, Serialize)]
struct DistArgs {
    /// geometric | dithered | zipf | stretched_exp
    #[arg(long)]
    family: String,
    /// Parameter of the geometric, zipf and stretched_exp families
    #[arg(long)]
    alpha: Option<f64>,
    /// Dithering fraction in (0, 1/2)
    #[arg(long)]
    beta: Option<f64>,
    /// Undithered head length of the dithered family
    #[arg(long)]
    m: Option<u32>,
    /// Dithering prefix as '+'/'-' flags, e.g. "+-+"
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Dithering flag used beyond the prefix
    #[arg(long, allow_hyphen_values = true)]
    theta_default: Option<String>,
}

impl DistArgs {
    fn to_spec(&self) -> Result<DistSpec, missmass::Error> {
        let mut pairs = vec![("family".to_string(), self.family.clone())];
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("beta", self.beta.map(|v| v.to_string()));
        push("m", self.m.map(|v| v.to_string()));
        push("theta", self.theta.clone());
        push("theta_default", self.theta_default.clone());
        let spec = DistSpec::from_pairs(&pairs)?;
        spec.build()?;
        Ok(spec)
    }
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    dist: DistArgs,
    #[arg(long)]
    n: u64,
    #[arg(long, env = "MISSMASS_SEED", default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long, default_value = "sample.csv")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// empirical | good_turing | geometric_plugin
    #[arg(long)]
    estimator: String,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 100)]
    reps: u64,
    /// Relative-error tolerance used for the failure tally
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, env = "MISSMASS_SEED", default_value_t = 0)]
    seed: u64,
    /// Also check the Good-Turing mean against sum p(x)(1-p(x))^(n-1)
    #[arg(long)]
    gt_identity: bool,
    #[arg(long, default_value = "estimates.csv")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Growth constant of the sample sizes n_k = c 2^k
    #[arg(long, default_value_t = 6.5)]
    c: f64,
    #[arg(long, default_value_t = 50)]
    k_max: u32,
    #[arg(long, default_value_t = 2e-4)]
    threshold: f64,
    /// Shrink products by a certified rounding allowance before the
    /// threshold comparison
    #[arg(long)]
    rigorous: bool,
    #[arg(long, default_value = "certificate.json")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CouplingDemoArgs {
    /// Dithering index where the coupled pair differs
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 1_000_000)]
    reps: u64,
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    m: u32,
    /// Growth constant; the sample size is n = c 2^k
    #[arg(long, default_value_t = 6.5)]
    c: f64,
    #[arg(long, env = "MISSMASS_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write one full coupled sample as CSV (i, x, x_prime)
    #[arg(long)]
    dump_pairs: Option<PathBuf>,
    #[arg(long, default_value = "coupling_demo.json")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PacCurveArgs {
    /// Config file with [dist] and [pac] sections
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "pac_curve.csv")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SingletonsArgs {
    #[command(flatten)]
    dist: DistArgs,
    /// Comma-separated sample sizes
    #[arg(long)]
    n_grid: String,
    #[arg(long, default_value = "singletons.csv")]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let code = match cli.command {
        Command::Sample(args) => run_sample(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Certify(args) => run_certify(args),
        Command::CouplingDemo(args) => run_coupling_demo(args),
        Command::PacCurve(args) => run_pac_curve(args),
        Command::Singletons(args) => run_singletons(args),
    };
    std::process::exit(code);
}

fn usage_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn io_error(path: &std::path::Path, err: std::io::Error) -> i32 {
    eprintln!("error: writing {}: {err}", path.display());
    EXIT_FAIL
}

fn params_json<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn run_sample(args: SampleArgs) -> i32 {
    let started = Instant::now();
    let spec = match args.dist.to_spec() {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let dist = spec.build().expect("validated above");
    let summary = dist.draw_n(args.n, args.seed);
    let mut manifest = RunManifest::new("sample", params_json(&args), args.seed);
    if let Err(e) = std::fs::write(&args.out, summary.to_csv()) {
        return io_error(&args.out, e);
    }
    manifest.record_output(&args.out);
    println!(
        "wrote {} ({} draws, {} distinct symbols)",
        args.out.display(),
        summary.n(),
        summary.distinct()
    );
    manifest.write(started.elapsed().as_millis()).ok();
    0
}

fn run_estimate(args: EstimateArgs) -> i32 {
    let started = Instant::now();
    let spec = match args.dist.to_spec() {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let estimator: EstimatorId = match args.estimator.parse() {
        Ok(e) => e,
        Err(e) => return usage_error(e),
    };
    if args.n == 0 || args.reps == 0 || args.eps <= 0.0 {
        return usage_error("--n and --reps must be >= 1, --eps > 0");
    }
    let dist = spec.build().expect("validated above");

    let mut csv = String::from("rep,n,estimator,estimate,truth,ratio\n");
    let mut failures = 0u64;
    let mut undefined = 0u64;
    let mut gt_sum = 0.0;
    let mut gt_sumsq = 0.0;
    for rep in 0..args.reps {
        let s = dist.draw_n(args.n, derive_seed(args.seed, args.n, rep));
        let est = estimate(estimator, &s).expect("n >= 1");
        if args.gt_identity {
            let g = good_turing(&s).expect("n >= 1").estimate;
            gt_sum += g;
            gt_sumsq += g * g;
        }
        match missing_mass_true(&dist, &s) {
            Some(truth) => {
                let ratio = est.estimate / truth;
                failures += u64::from((ratio - 1.0).abs() > args.eps);
                csv.push_str(&format!(
                    "{rep},{},{},{},{truth},{ratio}\n",
                    args.n, estimator, est.estimate
                ));
            }
            None => {
                undefined += 1;
                csv.push_str(&format!(
                    "{rep},{},{},{},,\n",
                    args.n, estimator, est.estimate
                ));
            }
        }
    }
    let mut manifest = RunManifest::new("estimate", params_json(&args), args.seed);
    if let Err(e) = std::fs::write(&args.out, csv) {
        return io_error(&args.out, e);
    }
    manifest.record_output(&args.out);
    let defined = args.reps - undefined;
    println!(
        "estimator {} on {}: {} reps, failure freq {:.4} at eps {}, undefined {}",
        estimator,
        spec.family_name(),
        args.reps,
        if defined > 0 {
            failures as f64 / defined as f64
        } else {
            0.0
        },
        args.eps,
        undefined
    );
    if args.gt_identity {
        let mean = gt_sum / args.reps as f64;
        let var = (gt_sumsq / args.reps as f64 - mean * mean).max(0.0);
        let sigma = (var / args.reps as f64).sqrt().max(1e-12);
        let want = expected_missing_mass(&dist, args.n - 1);
        let ok = (mean - want).abs() <= 4.0 * sigma;
        println!(
            "gt-identity: mean G_n = {mean:.6}, sum p(1-p)^(n-1) = {want:.6}, {} (4 sigma = {:.2e})",
            if ok { "agree" } else { "DISAGREE" },
            4.0 * sigma
        );
    }
    manifest.write(started.elapsed().as_millis()).ok();
    0
}

fn run_certify(args: CertifyArgs) -> i32 {
    let started = Instant::now();
    let params = CertificateParams {
        beta: args.beta,
        m: args.m,
        c: args.c,
        k_max: args.k_max,
        threshold: args.threshold,
        rigorous: args.rigorous,
    };
    let report = match eta_certificate(&params) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    print!("{}", report.table_string());
    let mut manifest = RunManifest::new("certify", params_json(&args), 0);
    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Err(e) = std::fs::write(&args.out, body) {
        return io_error(&args.out, e);
    }
    manifest.record_output(&args.out);
    manifest.write(started.elapsed().as_millis()).ok();
    if report.pass {
        0
    } else {
        EXIT_FAIL
    }
}

#[derive(Serialize)]
struct CouplingDemoReport {
    k: u32,
    n: u64,
    reps: u64,
    pivotal_count: u64,
    p_hat: Option<f64>,
    ci_halfwidth: Option<f64>,
    eta1: f64,
    eta2: f64,
    eta_bound: f64,
    expected_ratio: f64,
    /// Distinct observed values of M/M' over pivotal replicates (expected:
    /// exactly one value, the separation ratio).
    observed_ratios: Vec<f64>,
    marginals_identical: bool,
}

fn run_coupling_demo(args: CouplingDemoArgs) -> i32 {
    let started = Instant::now();
    if args.k == 0 {
        return usage_error("--k must be >= 1");
    }
    let params = match CouplingParams::new(
        args.beta,
        args.m,
        args.k,
        vec![ThetaFlag::Low; (args.k - 1) as usize],
        ThetaFlag::Low,
        ThetaFlag::Low,
    ) {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };
    let n_f = args.c * 2f64.powi(args.k as i32);
    if n_f.fract() != 0.0 || !(1.0..=1e15).contains(&n_f) {
        return usage_error(format!("n = c 2^k = {n_f} is not a usable integer"));
    }
    let n = n_f as u64;

    let mut manifest = RunManifest::new("coupling-demo", params_json(&args), args.seed);
    let mut report = CouplingDemoReport {
        k: args.k,
        n,
        reps: args.reps,
        pivotal_count: 0,
        p_hat: None,
        ci_halfwidth: None,
        eta1: eta1(args.k, args.beta, args.m, args.c),
        eta2: eta2(args.k, args.beta, args.m, args.c),
        eta_bound: eta1(args.k, args.beta, args.m, args.c)
            * eta2(args.k, args.beta, args.m, args.c),
        expected_ratio: separation_ratio(args.beta).expect("beta validated"),
        observed_ratios: Vec::new(),
        marginals_identical: true,
    };

    if args.reps > 0 {
        let est = match estimate_pivotal_prob(&params, n, args.reps, args.seed) {
            Ok(e) => e,
            Err(e) => return usage_error(e),
        };
        report.pivotal_count = est.pivotal_count;
        report.p_hat = Some(est.p_hat);
        report.ci_halfwidth = Some(est.ci_halfwidth);
        for &rep in est.pivotal_reps.iter().take(5000) {
            let cs = draw_coupled(&params, n, pivotal_rep_seed(args.seed, args.k, rep));
            debug_assert!(is_pivotal(&cs));
            let (m, m_prime) = coupled_missing_masses(&cs);
            let ratio = m / m_prime;
            if !report.observed_ratios.contains(&ratio) {
                report.observed_ratios.push(ratio);
            }
            let (s, sp) = cs.marginal_summaries();
            report.marginals_identical &= s == sp;
        }
    }

    if let Some(path) = &args.dump_pairs {
        let cs = draw_coupled(&params, n, args.seed);
        if let Err(e) = std::fs::write(path, cs.to_csv()) {
            return io_error(path, e);
        }
        manifest.record_output(path);
    }

    let body = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Err(e) = std::fs::write(&args.out, body) {
        return io_error(&args.out, e);
    }
    manifest.record_output(&args.out);
    match report.p_hat {
        Some(p) => println!(
            "k={} n={n}: pivotal {}/{} (p_hat {p:.3e}, bound {:.3e}), ratios {:?}",
            args.k, report.pivotal_count, args.reps, report.eta_bound, report.observed_ratios
        ),
        None => println!("k={} n={n}: empty run (reps = 0)", args.k),
    }
    manifest.write(started.elapsed().as_millis()).ok();
    0
}

fn run_pac_curve(args: PacCurveArgs) -> i32 {
    let started = Instant::now();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("reading {}: {e}", args.config.display())),
    };
    let cfg = match parse_pac_config(&text) {
        Ok(c) => c,
        Err(msg) => return usage_error(format!("{}: {msg}", args.config.display())),
    };
    let curve = match failure_curve(&cfg) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let verdict = pac_verdict(&curve, cfg.delta).expect("nonempty grid");

    let mut manifest = RunManifest::new("pac-curve", params_json(&cfg), cfg.seed);
    if let Err(e) = std::fs::write(&args.out, curve.to_csv()) {
        return io_error(&args.out, e);
    }
    manifest.record_output(&args.out);
    let json_path = args.out.with_extension("json");
    let body = serde_json::json!({
        "config": cfg,
        "curve": curve,
        "verdict": verdict,
    });
    let body = serde_json::to_string_pretty(&body).expect("curve serializes") + "\n";
    if let Err(e) = std::fs::write(&json_path, body) {
        return io_error(&json_path, e);
    }
    manifest.record_output(&json_path);
    println!(
        "{} + {} on {}: verdict {verdict}",
        args.out.display(),
        json_path.display(),
        cfg.dist.family_name()
    );
    manifest.write(started.elapsed().as_millis()).ok();
    0
}

fn parse_pac_config(text: &str) -> Result<PacConfig, String> {
    let cfg = SectionedConfig::parse(text).map_err(|e| e.to_string())?;
    let dist = DistSpec::from_pairs(&cfg.section_pairs("dist"))
        .map_err(|e| format!("[dist] section: {e}"))?;
    let estimator: EstimatorId = cfg
        .require("pac", "estimator")
        .map_err(|e| e.to_string())?
        .0
        .parse()
        .map_err(|e| format!("[pac] section: {e}"))?;
    let eps: f64 = cfg.parse_value("pac", "eps").map_err(|e| e.to_string())?;
    let delta: f64 = cfg.parse_value("pac", "delta").map_err(|e| e.to_string())?;
    let reps: u64 = cfg.parse_value("pac", "reps").map_err(|e| e.to_string())?;
    let (grid_text, grid_line) = cfg.require("pac", "n_grid").map_err(|e| e.to_string())?;
    let n_grid = parse_u64_list(grid_text).map_err(|e| format!("line {grid_line}: {e}"))?;
    let seed = match cfg.get("pac", "seed") {
        Some((v, line)) => v
            .parse::<u64>()
            .map_err(|e| format!("line {line}: seed: {e}"))?,
        None => std::env::var("MISSMASS_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0),
    };
    let pac = PacConfig {
        dist,
        estimator,
        eps,
        delta,
        n_grid,
        reps,
        seed,
    };
    pac.validate().map_err(|e| e.to_string())?;
    Ok(pac)
}

fn run_singletons(args: SingletonsArgs) -> i32 {
    let started = Instant::now();
    let spec = match args.dist.to_spec() {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let grid = match parse_u64_list(&args.n_grid) {
        Ok(g) if !g.is_empty() => g,
        Ok(_) => return usage_error("--n-grid must be nonempty"),
        Err(e) => return usage_error(e),
    };
    let dist: DiscreteDist = spec.build().expect("validated above");
    let mut csv = String::from("n,expected_singletons\n");
    for &n in &grid {
        csv.push_str(&format!("{n},{}\n", expected_singletons(&dist, n)));
    }
    let mut manifest = RunManifest::new("singletons", params_json(&args), 0);
    if let Err(e) = std::fs::write(&args.out, csv) {
        return io_error(&args.out, e);
    }
    manifest.record_output(&args.out);
    println!("wrote {} ({} grid points)", args.out.display(), grid.len());
    manifest.write(started.elapsed().as_millis()).ok();
    0
}
