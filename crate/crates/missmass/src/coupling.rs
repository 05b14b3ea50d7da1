//! Joint sampling of two dithered geometric distributions that differ in a
//! single dithering index.
//!
//! For a block index `k`, let `theta` take the low flag at `k` and
//! `theta_prime` the high flag, with a shared prefix below `k`. The joint
//! law keeps the pair equal below the `k` block, correlates it inside the
//! block through a three-cell table, and makes the two coordinates
//! conditionally independent past the block:
//!
//! ```text
//! q(x, x')  =  p_theta(x)                     if x = x' < m+2k-1
//!           =  beta / 2^(m+k)                 if x = x' = m+2k-1 or x = x' = m+2k
//!           =  (1-2 beta) / 2^(m+k)           if x = m+2k, x' = m+2k-1
//!           =  p_theta(x) p_theta'(x') 2^(m+k) if x, x' > m+2k
//!           =  0                              otherwise
//! ```
//!
//! Both marginals are exactly the corresponding dithered distributions. On
//! the *pivotal event* -- the sample covering exactly `{1, ..., m+2k-1}` --
//! the two true missing masses sit in the fixed ratio `(2-beta)/(1+beta)`
//! while the coupled samples are identical, so no estimator can track both.

use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{DitheredGeometric, ThetaFlag};
use crate::numeric::{binomial_ci99, geometric_half_level, pow2, unif53};
use crate::sample::SampleSummary;
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Parameters of the coupled pair: the two dithering sequences agree on
/// `shared_prefix` below index `k`, split as low/high at `k`, and continue
/// with the per-side default flags past `k`.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingParams {
    beta: f64,
    m: u32,
    k: u32,
    shared_prefix: Vec<ThetaFlag>,
    trailing_theta: ThetaFlag,
    trailing_theta_prime: ThetaFlag,
}

impl CouplingParams {
    pub fn new(
        beta: f64,
        m: u32,
        k: u32,
        shared_prefix: Vec<ThetaFlag>,
        trailing_theta: ThetaFlag,
        trailing_theta_prime: ThetaFlag,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("coupling index k must be >= 1"));
        }
        if shared_prefix.len() != (k - 1) as usize {
            return Err(Error::param(format!(
                "shared_prefix must fix exactly the {} indices below k = {k}, got {}",
                k - 1,
                shared_prefix.len()
            )));
        }
        // validates beta and m
        DitheredGeometric::new(beta, m, Vec::new(), ThetaFlag::Low)?;
        Ok(Self {
            beta,
            m,
            k,
            shared_prefix,
            trailing_theta,
            trailing_theta_prime,
        })
    }

    /// The canonical configuration: `beta = 1/4`, `m = 1`, all-low shared
    /// prefix and trailing flags.
    pub fn standard(k: u32) -> Result<Self> {
        Self::new(
            0.25,
            1,
            k,
            vec![ThetaFlag::Low; k.saturating_sub(1) as usize],
            ThetaFlag::Low,
            ThetaFlag::Low,
        )
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// First symbol of the split block, `m + 2k - 1`.
    pub fn block_first(&self) -> u64 {
        u64::from(self.m) + 2 * u64::from(self.k) - 1
    }

    /// Second symbol of the split block, `m + 2k`.
    pub fn block_second(&self) -> u64 {
        self.block_first() + 1
    }

    /// The marginal with the low flag at index `k`.
    pub fn theta_dist(&self) -> DitheredGeometric {
        self.marginal(ThetaFlag::Low, self.trailing_theta)
    }

    /// The marginal with the high flag at index `k`.
    pub fn theta_prime_dist(&self) -> DitheredGeometric {
        self.marginal(ThetaFlag::High, self.trailing_theta_prime)
    }

    fn marginal(&self, at_k: ThetaFlag, trailing: ThetaFlag) -> DitheredGeometric {
        let mut prefix = self.shared_prefix.clone();
        prefix.push(at_k);
        DitheredGeometric::new(self.beta, self.m, prefix, trailing)
            .expect("parameters were validated at construction")
    }

    /// Mass of the equal-pair region below the split block: `1 - 2^(1-m-k)`,
    /// an exact dyadic value.
    fn below_mass(&self) -> f64 {
        1.0 - pow2(1 - (self.m as i32 + self.k as i32))
    }

    /// Mass of the split block (equals the tail mass): `2^-(m+k)`.
    fn block_mass(&self) -> f64 {
        pow2(-(self.m as i32 + self.k as i32))
    }
}

/// `n` pairs drawn jointly, with the parameters that produced them.
#[derive(Clone, Debug, Serialize)]
pub struct CoupledSample {
    pub params: CouplingParams,
    pairs: Vec<(u64, u64)>,
}

impl CoupledSample {
    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    pub fn n(&self) -> u64 {
        self.pairs.len() as u64
    }

    /// The two marginal count summaries.
    pub fn marginal_summaries(&self) -> (SampleSummary, SampleSummary) {
        (
            SampleSummary::from_draws(self.pairs.iter().map(|&(x, _)| x)),
            SampleSummary::from_draws(self.pairs.iter().map(|&(_, x)| x)),
        )
    }

    /// CSV rendering with header `i,x,x_prime`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,x,x_prime\n");
        for (i, (x, xp)) in self.pairs.iter().enumerate() {
            out.push_str(&format!("{},{x},{xp}\n", i + 1));
        }
        out
    }
}

/// Joint pmf `q(x, x')`; off-pattern pairs get 0.
///
/// The past-the-block branch multiplies the two marginal pmfs by `2^(m+k)`,
/// which makes the coordinates conditionally independent given the tail and
/// reproduces both marginals exactly.
pub fn coupled_pmf(params: &CouplingParams, x: u64, x_prime: u64) -> f64 {
    if x == 0 || x_prime == 0 {
        return 0.0;
    }
    let a = params.block_first();
    let b = params.block_second();
    let scale = params.block_mass();
    if x < a && x == x_prime {
        return params.theta_dist().pmf(x);
    }
    if (x == a && x_prime == a) || (x == b && x_prime == b) {
        return params.beta * scale;
    }
    if x == b && x_prime == a {
        return (1.0 - 2.0 * params.beta) * scale;
    }
    if x > b && x_prime > b {
        return params.theta_dist().pmf(x) * params.theta_prime_dist().pmf(x_prime) / scale;
    }
    0.0
}

/// Pre-resolved sampler state for the hot loop.
struct PairSampler {
    theta: DitheredGeometric,
    theta_prime: DitheredGeometric,
    below_mass: f64,
    block_mass: f64,
    beta: f64,
    m: u64,
    k: u64,
    max_below_level: u64,
}

impl PairSampler {
    fn new(params: &CouplingParams) -> Self {
        Self {
            theta: params.theta_dist(),
            theta_prime: params.theta_prime_dist(),
            below_mass: params.below_mass(),
            block_mass: params.block_mass(),
            beta: params.beta,
            m: u64::from(params.m),
            k: u64::from(params.k),
            max_below_level: u64::from(params.m) + u64::from(params.k) - 1,
        }
    }

    /// One pair from the joint law. Region selection compares a uniform
    /// against the exact dyadic region masses; sampling within each region
    /// is exact as well.
    fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> (u64, u64) {
        let u = unif53(rng);
        if u < self.below_mass {
            // equal pair below the block: geometric(1/2) level conditioned
            // on <= m+k-1 (redraw on overshoot), then the shared split
            let level = loop {
                let l = geometric_half_level(rng);
                if l <= self.max_below_level {
                    break l;
                }
            };
            let x = if level <= self.m {
                level
            } else {
                self.theta.split_block(level - self.m, rng)
            };
            return (x, x);
        }
        if u < self.below_mass + self.block_mass {
            // inside the split block: rescale u to the exact conditional
            // table [[beta, 0], [1-2 beta, beta]]; the subtraction and the
            // power-of-two division are both exact
            let v = (u - self.below_mass) / self.block_mass;
            let a = self.m + 2 * self.k - 1;
            return if v < self.beta {
                (a, a)
            } else if v < 1.0 - self.beta {
                (a + 1, a)
            } else {
                (a + 1, a + 1)
            };
        }
        // both past the block: independent conditional tails; the tail of a
        // dithered distribution is the same block structure restarted
        let x = self.tail_draw(&self.theta, rng);
        let x_prime = self.tail_draw(&self.theta_prime, rng);
        (x, x_prime)
    }

    fn tail_draw<R: RngCore + ?Sized>(
        &self,
        side: &DitheredGeometric,
        rng: &mut R,
    ) -> u64 {
        let j = self.k + geometric_half_level(rng);
        side.split_block(j, rng)
    }
}

/// `n` i.i.d. pairs from the joint law.
pub fn draw_coupled(params: &CouplingParams, n: u64, seed: u64) -> CoupledSample {
    let sampler = PairSampler::new(params);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..n).map(|_| sampler.draw(&mut rng)).collect();
    CoupledSample {
        params: params.clone(),
        pairs,
    }
}

/// True when the sample covers `{1, ..., m+2k-1}` exactly.
///
/// Exact coverage forces every pair equal (the block's second symbol is
/// excluded, and everything below it is diagonal), so coverage alone is
/// checked and pair equality asserted.
pub fn is_pivotal(cs: &CoupledSample) -> bool {
    let a = cs.params.block_first();
    let mut seen = vec![false; a as usize + 1];
    let mut distinct = 0u64;
    for &(x, _) in &cs.pairs {
        if x < 1 || x > a {
            return false;
        }
        if !seen[x as usize] {
            seen[x as usize] = true;
            distinct += 1;
        }
    }
    let pivotal = distinct == a;
    if pivotal {
        assert!(
            cs.pairs.iter().all(|&(x, xp)| x == xp),
            "coverage of 1..={a} must force equal pairs"
        );
    }
    pivotal
}

/// Exact missing masses of the two marginal samples under their own
/// distributions.
pub fn coupled_missing_masses(cs: &CoupledSample) -> (f64, f64) {
    let (s, s_prime) = cs.marginal_summaries();
    let theta = crate::dist::DiscreteDist::Dithered(cs.params.theta_dist());
    let theta_prime = crate::dist::DiscreteDist::Dithered(cs.params.theta_prime_dist());
    (
        crate::estimators::missing_mass_true(&theta, &s)
            .expect("dithered support is infinite, missing mass is positive"),
        crate::estimators::missing_mass_true(&theta_prime, &s_prime)
            .expect("dithered support is infinite, missing mass is positive"),
    )
}

/// Monte Carlo estimate of the pivotal-event probability.
#[derive(Clone, Debug, Serialize)]
pub struct PivotalEstimate {
    pub p_hat: f64,
    /// 99% binomial confidence half-width.
    pub ci_halfwidth: f64,
    pub pivotal_count: u64,
    pub reps: u64,
    /// Replicate indices that hit the event; re-drawing them with
    /// [`pivotal_rep_seed`] reproduces the full coupled samples.
    pub pivotal_reps: Vec<u64>,
}

/// Seed of replicate `rep` in a [`estimate_pivotal_prob`] run.
pub fn pivotal_rep_seed(master: u64, k: u32, rep: u64) -> u64 {
    derive_seed(master, u64::from(k), rep)
}

/// Estimate `P(pivotal event)` at sample size `n` over `reps` replicates.
///
/// Replicates stream pairs with early exit (any symbol past the block's
/// first cell kills the event) and never materialize samples; results merge
/// across worker threads by summation, independent of scheduling.
pub fn estimate_pivotal_prob(
    params: &CouplingParams,
    n: u64,
    reps: u64,
    seed: u64,
) -> Result<PivotalEstimate> {
    if reps == 0 {
        return Err(Error::pre("estimate_pivotal_prob requires reps >= 1"));
    }
    let a = params.block_first();
    if a > 127 {
        return Err(Error::param(
            "pivotal scan uses a 128-bit coverage mask; k this large is far \
             beyond any simulable event probability",
        ));
    }
    let sampler = PairSampler::new(params);
    let full: u128 = if a == 127 {
        u128::MAX - 1
    } else {
        (1u128 << (a + 1)) - 2 // bits 1..=a
    };
    let k = params.k();
    let hits: Vec<u64> = (0..reps)
        .into_par_iter()
        .filter_map(|rep| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(pivotal_rep_seed(seed, k, rep));
            let mut mask: u128 = 0;
            for _ in 0..n {
                let (x, xp) = sampler.draw(&mut rng);
                if x > a {
                    return None;
                }
                debug_assert_eq!(x, xp, "pairs below the block are diagonal");
                mask |= 1u128 << x;
            }
            (mask == full).then_some(rep)
        })
        .collect();
    let mut pivotal_reps = hits;
    pivotal_reps.sort_unstable();
    let count = pivotal_reps.len() as u64;
    Ok(PivotalEstimate {
        p_hat: count as f64 / reps as f64,
        ci_halfwidth: binomial_ci99(count, reps),
        pivotal_count: count,
        reps,
        pivotal_reps,
    })
}
