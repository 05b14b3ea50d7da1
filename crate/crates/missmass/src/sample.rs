//! Count summaries of i.i.d. samples over the positive integers.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::{Error, Result};

/// Multiset of observations, stored as symbol -> count.
///
/// Everything the estimators consume: the counts determine the empirical
/// distribution, the singleton count, and the set of observed symbols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleSummary {
    counts: BTreeMap<u64, u64>,
    n: u64,
}

impl SampleSummary {
    /// Summarize a stream of draws.
    pub fn from_draws<I: IntoIterator<Item = u64>>(draws: I) -> Self {
        let mut acc = SampleAccumulator::new();
        for x in draws {
            acc.observe(x);
        }
        acc.finish()
    }

    /// Build from an explicit count table. Symbols and counts must be >= 1.
    pub fn from_counts(counts: BTreeMap<u64, u64>) -> Result<Self> {
        let mut n: u64 = 0;
        for (&sym, &c) in &counts {
            if sym == 0 {
                return Err(Error::param("symbols must be positive integers"));
            }
            if c == 0 {
                return Err(Error::param(format!("symbol {sym} has count 0")));
            }
            n = n
                .checked_add(c)
                .ok_or_else(|| Error::param("total count overflows u64"))?;
        }
        Ok(Self { counts, n })
    }

    /// Total number of observations.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of distinct observed symbols.
    pub fn distinct(&self) -> u64 {
        self.counts.len() as u64
    }

    /// Number of symbols observed exactly once.
    pub fn singletons(&self) -> u64 {
        self.counts.values().filter(|&&c| c == 1).count() as u64
    }

    /// Count of a given symbol (0 if unobserved).
    pub fn count(&self, symbol: u64) -> u64 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    /// Largest observed symbol.
    pub fn max_symbol(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    /// Iterate `(symbol, count)` in increasing symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    /// Sum of all observations, exact in 128 bits.
    pub fn symbol_sum(&self) -> u128 {
        self.counts
            .iter()
            .map(|(&s, &c)| u128::from(s) * u128::from(c))
            .sum()
    }

    /// CSV rendering with header `symbol,count`, rows in symbol order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,count\n");
        for (s, c) in self.iter() {
            out.push_str(&format!("{s},{c}\n"));
        }
        out
    }
}

/// Streaming accumulator: dense array for small symbols, map for the rest.
///
/// Sampling loops are the hot path of every Monte Carlo run; the dense lane
/// keeps them free of map lookups for the light-tailed families.
pub(crate) struct SampleAccumulator {
    dense: Vec<u64>,
    sparse: BTreeMap<u64, u64>,
    n: u64,
}

const DENSE_LIMIT: usize = 4096;

impl SampleAccumulator {
    pub fn new() -> Self {
        Self {
            dense: vec![0; DENSE_LIMIT],
            sparse: BTreeMap::new(),
            n: 0,
        }
    }

    #[inline]
    pub fn observe(&mut self, x: u64) {
        debug_assert!(x >= 1, "symbols are positive integers");
        if (x as usize) < DENSE_LIMIT {
            self.dense[x as usize] += 1;
        } else {
            *self.sparse.entry(x).or_insert(0) += 1;
        }
        self.n += 1;
    }

    pub fn finish(self) -> SampleSummary {
        let mut counts = self.sparse;
        for (sym, &c) in self.dense.iter().enumerate() {
            if c > 0 {
                counts.insert(sym as u64, c);
            }
        }
        SampleSummary { counts, n: self.n }
    }
}
