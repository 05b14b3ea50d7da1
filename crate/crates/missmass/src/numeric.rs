//! Small numeric helpers shared across the crate.

use rand_core::RngCore;

/// Exact power of two as an `f64`, including the subnormal range.
///
/// Built from bits rather than `exp2` so that dyadic pmf values are exact
/// regardless of the platform libm.
pub(crate) fn pow2(e: i32) -> f64 {
    if e >= -1022 {
        if e > 1023 {
            return f64::INFINITY;
        }
        f64::from_bits(((e + 1023) as u64) << 52)
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074))
    } else {
        0.0
    }
}

/// Uniform draw on `[0, 1)` with 53-bit resolution.
pub(crate) fn unif53<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform draw on `(0, 1]`; used where `ln(u)` must stay finite.
pub(crate) fn unif53_open_low<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Geometric(1/2) level on {1, 2, ...}: position of the first set bit in a
/// uniform bit stream. Exact, no floating point involved.
pub(crate) fn geometric_half_level<R: RngCore + ?Sized>(rng: &mut R) -> u64 {
    let mut offset = 0u64;
    loop {
        let word = rng.next_u64();
        if word != 0 {
            return offset + u64::from(word.leading_zeros()) + 1;
        }
        offset += 64;
    }
}

/// Compensated (Kahan) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// z-score of the two-sided 99% normal confidence level.
pub(crate) const Z99: f64 = 2.575_829_303_548_900_4;

/// Half-width of a 99% binomial confidence interval for `successes/trials`.
///
/// Wald interval floored at `z^2/(2 trials)` so that zero observed successes
/// still yield a positive width; a single trial degenerates to 1.
pub(crate) fn binomial_ci99(successes: u64, trials: u64) -> f64 {
    if trials <= 1 {
        return 1.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let wald = Z99 * (p * (1.0 - p) / n).sqrt();
    wald.max(Z99 * Z99 / (2.0 * n))
}
