use num_integer::Integer;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{Interval, IntervalSum};

/// Terms summed directly before the integral tail bound takes over.
pub const ZETA_TERMS: u64 = 1_000_000;

/// `sum_{n > t} n^-s`, between the integrals of `x^-s` from `t + 1` and from `t`.
fn zeta_tail(s: Interval, t: u64) -> Interval {
    let one = Interval::ONE;
    let s_hi = Interval::point(s.hi);
    let s_lo = Interval::point(s.lo);
    let lower = Interval::from_u64(t + 1).pow(&(one - s_hi)) / (s_hi - one);
    let upper = Interval::from_u64(t).pow(&(one - s_lo)) / (s_lo - one);
    Interval::new(lower.lo.max(0.0), upper.hi)
}

/// `n^-s`
#[inline]
pub(crate) fn inv_pow(n: u64, s: Interval) -> Interval {
    if n == 1 {
        return Interval::ONE;
    }
    (-(Interval::from_u64(n).ln() * s)).exp()
}

/// Riemann zeta for real `s > 1`: `terms` summands plus an enclosed tail.
pub fn zeta_with_terms(s: Interval, terms: u64) -> Result<Interval> {
    if !(s.lo > 1.0) {
        return Err(Error::InvalidInput(format!("zeta needs s > 1, got {s}")));
    }
    let mut sum = IntervalSum::new();
    for n in 1..=terms.max(1) {
        sum.push(inv_pow(n, s));
    }
    Ok(sum.finish() + zeta_tail(s, terms.max(1)))
}

pub fn zeta(s: Interval) -> Result<Interval> {
    zeta_with_terms(s, ZETA_TERMS)
}

fn check_beta(beta: Interval) -> Result<()> {
    if !(beta.lo > 2.0) {
        return Err(Error::InvalidInput(format!("the ratio zeta(beta-1)/zeta(beta) needs beta > 2, got {beta}")));
    }
    Ok(())
}

/// `zeta(beta - 1) / zeta(beta)`, which is `sum phi(n) / n^beta`.
pub fn zeta_ratio(beta: Interval) -> Result<Interval> {
    check_beta(beta)?;
    let num = zeta(beta - Interval::ONE)?;
    let den = zeta(beta)?;
    Ok(num / den)
}

/// Euler's totient for `0 ..= n` by a sieve.
pub fn totients(n: usize) -> Vec<u32> {
    let mut phi: Vec<u32> = (0..=n as u32).collect();
    for p in 2..=n {
        if phi[p] == p as u32 {
            for k in (p..=n).step_by(p) {
                phi[k] -= phi[k] / p as u32;
            }
        }
    }
    phi
}

/// `sum_{n <= n_max} phi(n) / n^beta`.
pub fn totient_sum(beta: Interval, n_max: u64) -> Result<Interval> {
    check_beta(beta)?;
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let phi = totients(n_max as usize);
    let mut sum = IntervalSum::new();
    for n in 1..=n_max {
        sum.push(inv_pow(n, beta) * Interval::from_u64(phi[n as usize] as u64));
    }
    Ok(sum.finish())
}

/// `[0, T^(2-beta) / (beta-2)]`, which contains `sum_{n > T} phi(n) / n^beta`.
pub fn totient_tail(beta: Interval, n_max: u64) -> Interval {
    let two = Interval::point(2.0);
    let b = Interval::point(beta.lo);
    let up = Interval::from_u64(n_max).pow(&(two - b)) / (b - two);
    Interval::new(0.0, up.hi)
}

/// Coprime pairs of positive integers summing to `n`, counted one gcd at a time.
pub fn coprime_pair_count(n: u64) -> u64 {
    (1..n).filter(|&a| a.gcd(&(n - a)) == 1).count() as u64
}

/// Sum of `(a + b)^-beta` over coprime `a >= 0, b >= 1` with `a + b <= cutoff`,
/// plus an enclosure of the rest. The pairs are counted by brute force, not
/// through the totient.
pub fn coprime_pair_sum(beta: Interval, cutoff: u64) -> Result<Interval> {
    check_beta(beta)?;
    if cutoff == 0 {
        return Err(Error::InvalidInput("cutoff must be at least 1".into()));
    }
    // a = 0 only pairs with b = 1.
    let counts: Vec<u64> = (1..=cutoff)
        .into_par_iter()
        .map(|n| if n == 1 { 1 } else { coprime_pair_count(n) })
        .collect();
    let mut sum = IntervalSum::new();
    for (i, &c) in counts.iter().enumerate() {
        sum.push(inv_pow(i as u64 + 1, beta) * Interval::from_u64(c));
    }
    Ok(sum.finish() + totient_tail(beta, cutoff))
}
