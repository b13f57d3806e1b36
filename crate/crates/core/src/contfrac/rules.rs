use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::{ln_biguint, Interval};

/// What a rule may look at when producing the next quotient.
pub struct History<'a> {
    pub quotients: &'a [BigUint],
    /// `q_{N_j}` for every computed `j`.
    pub q: &'a [BigUint],
    /// `N_j = a_0 + ... + a_j`.
    pub n: &'a [BigUint],
}

/// A generator of partial quotients.
pub trait CfRule: Send + Sync + fmt::Debug {
    /// The quotient `a_m`, given `a_0 .. a_{m-1}`.
    fn quotient(&self, m: usize, hist: &History<'_>, digit_cap: u64) -> Result<BigUint>;

    /// `ln a_m` without building `a_m`; lets callers step one quotient past
    /// the digit cap.
    fn ln_quotient(&self, _m: usize, _hist: &History<'_>) -> Option<Interval> {
        None
    }

    fn name(&self) -> String;
}

/// `e - 1 = [1; 1, 2, 1, 1, 4, 1, 1, 6, ...]`.
#[derive(Debug, Clone, Copy)]
pub struct EMinusOne;

impl CfRule for EMinusOne {
    fn quotient(&self, m: usize, _hist: &History<'_>, _cap: u64) -> Result<BigUint> {
        Ok(if m % 3 == 2 { BigUint::from(2 * (m / 3 + 1)) } else { BigUint::one() })
    }
    fn name(&self) -> String {
        "e_minus_1".into()
    }
}

/// Every quotient equal to `c`.
#[derive(Debug, Clone)]
pub struct Constant(pub BigUint);

impl CfRule for Constant {
    fn quotient(&self, _m: usize, _hist: &History<'_>, _cap: u64) -> Result<BigUint> {
        Ok(self.0.clone())
    }
    fn name(&self) -> String {
        format!("constant_{}", self.0)
    }
}

/// Exponent schedule for [`PowerRule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    /// `f(m) = m`
    Index,
    /// `f(m) = a_0 + ... + a_m`
    Checkpoint,
}

/// Seeds `a_0, a_1`, then `a_{m+1} = q_{N_m}^{f(m)}` for `m >= 1`.
#[derive(Debug, Clone)]
pub struct PowerRule {
    pub seeds: Vec<BigUint>,
    pub exponent: Exponent,
}

impl PowerRule {
    pub fn new(exponent: Exponent) -> Self {
        PowerRule { seeds: vec![BigUint::one(), BigUint::from(2u32)], exponent }
    }

    fn exponent_at(&self, m: usize, hist: &History<'_>) -> BigUint {
        match self.exponent {
            Exponent::Index => BigUint::from(m),
            Exponent::Checkpoint => hist.n[m].clone(),
        }
    }
}

/// Lower bound on the decimal digit count of `q^e`.
fn min_digits(q: &BigUint, e: &BigUint) -> f64 {
    if q.is_zero() || q.is_one() {
        return 1.0;
    }
    e.to_f64().unwrap_or(f64::INFINITY) * (q.bits() - 1) as f64 * std::f64::consts::LOG10_2
}

impl CfRule for PowerRule {
    fn quotient(&self, m: usize, hist: &History<'_>, digit_cap: u64) -> Result<BigUint> {
        if m < self.seeds.len() {
            return Ok(self.seeds[m].clone());
        }
        let j = m - 1;
        let q = &hist.q[j];
        let e = self.exponent_at(j, hist);
        if min_digits(q, &e) > digit_cap as f64 {
            return Err(Error::CapExceeded(format!(
                "a_{m} = q_{{N_{j}}}^{e} has more than {digit_cap} digits"
            )));
        }
        let e32 = e.to_u32().ok_or_else(|| Error::CapExceeded(format!("exponent {e} too large")))?;
        let a = q.pow(e32);
        if (a.bits() as f64) * std::f64::consts::LOG10_2 > digit_cap as f64 + 1.0 {
            return Err(Error::CapExceeded(format!("a_{m} has more than {digit_cap} digits")));
        }
        Ok(a)
    }

    fn ln_quotient(&self, m: usize, hist: &History<'_>) -> Option<Interval> {
        if m < self.seeds.len() {
            return Some(ln_biguint(&self.seeds[m]));
        }
        let j = m - 1;
        let q = hist.q.get(j)?;
        let e = self.exponent_at(j, hist);
        let ef = if e.bits() <= 53 {
            Interval::point(e.to_f64()?)
        } else {
            ln_biguint(&e).exp()
        };
        Some(ef * ln_biguint(q))
    }

    fn name(&self) -> String {
        match self.exponent {
            Exponent::Index => "thm42".into(),
            Exponent::Checkpoint => "thm43".into(),
        }
    }
}
