use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::interval::{down, ldexp, up, Interval};

/// Closed interval with exact rational endpoints.
///
/// Every operation is exact except `round_outward`, which trades size for
/// width and always rounds away from the enclosed value.
#[derive(Clone, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Enclosure{}", self.to_interval())
    }
}

pub fn rat_bits(r: &BigRational) -> u64 {
    r.numer().bits() + r.denom().bits()
}

/// Floor of `r * 2^k` as an integer.
fn floor_scaled(r: &BigRational, k: i64) -> BigInt {
    let (n, d) = (r.numer().clone(), r.denom().clone());
    if k >= 0 {
        (n << k as usize).div_floor(&d)
    } else {
        n.div_floor(&(d << (-k) as usize))
    }
}

fn dyadic(m: BigInt, k: i64) -> BigRational {
    if k >= 0 {
        BigRational::new(m, BigInt::one() << k as usize)
    } else {
        BigRational::from_integer(m << (-k) as usize)
    }
}

/// Largest dyadic with `prec` significant bits that is `<= r`.
pub fn round_down(r: &BigRational, prec: u64) -> BigRational {
    if r.is_zero() || rat_bits(r) <= 2 * prec {
        return r.clone();
    }
    let mag = r.numer().bits() as i64 - r.denom().bits() as i64;
    let k = prec as i64 - mag;
    dyadic(floor_scaled(r, k), k)
}

pub fn round_up(r: &BigRational, prec: u64) -> BigRational {
    -round_down(&-r, prec)
}

/// Outward double bounds of an exact rational.
pub fn rat_to_interval(r: &BigRational) -> Interval {
    if r.is_zero() {
        return Interval::ZERO;
    }
    let neg = r.is_negative();
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    let k = n.bits() as i64 - d.bits() as i64;
    let shift = 64 - k;
    let t = if shift >= 0 { (n << shift as usize) / d } else { n / (d << (-shift) as usize) };
    let t = t.to_u128().expect("scaled quotient fits in 128 bits");
    let lo = down(t as f64);
    let hi = up((t + 1) as f64);
    let lo = ldexp(lo, -shift);
    let hi = ldexp(hi, -shift);
    let lo = if lo.is_normal() { lo } else { down(lo).max(0.0) };
    let hi = if hi.is_normal() { hi } else { up(hi) };
    if neg {
        Interval::new(-hi, -lo)
    } else {
        Interval::new(lo, hi)
    }
}

/// `ln n` for an arbitrarily large positive integer.
pub fn ln_biguint(n: &BigUint) -> Interval {
    assert!(!n.is_zero(), "logarithm of zero");
    let b = n.bits();
    if b <= 53 {
        return Interval::point(n.to_u64().unwrap() as f64).ln();
    }
    let shift = b.saturating_sub(64);
    let t: u64 = (n >> shift as usize).to_u64().unwrap();
    let top = Interval::new(down(t as f64), up(t as f64 + 1.0)).ln();
    top + Interval::ln2() * Interval::point(shift as f64)
}

/// `ln r` for a positive rational.
pub fn ln_rational(r: &BigRational) -> Interval {
    assert!(r.is_positive(), "logarithm of a nonpositive rational");
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

impl Enclosure {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        Enclosure { lo, hi }
    }

    pub fn point(r: BigRational) -> Self {
        Enclosure { lo: r.clone(), hi: r }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Enclosure::point(BigRational::from_integer(n.into()))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> BigRational {
        (&self.lo + &self.hi) / BigInt::from(2)
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        &self.lo <= r && r <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Sign when certain: `Some(Greater)` if strictly positive, and so on.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Magnitude of the smaller endpoint, zero if the enclosure straddles 0.
    pub fn min_abs(&self) -> BigRational {
        if self.contains_zero() {
            BigRational::zero()
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn intersect(&self, other: &Enclosure) -> Option<Enclosure> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then(|| Enclosure::new(lo, hi))
    }

    pub fn certainly_lt(&self, other: &Enclosure) -> bool {
        self.hi < other.lo
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure::new(-&self.hi, -&self.lo)
    }

    pub fn add(&self, o: &Enclosure) -> Enclosure {
        Enclosure::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &Enclosure) -> Enclosure {
        Enclosure::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn add_rat(&self, r: &BigRational) -> Enclosure {
        Enclosure::new(&self.lo + r, &self.hi + r)
    }

    pub fn mul_int(&self, k: &BigInt) -> Enclosure {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if k.is_negative() {
            Enclosure::new(b, a)
        } else {
            Enclosure::new(a, b)
        }
    }

    pub fn mul(&self, o: &Enclosure) -> Enclosure {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Enclosure::new(lo, hi)
    }

    pub fn abs(&self) -> Enclosure {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Enclosure::new(BigRational::zero(), (-&self.lo).max(self.hi.clone()))
        }
    }

    /// Reciprocal; `None` when the enclosure contains zero.
    pub fn recip(&self) -> Option<Enclosure> {
        if self.contains_zero() {
            return None;
        }
        Some(Enclosure::new(self.hi.recip(), self.lo.recip()))
    }

    pub fn div(&self, o: &Enclosure) -> Option<Enclosure> {
        o.recip().map(|r| self.mul(&r))
    }

    /// Replace endpoints by nearby dyadics carrying `prec` significant bits,
    /// rounding outward. Keeps operand sizes bounded in long computations.
    pub fn round_outward(&self, prec: u64) -> Enclosure {
        Enclosure::new(round_down(&self.lo, prec), round_up(&self.hi, prec))
    }

    pub fn to_interval(&self) -> Interval {
        let a = rat_to_interval(&self.lo);
        let b = rat_to_interval(&self.hi);
        Interval::new(a.lo, b.hi)
    }

    /// Natural log of a strictly positive enclosure.
    pub fn ln(&self) -> Option<Interval> {
        if !self.lo.is_positive() {
            return None;
        }
        Some(Interval::new(ln_rational(&self.lo).lo, ln_rational(&self.hi).hi))
    }

    /// log2 of the relative width, `-inf` for points. Rough, for loop control.
    pub fn rel_width_log2(&self) -> f64 {
        if self.is_point() {
            return f64::NEG_INFINITY;
        }
        let m = self.min_abs();
        if m.is_zero() {
            return f64::INFINITY;
        }
        let w = self.width() / m;
        w.numer().bits() as f64 - w.denom().bits() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rat_to_interval_brackets() {
        for (n, d) in [(1, 3), (-7, 5), (22, 7), (1, 1 << 40), (123456789, 1)] {
            let r = rat(n, d);
            let i = rat_to_interval(&r);
            let f = n as f64 / d as f64;
            assert!(i.lo <= f && f <= i.hi, "{n}/{d} -> {i}");
            assert!(i.width() < 1e-14 * f.abs().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn rounding_is_directed() {
        let r = rat(1, 3);
        let lo = round_down(&(&r * &r * &r * &r * &r * &r), 10);
        let hi = round_up(&(&r * &r * &r * &r * &r * &r), 10);
        let exact = rat(1, 729);
        assert!(lo <= exact && exact <= hi);
    }

    #[test]
    fn ln_of_huge_integer() {
        let n = BigUint::from(10u32).pow(1000);
        let l = ln_biguint(&n);
        let want = 1000.0 * std::f64::consts::LN_10;
        assert!((l.mid() - want).abs() < 1e-9);
        assert!(l.width() < 1e-9);
    }

    #[test]
    fn recip_of_straddling_is_none() {
        let e = Enclosure::new(rat(-1, 2), rat(1, 2));
        assert!(e.recip().is_none());
        let e = Enclosure::new(rat(1, 4), rat(1, 2));
        let r = e.recip().unwrap();
        assert_eq!(r.lo, rat(2, 1));
        assert_eq!(r.hi, rat(4, 1));
    }
}
