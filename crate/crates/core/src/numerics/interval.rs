use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Closed interval of doubles, rounded outward after every primitive.
///
/// Arithmetic results are pushed out by one ulp on each side; library
/// transcendental calls (`ln`, `exp`, `expm1`) are pushed out by two, which
/// covers any libm that is faithful to within one ulp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[inline]
pub(crate) fn down(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x.next_down()
    }
}

#[inline]
pub(crate) fn up(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.next_up()
    }
}

/// `x * 2^e`, exact whenever the result is a normal double.
pub(crate) fn ldexp(mut x: f64, e: i64) -> f64 {
    let mut e = e.clamp(-4000, 4000);
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Interval certainly containing `ln 2`.
    pub fn ln2() -> Self {
        Interval::new(down(std::f64::consts::LN_2), up(std::f64::consts::LN_2))
    }

    /// Bounds for an integer that might not be exactly representable.
    pub fn from_u64(n: u64) -> Self {
        let f = n as f64;
        if f as u64 == n && n < (1u64 << 53) {
            Interval::point(f)
        } else {
            Interval::new(down(f), up(f))
        }
    }

    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            return if self.lo == self.hi { self.lo } else { 0.5 * self.lo + 0.5 * self.hi };
        }
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.intersect(other).is_some()
    }

    /// True only when every point of `self` is below every point of `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval::new(0.0, (-self.lo).max(self.hi))
        }
    }

    /// Widen by `k` ulps on each side.
    pub fn widen(&self, k: u32) -> Interval {
        let (mut lo, mut hi) = (self.lo, self.hi);
        for _ in 0..k {
            lo = down(lo);
            hi = up(hi);
        }
        Interval::new(lo, hi)
    }

    /// Natural logarithm; nonpositive lower ends map to `-inf`.
    pub fn ln(&self) -> Interval {
        let lo = if self.lo <= 0.0 { f64::NEG_INFINITY } else { down(down(self.lo.ln())) };
        let hi = if self.hi <= 0.0 { f64::NEG_INFINITY } else { up(up(self.hi.ln())) };
        Interval::new(lo, hi)
    }

    pub fn exp(&self) -> Interval {
        let lo = down(down(self.lo.exp())).max(0.0);
        let hi = up(up(self.hi.exp()));
        Interval::new(lo, hi)
    }

    pub fn expm1(&self) -> Interval {
        let lo = down(down(self.lo.exp_m1())).max(-1.0);
        let hi = up(up(self.hi.exp_m1()));
        Interval::new(lo, hi)
    }

    pub fn sqrt(&self) -> Interval {
        let lo = if self.lo <= 0.0 { 0.0 } else { down(self.lo.sqrt()).max(0.0) };
        let hi = up(self.hi.max(0.0).sqrt());
        Interval::new(lo, hi)
    }

    /// `self^e` for a positive base, via `exp(e * ln self)`.
    pub fn pow(&self, e: &Interval) -> Interval {
        (self.ln() * *e).exp()
    }

    /// Scale by an exact power of two.
    pub fn ldexp(&self, e: i64) -> Interval {
        let lo = ldexp(self.lo, e);
        let hi = ldexp(self.hi, e);
        // Exact unless the result left the normal range.
        let lo = if lo != 0.0 && lo.is_normal() { lo } else { down(lo) };
        let hi = if hi != 0.0 && hi.is_normal() { hi } else { up(hi) };
        Interval::new(lo, hi)
    }

    pub fn min_f(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.min(other.hi))
    }

    pub fn max_f(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.max(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(down(self.lo + o.lo), up(self.hi + o.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::new(down(self.lo - o.hi), up(self.hi - o.lo))
    }
}

fn mul_corner(a: f64, b: f64) -> f64 {
    // 0 * inf counts as 0 for enclosure purposes.
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        if self.lo == self.hi && o.lo == o.hi {
            let p = self.lo * o.lo;
            if p.is_finite() && self.lo.mul_add(o.lo, -p) == 0.0 {
                return Interval::point(p);
            }
        }
        let c = [
            mul_corner(self.lo, o.lo),
            mul_corner(self.lo, o.hi),
            mul_corner(self.hi, o.lo),
            mul_corner(self.hi, o.hi),
        ];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exact = self.lo == self.hi && o.lo == o.hi && lo == 0.0;
        if exact {
            return Interval::point(0.0);
        }
        Interval::new(down(lo), up(hi))
    }
}

impl Div for Interval {
    type Output = Interval;
    /// Division by an interval containing zero yields the whole line.
    fn div(self, o: Interval) -> Interval {
        if o.contains_zero() {
            return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(down(lo), up(hi))
    }
}

/// Running sum of intervals with a single a-posteriori rounding bound.
///
/// Plain recursive summation of `n` terms errs by at most
/// `(n-1) u / (1 - (n-1) u) * sum |x_i|`; we add that once at the end instead
/// of rounding outward on every addition. The result is independent of
/// everything except the order of `push` calls.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntervalSum {
    lo: f64,
    hi: f64,
    abs: f64,
    n: u64,
}

impl IntervalSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: Interval) {
        self.lo += x.lo;
        self.hi += x.hi;
        self.abs += x.lo.abs().max(x.hi.abs());
        self.n += 1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn finish(&self) -> Interval {
        if self.n <= 1 {
            return Interval::new(self.lo, self.hi);
        }
        let u = f64::EPSILON / 2.0;
        let k = (self.n - 1) as f64;
        let gamma = up(k * u / (1.0 - k * u));
        let err = up(up(gamma * self.abs) * (1.0 + 4.0 * u));
        Interval::new(down(self.lo - err), up(self.hi + err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_contains_exact_results() {
        let a = Interval::point(0.1);
        let b = Interval::point(0.2);
        let s = a + b;
        assert!(s.contains(0.30000000000000004));
        assert!(s.lo < s.hi);
        let p = Interval::new(-1.0, 2.0) * Interval::new(3.0, 4.0);
        assert!(p.lo <= -4.0 && p.hi >= 8.0);
    }

    #[test]
    fn ln_exp_round_trip_encloses() {
        let x = Interval::point(7.0);
        let y = x.ln().exp();
        assert!(y.contains(7.0));
        assert!(Interval::point(1.0).ln().contains(0.0));
    }

    #[test]
    fn division_by_zero_interval_is_entire() {
        let q = Interval::ONE / Interval::new(-1.0, 1.0);
        assert!(q.lo.is_infinite() && q.hi.is_infinite());
    }

    #[test]
    fn ldexp_handles_extremes() {
        assert_eq!(ldexp(1.0, 10), 1024.0);
        assert_eq!(ldexp(1.0, 5000), f64::INFINITY);
        assert_eq!(ldexp(1.0, -5000), 0.0);
        let t = Interval::point(1.0).ldexp(-5000);
        assert!(t.lo <= 0.0 && t.hi > 0.0);
    }

    #[test]
    fn interval_sum_bounds_are_sound() {
        let mut s = IntervalSum::new();
        for _ in 0..10 {
            s.push(Interval::point(0.1));
        }
        let r = s.finish();
        assert!(r.contains(1.0));
        assert!(r.width() < 1e-14);
    }
}
