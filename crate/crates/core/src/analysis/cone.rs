use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use serde::Serialize;

use super::zeta::{totient_sum, zeta_ratio};
use crate::error::{Error, Result};
use crate::numerics::{eval_linear_form, Interval, IntervalSum, RealScalar};

/// Lattice cone spanned by `v1 = (p1, q1)` and `v2 = (p2, q2)`, both strictly
/// on one side of the line `x = alpha y`.
///
/// With `e_i = |p_i - alpha q_i|` and `d_i = 1 / e_i`, the vectors are ordered
/// so that `d1 < d2`. The cone sum runs over `a v1 + b v2` for coprime
/// `a >= 0, b >= 1`; that half-open index set is the one whose sum of
/// `(a + b)^-beta` is exactly `zeta(beta-1)/zeta(beta)`.
#[derive(Clone, Debug, Serialize)]
pub struct Cone {
    pub v1: (i64, i64),
    pub v2: (i64, i64),
    pub e1: Interval,
    pub e2: Interval,
    pub d1: Interval,
    pub d2: Interval,
}

fn side(alpha: &RealScalar, v: (i64, i64)) -> Result<Ordering> {
    let (p, q) = v;
    if q == 0 {
        return Ok(p.cmp(&0));
    }
    // sign(p - alpha q) = sign(q) * sign(p/q - alpha)
    let o = alpha.cmp_rational(&BigRational::new(p.into(), q.into()))?.reverse();
    if o == Ordering::Equal {
        return Err(Error::ZeroForm(format!("({p}, {q}) lies on the line x = alpha y")));
    }
    Ok(if q > 0 { o } else { o.reverse() })
}

impl Cone {
    pub fn new(alpha: &RealScalar, a: (i64, i64), b: (i64, i64)) -> Result<Cone> {
        let det = a.0 as i128 * b.1 as i128 - a.1 as i128 * b.0 as i128;
        if det.abs() != 1 {
            return Err(Error::InvalidInput(format!("det({a:?}, {b:?}) = {det}, not unimodular")));
        }
        if side(alpha, a)? != side(alpha, b)? {
            return Err(Error::InvalidInput(format!("{a:?} and {b:?} straddle the line x = alpha y")));
        }
        let mut rel = 2f64.powi(-50);
        loop {
            let ea = eval_linear_form(alpha, &BigInt::from(a.0), &BigInt::from(a.1), rel)?.to_interval();
            let eb = eval_linear_form(alpha, &BigInt::from(b.0), &BigInt::from(b.1), rel)?.to_interval();
            // Larger e means smaller d.
            let (v1, v2, e1, e2) = if eb.certainly_lt(&ea) {
                (a, b, ea, eb)
            } else if ea.certainly_lt(&eb) {
                (b, a, eb, ea)
            } else if rel > 1e-300 {
                rel *= rel;
                continue;
            } else {
                return Err(Error::InvalidInput("degenerate cone: d1 = d2".into()));
            };
            return Ok(Cone { v1, v2, e1, e2, d1: Interval::ONE / e1, d2: Interval::ONE / e2 });
        }
    }
}

/// `(d1^beta, d2^beta) * zeta(beta-1)/zeta(beta)`.
pub fn cone_bounds(cone: &Cone, beta: Interval) -> Result<(Interval, Interval)> {
    let zr = zeta_ratio(beta)?;
    Ok(cone_bounds_with(cone, beta, zr))
}

pub fn cone_bounds_with(cone: &Cone, beta: Interval, zr: Interval) -> (Interval, Interval) {
    (cone.d1.pow(&beta) * zr, cone.d2.pow(&beta) * zr)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConeSum {
    /// Terms with `a + b <= cutoff`.
    pub partial: Interval,
    /// Encloses the whole cone sum.
    pub total: Interval,
}

/// Brute-force cone sum over coprime `a >= 0, b >= 1`, `a + b <= cutoff`.
pub fn cone_partial_sum(cone: &Cone, beta: Interval, cutoff: u64, zr: Interval) -> Result<ConeSum> {
    let mut sum = IntervalSum::new();
    for n in 1..=cutoff {
        for a in 0..n {
            let b = n - a;
            if a.gcd(&b) != 1 {
                continue;
            }
            let e = Interval::from_u64(a) * cone.e1 + Interval::from_u64(b) * cone.e2;
            sum.push((-(e.ln() * beta)).exp());
        }
    }
    let partial = sum.finish();
    // Each later term lies between d1^beta and d2^beta times (a+b)^-beta, and
    // those weights sum to zr minus the totient partial sum.
    let rest = zr - totient_sum(beta, cutoff)?;
    let rest = Interval::new(rest.lo.max(0.0), rest.hi);
    let lo_w = cone.d1.pow(&beta) * rest;
    let hi_w = cone.d2.pow(&beta) * rest;
    let total = partial + Interval::new(lo_w.lo, hi_w.hi);
    Ok(ConeSum { partial, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_cone_is_bracketed() {
        let phi = RealScalar::surd(1, 2, 5).unwrap();
        let beta = Interval::point(3.0);
        let zr = zeta_ratio(beta).unwrap();
        for (a, b) in [((1, 1), (3, 2)), ((2, 1), (5, 3))] {
            let cone = Cone::new(&phi, a, b).unwrap();
            assert!(cone.d1.certainly_lt(&cone.d2));
            let (lo, hi) = cone_bounds_with(&cone, beta, zr);
            let s = cone_partial_sum(&cone, beta, 200, zr).unwrap();
            assert!(lo.hi < s.total.lo, "{lo} vs {}", s.total);
            assert!(s.total.hi < hi.lo, "{} vs {hi}", s.total);
        }
    }

    #[test]
    fn straddling_and_singular_cones_rejected() {
        let phi = RealScalar::surd(1, 2, 5).unwrap();
        // 1/1 < phi < 2/1
        assert!(Cone::new(&phi, (1, 1), (2, 1)).is_err());
        assert!(Cone::new(&phi, (2, 1), (4, 2)).is_err());
    }
}
