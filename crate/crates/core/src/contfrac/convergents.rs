use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::CFExpansion;
use crate::error::{Error, Result};
use crate::numerics::{eval_linear_form, precision_cap, Enclosure, Interval, RealScalar};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergentRow {
    pub m: usize,
    #[serde(serialize_with = "as_string")]
    pub a: BigUint,
    #[serde(serialize_with = "as_string")]
    pub p: BigUint,
    #[serde(serialize_with = "as_string")]
    pub q: BigUint,
    /// `N_m = a_0 + ... + a_m`
    #[serde(serialize_with = "as_string")]
    pub n: BigUint,
}

pub(crate) fn as_string<T: std::fmt::Display, S: serde::Serializer>(
    x: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConvergentTable {
    pub rows: Vec<ConvergentRow>,
}

impl ConvergentTable {
    /// Recurrence, unimodularity and strictly increasing `N_m`.
    pub fn check_invariants(&self) -> bool {
        let r = &self.rows;
        for i in 0..r.len() {
            let (pm1, qm1, pm2, qm2) = match i {
                0 => (BigUint::one(), BigUint::zero(), BigUint::zero(), BigUint::one()),
                1 => (r[0].p.clone(), r[0].q.clone(), BigUint::one(), BigUint::zero()),
                _ => (r[i - 1].p.clone(), r[i - 1].q.clone(), r[i - 2].p.clone(), r[i - 2].q.clone()),
            };
            if r[i].p != &r[i].a * &pm1 + &pm2 || r[i].q != &r[i].a * &qm1 + &qm2 {
                return false;
            }
            let det = BigInt::from(&r[i].p * &qm1) - BigInt::from(&pm1 * &r[i].q);
            if det != BigInt::one() && det != -BigInt::one() {
                return false;
            }
            if i > 0 && r[i].n <= r[i - 1].n {
                return false;
            }
        }
        true
    }
}

/// Rows `m = 0 ..= m_max` of convergents `p_m / q_m` with checkpoints `N_m`.
pub fn convergents(cf: &CFExpansion, m_max: usize) -> Result<ConvergentTable> {
    let mut rows = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let (a, p, q, n) = cf.row(m)?;
        rows.push(ConvergentRow { m, a, p, q, n });
    }
    Ok(ConvergentTable { rows })
}

/// `p_N / q_N = [a_0; a_1, ..., a_m, k]` with `N = N_m + k`, `0 <= k < a_{m+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SecondaryConvergent {
    #[serde(serialize_with = "as_string")]
    pub n: BigUint,
    pub m: usize,
    #[serde(serialize_with = "as_string")]
    pub k: BigUint,
    #[serde(serialize_with = "as_string")]
    pub p: BigUint,
    #[serde(serialize_with = "as_string")]
    pub q: BigUint,
}

/// The secondary convergent at index `n`. At `k = 0` it is the `m`-th
/// convergent itself.
pub fn secondary_convergent(cf: &CFExpansion, n: impl Into<BigUint>) -> Result<SecondaryConvergent> {
    let n: BigUint = n.into();
    let (a0, ..) = cf.row(0)?;
    if n < a0 {
        return Err(Error::InvalidInput(format!("N = {n} is below the first checkpoint N_0 = {a0}")));
    }
    let mut m = 0;
    loop {
        let (_, p, q, n_m) = cf.row(m)?;
        if n == n_m {
            return Ok(SecondaryConvergent { n, m, k: BigUint::zero(), p, q });
        }
        let next = match cf.row(m + 1) {
            Ok(r) => r,
            Err(Error::Exhausted(_)) if cf.is_finite() => {
                return Err(Error::Exhausted(format!("N = {n} lies past the end of a finite expansion")))
            }
            Err(e) => return Err(e),
        };
        if n < next.3 {
            let k = &n - &n_m;
            let (pp, qp) = if m == 0 {
                (BigUint::one(), BigUint::zero())
            } else {
                let (_, pp, qp, _) = cf.row(m - 1)?;
                (pp, qp)
            };
            return Ok(SecondaryConvergent { p: &k * &p + pp, q: &k * &q + qp, n, m, k });
        }
        m += 1;
    }
}

/// `d_N = 1 / |p_N - alpha q_N|` with its logarithm.
#[derive(Clone, Debug)]
pub struct DiophantineDistance {
    pub conv: SecondaryConvergent,
    /// `|p_N - alpha q_N|`
    pub form: Enclosure,
    pub d: Enclosure,
    pub ln_d: Interval,
}

pub fn diophantine_distance(alpha: &RealScalar, cf: &CFExpansion, n: impl Into<BigUint>) -> Result<DiophantineDistance> {
    diophantine_distance_with(alpha, cf, n, 2f64.powi(-20))
}

/// As [`diophantine_distance`] with an explicit relative width for `d_N`.
pub fn diophantine_distance_with(
    alpha: &RealScalar,
    cf: &CFExpansion,
    n: impl Into<BigUint>,
    rel_width: f64,
) -> Result<DiophantineDistance> {
    let conv = secondary_convergent(cf, n)?;
    distance_of(alpha, conv, rel_width)
}

fn distance_of(alpha: &RealScalar, conv: SecondaryConvergent, rel_width: f64) -> Result<DiophantineDistance> {
    let f = eval_linear_form(alpha, &BigInt::from(conv.p.clone()), &BigInt::from(conv.q.clone()), rel_width / 4.0)?;
    let form = f.enclosure().clone();
    let d = form.recip().ok_or_else(|| Error::ZeroForm(format!("p/q = {}/{}", conv.p, conv.q)))?;
    let ln = form.ln().ok_or_else(|| Error::ZeroForm(format!("p/q = {}/{}", conv.p, conv.q)))?;
    Ok(DiophantineDistance { conv, form, d, ln_d: -ln })
}

/// Outcome of comparing two refinable enclosures.
fn certified_less(
    alpha: &RealScalar,
    x: &SecondaryConvergent,
    y: &SecondaryConvergent,
) -> Result<(bool, Interval, Interval)> {
    let mut rel = 2f64.powi(-30);
    loop {
        let dx = distance_of(alpha, x.clone(), rel)?;
        let dy = distance_of(alpha, y.clone(), rel)?;
        if dx.d.certainly_lt(&dy.d) {
            return Ok((true, dx.d.to_interval(), dy.d.to_interval()));
        }
        if dy.d.hi <= dx.d.lo {
            return Ok((false, dx.d.to_interval(), dy.d.to_interval()));
        }
        rel = rel * rel;
        if rel == 0.0 || -rel.log2() > precision_cap() as f64 {
            return Err(Error::PrecisionExhausted(format!(
                "cannot order d at N = {} and N = {}",
                x.n, y.n
            )));
        }
    }
}

/// The chain `d_{N_{m-1}} < d_{N_m+1} < ... < d_{N_m+a_{m+1}-1} < d_{N_m}`.
#[derive(Clone, Debug, Serialize)]
pub struct DChain {
    pub m: usize,
    pub indices: Vec<String>,
    pub values: Vec<Interval>,
    pub holds: bool,
}

/// Longest chain [`d_chain_check`] will walk.
pub const MAX_CHAIN: u64 = 100_000;

pub fn d_chain_check(alpha: &RealScalar, cf: &CFExpansion, m: usize) -> Result<DChain> {
    if m == 0 {
        return Err(Error::InvalidInput("the chain needs m >= 1".into()));
    }
    let (_, _, _, n_prev) = cf.row(m - 1)?;
    let (_, _, _, n_m) = cf.row(m)?;
    let (a_next, ..) = cf.row(m + 1)?;
    let a = a_next.to_u64().filter(|&a| a <= MAX_CHAIN).ok_or_else(|| {
        Error::CapExceeded(format!("chain of length a_{} = {a_next} is too long", m + 1))
    })?;
    let mut idx: Vec<BigUint> = vec![n_prev];
    for k in 1..a {
        idx.push(&n_m + k);
    }
    idx.push(n_m);
    let convs: Vec<SecondaryConvergent> =
        idx.iter().map(|n| secondary_convergent(cf, n.clone())).collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(convs.len());
    let mut holds = true;
    for w in convs.windows(2) {
        let (ok, vx, vy) = certified_less(alpha, &w[0], &w[1])?;
        if values.is_empty() {
            values.push(vx);
        }
        values.push(vy);
        holds &= ok;
    }
    Ok(DChain { m, indices: idx.iter().map(|n| n.to_string()).collect(), values, holds })
}

/// Certifies `a_{m+1} q_{N_m} <= d_{N_m} <= (a_{m+1} + 2) q_{N_m}`.
pub fn bounds_check(alpha: &RealScalar, cf: &CFExpansion, m: usize) -> Result<bool> {
    let (_, p, q, n_m) = cf.row(m)?;
    let (a, ..) = cf.row(m + 1)?;
    let lower = BigRational::from_integer(BigInt::from(&a * &q));
    let upper = BigRational::from_integer(BigInt::from((&a + 2u32) * &q));
    let conv = SecondaryConvergent { n: n_m, m, k: BigUint::zero(), p, q };
    let mut rel = 2f64.powi(-30);
    loop {
        let d = distance_of(alpha, conv.clone(), rel)?.d;
        if d.hi < lower || d.lo > upper {
            return Ok(false);
        }
        if d.lo >= lower && d.hi <= upper {
            return Ok(true);
        }
        rel = rel * rel;
        if rel == 0.0 || -rel.log2() > precision_cap() as f64 {
            return Err(Error::PrecisionExhausted(format!("bounds at m = {m} undecided")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> (RealScalar, CFExpansion) {
        (RealScalar::surd(1, 2, 5).unwrap(), CFExpansion::golden())
    }

    #[test]
    fn fibonacci_denominators() {
        let t = convergents(&CFExpansion::golden(), 30).unwrap();
        let (mut a, mut b) = (BigUint::one(), BigUint::one());
        for row in &t.rows {
            assert_eq!(row.q, a);
            assert_eq!(row.n, BigUint::from(row.m + 1));
            let c = &a + &b;
            a = b;
            b = c;
        }
        assert!(t.check_invariants());
    }

    #[test]
    fn sqrt2_convergents() {
        let cf = CFExpansion::from_surd(&0.into(), &1.into(), &2u32.into()).unwrap();
        let t = convergents(&cf, 3).unwrap();
        let pq: Vec<(u64, u64)> = t.rows.iter().map(|r| (r.p.to_u64().unwrap(), r.q.to_u64().unwrap())).collect();
        assert_eq!(pq, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        let s = secondary_convergent(&cf, 3u32).unwrap();
        assert_eq!((s.p, s.q, s.m), (3u32.into(), 2u32.into(), 1));
    }

    #[test]
    fn finite_table_errors_past_end() {
        let cf = CFExpansion::from_rational(&7.into(), &3.into()).unwrap();
        let t = convergents(&cf, 1).unwrap();
        assert_eq!((t.rows[1].p.clone(), t.rows[1].q.clone()), (7u32.into(), 3u32.into()));
        assert!(convergents(&cf, 2).is_err());
    }

    #[test]
    fn below_first_checkpoint() {
        let cf = CFExpansion::from_rational(&22.into(), &7.into()).unwrap();
        assert!(matches!(secondary_convergent(&cf, 2u32), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn distances() {
        let (phi, cf) = golden();
        // 2/1 is the convergent at N = 2.
        let d = diophantine_distance(&phi, &cf, 2u32).unwrap();
        assert_eq!((d.conv.p.clone(), d.conv.q.clone()), (2u32.into(), 1u32.into()));
        assert!((d.d.to_interval().mid() - 2.618_033_988_749_895).abs() < 1e-5);
        let s2 = RealScalar::surd(0, 1, 2).unwrap();
        let cf2 = CFExpansion::from_surd(&0.into(), &1.into(), &2u32.into()).unwrap();
        let d = diophantine_distance(&s2, &cf2, 3u32).unwrap();
        assert!((d.d.to_interval().mid() - 5.828_427_124_746_19).abs() < 1e-4);
    }

    #[test]
    fn chains_hold() {
        let (phi, cf) = golden();
        for m in 1..8 {
            let c = d_chain_check(&phi, &cf, m).unwrap();
            assert!(c.holds);
            assert_eq!(c.values.len(), 2);
        }
        let e = CFExpansion::e_minus_1();
        let x = e.value();
        // a_5 = 4, so m = 4 gives a four-term chain.
        let c = d_chain_check(&x, &e, 4).unwrap();
        assert_eq!(c.values.len(), 5);
        assert!(c.holds);
    }

    #[test]
    fn convergent_bounds() {
        let (phi, cf) = golden();
        for m in 0..20 {
            assert!(bounds_check(&phi, &cf, m).unwrap());
        }
    }
}
