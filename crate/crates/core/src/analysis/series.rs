use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::zeta::zeta_ratio;
use crate::contfrac::{diophantine_distance_with, CFExpansion};
use crate::error::{Error, Result};
use crate::numerics::{eval_linear_form, ln_biguint, Enclosure, Interval, RealScalar};
use crate::partition::{diophantine_spec, Engine};

/// A normalisation `N -> scale(N)` for free energies, evaluated in log space
/// so that astronomically large `N` are fine.
#[derive(Clone)]
pub enum Scale {
    /// `N^k`
    Power(f64),
    /// `sqrt(N) ln N`
    SqrtNLogN,
    /// `ln scale` as a function of `ln N` only.
    Custom { name: String, ln_scale: Arc<dyn Fn(Interval) -> Interval + Send + Sync> },
}

impl fmt::Debug for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl Scale {
    pub fn tag(&self) -> String {
        match self {
            Scale::Power(k) => format!("N^{k}"),
            Scale::SqrtNLogN => "sqrtN_logN".into(),
            Scale::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    /// Accepts `N`, `N^k`, `Nk` and `sqrtN_logN`.
    pub fn parse(s: &str) -> Result<Scale> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("sqrtN_logN") || t.eq_ignore_ascii_case("sqrtn-logn") {
            return Ok(Scale::SqrtNLogN);
        }
        let rest = t.strip_prefix('N').or_else(|| t.strip_prefix('n'));
        if let Some(r) = rest {
            let r = r.strip_prefix('^').unwrap_or(r);
            let k: f64 = if r.is_empty() {
                1.0
            } else {
                r.parse().map_err(|_| Error::InvalidInput(format!("bad scale exponent in {s:?}")))?
            };
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::InvalidInput(format!("scale exponent must be positive, got {k}")));
            }
            return Ok(Scale::Power(k));
        }
        Err(Error::InvalidInput(format!("unknown scale {s:?}; use N^k or sqrtN_logN")))
    }

    /// `ln scale(N)` from `ln N`.
    pub fn ln_at(&self, ln_n: Interval) -> Interval {
        match self {
            Scale::Power(k) => ln_n * Interval::point(*k),
            Scale::SqrtNLogN => ln_n * Interval::point(0.5) + ln_n.ln(),
            Scale::Custom { ln_scale, .. } => ln_scale(ln_n),
        }
    }

    /// `scale(N)`, exact for `N^1` with small `N`.
    pub fn value_at(&self, n: &BigUint) -> Interval {
        if let Scale::Power(k) = self {
            if *k == 1.0 && n.bits() <= 53 {
                return Interval::point(n.to_u64().unwrap() as f64);
            }
        }
        if n.is_zero() {
            return Interval::ZERO;
        }
        self.ln_at(ln_biguint(n)).exp()
    }
}

/// One checkpoint of [`convergent_limit_estimate`].
#[derive(Clone, Debug, Serialize)]
pub struct EstimatePoint {
    pub m: usize,
    pub ln_n: Interval,
    pub ln_q: Interval,
    /// `ln q_{N_m} / scale(N_m)`
    pub value: Interval,
    /// `ln` of `value`, usable when `value` underflows.
    pub ln_value: Interval,
    /// `(ln q_m - ln q_{m-w}) / (scale(N_m) - scale(N_{m-w}))`, `w` the period
    /// length for periodic expansions and 1 otherwise.
    pub increment: Option<Interval>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitEstimate {
    pub scale: String,
    pub points: Vec<EstimatePoint>,
    /// Why the sequence ended before the requested depth.
    pub stop: Option<String>,
}

impl LimitEstimate {
    pub fn last(&self) -> Option<&EstimatePoint> {
        self.points.last()
    }

    pub fn at(&self, m: usize) -> Option<&EstimatePoint> {
        self.points.iter().find(|p| p.m == m)
    }
}

/// `ln q_{N_m} / scale(N_m)` for `m = 0 ..= depth`, from big-integer
/// convergents alone. Checkpoints with `N_m <= 1` are skipped.
pub fn convergent_limit_estimate(cf: &CFExpansion, scale: &Scale, depth: usize) -> Result<LimitEstimate> {
    let w = cf.period().map(|(_, p)| p.len()).unwrap_or(1).max(1);
    let mut rows: Vec<(usize, BigUint, Interval, Interval)> = Vec::new();
    let mut stop = None;
    for m in 0..=depth {
        match cf.row(m) {
            Ok((_, _, q, n)) => {
                let ln_q = if q.is_one() { Interval::ZERO } else { ln_biguint(&q) };
                rows.push((m, n.clone(), ln_q, scale.value_at(&n)));
            }
            Err(e) if m > 0 => {
                stop = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut points = Vec::new();
    for (i, (m, n, ln_q, sv)) in rows.iter().enumerate() {
        if n <= &BigUint::one() {
            continue;
        }
        let ln_n = ln_biguint(n);
        let ln_scale = scale.ln_at(ln_n);
        let increment = (i >= w && rows[i - w].1 > BigUint::one()).then(|| {
            let (_, _, lq0, s0) = &rows[i - w];
            (*ln_q - *lq0) / (*sv - *s0)
        });
        let increment = increment.filter(|x| x.is_finite());
        points.push(EstimatePoint {
            m: *m,
            ln_n,
            ln_q: *ln_q,
            value: if sv.is_finite() && sv.lo > 0.0 { *ln_q / *sv } else { (ln_q.ln() - ln_scale).exp() },
            ln_value: ln_q.ln() - ln_scale,
            increment,
        });
    }
    Ok(LimitEstimate { scale: scale.tag(), points, stop })
}

/// `ln d_{N_m} / scale(N_m)` bracketed by `a_{m+1} q <= d <= (a_{m+1}+2) q`.
/// `a_{m+1}` may come from a rule's logarithm one step past the digit cap.
pub fn d_estimate(cf: &CFExpansion, scale: &Scale, depth: usize) -> Result<LimitEstimate> {
    let mut points = Vec::new();
    let mut stop = None;
    for m in 0..=depth {
        let (row, ln_a) = match (cf.row(m), cf.ln_quotient(m + 1)) {
            (Ok(r), Ok(la)) => (r, la),
            (Err(e), _) | (_, Err(e)) => {
                if m == 0 {
                    return Err(e);
                }
                stop = Some(e.to_string());
                break;
            }
        };
        let (_, _, q, n) = row;
        if n <= BigUint::one() {
            continue;
        }
        let ln_q = if q.is_one() { Interval::ZERO } else { ln_biguint(&q) };
        // ln(a + 2) <= ln a + ln 3 for a >= 1.
        let ln_d = Interval::new((ln_a + ln_q).lo, (ln_a + ln_q + Interval::point(3.0).ln()).hi);
        let ln_n = ln_biguint(&n);
        let ln_scale = scale.ln_at(ln_n);
        let sv = scale.value_at(&n);
        let ln_value = ln_d.ln() - ln_scale;
        let value = if sv.is_finite() && sv.lo > 0.0 { ln_d / sv } else { ln_value.exp() };
        points.push(EstimatePoint { m, ln_n, ln_q: ln_d, value, ln_value, increment: None });
    }
    Ok(LimitEstimate { scale: format!("d:{}", scale.tag()), points, stop })
}

/// Growth rate of `ln q` per unit of `N` for a periodic expansion.
#[derive(Clone, Debug, Serialize)]
pub struct QuadEnergy {
    pub value: Interval,
    pub lambda: Interval,
    /// Sum of the period's quotients.
    pub c: u64,
    pub period: Vec<u64>,
}

/// `ln lambda_max(C) / c` with `C` the product of `(0 1 / 1 c_i)` over the period.
pub fn quad_free_energy(cf: &CFExpansion) -> Result<QuadEnergy> {
    let (_, period) = cf.period().ok_or_else(|| Error::InvalidInput("expansion is not periodic".into()))?;
    let mut m = [BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one()];
    let mut c = 0u64;
    let mut per = Vec::new();
    for a in &period {
        let a_i = BigInt::from(a.clone());
        // m * (0 1 / 1 a)
        m = [m[1].clone(), &m[0] + &m[1] * &a_i, m[3].clone(), &m[2] + &m[3] * &a_i];
        let a64 = a.to_u64().ok_or_else(|| Error::CapExceeded("period quotient too large".into()))?;
        c += a64;
        per.push(a64);
    }
    let tr = &m[0] + &m[3];
    let det = &m[0] * &m[3] - &m[1] * &m[2];
    let disc = &tr * &tr - BigInt::from(4) * det;
    if !disc.is_positive() {
        return Err(Error::InvalidInput("period matrix has no real dominant eigenvalue".into()));
    }
    // sqrt(disc) within 2^-k
    let k = 128usize;
    let s = (disc.magnitude() << (2 * k)).sqrt();
    let scale = BigInt::one() << k;
    let lo = BigRational::new(BigInt::from(s.clone()), scale.clone());
    let hi = BigRational::new(BigInt::from(s + 1u32), scale);
    let tr_r = BigRational::from_integer(tr);
    let two = BigInt::from(2);
    let lambda = Enclosure::new((&tr_r + lo) / &two, (&tr_r + hi) / &two);
    let ln_l = lambda.ln().ok_or_else(|| Error::InvalidInput("nonpositive eigenvalue".into()))?;
    Ok(QuadEnergy { value: ln_l / Interval::from_u64(c), lambda: lambda.to_interval(), c, period: per })
}

/// Lower and upper bounds on `ln Z_N / N` from the convergent sandwich.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichBound {
    pub n: u64,
    /// Index of the checkpoint `N_m <= N`; `None` below the first checkpoint.
    pub m: Option<usize>,
    /// `beta ln d_N`
    pub ln_lower_total: Interval,
    /// `ln(N zr d_{N_m}^beta)`
    pub ln_upper_total: Interval,
    pub lower: Interval,
    pub upper: Interval,
    /// `ln Z_N / N` when an enumerated value was supplied.
    pub log_z_over_n: Option<Interval>,
    pub holds: Option<bool>,
}

impl SandwichBound {
    /// True unless the enclosures certify `ln Z / N < lower` or
    /// `ln Z / N > upper`. At a checkpoint the lower bound is attained up to
    /// rounding, so demanding strict separation would reject correct values.
    pub fn check(&mut self, z: Interval) -> bool {
        let v = z.ln() / Interval::from_u64(self.n);
        let ok = self.lower.lo <= v.hi && v.lo <= self.upper.hi;
        self.log_z_over_n = Some(v);
        self.holds = Some(ok);
        ok
    }
}

const SANDWICH_REL: f64 = 1e-12;

/// `beta ln d_N / N <= ln Z_N / N <= ln(zr N d_{N_m}^beta) / N`.
///
/// Below the first checkpoint (`N < a_0`) the largest fraction of `F_N` is
/// `N/1`, every term is at most 1, and `d_{N_m}` is taken as 1.
pub fn thm46_bounds(alpha: &RealScalar, cf: &CFExpansion, beta: Interval, n: u64, zr: Option<Interval>) -> Result<SandwichBound> {
    if n == 0 {
        return Err(Error::InvalidInput("the sandwich needs N >= 1".into()));
    }
    let zr = match zr {
        Some(z) => z,
        None => zeta_ratio(beta)?,
    };
    let a0 = cf.quotient(0)?;
    let nn = BigUint::from(n);
    let (ln_d_n, ln_d_m, m) = if nn < a0 {
        let f = eval_linear_form(alpha, &BigInt::from(n), &BigInt::one(), SANDWICH_REL)?;
        let ln_d = -f.enclosure().ln().ok_or_else(|| Error::ZeroForm(format!("{n}/1 equals alpha")))?;
        (ln_d, Interval::ZERO, None)
    } else {
        let dn = diophantine_distance_with(alpha, cf, nn.clone(), SANDWICH_REL)?;
        let (_, _, _, n_m) = cf.row(dn.conv.m)?;
        let dm = diophantine_distance_with(alpha, cf, n_m, SANDWICH_REL)?;
        (dn.ln_d, dm.ln_d, Some(dn.conv.m))
    };
    let nf = Interval::from_u64(n);
    let ln_lower_total = beta * ln_d_n;
    let ln_upper_total = nf.ln() + zr.ln() + beta * ln_d_m;
    Ok(SandwichBound {
        n,
        m,
        ln_lower_total,
        ln_upper_total,
        lower: ln_lower_total / nf,
        upper: ln_upper_total / nf,
        log_z_over_n: None,
        holds: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Enumerated,
    Sandwich,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesPoint {
    pub n: u64,
    pub value: Interval,
    pub kind: PointKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeEnergySeries {
    pub alpha: String,
    pub beta: Interval,
    pub scale: String,
    pub points: Vec<SeriesPoint>,
}

/// `ln Z_N / scale(N)` for each `N` in `ns`. Lengths up to the engine cap are
/// enumerated (one traversal for all of them); longer ones get the sandwich
/// interval, which needs `beta > 2`.
pub fn free_energy_series(
    alpha: &RealScalar,
    cf: &CFExpansion,
    label: &str,
    beta: &RealScalar,
    ns: &[u64],
    scale: &Scale,
    engine: &Engine,
) -> Result<FreeEnergySeries> {
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let b = beta.to_interval();
    let max_enum = sorted.iter().copied().filter(|&n| n as usize <= engine.cap).max();
    let profile = match max_enum {
        Some(n) => engine.z_profile(&diophantine_spec(alpha, n as usize, beta, false))?,
        None => Vec::new(),
    };
    let mut zr = None;
    let mut points = Vec::with_capacity(sorted.len());
    for n in sorted {
        let sv = scale.value_at(&BigUint::from(n));
        if !(sv.lo > 0.0) {
            return Err(Error::InvalidInput(format!("scale {} is not positive at N = {n}", scale.tag())));
        }
        if (n as usize) <= engine.cap {
            let v = profile[n as usize].value.ln() / sv;
            points.push(SeriesPoint { n, value: v, kind: PointKind::Enumerated });
        } else {
            if zr.is_none() {
                zr = Some(zeta_ratio(b)?);
            }
            let s = thm46_bounds(alpha, cf, b, n, zr)?;
            let v = Interval::new((s.ln_lower_total / sv).lo, (s.ln_upper_total / sv).hi);
            points.push(SeriesPoint { n, value: v, kind: PointKind::Sandwich });
        }
    }
    Ok(FreeEnergySeries { alpha: label.to_string(), beta: b, scale: scale.tag(), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::z_diophantine;

    #[test]
    fn scale_parsing() {
        assert!(matches!(Scale::parse("N").unwrap(), Scale::Power(k) if k == 1.0));
        assert!(matches!(Scale::parse("N^1.5").unwrap(), Scale::Power(k) if k == 1.5));
        assert!(matches!(Scale::parse("sqrtN_logN").unwrap(), Scale::SqrtNLogN));
        assert!(Scale::parse("logZ").is_err());
        assert_eq!(Scale::Power(1.0).value_at(&BigUint::from(7u32)), Interval::point(7.0));
    }

    #[test]
    fn golden_estimator() {
        let est = convergent_limit_estimate(&CFExpansion::golden(), &Scale::Power(1.0), 60).unwrap();
        let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        let last = est.last().unwrap();
        assert!((last.increment.unwrap().mid() - ln_phi).abs() < 1e-12);
        assert!((last.value.mid() - ln_phi).abs() < 0.02);
    }

    #[test]
    fn quad_energies() {
        let q = quad_free_energy(&CFExpansion::golden()).unwrap();
        assert!(q.value.contains(((1.0 + 5f64.sqrt()) / 2.0).ln()) || (q.value.mid() - 0.481_211_825_059_603_4).abs() < 1e-15);
        let s2 = CFExpansion::from_surd(&0.into(), &1.into(), &2u32.into()).unwrap();
        let q = quad_free_energy(&s2).unwrap();
        assert!((q.value.mid() - 0.440_686_793_509_771_5).abs() < 1e-14);
        assert_eq!(q.c, 2);
        let s3 = CFExpansion::from_surd(&0.into(), &1.into(), &3u32.into()).unwrap();
        assert_eq!(quad_free_energy(&s3).unwrap().c, 3);
    }

    #[test]
    fn sandwich_holds_for_golden() {
        let phi = RealScalar::surd(1, 2, 5).unwrap();
        let cf = CFExpansion::golden();
        let beta = Interval::point(3.0);
        for n in [1u64, 5, 10] {
            let mut s = thm46_bounds(&phi, &cf, beta, n, None).unwrap();
            let z = z_diophantine(&phi, n as usize, &RealScalar::from_int(3), false).unwrap();
            assert!(s.check(z.value), "N = {n}: {s:?}");
        }
    }

    #[test]
    fn sandwich_below_first_checkpoint() {
        let pi = RealScalar::parse_decimal("3.14159265358979323846264338327950288").unwrap();
        let cf = CFExpansion::from_quotients(vec![3u32.into(), 7u32.into(), 15u32.into(), 1u32.into(), 292u32.into()]).unwrap();
        let beta = Interval::point(3.0);
        for n in [1u64, 2] {
            let mut s = thm46_bounds(&pi, &cf, beta, n, None).unwrap();
            assert_eq!(s.m, None);
            let z = z_diophantine(&pi, n as usize, &RealScalar::from_int(3), false).unwrap();
            assert!(s.check(z.value));
        }
    }
}
