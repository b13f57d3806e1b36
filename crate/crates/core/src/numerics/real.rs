use std::cmp::Ordering;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::enclosure::{rat_bits, Enclosure};
use super::interval::Interval;
use crate::error::{Error, Result};

static PRECISION_CAP: AtomicU64 = AtomicU64::new(1 << 20);

/// Largest working precision, in bits, any refinement loop may request.
pub fn precision_cap() -> u64 {
    PRECISION_CAP.load(AtomicOrdering::Relaxed)
}

pub fn set_precision_cap(bits: u64) {
    PRECISION_CAP.store(bits.max(64), AtomicOrdering::Relaxed);
}

/// Anything that can produce arbitrarily tight enclosures of one real number.
pub trait RealSource: Send + Sync + fmt::Debug {
    /// An enclosure of width at most `2^-bits`, or the tightest the source
    /// can offer if it cannot reach that.
    fn enclose(&self, bits: u64) -> Enclosure;

    /// The exact value, when it is rational and known.
    fn exact(&self) -> Option<BigRational> {
        None
    }

    fn label(&self) -> String;
}

#[derive(Debug)]
pub struct ExactSource(pub BigRational);

impl RealSource for ExactSource {
    fn enclose(&self, _bits: u64) -> Enclosure {
        Enclosure::point(self.0.clone())
    }
    fn exact(&self) -> Option<BigRational> {
        Some(self.0.clone())
    }
    fn label(&self) -> String {
        self.0.to_string()
    }
}

/// `(p + sqrt(d)) / q` with `d` not a perfect square.
#[derive(Debug)]
pub struct SurdSource {
    pub p: BigInt,
    pub q: BigInt,
    pub d: BigUint,
}

impl SurdSource {
    pub fn new(p: BigInt, q: BigInt, d: BigUint) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidInput("surd denominator is zero".into()));
        }
        let s = d.sqrt();
        if &s * &s == d {
            return Err(Error::InvalidInput(format!("{d} is a perfect square")));
        }
        Ok(SurdSource { p, q, d })
    }
}

impl RealSource for SurdSource {
    fn enclose(&self, bits: u64) -> Enclosure {
        let k = bits as usize + 1;
        let s = BigInt::from((&self.d << (2 * k)).sqrt());
        let scale = BigInt::one() << k;
        let base = &self.p * &scale;
        let den = &self.q * &scale;
        let a = BigRational::new(&base + &s, den.clone());
        let b = BigRational::new(&base + &s + 1, den);
        if a <= b {
            Enclosure::new(a, b)
        } else {
            Enclosure::new(b, a)
        }
    }
    fn label(&self) -> String {
        format!("({}+sqrt({}))/{}", self.p, self.d, self.q)
    }
}

/// A decimal literal known to within `2^-radius_bits`.
#[derive(Debug)]
pub struct LiteralSource {
    name: String,
    radius_bits: u64,
    full: Enclosure,
    /// `max(0, log2 |value|)`, rounded up.
    mag: u64,
}

impl LiteralSource {
    pub fn new(value: BigRational, radius_bits: u64, name: impl Into<String>) -> Self {
        let r = BigRational::new(BigInt::one(), BigInt::one() << radius_bits as usize);
        let mag = (value.numer().bits() as i64 - value.denom().bits() as i64 + 1).max(0) as u64;
        LiteralSource { name: name.into(), radius_bits, full: Enclosure::new(&value - &r, &value + &r), mag }
    }

    pub fn radius_bits(&self) -> u64 {
        self.radius_bits
    }
}

impl RealSource for LiteralSource {
    fn enclose(&self, bits: u64) -> Enclosure {
        // Long literals are rounded to what was asked for, so callers at low
        // precision do not drag thousands of digits through every operation.
        let prec = bits.saturating_add(self.mag + 8);
        if prec < self.radius_bits {
            self.full.round_outward(prec)
        } else {
            self.full.clone()
        }
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// An enclosure that cannot be refined further.
#[derive(Debug)]
pub struct FixedSource(pub Enclosure);

impl RealSource for FixedSource {
    fn enclose(&self, _bits: u64) -> Enclosure {
        self.0.clone()
    }
    fn exact(&self) -> Option<BigRational> {
        self.0.is_point().then(|| self.0.lo.clone())
    }
    fn label(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// `|p - alpha q|` for fixed integers `p`, `q`.
#[derive(Debug)]
pub struct LinearFormSource {
    pub alpha: Arc<dyn RealSource>,
    pub p: BigInt,
    pub q: BigInt,
}

impl RealSource for LinearFormSource {
    fn enclose(&self, bits: u64) -> Enclosure {
        let a = self.alpha.enclose(bits + self.q.bits() + 1);
        a.mul_int(&-&self.q).add_rat(&BigRational::from_integer(self.p.clone())).abs()
    }
    fn exact(&self) -> Option<BigRational> {
        self.alpha.exact().map(|a| (BigRational::from_integer(self.p.clone()) - a * &self.q).abs())
    }
    fn label(&self) -> String {
        format!("|{} - {}*{}|", self.p, self.alpha.label(), self.q)
    }
}

/// A real number carried as a certified enclosure plus the means to tighten it.
#[derive(Clone)]
pub struct RealScalar {
    enc: Enclosure,
    source: Arc<dyn RealSource>,
}

impl fmt::Debug for RealScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealScalar({} in {})", self.source.label(), self.to_interval())
    }
}

impl RealScalar {
    pub fn new(source: Arc<dyn RealSource>) -> Self {
        let enc = source.enclose(64);
        RealScalar { enc, source }
    }

    pub fn from_rational(r: BigRational) -> Self {
        RealScalar::new(Arc::new(ExactSource(r)))
    }

    pub fn from_int(n: i64) -> Self {
        RealScalar::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn surd(p: i64, q: i64, d: u64) -> Result<Self> {
        Ok(RealScalar::new(Arc::new(SurdSource::new(p.into(), q.into(), d.into())?)))
    }

    /// Parse a plain decimal such as `2.5` or `-3` into an exact rational.
    pub fn parse_decimal(s: &str) -> Result<Self> {
        Ok(RealScalar::from_rational(parse_decimal(s)?))
    }

    pub fn enclosure(&self) -> &Enclosure {
        &self.enc
    }

    pub fn source(&self) -> &Arc<dyn RealSource> {
        &self.source
    }

    pub fn label(&self) -> String {
        self.source.label()
    }

    pub fn exact(&self) -> Option<BigRational> {
        self.source.exact()
    }

    pub fn to_interval(&self) -> Interval {
        self.enc.to_interval()
    }

    /// Tighten to width `2^-bits` where possible. Never widens.
    pub fn refine(&self, bits: u64) -> RealScalar {
        let fresh = self.source.enclose(bits);
        let enc = fresh.intersect(&self.enc).unwrap_or(fresh);
        RealScalar { enc, source: self.source.clone() }
    }

    /// Certified comparison with a rational, refining as needed.
    ///
    /// Returns `Equal` only when the value is known to be exactly `r`.
    pub fn cmp_rational(&self, r: &BigRational) -> Result<Ordering> {
        if let Some(x) = self.exact() {
            return Ok(x.cmp(r));
        }
        let mut bits = 64;
        let mut cur = self.clone();
        loop {
            let e = &cur.enc;
            if &e.hi < r {
                return Ok(Ordering::Less);
            }
            if &e.lo > r {
                return Ok(Ordering::Greater);
            }
            let prev = cur.enc.width();
            bits *= 2;
            if bits > precision_cap() {
                return Err(Error::PrecisionExhausted(format!(
                    "cannot separate {} from {r}",
                    self.label()
                )));
            }
            cur = cur.refine(bits);
            if cur.enc.width() == prev && bits > 256 {
                return Err(Error::PrecisionExhausted(format!(
                    "{} stalled while comparing with {r}",
                    self.label()
                )));
            }
        }
    }
}

/// Certified enclosure of `|p - alpha q|` with relative width at most `rel_width`.
///
/// Precision starts at 64 bits and doubles until the target is met or the
/// global cap is reached.
pub fn eval_linear_form(alpha: &RealScalar, p: &BigInt, q: &BigInt, rel_width: f64) -> Result<RealScalar> {
    if p.is_zero() && q.is_zero() {
        return Err(Error::InvalidInput("(p, q) = (0, 0)".into()));
    }
    let source = Arc::new(LinearFormSource { alpha: alpha.source.clone(), p: p.clone(), q: q.clone() });
    if q.is_zero() {
        let v = Enclosure::point(BigRational::from_integer(p.abs()));
        return Ok(RealScalar { enc: v, source });
    }
    if let Some(a) = alpha.exact() {
        let v = (BigRational::from_integer(p.clone()) - a * q).abs();
        if v.is_zero() {
            return Err(Error::ZeroForm(format!("{p} - ({})*{q} = 0", alpha.label())));
        }
        return Ok(RealScalar { enc: Enclosure::point(v), source });
    }
    let target = -rel_width.log2();
    let mut bits: u64 = 64;
    let mut last_width: Option<BigRational> = None;
    loop {
        let a = alpha.refine(bits + q.bits() + 2);
        let h = a.enc.mul_int(&-q).add_rat(&BigRational::from_integer(p.clone()));
        if !h.contains_zero() {
            let h = h.abs();
            let w = h.width();
            let ok = w.is_zero() || {
                let rel = &w / &h.lo;
                // rel <= 2^-target  <=>  rel * 2^target <= 1
                let t = target.ceil().max(0.0) as usize;
                rel * BigRational::from_integer(BigInt::one() << t) <= BigRational::one()
            };
            if ok {
                return Ok(RealScalar { enc: h, source });
            }
        }
        if let Some(prev) = &last_width {
            if *prev == h.width() {
                return Err(Error::PrecisionExhausted(format!(
                    "enclosure of {} stopped shrinking at {bits} bits",
                    alpha.label()
                )));
            }
        }
        last_width = Some(h.width());
        bits *= 2;
        if bits > precision_cap() {
            return Err(Error::PrecisionExhausted(format!(
                "|{p} - alpha*{q}| needs more than {} bits",
                precision_cap()
            )));
        }
    }
}

/// Parse `[-]digits[.digits]` exactly.
pub fn parse_decimal(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::InvalidInput(format!("not a decimal number: {s:?}"));
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
    let d = BigInt::from(10u32).pow(frac.len() as u32);
    let r = BigRational::new(n, d);
    Ok(if neg { -r } else { r })
}

/// Number of significant bits in an exact rational; used to size refinements.
pub fn rational_size(r: &BigRational) -> u64 {
    rat_bits(r)
}

/// Sign of an integer as an `Ordering` against zero.
pub fn int_sign(n: &BigInt) -> Ordering {
    match n.sign() {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn surd_refine_width_and_value() {
        let s = RealScalar::surd(0, 1, 2).unwrap().refine(10);
        let e = s.enclosure();
        assert!(e.width() <= rat(1, 1024));
        assert!(s.to_interval().contains(std::f64::consts::SQRT_2));
    }

    #[test]
    fn golden_at_53_bits() {
        let phi = RealScalar::surd(1, 2, 5).unwrap().refine(53);
        assert!(phi.enclosure().width() <= BigRational::new(1.into(), BigInt::one() << 53usize));
        assert!((phi.to_interval().mid() - 1.618_033_988_749_895).abs() < 1e-15);
    }

    #[test]
    fn rational_refines_to_a_point() {
        let r = RealScalar::from_rational(rat(7, 3)).refine(100);
        assert!(r.enclosure().is_point());
        assert_eq!(r.enclosure().lo, rat(7, 3));
    }

    #[test]
    fn perfect_square_is_rejected() {
        assert!(RealScalar::surd(0, 1, 9).is_err());
    }

    #[test]
    fn linear_form_examples() {
        let sqrt2 = RealScalar::surd(0, 1, 2).unwrap();
        let v = eval_linear_form(&sqrt2, &1.into(), &1.into(), 1e-12).unwrap();
        assert!((v.to_interval().mid() - 0.414_213_562_373_095_05).abs() < 1e-15);

        let v = eval_linear_form(&sqrt2, &1.into(), &0.into(), 1e-12).unwrap();
        assert_eq!(v.enclosure().lo, rat(1, 1));
        assert!(v.enclosure().is_point());

        let half = RealScalar::from_rational(rat(1, 2));
        let e = eval_linear_form(&half, &1.into(), &2.into(), 1e-12).unwrap_err();
        assert!(matches!(e, Error::ZeroForm(_)));
    }

    #[test]
    fn literal_source_stalls_honestly() {
        let lit = RealScalar::new(Arc::new(LiteralSource::new(rat(314159, 100000), 20, "pi5")));
        // 355/113 is closer to pi than 2^-20 relative; the literal cannot tell.
        let e = eval_linear_form(&lit, &355.into(), &113.into(), 1e-12).unwrap_err();
        assert!(matches!(e, Error::PrecisionExhausted(_)));
    }

    #[test]
    fn cmp_rational_refines() {
        let phi = RealScalar::surd(1, 2, 5).unwrap();
        assert_eq!(phi.cmp_rational(&rat(987, 610)).unwrap(), Ordering::Greater);
        assert_eq!(phi.cmp_rational(&rat(1597, 987)).unwrap(), Ordering::Less);
    }

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_decimal("2.5").unwrap(), rat(5, 2));
        assert_eq!(parse_decimal("-3").unwrap(), rat(-3, 1));
        assert!(parse_decimal("1e3").is_err());
    }
}
