//! Continued fractions from exact rationals, quadratic surds, generator
//! rules and certified real enclosures.

mod convergents;
pub(crate) use convergents::as_string;
mod rules;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::{ln_biguint, precision_cap, Enclosure, Interval, RealScalar, RealSource};

pub use convergents::{
    bounds_check, convergents, d_chain_check, diophantine_distance, diophantine_distance_with, secondary_convergent,
    ConvergentRow, ConvergentTable, DChain, DiophantineDistance, SecondaryConvergent,
};
pub use rules::{CfRule, Constant, EMinusOne, Exponent, History, PowerRule};

/// Default ceiling on the decimal size of a rule-generated quotient.
pub const DEFAULT_DIGIT_CAP: u64 = 1_000_000;

enum Kind {
    Finite,
    Periodic { pre: Vec<BigUint>, period: Vec<BigUint>, surd: Option<(BigInt, BigInt, BigUint)> },
    Rule(Box<dyn CfRule>),
    Real(RealScalar),
}

#[derive(Default)]
struct Cache {
    quotients: Vec<BigUint>,
    p: Vec<BigUint>,
    q: Vec<BigUint>,
    n: Vec<BigUint>,
    /// Set once no further quotient can be produced.
    stop: Option<Stop>,
}

#[derive(Clone)]
enum Stop {
    Terminated,
    Failed(Error),
}

impl Cache {
    fn push(&mut self, a: BigUint) {
        let m = self.quotients.len();
        let (p, q) = match m {
            0 => (a.clone(), BigUint::one()),
            1 => (&a * &self.p[0] + 1u32, a.clone()),
            _ => (&a * &self.p[m - 1] + &self.p[m - 2], &a * &self.q[m - 1] + &self.q[m - 2]),
        };
        let n = if m == 0 { a.clone() } else { &self.n[m - 1] + &a };
        self.quotients.push(a);
        self.p.push(p);
        self.q.push(q);
        self.n.push(n);
    }
}

struct Inner {
    kind: Kind,
    digit_cap: u64,
    cache: Mutex<Cache>,
}

/// A continued fraction `[a0; a1, a2, ...]`, finite or lazily generated.
///
/// Cloning is cheap; clones share one memoized prefix.
#[derive(Clone)]
pub struct CFExpansion {
    inner: Arc<Inner>,
}

impl fmt::Debug for CFExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CFExpansion({})", self.render(12))
    }
}

fn euclid(mut n: BigInt, mut d: BigInt) -> Vec<BigUint> {
    let mut out = Vec::new();
    while !d.is_zero() {
        let (a, r) = n.div_mod_floor(&d);
        out.push(a.to_biguint().expect("nonnegative quotient"));
        n = d;
        d = r;
    }
    out
}

/// Fold a trailing 1 into its predecessor, `[..., a, 1] -> [..., a+1]`.
fn canonical(mut v: Vec<BigUint>) -> Vec<BigUint> {
    while v.len() > 1 && v.last().is_some_and(|x| x.is_one()) {
        v.pop();
        *v.last_mut().unwrap() += 1u32;
    }
    v
}

impl CFExpansion {
    fn build(kind: Kind, digit_cap: u64, seed: Vec<BigUint>, terminated: bool) -> Self {
        let mut cache = Cache::default();
        for a in seed {
            cache.push(a);
        }
        if terminated {
            cache.stop = Some(Stop::Terminated);
        }
        CFExpansion { inner: Arc::new(Inner { kind, digit_cap, cache: Mutex::new(cache) }) }
    }

    /// Canonical finite expansion of `p/q` by the Euclidean algorithm.
    pub fn from_rational(p: &BigInt, q: &BigInt) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::InvalidInput("denominator must be positive".into()));
        }
        if p.is_negative() {
            return Err(Error::InvalidInput("only nonnegative reals are supported".into()));
        }
        Ok(CFExpansion::from_quotients(euclid(p.clone(), q.clone()))?)
    }

    /// A finite expansion from explicit quotients, canonicalized.
    pub fn from_quotients(q: Vec<BigUint>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidInput("empty continued fraction".into()));
        }
        if q.iter().skip(1).any(Zero::is_zero) {
            return Err(Error::InvalidInput("partial quotients after a0 must be positive".into()));
        }
        Ok(CFExpansion::build(Kind::Finite, DEFAULT_DIGIT_CAP, canonical(q), true))
    }

    /// Expansion of `(P + sqrt(D)) / Q` with detected preperiod and period.
    pub fn from_surd(p: &BigInt, q: &BigInt, d: &BigUint) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidInput("surd denominator is zero".into()));
        }
        let s = d.sqrt();
        if &s * &s == *d {
            return Err(Error::InvalidInput(format!("{d} is a perfect square")));
        }
        // p + sqrt(d) > 0 iff p >= 0, or p < 0 and d > p^2.
        let num_pos = !p.is_negative() || BigInt::from(d.clone()) > p * p;
        if num_pos != q.is_positive() {
            return Err(Error::InvalidInput("only positive surds are supported".into()));
        }
        let (pre, period) = surd_quotients(p.clone(), q.clone(), d.clone());
        let kind = Kind::Periodic { pre: pre.clone(), period: period.clone(), surd: Some((p.clone(), q.clone(), d.clone())) };
        let seed: Vec<BigUint> = pre.iter().chain(period.iter()).cloned().collect();
        Ok(CFExpansion::build(kind, DEFAULT_DIGIT_CAP, seed, false))
    }

    /// Eventually periodic expansion from explicit parts.
    pub fn from_periodic(pre: Vec<BigUint>, period: Vec<BigUint>) -> Result<Self> {
        if pre.is_empty() && period.is_empty() || period.is_empty() {
            return Err(Error::InvalidInput("period must be nonempty".into()));
        }
        if period.iter().any(Zero::is_zero) || pre.iter().skip(1).any(Zero::is_zero) {
            return Err(Error::InvalidInput("partial quotients after a0 must be positive".into()));
        }
        let seed: Vec<BigUint> = pre.iter().chain(period.iter()).cloned().collect();
        Ok(CFExpansion::build(Kind::Periodic { pre, period, surd: None }, DEFAULT_DIGIT_CAP, seed, false))
    }

    pub fn from_rule(rule: Box<dyn CfRule>) -> Self {
        CFExpansion::from_rule_with_cap(rule, DEFAULT_DIGIT_CAP)
    }

    pub fn from_rule_with_cap(rule: Box<dyn CfRule>, digit_cap: u64) -> Self {
        CFExpansion::build(Kind::Rule(rule), digit_cap, Vec::new(), false)
    }

    /// Quotients certified from an enclosure of `alpha`, refined on demand.
    pub fn from_real(alpha: RealScalar) -> Result<Self> {
        if let Some(r) = alpha.exact() {
            return CFExpansion::from_rational(r.numer(), r.denom());
        }
        if alpha.enclosure().hi.is_negative() {
            return Err(Error::InvalidInput("only positive reals are supported".into()));
        }
        Ok(CFExpansion::build(Kind::Real(alpha), DEFAULT_DIGIT_CAP, Vec::new(), false))
    }

    pub fn e_minus_1() -> Self {
        CFExpansion::from_rule(Box::new(EMinusOne))
    }

    pub fn golden() -> Self {
        CFExpansion::from_surd(&1.into(), &2.into(), &5u32.into()).expect("valid surd")
    }

    /// Short description of where the quotients come from.
    pub fn source_tag(&self) -> String {
        match &self.inner.kind {
            Kind::Finite => "rational".into(),
            Kind::Periodic { surd: Some((p, q, d)), .. } => format!("surd({p},{q},{d})"),
            Kind::Periodic { .. } => "periodic".into(),
            Kind::Rule(r) => format!("rule({})", r.name()),
            Kind::Real(x) => format!("real({})", x.label()),
        }
    }

    pub fn digit_cap(&self) -> u64 {
        self.inner.digit_cap
    }

    /// `(preperiod, period)` for eventually periodic expansions.
    pub fn period(&self) -> Option<(Vec<BigUint>, Vec<BigUint>)> {
        match &self.inner.kind {
            Kind::Periodic { pre, period, .. } => Some((pre.clone(), period.clone())),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.inner.kind, Kind::Finite)
    }

    /// Make at least `len` quotients available if possible; returns how many are.
    pub fn ensure(&self, len: usize) -> usize {
        let mut c = self.inner.cache.lock().unwrap();
        if c.quotients.len() >= len || c.stop.is_some() {
            return c.quotients.len();
        }
        match &self.inner.kind {
            Kind::Finite => {}
            Kind::Periodic { pre, period, .. } => {
                while c.quotients.len() < len {
                    let i = c.quotients.len();
                    let a = if i < pre.len() { pre[i].clone() } else { period[(i - pre.len()) % period.len()].clone() };
                    c.push(a);
                }
            }
            Kind::Rule(rule) => {
                while c.quotients.len() < len {
                    let m = c.quotients.len();
                    let hist = History { quotients: &c.quotients, q: &c.q, n: &c.n };
                    match rule.quotient(m, &hist, self.inner.digit_cap) {
                        Ok(a) if m > 0 && a.is_zero() => {
                            c.stop = Some(Stop::Failed(Error::InvalidInput(format!("rule produced a_{m} = 0"))));
                            break;
                        }
                        Ok(a) => c.push(a),
                        Err(e) => {
                            c.stop = Some(Stop::Failed(e));
                            break;
                        }
                    }
                }
            }
            Kind::Real(alpha) => {
                let (qs, stop) = certified_prefix(alpha, len);
                let have = c.quotients.len();
                for a in qs.into_iter().skip(have) {
                    c.push(a);
                }
                if c.quotients.len() < len {
                    c.stop = stop.map(Stop::Failed);
                }
            }
        }
        c.quotients.len()
    }

    /// Why the expansion cannot go further, if it cannot.
    pub fn stop_reason(&self) -> Option<Error> {
        match &self.inner.cache.lock().unwrap().stop {
            Some(Stop::Failed(e)) => Some(e.clone()),
            _ => None,
        }
    }

    fn shortfall(&self, want: usize) -> Error {
        match self.stop_reason() {
            Some(e) => e,
            None => Error::Exhausted(format!("expansion has fewer than {want} quotients")),
        }
    }

    /// Quotient `a_i`.
    pub fn quotient(&self, i: usize) -> Result<BigUint> {
        if self.ensure(i + 1) <= i {
            return Err(self.shortfall(i + 1));
        }
        Ok(self.inner.cache.lock().unwrap().quotients[i].clone())
    }

    /// Up to `len` leading quotients; fewer if the expansion stops.
    pub fn prefix(&self, len: usize) -> Vec<BigUint> {
        let have = self.ensure(len);
        self.inner.cache.lock().unwrap().quotients[..have.min(len)].to_vec()
    }

    /// Exactly `len` leading quotients, or the reason they do not exist.
    pub fn prefix_exact(&self, len: usize) -> Result<Vec<BigUint>> {
        let v = self.prefix(len);
        if v.len() < len {
            return Err(self.shortfall(len));
        }
        Ok(v)
    }

    /// `(a_m, p_m, q_m, N_m)`.
    pub fn row(&self, m: usize) -> Result<(BigUint, BigUint, BigUint, BigUint)> {
        if self.ensure(m + 1) <= m {
            return Err(self.shortfall(m + 1));
        }
        let c = self.inner.cache.lock().unwrap();
        Ok((c.quotients[m].clone(), c.p[m].clone(), c.q[m].clone(), c.n[m].clone()))
    }

    /// `ln a_m`, available one step past a digit cap when the rule knows it.
    pub fn ln_quotient(&self, m: usize) -> Result<Interval> {
        if let Ok(a) = self.quotient(m) {
            return Ok(ln_biguint(&a));
        }
        if let Kind::Rule(rule) = &self.inner.kind {
            let c = self.inner.cache.lock().unwrap();
            if c.quotients.len() == m {
                let hist = History { quotients: &c.quotients, q: &c.q, n: &c.n };
                if let Some(l) = rule.ln_quotient(m, &hist) {
                    return Ok(l);
                }
            }
        }
        Err(self.shortfall(m + 1))
    }

    /// Render the first `depth` quotients as `[a0;a1,...]`, with the period
    /// appended for periodic expansions.
    pub fn render(&self, depth: usize) -> String {
        let q = self.prefix(depth);
        let mut s = String::from("[");
        for (i, a) in q.iter().enumerate() {
            match i {
                0 => s.push_str(&a.to_string()),
                1 => s.push_str(&format!(";{a}")),
                _ => s.push_str(&format!(",{a}")),
            }
        }
        s.push(']');
        if let Kind::Periodic { period, .. } = &self.inner.kind {
            let p: Vec<String> = period.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!(" (period: {})", p.join(",")));
        }
        s
    }

    /// The number itself as a refinable real.
    pub fn value(&self) -> RealScalar {
        if self.is_finite() {
            let (_, p, q, _) = self.row(self.len_hint() - 1).expect("finite expansion is nonempty");
            return RealScalar::from_rational(BigRational::new(p.into(), q.into()));
        }
        if let Kind::Real(x) = &self.inner.kind {
            return x.clone();
        }
        RealScalar::new(Arc::new(CfSource { cf: self.clone() }))
    }

    fn len_hint(&self) -> usize {
        self.inner.cache.lock().unwrap().quotients.len()
    }
}

impl fmt::Display for CFExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let depth = if self.is_finite() { self.len_hint() } else { 10 };
        write!(f, "{}", self.render(depth))
    }
}

impl FromStr for CFExpansion {
    type Err = Error;

    /// Parses `[a0;a1,...]`, optionally followed by `(period: c1,...)`. With a
    /// period, the listed quotients are read as a preperiod followed by as
    /// much of the repeating block as was printed.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("not a continued fraction: {s:?}"));
        let s = s.trim();
        let close = s.find(']').ok_or_else(bad)?;
        let body = s.strip_prefix('[').ok_or_else(bad)?;
        let body = &body[..close - 1];
        let rest = s[close + 1..].trim();
        let num = |t: &str| t.trim().parse::<BigUint>().map_err(|_| bad());
        let (a0, tail) = body.split_once(';').unwrap_or((body, ""));
        let mut q = vec![num(a0)?];
        if !tail.trim().is_empty() {
            for t in tail.split(',') {
                q.push(num(t)?);
            }
        }
        if rest.is_empty() {
            return CFExpansion::from_quotients(q);
        }
        let inner = rest
            .strip_prefix("(period:")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let period: Vec<BigUint> = inner.split(',').map(num).collect::<Result<_>>()?;
        let start = (1..=q.len())
            .find(|&i| q[i..].iter().enumerate().all(|(j, a)| *a == period[j % period.len()]))
            .unwrap_or(q.len());
        CFExpansion::from_periodic(q[..start].to_vec(), period)
    }
}

/// The `(P, Q)` state algorithm, returning `(preperiod, period)`.
fn surd_quotients(mut p: BigInt, mut q: BigInt, mut d: BigUint) -> (Vec<BigUint>, Vec<BigUint>) {
    let dd = BigInt::from(d.clone());
    if !(&dd - &p * &p).is_multiple_of(&q) {
        let aq = q.abs();
        p *= &aq;
        d *= (&aq * &aq).to_biguint().unwrap();
        q *= &aq;
    }
    let d_int = BigInt::from(d.clone());
    let s = BigInt::from(d.sqrt());
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    let mut out: Vec<BigUint> = Vec::new();
    loop {
        if let Some(&i) = seen.get(&(p.clone(), q.clone())) {
            let period = out[i..].to_vec();
            out.truncate(i);
            return (out, period);
        }
        seen.insert((p.clone(), q.clone()), out.len());
        let n = &p + &s;
        let a: BigInt = if q.is_positive() { n.div_floor(&q) } else { (n + 1u32).div_floor(&q) };
        let a_u = a.to_biguint().expect("positive surd has nonnegative quotients");
        out.push(a_u);
        let p2 = &a * &q - &p;
        let q2 = (&d_int - &p2 * &p2) / &q;
        p = p2;
        q = q2;
    }
}

/// Quotients shared by both endpoints of an enclosure, each with a nonzero
/// remainder, so that every point of the enclosure has them.
fn common_prefix(e: &Enclosure, want: usize) -> Vec<BigUint> {
    let (mut n1, mut d1) = (e.lo.numer().clone(), e.lo.denom().clone());
    let (mut n2, mut d2) = (e.hi.numer().clone(), e.hi.denom().clone());
    let mut out = Vec::new();
    while out.len() < want {
        if d1.is_zero() || d2.is_zero() {
            break;
        }
        let (a, r1) = n1.div_mod_floor(&d1);
        let (b, r2) = n2.div_mod_floor(&d2);
        if a != b || r1.is_zero() || r2.is_zero() || a.sign() == Sign::Minus {
            break;
        }
        out.push(a.to_biguint().unwrap());
        n1 = d1;
        d1 = r1;
        n2 = d2;
        d2 = r2;
    }
    out
}

fn certified_prefix(alpha: &RealScalar, want: usize) -> (Vec<BigUint>, Option<Error>) {
    let mut bits: u64 = 128.max(4 * want as u64);
    let mut prev_width: Option<BigRational> = None;
    loop {
        let x = alpha.refine(bits);
        let got = common_prefix(x.enclosure(), want);
        if got.len() >= want {
            return (got, None);
        }
        let w = x.enclosure().width();
        let stalled = prev_width.as_ref() == Some(&w);
        if stalled || bits * 2 > precision_cap() {
            let why = format!("{} certified only {} quotients at {bits} bits", alpha.label(), got.len());
            return (got, Some(Error::PrecisionExhausted(why)));
        }
        prev_width = Some(w);
        bits *= 2;
    }
}

/// A real given by its continued fraction, enclosed between consecutive
/// convergents.
#[derive(Debug)]
pub struct CfSource {
    pub cf: CFExpansion,
}

impl RealSource for CfSource {
    fn enclose(&self, bits: u64) -> Enclosure {
        let mut m = 1;
        loop {
            let have = self.cf.ensure(m + 2);
            if have < m + 2 {
                // Out of quotients; use the last pair (or the exact end).
                let c = self.cf.inner.cache.lock().unwrap();
                let k = c.quotients.len();
                let last = BigRational::new(c.p[k - 1].clone().into(), c.q[k - 1].clone().into());
                if matches!(c.stop, Some(Stop::Terminated)) || k < 2 {
                    return Enclosure::point(last);
                }
                // Every later quotient is at least 1, so the mediant with the
                // previous convergent bounds the tail.
                let prev = BigRational::new(
                    (&c.p[k - 1] + &c.p[k - 2]).into(),
                    (&c.q[k - 1] + &c.q[k - 2]).into(),
                );
                return if prev < last { Enclosure::new(prev, last) } else { Enclosure::new(last, prev) };
            }
            let c = self.cf.inner.cache.lock().unwrap();
            if c.q[m].bits() + c.q[m + 1].bits() >= bits + 2 {
                let a = BigRational::new(c.p[m].clone().into(), c.q[m].clone().into());
                let b = BigRational::new(c.p[m + 1].clone().into(), c.q[m + 1].clone().into());
                return if a < b { Enclosure::new(a, b) } else { Enclosure::new(b, a) };
            }
            drop(c);
            m += 1.max(m / 2);
        }
    }

    fn label(&self) -> String {
        self.cf.source_tag()
    }
}
