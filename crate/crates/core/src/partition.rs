//! Partition functions over words in a matrix alphabet.
//!
//! A term is `|M * W|^-beta * f(M W^T)` for the word matrix `W = P A_{i_1} ... A_{i_N}`
//! (`P` a fixed prefix, usually the identity). Enumeration is a depth-first
//! walk with incremental products. Small integer matrices take a double
//! precision path with a rigorous error bound; anything it cannot certify is
//! re-evaluated exactly.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::farey::{IntMat2, Weight, WeightMatrix, Word};
use crate::numerics::{precision_cap, rat_to_interval, Interval, IntervalSum, RealScalar};

/// Default enumeration cap on the word length.
pub const ENUMERATION_CAP: usize = 26;

/// Longest word for which [`term_rows`] will list every term.
pub const TERM_EXPORT_CAP: usize = 20;

/// A weight function `f` applied to `M W^T`.
pub type WeightFn = Arc<dyn Fn(&WeightMatrix) -> Result<Interval> + Send + Sync>;

#[derive(Clone)]
pub struct PartitionSpec {
    pub n: usize,
    pub m: WeightMatrix,
    pub beta: RealScalar,
    pub alphabet: Vec<IntMat2>,
    /// Left factor of every word matrix.
    pub prefix: IntMat2,
    /// `None` means `f = 1`.
    pub weight_fn: Option<WeightFn>,
    /// Adds the constant term 1 contributed by the fraction `1/0`.
    pub include_infinity: bool,
}

impl fmt::Debug for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartitionSpec")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("beta", &self.beta)
            .field("alphabet", &self.alphabet)
            .field("prefix", &self.prefix)
            .field("weight_fn", &self.weight_fn.as_ref().map(|_| "custom"))
            .field("include_infinity", &self.include_infinity)
            .finish()
    }
}

impl PartitionSpec {
    /// Farey alphabet, identity prefix, `f = 1`.
    pub fn new(m: WeightMatrix, n: usize, beta: RealScalar) -> Self {
        PartitionSpec {
            n,
            m,
            beta,
            alphabet: IntMat2::farey_alphabet(),
            prefix: IntMat2::identity(),
            weight_fn: None,
            include_infinity: false,
        }
    }

    pub fn with_alphabet(mut self, alphabet: Vec<IntMat2>) -> Self {
        self.alphabet = alphabet;
        self
    }

    pub fn with_prefix(mut self, prefix: IntMat2) -> Self {
        self.prefix = prefix;
        self
    }

    pub fn with_weight_fn(mut self, f: WeightFn) -> Self {
        self.weight_fn = Some(f);
        self
    }

    pub fn with_infinity(mut self, on: bool) -> Self {
        self.include_infinity = on;
        self
    }

    fn validate(&self, cap: usize) -> Result<()> {
        if self.alphabet.is_empty() {
            return Err(Error::InvalidInput("empty alphabet".into()));
        }
        if self.alphabet.len() > 36 {
            return Err(Error::InvalidInput("alphabets are limited to 36 letters".into()));
        }
        if self.n > cap {
            return Err(Error::CapExceeded(format!("N = {} exceeds the enumeration cap {cap}", self.n)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dfs,
    Recursion,
    SetForm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Dfs => "dfs",
            Method::Recursion => "recursion",
            Method::SetForm => "set-form",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionResult {
    pub value: Interval,
    pub n: usize,
    pub beta: Interval,
    pub method: Method,
    pub term_count: u64,
}

/// Enumeration settings. The split into work units does not depend on the
/// thread count, so results are bit-identical for any `threads`.
#[derive(Clone, Debug)]
pub struct Engine {
    pub cap: usize,
    /// `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { cap: ENUMERATION_CAP, threads: None }
    }
}

/// Roughly this many independent subtrees per enumeration.
const SPLIT_UNITS: u64 = 1024;

fn split_depth(k: usize, n: usize) -> usize {
    let mut s = 0;
    let mut units = 1u64;
    while s < n && units * k as u64 <= SPLIT_UNITS {
        units *= k as u64;
        s += 1;
    }
    s
}

fn word_string(word: &[u8]) -> String {
    Word(word.to_vec()).to_string()
}

/// Everything needed to evaluate one term exactly.
struct TermCtx {
    m: WeightMatrix,
    beta: Interval,
    f: Option<WeightFn>,
}

impl TermCtx {
    fn term_big(&self, w: &IntMat2, word: &[u8]) -> Result<Interval> {
        let h = certified_abs(&self.m.hs(w), word)?;
        let mut t = term_from_abs(h, self.beta);
        if let Some(f) = &self.f {
            t = t * f(&self.m.mul_transpose(w))?;
        }
        Ok(t)
    }
}

#[inline]
fn term_from_abs(h: Interval, beta: Interval) -> Interval {
    if (beta.lo == 0.0 && beta.hi == 0.0) || h == Interval::ONE {
        return Interval::ONE;
    }
    (-(h.ln() * beta)).exp()
}

/// `|h|` for an exact linear combination, refined until it clears zero.
fn certified_abs(h: &Weight, word: &[u8]) -> Result<Interval> {
    if let Some(r) = h.as_exact() {
        if r.is_zero() {
            return Err(Error::ZeroForm(format!("M * W vanishes for the word {}", word_string(word))));
        }
        return Ok(rat_to_interval(&r.abs()));
    }
    let mut bits = 128u64;
    let mut last_width: Option<BigRational> = None;
    loop {
        let e = h.enclose(bits);
        if !e.contains_zero() && e.rel_width_log2() < -60.0 {
            return Ok(e.abs().to_interval());
        }
        let w = e.width();
        let stalled = last_width.as_ref().is_some_and(|lw| &w >= lw);
        if stalled || bits >= precision_cap() {
            if !e.contains_zero() {
                return Ok(e.abs().to_interval());
            }
            return Err(Error::PrecisionExhausted(format!(
                "cannot separate M * W from zero for the word {} at {bits} bits",
                word_string(word)
            )));
        }
        last_width = Some(w);
        bits = (bits * 2).min(precision_cap());
    }
}

/// Precomputed weight entries for the double precision path.
#[derive(Clone, Debug)]
struct FastWeights {
    ints: [i64; 4],
    /// `(entry, hi, lo, r)`: the weight lies in `hi + lo + [-r, r]`.
    reals: Vec<(usize, f64, f64, f64)>,
}

impl FastWeights {
    fn new(m: &WeightMatrix) -> Option<Self> {
        let mut ints = [0i64; 4];
        let mut reals = Vec::new();
        for (j, w) in m.m.iter().enumerate() {
            match w.as_exact() {
                Some(r) if r.is_integer() => {
                    let v = r.to_integer().to_i64()?;
                    if v.unsigned_abs() >= 1 << 53 {
                        return None;
                    }
                    ints[j] = v;
                }
                _ => {
                    let (hi, lo, r) = w.split_f64();
                    if !hi.is_finite() || !r.is_finite() {
                        return None;
                    }
                    reals.push((j, hi, lo, r));
                }
            }
        }
        Some(FastWeights { ints, reals })
    }

    /// `|M * W|`, or `None` when the bound cannot separate it from zero.
    #[inline]
    fn abs_hs(&self, w: &[u64; 4]) -> Option<Interval> {
        let mut int: i128 = 0;
        for j in 0..4 {
            int += self.ints[j] as i128 * w[j] as i128;
        }
        if self.reals.is_empty() {
            if int == 0 {
                return None;
            }
            let a = int.unsigned_abs();
            let x = a as f64;
            return Some(if (x as u128) == a { Interval::point(x) } else { Interval::new(x.next_down(), x.next_up()) });
        }
        // Compensated sum of exact pieces: the integer part split in two
        // doubles, then `w hi` as an exact two-product, then the small `w lo`.
        let ih = int as f64;
        let il = (int - ih as i128) as f64;
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        let mut abs_sum = 0.0f64;
        let mut small = 0.0f64;
        let mut resid = 0.0f64;
        let mut n = 0u32;
        acc(ih, &mut s, &mut c, &mut abs_sum);
        acc(il, &mut s, &mut c, &mut abs_sum);
        n += 2;
        for &(j, hi, lo, r) in &self.reals {
            let wf = w[j] as f64;
            let p = wf * hi;
            let e = wf.mul_add(hi, -p);
            let t = wf * lo;
            acc(p, &mut s, &mut c, &mut abs_sum);
            acc(e, &mut s, &mut c, &mut abs_sum);
            acc(t, &mut s, &mut c, &mut abs_sum);
            n += 3;
            small += t.abs();
            resid += wf * r;
        }
        let res = s + c;
        let u = f64::EPSILON / 2.0;
        let g = n as f64 * u;
        let bound = (2.0 * u * res.abs() + 2.0 * g * g * abs_sum + u * small + resid) * (1.0 + 16.0 * u);
        let bound = bound.next_up();
        let lo = (res - bound).next_down();
        let hi = (res + bound).next_up();
        if lo <= 0.0 && hi >= 0.0 {
            return None;
        }
        let iv = if lo > 0.0 { Interval::new(lo, hi) } else { Interval::new(-hi, -lo) };
        // Too wide to be useful; let the exact path do it.
        if iv.width() > iv.lo * 1e-9 {
            return None;
        }
        Some(iv)
    }
}

trait Walker: Sync {
    type Node: Clone + Send + Sync;
    fn root(&self) -> Self::Node;
    fn child(&self, node: &Self::Node, letter: usize) -> Self::Node;
    fn term(&self, node: &Self::Node, word: &[u8]) -> Result<Interval>;
}

struct FastWalker<'a> {
    alphabet: Vec<[u64; 4]>,
    prefix: [u64; 4],
    weights: FastWeights,
    ctx: &'a TermCtx,
}

/// One step of compensated (two-sum) accumulation.
#[inline]
fn acc(x: f64, s: &mut f64, c: &mut f64, abs_sum: &mut f64) {
    let t = *s + x;
    let bp = t - *s;
    let err = (*s - (t - bp)) + (x - bp);
    *s = t;
    *c += err;
    *abs_sum += x.abs();
}

#[inline]
fn mul4(x: &[u64; 4], y: &[u64; 4]) -> [u64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn to_big(w: &[u64; 4]) -> IntMat2 {
    IntMat2::new(w[0], w[1], w[2], w[3])
}

impl Walker for FastWalker<'_> {
    type Node = [u64; 4];
    fn root(&self) -> [u64; 4] {
        self.prefix
    }
    fn child(&self, node: &[u64; 4], letter: usize) -> [u64; 4] {
        mul4(node, &self.alphabet[letter])
    }
    fn term(&self, node: &[u64; 4], word: &[u8]) -> Result<Interval> {
        match self.weights.abs_hs(node) {
            Some(h) => Ok(term_from_abs(h, self.ctx.beta)),
            None => self.ctx.term_big(&to_big(node), word),
        }
    }
}

struct BigWalker<'a> {
    alphabet: Vec<IntMat2>,
    prefix: IntMat2,
    ctx: &'a TermCtx,
}

impl Walker for BigWalker<'_> {
    type Node = IntMat2;
    fn root(&self) -> IntMat2 {
        self.prefix.clone()
    }
    fn child(&self, node: &IntMat2, letter: usize) -> IntMat2 {
        node.mul(&self.alphabet[letter])
    }
    fn term(&self, node: &IntMat2, word: &[u8]) -> Result<Interval> {
        self.ctx.term_big(node, word)
    }
}

fn row_norm(m: &IntMat2) -> f64 {
    let r1 = (&m.a + &m.b).to_f64().unwrap_or(f64::INFINITY);
    let r2 = (&m.c + &m.d).to_f64().unwrap_or(f64::INFINITY);
    r1.max(r2)
}

/// Every entry of a product of `n` letters after `prefix` stays below 2^53.
fn fits_fast(spec: &PartitionSpec) -> bool {
    let r = spec.alphabet.iter().map(row_norm).fold(1.0f64, f64::max);
    let bound = row_norm(&spec.prefix).max(1.0).log2() + spec.n as f64 * r.log2();
    bound < 52.0
}

fn dfs<W: Walker>(
    w: &W,
    k: usize,
    n: usize,
    from: usize,
    base: usize,
    depth: usize,
    word: &mut Vec<u8>,
    node: &W::Node,
    sums: &mut [IntervalSum],
) -> Result<()> {
    if depth >= from {
        sums[depth - base].push(w.term(node, word)?);
    }
    if depth == n {
        return Ok(());
    }
    for i in 0..k {
        word.push(i as u8);
        let c = w.child(node, i);
        dfs(w, k, n, from, base, depth + 1, word, &c, sums)?;
        word.pop();
    }
    Ok(())
}

/// Sums per level `from ..= n`.
fn walk<W: Walker>(w: &W, k: usize, n: usize, from: usize, pool: Option<&rayon::ThreadPool>) -> Result<Vec<Interval>> {
    let s = split_depth(k, n);
    let mut shallow = vec![IntervalSum::new(); s];
    let mut frontier: Vec<(Vec<u8>, W::Node)> = vec![(Vec::new(), w.root())];
    for (level, sum) in shallow.iter_mut().enumerate() {
        if level >= from {
            for (word, node) in &frontier {
                sum.push(w.term(node, word)?);
            }
        }
        frontier = frontier
            .iter()
            .flat_map(|(word, node)| {
                (0..k).map(move |i| {
                    let mut wd = word.clone();
                    wd.push(i as u8);
                    (wd, w.child(node, i))
                })
            })
            .collect();
    }
    let run = || -> Vec<Result<Vec<IntervalSum>>> {
        frontier
            .par_iter()
            .map(|(word, node)| {
                let mut sums = vec![IntervalSum::new(); n - s + 1];
                let mut wd = word.clone();
                dfs(w, k, n, from, s, s, &mut wd, node, &mut sums)?;
                Ok(sums)
            })
            .collect()
    };
    let parts = match pool {
        Some(p) => p.install(run),
        None => run(),
    };
    let parts: Vec<Vec<IntervalSum>> = parts.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n + 1 - from);
    for level in from..=n {
        if level < s {
            out.push(shallow[level].finish());
        } else {
            let acc = parts.iter().map(|p| p[level - s].finish()).reduce(|a, b| a + b);
            out.push(acc.unwrap_or(Interval::ZERO));
        }
    }
    Ok(out)
}

impl Engine {
    pub fn new(cap: usize, threads: Option<usize>) -> Self {
        Engine { cap, threads }
    }

    fn pool(&self) -> Result<Option<rayon::ThreadPool>> {
        match self.threads {
            None => Ok(None),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map(Some)
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}"))),
        }
    }

    fn levels(&self, spec: &PartitionSpec, from: usize) -> Result<Vec<Interval>> {
        spec.validate(self.cap)?;
        let ctx = TermCtx { m: spec.m.clone(), beta: spec.beta.to_interval(), f: spec.weight_fn.clone() };
        let k = spec.alphabet.len();
        let pool = self.pool()?;
        let fast = if spec.weight_fn.is_none() && fits_fast(spec) { FastWeights::new(&spec.m) } else { None };
        let mut sums = match fast {
            Some(weights) => {
                let walker = FastWalker {
                    alphabet: spec.alphabet.iter().map(|a| a.to_u64().expect("checked by fits_fast")).collect(),
                    prefix: spec.prefix.to_u64().expect("checked by fits_fast"),
                    weights,
                    ctx: &ctx,
                };
                walk(&walker, k, spec.n, from, pool.as_ref())?
            }
            None => {
                let walker = BigWalker { alphabet: spec.alphabet.clone(), prefix: spec.prefix.clone(), ctx: &ctx };
                walk(&walker, k, spec.n, from, pool.as_ref())?
            }
        };
        if spec.include_infinity {
            for s in &mut sums {
                *s = *s + Interval::ONE;
            }
        }
        Ok(sums)
    }

    fn result(&self, spec: &PartitionSpec, n: usize, value: Interval, method: Method) -> PartitionResult {
        let k = spec.alphabet.len() as u64;
        let count = k.checked_pow(n as u32).unwrap_or(u64::MAX);
        PartitionResult {
            value,
            n,
            beta: spec.beta.to_interval(),
            method,
            term_count: count + spec.include_infinity as u64,
        }
    }

    /// `Z(N, M, beta, alphabet, f)` by depth-first enumeration.
    pub fn z_general(&self, spec: &PartitionSpec) -> Result<PartitionResult> {
        let v = self.levels(spec, spec.n)?;
        Ok(self.result(spec, spec.n, v[0], Method::Dfs))
    }

    /// `Z` at every length `0 ..= N` from a single traversal.
    pub fn z_profile(&self, spec: &PartitionSpec) -> Result<Vec<PartitionResult>> {
        let v = self.levels(spec, 0)?;
        Ok(v.into_iter().enumerate().map(|(n, x)| self.result(spec, n, x, Method::Dfs)).collect())
    }

    /// `Z_N(M)` as `sum_i Z_{N-1}(M A_i^T)`.
    pub fn z_recursive(&self, spec: &PartitionSpec) -> Result<PartitionResult> {
        if spec.n == 0 {
            let r = self.z_general(spec)?;
            return Ok(PartitionResult { method: Method::Recursion, ..r });
        }
        spec.validate(self.cap)?;
        let mut acc = Interval::ZERO;
        for a in &spec.alphabet {
            let mut sub = spec.clone();
            sub.n -= 1;
            sub.m = spec.m.mul_transpose(a);
            sub.include_infinity = false;
            // `f` sees `M (W' A_i)^T = (M A_i^T) W'^T`, so it carries over as is.
            acc = acc + self.z_general(&sub)?.value;
        }
        if spec.include_infinity {
            acc = acc + Interval::ONE;
        }
        Ok(self.result(spec, spec.n, acc, Method::Recursion))
    }
}

pub fn z_general(spec: &PartitionSpec) -> Result<PartitionResult> {
    Engine::default().z_general(spec)
}

pub fn z_profile(spec: &PartitionSpec) -> Result<Vec<PartitionResult>> {
    Engine::default().z_profile(spec)
}

pub fn z_recursive(spec: &PartitionSpec) -> Result<PartitionResult> {
    Engine::default().z_recursive(spec)
}

/// Knauf's function in matrix form: words `A_0 w`, weight `(0 0 / 0 1)`.
pub fn knauf_spec(n: usize, beta: &RealScalar) -> PartitionSpec {
    PartitionSpec::new(WeightMatrix::knauf(), n, beta.clone()).with_prefix(IntMat2::a0())
}

pub fn z_knauf(n: usize, beta: &RealScalar) -> Result<PartitionResult> {
    z_general(&knauf_spec(n, beta))
}

/// Knauf's function in set form: `sum 1/q^beta` over `F_N` inside `(0, 1)`.
pub fn z_knauf_set(n: usize, beta: &RealScalar) -> Result<PartitionResult> {
    let pairs = crate::farey::farey_pairs(n)?;
    let b = beta.to_interval();
    let mut sum = IntervalSum::new();
    for &(p, q) in &pairs {
        if p > 0 && p < q {
            sum.push(term_from_abs(Interval::from_u64(q), b));
        }
    }
    Ok(PartitionResult { value: sum.finish(), n, beta: b, method: Method::SetForm, term_count: sum.count() })
}

pub fn fiala_kleban_spec(n: usize, x: &RealScalar, beta: &RealScalar) -> PartitionSpec {
    PartitionSpec::new(WeightMatrix::fiala_kleban(x.clone()), n, beta.clone()).with_prefix(IntMat2::a0())
}

pub fn z_fiala_kleban(n: usize, x: &RealScalar, beta: &RealScalar) -> Result<PartitionResult> {
    z_general(&fiala_kleban_spec(n, x, beta))
}

pub fn diophantine_spec(alpha: &RealScalar, n: usize, beta: &RealScalar, include_infinity: bool) -> PartitionSpec {
    PartitionSpec::new(WeightMatrix::diophantine(alpha.clone()), n, beta.clone()).with_infinity(include_infinity)
}

/// `Z_N(alpha; beta)` over the `2^N` right columns (`1/0` only on request).
pub fn z_diophantine(alpha: &RealScalar, n: usize, beta: &RealScalar, include_infinity: bool) -> Result<PartitionResult> {
    z_general(&diophantine_spec(alpha, n, beta, include_infinity))
}

/// Both sides of the peeling identity `Z_{N+1}(M) = sum_i Z_N(M A_i^T)`.
#[derive(Clone, Debug, Serialize)]
pub struct Lemma31Check {
    pub n: usize,
    pub lhs: Interval,
    pub rhs: Interval,
    pub intersects: bool,
    /// With exact `M`: whether the two sides have the same multiset of `|M * W|`.
    pub multisets_equal: Option<bool>,
    /// With exact `M`, integer `beta` and few distinct terms: both sums as rationals agree.
    pub exact_sums_equal: Option<bool>,
}

/// Distinct values above which exact rational sums are not attempted.
pub const EXACT_SUM_LIMIT: usize = 20_000;

/// `spec.n` is the length on the left-hand side (`N + 1`).
pub fn lemma31_split(spec: &PartitionSpec) -> Result<Lemma31Check> {
    if spec.n == 0 {
        return Err(Error::InvalidInput("the left-hand side needs N + 1 >= 1".into()));
    }
    let eng = Engine::default();
    let lhs = eng.z_general(spec)?.value;
    let rhs = eng.z_recursive(spec)?.value;
    let mut check = Lemma31Check {
        n: spec.n - 1,
        lhs,
        rhs,
        intersects: lhs.intersects(&rhs),
        multisets_equal: None,
        exact_sums_equal: None,
    };
    let Some(m) = spec.m.as_exact() else {
        return Ok(check);
    };
    let left = hs_multiset(&m, &spec.prefix, &spec.alphabet, spec.n)?;
    let mut right: HashMap<BigRational, u64> = HashMap::new();
    for a in &spec.alphabet {
        let ma = spec.m.mul_transpose(a).as_exact().expect("exact times integer stays exact");
        for (h, c) in hs_multiset(&ma, &spec.prefix, &spec.alphabet, spec.n - 1)? {
            *right.entry(h).or_default() += c;
        }
    }
    check.multisets_equal = Some(left == right);
    let beta = spec.beta.exact().filter(|b| b.is_integer()).and_then(|b| b.to_integer().to_i32());
    if let Some(b) = beta {
        if left.len() <= EXACT_SUM_LIMIT && right.len() <= EXACT_SUM_LIMIT && b.unsigned_abs() <= 64 {
            let (ln, ld) = exact_sum(&left, b);
            let (rn, rd) = exact_sum(&right, b);
            check.exact_sums_equal = Some(ln * rd == rn * ld);
        }
    }
    Ok(check)
}

/// `sum c h^-beta` as an unreduced fraction over a common denominator.
/// Reducing after every addition is quadratic in the denominator size.
fn exact_sum(ms: &HashMap<BigRational, u64>, beta: i32) -> (BigInt, BigInt) {
    let mut keys: Vec<&BigRational> = ms.keys().collect();
    keys.sort();
    let e = beta.unsigned_abs();
    let terms: Vec<(BigInt, BigInt)> = keys
        .iter()
        .map(|h| {
            let (n, d) = (h.numer().pow(e), h.denom().pow(e));
            let c = BigInt::from(ms[*h]);
            if beta >= 0 {
                (c * d, n)
            } else {
                (c * n, d)
            }
        })
        .collect();
    let mut l = BigInt::one();
    for (_, q) in &terms {
        // gcd(l, q) = gcd(q, l mod q) keeps the work on the small operand.
        let g = q.gcd(&(&l % q));
        l = &l * (q / g);
    }
    let num = terms.iter().fold(BigInt::zero(), |acc, (p, q)| acc + p * (&l / q));
    (num, l)
}

/// Multiset of `|M * W|` over all words of length `n`, exactly.
fn hs_multiset(
    m: &[BigRational; 4],
    prefix: &IntMat2,
    alphabet: &[IntMat2],
    n: usize,
) -> Result<HashMap<BigRational, u64>> {
    let den = m.iter().fold(BigInt::one(), |l, r| l.lcm(r.denom()));
    let scaled: Vec<BigInt> = m.iter().map(|r| (r * &den).to_integer()).collect();
    let mut out: HashMap<BigInt, u64> = HashMap::new();
    let mut word = Vec::new();
    fn rec(
        node: &IntMat2,
        depth: usize,
        n: usize,
        alphabet: &[IntMat2],
        scaled: &[BigInt],
        word: &mut Vec<u8>,
        out: &mut HashMap<BigInt, u64>,
    ) -> Result<()> {
        if depth == n {
            let mut h = BigInt::zero();
            for (s, e) in scaled.iter().zip(node.entries()) {
                h += s * BigInt::from(e.clone());
            }
            if h.is_zero() {
                return Err(Error::ZeroForm(format!("M * W vanishes for the word {}", word_string(word))));
            }
            *out.entry(h.abs()).or_default() += 1;
            return Ok(());
        }
        for (i, a) in alphabet.iter().enumerate() {
            word.push(i as u8);
            rec(&node.mul(a), depth + 1, n, alphabet, scaled, word, out)?;
            word.pop();
        }
        Ok(())
    }
    rec(prefix, 0, n, alphabet, &scaled, &mut word, &mut out)?;
    Ok(out.into_iter().map(|(h, c)| (BigRational::new(h, den.clone()), c)).collect())
}

/// `E(w) = ln |M * W|` for the word matrix `W = P w`.
pub fn state_energy(m: &WeightMatrix, prefix: &IntMat2, word: &Word) -> Result<Interval> {
    let w = prefix.mul(&word.farey_matrix());
    Ok(certified_abs(&m.hs(&w), &word.0)?.ln())
}

/// `e^{-beta E(w)} / Z`, clipped to `[0, 1]`.
pub fn state_probability(
    m: &WeightMatrix,
    prefix: &IntMat2,
    word: &Word,
    beta: &RealScalar,
    z: &PartitionResult,
) -> Result<Interval> {
    if word.len() != z.n {
        return Err(Error::InvalidInput(format!("word length {} differs from N = {}", word.len(), z.n)));
    }
    let e = state_energy(m, prefix, word)?;
    let p = (-(e * beta.to_interval())).exp() / z.value;
    Ok(Interval::new(p.lo.clamp(0.0, 1.0), p.hi.clamp(0.0, 1.0)))
}

/// One enumerated term, for audit output.
#[derive(Clone, Debug, Serialize)]
pub struct TermRow {
    pub word: String,
    #[serde(serialize_with = "crate::contfrac::as_string")]
    pub p: BigUint,
    #[serde(serialize_with = "crate::contfrac::as_string")]
    pub q: BigUint,
    pub hs_lo: f64,
    pub hs_hi: f64,
    pub hs_mid: f64,
    pub term_lo: f64,
    pub term_hi: f64,
    pub term_mid: f64,
}

/// Every term of `Z_N` in lexicographic word order.
pub fn term_rows(spec: &PartitionSpec) -> Result<Vec<TermRow>> {
    spec.validate(TERM_EXPORT_CAP)?;
    let ctx = TermCtx { m: spec.m.clone(), beta: spec.beta.to_interval(), f: spec.weight_fn.clone() };
    let k = spec.alphabet.len();
    let total = (k as u64).pow(spec.n as u32);
    let mut rows = Vec::with_capacity(total as usize);
    for idx in 0..total {
        let word = Word::from_index(idx, spec.n, k);
        let w = spec.prefix.mul(&word.matrix(&spec.alphabet));
        let h = certified_abs(&spec.m.hs(&w), &word.0)?;
        let t = ctx.term_big(&w, &word.0)?;
        let (p, q) = (w.b.clone(), w.d.clone());
        rows.push(TermRow {
            word: word.to_string(),
            p,
            q,
            hs_lo: h.lo,
            hs_hi: h.hi,
            hs_mid: h.mid(),
            term_lo: t.lo,
            term_hi: t.hi,
            term_mid: t.mid(),
        });
    }
    Ok(rows)
}
