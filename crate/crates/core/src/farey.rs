//! The monoid generated by `A0 = (1 0 / 1 1)` and `A1 = (1 1 / 0 1)`, Farey
//! sets, Hilbert-Schmidt products and Stern-Brocot localization.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{rat_to_interval, Enclosure, RealScalar};

/// Largest `n` accepted by [`farey_set`] and [`right_columns`].
pub const FAREY_CAP: usize = 30;
/// Refuse to materialize more elements than this.
pub const FAREY_MEMORY_GUARD: u64 = 1 << 25;

/// 2x2 matrix of nonnegative big integers, row-major `(a b / c d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMat2 {
    pub a: BigUint,
    pub b: BigUint,
    pub c: BigUint,
    pub d: BigUint,
}

impl IntMat2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        IntMat2 { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Self {
        IntMat2::new(1, 0, 0, 1)
    }

    pub fn a0() -> Self {
        IntMat2::new(1, 0, 1, 1)
    }

    pub fn a1() -> Self {
        IntMat2::new(1, 1, 0, 1)
    }

    /// The two Farey generators, indexed by letter.
    pub fn farey_alphabet() -> Vec<IntMat2> {
        vec![IntMat2::a0(), IntMat2::a1()]
    }

    pub fn mul(&self, o: &IntMat2) -> IntMat2 {
        IntMat2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn det(&self) -> BigInt {
        BigInt::from(&self.a * &self.d) - BigInt::from(&self.b * &self.c)
    }

    pub fn transpose(&self) -> IntMat2 {
        IntMat2 { a: self.a.clone(), b: self.c.clone(), c: self.b.clone(), d: self.d.clone() }
    }

    /// Right column `(b, d)` read as the fraction `b/d`.
    pub fn right_column(&self) -> Fraction {
        Fraction::new(self.b.clone(), self.d.clone())
    }

    /// Left column `(a, c)` read as `a/c`.
    pub fn left_column(&self) -> Fraction {
        Fraction::new(self.a.clone(), self.c.clone())
    }

    pub fn entries(&self) -> [&BigUint; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn to_u64(&self) -> Option<[u64; 4]> {
        Some([self.a.to_u64()?, self.b.to_u64()?, self.c.to_u64()?, self.d.to_u64()?])
    }
}

impl fmt::Display for IntMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} / {} {})", self.a, self.b, self.c, self.d)
    }
}

pub fn mat_mul(x: &IntMat2, y: &IntMat2) -> IntMat2 {
    x.mul(y)
}

/// Hilbert-Schmidt product `Tr(X Y^T)`, the entrywise dot product.
pub fn hs_product(x: &IntMat2, y: &IntMat2) -> BigUint {
    &x.a * &y.a + &x.b * &y.b + &x.c * &y.c + &x.d * &y.d
}

/// All pairwise products, `t1` index major.
pub fn tuple_product(t1: &[IntMat2], t2: &[IntMat2]) -> Vec<IntMat2> {
    t1.iter().flat_map(|x| t2.iter().map(move |y| x.mul(y))).collect()
}

/// Reduced nonnegative fraction; `1/0` is the point at infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: BigUint,
    pub den: BigUint,
}

impl Fraction {
    /// Reduces to lowest terms. Panics on `0/0`.
    pub fn new(num: BigUint, den: BigUint) -> Self {
        assert!(!(num.is_zero() && den.is_zero()), "0/0 is not a fraction");
        let g = num.gcd(&den);
        Fraction { num: num / &g, den: den / &g }
    }

    pub fn from_u64(num: u64, den: u64) -> Self {
        Fraction::new(num.into(), den.into())
    }

    pub fn infinity() -> Self {
        Fraction::from_u64(1, 0)
    }

    pub fn is_infinity(&self) -> bool {
        self.den.is_zero()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        (!self.den.is_zero()).then(|| BigRational::new(self.num.clone().into(), self.den.clone().into()))
    }

    pub fn mediant(&self, o: &Fraction) -> Fraction {
        Fraction::new(&self.num + &o.num, &self.den + &o.den)
    }

    /// `|p s - r q|`, which is 1 for Farey neighbours.
    pub fn cross(&self, o: &Fraction) -> BigUint {
        let x = &self.num * &o.den;
        let y = &o.num * &self.den;
        if x >= y {
            x - y
        } else {
            y - x
        }
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, o: &Self) -> Ordering {
        (&self.num * &o.den).cmp(&(&o.num * &self.den))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("not a fraction: {s:?}"));
        let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
        let p: BigUint = p.trim().parse().map_err(|_| bad())?;
        let q: BigUint = q.trim().parse().map_err(|_| bad())?;
        if p.is_zero() && q.is_zero() {
            return Err(bad());
        }
        Ok(Fraction::new(p, q))
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A word over a finite alphabet; letter `i` stands for the `i`-th matrix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, letter: u8) {
        self.0.push(letter);
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Product of the letters' matrices, left to right.
    pub fn matrix(&self, alphabet: &[IntMat2]) -> IntMat2 {
        self.0.iter().fold(IntMat2::identity(), |m, &l| m.mul(&alphabet[l as usize]))
    }

    pub fn farey_matrix(&self) -> IntMat2 {
        self.matrix(&IntMat2::farey_alphabet())
    }

    /// Decode a word from its index in lexicographic order among words of
    /// length `n` over `k` letters.
    pub fn from_index(mut idx: u64, n: usize, k: usize) -> Word {
        let mut v = vec![0u8; n];
        for slot in v.iter_mut().rev() {
            *slot = (idx % k as u64) as u8;
            idx /= k as u64;
        }
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for &l in &self.0 {
            write!(f, "{}", char::from_digit(l as u32, 36).unwrap_or('?'))?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "-" {
            return Ok(Word::empty());
        }
        s.chars()
            .map(|c| c.to_digit(36).map(|d| d as u8))
            .collect::<Option<Vec<_>>>()
            .map(Word)
            .ok_or_else(|| Error::InvalidInput(format!("not a word: {s:?}")))
    }
}

fn check_cap(n: usize) -> Result<()> {
    if n > FAREY_CAP {
        return Err(Error::CapExceeded(format!("n = {n} exceeds the Farey cap {FAREY_CAP}")));
    }
    if (1u64 << n) + 1 > FAREY_MEMORY_GUARD {
        return Err(Error::CapExceeded(format!(
            "2^{n} + 1 elements exceed the memory guard of {FAREY_MEMORY_GUARD}"
        )));
    }
    Ok(())
}

/// `F_n` as `(num, den)` pairs, in decreasing order from `1/0` to `0/1`.
pub fn farey_pairs(n: usize) -> Result<Vec<(u64, u64)>> {
    check_cap(n)?;
    let mut cur = vec![(1u64, 0u64), (0, 1)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(2 * cur.len() - 1);
        for w in cur.windows(2) {
            next.push(w[0]);
            next.push((w[0].0 + w[1].0, w[0].1 + w[1].1));
        }
        next.push(*cur.last().unwrap());
        cur = next;
    }
    Ok(cur)
}

/// The `n`-th Farey set in decreasing order, `1/0` first.
pub fn farey_set(n: usize) -> Result<Vec<Fraction>> {
    Ok(farey_pairs(n)?.into_iter().map(|(p, q)| Fraction::from_u64(p, q)).collect())
}

/// The same set in increasing order.
pub fn reversed(set: &[Fraction]) -> Vec<Fraction> {
    set.iter().rev().cloned().collect()
}

/// Right columns of the `2^n` words of length `n`, lexicographic word order.
pub fn right_column_pairs(n: usize) -> Result<Vec<(u64, u64)>> {
    check_cap(n)?;
    let mut out = Vec::with_capacity(1 << n);
    fn walk(m: [u64; 4], depth: usize, n: usize, out: &mut Vec<(u64, u64)>) {
        if depth == n {
            out.push((m[1], m[3]));
            return;
        }
        let [a, b, c, d] = m;
        walk([a + b, b, c + d, d], depth + 1, n, out);
        walk([a, a + b, c, c + d], depth + 1, n, out);
    }
    walk([1, 0, 0, 1], 0, n, &mut out);
    Ok(out)
}

pub fn right_columns(n: usize) -> Result<Vec<Fraction>> {
    Ok(right_column_pairs(n)?.into_iter().map(|(p, q)| Fraction::from_u64(p, q)).collect())
}

/// The length-`n` word whose interval `[b/d, a/c]` contains `alpha`.
///
/// Each step compares `alpha` with the mediant `(a+b)/(c+d)`: above goes to
/// `A1`, below to `A0`. Landing exactly on a mediant is a boundary hit.
pub fn localize(alpha: &RealScalar, n: usize) -> Result<Word> {
    let mut m = IntMat2::identity();
    let mut w = Word::empty();
    for _ in 0..n {
        let med = BigRational::new((&m.a + &m.b).into(), (&m.c + &m.d).into());
        match alpha.cmp_rational(&med)? {
            Ordering::Greater => {
                m = m.mul(&IntMat2::a1());
                w.push(1);
            }
            Ordering::Less => {
                m = m.mul(&IntMat2::a0());
                w.push(0);
            }
            Ordering::Equal => {
                return Err(Error::BoundaryHit(format!("{} equals the Farey point {med}", alpha.label())))
            }
        }
    }
    Ok(w)
}

/// Shortest Farey word whose matrix has right column `p/q`.
///
/// The Stern-Brocot path to `p/q` ends on a matrix whose mediant is `p/q`;
/// one more `A1` moves that mediant into the right column. `1/0` is never a
/// right column.
pub fn word_for_fraction(f: &Fraction) -> Option<Word> {
    let mut w = Word::empty();
    if f.den.is_zero() {
        return None;
    }
    if f.num.is_zero() {
        w.push(0);
        return Some(w);
    }
    let (mut a, mut b, mut c, mut d) = (BigUint::one(), BigUint::zero(), BigUint::zero(), BigUint::one());
    loop {
        let (mp, mq) = (&a + &b, &c + &d);
        match (&f.num * &mq).cmp(&(&mp * &f.den)) {
            Ordering::Equal => break,
            Ordering::Greater => {
                w.push(1);
                b = mp;
                d = mq;
            }
            Ordering::Less => {
                w.push(0);
                a = mp;
                c = mq;
            }
        }
    }
    w.push(1);
    Some(w)
}

/// A real entry of a weight matrix: `constant + sum k_i x_i` with integer
/// `k_i` and refinable reals `x_i`.
#[derive(Clone, Debug)]
pub struct Weight {
    constant: BigRational,
    terms: Vec<(BigInt, RealScalar)>,
}

fn same_source(a: &RealScalar, b: &RealScalar) -> bool {
    std::ptr::eq(Arc::as_ptr(a.source()) as *const (), Arc::as_ptr(b.source()) as *const ())
}

impl Weight {
    pub fn exact(r: BigRational) -> Self {
        Weight { constant: r, terms: Vec::new() }
    }

    pub fn int(n: i64) -> Self {
        Weight::exact(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Weight::int(0)
    }

    pub fn real(x: RealScalar) -> Self {
        match x.exact() {
            Some(r) => Weight::exact(r),
            None => Weight { constant: BigRational::zero(), terms: vec![(BigInt::one(), x)] },
        }
    }

    /// The exact value when no irrational part is present.
    pub fn as_exact(&self) -> Option<&BigRational> {
        self.terms.is_empty().then_some(&self.constant)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.as_exact().is_some_and(|r| r.is_zero())
    }

    pub fn scale(&self, k: &BigInt) -> Weight {
        if k.is_zero() {
            return Weight::zero();
        }
        Weight {
            constant: &self.constant * k,
            terms: self.terms.iter().map(|(c, x)| (c * k, x.clone())).collect(),
        }
    }

    pub fn add(&self, o: &Weight) -> Weight {
        let mut terms = self.terms.clone();
        for (k, x) in &o.terms {
            match terms.iter_mut().find(|(_, y)| same_source(x, y)) {
                Some(slot) => slot.0 += k,
                None => terms.push((k.clone(), x.clone())),
            }
        }
        terms.retain(|(k, _)| !k.is_zero());
        Weight { constant: &self.constant + &o.constant, terms }
    }

    /// Enclosure of width at most `2^-bits`.
    pub fn enclose(&self, bits: u64) -> Enclosure {
        let extra = 2 + (self.terms.len() as u64).next_power_of_two().trailing_zeros() as u64;
        let mut e = Enclosure::point(self.constant.clone());
        for (k, x) in &self.terms {
            let xe = x.refine(bits + k.bits() + extra);
            e = e.add(&xe.enclosure().mul_int(k));
        }
        e
    }

    /// Split as `hi + lo + [-r, r]` in doubles, for the fast summation path.
    pub fn split_f64(&self) -> (f64, f64, f64) {
        if let Some(r) = self.as_exact() {
            if r.is_integer() {
                if let Some(v) = r.to_integer().to_i64() {
                    if v.unsigned_abs() < (1u64 << 53) {
                        return (v as f64, 0.0, 0.0);
                    }
                }
            }
        }
        let e = self.enclose(256);
        let mid = e.mid();
        let hi = rat_to_interval(&mid).lo;
        let rest = &mid - BigRational::from_float(hi).unwrap_or_else(BigRational::zero);
        let lo = rat_to_interval(&rest).lo;
        let resid = (&rest - BigRational::from_float(lo).unwrap_or_else(BigRational::zero)).abs_rat()
            + e.width() / BigInt::from(2);
        (hi, lo, rat_to_interval(&resid).hi)
    }
}

trait AbsRat {
    fn abs_rat(self) -> BigRational;
}

impl AbsRat for BigRational {
    fn abs_rat(self) -> BigRational {
        if self < BigRational::zero() {
            -self
        } else {
            self
        }
    }
}

/// A weight matrix `M` with entries `(m11 m12 / m21 m22)`.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    pub m: [Weight; 4],
}

impl WeightMatrix {
    pub fn new(m: [Weight; 4]) -> Result<Self> {
        if m.iter().all(Weight::is_exact_zero) {
            return Err(Error::InvalidInput("weight matrix is identically zero".into()));
        }
        Ok(WeightMatrix { m })
    }

    /// `(0 0 / 0 1)`
    pub fn knauf() -> Self {
        WeightMatrix { m: [Weight::zero(), Weight::zero(), Weight::zero(), Weight::int(1)] }
    }

    /// `(0 0 / x 1)`
    pub fn fiala_kleban(x: RealScalar) -> Self {
        WeightMatrix { m: [Weight::zero(), Weight::zero(), Weight::real(x), Weight::int(1)] }
    }

    /// `(0 -1 / 0 alpha)`, so that `M * W = alpha q - p` for right column `(p, q)`.
    pub fn diophantine(alpha: RealScalar) -> Self {
        WeightMatrix { m: [Weight::zero(), Weight::int(-1), Weight::zero(), Weight::real(alpha)] }
    }

    pub fn from_rationals(r: [BigRational; 4]) -> Result<Self> {
        WeightMatrix::new(r.map(Weight::exact))
    }

    pub fn as_exact(&self) -> Option<[BigRational; 4]> {
        let v: Option<Vec<BigRational>> = self.m.iter().map(|w| w.as_exact().cloned()).collect();
        v.map(|v| [v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()])
    }

    /// `M A^T`, entry `(i, j)` being `sum_k M_ik A_jk`.
    pub fn mul_transpose(&self, a: &IntMat2) -> WeightMatrix {
        let ar = [[&a.a, &a.b], [&a.c, &a.d]];
        let mut out: Vec<Weight> = Vec::with_capacity(4);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Weight::zero();
                for k in 0..2 {
                    let coef = BigInt::from(ar[j][k].clone());
                    if !coef.is_zero() {
                        acc = acc.add(&self.m[2 * i + k].scale(&coef));
                    }
                }
                out.push(acc);
            }
        }
        let [a, b, c, d]: [Weight; 4] = out.try_into().unwrap();
        WeightMatrix { m: [a, b, c, d] }
    }

    /// `M * W` as an exact linear combination.
    pub fn hs(&self, w: &IntMat2) -> Weight {
        let mut acc = Weight::zero();
        for (mi, wi) in self.m.iter().zip(w.entries()) {
            if !wi.is_zero() {
                acc = acc.add(&mi.scale(&BigInt::from(wi.clone())));
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fr(p: u64, q: u64) -> Fraction {
        Fraction::from_u64(p, q)
    }

    #[test]
    fn generator_products() {
        assert_eq!(IntMat2::a0().mul(&IntMat2::a1()), IntMat2::new(1, 1, 1, 2));
        assert_eq!(IntMat2::identity().mul(&IntMat2::a1()), IntMat2::a1());
        let m = IntMat2::new(2, 3, 5, 7);
        assert_eq!(m.mul(&IntMat2::a0()), IntMat2::new(5, 3, 12, 7));
    }

    #[test]
    fn hs_examples() {
        assert_eq!(hs_product(&IntMat2::a0(), &IntMat2::a1()), BigUint::from(2u32));
        assert_eq!(hs_product(&IntMat2::a0(), &IntMat2::a0()), BigUint::from(3u32));
    }

    #[test]
    fn tuple_product_order() {
        let t = IntMat2::farey_alphabet();
        let p = tuple_product(&t, &t);
        assert_eq!(p.len(), 4);
        assert_eq!(p[1], IntMat2::a0().mul(&IntMat2::a1()));
        assert_eq!(p[2], IntMat2::a1().mul(&IntMat2::a0()));
        assert_eq!(tuple_product(&t, &p).len(), 8);
    }

    #[test]
    fn small_farey_sets() {
        assert_eq!(farey_set(0).unwrap(), vec![fr(1, 0), fr(0, 1)]);
        assert_eq!(farey_set(2).unwrap(), vec![fr(1, 0), fr(2, 1), fr(1, 1), fr(1, 2), fr(0, 1)]);
        let f3 = farey_set(3).unwrap();
        assert_eq!(f3.len(), 9);
        assert!(f3.contains(&fr(3, 2)) && f3.contains(&fr(2, 3)));
        assert!(matches!(farey_set(31), Err(Error::CapExceeded(_))));
        assert!(matches!(farey_set(26), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn right_columns_small() {
        assert_eq!(right_columns(1).unwrap(), vec![fr(0, 1), fr(1, 1)]);
        let mut r2 = right_columns(2).unwrap();
        r2.sort();
        assert_eq!(r2, vec![fr(0, 1), fr(1, 2), fr(1, 1), fr(2, 1)]);
    }

    #[test]
    fn localize_examples() {
        let phi = RealScalar::surd(1, 2, 5).unwrap();
        assert_eq!(localize(&phi, 2).unwrap().to_string(), "10");
        let w = localize(&phi, 2).unwrap().farey_matrix();
        assert_eq!((w.right_column(), w.left_column()), (fr(1, 1), fr(2, 1)));
        let sqrt2 = RealScalar::surd(0, 1, 2).unwrap();
        assert_eq!(localize(&sqrt2, 1).unwrap().to_string(), "1");
        let half = RealScalar::from_rational(BigRational::new(1.into(), 2.into()));
        assert!(matches!(localize(&half, 2), Err(Error::BoundaryHit(_))));
    }

    #[test]
    fn word_for_fraction_lands_on_column() {
        assert!(word_for_fraction(&Fraction::infinity()).is_none());
        for f in farey_set(6).unwrap().into_iter().skip(1) {
            let w = word_for_fraction(&f).unwrap();
            assert_eq!(w.farey_matrix().right_column(), f, "{f} -> {w}");
        }
    }

    #[test]
    fn word_round_trip() {
        let w: Word = "0110".parse().unwrap();
        assert_eq!(w.to_string(), "0110");
        assert_eq!(Word::from_index(6, 4, 2), w);
    }

    #[test]
    fn diophantine_weight_reads_right_column() {
        let alpha = RealScalar::surd(0, 1, 2).unwrap();
        let m = WeightMatrix::diophantine(alpha);
        let w = IntMat2::new(2, 3, 1, 2);
        let v = m.hs(&w).enclose(60).to_interval();
        assert!((v.mid() - (2.0 * std::f64::consts::SQRT_2 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn mul_transpose_peels_last_letter() {
        let alpha = RealScalar::surd(1, 2, 5).unwrap();
        let m = WeightMatrix::diophantine(alpha);
        let p = IntMat2::new(3, 2, 1, 1);
        for a in IntMat2::farey_alphabet() {
            let lhs = m.hs(&p.mul(&a)).enclose(80).to_interval();
            let rhs = m.mul_transpose(&a).hs(&p).enclose(80).to_interval();
            assert!(lhs.intersects(&rhs));
        }
    }

    #[test]
    fn split_f64_is_tight() {
        let w = Weight::real(RealScalar::surd(1, 2, 5).unwrap());
        let (hi, lo, r) = w.split_f64();
        assert!((hi - 1.618_033_988_749_895).abs() < 1e-15);
        assert!(lo.abs() < 1e-15);
        assert!(r < 1e-30);
    }
}
