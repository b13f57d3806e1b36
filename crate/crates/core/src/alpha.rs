//! Named ways of choosing the irrational (or rational) `alpha`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::contfrac::{CFExpansion, Exponent, PowerRule, DEFAULT_DIGIT_CAP};
use crate::error::{Error, Result};
use crate::numerics::{parse_decimal, LiteralSource, RealScalar, SurdSource};

const PI_DIGITS: &str = include_str!("pi_digits.txt");
const PI_RADIUS_BITS: u64 = 10_000;
/// Refuse literals claiming more precision than this many bits.
pub const MAX_LITERAL_BITS: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Named {
    Golden,
    EMinusOne,
    PiLiteral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Thm42,
    Thm43,
}

/// A parsed description of `alpha`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlphaSpec {
    Rational { p: BigInt, q: BigInt },
    /// `(p + sqrt(d)) / q`
    Surd { p: BigInt, q: BigInt, d: BigUint },
    Named(Named),
    Construct(Construction),
    /// A decimal known to within `2^-bits`.
    Literal { digits: String, bits: u64 },
}

fn bad(kind: &str, arg: &str, why: &str) -> Error {
    Error::InvalidInput(format!("bad --{kind} value {arg:?}: {why}"))
}

impl AlphaSpec {
    /// Parse one flag of the form `--<kind> <arg>`.
    pub fn parse(kind: &str, arg: &str) -> Result<AlphaSpec> {
        let arg = arg.trim();
        let int = |s: &str| s.trim().parse::<BigInt>().map_err(|_| bad(kind, arg, "expected an integer"));
        match kind {
            "rational" => {
                let (p, q) = arg.split_once('/').ok_or_else(|| bad(kind, arg, "expected p/q"))?;
                let (p, q) = (int(p)?, int(q)?);
                if !q.is_positive() {
                    return Err(bad(kind, arg, "denominator must be positive"));
                }
                Ok(AlphaSpec::Rational { p, q })
            }
            "surd" => {
                let parts: Vec<&str> = arg.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad(kind, arg, "expected P,Q,D"));
                }
                let d = parts[2].trim().parse::<BigUint>().map_err(|_| bad(kind, arg, "D must be a nonnegative integer"))?;
                Ok(AlphaSpec::Surd { p: int(parts[0])?, q: int(parts[1])?, d })
            }
            "named" => match arg {
                "golden" => Ok(AlphaSpec::Named(Named::Golden)),
                "e_minus_1" => Ok(AlphaSpec::Named(Named::EMinusOne)),
                "pi_literal" => Ok(AlphaSpec::Named(Named::PiLiteral)),
                _ => Err(bad(kind, arg, "expected golden, e_minus_1 or pi_literal")),
            },
            "construct" => match arg {
                "thm42" => Ok(AlphaSpec::Construct(Construction::Thm42)),
                "thm43" => Ok(AlphaSpec::Construct(Construction::Thm43)),
                _ => Err(bad(kind, arg, "expected thm42 or thm43")),
            },
            "literal" => {
                let (digits, bits) = arg.split_once('@').ok_or_else(|| bad(kind, arg, "expected <decimal>@<bits>"))?;
                let bits: u64 = bits.trim().parse().map_err(|_| bad(kind, arg, "bits must be a positive integer"))?;
                if bits == 0 || bits > MAX_LITERAL_BITS {
                    return Err(bad(kind, arg, "bits out of range"));
                }
                parse_decimal(digits)?;
                Ok(AlphaSpec::Literal { digits: digits.trim().to_string(), bits })
            }
            _ => Err(Error::InvalidInput(format!("unknown alpha kind {kind:?}"))),
        }
    }

    /// Build the number and its continued fraction.
    pub fn build(&self) -> Result<Alpha> {
        self.build_with(DEFAULT_DIGIT_CAP)
    }

    /// As [`AlphaSpec::build`], with a digit cap for rule-generated quotients.
    pub fn build_with(&self, digit_cap: u64) -> Result<Alpha> {
        let label = self.to_string();
        let (value, cf) = match self {
            AlphaSpec::Rational { p, q } => {
                let cf = CFExpansion::from_rational(p, q)?;
                (RealScalar::from_rational(BigRational::new(p.clone(), q.clone())), cf)
            }
            AlphaSpec::Surd { p, q, d } => {
                let cf = CFExpansion::from_surd(p, q, d)?;
                (RealScalar::new(Arc::new(SurdSource::new(p.clone(), q.clone(), d.clone())?)), cf)
            }
            AlphaSpec::Named(Named::Golden) => {
                let cf = CFExpansion::golden();
                (cf.value(), cf)
            }
            AlphaSpec::Named(Named::EMinusOne) => {
                let cf = CFExpansion::e_minus_1();
                (cf.value(), cf)
            }
            AlphaSpec::Named(Named::PiLiteral) => literal(PI_DIGITS, PI_RADIUS_BITS, "pi_literal")?,
            AlphaSpec::Construct(c) => {
                let exponent = match c {
                    Construction::Thm42 => Exponent::Index,
                    Construction::Thm43 => Exponent::Checkpoint,
                };
                let cf = CFExpansion::from_rule_with_cap(Box::new(PowerRule::new(exponent)), digit_cap);
                (cf.value(), cf)
            }
            AlphaSpec::Literal { digits, bits } => literal(digits, *bits, &label)?,
        };
        Ok(Alpha { label, value, cf })
    }
}

fn literal(digits: &str, bits: u64, name: &str) -> Result<(RealScalar, CFExpansion)> {
    let value = parse_decimal(digits)?;
    if value.is_zero() || value.is_negative() {
        return Err(Error::InvalidInput("only positive literals are supported".into()));
    }
    let src = LiteralSource::new(value, bits, name);
    let x = RealScalar::new(Arc::new(src));
    let cf = CFExpansion::from_real(x.clone())?;
    Ok((x, cf))
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Rational { p, q } => write!(f, "rational:{p}/{q}"),
            AlphaSpec::Surd { p, q, d } => write!(f, "surd:{p},{q},{d}"),
            AlphaSpec::Named(Named::Golden) => f.write_str("golden"),
            AlphaSpec::Named(Named::EMinusOne) => f.write_str("e_minus_1"),
            AlphaSpec::Named(Named::PiLiteral) => f.write_str("pi_literal"),
            AlphaSpec::Construct(Construction::Thm42) => f.write_str("thm42"),
            AlphaSpec::Construct(Construction::Thm43) => f.write_str("thm43"),
            AlphaSpec::Literal { digits, bits } => write!(f, "literal:{digits}@{bits}"),
        }
    }
}

impl FromStr for AlphaSpec {
    type Err = Error;

    /// `kind:arg`, or a bare name such as `golden` or `thm43`.
    fn from_str(s: &str) -> Result<AlphaSpec> {
        let s = s.trim();
        if let Some((kind, arg)) = s.split_once(':') {
            return AlphaSpec::parse(kind.trim(), arg);
        }
        AlphaSpec::parse("named", s).or_else(|_| AlphaSpec::parse("construct", s))
    }
}

/// A ready-to-use `alpha`: its enclosure plus its expansion.
#[derive(Clone, Debug)]
pub struct Alpha {
    pub label: String,
    pub value: RealScalar,
    pub cf: CFExpansion,
}
