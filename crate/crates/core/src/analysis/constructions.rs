use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use crate::contfrac::{CFExpansion, Exponent, PowerRule};
use crate::numerics::{ln_biguint, Interval};

/// `a_0 = 1, a_1 = 2`, then `a_{m+1} = q_{N_m}^m`: a number whose 1-free
/// energy limit exists (and is zero).
pub fn construct_thm42() -> CFExpansion {
    CFExpansion::from_rule(Box::new(PowerRule::new(Exponent::Index)))
}

/// `a_0 = 1, a_1 = 2`, then `a_{m+1} = q_{N_m}^{N_m}`: a number with no 1-free
/// energy limit.
pub fn construct_thm43() -> CFExpansion {
    CFExpansion::from_rule(Box::new(PowerRule::new(Exponent::Checkpoint)))
}

/// `beta (f(m) + 1) ln q_{N_m} / N_m` at one checkpoint.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticPoint {
    pub m: usize,
    pub ln_value: Interval,
    /// May underflow to zero; compare `ln_value` instead.
    pub value: Interval,
    /// Built from the rule's logarithm of a quotient past the digit cap.
    pub hinted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub points: Vec<DiagnosticPoint>,
    pub stop: Option<String>,
}

/// `ln((x + 1) / x)` lies in `[0, 1/x]`.
fn ln_succ_ratio(ln_x: Interval) -> Interval {
    Interval::new(0.0, (-ln_x).exp().hi)
}

/// `ln_ratio` is `ln((f(m) + 1) / N_m)`, passed whole so that the two large
/// logarithms never cancel inside interval arithmetic.
fn point(m: usize, beta: Interval, ln_ratio: Interval, ln_q: Interval, hinted: bool) -> DiagnosticPoint {
    let ln_value = beta.ln() + ln_ratio + ln_q.ln();
    DiagnosticPoint { m, ln_value, value: ln_value.exp(), hinted }
}

/// The diagnostic for `m = 0 ..= m_max`, continuing one checkpoint past the
/// digit cap through the rule's `ln a_m`.
pub fn construction_diagnostic(cf: &CFExpansion, exponent: Exponent, beta: Interval, m_max: usize) -> Diagnostic {
    let mut points = Vec::new();
    let mut prev: Option<(Interval, Interval)> = None;
    let mut stop = None;
    for m in 0..=m_max {
        match cf.row(m) {
            Ok((_, _, q, n)) => {
                let ln_q = if q.is_one() { Interval::ZERO } else { ln_biguint(&q) };
                let ln_n = if n.is_one() { Interval::ZERO } else { ln_biguint(&n) };
                let ln_ratio = match exponent {
                    Exponent::Index => Interval::from_u64(m as u64 + 1).ln() - ln_n,
                    Exponent::Checkpoint => ln_biguint(&(n + BigUint::one())) - ln_n,
                };
                points.push(point(m, beta, ln_ratio, ln_q, false));
                prev = Some((ln_q, ln_n));
            }
            Err(e) => {
                stop = Some(e.to_string());
                let (Some((lq, ln_prev)), Ok(ln_a)) = (prev, cf.ln_quotient(m)) else { break };
                // q_m in [a q_{m-1}, 2 a q_{m-1}]; N_m = a + N_{m-1}.
                let ln_q = Interval::new((ln_a + lq).lo, (ln_a + lq + Interval::ln2()).hi);
                let ratio = (ln_prev - ln_a).exp();
                let ln_n = ln_a + Interval::new(0.0, (Interval::ONE + ratio).ln().hi);
                let ln_ratio = match exponent {
                    Exponent::Index => Interval::from_u64(m as u64 + 1).ln() - ln_n,
                    Exponent::Checkpoint => ln_succ_ratio(ln_n),
                };
                points.push(point(m, beta, ln_ratio, ln_q, true));
                break;
            }
        }
    }
    Diagnostic { points, stop }
}

impl Diagnostic {
    /// Certified strict decrease of `ln_value` over points with `m >= from`.
    pub fn strictly_decreasing_from(&self, from: usize) -> bool {
        let v: Vec<&DiagnosticPoint> = self.points.iter().filter(|p| p.m >= from).collect();
        v.len() >= 2 && v.windows(2).all(|w| w[1].ln_value.certainly_lt(&w[0].ln_value))
    }

    pub fn strictly_increasing_from(&self, from: usize) -> bool {
        let v: Vec<&DiagnosticPoint> = self.points.iter().filter(|p| p.m >= from).collect();
        v.len() >= 2 && v.windows(2).all(|w| w[0].ln_value.certainly_lt(&w[1].ln_value))
    }
}
