use serde::Serialize;

use super::constructions::{construction_diagnostic, Diagnostic};
use super::series::{d_estimate, thm46_bounds, EstimatePoint, LimitEstimate, Scale};
use super::zeta::zeta_ratio;
use crate::contfrac::{CFExpansion, Exponent};
use crate::error::{Error, Result};
use crate::numerics::{Interval, RealScalar};
use crate::partition::{diophantine_spec, Engine};

/// Knobs for [`classify`].
#[derive(Clone, Debug)]
pub struct Budget {
    /// Deepest checkpoint `m` to examine.
    pub depth: usize,
    /// Consecutive checkpoints in the Cauchy window.
    pub window: usize,
    /// Largest relative change tolerated inside the window.
    pub tol: f64,
    /// Largest `|d ln s / d ln N|` still counted as flat.
    pub slope_tol: f64,
    pub k_grid: Vec<f64>,
    /// Longest enumerated `Z_N` used for cross-validation.
    pub enum_n: usize,
    pub engine: Engine,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            depth: 400,
            window: 5,
            tol: 1e-2,
            slope_tol: 0.1,
            k_grid: vec![1.0, 1.25, 1.5, 2.0],
            enum_n: 16,
            engine: Engine::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supported,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Flat in `ln N` and Cauchy within tolerance: a positive finite limit.
    Stable,
    ToZero,
    Diverging,
    Inconclusive,
}

/// How one scaling behaves on the checkpoint sequence.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleFit {
    pub scale: String,
    pub trend: Trend,
    /// `d ln s / d ln N` between an early and a late block of checkpoints.
    pub slope: Option<f64>,
    /// Largest relative step inside the final window.
    pub cauchy_change: Option<f64>,
    /// Hull of the final window's enclosures.
    pub window: Option<Interval>,
    pub points: usize,
    pub last_m: Option<usize>,
    pub stop: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictEntry {
    pub verdict: Verdict,
    /// Enclosure of the free-energy limit when one is claimed.
    pub limit: Option<Interval>,
    pub evidence: String,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KVerdict {
    pub k: f64,
    #[serde(flatten)]
    pub entry: VerdictEntry,
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichRow {
    pub n: u64,
    pub lower: Interval,
    pub upper: Interval,
    pub log_z_over_n: Interval,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub alpha: String,
    pub beta: Interval,
    pub one_free_energy: VerdictEntry,
    pub k_free_energy_zero: Vec<KVerdict>,
    /// The scaling under which the sequence settles to a positive limit.
    pub fitted_scale: Option<String>,
    pub fits: Vec<ScaleFit>,
    pub sandwich: Vec<SandwichRow>,
    pub construction: Option<Diagnostic>,
    pub notes: Vec<String>,
}

fn mean_ln(pts: &[&EstimatePoint]) -> (f64, f64) {
    let k = pts.len() as f64;
    let v = pts.iter().map(|p| p.ln_value.mid()).sum::<f64>() / k;
    let n = pts.iter().map(|p| p.ln_n.mid()).sum::<f64>() / k;
    (v, n)
}

/// Classify the trend of an estimate sequence.
pub fn fit_scale(est: &LimitEstimate, budget: &Budget) -> ScaleFit {
    let pts: Vec<&EstimatePoint> = est.points.iter().filter(|p| p.ln_value.is_finite()).collect();
    let mut fit = ScaleFit {
        scale: est.scale.clone(),
        trend: Trend::Inconclusive,
        slope: None,
        cauchy_change: None,
        window: None,
        points: pts.len(),
        last_m: pts.last().map(|p| p.m),
        stop: est.stop.clone(),
    };
    if pts.len() < 4 {
        return fit;
    }
    let w = budget.window.max(2).min(pts.len() / 2);
    let tail = &pts[pts.len() - w..];
    let early_start = (pts.len() / 2).saturating_sub(w / 2).min(pts.len() - 2 * w);
    let early = &pts[early_start..early_start + w];
    let (v0, n0) = mean_ln(early);
    let (v1, n1) = mean_ln(tail);
    let slope = if n1 > n0 { (v1 - v0) / (n1 - n0) } else { f64::NAN };
    let change = tail
        .windows(2)
        .map(|x| {
            let a = x[0].value.mid();
            let b = x[1].value.mid();
            ((b - a) / b).abs()
        })
        .fold(0.0f64, f64::max);
    let hull = tail.iter().map(|p| p.value).reduce(|a, b| a.hull(&b)).unwrap();
    fit.slope = slope.is_finite().then_some(slope);
    fit.cauchy_change = change.is_finite().then_some(change);
    fit.window = Some(hull);
    fit.trend = if !slope.is_finite() {
        Trend::Inconclusive
    } else if slope > budget.slope_tol {
        Trend::Diverging
    } else if slope < -budget.slope_tol {
        Trend::ToZero
    } else if change < budget.tol {
        Trend::Stable
    } else {
        Trend::Inconclusive
    };
    fit
}

fn construction_kind(cf: &CFExpansion) -> Option<Exponent> {
    match cf.source_tag().as_str() {
        "rule(thm42)" => Some(Exponent::Index),
        "rule(thm43)" => Some(Exponent::Checkpoint),
        _ => None,
    }
}

fn describe(fit: &ScaleFit) -> String {
    format!(
        "{} over {} checkpoints (last m = {}): slope {}, max relative step {}",
        fit.scale,
        fit.points,
        fit.last_m.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
        fit.slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into()),
        fit.cauchy_change.map(|s| format!("{s:.2e}")).unwrap_or_else(|| "n/a".into()),
    )
}

/// Numerical verdicts on which free-energy limits `alpha` has, from the
/// checkpoint sequence `ln d_{N_m} / scale(N_m)` under several scalings,
/// cross-checked against enumerated partition functions.
pub fn classify(
    alpha: &RealScalar,
    cf: &CFExpansion,
    label: &str,
    beta: &RealScalar,
    budget: &Budget,
) -> Result<ClassificationReport> {
    let b = beta.to_interval();
    if !(b.lo > 2.0) {
        return Err(Error::InvalidInput(format!("classification needs beta > 2, got {b}")));
    }
    let mut notes = Vec::new();
    let mut scales: Vec<Scale> = vec![Scale::Power(1.0)];
    for &k in &budget.k_grid {
        if k != 1.0 {
            scales.push(Scale::Power(k));
        }
    }
    scales.push(Scale::SqrtNLogN);
    let mut fits = Vec::new();
    for s in &scales {
        fits.push(fit_scale(&d_estimate(cf, s, budget.depth)?, budget));
    }

    let construction = construction_kind(cf).map(|e| construction_diagnostic(cf, e, b, budget.depth));

    let one = &fits[0];
    let mut one_free = match one.trend {
        Trend::Stable => VerdictEntry {
            verdict: Verdict::Supported,
            limit: one.window.map(|w| w * b),
            evidence: format!("stable: {}", describe(one)),
            tolerance: budget.tol,
        },
        Trend::ToZero => VerdictEntry {
            verdict: Verdict::Supported,
            limit: one.window.map(|w| Interval::new(0.0, (w * b).hi)),
            evidence: format!("tends to zero: {}", describe(one)),
            tolerance: budget.slope_tol,
        },
        Trend::Diverging => VerdictEntry {
            verdict: Verdict::Refuted,
            limit: None,
            evidence: format!("refuted (unbounded subsequence witness): {}", describe(one)),
            tolerance: budget.slope_tol,
        },
        Trend::Inconclusive => VerdictEntry {
            verdict: Verdict::Inconclusive,
            limit: None,
            evidence: describe(one),
            tolerance: budget.tol,
        },
    };
    if let (Some(diag), Some(Exponent::Checkpoint)) = (&construction, construction_kind(cf)) {
        let first = diag.points.iter().find(|p| p.value.lo > 0.0);
        let last = diag.points.last();
        if let (Some(f), Some(l)) = (first, last) {
            if diag.strictly_increasing_from(0) && l.value.lo > 10.0 * f.value.hi {
                one_free = VerdictEntry {
                    verdict: Verdict::Refuted,
                    limit: None,
                    evidence: format!(
                        "refuted (unbounded subsequence witness): lower-bound diagnostic rises from {:.4e} at m = {} to {:.4e} at m = {}",
                        f.value.mid(),
                        f.m,
                        l.value.mid(),
                        l.m
                    ),
                    tolerance: 10.0,
                };
            }
        }
    }

    let mut k_verdicts = Vec::new();
    for (s, fit) in scales.iter().zip(&fits) {
        let Scale::Power(k) = s else { continue };
        if *k <= 1.0 {
            continue;
        }
        let (verdict, limit) = match fit.trend {
            Trend::ToZero => (Verdict::Supported, fit.window.map(|w| Interval::new(0.0, (w * b).hi))),
            Trend::Stable | Trend::Diverging => (Verdict::Refuted, None),
            Trend::Inconclusive => (Verdict::Inconclusive, None),
        };
        k_verdicts.push(KVerdict {
            k: *k,
            entry: VerdictEntry { verdict, limit, evidence: describe(fit), tolerance: budget.slope_tol },
        });
    }

    let fitted_scale = scales
        .iter()
        .zip(&fits)
        .filter(|(_, f)| f.trend == Trend::Stable)
        .min_by(|a, b| {
            let x = a.1.slope.unwrap_or(f64::INFINITY).abs();
            let y = b.1.slope.unwrap_or(f64::INFINITY).abs();
            x.total_cmp(&y)
        })
        .map(|(s, _)| s.tag());

    let mut sandwich = Vec::new();
    if budget.enum_n > 0 {
        let n = budget.enum_n.min(budget.engine.cap);
        match budget.engine.z_profile(&diophantine_spec(alpha, n, beta, false)) {
            Ok(profile) => {
                let zr = zeta_ratio(b)?;
                for res in profile.iter().skip(1) {
                    let mut s = thm46_bounds(alpha, cf, b, res.n as u64, Some(zr))?;
                    let holds = s.check(res.value);
                    sandwich.push(SandwichRow {
                        n: res.n as u64,
                        lower: s.lower,
                        upper: s.upper,
                        log_z_over_n: s.log_z_over_n.unwrap(),
                        holds,
                    });
                }
                if sandwich.iter().any(|r| !r.holds) {
                    notes.push("the enumerated sandwich failed at some N; see the sandwich rows".into());
                }
            }
            Err(e) => notes.push(format!("enumeration skipped: {e}")),
        }
    }

    Ok(ClassificationReport {
        alpha: label.to_string(),
        beta: b,
        one_free_energy: one_free,
        k_free_energy_zero: k_verdicts,
        fitted_scale,
        fits,
        sandwich,
        construction,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Budget {
        Budget { depth: 200, enum_n: 10, ..Budget::default() }
    }

    #[test]
    fn golden_has_one_free_energy() {
        let phi = RealScalar::surd(1, 2, 5).unwrap();
        let r = classify(&phi, &CFExpansion::golden(), "golden", &RealScalar::from_int(3), &quick()).unwrap();
        assert_eq!(r.one_free_energy.verdict, Verdict::Supported);
        let want = 3.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln();
        assert!(r.one_free_energy.limit.unwrap().contains(want));
        assert_eq!(r.fitted_scale.as_deref(), Some("N^1"));
        assert!(r.k_free_energy_zero.iter().all(|k| k.entry.verdict == Verdict::Supported));
        assert!(r.sandwich.iter().all(|s| s.holds));
    }
}
