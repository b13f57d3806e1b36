//! Quantities built on partition values: zeta-ratio constants, cone bounds,
//! the convergent sandwich, free-energy series under arbitrary scalings, the
//! two rule-generated constructions, and classification verdicts.

mod classify;
mod cone;
mod constructions;
mod series;
mod zeta;

pub use classify::{classify, fit_scale, Budget, ClassificationReport, KVerdict, SandwichRow, ScaleFit, Trend, Verdict, VerdictEntry};
pub use cone::{cone_bounds, cone_bounds_with, cone_partial_sum, Cone, ConeSum};
pub use constructions::{construct_thm42, construct_thm43, construction_diagnostic, Diagnostic, DiagnosticPoint};
pub use series::{
    convergent_limit_estimate, d_estimate, free_energy_series, quad_free_energy, thm46_bounds, EstimatePoint,
    FreeEnergySeries, LimitEstimate, PointKind, QuadEnergy, SandwichBound, Scale, SeriesPoint,
};
pub use zeta::{coprime_pair_count, coprime_pair_sum, totient_sum, totient_tail, totients, zeta, zeta_ratio, zeta_with_terms, ZETA_TERMS};
