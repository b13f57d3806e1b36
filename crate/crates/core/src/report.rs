//! Machine-readable output: CSV series rows and JSON reports.

use std::io::Write;

use serde::Serialize;

use crate::analysis::{Diagnostic, FreeEnergySeries, LimitEstimate, SandwichBound};
use crate::error::Result;
use crate::numerics::Interval;

/// One enclosure in a series. `N_or_m` holds `N` for series over lengths and
/// the checkpoint index `m` for series over convergents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    #[serde(rename = "N_or_m")]
    pub n_or_m: String,
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    pub scale_tag: String,
}

impl SeriesRow {
    pub fn new(n_or_m: impl ToString, x: Interval, scale_tag: impl Into<String>) -> Self {
        SeriesRow { n_or_m: n_or_m.to_string(), lower: x.lo, upper: x.hi, midpoint: x.mid(), scale_tag: scale_tag.into() }
    }
}

pub fn estimate_rows(est: &LimitEstimate) -> Vec<SeriesRow> {
    est.points.iter().map(|p| SeriesRow::new(p.m, p.value, est.scale.clone())).collect()
}

/// Rows of `ln` of the estimate, for sequences that underflow.
pub fn estimate_ln_rows(est: &LimitEstimate) -> Vec<SeriesRow> {
    est.points.iter().map(|p| SeriesRow::new(p.m, p.ln_value, format!("ln:{}", est.scale))).collect()
}

/// Increment estimates `(ln q_m - ln q_{m-w}) / (s_m - s_{m-w})`.
pub fn increment_rows(est: &LimitEstimate) -> Vec<SeriesRow> {
    est.points
        .iter()
        .filter_map(|p| p.increment.map(|x| SeriesRow::new(p.m, x, format!("inc:{}", est.scale))))
        .collect()
}

pub fn series_rows(s: &FreeEnergySeries) -> Vec<SeriesRow> {
    s.points.iter().map(|p| SeriesRow::new(p.n, p.value, s.scale.clone())).collect()
}

/// Three rows per `N`: lower bound, `ln Z_N / N` when known, upper bound.
pub fn sandwich_rows(rows: &[SandwichBound]) -> Vec<SeriesRow> {
    let mut out = Vec::with_capacity(rows.len() * 3);
    for s in rows {
        out.push(SeriesRow::new(s.n, s.lower, "sandwich_lower"));
        if let Some(v) = s.log_z_over_n {
            out.push(SeriesRow::new(s.n, v, "N^1"));
        }
        out.push(SeriesRow::new(s.n, s.upper, "sandwich_upper"));
    }
    out
}

pub fn diagnostic_rows(d: &Diagnostic, tag: &str) -> Vec<SeriesRow> {
    d.points.iter().map(|p| SeriesRow::new(p.m, p.ln_value, format!("ln:{tag}"))).collect()
}

/// Header plus one line per row.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_header() {
        let rows = vec![SeriesRow::new(3, Interval::new(1.0, 2.0), "N^1")];
        let s = csv_string(&rows).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("N_or_m,lower,upper,midpoint,scale_tag"));
        assert_eq!(lines.next(), Some("3,1.0,2.0,1.5,N^1"));
    }

    #[test]
    fn empty_csv_is_empty() {
        assert_eq!(csv_string::<SeriesRow>(&[]).unwrap(), "");
    }
}
