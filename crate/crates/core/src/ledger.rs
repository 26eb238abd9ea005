//! Format/degree bookkeeping and growth audits.
//!
//! The ledger annotates constructions; it never blocks them.

use std::io::Write;

use realalg::{parse_expr, UPoly, Q};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FDPair {
    pub format: u32,
    pub degree: u64,
}

impl FDPair {
    pub fn new(format: u32, degree: u64) -> FDPair {
        FDPair { format, degree }
    }

    /// Zero set of a polynomial of degree `d` in `ell` variables.
    pub fn zero_set(ell: u32, d: u64) -> FDPair {
        FDPair::new(ell, d)
    }
}

impl std::fmt::Display for FDPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.format, self.degree)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error("empty list of entries")]
    Empty,
    #[error("degenerate growth series: {0}")]
    Degenerate(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub fn fd_union(entries: &[FDPair]) -> Result<FDPair, LedgerError> {
    let f = entries.iter().map(|e| e.format).max().ok_or(LedgerError::Empty)?;
    Ok(FDPair::new(f, entries.iter().map(|e| e.degree).sum()))
}

pub fn fd_intersection(entries: &[FDPair]) -> Result<FDPair, LedgerError> {
    let u = fd_union(entries)?;
    Ok(FDPair::new(u.format + 1, u.degree))
}

pub fn fd_project(e: FDPair) -> FDPair {
    FDPair::new(e.format + 1, e.degree)
}

pub fn fd_complement(e: FDPair) -> FDPair {
    FDPair::new(e.format + 1, e.degree)
}

pub fn fd_cylinder(e: FDPair) -> FDPair {
    FDPair::new(e.format + 1, e.degree)
}

/// Bound templates for arithmetic compositions.
#[derive(Clone, Debug, PartialEq)]
pub struct Templates {
    pub format_multiplier: u32,
    /// Degree template, a polynomial in the summed degree.
    pub degree_poly: UPoly,
}

impl Default for Templates {
    fn default() -> Self {
        // (D+1)^2
        Templates { format_multiplier: 4, degree_poly: UPoly::from_ints(&[1, 2, 1]) }
    }
}

#[derive(Deserialize)]
struct ConfigFile {
    fd: Option<FdSection>,
}

#[derive(Deserialize)]
struct FdSection {
    format_multiplier: Option<u32>,
    degree_poly: Option<String>,
}

impl Templates {
    /// Reads the `[fd]` table; missing keys keep their defaults.
    pub fn from_toml(src: &str) -> Result<Templates, LedgerError> {
        let cfg: ConfigFile = toml::from_str(src).map_err(|e| LedgerError::Config(e.to_string()))?;
        let mut t = Templates::default();
        if let Some(fd) = cfg.fd {
            if let Some(m) = fd.format_multiplier {
                if m == 0 {
                    return Err(LedgerError::Config("fd.format_multiplier must be positive".into()));
                }
                t.format_multiplier = m;
            }
            if let Some(p) = fd.degree_poly {
                let e = parse_expr(&p).map_err(|e| LedgerError::Config(format!("fd.degree_poly: {e}")))?;
                t.degree_poly = e
                    .to_upoly(0)
                    .ok_or_else(|| LedgerError::Config("fd.degree_poly must be a polynomial in one variable".into()))?;
            }
        }
        Ok(t)
    }

    pub fn degree_of(&self, d: u64) -> u64 {
        let v = self.degree_poly.eval(&Q::from_integer(d.into()));
        let v = v.ceil().to_integer();
        u64::try_from(v).unwrap_or(0).max(d)
    }
}

/// `f +- g`, `h o f` and friends: multiplied format and templated degree.
pub fn fd_compose_arith(entries: &[FDPair], t: &Templates) -> Result<FDPair, LedgerError> {
    let u = fd_union(entries)?;
    Ok(FDPair::new(t.format_multiplier * u.format, t.degree_of(u.degree)))
}

/// Observed cell counts against a size parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub points: Vec<(u64, u64)>,
}

impl GrowthSeries {
    pub fn new(points: Vec<(u64, u64)>) -> Result<GrowthSeries, LedgerError> {
        if points.is_empty() {
            return Err(LedgerError::Degenerate("no points".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(LedgerError::Degenerate("sizes must increase strictly".into()));
        }
        Ok(GrowthSeries { points })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub exponent: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub lower_exponent: f64,
    pub upper_exponent: f64,
    /// Upper-half exponent minus lower-half exponent.
    pub drift: f64,
    pub flagged: bool,
}

pub const DRIFT_LIMIT: f64 = 0.5;

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Least-squares fit of `log(count)` against `log(size)`, with a tail drift test.
pub fn audit_poly_growth(s: &GrowthSeries) -> Result<FitReport, LedgerError> {
    let n = s.points.len();
    if n < 4 {
        return Err(LedgerError::Degenerate(format!("need at least 4 points, got {n}")));
    }
    if s.points.iter().any(|&(d, c)| d == 0 || c == 0) {
        return Err(LedgerError::Degenerate("sizes and counts must be positive".into()));
    }
    let xs: Vec<f64> = s.points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = s.points.iter().map(|p| (p.1 as f64).ln()).collect();
    let (exponent, intercept) = fit(&xs, &ys);
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + exponent * x)).collect();
    let h = n / 2;
    let (lower_exponent, _) = fit(&xs[..=h], &ys[..=h]);
    let (upper_exponent, _) = fit(&xs[h..], &ys[h..]);
    let drift = upper_exponent - lower_exponent;
    Ok(FitReport { exponent, intercept, residuals, lower_exponent, upper_exponent, drift, flagged: drift >= DRIFT_LIMIT })
}

/// One row of a bench run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    #[serde(rename = "D")]
    pub d: u64,
    pub cells: u64,
    pub format: u32,
    pub degree: u64,
}

pub fn write_csv<W: Write>(w: W, rows: &[GrowthRow]) -> Result<(), LedgerError> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(["D", "cells", "format", "degree"]).map_err(|e| LedgerError::Io(e.to_string()))?;
    }
    for r in rows {
        out.serialize(r).map_err(|e| LedgerError::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| LedgerError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_series_exponent() {
        let s = GrowthSeries::new((2..=12).map(|d| (d, d * d)).collect()).unwrap();
        let r = audit_poly_growth(&s).unwrap();
        assert!((r.exponent - 2.0).abs() < 1e-9);
        assert!(!r.flagged);
    }

    #[test]
    fn config_overrides() {
        let t = Templates::from_toml("[fd]\nformat_multiplier = 2\ndegree_poly = \"(poly [0 0 0 1])\"\n").unwrap();
        assert_eq!(t.format_multiplier, 2);
        assert_eq!(fd_compose_arith(&[FDPair::new(1, 2), FDPair::new(2, 1)], &t).unwrap(), FDPair::new(4, 27));
        assert!(Templates::from_toml("[fd]\ndegree_poly = \"(sub\"").is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = vec![];
        write_csv(&mut buf, &[GrowthRow { d: 2, cells: 5, format: 1, degree: 2 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "D,cells,format,degree\n2,5,1,2\n");
    }
}
