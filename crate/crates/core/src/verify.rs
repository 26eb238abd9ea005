//! Independent checks: norms, finite differences, cylindricity, refinement,
//! compatibility of parametrizations, and fort enumeration.

use std::fmt::Write as _;

use realalg::{AlgFunc, Interval};
use serde::Serialize;

use crate::cad::{cr_locus_1, CellComplex, Decomposition};
use crate::certify::{cell_box, decide_equal, Equality};
use crate::engine::ParamResult;
use crate::fort::{Entry, Fort, IntegerCell};
use crate::morphism::{CellDescription, Level, Morphism};
use crate::norm::{certify_r_function, cr_norm_box, RCertificate, ROUNDING_SLACK};

const CERT_BUDGET: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub cell: String,
    pub property: String,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl Verdict {
    pub fn ok() -> Verdict {
        Verdict { pass: true, diagnostics: vec![] }
    }

    pub fn fail(&mut self, cell: impl ToString, property: impl ToString, measured: f64, bound: f64) {
        self.pass = false;
        self.diagnostics.push(Diagnostic { cell: cell.to_string(), property: property.to_string(), measured, bound });
    }

    pub fn merge(&mut self, o: Verdict) {
        self.pass &= o.pass;
        self.diagnostics.extend(o.diagnostics);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn table(&self) -> String {
        let mut s = format!("{}\n", if self.pass { "PASS" } else { "FAIL" });
        if !self.diagnostics.is_empty() {
            let _ = writeln!(s, "{:<24} {:<28} {:>14} {:>14}", "cell", "property", "measured", "bound");
            for d in &self.diagnostics {
                let _ = writeln!(s, "{:<24} {:<28} {:>14.6e} {:>14.6e}", d.cell, d.property, d.measured, d.bound);
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("function is not smooth on the cell (near {0})")]
    NonSmooth(f64),
    #[error("enumeration bounds: {0}")]
    Bounds(String),
    #[error("finite-difference step underflow at {0:?}")]
    StepUnderflow(Vec<f64>),
}

/// Certified norm of `f` on the local box of a cell.
pub fn cr_norm(f: &AlgFunc, cell: &IntegerCell, r: usize) -> Result<RCertificate, VerifyError> {
    let bx = cell_box(cell);
    if f.nvars() <= 1 && !f.is_closed() && bx.first().is_some_and(|b| b.width() > 0.0) {
        if let Some(p) = cr_locus_1(std::slice::from_ref(f)).points.first() {
            return Err(VerifyError::NonSmooth(p.approx()));
        }
    }
    let c = cr_norm_box(f, &bx, r);
    if !c.bound.is_finite() {
        return Err(VerifyError::NonSmooth(f64::NAN));
    }
    Ok(c)
}

/// Every coordinate of every piece, read in its target cell, is an r-function.
pub fn is_r_morphism(m: &Morphism, r: usize) -> Verdict {
    let mut v = Verdict::ok();
    for p in m.pieces() {
        for (i, (e, f)) in p.target.entries().iter().zip(&p.fns).enumerate() {
            let Entry::Interval(k) = e else { continue };
            let local = f.sub(&AlgFunc::int(*k as i64));
            let c = certify_r_function(&local, &cell_box(&p.source), r, CERT_BUDGET);
            if !c.bound.is_finite() {
                v.fail(&p.source, format!("coordinate {i} smoothness"), f64::INFINITY, 1.0);
            } else if c.bound > 1.0 + ROUNDING_SLACK {
                v.fail(&p.source, format!("coordinate {i} norm"), c.bound, 1.0);
            }
        }
    }
    v
}

fn closed_eq(a: &AlgFunc, b: &AlgFunc, bx: &[Interval]) -> Equality {
    decide_equal(a, b, bx)
}

fn level_value(l: &Level, x: &[Interval]) -> (Interval, Interval) {
    match l {
        Level::Point(p) => {
            let v = p.interval(x);
            (v, v)
        }
        Level::Band(a, b) => (a.interval(x), b.interval(x)),
    }
}

/// Check that described levels over a base tile `(0,1)` with exactly matching ends.
fn check_tiling(levels: &[Level], base: &[Interval], tag: &str, v: &mut Verdict) {
    let mut ls: Vec<&Level> = levels.iter().collect();
    let mid: Vec<Interval> = base.iter().map(|b| Interval::point(b.mid())).collect();
    let key = |l: &Level| {
        let (lo, hi) = level_value(l, &mid);
        (lo.mid() + hi.mid()) / 2.0
    };
    ls.sort_by(|a, b| key(a).total_cmp(&key(b)));
    let mut expect = AlgFunc::zero();
    let mut want_band = true;
    for (k, l) in ls.iter().enumerate() {
        let cell = format!("{tag}#{k}");
        match (l, want_band) {
            (Level::Band(a, b), true) => {
                if closed_eq(a, &expect, base) != Equality::Equal {
                    v.fail(&cell, "band start does not meet previous cell", key(l), 0.0);
                }
                expect = b.clone();
            }
            (Level::Point(p), false) => {
                if closed_eq(p, &expect, base) != Equality::Equal {
                    v.fail(&cell, "point does not close previous band", key(l), 0.0);
                }
            }
            _ => v.fail(&cell, "bands and points do not alternate", key(l), 0.0),
        }
        want_band = !want_band;
    }
    if want_band || closed_eq(&expect, &AlgFunc::one(), base) != Equality::Equal {
        v.fail(tag, "cells do not end at 1", 0.0, 1.0);
    }
}

/// Projections of the cells form a decomposition, and each column tiles its fiber.
pub fn check_cylindrical(d: &CellComplex) -> Verdict {
    let mut v = Verdict::ok();
    if d.cells.iter().any(|c| c.len() != d.dim) {
        v.fail("complex", "cell of the wrong dimension", 0.0, d.dim as f64);
        return v;
    }
    let mut bases: Vec<CellDescription> = vec![];
    for c in &d.cells {
        let p = c.prefix(d.dim - 1);
        if !bases.contains(&p) {
            bases.push(p);
        }
    }
    if d.dim == 1 {
        let levels: Vec<Level> = d.cells.iter().map(|c| c.levels[0].clone()).collect();
        check_tiling(&levels, &[], "axis", &mut v);
        return v;
    }
    if d.dim > 2 {
        v.fail("complex", "only dimensions 1 and 2 are checked", d.dim as f64, 2.0);
        return v;
    }
    v.merge(check_cylindrical(&CellComplex { dim: 1, cells: bases.clone() }));
    for (bi, b) in bases.iter().enumerate() {
        let levels: Vec<Level> = d.cells.iter().filter(|c| c.prefix(1) == *b).map(|c| c.levels[1].clone()).collect();
        let bx = match &b.levels[0] {
            Level::Point(p) => vec![p.enclosure()],
            Level::Band(lo, hi) => vec![Interval::new(lo.enclosure().hi, hi.enclosure().lo)],
        };
        check_tiling(&levels, &bx, &format!("column{bi}"), &mut v);
    }
    v
}

/// Left-hand panel of the classic picture: cellular but not cylindrical.
pub fn t_junction_complex() -> CellComplex {
    let q = |n: i64, d: i64| AlgFunc::rat(realalg::Q::new(n.into(), d.into()));
    let (z, h, o) = (q(0, 1), q(1, 2), q(1, 1));
    let band = |a: &AlgFunc, b: &AlgFunc| Level::Band(a.clone(), b.clone());
    let cells = vec![
        CellDescription::new(vec![band(&z, &h), band(&z, &h)]),
        CellDescription::new(vec![Level::Point(h.clone()), band(&z, &h)]),
        CellDescription::new(vec![band(&h, &o), band(&z, &h)]),
        CellDescription::new(vec![band(&z, &o), Level::Point(h.clone())]),
        CellDescription::new(vec![band(&z, &o), band(&h, &o)]),
    ];
    CellComplex { dim: 2, cells }
}

const LOCATE_TOL: f64 = 1e-9;

/// Coarse cells that may contain the point `x` (numerically, with a tolerance).
fn locate(coarse: &Decomposition, x: &[f64]) -> Vec<usize> {
    let mut out = vec![];
    'cells: for (i, c) in coarse.cells.iter().enumerate() {
        for (k, l) in c.levels.iter().enumerate() {
            let lower: Vec<Interval> = x[..k].iter().map(|&t| Interval::point(t)).collect();
            let y = x[k];
            let inside = match l {
                Level::Point(p) => {
                    let v = p.interval(&lower);
                    y >= v.lo - LOCATE_TOL && y <= v.hi + LOCATE_TOL
                }
                Level::Band(a, b) => {
                    let (va, vb) = (a.interval(&lower), b.interval(&lower));
                    y > va.hi + LOCATE_TOL && y < vb.lo - LOCATE_TOL
                }
            };
            if !inside {
                continue 'cells;
            }
        }
        out.push(i);
    }
    out
}

fn sample_locals(c: &IntegerCell) -> Vec<Vec<f64>> {
    let ts = [0.5, 0.25, 0.75, 0.125, 0.875];
    (0..ts.len())
        .map(|k| {
            c.entries()
                .iter()
                .enumerate()
                .map(|(i, e)| if e.is_interval() { ts[(k + i * 2) % ts.len()] } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Every piece of `fine` (a morphism into `I^dim`) lands in a single coarse cell.
pub fn check_refinement(fine: &Morphism, coarse: &Decomposition) -> Verdict {
    let mut v = Verdict::ok();
    for p in fine.pieces() {
        let mut home: Option<usize> = None;
        for u in sample_locals(&p.source) {
            let x = p.eval_f64(&u);
            let hits = locate(coarse, &x);
            match (hits.as_slice(), home) {
                ([i], None) => home = Some(*i),
                ([i], Some(h)) if *i == h => {}
                ([i], Some(h)) => {
                    v.fail(&p.source, "samples in two coarse cells", *i as f64, h as f64);
                    break;
                }
                _ => {
                    v.fail(&p.source, "sample not in exactly one coarse cell", hits.len() as f64, 1.0);
                    break;
                }
            }
        }
    }
    v
}

/// Pieces over a common base share their base coordinate functions.
pub fn check_morphism_compat(m: &Morphism) -> Verdict {
    let mut v = Verdict::ok();
    let len = m.source().len();
    for k in 1..len {
        let mut seen: Vec<(IntegerCell, Vec<AlgFunc>)> = vec![];
        for p in m.pieces() {
            let base = p.source.prefix(k);
            let fns = p.fns[..k].to_vec();
            match seen.iter().find(|(b, _)| *b == base) {
                None => seen.push((base, fns)),
                Some((_, f0)) => {
                    if *f0 != fns {
                        let bx = cell_box(&p.source);
                        let differ = f0.iter().zip(&fns).any(|(a, b)| decide_equal(a, b, &bx) == Equality::Different);
                        let prop = if differ { "base maps disagree" } else { "base maps not shared" };
                        v.fail(&p.source, prop, k as f64, 0.0);
                    }
                }
            }
        }
    }
    v
}

/// Compatibility of a parametrization's image maps.
pub fn check_parametrization_compat(p: &ParamResult) -> Verdict {
    let mut v = check_morphism_compat(&p.image);
    v.merge(check_morphism_compat(&p.morphism));
    v
}

/// Hard limits of [`enumerate_forts`].
pub const MAX_ENUM_LEN: usize = 3;
pub const MAX_ENUM_CELLS: usize = 60;

/// Visit every fort of the given length with at most `max_cells` cells, in
/// canonical order (by flat encoding); returns the count.
pub fn enumerate_forts(len: usize, max_cells: usize, visit: &mut dyn FnMut(&Fort)) -> Result<usize, VerifyError> {
    if len == 0 || len > MAX_ENUM_LEN {
        return Err(VerifyError::Bounds(format!("length must be in 1..={MAX_ENUM_LEN}")));
    }
    if max_cells == 0 || max_cells > MAX_ENUM_CELLS {
        return Err(VerifyError::Bounds(format!("max cells must be in 1..={MAX_ENUM_CELLS}")));
    }
    let mut count = 0usize;
    let mut data = Vec::with_capacity(2 * max_cells);
    fill(len, 0, 1, 0, max_cells, &mut data, &mut |d| {
        let f = Fort::from_flat(len, d).expect("valid by construction");
        count += 1;
        visit(&f);
    });
    Ok(count)
}

/// Push heights for the `remaining` columns of `level`; `acc` counts the cells
/// they create.  Every level has at least as many cells as the one below, so
/// bounding each level by `max` prunes exactly.
fn fill(len: usize, level: usize, remaining: usize, acc: usize, max: usize, data: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if remaining == 0 {
        if level + 1 == len {
            emit(data);
        } else {
            fill(len, level + 1, acc, 0, max, data, emit);
        }
        return;
    }
    let mut h = 1u32;
    while acc + 2 * h as usize - 1 + (remaining - 1) <= max {
        data.push(h);
        fill(len, level, remaining - 1, acc + 2 * h as usize - 1, max, data, emit);
        data.pop();
        h += 1;
    }
}

/// Central difference of order `alpha` with step `h` (tensor stencil).
fn central(f: &AlgFunc, x: &[f64], alpha: &[u32], h: f64) -> f64 {
    fn binom(n: u32, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    let axes: Vec<(usize, u32)> = alpha.iter().enumerate().filter(|(_, &a)| a > 0).map(|(i, &a)| (i, a)).collect();
    let mut total = 0.0;
    let mut idx = vec![0u32; axes.len()];
    loop {
        let mut p = x.to_vec();
        let mut w = 1.0;
        for (k, &(i, a)) in axes.iter().enumerate() {
            let j = idx[k];
            p[i] += (a as f64 / 2.0 - j as f64) * h;
            w *= if j.is_multiple_of(2) { 1.0 } else { -1.0 } * binom(a, j);
        }
        total += w * f.eval_f64(&p);
        let mut k = 0;
        loop {
            if k == axes.len() {
                let order: u32 = alpha.iter().sum();
                return total / h.powi(order as i32);
            }
            idx[k] += 1;
            if idx[k] <= axes[k].1 {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Absolute tolerance of finite-difference cross-checks.
pub const FD_TOL: f64 = 1e-6;
/// Inward pull of sample points from the cell boundary.
pub const FD_INSET: f64 = 1.0 / (1u64 << 20) as f64;

/// Richardson-extrapolated central differences of `f` at `points` of the unit
/// box; passes when `|D^alpha f| <= cert * alpha! + FD_TOL` everywhere.
pub fn finite_difference_check(f: &AlgFunc, alpha: &[u32], points: &[Vec<f64>], h: f64, cert: f64) -> Result<Verdict, VerifyError> {
    let order: u32 = alpha.iter().sum();
    let fact: f64 = alpha.iter().map(|&a| (1..=a).map(|k| k as f64).product::<f64>()).product();
    let mut v = Verdict::ok();
    for x in points {
        let mut c: Vec<f64> = x.iter().map(|t| t.clamp(FD_INSET, 1.0 - FD_INSET)).collect();
        if order == 0 {
            let val = f.eval_f64(&c).abs();
            if val > cert + FD_TOL {
                v.fail(format!("{c:?}"), "value", val, cert);
            }
            continue;
        }
        // Keep the stencil inside the cell.
        let mut step = h;
        for (i, &a) in alpha.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let reach = a as f64 / 2.0;
            let room = (c[i].min(1.0 - c[i]) / reach).max(0.0);
            if step > room {
                let want = (reach * h).min(0.5);
                c[i] = c[i].clamp(want, 1.0 - want);
                step = step.min(c[i].min(1.0 - c[i]) / reach);
            }
        }
        if step < 1e-8 {
            return Err(VerifyError::StepUnderflow(c));
        }
        let d1 = central(f, &c, alpha, step);
        let d2 = central(f, &c, alpha, step / 2.0);
        let est = (4.0 * d2 - d1) / 3.0;
        let limit = cert * fact + FD_TOL;
        if !est.is_finite() || est.abs() > limit {
            v.fail(format!("{c:?}"), format!("derivative {alpha:?}"), est.abs(), limit);
        }
    }
    Ok(v)
}

/// Step for a derivative of the given order: balances rounding against truncation.
pub fn fd_step(order: u32) -> f64 {
    f64::EPSILON.powf(1.0 / (order as f64 + 4.0)).min(0.02)
}

/// Finite-difference cross-check of every pullback of a result, at `points`
/// seeded random points per cell and every derivative up to order `r`.
pub fn fd_check_result(p: &ParamResult, points: usize, seed: u64) -> Result<Verdict, VerifyError> {
    use rand::Rng;
    let mut rng = crate::generate::rng(seed);
    let mut v = Verdict::ok();
    for c in &p.cells {
        let active: Vec<bool> = c.cell.entries().iter().map(|e| e.is_interval()).collect();
        let pts: Vec<Vec<f64>> = (0..points).map(|_| active.iter().map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        for f in c.coords.iter().chain(&c.funcs) {
            for alpha in crate::norm::multi_indices(&active, p.r) {
                let order: u32 = alpha.iter().sum();
                let mut w = finite_difference_check(f, &alpha, &pts, fd_step(order), 1.0)?;
                for d in &mut w.diagnostics {
                    d.cell = format!("{} at {}", c.cell, d.cell);
                }
                v.merge(w);
            }
        }
    }
    Ok(v)
}

/// Certificates, covering, compatibility and refinement of a result against
/// the decomposition it parametrizes.
pub fn verify_result(p: &ParamResult, decomp: &Decomposition) -> Verdict {
    let mut v = Verdict::ok();
    for c in &p.cells {
        if !(c.bound <= 1.0 + ROUNDING_SLACK) {
            v.fail(&c.cell, "certified norm", c.bound, 1.0);
        }
    }
    for (name, m) in [("morphism", &p.morphism), ("image", &p.image)] {
        if let Err(e) = m.validate() {
            v.fail(name, format!("validation: {e}"), 1.0, 0.0);
        }
    }
    v.merge(check_parametrization_compat(p));
    v.merge(check_refinement(&p.image, decomp));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::cad_2;
    use realalg::parse_expr;

    fn e(s: &str) -> AlgFunc {
        parse_expr(s).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_forts(1, 5, &mut |_| {}).unwrap(), 3);
        assert_eq!(enumerate_forts(2, 3, &mut |_| {}).unwrap(), 3);
        assert!(enumerate_forts(4, 3, &mut |_| {}).is_err());
        assert!(enumerate_forts(2, 61, &mut |_| {}).is_err());
    }

    #[test]
    fn cylindrical_controls() {
        assert!(!check_cylindrical(&t_junction_complex()).pass);
        let c = cad_2(&[e("(sub (add (pow (sub x1 1/2) 2) (pow (sub x2 1/2) 2)) 1/9)").to_mpoly().unwrap().with_nvars(2)]);
        let v = check_cylindrical(&c.complex());
        assert!(v.pass, "{}", v.table());
        assert!(check_cylindrical(&Decomposition::identity(2).complex()).pass);
    }

    #[test]
    fn finite_differences() {
        let pts: Vec<Vec<f64>> = (1..10).map(|k| vec![k as f64 / 10.0]).collect();
        assert!(finite_difference_check(&e("(pow x 2)"), &[2], &pts, 1e-3, 1.0).unwrap().pass);
        let v = finite_difference_check(&e("(poly [0 0 3 -2])"), &[1], &[vec![0.5]], 1e-3, 1.4).unwrap();
        assert!(!v.pass);
        assert!((v.diagnostics[0].measured - 1.5).abs() < 1e-9);
    }

    #[test]
    fn cubic_as_morphism() {
        let f = Fort::interval(1).unwrap();
        let c = IntegerCell::new(&[Entry::Interval(0)]);
        let m = Morphism::new(f.clone(), f, vec![crate::morphism::Piece::new(c.clone(), c, vec![e("(poly [0 0 3 -2])")])]).unwrap();
        assert!(!is_r_morphism(&m, 1).pass);
        let sub = crate::morphism::linear_subdivision(&Fort::interval(1).unwrap(), 3).unwrap();
        let composed = crate::morphism::compose(&m, &sub).unwrap();
        let v = is_r_morphism(&composed, 1);
        assert!(v.pass, "{}\n{}", v.table(), composed.to_text());
    }
}
