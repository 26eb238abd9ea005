//! Parametrization over planar decompositions: certified base pieces, fiber
//! subdivision orders per band, tower assembly, and witness curves.

use realalg::{AlgFunc, Interval, MPoly, Q};

use crate::cad::{cad_1, cad_2, cr_locus_2, Decomposition};
use crate::engine::{
    block_offsets, run_base, shift_entry, tidy, CellPullback, EngineConfig, EngineError, ParamResult, Stats,
};
use crate::fort::{Entry, Fort, IntegerCell};
use crate::ledger::{fd_compose_arith, fd_union, FDPair};
use crate::morphism::{compose, tower, Level, Piece, TowerBlock};
use crate::norm::{certify_r_function, norm_bound, norm_bound_axes, NormGoal, ROUNDING_SLACK};

/// Largest fiber order tried before the base piece is split instead.
const FIBER_CAP: u32 = 64;

/// One cell of a column over a base piece.
#[derive(Clone, Debug)]
pub(crate) struct FiberCell {
    pub entry: Entry,
    pub target: Entry,
    /// Target fiber coordinate (global) as a function of the local ones.
    pub fiber_fn: AlgFunc,
    pub y: AlgFunc,
    pub funcs: Vec<AlgFunc>,
    pub bound: f64,
}

/// Chosen orders and cells of a column.
#[derive(Clone, Debug)]
pub(crate) struct ColumnFit {
    pub orders: Vec<u32>,
    pub cells: Vec<FiberCell>,
}

enum Miss {
    /// More fiber subdivision would help.
    Fiber(f64),
    /// The base piece has to shrink.
    Base(f64),
}

fn bound_of(f: &AlgFunc, bx: &[Interval], r: usize, budget: usize) -> f64 {
    certify_r_function(f, bx, r, budget).bound
}

fn ok(b: f64) -> bool {
    b <= 1.0 + ROUNDING_SLACK
}

fn classify(f: &AlgFunc, bx: &[Interval], r: usize, budget: usize, bound: f64) -> Miss {
    let goal = NormGoal { target: Some(1.0 + ROUNDING_SLACK), rel_gap: 0.0, budget };
    if bx[0].width() > 0.0 {
        let base = norm_bound_axes(f, bx, r, &[true, false], goal);
        if !base.is_r_function() {
            return Miss::Base(bound);
        }
    }
    Miss::Fiber(bound)
}

/// Ends of the bands of every column: `[0, s_1, ..., s_k, 1]` in the global `x1`.
pub(crate) fn column_ends(decomp: &Decomposition, base: &Decomposition) -> Vec<Vec<AlgFunc>> {
    base.fort
        .cells()
        .iter()
        .map(|c1| {
            let h = decomp.fort.height_over(c1).expect("base cell");
            let mut ends = vec![];
            for j in 0..h {
                let d = decomp.description(&c1.pushed(Entry::Interval(j))).expect("column cell");
                if let Level::Band(a, b) = &d.levels[1] {
                    if j == 0 {
                        ends.push(a.clone());
                    }
                    ends.push(b.clone());
                }
            }
            ends
        })
        .collect()
}

/// Fit fiber orders over one base piece. `x` and the `ends` are functions of `u1`
/// (or closed), `funcs` are functions of the global `(x1, x2)`.
fn fit_column(
    x: &AlgFunc,
    ends: &[AlgFunc],
    funcs: &[AlgFunc],
    on_point: bool,
    cfg: &EngineConfig,
    cap: u32,
) -> Result<ColumnFit, Miss> {
    let r = cfg.r;
    let budget = cfg.box_budget;
    let bx2 = if on_point { vec![Interval::ZERO, Interval::UNIT] } else { vec![Interval::UNIT, Interval::UNIT] };
    let bx1 = vec![bx2[0]];
    let u2 = AlgFunc::var(1);
    let mut orders = vec![];
    let mut cells = vec![];
    let mut pos = 0u32;
    let h = ends.len() - 1;
    for j in 0..h {
        let (a, b) = (&ends[j], &ends[j + 1]);
        let gap = b.sub(a);
        let mut d = 1u32;
        let found = loop {
            match try_band(x, a, &gap, funcs, d, &u2, &bx1, &bx2, r, budget) {
                Ok(cs) => break cs,
                Err(Miss::Fiber(bd)) => {
                    if d >= cap {
                        return Err(Miss::Fiber(bd));
                    }
                    d *= 2;
                }
                Err(m) => return Err(m),
            }
        };
        let jq = AlgFunc::int(j as i64);
        let dq = AlgFunc::int(d as i64);
        for (i, (y, fs, bd, inner)) in found.into_iter().enumerate() {
            let (entry, fiber_fn) = if inner {
                let k = (i / 2 + 1) as i64;
                (Entry::Point(pos + k as u32), jq.add(&AlgFunc::int(k).div(&dq)))
            } else {
                let k = (i / 2) as i64;
                (Entry::Interval(pos + k as u32), jq.add(&AlgFunc::int(k).add(&u2).div(&dq)))
            };
            cells.push(FiberCell { entry, target: Entry::Interval(j as u32), fiber_fn: tidy_fiber(&fiber_fn), y, funcs: fs, bound: bd });
        }
        pos += d;
        orders.push(d);
        if j + 1 < h {
            // The section between band j and j+1.
            let y = b.clone();
            let fs: Vec<AlgFunc> = funcs.iter().map(|f| tidy(&f.subst(&[x.clone(), y.clone()]))).collect();
            let mut bd = 0.0f64;
            for g in fs.iter().chain(std::iter::once(&y)) {
                bd = bd.max(bound_of(g, &bx1, r, budget));
            }
            if !ok(bd) {
                return Err(Miss::Base(bd));
            }
            cells.push(FiberCell {
                entry: Entry::Point(pos),
                target: Entry::Point(j as u32 + 1),
                fiber_fn: AlgFunc::int(j as i64 + 1),
                y,
                funcs: fs,
                bound: bd,
            });
        }
    }
    Ok(ColumnFit { orders, cells })
}

fn tidy_fiber(f: &AlgFunc) -> AlgFunc {
    match crate::certify::as_exact_rational(f) {
        Some(q) if f.is_closed() => AlgFunc::rat(q),
        _ => f.clone(),
    }
}

type BandCells = Vec<(AlgFunc, Vec<AlgFunc>, f64, bool)>;

/// Band pieces and inner points in fiber order; the flag marks inner points.
#[allow(clippy::too_many_arguments)]
fn try_band(
    x: &AlgFunc,
    a: &AlgFunc,
    gap: &AlgFunc,
    funcs: &[AlgFunc],
    d: u32,
    u2: &AlgFunc,
    bx1: &[Interval],
    bx2: &[Interval],
    r: usize,
    budget: usize,
) -> Result<BandCells, Miss> {
    let dq = AlgFunc::int(d as i64);
    let mut out = vec![];
    for i in 0..d {
        let t = AlgFunc::int(i as i64).add(u2).div(&dq);
        let y = a.add(&t.mul(gap));
        let fs: Vec<AlgFunc> = funcs.iter().map(|f| f.subst(&[x.clone(), y.clone()])).collect();
        let mut bd = 0.0f64;
        for g in std::iter::once(&y).chain(fs.iter()) {
            let b = bound_of(g, bx2, r, budget);
            bd = bd.max(b);
            if !ok(b) {
                return Err(classify(g, bx2, r, budget, b));
            }
        }
        out.push((y, fs, bd, false));
        if i + 1 < d {
            let t = AlgFunc::rat(Q::new((i as i64 + 1).into(), (d as i64).into()));
            let y = tidy(&a.add(&t.mul(gap)));
            let fs: Vec<AlgFunc> = funcs.iter().map(|f| tidy(&f.subst(&[x.clone(), y.clone()]))).collect();
            let mut bd = 0.0f64;
            for g in std::iter::once(&y).chain(fs.iter()) {
                let b = bound_of(g, bx1, r, budget);
                bd = bd.max(b);
                if !ok(b) {
                    return Err(Miss::Base(b));
                }
            }
            out.push((y, fs, bd, true));
        }
    }
    Ok(out)
}

/// Parametrization of a planar decomposition with certified pullbacks of `funcs`.
pub fn parametrize_2d_fun(decomp: &Decomposition, funcs: &[AlgFunc], cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    if decomp.dim != 2 {
        return Err(EngineError::Precondition("decomposition of I^2 expected".into()));
    }
    if funcs.iter().any(|f| f.nvars() > 2) {
        return Err(EngineError::Precondition("functions of at most two variables expected".into()));
    }
    let base = cad_1(&decomp.projection);
    if base.fort != decomp.fort.project(1)? {
        return Err(EngineError::Precondition("decomposition base does not match its projection".into()));
    }
    let ends = column_ends(decomp, &base);
    let mut stats = Stats::default();
    // Base functions: x, interior section ends, inputs on the sections.
    let gs_of = |i: usize, x: &AlgFunc| {
        let e = &ends[i];
        let mut gs = vec![x.clone()];
        let inner: Vec<AlgFunc> = e[1..e.len() - 1].iter().map(|s| s.compose1(x)).collect();
        gs.extend(inner.iter().cloned());
        for s in &inner {
            gs.extend(funcs.iter().map(|f| f.subst(&[x.clone(), s.clone()])));
        }
        gs
    };
    let pulled_ends = |i: usize, pulls: &[AlgFunc]| {
        let k = ends[i].len() - 2;
        let mut e = vec![AlgFunc::zero()];
        e.extend(pulls[1..=k].iter().cloned());
        e.push(AlgFunc::one());
        e
    };
    let extra = |i: usize, pulls: &[AlgFunc]| {
        fit_column(&pulls[0], &pulled_ends(i, pulls), funcs, false, cfg, FIBER_CAP).map_err(|m| match m {
            Miss::Fiber(b) | Miss::Base(b) => b,
        })
    };
    let cap = cfg.budget.max(1);
    let at_point = |i: usize, pulls: &[AlgFunc]| {
        fit_column(&pulls[0], &pulled_ends(i, pulls), funcs, true, cfg, cap).map_err(|m| match m {
            Miss::Fiber(b) | Miss::Base(b) => EngineError::Budget { cell: base.fort.cells()[i].to_string(), bound: b },
        })
    };
    let blocks = run_base(&base, cfg, &gs_of, &extra, &at_point, &mut stats)?;
    let offsets = block_offsets(&blocks);
    let mut tower_blocks = vec![];
    let mut cells = vec![];
    for (b, off) in blocks.iter().zip(offsets) {
        let eb = b.cell.entries()[0];
        let kq = AlgFunc::int((eb.key() / 2) as i64);
        let mut pieces = vec![];
        let mut heights = vec![];
        for p in &b.pieces {
            let first = if b.width == 0 { kq.clone() } else { kq.add(&p.map) };
            let fit = &p.data;
            stats.orders.extend(fit.orders.iter().copied());
            heights.push(fit.orders.iter().sum::<u32>());
            for fc in &fit.cells {
                let src = IntegerCell::new(&[p.entry, fc.entry]);
                let tgt = IntegerCell::new(&[eb, fc.target]);
                pieces.push(Piece::new(src, tgt, vec![first.clone(), fc.fiber_fn.clone()]));
                let cell = IntegerCell::new(&[shift_entry(p.entry, off), fc.entry]);
                let bound = fc.bound.max(p.bound);
                cells.push(CellPullback { cell, coords: vec![p.pulls[0].clone(), fc.y.clone()], funcs: fc.funcs.clone(), bound });
            }
        }
        tower_blocks.push(if b.width == 0 {
            TowerBlock::Point { fiber: Some(Fort::interval(heights[0])?), pieces }
        } else {
            TowerBlock::Interval { fort: Fort::interval(b.width)?.extend_vec(heights)?, pieces }
        });
    }
    let (fort, morphism) = tower(&decomp.fort, tower_blocks)?;
    let image = compose(&decomp.morphism, &morphism)?;
    let mut entries: Vec<FDPair> = decomp.inputs.clone();
    entries.extend(funcs.iter().map(|f| crate::engine::function_fd(f, 2, &cfg.templates)));
    if entries.is_empty() {
        entries.push(FDPair::zero_set(2, 1));
    }
    let fd = fd_compose_arith(&[fd_union(&entries)?], &cfg.templates)?;
    cells.sort_by_key(|a| fort.index_of(&a.cell));
    Ok(ParamResult { r: cfg.r, fort, morphism, image, cells, fd, stats })
}

/// Parametrization of a planar decomposition: the composed maps are certified.
pub fn parametrize_2d_set(decomp: &Decomposition, cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    parametrize_2d_fun(decomp, &[], cfg)
}

/// Decomposition compatible with `polys` outside of which all functions are smooth.
pub fn smooth_2d(polys: &[MPoly], funcs: &[AlgFunc]) -> Decomposition {
    let mut all = polys.to_vec();
    all.extend(cr_locus_2(funcs).polys);
    cad_2(&all)
}

/// Parametrize functions on `I^2` over a decomposition compatible with `polys`.
pub fn parametrize_functions_2d(polys: &[MPoly], funcs: &[AlgFunc], cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    parametrize_2d_fun(&smooth_2d(polys, funcs), funcs, cfg)
}

/// A curve `x1 -> (x1, g(x1))`, piecewise linear in `x1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessCurve {
    /// Breakpoints `0 = t_0 < ... < t_n = 1` with curve heights.
    pub knots: Vec<(Q, Q)>,
}

impl WitnessCurve {
    /// Height at `x1` as an exact rational.
    pub fn height(&self, x1: &Q) -> Q {
        let k = self.knots.partition_point(|(t, _)| t <= x1).clamp(1, self.knots.len() - 1);
        let (t0, y0) = &self.knots[k - 1];
        let (t1, y1) = &self.knots[k];
        y0 + (y1 - y0) * (x1 - t0) / (t1 - t0)
    }

    /// The curve's height on each linear piece, as functions of `x1`.
    pub fn pieces(&self) -> Vec<(Q, Q, AlgFunc)> {
        self.knots
            .windows(2)
            .map(|w| {
                let (t0, y0) = &w[0];
                let (t1, y1) = &w[1];
                let slope = (y1 - y0) / (t1 - t0);
                let g = AlgFunc::rat(y0 - &slope * t0).add(&AlgFunc::var(0).mul(&AlgFunc::rat(slope)));
                (t0.clone(), t1.clone(), g)
            })
            .collect()
    }
}

const WITNESS_GRID: usize = 256;
const WITNESS_DEPTH: u32 = 8;
const INSET: f64 = 1.0 / 1024.0;

fn at_x1(f: &AlgFunc, x1: &Q) -> AlgFunc {
    f.subst(&[AlgFunc::rat(x1.clone()), AlgFunc::var(0)])
}

/// Certified sup of `|h|` over `x2`.
fn sup_over_fiber(h: &AlgFunc) -> f64 {
    norm_bound(h, &[Interval::UNIT], 0, NormGoal { target: None, rel_gap: 1e-3, budget: 400 }).bound
}

/// A point of the fiber where `|h|` is near its largest value.
fn argmax_over_fiber(h: &AlgFunc) -> Q {
    let mut best = (f64::NEG_INFINITY, 0.5);
    for k in 0..=WITNESS_GRID {
        let t = (k as f64 / WITNESS_GRID as f64).clamp(INSET, 1.0 - INSET);
        let v = h.eval_f64(&[t]).abs();
        if v.is_finite() && v > best.0 {
            best = (v, t);
        }
    }
    realalg::rational::from_f64(best.1)
}

/// Check `|h(g)| >= sup|h| / 2` at a point, with certified bounds on both sides.
fn half_sup_holds(d: &AlgFunc, x1: &Q, y: &Q) -> bool {
    let h = at_x1(d, x1);
    let sup = sup_over_fiber(&h);
    let v = h.interval(&[realalg::rational::enclose(y)]);
    v.is_finite() && v.mig() >= 0.5 * sup
}

/// A curve along which the `alpha` derivative of `f` reaches half its fiberwise sup.
pub fn select_witness_curve(f: &AlgFunc, alpha: [u32; 2]) -> Result<WitnessCurve, EngineError> {
    let d = f.partial(&alpha);
    if !d.depends_on(1) {
        // Constant along fibers: every height works.
        let half = Q::new(1.into(), 2.into());
        return Ok(WitnessCurve { knots: vec![(Q::from_integer(0.into()), half.clone()), (Q::from_integer(1.into()), half)] });
    }
    let lo = Q::from_integer(0.into());
    let hi = Q::from_integer(1.into());
    let y_lo = argmax_over_fiber(&at_x1(&d, &lo));
    let y_hi = argmax_over_fiber(&at_x1(&d, &hi));
    let mut knots = vec![(lo.clone(), y_lo.clone())];
    fit_witness(&d, (lo, y_lo), (hi, y_hi), 0, &mut knots)?;
    Ok(WitnessCurve { knots })
}

fn fit_witness(d: &AlgFunc, a: (Q, Q), b: (Q, Q), depth: u32, knots: &mut Vec<(Q, Q)>) -> Result<(), EngineError> {
    let samples = 4;
    let good = (0..=samples).all(|k| {
        let s = Q::new((k as i64).into(), (samples as i64).into());
        let x1 = &a.0 + (&b.0 - &a.0) * &s;
        let y = &a.1 + (&b.1 - &a.1) * &s;
        half_sup_holds(d, &x1, &y)
    });
    if good {
        knots.push(b);
        return Ok(());
    }
    if depth >= WITNESS_DEPTH {
        return Err(EngineError::Witness(format!(
            "no curve reaches half the sup on ({}, {})",
            realalg::rational::to_f64(&a.0),
            realalg::rational::to_f64(&b.0)
        )));
    }
    let m = realalg::rational::mid(&a.0, &b.0);
    let ym = argmax_over_fiber(&at_x1(d, &m));
    fit_witness(d, a, (m.clone(), ym.clone()), depth + 1, knots)?;
    fit_witness(d, (m, ym), b, depth + 1, knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use realalg::parse_expr;
    use realalg::rational::q;

    fn e(s: &str) -> AlgFunc {
        parse_expr(s).unwrap()
    }

    #[test]
    fn identity_square() {
        let d = Decomposition::identity(2);
        let r = parametrize_2d_set(&d, &EngineConfig::new(2)).unwrap();
        assert_eq!(r.fort, d.fort);
        assert!(r.certified());
        r.morphism.validate().unwrap();
    }

    #[test]
    fn product_needs_no_refinement() {
        let d = Decomposition::identity(2);
        let r = parametrize_2d_fun(&d, &[e("(mul x1 x2)")], &EngineConfig::new(2)).unwrap();
        assert!(r.certified());
        // xy is already a 2-function: 1 + 1 + 1/1!1! ... mixed term 1.
        assert_eq!(r.cell_count(), 1);
    }

    #[test]
    fn parabola_cad() {
        let d = cad_2(&[e("(sub x2 (pow x1 2))").to_mpoly().unwrap().with_nvars(2)]);
        let r = parametrize_2d_set(&d, &EngineConfig::new(2)).unwrap();
        assert!(r.certified(), "{}", r.max_bound());
        r.morphism.validate().unwrap();
        let fs = [e("(mul x1 x2)"), e("(div x2 (add 1 x1))")];
        let r = parametrize_2d_fun(&d, &fs, &EngineConfig::new(2)).unwrap();
        assert!(r.certified(), "{}", r.max_bound());
        r.morphism.validate().unwrap();
        r.image.validate().unwrap();
    }

    #[test]
    fn witness_constant_derivative() {
        let w = select_witness_curve(&e("x2"), [0, 1]).unwrap();
        assert_eq!(w.height(&q(1, 3)), q(1, 2));
    }

    #[test]
    fn witness_product() {
        let w = select_witness_curve(&e("(mul x1 x2)"), [1, 0]).unwrap();
        for k in 0..=8 {
            assert!(w.height(&q(k, 8)) >= q(1, 2));
        }
    }

    #[test]
    fn witness_interior_max() {
        let f = e("(mul (add 1 x1) (mul x2 (sub 1 x2)))");
        let w = select_witness_curve(&f, [0, 0]).unwrap();
        for k in 0..=8 {
            let y = realalg::rational::to_f64(&w.height(&q(k, 8)));
            assert!((y - 0.5).abs() < 0.3, "{y}");
        }
    }
}
