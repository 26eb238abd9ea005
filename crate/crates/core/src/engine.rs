//! Certified parametrization in one variable: cubic substitution, unit
//! reparametrization and the cell-by-cell pipeline over a decomposition of `I`.

use realalg::{AlgFunc, Interval, Node, UPoly, Q};
use serde::Serialize;

use crate::cad::{cad_1, cr_locus_1, inverse_branch, CadError, Decomposition};
use crate::certify::as_exact_rational;
use crate::fort::{Entry, Fort, IntegerCell};
use crate::ledger::{fd_compose_arith, fd_project, fd_union, FDPair, LedgerError, Templates};
use crate::morphism::{compose, tower, Morphism, MorphismError, Piece, TowerBlock};
use crate::norm::{certify_r_function, RCertificate};

/// Largest subdivision order tried at one stage.
pub const MAX_ORDER: u32 = 1 << 16;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub r: usize,
    /// Cap on subdivision orders and on pieces per cell.
    pub budget: u32,
    /// Smallest piece width is `2^-min_width_log2` of a cell.
    pub min_width_log2: u32,
    /// Boxes per norm certification.
    pub box_budget: usize,
    pub templates: Templates,
}

impl EngineConfig {
    pub fn new(r: usize) -> EngineConfig {
        EngineConfig { r, budget: MAX_ORDER, min_width_log2: 12, box_budget: 4000, templates: Templates::default() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("certification budget exceeded on {cell}: bound {bound}")]
    Budget { cell: String, bound: f64 },
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("witness curve: {0}")]
    Witness(String),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Cad(#[from] CadError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Fort(#[from] crate::fort::FortError),
}

/// Pulled-back data on one source cell.
#[derive(Clone, Debug)]
pub struct CellPullback {
    pub cell: IntegerCell,
    /// Image point in `I^dim` as functions of the local coordinates.
    pub coords: Vec<AlgFunc>,
    /// Input functions pulled back, in input order.
    pub funcs: Vec<AlgFunc>,
    /// Certified norm bound over coordinates, pullbacks and the piece map.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct ParamResult {
    pub r: usize,
    pub fort: Fort,
    /// Morphism into the decomposition's fort.
    pub morphism: Morphism,
    /// The same, composed down to `I^dim`.
    pub image: Morphism,
    pub cells: Vec<CellPullback>,
    pub fd: FDPair,
    pub stats: Stats,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub pieces: usize,
    pub reparametrized: usize,
    /// Subdivision orders chosen by cubic substitution or fiber refinement.
    pub orders: Vec<u32>,
}

impl ParamResult {
    pub fn cell_count(&self) -> usize {
        self.fort.cell_count()
    }

    pub fn max_bound(&self) -> f64 {
        self.cells.iter().map(|c| c.bound).fold(0.0, f64::max)
    }

    pub fn certified(&self) -> bool {
        self.max_bound() <= 1.0 + crate::norm::ROUNDING_SLACK
    }

    pub fn pullback(&self, c: &IntegerCell) -> Option<&CellPullback> {
        self.cells.iter().find(|p| &p.cell == c)
    }
}

/// Ledger entry of the graph of a function of `ell` variables.
pub fn function_fd(f: &AlgFunc, ell: u32, t: &Templates) -> FDPair {
    if let Some((p, q)) = f.to_ratfun() {
        // y*q - p = 0
        let d = (q.total_degree() + 1).max(p.total_degree()) as u64;
        return FDPair::zero_set(ell + 1, d);
    }
    let sub = |a: &AlgFunc| function_fd(a, ell, t);
    match f.node() {
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            fd_compose_arith(&[sub(a), sub(b)], t).expect("nonempty")
        }
        Node::Neg(a) => sub(a),
        Node::Pow(a, _) | Node::Poly(_, a) => {
            let outer = FDPair::zero_set(2, f.size() as u64);
            fd_compose_arith(&[outer, sub(a)], t).expect("nonempty")
        }
        Node::Inv(br, a) => {
            let graph = fd_project(function_fd(&br.f, 1, t));
            fd_compose_arith(&[graph, sub(a)], t).expect("nonempty")
        }
        Node::Section(s, a) => {
            let graph = fd_project(FDPair::zero_set(3, s.poly.total_degree() as u64));
            fd_compose_arith(&[graph, sub(a)], t).expect("nonempty")
        }
        _ => FDPair::zero_set(ell + 1, 1),
    }
}

fn result_fd(base: &[FDPair], funcs: &[AlgFunc], ell: u32, t: &Templates) -> Result<FDPair, EngineError> {
    let mut entries: Vec<FDPair> = base.to_vec();
    entries.extend(funcs.iter().map(|f| function_fd(f, ell, t)));
    if entries.is_empty() {
        entries.push(FDPair::zero_set(ell, 1));
    }
    let u = fd_union(&entries)?;
    Ok(fd_compose_arith(&[u], t)?)
}

/// Polynomials in one variable become a single polynomial node.
pub fn tidy(f: &AlgFunc) -> AlgFunc {
    if f.is_closed() {
        return match as_exact_rational(f) {
            Some(q) => AlgFunc::rat(q),
            None => f.clone(),
        };
    }
    match f.to_upoly(0) {
        Some(p) if f.nvars() <= 1 => AlgFunc::poly(&p, 0),
        _ => f.clone(),
    }
}

fn unit_box(n: usize) -> Vec<Interval> {
    vec![Interval::UNIT; n]
}

/// Certify every function on the unit box; returns the largest bound.
fn certify_all(fs: &[AlgFunc], nvars: usize, r: usize, budget: usize) -> (bool, f64) {
    let bx = unit_box(nvars);
    let mut worst = 0.0f64;
    for f in fs {
        let c = certify_r_function(f, &bx, r, budget);
        worst = worst.max(c.bound);
        if !c.is_r_function() {
            return (false, worst);
        }
    }
    (true, worst)
}

fn qf(q: &Q) -> AlgFunc {
    AlgFunc::rat(q.clone())
}

fn affine(lo: &Q, hi: &Q) -> AlgFunc {
    qf(lo).add(&AlgFunc::var(0).mul(&qf(&(hi - lo))))
}

fn cubic() -> UPoly {
    UPoly::from_ints(&[0, 0, 3, -2])
}

/// Pieces of `(0,d)` for the cubic substitution followed by subdivision of order `d`.
fn cubic_maps(d: u32) -> (Vec<AlgFunc>, Vec<AlgFunc>) {
    let phi = cubic();
    let dq = Q::from_integer(d.into());
    let maps = (0..d)
        .map(|k| {
            let lo = Q::from_integer(k.into()) / &dq;
            let hi = Q::from_integer((k + 1).into()) / &dq;
            AlgFunc::poly(&phi.affine_compose(&lo, &(hi - &lo)), 0)
        })
        .collect();
    let points = (1..d).map(|k| AlgFunc::rat(phi.eval(&(Q::from_integer(k.into()) / &dq)))).collect();
    (maps, points)
}

/// Cubic substitution `x -> 3x^2 - 2x^3` plus the smallest sufficient subdivision order.
pub fn cubic_substitute(fs: &[AlgFunc], cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    let r = cfg.r;
    if r < 2 {
        return Err(EngineError::Precondition("cubic substitution needs r >= 2".into()));
    }
    for (i, f) in fs.iter().enumerate() {
        if f.nvars() > 1 {
            return Err(EngineError::Precondition(format!("function {i} is not univariate")));
        }
        let c = certify_r_function(f, &[Interval::UNIT], r - 1, cfg.box_budget);
        if !c.is_r_function() {
            return Err(EngineError::Precondition(format!(
                "function {i} has no order-{} certificate (bound {})",
                r - 1,
                c.bound
            )));
        }
    }
    let active: Vec<AlgFunc> = fs.iter().filter(|f| !f.is_closed()).map(tidy).collect();
    let passes = |d: u32| -> (bool, f64) {
        let (maps, _) = cubic_maps(d);
        let mut worst = 0.0f64;
        for m in &maps {
            let mut list = vec![m.clone()];
            list.extend(active.iter().map(|f| tidy(&f.compose1(m))));
            let (ok, b) = certify_all(&list, 1, r, cfg.box_budget);
            worst = worst.max(b);
            if !ok {
                return (false, worst);
            }
        }
        (true, worst)
    };
    let cap = cfg.budget.min(MAX_ORDER);
    let mut hi = 3u32;
    let mut last = passes(hi);
    let mut lo = 2u32;
    while !last.0 {
        if hi >= cap {
            return Err(EngineError::Budget { cell: "(0,1)".into(), bound: last.1 });
        }
        lo = hi;
        hi = (hi * 2).min(cap);
        last = passes(hi);
    }
    while hi - lo > 1 {
        let m = lo + (hi - lo) / 2;
        if passes(m).0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    let d = hi;
    let (maps, points) = cubic_maps(d);
    let target = Fort::interval(1).expect("unit");
    let src = Fort::interval(d).expect("positive order");
    let tcell = IntegerCell::new(&[Entry::Interval(0)]);
    let mut pieces = vec![];
    let mut cells = vec![];
    for (k, m) in maps.iter().enumerate() {
        let c = IntegerCell::new(&[Entry::Interval(k as u32)]);
        let funcs: Vec<AlgFunc> = fs.iter().map(|f| tidy(&f.compose1(m))).collect();
        let mut list = vec![m.clone()];
        list.extend(funcs.iter().cloned());
        let (_, bound) = certify_all(&list, 1, r, cfg.box_budget);
        pieces.push(Piece::new(c.clone(), tcell.clone(), vec![m.clone()]));
        cells.push(CellPullback { cell: c, coords: vec![m.clone()], funcs, bound });
    }
    for (k, p) in points.iter().enumerate() {
        let c = IntegerCell::new(&[Entry::Point(k as u32 + 1)]);
        let funcs: Vec<AlgFunc> = fs.iter().map(|f| tidy(&f.compose1(p))).collect();
        let bound = funcs.iter().chain(std::iter::once(p)).map(|f| f.enclosure().mag()).fold(0.0, f64::max);
        pieces.push(Piece::new(c.clone(), tcell.clone(), vec![p.clone()]));
        cells.push(CellPullback { cell: c, coords: vec![p.clone()], funcs, bound });
    }
    let morphism = Morphism::new(src.clone(), target, pieces)?;
    let mut base = vec![FDPair::zero_set(2, 3)];
    base.push(FDPair::zero_set(1, d as u64));
    let fd = result_fd(&base, fs, 1, &cfg.templates)?;
    Ok(ParamResult {
        r,
        fort: src,
        image: morphism.clone(),
        morphism,
        cells,
        fd,
        stats: Stats { pieces: d as usize, reparametrized: 0, orders: vec![d] },
    })
}

/// Output of [`unit_reparametrize`].
#[derive(Clone, Debug)]
pub struct Reparam {
    /// Map `I -> L`, increasing, in the variable `x1`.
    pub map: AlgFunc,
    /// Input functions composed with the map.
    pub pullbacks: Vec<AlgFunc>,
    /// Index of the function used for the inverse map, if any.
    pub inverted: Option<usize>,
}

fn sup_deriv(f: &AlgFunc, lo: &Q, hi: &Q) -> f64 {
    let dom = [realalg::rational::enclose(lo).hull(&realalg::rational::enclose(hi))];
    let d = f.deriv(0);
    let c = crate::norm::norm_bound(&d, &dom, 0, crate::norm::NormGoal { target: None, rel_gap: 1e-3, budget: 200 });
    c.bound
}

/// Exact inverse of `f` on `(lo, hi)` when it is an inverse branch of an affine argument.
fn invert(f: &AlgFunc, lo: &Q, hi: &Q) -> Result<AlgFunc, EngineError> {
    if let Node::Inv(br, arg) = f.node() {
        let slope = arg.deriv(0);
        if slope.is_closed() && !slope.depends_on(0) && !arg.deriv(0).deriv(0).depends_on(0) {
            let c = arg.subst(&[AlgFunc::zero()]);
            if slope.enclosure().certainly_nonzero() {
                return Ok(br.f.sub(&c).div(&slope));
            }
        }
    }
    Ok(inverse_branch(f, lo, hi)?)
}

/// Reparametrize `(lo, hi)` so that every function pulls back with derivative at most one.
pub fn unit_reparametrize(fs: &[AlgFunc], lo: &Q, hi: &Q, box_budget: usize) -> Result<Reparam, EngineError> {
    if lo >= hi {
        return Err(EngineError::Precondition("empty interval".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, f) in fs.iter().enumerate() {
        if f.is_closed() || !f.depends_on(0) {
            continue;
        }
        let s = sup_deriv(f, lo, hi);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let lin = affine(lo, hi);
    let (map, inverted) = match best {
        Some((i, s)) if s > 1.0 => {
            let f = &fs[i];
            let flo = f.subst(&[qf(lo)]);
            let fhi = f.subst(&[qf(hi)]);
            let a = flo.add(&AlgFunc::var(0).mul(&fhi.sub(&flo)));
            let inv = invert(f, lo, hi)?;
            (inv.compose1(&a), Some(i))
        }
        _ => (lin, None),
    };
    let ends = [map.subst(&[AlgFunc::zero()]), map.subst(&[AlgFunc::one()])];
    let ends: Vec<Option<Q>> = ends.iter().map(as_exact_rational).collect();
    let ok = match (&ends[0], &ends[1]) {
        (Some(a), Some(b)) => (a == lo && b == hi) || (a == hi && b == lo),
        _ => false,
    };
    if !ok {
        return Err(EngineError::Precondition("reparametrization endpoints are not exact".into()));
    }
    let map = if ends[0].as_ref() == Some(hi) {
        // Decreasing inverse: flip to keep the map increasing.
        map.compose1(&AlgFunc::one().sub(&AlgFunc::var(0)))
    } else {
        map
    };
    let map = tidy(&map);
    let pullbacks: Vec<AlgFunc> = fs
        .iter()
        .enumerate()
        .map(|(j, f)| {
            if Some(j) == inverted {
                // f(f^-1(A(u))) = A(u), flipped when the map was.
                let flo = f.subst(&[qf(lo)]);
                let fhi = f.subst(&[qf(hi)]);
                tidy(&flo.add(&AlgFunc::var(0).mul(&fhi.sub(&flo))))
            } else {
                tidy(&f.compose1(&map))
            }
        })
        .collect();
    let mut check = vec![map.clone()];
    check.extend(pullbacks.iter().cloned());
    for g in &check {
        let c = certify_r_function(g, &[Interval::UNIT], 1, box_budget);
        if !c.is_r_function() && g.depends_on(0) {
            let d = certify_r_function(&g.deriv(0), &[Interval::UNIT], 0, box_budget);
            if !d.is_r_function() {
                return Err(EngineError::Precondition(format!("pullback derivative bound {} exceeds 1", d.bound)));
            }
        }
    }
    Ok(Reparam { map, pullbacks, inverted })
}

/// A map `I -> I` onto a subinterval of a cell, with pulled-back functions.
#[derive(Clone, Debug)]
pub(crate) struct Chart {
    pub map: AlgFunc,
    pub pulls: Vec<AlgFunc>,
    /// Rational endpoints when the map is affine.
    affine: Option<(Q, Q)>,
}

impl Chart {
    fn restrict(&self, a: &Q, b: &Q) -> Chart {
        let s = affine(a, b);
        let affine = self.affine.as_ref().map(|(lo, hi)| {
            let w = hi - lo;
            (lo + &w * a, lo + &w * b)
        });
        Chart { map: tidy(&self.map.compose1(&s)), pulls: self.pulls.iter().map(|f| tidy(&f.compose1(&s))).collect(), affine }
    }

    fn certify(&self, r: usize, budget: usize) -> (bool, f64) {
        let mut list = vec![self.map.clone()];
        list.extend(self.pulls.iter().cloned());
        certify_all(&list, 1, r, budget)
    }
}

/// Extra acceptance test on a certified base piece: data, or the offending bound.
pub(crate) type Extra<'a, T> = &'a dyn Fn(usize, &[AlgFunc]) -> Result<T, f64>;
/// Data for a base point from its (closed) pulled-back functions.
pub(crate) type AtPoint<'a, T> = &'a dyn Fn(usize, &[AlgFunc]) -> Result<T, EngineError>;

pub(crate) struct BasePiece<T> {
    /// Local source entry inside the block.
    pub entry: Entry,
    /// Local coordinate of the target cell (closed on points).
    pub map: AlgFunc,
    pub pulls: Vec<AlgFunc>,
    pub bound: f64,
    pub data: T,
}

/// Pieces over one cell of a decomposition of `I`.
pub(crate) struct BaseBlock<T> {
    pub cell: IntegerCell,
    /// Number of interval pieces; zero over a point cell.
    pub width: u32,
    pub pieces: Vec<BasePiece<T>>,
}

struct Refiner<'a, T> {
    cfg: &'a EngineConfig,
    cell: String,
    index: usize,
    /// Functions of the cell's local coordinate.
    gs: Vec<AlgFunc>,
    extra: Extra<'a, T>,
    reparametrized: usize,
    pieces: usize,
}

impl<T> Refiner<'_, T> {
    fn refine(&mut self, ch: Chart, at_lo: bool, at_hi: bool, depth: u32) -> Result<Vec<(Chart, f64, T)>, EngineError> {
        let r = self.cfg.r;
        let (ok, mut bound) = ch.certify(r, self.cfg.box_budget);
        if ok {
            match (self.extra)(self.index, &ch.pulls) {
                Ok(data) => {
                    self.pieces += 1;
                    return Ok(vec![(ch, bound, data)]);
                }
                Err(b) => bound = b,
            }
        }
        if self.pieces as u64 >= self.cfg.budget as u64 {
            return Err(EngineError::Budget { cell: self.cell.clone(), bound });
        }
        if let Some((lo, hi)) = &ch.affine {
            // Unbounded derivatives at a cell end call for a reparametrization.
            if (at_lo || at_hi) && (!bound.is_finite() || depth >= self.cfg.min_width_log2) {
                if let Ok(rp) = unit_reparametrize(&self.gs, lo, hi, self.cfg.box_budget) {
                    if rp.inverted.is_some() {
                        self.reparametrized += 1;
                        let sub = Chart { map: rp.map, pulls: rp.pullbacks, affine: None };
                        return self.refine(sub, at_lo, at_hi, 0);
                    }
                }
            }
        }
        if depth >= self.cfg.min_width_log2 {
            return Err(EngineError::Budget { cell: self.cell.clone(), bound });
        }
        let half = Q::new(1.into(), 2.into());
        let zero = Q::from_integer(0.into());
        let one = Q::from_integer(1.into());
        let left = ch.restrict(&zero, &half);
        let right = ch.restrict(&half, &one);
        let mut out = self.refine(left, at_lo, false, depth + 1)?;
        out.extend(self.refine(right, false, at_hi, depth + 1)?);
        Ok(out)
    }
}

fn closed_bound(fs: &[AlgFunc]) -> f64 {
    fs.iter().map(|f| f.enclosure().mag()).fold(0.0, f64::max)
}

/// Certified pieces over every cell of a decomposition of `I`.
///
/// `gs_of(i, x)` lists the functions to certify on cell `i`, where `x` is the
/// global coordinate in terms of the cell's local one.
pub(crate) fn run_base<T>(
    base: &Decomposition,
    cfg: &EngineConfig,
    gs_of: &dyn Fn(usize, &AlgFunc) -> Vec<AlgFunc>,
    extra: Extra<'_, T>,
    at_point: AtPoint<'_, T>,
    stats: &mut Stats,
) -> Result<Vec<BaseBlock<T>>, EngineError> {
    if cfg.r == 0 {
        return Err(EngineError::Precondition("r must be positive".into()));
    }
    let mut blocks = vec![];
    for (i, c) in base.fort.cells().into_iter().enumerate() {
        let p = base.morphism.piece(&c).expect("complete morphism");
        let x = p.fns[0].clone();
        let gs: Vec<AlgFunc> = gs_of(i, &x).iter().map(tidy).collect();
        if !c.entries()[0].is_interval() {
            let data = at_point(i, &gs)?;
            let bound = closed_bound(&gs);
            let piece = BasePiece { entry: Entry::Point(0), map: AlgFunc::zero(), pulls: gs, bound, data };
            blocks.push(BaseBlock { cell: c, width: 0, pieces: vec![piece] });
            continue;
        }
        let zero = Q::from_integer(0.into());
        let one = Q::from_integer(1.into());
        let chart = Chart { map: AlgFunc::var(0), pulls: gs.clone(), affine: Some((zero, one)) };
        let mut rf = Refiner { cfg, cell: c.to_string(), index: i, gs, extra, reparametrized: 0, pieces: 0 };
        let done = rf.refine(chart, true, true, 0)?;
        stats.pieces += done.len();
        stats.reparametrized += rf.reparametrized;
        let n = done.len();
        let mut pieces = vec![];
        for (j, (ch, bound, data)) in done.into_iter().enumerate() {
            let end = (j + 1 < n).then(|| {
                let t = tidy(&ch.map.subst(&[AlgFunc::one()]));
                let pulls: Vec<AlgFunc> = ch.pulls.iter().map(|f| tidy(&f.subst(&[AlgFunc::one()]))).collect();
                (t, pulls)
            });
            pieces.push(BasePiece { entry: Entry::Interval(j as u32), map: ch.map, pulls: ch.pulls, bound, data });
            if let Some((t, pulls)) = end {
                let data = at_point(i, &pulls)?;
                let bound = closed_bound(&pulls).max(t.enclosure().mag());
                pieces.push(BasePiece { entry: Entry::Point(j as u32 + 1), map: t, pulls, bound, data });
            }
        }
        blocks.push(BaseBlock { cell: c, width: n as u32, pieces });
    }
    Ok(blocks)
}

/// Offsets of the blocks along the first axis of the assembled fort.
pub(crate) fn block_offsets<T>(blocks: &[BaseBlock<T>]) -> Vec<u32> {
    crate::morphism::tower_offsets(&blocks.iter().map(|b| b.width).collect::<Vec<_>>())
}

pub(crate) fn shift_entry(e: Entry, by: u32) -> Entry {
    match e {
        Entry::Interval(j) => Entry::Interval(j + by),
        Entry::Point(j) => Entry::Point(j + by),
    }
}

/// Parametrization of a decomposition of `I` with certified pullbacks of
/// `funcs[i]` on cell `i` (functions of the global coordinate).
pub fn parametrize_1d_cells(decomp: &Decomposition, funcs: &[Vec<AlgFunc>], cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    if decomp.dim != 1 {
        return Err(EngineError::Precondition("decomposition of I expected".into()));
    }
    if funcs.len() != decomp.cell_count() {
        return Err(EngineError::Precondition("one function list per cell expected".into()));
    }
    let mut stats = Stats::default();
    let gs_of = |i: usize, x: &AlgFunc| {
        let mut gs = vec![x.clone()];
        gs.extend(funcs[i].iter().map(|f| f.compose1(x)));
        gs
    };
    let blocks = run_base(decomp, cfg, &gs_of, &|_, _| Ok(()), &|_, _| Ok(()), &mut stats)?;
    let offsets = block_offsets(&blocks);
    let mut tower_blocks = vec![];
    let mut cells = vec![];
    for (b, off) in blocks.iter().zip(offsets) {
        let k = b.cell.entries()[0].key() / 2;
        let kq = AlgFunc::int(k as i64);
        let mut pieces = vec![];
        for p in &b.pieces {
            let src = IntegerCell::new(&[p.entry]);
            let fns = if b.width == 0 { vec![kq.clone()] } else { vec![kq.add(&p.map)] };
            pieces.push(Piece::new(src, b.cell.clone(), fns));
            let cell = IntegerCell::new(&[shift_entry(p.entry, off)]);
            cells.push(CellPullback { cell, coords: vec![p.pulls[0].clone()], funcs: p.pulls[1..].to_vec(), bound: p.bound });
        }
        tower_blocks.push(if b.width == 0 {
            TowerBlock::Point { fiber: None, pieces }
        } else {
            TowerBlock::Interval { fort: Fort::interval(b.width)?, pieces }
        });
    }
    let (fort, morphism) = tower(&decomp.fort, tower_blocks)?;
    let image = compose(&decomp.morphism, &morphism)?;
    let all: Vec<AlgFunc> = funcs.iter().flatten().cloned().collect();
    let fd = result_fd(&decomp.inputs, &all, 1, &cfg.templates)?;
    cells.sort_by_key(|a| fort.index_of(&a.cell));
    Ok(ParamResult { r: cfg.r, fort, morphism, image, cells, fd, stats })
}

/// One-variable parametrization of `funcs` over the cells of `decomp`.
pub fn parametrize_1d(decomp: &Decomposition, funcs: &[AlgFunc], cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    parametrize_1d_cells(decomp, &vec![funcs.to_vec(); decomp.cell_count()], cfg)
}

/// Decomposition of `I` outside of which all functions are smooth.
pub fn smooth_1d(funcs: &[AlgFunc]) -> Decomposition {
    cad_1(&cr_locus_1(funcs).polys)
}

/// Parametrize functions on `I`: smoothing cad, then the cell pipeline.
pub fn parametrize_functions_1d(funcs: &[AlgFunc], cfg: &EngineConfig) -> Result<ParamResult, EngineError> {
    parametrize_1d(&smooth_1d(funcs), funcs, cfg)
}

/// Certificate for each function on the unit box of the given dimension.
pub fn certificates(fs: &[AlgFunc], nvars: usize, r: usize) -> Vec<RCertificate> {
    let bx = unit_box(nvars);
    fs.iter().map(|f| crate::norm::cr_norm_box(f, &bx, r)).collect()
}

/// Growth-series row for `x^d` parametrized on `I`.
pub fn power_row(d: u32, cfg: &EngineConfig) -> Result<crate::ledger::GrowthRow, EngineError> {
    let f = AlgFunc::var(0).pow(d);
    let p = parametrize_functions_1d(&[f], cfg)?;
    if !p.certified() {
        return Err(EngineError::Budget { cell: format!("x^{d}"), bound: p.max_bound() });
    }
    Ok(crate::ledger::GrowthRow { d: d as u64, cells: p.cell_count() as u64, format: p.fd.format, degree: p.fd.degree })
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
    fn cubic_of_identity_needs_order_three() {
        let r = cubic_substitute(&[e("x")], &EngineConfig::new(2)).unwrap();
        assert_eq!(r.stats.orders, vec![3]);
        assert!(r.certified());
        r.morphism.validate().unwrap();
    }

    #[test]
    fn constant_passes_through() {
        let r = cubic_substitute(&[e("1/3")], &EngineConfig::new(2)).unwrap();
        assert!(r.cells.iter().all(|c| c.funcs[0] == e("1/3")));
    }

    #[test]
    fn square_on_upper_half_inverts() {
        let rp = unit_reparametrize(&[e("(pow x 2)")], &q(1, 2), &q(1, 1), 1000).unwrap();
        assert_eq!(rp.inverted, Some(0));
        // Pullback is affine from 1/4 to 1.
        assert_eq!(rp.pullbacks[0].to_upoly(0).unwrap(), UPoly::from_ints(&[1, 3]).scale(&q(1, 4)));
        let rp = unit_reparametrize(&[e("(pow x 2)")], &q(0, 1), &q(1, 2), 1000).unwrap();
        assert_eq!(rp.inverted, None);
    }

    #[test]
    fn sqrt_pipeline() {
        let f = parse_expr("(inv (pow x 2) (0 1) x)").unwrap();
        let r = parametrize_functions_1d(&[f], &EngineConfig::new(2)).unwrap();
        assert!(r.certified(), "{}", r.max_bound());
        assert!(r.stats.reparametrized >= 1);
        r.morphism.validate().unwrap();
        r.image.validate().unwrap();
    }

    #[test]
    fn power_pipeline() {
        let r = parametrize_functions_1d(&[e("(pow x 8)")], &EngineConfig::new(3)).unwrap();
        assert!(r.certified());
        // Dyadic pieces ending at 1/2, 3/4, 7/8, 1: the last has slope 8/8.
        assert_eq!(r.cell_count(), 7);
        r.morphism.validate().unwrap();
    }
}
