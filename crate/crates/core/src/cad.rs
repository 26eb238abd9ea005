//! Sign-invariant cylindrical decompositions of `I` and `I^2`, presented as
//! natural morphisms from forts.

use std::cmp::Ordering;
use std::sync::Arc;

use num_traits::{One, Zero};
use realalg::algebraic::{real_roots, AlgebraicNumber, RealNum};
use realalg::mpoly::{discriminant_x2, resultant_x2, squarefree_x2};
use realalg::rational::{from_f64, mid, to_f64};
use realalg::{AlgFunc, InvBranch, Interval, MPoly, Node, SectionSpec, UPoly, Q};

use crate::certify::{certify_positive, kinds_box};
use crate::fort::{Entry, Fort, FortError, FortPoint, IntegerCell};
use crate::ledger::{fd_complement, fd_cylinder, fd_intersection, fd_union, FDPair};
use crate::morphism::{natural_cell_map, CellDescription, Level, Morphism, MorphismError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CadError {
    #[error("polynomial has {got} variables, expected at most {want}")]
    Arity { got: usize, want: usize },
    #[error("no cell {0} in the decomposition")]
    NoCell(IntegerCell),
    #[error("function is not certified monotone on ({lo}, {hi}): {detail}")]
    NotMonotone { lo: f64, hi: f64, detail: String },
    #[error("empty interval ({0}, {1})")]
    EmptyInterval(f64, f64),
    #[error(transparent)]
    Fort(#[from] FortError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

/// A decomposition of `I^dim` with its natural parametrization.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub dim: usize,
    pub fort: Fort,
    /// Natural morphism `fort -> I^dim`.
    pub morphism: Morphism,
    /// Cell descriptions in the fort's canonical cell order.
    pub cells: Vec<CellDescription>,
    /// Per-cell ledger entries, same order.
    pub fd: Vec<FDPair>,
    /// Ledger entries of the input zero sets.
    pub inputs: Vec<FDPair>,
    /// Polynomials whose roots split the first axis.
    pub projection: Vec<UPoly>,
}

impl Decomposition {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn description(&self, c: &IntegerCell) -> Option<&CellDescription> {
        self.fort.index_of(c).filter(|_| c.len() == self.dim).map(|i| &self.cells[i])
    }

    /// The plain list of described cells.
    pub fn complex(&self) -> CellComplex {
        CellComplex { dim: self.dim, cells: self.cells.clone() }
    }

    pub fn identity(dim: usize) -> Decomposition {
        match dim {
            1 => cad_1(&[]),
            _ => cad_2(&[]),
        }
    }
}

/// Cells of `I^dim` without a fort, e.g. hand-transcribed decompositions.
#[derive(Clone, Debug, PartialEq)]
pub struct CellComplex {
    pub dim: usize,
    pub cells: Vec<CellDescription>,
}

fn box_fd(ell: u32) -> FDPair {
    // The boundary of the box: x(1-x) in each coordinate.
    FDPair::zero_set(ell, 2)
}

fn level_fd(e: Entry, zero: FDPair) -> FDPair {
    if e.is_interval() {
        fd_complement(zero)
    } else {
        fd_intersection(&[zero]).expect("nonempty")
    }
}

fn deg_u(p: &UPoly) -> u64 {
    p.deg() as u64
}

/// Distinct roots in `(0,1)` of all nonzero polynomials, increasing.
pub fn merged_roots(polys: &[UPoly]) -> Vec<RealNum> {
    let mut roots: Vec<RealNum> = vec![];
    for p in polys {
        if p.is_zero() || p.is_constant() {
            continue;
        }
        for r in real_roots(&p.squarefree(), &Q::zero(), &Q::one()) {
            if !roots.iter().any(|s| s.cmp_exact(&r) == Ordering::Equal) {
                roots.push(r);
            }
        }
    }
    roots.sort_by(|a, b| a.cmp_exact(b));
    roots
}

fn band(a: &RealNum, b: &RealNum) -> Level {
    Level::Band(AlgFunc::real(a), AlgFunc::real(b))
}

/// Levels of the axis `(0,1)` split at `roots`: band, point, band, ...
fn axis_levels(roots: &[RealNum]) -> Vec<Level> {
    let mut ends = vec![RealNum::Rat(Q::zero())];
    ends.extend(roots.iter().cloned());
    ends.push(RealNum::Rat(Q::one()));
    let mut out = vec![];
    for k in 0..ends.len() - 1 {
        if k > 0 {
            out.push(Level::Point(AlgFunc::real(&ends[k])));
        }
        out.push(band(&ends[k], &ends[k + 1]));
    }
    out
}

fn unit_target(dim: usize) -> IntegerCell {
    IntegerCell((0..dim).map(|_| Entry::Interval(0)).collect())
}

fn assemble(
    dim: usize,
    fort: Fort,
    cells: Vec<CellDescription>,
    fd: Vec<FDPair>,
    inputs: Vec<FDPair>,
    projection: Vec<UPoly>,
) -> Decomposition {
    let pieces = fort
        .cells()
        .iter()
        .zip(&cells)
        .map(|(c, d)| natural_cell_map(c, d, unit_target(dim)).expect("kinds match by construction"))
        .collect();
    let morphism = Morphism::new(fort.clone(), Fort::unit(dim), pieces).expect("one piece per cell");
    Decomposition { dim, fort, morphism, cells, fd, inputs, projection }
}

/// Decomposition of `I` into points at the roots of `polys` and the intervals between.
pub fn cad_1(polys: &[UPoly]) -> Decomposition {
    let roots = merged_roots(polys);
    let fort = Fort::interval(roots.len() as u32 + 1).expect("positive width");
    let inputs: Vec<FDPair> = polys.iter().map(|p| FDPair::zero_set(1, deg_u(p))).collect();
    let mut all = inputs.clone();
    all.push(box_fd(1));
    let zero = fd_union(&all).expect("nonempty");
    let cells: Vec<CellDescription> = axis_levels(&roots).into_iter().map(|l| CellDescription::new(vec![l])).collect();
    let fd = fort.cells().iter().map(|c| level_fd(c.last(), zero)).collect();
    assemble(1, fort, cells, fd, inputs, polys.to_vec())
}

/// `sum c_j (y + a)^j`, coefficients in `x`.
fn shift_y(cs: &[UPoly], a: &Q) -> Vec<UPoly> {
    let n = cs.len();
    let mut out = vec![UPoly::zero(); n];
    for (j, c) in cs.iter().enumerate() {
        let mut binom = Q::one();
        // c_j (y+a)^j = sum_k C(j,k) a^(j-k) c_j y^k
        for k in (0..=j).rev() {
            let coef = binom.clone() * num_traits::pow(a.clone(), j - k);
            out[k] = out[k].add(&c.scale(&coef));
            if k > 0 {
                binom = binom * Q::from_integer(k.into()) / Q::from_integer((j - k + 1).into());
            }
        }
    }
    while out.len() > 1 && out.last().is_some_and(|c| c.is_zero()) {
        out.pop();
    }
    out
}

/// Remove factors `y` and `y - 1`, which do not meet the open square.
fn strip_box_factors(q: &MPoly) -> MPoly {
    let mut cs = q.coeffs_in_x2();
    while cs.len() > 1 && cs[0].is_zero() {
        cs.remove(0);
    }
    let mut sh = shift_y(&cs, &Q::one());
    while sh.len() > 1 && sh[0].is_zero() {
        sh.remove(0);
    }
    MPoly::from_coeffs_in_x2(&shift_y(&sh, &-Q::one()))
}

/// The squarefree section polynomial of the inputs and the extra base polynomials.
fn prepare(polys: &[MPoly]) -> (Option<MPoly>, Vec<UPoly>) {
    let mut base = vec![];
    let mut prod: Option<MPoly> = None;
    for p in polys {
        if p.is_zero() || p.as_constant().is_some() {
            continue;
        }
        let p = p.with_nvars(2);
        let (content, prim) = squarefree_x2(&p);
        if !content.is_constant() {
            base.push(content);
        }
        if prim.degree_in(1) > 0 {
            prod = Some(match prod {
                None => prim,
                Some(q) => q.mul(&prim),
            });
        }
    }
    let q = prod.map(|q| strip_box_factors(&squarefree_x2(&q).1)).filter(|q| q.degree_in(1) > 0);
    (q, base)
}

/// Projection polynomials of a squarefree section polynomial.
fn projection_of(q: &MPoly) -> Vec<UPoly> {
    let cs = q.coeffs_in_x2();
    let lc = cs.last().cloned().unwrap_or_else(UPoly::zero);
    let at0 = cs[0].clone();
    let at1 = cs.iter().fold(UPoly::zero(), |a, c| a.add(c));
    let mut out = vec![lc];
    if q.degree_in(1) >= 2 {
        out.push(discriminant_x2(q));
    }
    out.push(at0);
    out.push(at1);
    out.into_iter().filter(|p| !p.is_zero() && !p.is_constant()).map(|p| p.primitive()).collect()
}

fn strictly_between(a: &Level, b: &Level) -> Q {
    // Enclosures of distinct roots are disjoint.
    let (lo, hi) = match (a, b) {
        (Level::Point(l), Level::Point(h)) => (l.enclosure().hi, h.enclosure().lo),
        _ => unreachable!(),
    };
    mid(&from_f64(lo), &from_f64(hi))
}

/// Sections of `q` over a base cell: explicit when `q` is linear in `y`.
struct Sections {
    q: MPoly,
    specs: Vec<Arc<SectionSpec>>,
    linear: Option<AlgFunc>,
}

impl Sections {
    fn new(q: MPoly) -> Sections {
        let cs = q.coeffs_in_x2();
        let linear = (cs.len() == 2).then(|| AlgFunc::poly(&cs[0], 0).neg().div(&AlgFunc::poly(&cs[1], 0)));
        Sections { q, specs: vec![], linear }
    }

    fn spec(&mut self, k: usize) -> Arc<SectionSpec> {
        while self.specs.len() <= k {
            let i = self.specs.len();
            self.specs.push(SectionSpec::new(self.q.clone(), i));
        }
        self.specs[k].clone()
    }

    fn over_interval(&mut self, sample: &Q) -> Vec<AlgFunc> {
        let n = real_roots(&self.q.at_x1(sample).squarefree(), &Q::zero(), &Q::one()).len();
        match (&self.linear, n) {
            (Some(f), 1) => vec![f.clone()],
            _ => (0..n).map(|k| AlgFunc::section(&self.spec(k), &AlgFunc::var(0))).collect(),
        }
    }

    fn over_point(&self, x: &RealNum) -> Vec<AlgFunc> {
        let ys = match x {
            RealNum::Rat(a) => {
                let p = self.q.at_x1(a);
                if p.is_zero() {
                    vec![]
                } else {
                    real_roots(&p.squarefree(), &Q::zero(), &Q::one())
                }
            }
            RealNum::Alg(a) => roots_over_algebraic(&self.q, a),
        };
        ys.iter().map(AlgFunc::real).collect()
    }
}

fn swap_vars(p: &MPoly) -> MPoly {
    let mut r = MPoly::zero(2);
    for (e, c) in p.terms() {
        r = r.add(&MPoly::monomial(c.clone(), vec![e[1], e[0]]));
    }
    r
}

const ALG_REFINE: u32 = 120;

/// Roots in `(0,1)` of `q(alpha, .)`: candidates from a resultant, screened by refinement.
fn roots_over_algebraic(q: &MPoly, alpha: &AlgebraicNumber) -> Vec<RealNum> {
    let m = MPoly::from_upoly(2, 1, alpha.poly());
    let r = resultant_x2(&swap_vars(q), &m);
    if r.is_zero() {
        return vec![];
    }
    let mut out = vec![];
    for beta in real_roots(&r.squarefree(), &Q::zero(), &Q::one()) {
        let mut a = alpha.clone();
        let mut b = beta.clone();
        let mut keep = true;
        for _ in 0..ALG_REFINE {
            let v = q.eval_interval(&[alg_box(&a), real_box(&b)]);
            if v.certainly_nonzero() {
                keep = false;
                break;
            }
            let w = (a.hi() - a.lo()) / Q::from_integer(4.into());
            a = a.refined(&w);
            if let RealNum::Alg(bb) = &b {
                let w = (bb.hi() - bb.lo()) / Q::from_integer(4.into());
                b = RealNum::Alg(bb.refined(&w));
            }
            if a.lo() == a.hi() && b.as_rational().is_some() {
                keep = q.eval(&[a.lo().clone(), b.as_rational().unwrap().clone()]).is_zero();
                break;
            }
        }
        if keep {
            out.push(beta);
        }
    }
    out
}

fn alg_box(a: &AlgebraicNumber) -> Interval {
    realalg::rational::enclose(a.lo()).hull(&realalg::rational::enclose(a.hi()))
}

fn real_box(r: &RealNum) -> Interval {
    match r {
        RealNum::Rat(q) => realalg::rational::enclose(q),
        RealNum::Alg(a) => alg_box(a),
    }
}

fn column(sections: &[AlgFunc]) -> Vec<Level> {
    let mut ends = vec![AlgFunc::zero()];
    ends.extend(sections.iter().cloned());
    ends.push(AlgFunc::one());
    let mut out = vec![];
    for k in 0..ends.len() - 1 {
        if k > 0 {
            out.push(Level::Point(ends[k].clone()));
        }
        out.push(Level::Band(ends[k].clone(), ends[k + 1].clone()));
    }
    out
}

/// Cylindrical decomposition of `I^2` sign-invariant for every input polynomial.
pub fn cad_2(polys: &[MPoly]) -> Decomposition {
    let (q, extra) = prepare(polys);
    let mut projection = extra;
    if let Some(q) = &q {
        projection.extend(projection_of(q));
    }
    let base = cad_1(&projection);
    let roots = merged_roots(&projection);
    let mut sections = q.clone().map(Sections::new);
    let base_levels: Vec<Level> = base.cells.iter().map(|d| d.levels[0].clone()).collect();
    let mut columns: Vec<Vec<Level>> = vec![];
    for (i, lvl) in base_levels.iter().enumerate() {
        let secs = match (&mut sections, lvl) {
            (None, _) => vec![],
            (Some(s), Level::Band(..)) => {
                let k = i / 2;
                let lo = if k == 0 { Level::Point(AlgFunc::zero()) } else { Level::Point(AlgFunc::real(&roots[k - 1])) };
                let hi = if k == roots.len() { Level::Point(AlgFunc::one()) } else { Level::Point(AlgFunc::real(&roots[k])) };
                s.over_interval(&strictly_between(&lo, &hi))
            }
            (Some(s), Level::Point(_)) => s.over_point(&roots[i / 2]),
        };
        columns.push(column(&secs));
    }
    let heights: Vec<u32> = columns.iter().map(|c| c.len().div_ceil(2) as u32).collect();
    let fort = base.fort.extend_vec(heights).expect("positive heights");
    let inputs: Vec<FDPair> = polys.iter().map(|p| FDPair::zero_set(2, p.total_degree() as u64)).collect();
    let mut all2 = inputs.clone();
    all2.push(box_fd(2));
    let zero2 = fd_union(&all2).expect("nonempty");
    let mut cells = vec![];
    let mut fd = vec![];
    for c in fort.cells() {
        let bi = c.entries()[0].key() as usize - 1;
        let ci = c.entries()[1].key() as usize - 1;
        cells.push(CellDescription::new(vec![base_levels[bi].clone(), columns[bi][ci].clone()]));
        let below = fd_cylinder(base.fd[bi]);
        fd.push(fd_intersection(&[below, level_fd(c.entries()[1], zero2)]).expect("nonempty"));
    }
    assemble(2, fort, cells, fd, inputs, projection)
}

/// A sample of a cell: the midpoint of its integer cell and its exact image.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub local: FortPoint,
    pub image: Vec<AlgFunc>,
}

impl Sample {
    /// The image as rationals, when every coordinate is rational.
    pub fn rational(&self) -> Option<Vec<Q>> {
        self.image.iter().map(crate::certify::as_exact_rational).collect()
    }

    pub fn approx(&self) -> Vec<f64> {
        self.image.iter().map(|f| f.enclosure().mid()).collect()
    }
}

/// Midpoint rule: the integer cell's midpoint pushed through the natural map.
pub fn sample_point(d: &Decomposition, c: &IntegerCell) -> Result<Sample, CadError> {
    let desc = d.description(c).ok_or_else(|| CadError::NoCell(c.clone()))?;
    let half = Q::new(1.into(), 2.into());
    let u: Vec<AlgFunc> = desc
        .levels
        .iter()
        .map(|l| if l.is_band() { AlgFunc::rat(half.clone()) } else { AlgFunc::zero() })
        .collect();
    let image = desc.natural_fns().iter().map(|f| simplify_closed(&f.subst(&u))).collect();
    Ok(Sample { local: FortPoint::new(c.sample()), image })
}

fn simplify_closed(f: &AlgFunc) -> AlgFunc {
    match crate::certify::as_exact_rational(f) {
        Some(q) => AlgFunc::rat(q),
        None => f.clone(),
    }
}

/// Points of the open interval where some function may fail to be smooth,
/// together with the polynomial conditions cutting them out.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BadSet {
    pub polys: Vec<UPoly>,
    pub points: Vec<RealNum>,
}

/// Curves of `I^2` where some function may fail to be smooth.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BadCurves {
    pub polys: Vec<MPoly>,
}

fn walk(f: &AlgFunc, visit: &mut dyn FnMut(&AlgFunc)) {
    let mut stack = vec![f.clone()];
    let mut seen = std::collections::HashSet::new();
    while let Some(e) = stack.pop() {
        if !seen.insert(e.id()) {
            continue;
        }
        visit(&e);
        match e.node() {
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                stack.push(a.clone());
                stack.push(b.clone());
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Poly(_, a) | Node::Inv(_, a) | Node::Section(_, a) => stack.push(a.clone()),
            _ => {}
        }
    }
}

/// Polynomial conditions for the non-smooth locus in one variable.
pub fn cr_locus_1(fs: &[AlgFunc]) -> BadSet {
    let mut polys: Vec<UPoly> = vec![];
    for f in fs {
        walk(f, &mut |e| match e.node() {
            Node::Div(_, b) => {
                if let Some(p) = b.to_upoly(0) {
                    polys.push(p);
                }
            }
            Node::Inv(br, arg) => {
                // arg(x) = f(t) with f'(t) = 0.
                if let (Some(fp), Some(a)) = (br.f.to_mpoly(), arg.to_upoly(0)) {
                    let f2 = swap_to_x2(&fp.with_nvars(1));
                    let lhs = MPoly::from_upoly(2, 0, &a).sub(&f2);
                    let dt = f2.deriv(1);
                    let r = resultant_x2(&lhs, &dt);
                    if !r.is_zero() {
                        polys.push(r);
                    }
                }
            }
            _ => {}
        });
    }
    polys.retain(|p| !p.is_constant());
    let points = merged_roots(&polys);
    BadSet { polys, points }
}

fn swap_to_x2(p: &MPoly) -> MPoly {
    let mut r = MPoly::zero(2);
    for (e, c) in p.terms() {
        r = r.add(&MPoly::monomial(c.clone(), vec![0, e[0]]));
    }
    r
}

/// Polynomial conditions for the non-smooth locus in two variables.
pub fn cr_locus_2(fs: &[AlgFunc]) -> BadCurves {
    let mut polys = vec![];
    for f in fs {
        walk(f, &mut |e| match e.node() {
            Node::Div(_, b) => {
                if let Some(p) = b.to_mpoly() {
                    if p.as_constant().is_none() {
                        polys.push(p.with_nvars(2));
                    }
                }
            }
            Node::Section(s, _) => polys.push(MPoly::from_upoly(2, 0, &discriminant_x2(&s.poly))),
            _ => {}
        });
    }
    BadCurves { polys }
}

/// The inverse of `f`, strictly monotone on `(lo, hi)`, as a function of one variable.
pub fn inverse_branch(f: &AlgFunc, lo: &Q, hi: &Q) -> Result<AlgFunc, CadError> {
    if lo >= hi {
        return Err(CadError::EmptyInterval(to_f64(lo), to_f64(hi)));
    }
    let df = f.deriv(0);
    let dom = vec![realalg::rational::enclose(lo).hull(&realalg::rational::enclose(hi))];
    let err = |detail: String| CadError::NotMonotone { lo: to_f64(lo), hi: to_f64(hi), detail };
    if let Some(p) = f.to_upoly(0) {
        if p.deg() == 1 {
            // Exact affine inverse.
            let c = p.coeff(1);
            if c.is_zero() {
                return Err(err("constant".into()));
            }
            return Ok(AlgFunc::var(0).sub(&AlgFunc::rat(p.coeff(0))).div(&AlgFunc::rat(c)));
        }
    }
    let increasing = match certify_positive(&df, &dom) {
        Ok(_) => true,
        Err(e1) => match certify_positive(&df.neg(), &dom) {
            Ok(_) => false,
            Err(e2) => return Err(err(format!("{e1}; {e2}"))),
        },
    };
    let br = InvBranch::new(f.clone(), AlgFunc::rat(lo.clone()), AlgFunc::rat(hi.clone()), increasing);
    Ok(AlgFunc::inv(&br, &AlgFunc::var(0)))
}

/// Certified bound on `|f(g(y)) - y|` at a rational `y`.
pub fn inverse_residual(f: &AlgFunc, g: &AlgFunc, y: &Q) -> f64 {
    let at = [realalg::rational::enclose(y)];
    let v = f.compose1(g).interval(&at) - at[0];
    v.mag()
}

/// Sample box for a cell of a decomposition: the local box of its integer cell.
pub fn local_box(c: &IntegerCell) -> Vec<Interval> {
    kinds_box(c.entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use realalg::parse_expr;
    use realalg::rational::q;

    fn mp(s: &str) -> MPoly {
        parse_expr(s).unwrap().to_mpoly().unwrap().with_nvars(2)
    }

    #[test]
    fn single_root() {
        let d = cad_1(&[UPoly::from_ints(&[-1, 2])]);
        assert_eq!(d.fort, Fort::interval(2).unwrap());
        d.morphism.validate().unwrap();
        let s = sample_point(&d, &IntegerCell::new(&[Entry::Point(1)])).unwrap();
        assert_eq!(s.rational(), Some(vec![q(1, 2)]));
    }

    #[test]
    fn circle_columns() {
        let d = cad_2(&[mp("(sub (add (pow (sub x 1/2) 2) (pow (sub y 1/2) 2)) 1/16)")]);
        assert_eq!(d.fort.width(), 3);
        assert_eq!(d.fort.level(1), &[1, 2, 3, 2, 1]);
        d.morphism.validate().unwrap();
    }

    #[test]
    fn diagonal() {
        let d = cad_2(&[mp("(sub y x)")]);
        assert_eq!(d.fort.width(), 1);
        assert_eq!(d.fort.level(1), &[2]);
        d.morphism.validate().unwrap();
    }

    #[test]
    fn sqrt_branch() {
        let f = parse_expr("(pow x 2)").unwrap();
        let g = inverse_branch(&f, &q(0, 1), &q(1, 1)).unwrap();
        let v = g.eval_f64(&[0.25]);
        assert!((v - 0.5).abs() < 1e-12);
        assert!(inverse_residual(&f, &g, &q(1, 4)) < 1e-12);
    }
}
