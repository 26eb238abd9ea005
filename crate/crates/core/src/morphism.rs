//! Morphisms of forts.
//!
//! A piece stores one coordinate function per axis. Functions take the local
//! coordinates of the source cell: `u_i` in `(0,1)` on interval axes (the global
//! coordinate is `k_i + u_i`); point axes contribute nothing and functions must
//! not depend on them. Outputs are global target coordinates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::Zero;
use realalg::sexpr::{parse_expr_list, to_sexpr};
use realalg::{AlgFunc, Interval, Q};

use crate::certify::{
    cell_box, certify_nonneg, certify_positive, decide_equal, tight_range, Equality, SignFailure, Tier, SHRINK,
};
use crate::fort::{validate_fort, Entry, Fort, FortError, FortPoint, IntegerCell, WidthForm};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Piece {
    pub source: IntegerCell,
    pub target: IntegerCell,
    pub fns: Vec<AlgFunc>,
}

impl Piece {
    pub fn new(source: IntegerCell, target: IntegerCell, fns: Vec<AlgFunc>) -> Piece {
        Piece { source, target, fns }
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    /// Floating point image of local coordinates (not certified).
    pub fn eval_f64(&self, u: &[f64]) -> Vec<f64> {
        self.fns.iter().map(|f| f.eval_f64(u)).collect()
    }

    /// Local coordinates of a global point of the source cell.
    pub fn local_coords(&self, x: &[Q]) -> Vec<Q> {
        local_coords(&self.source, x)
    }

    /// Each coordinate is affine in its own variable.
    pub fn natural_flags(&self) -> Vec<bool> {
        self.fns
            .iter()
            .enumerate()
            .map(|(i, f)| {
                !self.source.entries()[i].is_interval() || crate::certify::is_identically_zero(&f.deriv(i).deriv(i))
            })
            .collect()
    }

    pub fn is_natural(&self) -> bool {
        self.natural_flags().into_iter().all(|b| b)
    }

    /// The shared functions of the first `k` coordinates.
    pub fn prefix_fns(&self, k: usize) -> &[AlgFunc] {
        &self.fns[..k]
    }
}

pub fn local_coords(c: &IntegerCell, x: &[Q]) -> Vec<Q> {
    c.entries()
        .iter()
        .zip(x)
        .map(|(e, v)| match e {
            Entry::Interval(k) => v - Q::from_integer((*k).into()),
            Entry::Point(_) => Q::zero(),
        })
        .collect()
}

/// `f` with `x_var` replaced by a constant.
pub fn subst_one(f: &AlgFunc, var: usize, value: &AlgFunc) -> AlgFunc {
    let map: Vec<AlgFunc> = (0..=var).map(|j| if j == var { value.clone() } else { AlgFunc::var(j) }).collect();
    f.subst(&map)
}

/// Replace the first `xs.len()` variables by constants and shift the rest down.
pub fn fix_prefix(f: &AlgFunc, xs: &[Q], total: usize) -> AlgFunc {
    let i = xs.len();
    let mut map: Vec<AlgFunc> = xs.iter().map(|q| AlgFunc::rat(q.clone())).collect();
    map.extend((0..total - i).map(AlgFunc::var));
    f.subst(&map)
}

/// Shift every variable index up by `by`.
pub fn shift_vars(f: &AlgFunc, by: usize, total: usize) -> AlgFunc {
    let map: Vec<AlgFunc> = (0..total).map(|j| AlgFunc::var(j + by)).collect();
    f.subst(&map)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MorphismError {
    #[error("fort mismatch: {0}")]
    FortMismatch(String),
    #[error("no piece for source cell {0}")]
    MissingPiece(IntegerCell),
    #[error("not surjective over {cell}: {detail}")]
    Surjectivity { cell: IntegerCell, detail: String },
    #[error("not precellular on {cell}, coordinate {coord}: {detail}")]
    Precellular { cell: IntegerCell, coord: usize, detail: String },
    #[error("cell {cell} not mapped continuously into its target cell, coordinate {coord}: {detail}")]
    CellMap { cell: IntegerCell, coord: usize, detail: String },
    #[error("not a subfort of the target: {0}")]
    NotSubfort(String),
    #[error("tower blocks out of order: {0}")]
    Order(String),
    #[error("cell types differ: {0} and {1}")]
    TypeMismatch(IntegerCell, IntegerCell),
    #[error(transparent)]
    Fort(#[from] FortError),
    #[error("parse error: {0}")]
    Parse(String),
}

impl MorphismError {
    /// Which item of the morphism definition failed (surjective, precellular, cellwise).
    pub fn item(&self) -> Option<u8> {
        match self {
            MorphismError::Surjectivity { .. } | MorphismError::MissingPiece(_) => Some(1),
            MorphismError::Precellular { .. } => Some(2),
            MorphismError::CellMap { .. } => Some(3),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Morphism {
    source: Fort,
    target: Fort,
    /// One piece per source cell, canonical order.
    pieces: Vec<Piece>,
}

/// Counts of decisions per certification tier.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Validation {
    pub tiers: BTreeMap<Tier, usize>,
}

impl Validation {
    fn note(&mut self, t: Tier) {
        *self.tiers.entry(t).or_default() += 1;
    }
}

impl Morphism {
    /// Assemble from pieces, one per source cell in any order.
    pub fn new(source: Fort, target: Fort, mut pieces: Vec<Piece>) -> Result<Morphism, MorphismError> {
        if source.len() != target.len() {
            return Err(MorphismError::FortMismatch(format!(
                "source length {} but target length {}",
                source.len(),
                target.len()
            )));
        }
        let mut keyed = Vec::with_capacity(pieces.len());
        for p in pieces.drain(..) {
            let i = source.index_of(&p.source).filter(|_| p.source.len() == source.len());
            match i {
                Some(i) => keyed.push((i, p)),
                None => return Err(MorphismError::FortMismatch(format!("{} is not a source cell", p.source))),
            }
        }
        keyed.sort_by_key(|(i, _)| *i);
        let n = source.cell_count();
        for (expect, (i, _)) in keyed.iter().enumerate() {
            if *i != expect {
                return Err(MorphismError::MissingPiece(source.cell_at(source.len(), expect.min(*i))));
            }
        }
        if keyed.len() != n {
            return Err(MorphismError::MissingPiece(source.cell_at(source.len(), keyed.len())));
        }
        let pieces: Vec<Piece> = keyed.into_iter().map(|(_, p)| p).collect();
        for p in &pieces {
            if p.fns.len() != source.len() {
                return Err(MorphismError::Precellular {
                    cell: p.source.clone(),
                    coord: p.fns.len(),
                    detail: "wrong number of coordinate functions".into(),
                });
            }
            if !target.contains_cell(&p.target) {
                return Err(MorphismError::FortMismatch(format!("{} is not a target cell", p.target)));
            }
        }
        Ok(Morphism { source, target, pieces })
    }

    pub fn identity(f: &Fort) -> Morphism {
        let pieces = f
            .cells()
            .into_iter()
            .map(|c| {
                let fns = identity_fns(&c);
                Piece::new(c.clone(), c, fns)
            })
            .collect();
        Morphism { source: f.clone(), target: f.clone(), pieces }
    }

    pub fn source(&self) -> &Fort {
        &self.source
    }

    pub fn target(&self) -> &Fort {
        &self.target
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn piece(&self, c: &IntegerCell) -> Option<&Piece> {
        (c.len() == self.source.len()).then(|| self.source.index_of(c)).flatten().map(|i| &self.pieces[i])
    }

    /// Some piece over a prefix cell of the source.
    pub fn piece_over(&self, prefix: &IntegerCell) -> Option<&Piece> {
        let mut c = prefix.clone();
        while c.len() < self.source.len() {
            c = c.pushed(Entry::Interval(0));
        }
        self.piece(&c)
    }

    /// Target cell of every source cell.
    pub fn target_tags(&self) -> Vec<IntegerCell> {
        self.pieces.iter().map(|p| p.target.clone()).collect()
    }

    pub fn is_natural(&self) -> bool {
        self.pieces.iter().all(|p| p.is_natural())
    }

    /// Floating image of a global source point (not certified).
    pub fn eval_f64(&self, x: &[Q]) -> Option<Vec<f64>> {
        let c = self.source.containing_cell(&FortPoint::new(x.to_vec()))?;
        let p = self.piece(&c)?;
        let u: Vec<f64> = p.local_coords(x).iter().map(realalg::rational::to_f64).collect();
        Some(p.eval_f64(&u))
    }

    /// Check the three defining items; returns the tier counts on success.
    pub fn validate(&self) -> Result<Validation, MorphismError> {
        validate_morphism(self)
    }

    // ---- text form ------------------------------------------------------------

    pub fn to_text(&self) -> String {
        let mut s = format!("morphism(source={}, target={}, pieces=[", self.source.to_text(), self.target.to_text());
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let fns: Vec<String> = p.fns.iter().map(to_sexpr).collect();
            s.push_str(&format!("piece(cell={}, target={}, fns=[{}])", p.source, p.target, fns.join(" ")));
        }
        s.push_str("])");
        s
    }

    pub fn parse(src: &str) -> Result<Morphism, MorphismError> {
        let perr = |m: &str| MorphismError::Parse(m.to_string());
        let body = src.trim().strip_prefix("morphism(").and_then(|b| b.strip_suffix(')')).ok_or_else(|| perr("expected morphism(...)"))?;
        let body = body.trim().strip_prefix("source=").ok_or_else(|| perr("expected source="))?;
        let (src_txt, rest) = split_top(body).ok_or_else(|| perr("missing target"))?;
        let rest = rest.trim().strip_prefix("target=").ok_or_else(|| perr("expected target="))?;
        let (tgt_txt, rest) = split_top(rest).ok_or_else(|| perr("missing pieces"))?;
        let source = Fort::parse(src_txt)?;
        let target = Fort::parse(tgt_txt)?;
        let list = rest
            .trim()
            .strip_prefix("pieces=[")
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(|| perr("expected pieces=[...]"))?;
        let mut pieces = vec![];
        let mut rest = list.trim();
        while !rest.is_empty() {
            let (item, tail) = split_top(rest).unwrap_or((rest, ""));
            let item = item.trim().strip_prefix("piece(").and_then(|b| b.strip_suffix(')')).ok_or_else(|| perr("expected piece(...)"))?;
            let item = item.strip_prefix("cell=").ok_or_else(|| perr("expected cell="))?;
            let (cell, t) = split_top(item).ok_or_else(|| perr("missing target="))?;
            let t = t.trim().strip_prefix("target=").ok_or_else(|| perr("expected target="))?;
            let (tcell, f) = split_top(t).ok_or_else(|| perr("missing fns="))?;
            let f = f.trim().strip_prefix("fns=[").and_then(|b| b.strip_suffix(']')).ok_or_else(|| perr("expected fns=[...]"))?;
            let fns = parse_expr_list(f).map_err(|e| perr(&e.to_string()))?;
            let source_cell = IntegerCell::parse(cell)?;
            let target_cell = IntegerCell::parse(tcell)?;
            pieces.push(Piece::new(source_cell, target_cell, fns));
            rest = tail.trim();
        }
        Morphism::new(source, target, pieces)
    }
}

/// Split at the first comma outside all brackets.
fn split_top(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Global coordinates of a cell in terms of its local coordinates.
pub fn identity_fns(c: &IntegerCell) -> Vec<AlgFunc> {
    c.entries()
        .iter()
        .enumerate()
        .map(|(i, e)| match e {
            Entry::Interval(k) => AlgFunc::int(*k as i64).add(&AlgFunc::var(i)),
            Entry::Point(k) => AlgFunc::int(*k as i64),
        })
        .collect()
}

/// Local coordinates of a target cell as functions of the piece's outputs.
fn target_locals(target: &IntegerCell, fns: &[AlgFunc]) -> Vec<AlgFunc> {
    target
        .entries()
        .iter()
        .zip(fns)
        .map(|(e, f)| match e {
            Entry::Interval(k) => f.sub(&AlgFunc::int(*k as i64)),
            Entry::Point(_) => AlgFunc::zero(),
        })
        .collect()
}

// ---- validation ---------------------------------------------------------------

pub fn validate_morphism(m: &Morphism) -> Result<Validation, MorphismError> {
    let len = m.source.len();
    let mut report = Validation::default();
    // Item 2: triangular dependence and shared prefixes.
    let mut reps: HashMap<IntegerCell, usize> = HashMap::new();
    for (pi, p) in m.pieces.iter().enumerate() {
        for (i, f) in p.fns.iter().enumerate() {
            for j in i + 1..len {
                if f.depends_on(j) {
                    return Err(MorphismError::Precellular {
                        cell: p.source.clone(),
                        coord: i,
                        detail: format!("depends on x{}", j + 1),
                    });
                }
            }
            if !p.source.entries()[i].is_interval() && f.depends_on(i) {
                return Err(MorphismError::Precellular {
                    cell: p.source.clone(),
                    coord: i,
                    detail: "depends on a point coordinate".into(),
                });
            }
            if p.source.entries()[i].is_interval() && !p.target.entries()[i].is_interval() {
                return Err(MorphismError::CellMap {
                    cell: p.source.clone(),
                    coord: i,
                    detail: format!("an interval axis cannot land in the point {}", p.target.entries()[i]),
                });
            }
        }
        for k in 1..len {
            let pre = p.source.prefix(k);
            let r = *reps.entry(pre).or_insert(pi);
            if r == pi {
                continue;
            }
            let q = &m.pieces[r];
            if q.target.prefix(k) != p.target.prefix(k) {
                return Err(MorphismError::Precellular {
                    cell: p.source.clone(),
                    coord: k - 1,
                    detail: format!("shares a base with {} but lands over a different base cell", q.source),
                });
            }
            let bx = cell_box(&p.source);
            for i in 0..k {
                if decide_equal(&p.fns[i], &q.fns[i], &bx) != Equality::Equal {
                    return Err(MorphismError::Precellular {
                        cell: p.source.clone(),
                        coord: i,
                        detail: format!("base function differs from the one on {}", q.source),
                    });
                }
            }
        }
    }
    // One representative piece per prefix cell; coordinate i is checked on prefixes of length i+1.
    let prefix_rep = |c: &IntegerCell| -> &Piece {
        if c.len() == len {
            m.piece(c).expect("validated cell")
        } else {
            &m.pieces[reps[c]]
        }
    };
    for k in 1..=len {
        for c in m.source.prefix_cells(k) {
            let p = prefix_rep(&c);
            let i = k - 1;
            let bx = cell_box(&c);
            let f = &p.fns[i];
            let src_e = c.entries()[i];
            if src_e.is_interval() {
                let t = certify_positive(&f.deriv(i), &bx).map_err(|e| MorphismError::Precellular {
                    cell: p.source.clone(),
                    coord: i,
                    detail: format!("not increasing in its last variable: {e}"),
                })?;
                report.note(t);
            }
            let r = tight_range(f, &shrunk(&bx));
            if !r.is_finite() {
                return Err(MorphismError::CellMap { cell: p.source.clone(), coord: i, detail: "unbounded or undefined".into() });
            }
            let cell_err = |detail: String| MorphismError::CellMap { cell: p.source.clone(), coord: i, detail };
            match p.target.entries()[i] {
                Entry::Point(k) => {
                    if decide_equal(f, &AlgFunc::int(k as i64), &bx) != Equality::Equal {
                        return Err(cell_err(format!("not identically equal to {k}")));
                    }
                    report.note(Tier::Exact);
                }
                Entry::Interval(k) => {
                    let lo = AlgFunc::int(k as i64);
                    let hi = AlgFunc::int(k as i64 + 1);
                    let show = |e: SignFailure| format!("leaves ({},{}): {e}", k, k + 1);
                    if src_e.is_interval() {
                        let l = subst_one(f, i, &AlgFunc::zero());
                        let u = subst_one(f, i, &AlgFunc::one());
                        report.note(certify_nonneg(&l.sub(&lo), &bx).map_err(|e| cell_err(show(e)))?);
                        report.note(certify_nonneg(&hi.sub(&u), &bx).map_err(|e| cell_err(show(e)))?);
                    } else {
                        report.note(certify_positive(&f.sub(&lo), &bx).map_err(|e| cell_err(show(e)))?);
                        report.note(certify_positive(&hi.sub(f), &bx).map_err(|e| cell_err(show(e)))?);
                    }
                }
            }
        }
    }
    // Item 1: every column tiles the target column over its image, in order.
    for k in 0..len {
        for base in m.source.prefix_cells(k) {
            let tbase = if k == 0 { IntegerCell::default() } else { prefix_rep(&base).target.prefix(k) };
            let height = if k == 0 { m.target.width() } else { m.target.height_over(&tbase).expect("target base cell") };
            let h = if k == 0 { m.source.width() } else { m.source.height_over(&base).expect("source base cell") };
            let mut edge = AlgFunc::zero();
            for key in 1..=(2 * h as u64 - 1) {
                let c = base.pushed(Entry::from_key(key));
                let p = prefix_rep(&c);
                let f = &p.fns[k];
                let bx = cell_box(&c);
                let (start, end) = if c.last().is_interval() {
                    (subst_one(f, k, &AlgFunc::zero()), subst_one(f, k, &AlgFunc::one()))
                } else {
                    (f.clone(), f.clone())
                };
                match decide_equal(&start, &edge, &bx) {
                    Equality::Equal => {}
                    Equality::Different => {
                        return Err(MorphismError::Surjectivity {
                            cell: c.clone(),
                            detail: "image does not continue where the previous cell ended".into(),
                        })
                    }
                    Equality::Undecided => {
                        return Err(MorphismError::Surjectivity {
                            cell: c.clone(),
                            detail: "could not decide endpoint matching exactly".into(),
                        })
                    }
                }
                edge = end;
            }
            let top = AlgFunc::int(height as i64);
            let c = base.pushed(Entry::Interval(h - 1));
            if decide_equal(&edge, &top, &cell_box(&c)) != Equality::Equal {
                return Err(MorphismError::Surjectivity {
                    cell: c,
                    detail: format!("column image stops short of the target height {height}"),
                });
            }
            report.note(Tier::Exact);
        }
    }
    Ok(report)
}

fn shrunk(bx: &[Interval]) -> Vec<Interval> {
    bx.iter()
        .map(|b| if b.is_point() { *b } else { Interval::new(b.lo + SHRINK, b.hi - SHRINK) })
        .collect()
}

// ---- calculus -------------------------------------------------------------------

/// `g ∘ f`.
pub fn compose(g: &Morphism, f: &Morphism) -> Result<Morphism, MorphismError> {
    if f.target != g.source {
        return Err(MorphismError::FortMismatch("target of the inner map is not the source of the outer".into()));
    }
    let pieces = f
        .pieces
        .iter()
        .map(|p| {
            let q = g.piece(&p.target).expect("target cell has a piece");
            let locals = target_locals(&p.target, &p.fns);
            let fns = q.fns.iter().map(|h| h.subst(&locals)).collect();
            Piece::new(p.source.clone(), q.target.clone(), fns)
        })
        .collect();
    Ok(Morphism { source: f.source.clone(), target: g.target.clone(), pieces })
}

/// The induced morphism between `i`-th projections.
pub fn base_morphism(m: &Morphism, i: usize) -> Result<Morphism, MorphismError> {
    if i == 0 || i > m.len() {
        return Err(FortError::Range { index: i, len: m.len() }.into());
    }
    if i == m.len() {
        return Ok(m.clone());
    }
    let source = m.source.project(i)?;
    let target = m.target.project(i)?;
    let pieces = source
        .cells()
        .into_iter()
        .map(|c| {
            let p = m.piece_over(&c).expect("prefix has a piece");
            Piece::new(c, p.target.prefix(i), p.fns[..i].to_vec())
        })
        .collect();
    Ok(Morphism { source, target, pieces })
}

/// Restriction to the fiber over a rational point of `pi_i(source)`.
pub fn fiber_morphism(m: &Morphism, x: &FortPoint) -> Result<Morphism, MorphismError> {
    let i = x.coords.len();
    if i == 0 || i >= m.len() {
        return Err(FortError::Range { index: i, len: m.len() }.into());
    }
    let base = m.source.containing_cell(x).ok_or(FortError::Empty)?;
    let source = m.source.fiber(&base)?;
    let u = local_coords(&base, &x.coords);
    let tbase = m.piece_over(&base).expect("base piece").target.prefix(i);
    let target = m.target.fiber(&tbase)?;
    let total = m.len();
    let pieces = source
        .cells()
        .into_iter()
        .map(|c| {
            let p = m.piece(&base.concat(&c)).expect("fiber cell");
            let fns = p.fns[i..].iter().map(|f| fix_prefix(f, &u, total)).collect();
            Piece::new(c, p.target.suffix(i), fns)
        })
        .collect();
    Ok(Morphism { source, target, pieces })
}

/// `dF -> F`, `x -> x/d`.
pub fn linear_subdivision(f: &Fort, d: u32) -> Result<Morphism, MorphismError> {
    let source = f.subdivide_set(d)?;
    let dq = AlgFunc::int(d as i64);
    let pieces = source
        .cells()
        .into_iter()
        .map(|c| {
            let target = IntegerCell(c.entries().iter().map(|e| e.coarsen(d)).collect());
            let fns = identity_fns(&c).into_iter().map(|g| g.div(&dq)).collect();
            Piece::new(c, target, fns)
        })
        .collect();
    Ok(Morphism { source, target: f.clone(), pieces })
}

/// One level of a target cell description, in global lower coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Level {
    Point(AlgFunc),
    Band(AlgFunc, AlgFunc),
}

impl Level {
    pub fn is_band(&self) -> bool {
        matches!(self, Level::Band(..))
    }
}

/// A cell of `R^l` built from graphs and bands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellDescription {
    pub levels: Vec<Level>,
}

impl CellDescription {
    pub fn new(levels: Vec<Level>) -> Self {
        CellDescription { levels }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn prefix(&self, k: usize) -> CellDescription {
        CellDescription { levels: self.levels[..k].to_vec() }
    }

    /// Axis kinds: a point level is `{0}`, a band `(0,1)`.
    pub fn kinds(&self) -> IntegerCell {
        IntegerCell(self.levels.iter().map(|l| if l.is_band() { Entry::Interval(0) } else { Entry::Point(0) }).collect())
    }

    /// Global coordinates as functions of the local coordinates of a basic cell.
    pub fn natural_fns(&self) -> Vec<AlgFunc> {
        let mut ys: Vec<AlgFunc> = vec![];
        for (i, l) in self.levels.iter().enumerate() {
            let y = match l {
                Level::Point(p) => p.subst(&ys),
                Level::Band(a, b) => {
                    let u = AlgFunc::var(i);
                    let a = a.subst(&ys);
                    let b = b.subst(&ys);
                    a.add(&u.mul(&b.sub(&a)))
                }
            };
            ys.push(y);
        }
        ys
    }
}

/// The natural map from an integer cell onto a described cell.
pub fn natural_cell_map(src: &IntegerCell, tgt: &CellDescription, target: IntegerCell) -> Result<Piece, MorphismError> {
    if !src.same_type(&tgt.kinds()) {
        return Err(MorphismError::TypeMismatch(src.clone(), tgt.kinds()));
    }
    Ok(Piece::new(src.clone(), target, tgt.natural_fns()))
}

/// Integer cell containing a described cell, read off its midpoint image.
pub fn locate_description(tgt: &CellDescription) -> Option<IntegerCell> {
    let fns = tgt.natural_fns();
    let mid: Vec<AlgFunc> = tgt
        .levels
        .iter()
        .map(|l| if l.is_band() { AlgFunc::rat(Q::new(1.into(), 2.into())) } else { AlgFunc::zero() })
        .collect();
    let mut out = IntegerCell::default();
    for f in &fns {
        let v = f.subst(&mid);
        let e = if let Some(q) = crate::certify::as_exact_rational(&v) {
            Entry::containing(&q)?
        } else {
            let r = v.enclosure();
            let k = r.lo.floor();
            if !(r.lo > k && r.hi < k + 1.0 && k >= 0.0) {
                return None;
            }
            Entry::Interval(k as u32)
        };
        out.0.push(e);
    }
    Some(out)
}

/// Source cells on which the two maps land in different target cells.
pub fn equivalence_witness(a: &Morphism, b: &Morphism) -> Result<Option<IntegerCell>, MorphismError> {
    if a.source != b.source || a.target != b.target {
        return Err(MorphismError::FortMismatch("morphisms have different source or target".into()));
    }
    Ok(a.pieces.iter().zip(&b.pieces).find(|(p, q)| p.target != q.target).map(|(p, _)| p.source.clone()))
}

pub fn combinatorially_equivalent(a: &Morphism, b: &Morphism) -> Result<bool, MorphismError> {
    Ok(equivalence_witness(a, b)?.is_none())
}

/// `F' = m^-1(sub)` and the restriction of `m` to it.
pub fn inverse_image(m: &Morphism, sub: &Fort) -> Result<(Fort, Morphism), MorphismError> {
    if sub.len() != m.target.len() {
        return Err(MorphismError::NotSubfort("length differs".into()));
    }
    if let Some(c) = sub.cells().into_iter().find(|c| !m.target.contains_cell(c)) {
        return Err(MorphismError::NotSubfort(format!("{c} is not a target cell")));
    }
    let pieces: Vec<Piece> = m.pieces.iter().filter(|p| sub.contains_cell(&p.target)).cloned().collect();
    let cells: Vec<IntegerCell> = pieces.iter().map(|p| p.source.clone()).collect();
    let f = validate_fort(&cells)?;
    let r = Morphism::new(f.clone(), sub.clone(), pieces)?;
    Ok((f, r))
}

/// Pull an extension of the target back along `m`, extending `m` by the identity.
pub fn pullback(m: &Morphism, ext: &Fort) -> Result<(Fort, Morphism), MorphismError> {
    let k = m.len();
    if ext.len() <= k || ext.project(k)? != m.target {
        return Err(MorphismError::FortMismatch("extension does not lie over the target".into()));
    }
    let tag = |p: &IntegerCell| m.piece(&p.prefix(k)).expect("base cell").target.clone();
    let f = Fort::build(ext.len(), |p| {
        if p.len() < k {
            if p.is_empty() {
                m.source.width()
            } else {
                m.source.height_over(p).expect("source prefix")
            }
        } else {
            ext.height_over(&tag(p).concat(&p.suffix(k))).expect("extension cell")
        }
    })?;
    let pieces = f
        .cells()
        .into_iter()
        .map(|c| {
            let p = m.piece(&c.prefix(k)).expect("base piece");
            let mut fns = p.fns.clone();
            fns.extend(identity_fns(&c).into_iter().skip(k));
            Piece::new(c.clone(), p.target.concat(&c.suffix(k)), fns)
        })
        .collect();
    let mm = Morphism::new(f.clone(), ext.clone(), pieces)?;
    Ok((f, mm))
}

/// One block of a tower.
#[derive(Clone, Debug)]
pub enum TowerBlock {
    /// A fort whose first axis is `(0,m)`, with pieces into the common target.
    Interval { fort: Fort, pieces: Vec<Piece> },
    /// A block of first-axis width zero: pieces on cells `{0} x C'` of `{0} x fiber`.
    Point { fiber: Option<Fort>, pieces: Vec<Piece> },
}

/// Glue blocks `I, P, I, ..., I` side by side along the first axis.
pub fn tower(target: &Fort, blocks: Vec<TowerBlock>) -> Result<(Fort, Morphism), MorphismError> {
    if blocks.is_empty() || blocks.len().is_multiple_of(2) {
        return Err(MorphismError::Order("need an odd number of alternating blocks".into()));
    }
    let len = target.len();
    let mut n = 0u32;
    let mut children: Vec<Fort> = vec![];
    let mut pieces = vec![];
    for (bi, b) in blocks.into_iter().enumerate() {
        match (bi % 2, b) {
            (0, TowerBlock::Interval { fort, pieces: ps }) => {
                if fort.len() != len {
                    return Err(MorphismError::Order(format!("block {bi} has the wrong length")));
                }
                if len > 1 {
                    children.extend(fort.to_width_form().children());
                }
                for mut p in ps {
                    shift_first(&mut p.source, n);
                    pieces.push(p);
                }
                n += fort.width();
            }
            (1, TowerBlock::Point { fiber, pieces: ps }) => {
                match (&fiber, len) {
                    (None, 1) => {}
                    (Some(f), l) if f.len() + 1 == l => children.push(f.clone()),
                    _ => return Err(MorphismError::Order(format!("point block {bi} has the wrong fiber"))),
                }
                for mut p in ps {
                    shift_first(&mut p.source, n);
                    pieces.push(p);
                }
            }
            _ => return Err(MorphismError::Order(format!("block {bi} has the wrong kind"))),
        }
    }
    let f = WidthForm::new(n, &children)?.to_height_form()?;
    let m = Morphism::new(f.clone(), target.clone(), pieces)?;
    Ok((f, m))
}

fn shift_first(c: &mut IntegerCell, by: u32) {
    c.0[0] = match c.0[0] {
        Entry::Point(k) => Entry::Point(k + by),
        Entry::Interval(k) => Entry::Interval(k + by),
    };
}

/// Offsets of the interval blocks of a tower: partial sums of their widths.
pub fn tower_offsets(widths: &[u32]) -> Vec<u32> {
    let mut acc = 0;
    widths
        .iter()
        .map(|w| {
            let o = acc;
            acc += w;
            o
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use realalg::parse_expr;
    use realalg::rational::q;

    fn e(s: &str) -> AlgFunc {
        parse_expr(s).unwrap()
    }

    fn cell(s: &str) -> IntegerCell {
        IntegerCell::parse(s).unwrap()
    }

    /// phi: (0,3) -> (0,2), x/2 on (0,2], x-1 on (2,3), in local coordinates.
    pub(crate) fn halving_pair() -> (Morphism, Morphism) {
        let s = Fort::interval(3).unwrap();
        let t = Fort::interval(2).unwrap();
        let phi = vec![
            Piece::new(cell("(0,1)"), cell("(0,1)"), vec![e("(mul 1/2 x1)")]),
            Piece::new(cell("{1}"), cell("(0,1)"), vec![e("1/2")]),
            Piece::new(cell("(1,2)"), cell("(0,1)"), vec![e("(affine 1/2 1/2 x1)")]),
            Piece::new(cell("{2}"), cell("{1}"), vec![e("1")]),
            Piece::new(cell("(2,3)"), cell("(1,2)"), vec![e("(add x1 1)")]),
        ];
        let psi = vec![
            Piece::new(cell("(0,1)"), cell("(0,1)"), vec![e("x1")]),
            Piece::new(cell("{1}"), cell("{1}"), vec![e("1")]),
            Piece::new(cell("(1,2)"), cell("(1,2)"), vec![e("(affine 1 1/2 x1)")]),
            Piece::new(cell("{2}"), cell("(1,2)"), vec![e("3/2")]),
            Piece::new(cell("(2,3)"), cell("(1,2)"), vec![e("(affine 3/2 1/2 x1)")]),
        ];
        (Morphism::new(s.clone(), t.clone(), phi).unwrap(), Morphism::new(s, t, psi).unwrap())
    }

    #[test]
    fn halving_pair_is_valid_and_inequivalent() {
        let (phi, psi) = halving_pair();
        phi.validate().unwrap();
        psi.validate().unwrap();
        assert_eq!(equivalence_witness(&phi, &psi).unwrap(), Some(cell("{1}")));
    }

    #[test]
    fn missing_piece_is_reported() {
        let (phi, _) = halving_pair();
        let ps: Vec<Piece> = phi.pieces().iter().filter(|p| p.source != cell("{2}")).cloned().collect();
        let err = Morphism::new(phi.source().clone(), phi.target().clone(), ps).unwrap_err();
        assert_eq!(err.item(), Some(1));
    }

    #[test]
    fn gap_in_image_is_not_surjective() {
        let (phi, _) = halving_pair();
        let mut ps = phi.pieces().to_vec();
        ps[4].fns = vec![e("(affine 1 1/2 x1)")];
        let m = Morphism::new(phi.source().clone(), phi.target().clone(), ps).unwrap();
        assert_eq!(m.validate().unwrap_err().item(), Some(1));
    }

    #[test]
    fn subdivision_pieces() {
        let m = linear_subdivision(&Fort::interval(1).unwrap(), 3).unwrap();
        assert_eq!(m.pieces().len(), 5);
        m.validate().unwrap();
        for p in m.pieces() {
            if p.source.last().is_interval() {
                assert_eq!(p.fns[0].deriv(0).canonical().as_rational(), Some(&q(1, 3)));
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let (phi, _) = halving_pair();
        let t = phi.to_text();
        assert_eq!(Morphism::parse(&t).unwrap(), phi);
    }
}
