//! Forts and integer cells.
//!
//! A fort is stored in height form: the width `n` of the first axis followed by,
//! for each prefix length, the column heights over every prefix cell in canonical
//! order. Cells of a prefix fort are ordered lexicographically by the per-axis key
//! `2k + type`, which is also the order in which heights are stored.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, Zero};
use realalg::rational::fmt_q;
use realalg::Q;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Hard cap on the number of cells of a constructed fort.
pub const DEFAULT_CELL_CAP: usize = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Entry {
    /// The integer point `{k}`.
    Point(u32),
    /// The open interval `(k, k+1)`.
    Interval(u32),
}

impl Entry {
    /// Ordering key along one axis: `{k}` is `2k`, `(k,k+1)` is `2k+1`.
    pub fn key(self) -> u64 {
        match self {
            Entry::Point(k) => 2 * k as u64,
            Entry::Interval(k) => 2 * k as u64 + 1,
        }
    }

    pub fn from_key(key: u64) -> Entry {
        let k = (key / 2) as u32;
        if key.is_multiple_of(2) {
            Entry::Point(k)
        } else {
            Entry::Interval(k)
        }
    }

    pub fn anchor(self) -> u32 {
        match self {
            Entry::Point(k) | Entry::Interval(k) => k,
        }
    }

    pub fn is_interval(self) -> bool {
        matches!(self, Entry::Interval(_))
    }

    /// 0 for a point, 1 for an interval.
    pub fn kind(self) -> u8 {
        u8::from(self.is_interval())
    }

    pub fn contains(self, x: &Q) -> bool {
        let k = Q::from_integer(self.anchor().into());
        match self {
            Entry::Point(_) => *x == k,
            Entry::Interval(_) => *x > k && *x < k + Q::one(),
        }
    }

    /// The entry containing `x`, if `x >= 0`.
    pub fn containing(x: &Q) -> Option<Entry> {
        if *x < Q::zero() {
            return None;
        }
        let fl = x.floor().to_integer();
        let k: u32 = fl.try_into().ok()?;
        Some(if x.is_integer() { Entry::Point(k) } else { Entry::Interval(k) })
    }

    /// Exact midpoint sample of the entry.
    pub fn sample(self) -> Q {
        let k = Q::from_integer(self.anchor().into());
        match self {
            Entry::Point(_) => k,
            Entry::Interval(_) => k + Q::new(1.into(), 2.into()),
        }
    }

    /// The entry of the coarse axis containing this entry of the `d`-fold subdivided axis.
    pub fn coarsen(self, d: u32) -> Entry {
        match self {
            Entry::Point(k) if k % d == 0 => Entry::Point(k / d),
            Entry::Point(k) | Entry::Interval(k) => Entry::Interval(k / d),
        }
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.key().cmp(&o.key())
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Point(k) => write!(f, "{{{k}}}"),
            Entry::Interval(k) => write!(f, "({},{})", k, k + 1),
        }
    }
}

/// Product of integer points and unit intervals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct IntegerCell(pub SmallVec<[Entry; 3]>);

impl IntegerCell {
    pub fn new(entries: &[Entry]) -> Self {
        IntegerCell(entries.iter().copied().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.0
    }

    pub fn last(&self) -> Entry {
        *self.0.last().expect("nonempty cell")
    }

    pub fn type_vec(&self) -> Vec<u8> {
        self.0.iter().map(|e| e.kind()).collect()
    }

    /// Number of interval factors.
    pub fn dim(&self) -> usize {
        self.0.iter().filter(|e| e.is_interval()).count()
    }

    pub fn prefix(&self, i: usize) -> IntegerCell {
        IntegerCell(self.0[..i].iter().copied().collect())
    }

    pub fn suffix(&self, i: usize) -> IntegerCell {
        IntegerCell(self.0[i..].iter().copied().collect())
    }

    pub fn pushed(&self, e: Entry) -> IntegerCell {
        let mut c = self.clone();
        c.0.push(e);
        c
    }

    pub fn concat(&self, o: &IntegerCell) -> IntegerCell {
        let mut c = self.clone();
        c.0.extend(o.0.iter().copied());
        c
    }

    pub fn contains(&self, p: &[Q]) -> bool {
        p.len() == self.len() && self.0.iter().zip(p).all(|(e, x)| e.contains(x))
    }

    /// Midpoint sample: anchors, plus one half on interval axes.
    pub fn sample(&self) -> Vec<Q> {
        self.0.iter().map(|e| e.sample()).collect()
    }

    /// Point of the cell with local coordinates `t` (ignored on point axes).
    pub fn point_at(&self, t: &[Q]) -> Vec<Q> {
        self.0
            .iter()
            .zip(t)
            .map(|(e, u)| {
                let k = Q::from_integer(e.anchor().into());
                if e.is_interval() {
                    k + u
                } else {
                    k
                }
            })
            .collect()
    }

    pub fn anchors(&self) -> Vec<u32> {
        self.0.iter().map(|e| e.anchor()).collect()
    }

    pub fn same_type(&self, o: &IntegerCell) -> bool {
        self.len() == o.len() && self.0.iter().zip(o.0.iter()).all(|(a, b)| a.kind() == b.kind())
    }
}

impl IntegerCell {
    /// Parse `(0,1)x{1}`.
    pub fn parse(src: &str) -> Result<IntegerCell, FortError> {
        let err = |pos: usize, msg: &str| FortError::Parse { pos, msg: msg.to_string() };
        let s = src.trim();
        let mut out = IntegerCell::default();
        let mut i = 0;
        let b = s.as_bytes();
        while i < b.len() {
            if !out.0.is_empty() {
                if b[i] != b'x' {
                    return Err(err(i, "expected 'x' between entries"));
                }
                i += 1;
            }
            let close = match b.get(i) {
                Some(b'{') => b'}',
                Some(b'(') => b')',
                _ => return Err(err(i, "expected '{' or '('")),
            };
            let end = s[i..].find(close as char).ok_or_else(|| err(i, "unclosed entry"))? + i;
            let inner = &s[i + 1..end];
            let e = if close == b'}' {
                Entry::Point(inner.trim().parse().map_err(|_| err(i, "bad integer"))?)
            } else {
                let (a, c) = inner.split_once(',').ok_or_else(|| err(i, "expected (k,k+1)"))?;
                let a: u32 = a.trim().parse().map_err(|_| err(i, "bad integer"))?;
                let c: u32 = c.trim().parse().map_err(|_| err(i, "bad integer"))?;
                if c != a + 1 {
                    return Err(err(i, "interval entries have unit length"));
                }
                Entry::Interval(a)
            };
            out.0.push(e);
            i = end + 1;
        }
        if out.0.is_empty() {
            return Err(err(0, "empty cell"));
        }
        Ok(out)
    }
}

impl fmt::Display for IntegerCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for IntegerCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Rational point, used for fiber and containment queries.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FortPoint {
    pub coords: Vec<Q>,
}

impl FortPoint {
    pub fn new(coords: Vec<Q>) -> Self {
        FortPoint { coords }
    }
}

impl fmt::Display for FortPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(fmt_q).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FortError {
    #[error("a fort needs positive widths and heights")]
    NonPositive,
    #[error("height map has {got} entries, base fort has {want} cells")]
    HeightCount { got: usize, want: usize },
    #[error("height map key {0} is not a cell of the base fort")]
    ForeignKey(IntegerCell),
    #[error("fort would have {cells} cells, above the cap of {cap}")]
    TooLarge { cells: usize, cap: usize },
    #[error("index {index} out of range for a fort of length {len}")]
    Range { index: usize, len: usize },
    #[error("{0} is not a cell of the projected fort")]
    NotABaseCell(IntegerCell),
    #[error("empty cell set")]
    Empty,
    #[error("cells of different lengths: {0} and {1}")]
    LengthMismatch(IntegerCell, IntegerCell),
    #[error("cell {0} listed twice")]
    Duplicate(IntegerCell),
    #[error("column over {base} does not start at (0,1): first entry {first}")]
    ColumnStart { base: IntegerCell, first: Entry },
    #[error("column over {base} has a gap before {at}")]
    ColumnGap { base: IntegerCell, at: Entry },
    #[error("column over {base} ends at a point {at}")]
    ColumnEnd { base: IntegerCell, at: Entry },
    #[error("base cell {0} has no column above it")]
    MissingColumn(IntegerCell),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Inline storage covers forts of a few dozen cells.
type Heights = SmallVec<[u32; 32]>;

/// A fort in height form.
#[derive(Clone)]
pub struct Fort {
    /// `n`, then heights per prefix length.
    data: Heights,
    /// Start of each level in `data`, plus the end.
    starts: SmallVec<[u32; 5]>,
    offsets: OnceLock<Vec<Vec<u32>>>,
}

impl PartialEq for Fort {
    fn eq(&self, o: &Self) -> bool {
        self.data == o.data && self.starts == o.starts
    }
}
impl Eq for Fort {}

impl std::hash::Hash for Fort {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.data.hash(h);
        self.starts.hash(h);
    }
}

impl PartialOrd for Fort {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Fort {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (self.len(), &self.data).cmp(&(o.len(), &o.data))
    }
}

impl fmt::Debug for Fort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl fmt::Display for Fort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn column_size(h: u32) -> u64 {
    2 * h as u64 - 1
}

impl Fort {
    /// The interval `(0, n)`.
    pub fn interval(n: u32) -> Result<Fort, FortError> {
        if n == 0 {
            return Err(FortError::NonPositive);
        }
        Ok(Fort::from_parts(SmallVec::from_slice(&[n]), SmallVec::from_slice(&[0, 1])))
    }

    fn from_parts(data: impl Into<Heights>, starts: SmallVec<[u32; 5]>) -> Fort {
        Fort { data: data.into(), starts, offsets: OnceLock::new() }
    }

    /// `(0,1)^len`.
    pub fn unit(len: usize) -> Fort {
        let mut f = Fort::interval(1).unwrap();
        for _ in 1..len {
            f = f.extend_vec(vec![1]).unwrap();
        }
        f
    }

    /// Build from the flat encoding: `n` followed by all height levels.
    pub fn from_flat(len: usize, data: &[u32]) -> Result<Fort, FortError> {
        if len == 0 || data.is_empty() || data.contains(&0) {
            return Err(FortError::NonPositive);
        }
        let mut starts: SmallVec<[u32; 5]> = SmallVec::new();
        starts.push(0);
        let mut pos = 0usize;
        let mut count = 1usize;
        for _ in 0..len {
            let end = pos + count;
            if end > data.len() {
                return Err(FortError::HeightCount { got: data.len() - pos, want: count });
            }
            let next: u64 = data[pos..end].iter().map(|&h| column_size(h)).sum();
            if next as usize > DEFAULT_CELL_CAP {
                return Err(FortError::TooLarge { cells: next as usize, cap: DEFAULT_CELL_CAP });
            }
            pos = end;
            starts.push(pos as u32);
            count = next as usize;
        }
        if pos != data.len() {
            return Err(FortError::HeightCount { got: data.len(), want: pos });
        }
        Ok(Fort::from_parts(SmallVec::from_slice(data), starts))
    }

    /// Flat encoding (inverse of [`Fort::from_flat`]).
    pub fn flat(&self) -> &[u32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Width of the first axis.
    pub fn width(&self) -> u32 {
        self.data[0]
    }

    /// Heights over the cells of the prefix fort of length `i` (level 0 is `[n]`).
    pub fn level(&self, i: usize) -> &[u32] {
        &self.data[self.starts[i] as usize..self.starts[i + 1] as usize]
    }

    fn offsets(&self) -> &Vec<Vec<u32>> {
        self.offsets.get_or_init(|| {
            (0..self.len())
                .map(|i| {
                    let mut acc = 0u32;
                    let mut v = Vec::with_capacity(self.level(i).len() + 1);
                    v.push(0);
                    for &h in self.level(i) {
                        acc += 2 * h - 1;
                        v.push(acc);
                    }
                    v
                })
                .collect()
        })
    }

    /// Number of cells of the prefix fort of length `k`.
    pub fn prefix_count(&self, k: usize) -> usize {
        if k == 0 {
            1
        } else if k < self.len() {
            self.level(k).len()
        } else {
            self.level(k - 1).iter().map(|&h| column_size(h) as usize).sum()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.prefix_count(self.len())
    }

    /// Position of a prefix cell (of any length up to `len`) in canonical order.
    pub fn index_of(&self, c: &IntegerCell) -> Option<usize> {
        if c.len() > self.len() {
            return None;
        }
        let mut idx = 0usize;
        for (i, e) in c.entries().iter().enumerate() {
            let h = self.level(i)[idx];
            let key = e.key();
            if key == 0 || key > column_size(h) {
                return None;
            }
            idx = if i == 0 { 0 } else { self.offsets()[i][idx] as usize } + key as usize - 1;
        }
        Some(idx)
    }

    pub fn contains_cell(&self, c: &IntegerCell) -> bool {
        c.len() == self.len() && self.index_of(c).is_some()
    }

    /// Column height over a cell of the prefix fort of length `c.len()`.
    pub fn height_over(&self, c: &IntegerCell) -> Option<u32> {
        if c.len() >= self.len() {
            return None;
        }
        let i = self.index_of(c)?;
        Some(self.level(c.len())[i])
    }

    /// The cell at position `idx` among the cells of the prefix fort of length `k`.
    pub fn cell_at(&self, k: usize, mut idx: usize) -> IntegerCell {
        let mut rev: SmallVec<[Entry; 3]> = SmallVec::new();
        for i in (0..k).rev() {
            let (parent, key) = if i == 0 {
                (0, idx + 1)
            } else {
                let off = &self.offsets()[i];
                let p = off.partition_point(|&o| o as usize <= idx) - 1;
                (p, idx - off[p] as usize + 1)
            };
            rev.push(Entry::from_key(key as u64));
            idx = parent;
        }
        rev.reverse();
        IntegerCell(rev)
    }

    /// Cells of the prefix fort of length `k`, canonical order.
    pub fn prefix_cells(&self, k: usize) -> Vec<IntegerCell> {
        let mut cur = vec![IntegerCell::default()];
        for i in 0..k {
            let hs = self.level(i);
            let mut next = Vec::with_capacity(hs.iter().map(|&h| column_size(h) as usize).sum());
            for (c, &h) in cur.iter().zip(hs) {
                for key in 1..=column_size(h) {
                    next.push(c.pushed(Entry::from_key(key)));
                }
            }
            cur = next;
        }
        cur
    }

    /// All cells, canonical order.
    pub fn cells(&self) -> Vec<IntegerCell> {
        self.prefix_cells(self.len())
    }

    /// Cells of the fort lying over a cell of a projection.
    pub fn cells_over(&self, base: &IntegerCell) -> Vec<IntegerCell> {
        match self.fiber(base) {
            Ok(fib) => fib.cells().into_iter().map(|c| base.concat(&c)).collect(),
            Err(_) => vec![],
        }
    }

    /// Extend by heights given in the canonical order of `self`'s cells.
    pub fn extend_vec(&self, heights: Vec<u32>) -> Result<Fort, FortError> {
        self.extend_capped(heights, DEFAULT_CELL_CAP)
    }

    pub fn extend_capped(&self, heights: Vec<u32>, cap: usize) -> Result<Fort, FortError> {
        let want = self.cell_count();
        if heights.len() != want {
            return Err(FortError::HeightCount { got: heights.len(), want });
        }
        if heights.contains(&0) {
            return Err(FortError::NonPositive);
        }
        let cells: u64 = heights.iter().map(|&h| column_size(h)).sum();
        if cells as usize > cap {
            return Err(FortError::TooLarge { cells: cells as usize, cap });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&heights);
        let mut starts = self.starts.clone();
        starts.push(data.len() as u32);
        Ok(Fort::from_parts(data, starts))
    }

    /// Extend by a height map keyed exactly on `self`'s cells.
    pub fn extend(&self, heights: &BTreeMap<IntegerCell, u32>) -> Result<Fort, FortError> {
        let cells = self.cells();
        if heights.len() != cells.len() {
            return Err(FortError::HeightCount { got: heights.len(), want: cells.len() });
        }
        let mut v = Vec::with_capacity(cells.len());
        for c in &cells {
            v.push(*heights.get(c).ok_or_else(|| FortError::ForeignKey(c.clone()))?);
        }
        if let Some(k) = heights.keys().find(|k| !self.contains_cell(k)) {
            return Err(FortError::ForeignKey(k.clone()));
        }
        self.extend_vec(v)
    }

    /// Build a fort of length `len` from a height function on prefix cells.
    pub fn build(len: usize, mut height: impl FnMut(&IntegerCell) -> u32) -> Result<Fort, FortError> {
        let mut cur = vec![IntegerCell::default()];
        let mut data = Vec::new();
        let mut starts: SmallVec<[u32; 5]> = SmallVec::new();
        starts.push(0);
        for i in 0..len {
            let hs: Vec<u32> = cur.iter().map(&mut height).collect();
            if hs.contains(&0) {
                return Err(FortError::NonPositive);
            }
            let total: u64 = hs.iter().map(|&h| column_size(h)).sum();
            if total as usize > DEFAULT_CELL_CAP {
                return Err(FortError::TooLarge { cells: total as usize, cap: DEFAULT_CELL_CAP });
            }
            if i + 1 < len {
                let mut next = Vec::with_capacity(total as usize);
                for (c, &h) in cur.iter().zip(&hs) {
                    for key in 1..=column_size(h) {
                        next.push(c.pushed(Entry::from_key(key)));
                    }
                }
                cur = next;
            }
            data.extend_from_slice(&hs);
            starts.push(data.len() as u32);
        }
        Ok(Fort::from_parts(data, starts))
    }

    /// `pi_i(F)`, for `1 <= i <= len`.
    pub fn project(&self, i: usize) -> Result<Fort, FortError> {
        if i == 0 || i > self.len() {
            return Err(FortError::Range { index: i, len: self.len() });
        }
        let end = self.starts[i] as usize;
        Ok(Fort::from_parts(SmallVec::from_slice(&self.data[..end]), self.starts[..=i].iter().copied().collect()))
    }

    /// The fort `F(C)` over a cell `C` of `pi_i(F)`, `i < len`.
    pub fn fiber(&self, c: &IntegerCell) -> Result<Fort, FortError> {
        let i = c.len();
        if i == 0 {
            return Ok(self.clone());
        }
        if i >= self.len() || self.index_of(c).is_none() {
            return Err(FortError::NotABaseCell(c.clone()));
        }
        Fort::build(self.len() - i, |p| self.height_over(&c.concat(p)).expect("fiber cell"))
    }

    /// Fiber over a rational point of a projection.
    pub fn fiber_at(&self, x: &FortPoint) -> Result<Fort, FortError> {
        let c = containing_cell_prefix(&x.coords).ok_or(FortError::Empty)?;
        self.fiber(&c)
    }

    /// Cell containing a rational point, if the point lies in the fort.
    pub fn containing_cell(&self, p: &FortPoint) -> Option<IntegerCell> {
        let c = containing_cell_prefix(&p.coords)?;
        (c.len() <= self.len() && self.index_of(&c).is_some()).then_some(c)
    }

    /// `dF = {d x : x in F}`.
    pub fn subdivide_set(&self, d: u32) -> Result<Fort, FortError> {
        if d == 0 {
            return Err(FortError::NonPositive);
        }
        if d == 1 {
            return Ok(self.clone());
        }
        Fort::build(self.len(), |p| {
            let coarse = IntegerCell(p.entries().iter().map(|e| e.coarsen(d)).collect());
            let h = if p.is_empty() { self.width() } else { self.height_over(&coarse).expect("coarse cell") };
            d * h
        })
    }

    /// Fort over the same base with the column heights replaced.
    pub fn with_top_heights(&self, heights: Vec<u32>) -> Result<Fort, FortError> {
        self.project(self.len() - 1)?.extend_vec(heights)
    }

    // ---- width form ---------------------------------------------------------

    pub fn to_width_form(&self) -> WidthForm {
        let n = self.width();
        let len = self.len();
        if len == 1 {
            return WidthForm { n, depth: 0, data: vec![], bounds: vec![] };
        }
        // Children occupy consecutive runs of every level; walk them with one cursor per level.
        let kids = column_size(n) as usize;
        let levels: SmallVec<[&[u32]; 5]> = (0..len).map(|i| self.level(i)).collect();
        let mut data = Vec::with_capacity(self.data.len() - 1);
        let mut bounds = Vec::with_capacity(kids * len);
        let mut cursor: SmallVec<[usize; 5]> = SmallVec::from_elem(0, len);
        for _ in 0..kids {
            let mut count = 1usize;
            for i in 1..len {
                let start = cursor[i];
                let run = &levels[i][start..start + count];
                cursor[i] = start + count;
                bounds.push(data.len() as u32);
                data.extend_from_slice(run);
                if i + 1 < len {
                    count = run.iter().map(|&h| column_size(h) as usize).sum();
                }
            }
            bounds.push(data.len() as u32);
        }
        WidthForm { n, depth: len - 1, data, bounds }
    }

    // ---- text and JSON --------------------------------------------------------

    /// `interval(n)` or `fort(base=..., heights=[...])`.
    pub fn to_text(&self) -> String {
        let mut s = format!("interval({})", self.width());
        for i in 1..self.len() {
            let hs: Vec<String> = self.level(i).iter().map(|h| h.to_string()).collect();
            s = format!("fort(base={}, heights=[{}])", s, hs.join(","));
        }
        s
    }

    pub fn parse(src: &str) -> Result<Fort, FortError> {
        let mut p = TextParser { s: src.as_bytes(), pos: 0 };
        let f = p.fort()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_doc()).expect("serialisable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Fort, FortError> {
        let doc: FortDoc = serde_json::from_value(v.clone())
            .map_err(|e| FortError::Parse { pos: 0, msg: e.to_string() })?;
        Fort::from_doc(&doc)
    }

    fn to_doc(&self) -> FortDoc {
        let mut d = FortDoc::Interval { interval: self.width() };
        for i in 1..self.len() {
            d = FortDoc::Ext { base: Box::new(d), heights: self.level(i).to_vec() };
        }
        d
    }

    fn from_doc(d: &FortDoc) -> Result<Fort, FortError> {
        match d {
            FortDoc::Interval { interval } => Fort::interval(*interval),
            FortDoc::Ext { base, heights } => Fort::from_doc(base)?.extend_vec(heights.clone()),
        }
    }
}

fn containing_cell_prefix(p: &[Q]) -> Option<IntegerCell> {
    let mut c = IntegerCell::default();
    for x in p {
        c.0.push(Entry::containing(x)?);
    }
    Some(c)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FortDoc {
    Interval { interval: u32 },
    Ext { base: Box<FortDoc>, heights: Vec<u32> },
}

struct TextParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl TextParser<'_> {
    fn err(&self, msg: &str) -> FortError {
        FortError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn lit(&mut self, t: &str) -> Result<(), FortError> {
        self.ws();
        if self.s[self.pos..].starts_with(t.as_bytes()) {
            self.pos += t.len();
            Ok(())
        } else {
            Err(self.err(&format!("expected `{t}`")))
        }
    }

    fn num(&mut self) -> Result<u32, FortError> {
        self.ws();
        let st = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[st..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected a positive integer"))
    }

    fn fort(&mut self) -> Result<Fort, FortError> {
        self.ws();
        if self.s[self.pos..].starts_with(b"interval") {
            self.lit("interval")?;
            self.lit("(")?;
            let n = self.num()?;
            self.lit(")")?;
            return Fort::interval(n);
        }
        self.lit("fort")?;
        self.lit("(")?;
        self.lit("base")?;
        self.lit("=")?;
        let base = self.fort()?;
        self.lit(",")?;
        self.lit("heights")?;
        self.lit("=")?;
        self.lit("[")?;
        let mut hs = vec![];
        loop {
            hs.push(self.num()?);
            self.ws();
            if self.s.get(self.pos) == Some(&b',') {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.lit("]")?;
        self.lit(")")?;
        base.extend_vec(hs)
    }
}

/// Width form: the first axis `(0,n)` and a fort of length `len-1` over each of its cells.
///
/// Children are stored back to back in flat encoding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WidthForm {
    pub n: u32,
    /// Length of every child; 0 for a fort of length 1.
    depth: usize,
    data: Vec<u32>,
    /// `depth + 1` level boundaries per child, into `data`.
    bounds: Vec<u32>,
}

impl WidthForm {
    pub fn new(n: u32, children: &[Fort]) -> Result<WidthForm, FortError> {
        if n == 0 {
            return Err(FortError::NonPositive);
        }
        let Some(first) = children.first() else {
            return Ok(WidthForm { n, depth: 0, data: vec![], bounds: vec![] });
        };
        if children.len() as u64 != column_size(n) {
            return Err(FortError::HeightCount { got: children.len(), want: column_size(n) as usize });
        }
        let depth = first.len();
        if let Some(c) = children.iter().find(|c| c.len() != depth) {
            return Err(FortError::Range { index: c.len(), len: depth });
        }
        let mut w = WidthForm { n, depth, data: vec![], bounds: vec![] };
        for c in children {
            for i in 0..depth {
                w.bounds.push(w.data.len() as u32);
                w.data.extend_from_slice(c.level(i));
            }
            w.bounds.push(w.data.len() as u32);
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        1 + self.depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn child_count(&self) -> usize {
        if self.depth == 0 {
            0
        } else {
            self.bounds.len() / (self.depth + 1)
        }
    }

    fn child_level(&self, j: usize, i: usize) -> &[u32] {
        let b = j * (self.depth + 1) + i;
        &self.data[self.bounds[b] as usize..self.bounds[b + 1] as usize]
    }

    pub fn child(&self, j: usize) -> Fort {
        let b = j * (self.depth + 1);
        let base = self.bounds[b];
        let data = &self.data[base as usize..self.bounds[b + self.depth] as usize];
        let starts = self.bounds[b..=b + self.depth].iter().map(|x| x - base).collect();
        Fort::from_parts(SmallVec::from_slice(data), starts)
    }

    /// One fort per cell of `(0,n)` in order; empty for length 1.
    pub fn children(&self) -> Vec<Fort> {
        (0..self.child_count()).map(|j| self.child(j)).collect()
    }

    pub fn to_height_form(&self) -> Result<Fort, FortError> {
        if self.n == 0 {
            return Err(FortError::NonPositive);
        }
        if self.depth == 0 {
            return Fort::interval(self.n);
        }
        // Level i of the result concatenates level i-1 of the children in order.
        let kids = self.child_count();
        let mut data: Heights = SmallVec::with_capacity(self.data.len() + 1);
        data.push(self.n);
        let mut starts: SmallVec<[u32; 5]> = SmallVec::new();
        starts.push(0);
        starts.push(1);
        if self.depth == 1 {
            // Children of length one are already in level order.
            data.extend_from_slice(&self.data);
            starts.push(data.len() as u32);
        } else {
            for i in 0..self.depth {
                for j in 0..kids {
                    data.extend_from_slice(self.child_level(j, i));
                }
                starts.push(data.len() as u32);
            }
        }
        Ok(Fort::from_parts(data, starts))
    }

    /// Cells `C x C'` for `C` in `(0,n)` and `C'` in the child over `C`.
    pub fn cells(&self) -> Vec<IntegerCell> {
        if self.depth == 0 {
            return (1..=column_size(self.n)).map(|k| IntegerCell::new(&[Entry::from_key(k)])).collect();
        }
        let mut out = vec![];
        for (i, ch) in self.children().iter().enumerate() {
            let head = IntegerCell::new(&[Entry::from_key(i as u64 + 1)]);
            for c in ch.cells() {
                out.push(head.concat(&c));
            }
        }
        out
    }
}

/// Check that a raw cell set is the cell set of a fort, and return the fort.
pub fn validate_fort(cells: &[IntegerCell]) -> Result<Fort, FortError> {
    let first = cells.first().ok_or(FortError::Empty)?;
    let len = first.len();
    if len == 0 {
        return Err(FortError::Empty);
    }
    if let Some(c) = cells.iter().find(|c| c.len() != len) {
        return Err(FortError::LengthMismatch(first.clone(), c.clone()));
    }
    let mut sorted: Vec<&IntegerCell> = cells.iter().collect();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(FortError::Duplicate(w[0].clone()));
        }
    }
    // Columns of the top axis, keyed by base cell; then recurse on the base.
    let mut columns: BTreeMap<IntegerCell, Vec<Entry>> = BTreeMap::new();
    for c in &sorted {
        columns.entry(c.prefix(len - 1)).or_default().push(c.last());
    }
    let mut heights = BTreeMap::new();
    for (base, col) in &columns {
        if col[0] != Entry::Interval(0) {
            return Err(FortError::ColumnStart { base: base.clone(), first: col[0] });
        }
        for (i, e) in col.iter().enumerate() {
            if e.key() != i as u64 + 1 {
                return Err(FortError::ColumnGap { base: base.clone(), at: *e });
            }
        }
        let top = *col.last().unwrap();
        if !top.is_interval() {
            return Err(FortError::ColumnEnd { base: base.clone(), at: top });
        }
        heights.insert(base.clone(), top.anchor() + 1);
    }
    if len == 1 {
        return Fort::interval(heights[&IntegerCell::default()]);
    }
    let base_cells: Vec<IntegerCell> = columns.keys().cloned().collect();
    let base = validate_fort(&base_cells)?;
    if let Some(c) = base.cells().into_iter().find(|c| !heights.contains_key(c)) {
        return Err(FortError::MissingColumn(c));
    }
    base.extend(&heights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_two() -> Fort {
        Fort::interval(4).unwrap().extend_vec(vec![1, 2, 3, 3, 4, 5, 1]).unwrap()
    }

    #[test]
    fn interval_cells_alternate() {
        let f = Fort::interval(3).unwrap();
        let cells = f.cells();
        assert_eq!(cells.len(), 5);
        let kinds: Vec<u8> = cells.iter().map(|c| c.last().kind()).collect();
        assert_eq!(kinds, vec![1, 0, 1, 0, 1]);
        assert!(Fort::interval(0).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let f = figure_two();
        for (i, c) in f.cells().iter().enumerate() {
            assert_eq!(f.index_of(c), Some(i));
            assert_eq!(&f.cell_at(2, i), c);
        }
    }

    #[test]
    fn text_roundtrip() {
        let f = figure_two();
        let t = f.to_text();
        assert_eq!(t, "fort(base=interval(4), heights=[1,2,3,3,4,5,1])");
        assert_eq!(Fort::parse(&t).unwrap(), f);
        assert_eq!(Fort::from_json(&f.to_json()).unwrap(), f);
        assert!(Fort::parse("fort(base=interval(2), heights=[1,1])").is_err());
    }

    #[test]
    fn subdivision_of_square() {
        let sq = Fort::unit(2);
        let d = sq.subdivide_set(2).unwrap();
        assert_eq!(d.cell_count(), 9);
        assert_eq!(d, Fort::interval(2).unwrap().extend_vec(vec![2, 2, 2]).unwrap());
    }

    #[test]
    fn containing_cell_is_exact() {
        let f = figure_two();
        let p = FortPoint::new(vec![Q::from_integer(3.into()), Q::new(9.into(), 2.into())]);
        assert_eq!(f.containing_cell(&p), Some(IntegerCell::new(&[Entry::Point(3), Entry::Interval(4)])));
        let out = FortPoint::new(vec![Q::new(7.into(), 2.into()), Q::new(3.into(), 2.into())]);
        assert_eq!(f.containing_cell(&out), None);
    }

    #[test]
    fn validator_rejects_floating_column() {
        let c = IntegerCell::new(&[Entry::Interval(0), Entry::Point(1)]);
        assert!(matches!(validate_fort(&[c]), Err(FortError::ColumnStart { .. })));
    }
}
