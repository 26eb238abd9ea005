//! Certified sign and equality decisions for expressions over cell boxes.
//!
//! Decisions go through a fixed sequence of tiers: exact rational
//! simplification, structural facts about sections, exact Sturm counting for
//! univariate polynomials, interval enclosure of the closed box, and finally
//! adaptive bisection of the box pulled in by `2^-30` on every open side.

use std::collections::VecDeque;
use std::fmt;

use num_traits::Signed;
use realalg::expr::ratfun_equal;
use realalg::roots::count_roots;
use realalg::{AlgFunc, Interval, Node, Q};

use crate::fort::{Entry, IntegerCell};

/// Inward shift applied to open sides in the last tier.
pub const SHRINK: f64 = 1.0 / (1u64 << 30) as f64;
const BOX_BUDGET: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Exact,
    Structural,
    Sturm,
    Interval,
    Shrunk,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tier::Exact => "exact",
            Tier::Structural => "structural",
            Tier::Sturm => "sturm",
            Tier::Interval => "interval",
            Tier::Shrunk => "shrunk-interval",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignFailure {
    /// Midpoint of the offending box.
    pub at: Vec<f64>,
    pub value: Interval,
    /// True when the value there is certainly of the wrong sign.
    pub definite: bool,
}

impl fmt::Display for SignFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.definite { "violated" } else { "undecided" };
        write!(f, "{kind} near {:?}, value in {:?}", self.at, self.value)
    }
}

/// Local box of an integer cell: `[0,1]` on interval axes, `[0,0]` on point axes.
pub fn cell_box(c: &IntegerCell) -> Vec<Interval> {
    c.entries()
        .iter()
        .map(|e| if e.is_interval() { Interval::UNIT } else { Interval::ZERO })
        .collect()
}

/// Box from a list of axis kinds.
pub fn kinds_box(kinds: &[Entry]) -> Vec<Interval> {
    cell_box(&IntegerCell::new(kinds))
}

/// Range enclosure: interval evaluation intersected with the mean value form.
pub fn tight_range(f: &AlgFunc, bx: &[Interval]) -> Interval {
    if f.is_closed() {
        return f.enclosure();
    }
    let j = f.jet(bx, 1);
    let naive = j.value();
    if !naive.is_finite() {
        return naive;
    }
    let mid: Vec<Interval> = bx.iter().map(|b| Interval::point(b.mid())).collect();
    let mut acc = f.interval(&mid);
    for (i, b) in bx.iter().enumerate() {
        if b.is_point() {
            continue;
        }
        let mut e = vec![0u32; bx.len()];
        e[i] = 1;
        acc = acc + j.coeff(&e) * (*b - mid[i]);
    }
    acc.intersect(&naive).unwrap_or(naive)
}

fn shrink(bx: &[Interval]) -> Vec<Interval> {
    bx.iter()
        .map(|b| if b.is_point() { *b } else { Interval::new(b.lo + SHRINK * b.width(), b.hi - SHRINK * b.width()) })
        .collect()
}

fn same_section_family(a: &AlgFunc, b: &AlgFunc) -> Option<(usize, usize)> {
    match (a.node(), b.node()) {
        (Node::Section(sa, xa), Node::Section(sb, xb)) if sa.poly == sb.poly && xa == xb => Some((sa.index, sb.index)),
        _ => None,
    }
}

/// Positivity that follows from how sections are defined.
pub fn structurally_positive(e: &AlgFunc) -> bool {
    match e.node() {
        Node::Rat(q) => q.is_positive(),
        Node::Alg(_) | Node::Root(_) => e.enclosure().certainly_pos(),
        // The index-th root inside (0,1).
        Node::Section(..) => true,
        Node::Sub(a, b) => {
            if let Some((i, j)) = same_section_family(a, b) {
                return i > j;
            }
            if matches!(b.node(), Node::Section(..)) {
                return a.as_rational().is_some_and(|q| *q >= Q::from_integer(1.into()));
            }
            false
        }
        Node::Add(a, b) => {
            (structurally_positive(a) && structurally_nonneg(b)) || (structurally_nonneg(a) && structurally_positive(b))
        }
        Node::Mul(a, b) | Node::Div(a, b) => structurally_positive(a) && structurally_positive(b),
        Node::Pow(a, _) => structurally_positive(a),
        _ => false,
    }
}

fn structurally_nonneg(e: &AlgFunc) -> bool {
    match e.node() {
        Node::Rat(q) => !q.is_negative(),
        Node::Pow(_, k) if k % 2 == 0 => true,
        Node::Mul(a, b) if a == b => true,
        _ => structurally_positive(e),
    }
}

/// Certify `f > 0` on the open cell whose closure is `bx`.
pub fn certify_positive(f: &AlgFunc, bx: &[Interval]) -> Result<Tier, SignFailure> {
    if let Some(q) = f.as_rational() {
        return exact_sign(q, bx);
    }
    if structurally_positive(f) {
        return Ok(Tier::Structural);
    }
    let c = f.canonical();
    if let Some(q) = c.as_rational() {
        return exact_sign(q, bx);
    }
    if structurally_positive(&c) {
        return Ok(Tier::Structural);
    }
    if let Some(t) = sturm_positive(&c, bx) {
        return t;
    }
    let whole = tight_range(f, bx);
    if whole.certainly_pos() {
        return Ok(Tier::Interval);
    }
    bisect_positive(f, &shrink(bx))
}

fn exact_sign(q: &Q, bx: &[Interval]) -> Result<Tier, SignFailure> {
    if q.is_positive() {
        Ok(Tier::Exact)
    } else {
        let v = realalg::rational::enclose(q);
        Err(SignFailure { at: bx.iter().map(|b| b.mid()).collect(), value: v, definite: true })
    }
}

/// Univariate polynomial with no root in the open side and positive inside.
fn sturm_positive(c: &AlgFunc, bx: &[Interval]) -> Option<Result<Tier, SignFailure>> {
    let n = c.nvars();
    if n == 0 {
        return None;
    }
    let used: Vec<usize> = (0..n).filter(|&v| c.depends_on(v)).collect();
    let [v] = used[..] else { return None };
    let p = c.to_upoly(v)?;
    let side = bx.get(v)?;
    if side.is_point() {
        return None;
    }
    let lo = realalg::rational::from_f64(side.lo);
    let hi = realalg::rational::from_f64(side.hi);
    let m = realalg::rational::mid(&lo, &hi);
    let at: Vec<f64> = bx.iter().map(|b| b.mid()).collect();
    let s = p.sign_at(&m);
    if s < 0 {
        return Some(Err(SignFailure { at, value: realalg::rational::enclose(&p.eval(&m)), definite: true }));
    }
    if s > 0 && count_roots(&p, &lo, &hi) == 0 {
        return Some(Ok(Tier::Sturm));
    }
    // A root inside: either a sign change or a touching zero, both fail.
    Some(Err(SignFailure { at, value: Interval::ZERO, definite: s == 0 || count_roots(&p, &lo, &hi) > 0 }))
}

fn bisect_positive(f: &AlgFunc, bx: &[Interval]) -> Result<Tier, SignFailure> {
    let mut queue = VecDeque::from([bx.to_vec()]);
    let mut used = 0usize;
    while let Some(b) = queue.pop_front() {
        used += 1;
        let r = tight_range(f, &b);
        if r.certainly_pos() {
            continue;
        }
        let mid: Vec<Interval> = b.iter().map(|s| Interval::point(s.mid())).collect();
        let mv = f.interval(&mid);
        if mv.hi <= 0.0 || used > BOX_BUDGET {
            return Err(SignFailure { at: mid.iter().map(|s| s.lo).collect(), value: mv, definite: mv.hi <= 0.0 });
        }
        let Some(k) = widest(&b) else {
            return Err(SignFailure { at: mid.iter().map(|s| s.lo).collect(), value: r, definite: false });
        };
        let (l, h) = b[k].bisect();
        let mut b1 = b.clone();
        b1[k] = l;
        let mut b2 = b;
        b2[k] = h;
        queue.push_back(b1);
        queue.push_back(b2);
    }
    Ok(Tier::Shrunk)
}

fn widest(b: &[Interval]) -> Option<usize> {
    let (k, w) = b.iter().enumerate().map(|(i, s)| (i, s.width())).fold((0, 0.0), |a, x| if x.1 > a.1 { x } else { a });
    (w > 1e-15).then_some(k)
}

/// `f >= 0`, with equality only as an exact identity.
pub fn certify_nonneg(f: &AlgFunc, bx: &[Interval]) -> Result<Tier, SignFailure> {
    if is_identically_zero(f) {
        return Ok(Tier::Exact);
    }
    certify_positive(f, bx)
}

/// Exact identity `f == 0` on the whole domain.
pub fn is_identically_zero(f: &AlgFunc) -> bool {
    if f.is_zero() {
        return true;
    }
    let c = f.canonical();
    if c.is_zero() {
        return true;
    }
    ratfun_equal(f, &AlgFunc::zero()) == Some(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equality {
    Equal,
    Different,
    Undecided,
}

/// Decide `a == b` as functions; numeric evaluation can only prove difference.
pub fn decide_equal(a: &AlgFunc, b: &AlgFunc, bx: &[Interval]) -> Equality {
    if a == b {
        return Equality::Equal;
    }
    let d = a.sub(b);
    if is_identically_zero(&d) {
        return Equality::Equal;
    }
    if let Some(e) = ratfun_equal(a, b) {
        return if e { Equality::Equal } else { Equality::Different };
    }
    // Samples at a few interior points.
    for t in [0.5, 0.25, 0.75] {
        let p: Vec<Interval> = bx.iter().map(|s| Interval::point(s.lo + t * s.width())).collect();
        let v = d.interval(&p);
        if v.certainly_nonzero() {
            return Equality::Different;
        }
    }
    Equality::Undecided
}

/// Exact rational value of a closed expression, when it simplifies to one.
pub fn as_exact_rational(f: &AlgFunc) -> Option<Q> {
    if let Some(q) = f.as_rational() {
        return Some(q.clone());
    }
    if !f.is_closed() {
        return None;
    }
    let c = f.canonical();
    c.as_rational().cloned().or_else(|| f.eval_exact(&[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use realalg::parse_expr;

    #[test]
    fn polynomial_positive_by_sturm() {
        let f = parse_expr("(poly [0 1 -1])").unwrap();
        assert_eq!(certify_positive(&f, &[Interval::UNIT]), Ok(Tier::Sturm));
        let g = parse_expr("(poly [-1/4 1])").unwrap();
        assert!(certify_positive(&g, &[Interval::UNIT]).unwrap_err().definite);
    }

    #[test]
    fn touching_boundary_needs_shrinking() {
        // x*y on the open square: zero on two closed edges.
        let f = parse_expr("(mul x1 x2)").unwrap();
        assert_eq!(certify_positive(&f, &[Interval::UNIT, Interval::UNIT]), Ok(Tier::Shrunk));
    }

    #[test]
    fn equality_decisions() {
        let a = parse_expr("(mul (add x1 1) (add x1 1))").unwrap();
        let b = parse_expr("(poly [1 2 1])").unwrap();
        assert_eq!(decide_equal(&a, &b, &[Interval::UNIT]), Equality::Equal);
        let c = parse_expr("(poly [1 2 2])").unwrap();
        assert_eq!(decide_equal(&a, &c, &[Interval::UNIT]), Equality::Different);
    }
}
