//! Point, interval and jet evaluation of expression trees.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::expr::{AlgFunc, InvBranch, Node, RootSpec, SectionSpec};
use crate::interval::Interval;
use crate::jet::{layout, Jet, Layout};
use crate::mpoly::MPoly;
use crate::rational::{enclose, from_f64, mid, qi, Q};
use crate::roots::isolate_roots;

impl AlgFunc {
    /// Certified enclosure of a closed expression.
    pub fn enclosure(&self) -> Interval {
        debug_assert!(self.is_closed());
        self.enclosure_uncached_safe()
    }

    /// Certified range enclosure over a box.
    pub fn interval(&self, bx: &[Interval]) -> Interval {
        let l = layout(bx.len(), 0);
        let vars: Vec<Jet> = bx.iter().map(|b| Jet::constant(&l, *b)).collect();
        self.jet_with(&l, &vars).value()
    }

    /// Taylor jet of order `order` over the box: coefficient `a` encloses `f^(a)/a!`.
    pub fn jet(&self, bx: &[Interval], order: usize) -> Jet {
        let l = layout(bx.len(), order);
        let vars: Vec<Jet> = bx.iter().enumerate().map(|(i, b)| Jet::variable(&l, i, *b)).collect();
        self.jet_with(&l, &vars)
    }

    /// Evaluate with the coordinates replaced by the given jets.
    pub fn jet_with(&self, l: &Arc<Layout>, vars: &[Jet]) -> Jet {
        let mut memo = HashMap::new();
        jet_rec(self, l, vars, &mut memo)
    }

    /// Floating point evaluation (not certified).
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut memo = HashMap::new();
        f64_rec(self, x, &mut memo)
    }

    /// Exact evaluation when the tree is rational arithmetic only.
    pub fn eval_exact(&self, x: &[Q]) -> Option<Q> {
        let mut memo = HashMap::new();
        exact_rec(self, x, &mut memo)
    }
}

fn jet_rec(e: &AlgFunc, l: &Arc<Layout>, vars: &[Jet], memo: &mut HashMap<usize, Jet>) -> Jet {
    if e.is_closed() {
        return Jet::constant(l, e.enclosure_uncached_safe());
    }
    if let Some(j) = memo.get(&e.id()) {
        return j.clone();
    }
    let r = match e.node() {
        Node::Var(i) => match vars.get(*i) {
            Some(v) => v.clone(),
            None => Jet::constant(l, Interval::ENTIRE),
        },
        Node::Add(a, b) => jet_rec(a, l, vars, memo).add(&jet_rec(b, l, vars, memo)),
        Node::Sub(a, b) => jet_rec(a, l, vars, memo).sub(&jet_rec(b, l, vars, memo)),
        Node::Mul(a, b) => {
            if let Some(q) = a.as_rational() {
                jet_rec(b, l, vars, memo).scale(enclose(q))
            } else if a == b {
                jet_rec(a, l, vars, memo).sqr()
            } else {
                jet_rec(a, l, vars, memo).mul(&jet_rec(b, l, vars, memo))
            }
        }
        Node::Div(a, b) => jet_rec(a, l, vars, memo).div(&jet_rec(b, l, vars, memo)),
        Node::Neg(a) => jet_rec(a, l, vars, memo).neg(),
        Node::Pow(a, k) => jet_rec(a, l, vars, memo).powi(*k),
        Node::Poly(p, a) => {
            let ja = jet_rec(a, l, vars, memo);
            poly_on_jet(p, &ja)
        }
        Node::Inv(br, a) => {
            let ja = jet_rec(a, l, vars, memo);
            inv_jet(br, &ja)
        }
        Node::Section(s, a) => {
            let ja = jet_rec(a, l, vars, memo);
            section_jet(s, &ja)
        }
        Node::Rat(_) | Node::Alg(_) | Node::Root(_) => unreachable!("closed"),
    };
    memo.insert(e.id(), r.clone());
    r
}

impl AlgFunc {
    fn enclosure_uncached_safe(&self) -> Interval {
        match self.node() {
            Node::Rat(q) => enclose(q),
            Node::Alg(a) => a.enclosure(),
            Node::Root(r) => {
                if let Some(v) = self.0.value.get() {
                    return *v;
                }
                let v = root_enclosure(r);
                let _ = self.0.value.set(v);
                v
            }
            _ => {
                if let Some(v) = self.0.value.get() {
                    return *v;
                }
                let l = layout(0, 0);
                let v = jet_rec_closed(self, &l);
                let _ = self.0.value.set(v);
                v
            }
        }
    }
}

fn jet_rec_closed(e: &AlgFunc, l: &Arc<Layout>) -> Interval {
    // Closed subtree: evaluate children through their own caches.
    match e.node() {
        Node::Rat(_) | Node::Alg(_) | Node::Root(_) => e.enclosure_uncached_safe(),
        Node::Add(a, b) => a.enclosure_uncached_safe() + b.enclosure_uncached_safe(),
        Node::Sub(a, b) => a.enclosure_uncached_safe() - b.enclosure_uncached_safe(),
        Node::Mul(a, b) => {
            if a == b {
                a.enclosure_uncached_safe().sqr()
            } else {
                a.enclosure_uncached_safe() * b.enclosure_uncached_safe()
            }
        }
        Node::Div(a, b) => a.enclosure_uncached_safe() / b.enclosure_uncached_safe(),
        Node::Neg(a) => -a.enclosure_uncached_safe(),
        Node::Pow(a, k) => a.enclosure_uncached_safe().powi(*k),
        Node::Poly(p, a) => p.eval_interval(a.enclosure_uncached_safe()),
        Node::Inv(br, a) => inv_value(br, a.enclosure_uncached_safe()),
        Node::Section(s, a) => section_value(s, a.enclosure_uncached_safe()),
        Node::Var(_) => {
            let _ = l;
            Interval::ENTIRE
        }
    }
}

fn poly_on_jet(p: &crate::upoly::UPoly, x: &Jet) -> Jet {
    // Taylor-shift at the base interval: coefficients p^(k)(X)/k! via interval Horner.
    let order = x.layout.order;
    let x0 = x.value();
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut d = p.clone();
    let mut fact = Q::from_integer(1.into());
    for k in 0..=order {
        if d.is_zero() {
            break;
        }
        if k > 0 {
            fact *= qi(k as i64);
        }
        let v = d.scale(&fact.recip()).eval_interval(x0);
        coeffs.push(v);
        d = d.deriv();
    }
    if coeffs.is_empty() {
        return Jet::constant(&x.layout, Interval::ZERO);
    }
    x.compose_univariate(&coeffs)
}

// ---- inverse branches ---------------------------------------------------------

fn f_at(f: &AlgFunc, x: f64) -> Interval {
    f.interval(&[Interval::point(x)])
}

/// Bound on `g(y)` for the inverse `g` of the branch: lower bound when `lower`.
fn inv_point_bound(br: &InvBranch, y: f64, lower: bool) -> f64 {
    let key = (y.to_bits(), lower);
    if let Some(v) = br.cache.lock().unwrap().get(&key) {
        return *v;
    }
    let dl = br.lo.enclosure().lo;
    let dh = br.hi.enclosure().hi;
    let (mut a, mut b) = (dl, dh);
    if y.is_nan() {
        return if lower { dl } else { dh };
    }
    for _ in 0..80 {
        let m = 0.5 * a + 0.5 * b;
        if m <= a || m >= b {
            break;
        }
        let fm = f_at(&br.f, m);
        // increasing: f(m) < y means g(y) > m
        let (left_of_root, right_of_root) =
            if br.increasing { (fm.hi < y, fm.lo > y) } else { (fm.lo > y, fm.hi < y) };
        if left_of_root {
            a = m;
        } else if right_of_root {
            b = m;
        } else if fm.is_point() && fm.lo == y {
            a = m;
            b = m;
            break;
        } else if lower {
            // Undecided: keep the certified side, search towards it.
            b = m;
        } else {
            a = m;
        }
    }
    let v = if lower { a } else { b };
    br.cache.lock().unwrap().insert(key, v);
    v
}

pub(crate) fn inv_value(br: &InvBranch, y: Interval) -> Interval {
    let (lo, hi) = if br.increasing {
        (inv_point_bound(br, y.lo, true), inv_point_bound(br, y.hi, false))
    } else {
        (inv_point_bound(br, y.hi, true), inv_point_bound(br, y.lo, false))
    };
    Interval::new(lo.min(hi), hi.max(lo))
}

fn inv_jet(br: &InvBranch, arg: &Jet) -> Jet {
    let l = &arg.layout;
    let x0 = inv_value(br, arg.value());
    let mut x = Jet::constant(l, x0);
    if l.order == 0 {
        return x;
    }
    let d = br.f.jet(&[x0], 1).c[1];
    solve_implicit(&mut x, d, |xj| br.f.jet_with(l, std::slice::from_ref(xj)).sub(arg));
    x
}

/// Solve `residual(y) = 0` order by order, given `d` = derivative of the residual in `y`.
fn solve_implicit(y: &mut Jet, d: Interval, residual: impl Fn(&Jet) -> Jet) {
    let l = y.layout.clone();
    for k in 1..=l.order as u32 {
        let r = residual(y);
        for i in 0..l.len() {
            if l.degree(i) == k {
                y.c[i] = -r.c[i] / d;
            }
        }
    }
}

// ---- closed roots --------------------------------------------------------------

fn root_enclosure(r: &RootSpec) -> Interval {
    let s_lo = sign_at(&r.f, &r.lo);
    let mut a = r.lo.clone();
    let mut b = r.hi.clone();
    for _ in 0..200 {
        let e = enclose(&a).hull(&enclose(&b));
        if e.width() <= 4.0 * f64::EPSILON * e.mag().max(1e-300) {
            break;
        }
        let m = mid(&a, &b);
        match sign_at(&r.f, &m) {
            0 => {
                if r.f.eval_exact(std::slice::from_ref(&m)).is_some_and(|v| v.is_zero()) {
                    return enclose(&m);
                }
                break;
            }
            s if s == s_lo => a = m,
            _ => b = m,
        }
    }
    enclose(&a).hull(&enclose(&b))
}

/// Certified sign of a univariate function at a rational point, 0 if undecided.
pub(crate) fn sign_at(f: &AlgFunc, x: &Q) -> i32 {
    if let Some(v) = f.eval_exact(std::slice::from_ref(x)) {
        return if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        };
    }
    let v = f.interval(&[enclose(x)]);
    if v.certainly_pos() {
        1
    } else if v.certainly_neg() {
        -1
    } else {
        0
    }
}

// ---- sections of bivariate polynomials ------------------------------------------

fn section_root_at(s: &SectionSpec, x: f64) -> Option<(f64, f64)> {
    if !x.is_finite() {
        return None;
    }
    if let Some(v) = s.cache.lock().unwrap().get(&x.to_bits()) {
        return Some(*v);
    }
    let xq = from_f64(x);
    let u = s.poly.at_x1(&xq);
    if u.is_zero() {
        return None;
    }
    let roots = isolate_roots(&u, &Q::zero(), &qi(1)).ok()?;
    let iv = roots.get(s.index)?;
    let r = crate::algebraic::RealNum::from_isolating(&u, iv).enclosure();
    let v = (r.lo, r.hi);
    s.cache.lock().unwrap().insert(x.to_bits(), v);
    Some(v)
}

fn section_value_rec(s: &SectionSpec, x: Interval, depth: u32) -> Interval {
    let fallback = Interval::UNIT;
    if x.is_point() {
        return match section_root_at(s, x.lo) {
            Some((a, b)) => Interval::new(a, b),
            None => fallback,
        };
    }
    let (Some(yl), Some(yh), Some(ym)) =
        (section_root_at(s, x.lo), section_root_at(s, x.hi), section_root_at(s, x.mid()))
    else {
        return fallback;
    };
    let lo = yl.0.min(yh.0).min(ym.0);
    let hi = yl.1.max(yh.1).max(ym.1);
    let py_poly = s.poly.deriv(1);
    let pads = [0.5 * (hi - lo) + 1e-12, (hi - lo) + 0.05 * x.width(), (hi - lo) + 0.5 * x.width()];
    let tries = if depth == 0 { &pads[..] } else { &pads[..1] };
    for &pad in tries {
        let yb = Interval::new((lo - pad).max(0.0), (hi + pad).min(1.0));
        let py = centered(&py_poly, &[x, yb]);
        let pl = centered(&s.poly, &[x, Interval::point(yb.lo)]);
        let ph = centered(&s.poly, &[x, Interval::point(yb.hi)]);
        let opposite = (pl.certainly_pos() && ph.certainly_neg()) || (pl.certainly_neg() && ph.certainly_pos());
        if py.certainly_nonzero() && opposite {
            return yb;
        }
    }
    if depth == 0 {
        return fallback;
    }
    let (a, b) = x.bisect();
    section_value_rec(s, a, depth - 1).hull(&section_value_rec(s, b, depth - 1))
}

/// Mean value form intersected with the naive enclosure.
pub(crate) fn centered(p: &MPoly, bx: &[Interval]) -> Interval {
    let naive = p.eval_interval(bx);
    let m: Vec<Interval> = bx.iter().map(|b| Interval::point(b.mid())).collect();
    let mut acc = p.eval_interval(&m);
    for (i, b) in bx.iter().enumerate() {
        if b.is_point() {
            continue;
        }
        let d = p.deriv(i).eval_interval(bx);
        acc = acc + d * (*b - m[i]);
    }
    acc.intersect(&naive).unwrap_or(naive)
}

pub(crate) fn section_value(s: &SectionSpec, x: Interval) -> Interval {
    section_value_rec(s, x, 10)
}

fn mpoly_on_jets(p: &MPoly, args: &[Jet]) -> Jet {
    let l = &args[0].layout;
    let mut acc = Jet::constant(l, Interval::ZERO);
    for (e, c) in p.terms() {
        let mut t = Jet::constant(l, enclose(c));
        for (i, &k) in e.iter().enumerate() {
            if k > 0 {
                t = t.mul(&args[i].powi(k));
            }
        }
        acc = acc.add(&t);
    }
    acc
}

fn section_jet(s: &SectionSpec, x: &Jet) -> Jet {
    let l = &x.layout;
    let y0 = section_value(s, x.value());
    let mut y = Jet::constant(l, y0);
    if l.order == 0 {
        return y;
    }
    let d = s.poly.deriv(1).eval_interval(&[x.value(), y0]);
    solve_implicit(&mut y, d, |yj| mpoly_on_jets(&s.poly, &[x.clone(), yj.clone()]));
    y
}

// ---- floats and exact rationals -------------------------------------------------

fn f64_rec(e: &AlgFunc, x: &[f64], memo: &mut HashMap<usize, f64>) -> f64 {
    if let Some(v) = memo.get(&e.id()) {
        return *v;
    }
    let r = match e.node() {
        Node::Rat(q) => crate::rational::to_f64(q),
        Node::Alg(_) | Node::Root(_) => e.enclosure_uncached_safe().mid(),
        Node::Var(i) => x.get(*i).copied().unwrap_or(f64::NAN),
        Node::Add(a, b) => f64_rec(a, x, memo) + f64_rec(b, x, memo),
        Node::Sub(a, b) => f64_rec(a, x, memo) - f64_rec(b, x, memo),
        Node::Mul(a, b) => f64_rec(a, x, memo) * f64_rec(b, x, memo),
        Node::Div(a, b) => f64_rec(a, x, memo) / f64_rec(b, x, memo),
        Node::Neg(a) => -f64_rec(a, x, memo),
        Node::Pow(a, k) => f64_rec(a, x, memo).powi(*k as i32),
        Node::Poly(p, a) => p.eval_f64(f64_rec(a, x, memo)),
        Node::Inv(br, a) => inv_f64(br, f64_rec(a, x, memo)),
        Node::Section(s, a) => {
            let xv = f64_rec(a, x, memo);
            match section_root_at(s, xv) {
                Some((lo, hi)) => 0.5 * (lo + hi),
                None => f64::NAN,
            }
        }
    };
    memo.insert(e.id(), r);
    r
}

fn inv_f64(br: &InvBranch, y: f64) -> f64 {
    let mut a = br.lo.eval_f64(&[]);
    let mut b = br.hi.eval_f64(&[]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = br.f.eval_f64(&[m]);
        if (fm < y) == br.increasing {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn exact_rec(e: &AlgFunc, x: &[Q], memo: &mut HashMap<usize, Option<Q>>) -> Option<Q> {
    if let Some(v) = memo.get(&e.id()) {
        return v.clone();
    }
    let r = match e.node() {
        Node::Rat(q) => Some(q.clone()),
        Node::Var(i) => x.get(*i).cloned(),
        Node::Add(a, b) => Some(exact_rec(a, x, memo)? + exact_rec(b, x, memo)?),
        Node::Sub(a, b) => Some(exact_rec(a, x, memo)? - exact_rec(b, x, memo)?),
        Node::Mul(a, b) => Some(exact_rec(a, x, memo)? * exact_rec(b, x, memo)?),
        Node::Div(a, b) => {
            let d = exact_rec(b, x, memo)?;
            if d.is_zero() {
                None
            } else {
                Some(exact_rec(a, x, memo)? / d)
            }
        }
        Node::Neg(a) => Some(-exact_rec(a, x, memo)?),
        Node::Pow(a, k) => Some(num_traits::pow(exact_rec(a, x, memo)?, *k as usize)),
        Node::Poly(p, a) => Some(p.eval(&exact_rec(a, x, memo)?)),
        _ => None,
    };
    memo.insert(e.id(), r.clone());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::InvBranch;
    use crate::rational::q;
    use crate::upoly::UPoly;

    fn cubic() -> AlgFunc {
        AlgFunc::poly(&UPoly::from_ints(&[0, 0, 3, -2]), 0)
    }

    #[test]
    fn cubic_range_enclosure() {
        let e = cubic().interval(&[Interval::UNIT]);
        assert!(e.lo <= 0.0 && e.hi >= 1.0);
        // refined by splitting, the enclosure tightens towards [0,1]
        let mut hull: Option<Interval> = None;
        for k in 0..64 {
            let b = Interval::new(k as f64 / 64.0, (k + 1) as f64 / 64.0);
            let v = cubic().interval(&[b]);
            hull = Some(hull.map_or(v, |h| h.hull(&v)));
        }
        let h = hull.unwrap();
        assert!(h.lo > -0.05 && h.hi < 1.05);
    }

    #[test]
    fn sqrt_branch() {
        let x = AlgFunc::var(0);
        let br = InvBranch::new(x.pow(2), AlgFunc::zero(), AlgFunc::one(), true);
        let g = AlgFunc::inv(&br, &x);
        let v = g.interval(&[Interval::point(0.25)]);
        assert!(v.contains(0.5) && v.width() < 1e-12);
        let j = g.jet(&[Interval::point(0.25)], 2);
        // g' = 1/(2 sqrt y) = 1, g''/2 = -1/(8 y^{3/2}) / 1 = -1
        assert!(j.c[1].contains(1.0) && j.c[1].width() < 1e-9);
        assert!(j.c[2].contains(-1.0) && j.c[2].width() < 1e-9);
        assert!((g.eval_f64(&[0.25]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn section_of_circle() {
        let xm = MPoly::var(2, 0).sub(&MPoly::constant(2, q(1, 2)));
        let ym = MPoly::var(2, 1).sub(&MPoly::constant(2, q(1, 2)));
        let p = xm.pow(2).add(&ym.pow(2)).sub(&MPoly::constant(2, q(1, 16)));
        let upper = SectionSpec::new(p, 1);
        let s = AlgFunc::section(&upper, &AlgFunc::var(0));
        let v = s.interval(&[Interval::point(0.5)]);
        assert!(v.contains(0.75));
        let w = s.interval(&[Interval::new(0.45, 0.55)]);
        assert!(w.contains(0.75) && w.hi <= 0.76);
        let j = s.jet(&[Interval::point(0.5)], 1);
        assert!(j.c[1].contains(0.0));
    }

    #[test]
    fn closed_root() {
        let f = AlgFunc::poly(&UPoly::from_ints(&[-2, 0, 1]), 0);
        let r = AlgFunc::root(&f, qi(1), qi(2));
        let e = r.enclosure();
        assert!(e.contains(std::f64::consts::SQRT_2) && e.width() < 1e-14);
    }

    #[test]
    fn exact_evaluation() {
        assert_eq!(cubic().eval_exact(&[q(1, 2)]), Some(q(1, 2)));
    }
}
