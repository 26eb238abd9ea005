//! Certified factorial-normalised C^r norms by branch and bound over jets.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use realalg::{AlgFunc, Interval};

use crate::certify::is_identically_zero;
use serde::Serialize;

/// Upper bound on `max_{|a| <= r} sup |f^(a)| / a!` over a cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RCertificate {
    pub order: usize,
    /// Certified upper bound.
    pub bound: f64,
    /// A value the norm certainly reaches (from point evaluations).
    pub lower: f64,
    /// Upper bound per derivative order `0..=r`.
    pub per_order: Vec<f64>,
    /// False when the box budget ran out before the gap closed.
    pub converged: bool,
}

/// Rounding allowance when comparing a certified bound with 1.
pub const ROUNDING_SLACK: f64 = 1e-12;

impl RCertificate {
    pub fn is_r_function(&self) -> bool {
        self.bound <= 1.0 + ROUNDING_SLACK
    }
}

/// Multi-indices of total degree at most `r` on the active axes.
pub fn multi_indices(active: &[bool], r: usize) -> Vec<Vec<u32>> {
    let n = active.len();
    let mut out = vec![];
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, active: &[bool], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        let top = if active[i] { left } else { 0 };
        for k in 0..=top {
            cur[i] = k;
            rec(i + 1, left - k, active, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, r as u32, active, &mut cur, &mut out);
    out.sort_by_key(|m| (m.iter().sum::<u32>(), std::cmp::Reverse(m.clone())));
    let _ = n;
    out
}

struct BoxEval {
    /// Upper bound per multi-index.
    upper: Vec<f64>,
    /// Lower bound per multi-index from the midpoint.
    lower: Vec<f64>,
}

fn box_key(bx: &[Interval]) -> Vec<(u64, u64)> {
    bx.iter().map(|b| (b.lo.to_bits(), b.hi.to_bits())).collect()
}

struct Faces<'a> {
    r: usize,
    affine: &'a [bool],
    jets: HashMap<(usize, Vec<(u64, u64)>), realalg::Jet>,
}

impl Faces<'_> {
    fn jet(&mut self, f: &AlgFunc, bx: &[Interval]) -> &realalg::Jet {
        let r = self.r;
        self.jets.entry((f.id(), box_key(bx))).or_insert_with(|| f.jet(bx, r + 1))
    }

    /// Range of the `m` coefficient, reduced to faces along monotone and affine
    /// axes. Faces are substituted exactly so that cancellations survive.
    fn range(&mut self, f: &AlgFunc, bx: &[Interval], m: &[u32], from: usize) -> Interval {
        let c = self.jet(f, bx).coeff(m);
        if !c.is_finite() {
            return c;
        }
        for i in from..bx.len() {
            if bx[i].width() == 0.0 {
                continue;
            }
            let mut m2 = m.to_vec();
            m2[i] += 1;
            if self.affine[i] || self.jet(f, bx).coeff(&m2).certainly_nonzero() {
                let mut h: Option<Interval> = None;
                for end in [bx[i].lo, bx[i].hi] {
                    let mut face = bx.to_vec();
                    face[i] = Interval::point(end);
                    // Substitution loses derivatives along axis i.
                    let g = if m[i] == 0 {
                        crate::morphism::subst_one(f, i, &AlgFunc::rat(realalg::rational::from_f64(end)))
                    } else {
                        f.clone()
                    };
                    let v = self.range(&g, &face, m, i + 1);
                    h = Some(h.map_or(v, |x| x.hull(&v)));
                }
                let h = h.expect("two faces");
                return c.intersect(&h).unwrap_or(h);
            }
        }
        c
    }
}

fn eval_box(f: &AlgFunc, bx: &[Interval], r: usize, monos: &[Vec<u32>], affine: &[bool]) -> BoxEval {
    let mut faces = Faces { r, affine, jets: HashMap::new() };
    let upper = monos
        .iter()
        .map(|m| {
            let range = faces.range(f, bx, m, 0);
            if range.is_finite() { range.mag() } else { f64::INFINITY }
        })
        .collect();
    let mid: Vec<Interval> = bx.iter().map(|b| Interval::point(b.mid())).collect();
    let jm = f.jet(&mid, r);
    let lower = monos.iter().map(|m| {
        let v = jm.coeff(m);
        if v.is_finite() { v.mig() } else { 0.0 }
    }).collect();
    BoxEval { upper, lower }
}

struct Entry {
    key: f64,
    bx: Vec<Interval>,
    upper: Vec<f64>,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.key.total_cmp(&o.key) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key.total_cmp(&o.key)
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// Stop conditions for the branch and bound.
#[derive(Clone, Copy, Debug)]
pub struct NormGoal {
    /// Stop as soon as the bound is at most this.
    pub target: Option<f64>,
    /// Relative gap at which the bound is considered tight.
    pub rel_gap: f64,
    pub budget: usize,
}

impl Default for NormGoal {
    fn default() -> Self {
        NormGoal { target: None, rel_gap: 1e-8, budget: 20000 }
    }
}

impl NormGoal {
    pub fn at_most(t: f64) -> NormGoal {
        NormGoal { target: Some(t), rel_gap: 0.0, budget: 4000 }
    }
}

/// Certified norm of `f` on the box (point axes have zero width).
pub fn norm_bound(f: &AlgFunc, bx: &[Interval], r: usize, goal: NormGoal) -> RCertificate {
    let active: Vec<bool> = bx.iter().map(|b| b.width() > 0.0).collect();
    norm_bound_axes(f, bx, r, &active, goal)
}

/// As [`norm_bound`], with derivatives taken only along the flagged axes.
pub fn norm_bound_axes(f: &AlgFunc, bx: &[Interval], r: usize, axes: &[bool], goal: NormGoal) -> RCertificate {
    let active: Vec<bool> = bx.iter().zip(axes).map(|(b, a)| *a && b.width() > 0.0).collect();
    let monos = multi_indices(&active, r);
    let order_of: Vec<usize> = monos.iter().map(|m| m.iter().sum::<u32>() as usize).collect();
    if f.is_closed() {
        let v = f.enclosure();
        let mut per_order = vec![0.0; r + 1];
        per_order[0] = v.mag();
        return RCertificate { order: r, bound: v.mag(), lower: v.mig(), per_order, converged: true };
    }
    let mut heap = BinaryHeap::new();
    let mut lower = 0.0f64;
    let affine: Vec<bool> = bx
        .iter()
        .enumerate()
        .map(|(i, b)| b.width() > 0.0 && is_identically_zero(&f.deriv(i).deriv(i)))
        .collect();
    let e = eval_box(f, bx, r, &monos, &affine);
    lower = lower.max(max_of(&e.lower));
    heap.push(Entry { key: max_of(&e.upper), bx: bx.to_vec(), upper: e.upper });
    let mut used = 1usize;
    let mut converged = true;
    loop {
        let top = heap.peek().expect("nonempty").key;
        if let Some(t) = goal.target {
            if top <= t || lower > t {
                break;
            }
        } else if top - lower <= goal.rel_gap * lower.max(1e-300) || top == lower {
            break;
        }
        if used >= goal.budget {
            converged = false;
            break;
        }
        let Entry { bx: b, .. } = heap.pop().expect("nonempty");
        let Some(k) = (0..b.len()).filter(|&i| b[i].width() > 0.0).max_by(|&i, &j| b[i].width().total_cmp(&b[j].width())) else {
            converged = false;
            heap.push(Entry { key: top, bx: b, upper: vec![top] });
            break;
        };
        if b[k].width() < 1e-13 {
            converged = false;
            heap.push(Entry { key: top, bx: b, upper: vec![top] });
            break;
        }
        let (l, h) = b[k].bisect();
        for half in [l, h] {
            let mut nb = b.clone();
            nb[k] = half;
            let e = eval_box(f, &nb, r, &monos, &affine);
            lower = lower.max(max_of(&e.lower));
            used += 1;
            heap.push(Entry { key: max_of(&e.upper), bx: nb, upper: e.upper });
        }
    }
    let mut per_order = vec![0.0f64; r + 1];
    for e in heap.iter() {
        if e.upper.len() == monos.len() {
            for (i, u) in e.upper.iter().enumerate() {
                per_order[order_of[i]] = per_order[order_of[i]].max(*u);
            }
        } else {
            for p in per_order.iter_mut() {
                *p = p.max(e.key);
            }
        }
    }
    let bound = heap.iter().map(|e| e.key).fold(0.0, f64::max);
    RCertificate { order: r, bound, lower, per_order, converged }
}

/// Certified norm with a tight gap.
pub fn cr_norm_box(f: &AlgFunc, bx: &[Interval], r: usize) -> RCertificate {
    norm_bound(f, bx, r, NormGoal::default())
}

/// Certify `||f||_r <= 1` on the box.
pub fn certify_r_function(f: &AlgFunc, bx: &[Interval], r: usize, budget: usize) -> RCertificate {
    norm_bound(f, bx, r, NormGoal { target: Some(1.0 + ROUNDING_SLACK), rel_gap: 0.0, budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use realalg::parse_expr;

    #[test]
    fn cube_norm() {
        let f = parse_expr("(pow x 3)").unwrap();
        let c = cr_norm_box(&f, &[Interval::UNIT], 3);
        assert!((c.bound - 3.0).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn smoothstep_first_order() {
        let f = parse_expr("(poly [0 0 3 -2])").unwrap();
        let c = cr_norm_box(&f, &[Interval::UNIT], 1);
        assert!((c.bound - 1.5).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn value_reaching_one_certifies() {
        let f = parse_expr("(poly [0 0 3 -2])").unwrap();
        let g = f.compose1(&parse_expr("(mul 1/3 x)").unwrap());
        let c = certify_r_function(&g, &[Interval::UNIT], 1, 2000);
        assert!(c.is_r_function(), "{c:?}");
        let c = certify_r_function(&parse_expr("x").unwrap(), &[Interval::UNIT], 4, 10);
        assert!(c.is_r_function());
    }
}
