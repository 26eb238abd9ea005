//! Canonical forms: expressions expanded into rational combinations of atoms.
//!
//! Atoms are coordinates, algebraic constants, closed roots, non-polynomial
//! quotients, inverse branches and sections. Two expressions with equal
//! canonical forms are equal as functions.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::expr::{AlgFunc, Node};
use crate::rational::Q;

type Mono = Vec<(usize, u32)>;

#[derive(Clone, Default)]
struct APoly(BTreeMap<Mono, Q>);

impl APoly {
    fn constant(c: Q) -> APoly {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(vec![], c);
        }
        APoly(m)
    }

    fn atom(i: usize) -> APoly {
        let mut m = BTreeMap::new();
        m.insert(vec![(i, 1)], Q::one());
        APoly(m)
    }

    fn as_constant(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => self.0.get(&vec![]).cloned(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.0.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.remove(&m);
        }
    }

    fn add(&self, o: &APoly, sign: bool) -> APoly {
        let mut r = self.clone();
        for (m, c) in &o.0 {
            r.add_term(m.clone(), if sign { c.clone() } else { -c });
        }
        r
    }

    fn mul(&self, o: &APoly) -> APoly {
        let mut r = APoly::default();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &o.0 {
                r.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        r
    }

    fn pow(&self, k: u32) -> APoly {
        let mut r = APoly::constant(Q::one());
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut m: BTreeMap<usize, u32> = a.iter().cloned().collect();
    for (i, k) in b {
        *m.entry(*i).or_insert(0) += k;
    }
    m.into_iter().collect()
}

struct Ctx {
    atoms: Vec<AlgFunc>,
    index: HashMap<AlgFunc, usize>,
    memo: HashMap<usize, APoly>,
}

impl Ctx {
    fn atom(&mut self, e: AlgFunc) -> APoly {
        if let Some(&i) = self.index.get(&e) {
            return APoly::atom(i);
        }
        let i = self.atoms.len();
        self.atoms.push(e.clone());
        self.index.insert(e, i);
        APoly::atom(i)
    }

    fn conv(&mut self, e: &AlgFunc) -> APoly {
        if let Some(p) = self.memo.get(&e.id()) {
            return p.clone();
        }
        let r = match e.node() {
            Node::Rat(q) => APoly::constant(q.clone()),
            Node::Var(_) | Node::Alg(_) | Node::Root(_) => self.atom(e.clone()),
            Node::Add(a, b) => self.conv(a).add(&self.conv(b), true),
            Node::Sub(a, b) => self.conv(a).add(&self.conv(b), false),
            Node::Mul(a, b) => self.conv(a).mul(&self.conv(b)),
            Node::Neg(a) => APoly::default().add(&self.conv(a), false),
            Node::Pow(a, k) => self.conv(a).pow(*k),
            Node::Poly(p, a) => {
                let x = self.conv(a);
                let mut acc = APoly::default();
                for c in p.coeffs().iter().rev() {
                    acc = acc.mul(&x).add(&APoly::constant(c.clone()), true);
                }
                acc
            }
            Node::Div(a, b) => {
                let pb = self.conv(b);
                match pb.as_constant() {
                    Some(c) if !c.is_zero() => self.conv(a).mul(&APoly::constant(c.recip())),
                    _ => {
                        let na = canonical(a);
                        let nb = canonical(b);
                        if na == nb {
                            APoly::constant(Q::one())
                        } else {
                            self.atom(na.div(&nb))
                        }
                    }
                }
            }
            Node::Inv(br, a) => {
                let na = canonical(a);
                match inverse_cancel(br, a, &na) {
                    Some(z) => self.conv(&z),
                    None => self.atom(AlgFunc::inv(br, &na)),
                }
            }
            Node::Section(s, a) => {
                let na = canonical(a);
                self.atom(AlgFunc::section(s, &na))
            }
        };
        self.memo.insert(e.id(), r.clone());
        r
    }
}

impl Ctx {
    /// Use `f(inv_f(z)) = z` for polynomial branches: powers of an inverse atom
    /// at or above the degree of its forward polynomial are rewritten.
    fn reduce_inverses(&mut self, mut p: APoly) -> APoly {
        let mut i = 0;
        while i < self.atoms.len() {
            let atom = self.atoms[i].clone();
            i += 1;
            let Node::Inv(br, a) = atom.node() else { continue };
            let Some(f) = br.f.to_upoly(0) else { continue };
            let n = f.deg() as u32;
            if n == 0 {
                continue;
            }
            let w = i - 1;
            let mut rel = self.conv(a);
            for j in 0..n {
                rel = rel.add(&APoly::atom(w).pow(j).mul(&APoly::constant(f.coeff(j as usize))), false);
            }
            let rel = rel.mul(&APoly::constant(f.coeff(n as usize).recip()));
            for _ in 0..64 {
                let hit = p.0.iter().find(|(m, _)| m.iter().any(|&(v, k)| v == w && k >= n)).map(|(m, c)| (m.clone(), c.clone()));
                let Some((m, c)) = hit else { break };
                p.0.remove(&m);
                let rest: Mono = m
                    .iter()
                    .filter_map(|&(v, k)| if v == w { (k > n).then_some((v, k - n)) } else { Some((v, k)) })
                    .collect();
                let mut t = APoly::default();
                t.add_term(rest, c);
                p = p.add(&t.mul(&rel), true);
            }
        }
        p
    }
}

/// Recognise `g(f(z)) = z` for the inverse `g` of `f`.
fn inverse_cancel(br: &crate::expr::InvBranch, raw: &AlgFunc, canon_arg: &AlgFunc) -> Option<AlgFunc> {
    if let (Some(y), Some(f), Some(lo), Some(hi)) =
        (canon_arg.as_rational(), br.f.to_upoly(0), br.lo.as_rational(), br.hi.as_rational())
    {
        // Rational preimage under a polynomial branch.
        let g = f.sub(&crate::upoly::UPoly::constant(y.clone()));
        if g.is_zero() {
            return None;
        }
        if g.eval(lo).is_zero() {
            return Some(AlgFunc::rat(lo.clone()));
        }
        if g.eval(hi).is_zero() {
            return Some(AlgFunc::rat(hi.clone()));
        }
        if let Ok(rs) = crate::roots::isolate_roots(&g, lo, hi) {
            if rs.len() == 1 && rs[0].is_exact() {
                return Some(AlgFunc::rat(rs[0].lo.clone()));
            }
        }
    }
    for z in [&br.lo, &br.hi] {
        if canonical(&br.f.compose1(z)) == *canon_arg {
            return Some(z.clone());
        }
    }
    let mut binding = None;
    if match_pattern(&br.f, raw, &mut binding) {
        let z = binding?;
        if z.is_closed() {
            let e = z.enclosure();
            let lo = br.lo.enclosure().lo;
            let hi = br.hi.enclosure().hi;
            if e.lo >= lo && e.hi <= hi {
                return Some(z);
            }
        }
    }
    None
}

/// Structural match of `pat` (with `x1` as the wildcard) against `t`.
fn match_pattern(pat: &AlgFunc, t: &AlgFunc, bind: &mut Option<AlgFunc>) -> bool {
    if let Node::Var(0) = pat.node() {
        return match bind {
            Some(b) => b == t,
            None => {
                *bind = Some(t.clone());
                true
            }
        };
    }
    if pat.is_closed() {
        return pat == t;
    }
    match (pat.node(), t.node()) {
        (Node::Add(a, b), Node::Add(c, d))
        | (Node::Sub(a, b), Node::Sub(c, d))
        | (Node::Mul(a, b), Node::Mul(c, d))
        | (Node::Div(a, b), Node::Div(c, d)) => match_pattern(a, c, bind) && match_pattern(b, d, bind),
        (Node::Neg(a), Node::Neg(c)) => match_pattern(a, c, bind),
        (Node::Pow(a, k), Node::Pow(c, j)) => k == j && match_pattern(a, c, bind),
        (Node::Poly(p, a), Node::Poly(q, c)) => p == q && match_pattern(a, c, bind),
        (Node::Inv(b1, a), Node::Inv(b2, c)) => b1 == b2 && match_pattern(a, c, bind),
        (Node::Section(s1, a), Node::Section(s2, c)) => s1 == s2 && match_pattern(a, c, bind),
        _ => false,
    }
}

fn atom_key(e: &AlgFunc) -> (u8, u64, String) {
    let rank = match e.node() {
        Node::Var(_) => 0,
        Node::Alg(_) | Node::Root(_) => 1,
        _ => 2,
    };
    let var = if let Node::Var(i) = e.node() { *i as u64 } else { e.structural_hash() };
    (rank, var, if rank == 2 { crate::sexpr::to_sexpr(e) } else { String::new() })
}

pub(crate) fn canonical(e: &AlgFunc) -> AlgFunc {
    if e.as_rational().is_some() || matches!(e.node(), Node::Var(_)) {
        return e.clone();
    }
    let mut ctx = Ctx { atoms: vec![], index: HashMap::new(), memo: HashMap::new() };
    let p = ctx.conv(e);
    let p = ctx.reduce_inverses(p);
    // Order atoms deterministically, then rebuild.
    let mut order: Vec<usize> = (0..ctx.atoms.len()).collect();
    order.sort_by_key(|&i| atom_key(&ctx.atoms[i]));
    let mut rank = vec![0; order.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut terms: Vec<(Mono, Q)> = p
        .0
        .into_iter()
        .map(|(m, c)| {
            let mut m2: Mono = m.into_iter().map(|(i, k)| (rank[i], k)).collect();
            m2.sort();
            (m2, c)
        })
        .collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    let mut acc = AlgFunc::zero();
    for (m, c) in terms {
        let mut t = AlgFunc::one();
        for (r, k) in m {
            t = t.mul(&ctx.atoms[order[r]].pow(k));
        }
        acc = acc.add(&AlgFunc::rat(c).mul(&t));
    }
    acc
}

#[cfg(test)]
mod tests {
    use crate::expr::{AlgFunc, InvBranch};
    use crate::rational::q;

    #[test]
    fn affine_endpoint_matches() {
        let a = AlgFunc::root(&AlgFunc::var(0).pow(2).sub(&AlgFunc::rat(q(1, 3))), q(0, 1), q(1, 1));
        let b = AlgFunc::rat(q(3, 4));
        let u = AlgFunc::var(0);
        let map = a.add(&b.sub(&a).mul(&u));
        let at1 = map.compose1(&AlgFunc::one()).canonical();
        assert_eq!(at1, b.canonical());
        let at0 = map.compose1(&AlgFunc::zero()).canonical();
        assert_eq!(at0, a.canonical());
    }

    #[test]
    fn band_endpoints() {
        let x = AlgFunc::var(0);
        let t = AlgFunc::var(1);
        let f = x.pow(2);
        let g = x.clone();
        let band = AlgFunc::one().sub(&t).mul(&f).add(&t.mul(&g));
        let top = band.subst(&[x.clone(), AlgFunc::one()]).canonical();
        assert_eq!(top, g.canonical());
    }

    #[test]
    fn inverse_of_forward_cancels() {
        let x = AlgFunc::var(0);
        let f = x.pow(3).add(&x);
        let br = InvBranch::new(f.clone(), AlgFunc::zero(), AlgFunc::one(), true);
        let z = AlgFunc::rat(q(1, 3));
        let e = AlgFunc::inv(&br, &f.compose1(&z));
        assert_eq!(e.canonical(), z);
        let top = AlgFunc::inv(&br, &f.compose1(&AlgFunc::one()));
        assert_eq!(top.canonical(), AlgFunc::one());
    }

    #[test]
    fn forward_of_inverse_cancels() {
        let x = AlgFunc::var(0);
        let br = InvBranch::new(x.pow(2), AlgFunc::zero(), AlgFunc::one(), true);
        let w = AlgFunc::inv(&br, &AlgFunc::rat(q(1, 3)));
        assert_eq!(w.pow(2).canonical(), AlgFunc::rat(q(1, 3)));
        let y = AlgFunc::inv(&br, &x);
        let e = y.pow(3).sub(&x.mul(&y));
        assert!(e.canonical().is_zero());
    }

    #[test]
    fn expansion_identity() {
        let x = AlgFunc::var(0);
        let lhs = x.add(&AlgFunc::one()).pow(2);
        let rhs = x.pow(2).add(&AlgFunc::int(2).mul(&x)).add(&AlgFunc::one());
        assert_eq!(lhs.canonical(), rhs.canonical());
    }
}
