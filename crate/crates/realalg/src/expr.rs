//! Expression trees for semialgebraic functions.
//!
//! Nodes are reference counted and shared, so substitution and
//! differentiation produce DAGs; every traversal memoises by node address.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Signed, Zero};

use crate::algebraic::{AlgebraicNumber, RealNum};
use crate::interval::Interval;
use crate::mpoly::MPoly;
use crate::rational::{qi, Q};
use crate::upoly::UPoly;

#[derive(Clone)]
pub struct AlgFunc(pub(crate) Arc<NodeData>);

pub struct NodeData {
    pub(crate) node: Node,
    hash: u64,
    nvars: usize,
    pub(crate) value: OnceLock<Interval>,
}

#[derive(Clone, PartialEq)]
pub enum Node {
    Rat(Q),
    Alg(AlgebraicNumber),
    Var(usize),
    Add(AlgFunc, AlgFunc),
    Sub(AlgFunc, AlgFunc),
    Mul(AlgFunc, AlgFunc),
    Div(AlgFunc, AlgFunc),
    Neg(AlgFunc),
    Pow(AlgFunc, u32),
    /// Univariate polynomial applied to an argument.
    Poly(UPoly, AlgFunc),
    /// Monotone inverse branch applied to an argument.
    Inv(Arc<InvBranch>, AlgFunc),
    /// The unique root of a univariate function inside a rational bracket.
    Root(Arc<RootSpec>),
    /// The `index`-th root in `(0,1)` of `poly(x, .)` at `x = arg`.
    Section(Arc<SectionSpec>, AlgFunc),
}

/// Inverse of `f` (a function of `x1`) restricted to `(lo, hi)`, where `f` is strictly monotone.
pub struct InvBranch {
    pub f: AlgFunc,
    pub lo: AlgFunc,
    pub hi: AlgFunc,
    pub increasing: bool,
    pub(crate) cache: Mutex<HashMap<(u64, bool), f64>>,
}

impl PartialEq for InvBranch {
    fn eq(&self, o: &Self) -> bool {
        self.increasing == o.increasing && self.f == o.f && self.lo == o.lo && self.hi == o.hi
    }
}

impl InvBranch {
    pub fn new(f: AlgFunc, lo: AlgFunc, hi: AlgFunc, increasing: bool) -> Arc<InvBranch> {
        Arc::new(InvBranch { f, lo, hi, increasing, cache: Mutex::new(HashMap::new()) })
    }
}

#[derive(PartialEq)]
pub struct RootSpec {
    pub f: AlgFunc,
    pub lo: Q,
    pub hi: Q,
}

pub struct SectionSpec {
    pub poly: MPoly,
    pub index: usize,
    pub(crate) cache: Mutex<HashMap<u64, (f64, f64)>>,
}

impl PartialEq for SectionSpec {
    fn eq(&self, o: &Self) -> bool {
        self.index == o.index && self.poly == o.poly
    }
}

impl SectionSpec {
    pub fn new(poly: MPoly, index: usize) -> Arc<SectionSpec> {
        Arc::new(SectionSpec { poly, index, cache: Mutex::new(HashMap::new()) })
    }
}

impl PartialEq for AlgFunc {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.0, &o.0) || (self.0.hash == o.0.hash && self.0.node == o.0.node)
    }
}
impl Eq for AlgFunc {}

impl Hash for AlgFunc {
    fn hash<H: Hasher>(&self, h: &mut H) {
        h.write_u64(self.0.hash);
    }
}

fn node_hash(n: &Node) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    match n {
        Node::Rat(q) => (0u8, q).hash(&mut h),
        Node::Alg(a) => (1u8, a).hash(&mut h),
        Node::Var(i) => (2u8, i).hash(&mut h),
        Node::Add(a, b) => (3u8, a.0.hash, b.0.hash).hash(&mut h),
        Node::Sub(a, b) => (4u8, a.0.hash, b.0.hash).hash(&mut h),
        Node::Mul(a, b) => (5u8, a.0.hash, b.0.hash).hash(&mut h),
        Node::Div(a, b) => (6u8, a.0.hash, b.0.hash).hash(&mut h),
        Node::Neg(a) => (7u8, a.0.hash).hash(&mut h),
        Node::Pow(a, k) => (8u8, a.0.hash, k).hash(&mut h),
        Node::Poly(p, a) => (9u8, p, a.0.hash).hash(&mut h),
        Node::Inv(b, a) => (10u8, b.f.0.hash, b.lo.0.hash, b.hi.0.hash, b.increasing, a.0.hash).hash(&mut h),
        Node::Root(r) => (11u8, r.f.0.hash, &r.lo, &r.hi).hash(&mut h),
        Node::Section(s, a) => (12u8, &s.poly, s.index, a.0.hash).hash(&mut h),
    }
    h.finish()
}

fn node_nvars(n: &Node) -> usize {
    match n {
        Node::Rat(_) | Node::Alg(_) | Node::Root(_) => 0,
        Node::Var(i) => i + 1,
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.nvars().max(b.nvars()),
        Node::Neg(a) | Node::Pow(a, _) | Node::Poly(_, a) | Node::Inv(_, a) | Node::Section(_, a) => a.nvars(),
    }
}

impl std::fmt::Debug for AlgFunc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", crate::sexpr::to_sexpr(self))
    }
}

impl std::fmt::Display for AlgFunc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", crate::sexpr::to_sexpr(self))
    }
}

impl AlgFunc {
    pub fn from_node(node: Node) -> AlgFunc {
        let hash = node_hash(&node);
        let nvars = node_nvars(&node);
        AlgFunc(Arc::new(NodeData { node, hash, nvars, value: OnceLock::new() }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    /// One more than the largest coordinate index used.
    pub fn nvars(&self) -> usize {
        self.0.nvars
    }

    pub fn is_closed(&self) -> bool {
        self.0.nvars == 0
    }

    pub fn as_rational(&self) -> Option<&Q> {
        match self.node() {
            Node::Rat(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_rat(&self, v: i64) -> bool {
        self.as_rational().is_some_and(|q| *q == qi(v))
    }

    pub fn is_zero(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_zero())
    }

    // ---- constructors -------------------------------------------------

    pub fn rat(q: Q) -> AlgFunc {
        AlgFunc::from_node(Node::Rat(q))
    }

    pub fn int(v: i64) -> AlgFunc {
        AlgFunc::rat(qi(v))
    }

    pub fn zero() -> AlgFunc {
        AlgFunc::int(0)
    }

    pub fn one() -> AlgFunc {
        AlgFunc::int(1)
    }

    pub fn var(i: usize) -> AlgFunc {
        AlgFunc::from_node(Node::Var(i))
    }

    pub fn real(r: &RealNum) -> AlgFunc {
        match r {
            RealNum::Rat(q) => AlgFunc::rat(q.clone()),
            RealNum::Alg(a) => AlgFunc::from_node(Node::Alg(a.clone())),
        }
    }

    pub fn add(&self, o: &AlgFunc) -> AlgFunc {
        match (self.as_rational(), o.as_rational()) {
            (Some(a), Some(b)) => AlgFunc::rat(a + b),
            (Some(a), _) if a.is_zero() => o.clone(),
            (_, Some(b)) if b.is_zero() => self.clone(),
            (_, Some(b)) if b.is_negative() => AlgFunc::from_node(Node::Sub(self.clone(), AlgFunc::rat(-b))),
            _ => match (self.node(), o.node()) {
                // a + (b - a) and (b - a) + a
                (_, Node::Sub(b, a)) if a == self => b.clone(),
                (Node::Sub(b, a), _) if a == o => b.clone(),
                _ => AlgFunc::from_node(Node::Add(self.clone(), o.clone())),
            },
        }
    }

    pub fn sub(&self, o: &AlgFunc) -> AlgFunc {
        match (self.as_rational(), o.as_rational()) {
            (Some(a), Some(b)) => AlgFunc::rat(a - b),
            (_, Some(b)) if b.is_zero() => self.clone(),
            (Some(a), _) if a.is_zero() => o.neg(),
            _ if self == o => AlgFunc::zero(),
            _ => AlgFunc::from_node(Node::Sub(self.clone(), o.clone())),
        }
    }

    pub fn mul(&self, o: &AlgFunc) -> AlgFunc {
        match (self.as_rational(), o.as_rational()) {
            (Some(a), Some(b)) => AlgFunc::rat(a * b),
            (Some(a), _) if a.is_zero() => AlgFunc::zero(),
            (_, Some(b)) if b.is_zero() => AlgFunc::zero(),
            (Some(a), _) if a.is_one() => o.clone(),
            (_, Some(b)) if b.is_one() => self.clone(),
            (_, Some(_)) => AlgFunc::from_node(Node::Mul(o.clone(), self.clone())),
            _ => AlgFunc::from_node(Node::Mul(self.clone(), o.clone())),
        }
    }

    pub fn div(&self, o: &AlgFunc) -> AlgFunc {
        match (self.as_rational(), o.as_rational()) {
            (_, Some(b)) if b.is_zero() => panic!("division by the constant zero"),
            (Some(a), Some(b)) => AlgFunc::rat(a / b),
            (Some(a), _) if a.is_zero() => AlgFunc::zero(),
            (_, Some(b)) if b.is_one() => self.clone(),
            (_, Some(b)) => AlgFunc::rat(b.recip()).mul(self),
            _ if self == o => AlgFunc::one(),
            _ => AlgFunc::from_node(Node::Div(self.clone(), o.clone())),
        }
    }

    pub fn neg(&self) -> AlgFunc {
        match self.node() {
            Node::Rat(a) => AlgFunc::rat(-a),
            Node::Neg(a) => a.clone(),
            _ => AlgFunc::from_node(Node::Neg(self.clone())),
        }
    }

    pub fn pow(&self, k: u32) -> AlgFunc {
        match (k, self.as_rational()) {
            (0, _) => AlgFunc::one(),
            (1, _) => self.clone(),
            (_, Some(a)) => AlgFunc::rat(num_traits::pow(a.clone(), k as usize)),
            _ => AlgFunc::from_node(Node::Pow(self.clone(), k)),
        }
    }

    /// `p(self)`
    pub fn apply_poly(&self, p: &UPoly) -> AlgFunc {
        if p.is_constant() {
            return AlgFunc::rat(p.coeff(0));
        }
        if let Some(a) = self.as_rational() {
            return AlgFunc::rat(p.eval(a));
        }
        if p.deg() == 1 {
            return AlgFunc::rat(p.coeff(0)).add(&AlgFunc::rat(p.coeff(1)).mul(self));
        }
        AlgFunc::from_node(Node::Poly(p.clone(), self.clone()))
    }

    /// `p + q * self`
    pub fn affine(&self, p: &AlgFunc, q: &AlgFunc) -> AlgFunc {
        p.add(&q.mul(self))
    }

    pub fn poly(p: &UPoly, var: usize) -> AlgFunc {
        AlgFunc::var(var).apply_poly(p)
    }

    /// Polynomial in several coordinates given as expressions.
    pub fn mpoly(p: &MPoly, args: &[AlgFunc]) -> AlgFunc {
        let mut acc = AlgFunc::zero();
        for (e, c) in p.terms() {
            let mut t = AlgFunc::rat(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&args[i].pow(k));
                }
            }
            acc = acc.add(&t);
        }
        acc
    }

    pub fn inv(branch: &Arc<InvBranch>, arg: &AlgFunc) -> AlgFunc {
        AlgFunc::from_node(Node::Inv(branch.clone(), arg.clone()))
    }

    pub fn root(f: &AlgFunc, lo: Q, hi: Q) -> AlgFunc {
        AlgFunc::from_node(Node::Root(Arc::new(RootSpec { f: f.clone(), lo, hi })))
    }

    pub fn section(spec: &Arc<SectionSpec>, arg: &AlgFunc) -> AlgFunc {
        AlgFunc::from_node(Node::Section(spec.clone(), arg.clone()))
    }

    // ---- structural operations ------------------------------------------

    /// Replace `x_i` by `map[i]`; coordinates beyond `map` are kept.
    pub fn subst(&self, map: &[AlgFunc]) -> AlgFunc {
        let mut memo = HashMap::new();
        self.subst_rec(map, &mut memo)
    }

    fn subst_rec(&self, map: &[AlgFunc], memo: &mut HashMap<usize, AlgFunc>) -> AlgFunc {
        if self.is_closed() {
            return self.clone();
        }
        if let Some(r) = memo.get(&self.id()) {
            return r.clone();
        }
        let r = match self.node() {
            Node::Var(i) => map.get(*i).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(a, b) => a.subst_rec(map, memo).add(&b.subst_rec(map, memo)),
            Node::Sub(a, b) => a.subst_rec(map, memo).sub(&b.subst_rec(map, memo)),
            Node::Mul(a, b) => a.subst_rec(map, memo).mul(&b.subst_rec(map, memo)),
            Node::Div(a, b) => a.subst_rec(map, memo).div(&b.subst_rec(map, memo)),
            Node::Neg(a) => a.subst_rec(map, memo).neg(),
            Node::Pow(a, k) => a.subst_rec(map, memo).pow(*k),
            Node::Poly(p, a) => a.subst_rec(map, memo).apply_poly(p),
            Node::Inv(br, a) => AlgFunc::inv(br, &a.subst_rec(map, memo)),
            Node::Section(s, a) => AlgFunc::section(s, &a.subst_rec(map, memo)),
            Node::Rat(_) | Node::Alg(_) | Node::Root(_) => self.clone(),
        };
        memo.insert(self.id(), r.clone());
        r
    }

    /// Compose a function of one variable with `g`: `self(g)`.
    pub fn compose1(&self, g: &AlgFunc) -> AlgFunc {
        self.subst(std::slice::from_ref(g))
    }

    /// Partial derivative with respect to `x_var`.
    pub fn deriv(&self, var: usize) -> AlgFunc {
        let mut memo = HashMap::new();
        self.deriv_rec(var, &mut memo)
    }

    fn deriv_rec(&self, v: usize, memo: &mut HashMap<usize, AlgFunc>) -> AlgFunc {
        if self.nvars() <= v {
            return AlgFunc::zero();
        }
        if let Some(r) = memo.get(&self.id()) {
            return r.clone();
        }
        let r = match self.node() {
            Node::Var(i) => AlgFunc::int(i64::from(*i == v)),
            Node::Add(a, b) => a.deriv_rec(v, memo).add(&b.deriv_rec(v, memo)),
            Node::Sub(a, b) => a.deriv_rec(v, memo).sub(&b.deriv_rec(v, memo)),
            Node::Mul(a, b) => {
                let da = a.deriv_rec(v, memo);
                let db = b.deriv_rec(v, memo);
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let da = a.deriv_rec(v, memo);
                let db = b.deriv_rec(v, memo);
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.mul(b).sub(&a.mul(&db)).div(&b.pow(2))
                }
            }
            Node::Neg(a) => a.deriv_rec(v, memo).neg(),
            Node::Pow(a, k) => {
                let da = a.deriv_rec(v, memo);
                AlgFunc::int(*k as i64).mul(&a.pow(k - 1)).mul(&da)
            }
            Node::Poly(p, a) => {
                let da = a.deriv_rec(v, memo);
                a.apply_poly(&p.deriv()).mul(&da)
            }
            Node::Inv(br, a) => {
                let da = a.deriv_rec(v, memo);
                let fp = br.f.deriv(0);
                da.div(&fp.compose1(self))
            }
            Node::Section(s, a) => {
                let da = a.deriv_rec(v, memo);
                let px = AlgFunc::mpoly(&s.poly.deriv(0), &[a.clone(), self.clone()]);
                let py = AlgFunc::mpoly(&s.poly.deriv(1), &[a.clone(), self.clone()]);
                px.div(&py).neg().mul(&da)
            }
            Node::Rat(_) | Node::Alg(_) | Node::Root(_) => AlgFunc::zero(),
        };
        memo.insert(self.id(), r.clone());
        r
    }

    /// Iterated partial derivative with multi-index `alpha`.
    pub fn partial(&self, alpha: &[u32]) -> AlgFunc {
        let mut f = self.clone();
        for (i, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                f = f.deriv(i);
            }
        }
        f
    }

    /// Whether `x_var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: usize) -> bool {
        fn walk(e: &AlgFunc, v: usize, seen: &mut std::collections::HashSet<usize>) -> bool {
            if e.nvars() <= v || !seen.insert(e.id()) {
                return false;
            }
            match e.node() {
                Node::Var(i) => *i == v,
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, v, seen) || walk(b, v, seen)
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Poly(_, a) | Node::Inv(_, a) | Node::Section(_, a) => {
                    walk(a, v, seen)
                }
                Node::Rat(_) | Node::Alg(_) | Node::Root(_) => false,
            }
        }
        walk(self, var, &mut std::collections::HashSet::new())
    }

    /// Number of distinct nodes in the DAG.
    pub fn size(&self) -> usize {
        fn walk(e: &AlgFunc, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.id()) {
                return;
            }
            match e.node() {
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Poly(_, a) | Node::Section(_, a) => walk(a, seen),
                Node::Inv(br, a) => {
                    walk(&br.f, seen);
                    walk(a, seen);
                }
                Node::Root(r) => walk(&r.f, seen),
                Node::Rat(_) | Node::Alg(_) | Node::Var(_) => {}
            }
        }
        let mut seen = std::collections::HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    /// True when every node is rational arithmetic on coordinates.
    pub fn is_rational_function(&self) -> bool {
        self.to_ratfun().is_some()
    }

    /// Exact numerator/denominator form for pure rational expressions.
    pub fn to_ratfun(&self) -> Option<(MPoly, MPoly)> {
        let n = self.nvars().max(1);
        let mut memo: HashMap<usize, Option<(MPoly, MPoly)>> = HashMap::new();
        let (a, b) = ratfun_rec(self, n, &mut memo)?;
        Some(reduce_ratfun(a, b))
    }

    /// Polynomial form, if the expression is a polynomial in the coordinates.
    pub fn to_mpoly(&self) -> Option<MPoly> {
        let (a, b) = self.to_ratfun()?;
        let c = b.as_constant()?;
        Some(a.scale(&c.recip()))
    }

    /// Univariate polynomial form in `x_var`, when nothing else occurs.
    pub fn to_upoly(&self, var: usize) -> Option<UPoly> {
        let p = self.to_mpoly()?;
        p.is_univariate_in(var).then(|| p.to_upoly(var))
    }

    /// Canonical form: a sum of rational multiples of products of atoms.
    pub fn canonical(&self) -> AlgFunc {
        crate::canon::canonical(self)
    }
}

fn ratfun_rec(e: &AlgFunc, n: usize, memo: &mut HashMap<usize, Option<(MPoly, MPoly)>>) -> Option<(MPoly, MPoly)> {
    if let Some(r) = memo.get(&e.id()) {
        return r.clone();
    }
    let one = || MPoly::constant(n, Q::one());
    let r = match e.node() {
        Node::Rat(q) => Some((MPoly::constant(n, q.clone()), one())),
        Node::Var(i) => Some((MPoly::var(n, *i), one())),
        Node::Add(a, b) | Node::Sub(a, b) => {
            let (an, ad) = ratfun_rec(a, n, memo)?;
            let (bn, bd) = ratfun_rec(b, n, memo)?;
            let (num, den) = if ad == bd {
                let num = if matches!(e.node(), Node::Add(..)) { an.add(&bn) } else { an.sub(&bn) };
                (num, ad)
            } else {
                let x = an.mul(&bd);
                let y = bn.mul(&ad);
                let num = if matches!(e.node(), Node::Add(..)) { x.add(&y) } else { x.sub(&y) };
                (num, ad.mul(&bd))
            };
            Some((num, den))
        }
        Node::Mul(a, b) => {
            let (an, ad) = ratfun_rec(a, n, memo)?;
            let (bn, bd) = ratfun_rec(b, n, memo)?;
            Some((an.mul(&bn), ad.mul(&bd)))
        }
        Node::Div(a, b) => {
            let (an, ad) = ratfun_rec(a, n, memo)?;
            let (bn, bd) = ratfun_rec(b, n, memo)?;
            if bn.is_zero() {
                return None;
            }
            Some((an.mul(&bd), ad.mul(&bn)))
        }
        Node::Neg(a) => {
            let (an, ad) = ratfun_rec(a, n, memo)?;
            Some((an.neg(), ad))
        }
        Node::Pow(a, k) => {
            let (an, ad) = ratfun_rec(a, n, memo)?;
            Some((an.pow(*k), ad.pow(*k)))
        }
        Node::Poly(p, a) => {
            let (an, ad) = ratfun_rec(a, n, memo)?;
            // Homogenised Horner: sum c_k an^k ad^(d-k) / ad^d
            let d = p.deg() as u32;
            let mut num = MPoly::zero(n);
            for (k, c) in p.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                num = num.add(&an.pow(k as u32).mul(&ad.pow(d - k as u32)).scale(c));
            }
            Some((num, ad.pow(d)))
        }
        _ => None,
    };
    memo.insert(e.id(), r.clone());
    r
}

fn reduce_ratfun(a: MPoly, b: MPoly) -> (MPoly, MPoly) {
    // Normalise constant denominators; full multivariate gcd is not needed here.
    if let Some(c) = b.as_constant() {
        return (a.scale(&c.recip()), MPoly::constant(b.nvars(), Q::one()));
    }
    if a.used_vars() <= 1 && b.used_vars() <= 1 {
        let ua = a.to_upoly(0);
        let ub = b.to_upoly(0);
        let g = ua.gcd(&ub);
        let ua = ua.div_rem(&g).0;
        let ub = ub.div_rem(&g).0;
        let l = ub.lc().recip();
        let n = a.nvars();
        return (MPoly::from_upoly(n, 0, &ua.scale(&l)), MPoly::from_upoly(n, 0, &ub.scale(&l)));
    }
    (a, b)
}

/// Exact identity test for rational expressions: `a * d' == c * b`.
pub fn ratfun_equal(x: &AlgFunc, y: &AlgFunc) -> Option<bool> {
    let (a, b) = x.to_ratfun()?;
    let (c, d) = y.to_ratfun()?;
    let n = a.nvars().max(c.nvars());
    let lhs = a.with_nvars(n).mul(&d.with_nvars(n));
    let rhs = c.with_nvars(n).mul(&b.with_nvars(n));
    Some(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn derivative_of_cubic() {
        let x = AlgFunc::var(0);
        let f = AlgFunc::int(3).mul(&x.pow(2)).sub(&AlgFunc::int(2).mul(&x.pow(3)));
        let d = f.deriv(0);
        let want = AlgFunc::int(6).mul(&x).mul(&AlgFunc::one().sub(&x));
        assert_eq!(ratfun_equal(&d, &want), Some(true));
    }

    #[test]
    fn substitution_shares_nodes() {
        let x = AlgFunc::var(0);
        let f = x.mul(&x).add(&x);
        let g = f.compose1(&AlgFunc::rat(q(1, 2)));
        assert_eq!(g.as_rational(), Some(&q(3, 4)));
    }

    #[test]
    fn ratfun_of_division() {
        let x = AlgFunc::var(0);
        let y = AlgFunc::var(1);
        let f = y.div(&x.add(&AlgFunc::one()));
        let (n, d) = f.to_ratfun().unwrap();
        assert_eq!(n.total_degree(), 1);
        assert_eq!(d.total_degree(), 1);
        assert!(f.to_mpoly().is_none());
    }

    #[test]
    fn hash_consistent_with_eq() {
        let a = AlgFunc::var(0).add(&AlgFunc::int(2));
        let b = AlgFunc::var(0).add(&AlgFunc::int(2));
        assert_eq!(a, b);
        assert_eq!(a.structural_hash(), b.structural_hash());
    }
}
