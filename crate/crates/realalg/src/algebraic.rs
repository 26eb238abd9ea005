//! Real algebraic numbers as (squarefree polynomial, isolating interval).

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use num_traits::Zero;

use crate::interval::Interval;
use crate::rational::{enclose, fmt_q, qi, to_f64, Q};
use crate::roots::{bisect_once, isolate_roots, IsolatingInterval, Sturm};
use crate::upoly::UPoly;

#[derive(Clone)]
pub struct AlgebraicNumber {
    poly: UPoly,
    iv: IsolatingInterval,
    cache: OnceLock<Interval>,
}

impl PartialEq for AlgebraicNumber {
    fn eq(&self, o: &Self) -> bool {
        self.poly == o.poly && self.iv == o.iv
    }
}
impl Eq for AlgebraicNumber {}

impl std::hash::Hash for AlgebraicNumber {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.poly.hash(h);
        self.iv.hash(h);
    }
}

impl fmt::Debug for AlgebraicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root of {:?} in ({}, {})", self.poly, fmt_q(&self.iv.lo), fmt_q(&self.iv.hi))
    }
}

impl AlgebraicNumber {
    /// `poly` is made squarefree; `(lo, hi)` must contain exactly one of its roots.
    pub fn new(poly: &UPoly, lo: Q, hi: Q) -> Self {
        let poly = poly.squarefree();
        AlgebraicNumber { poly, iv: IsolatingInterval { lo, hi }, cache: OnceLock::new() }
    }

    pub fn poly(&self) -> &UPoly {
        &self.poly
    }

    pub fn lo(&self) -> &Q {
        &self.iv.lo
    }

    pub fn hi(&self) -> &Q {
        &self.iv.hi
    }

    pub fn refined(&self, width: &Q) -> AlgebraicNumber {
        let st = Sturm::new(&self.poly);
        let mut iv = self.iv.clone();
        while !iv.is_exact() && &iv.width() > width {
            iv = bisect_once(&self.poly, &st, iv);
        }
        AlgebraicNumber { poly: self.poly.clone(), iv, cache: OnceLock::new() }
    }

    /// Tight float enclosure.
    pub fn enclosure(&self) -> Interval {
        *self.cache.get_or_init(|| {
            let st = Sturm::new(&self.poly);
            let mut iv = self.iv.clone();
            for _ in 0..400 {
                if iv.is_exact() {
                    return enclose(&iv.lo);
                }
                let e = enclose(&iv.lo).hull(&enclose(&iv.hi));
                if e.width() <= 4.0 * f64::EPSILON * e.mag().max(1e-300) {
                    return e;
                }
                iv = bisect_once(&self.poly, &st, iv);
            }
            enclose(&iv.lo).hull(&enclose(&iv.hi))
        })
    }

    /// Sign of `q` at this number, decided exactly.
    pub fn sign_of(&self, q: &UPoly) -> i32 {
        let g = self.poly.gcd(q);
        if g.deg() > 0 {
            let st = Sturm::new(&g.squarefree());
            if st.count_open(&self.iv.lo, &self.iv.hi) > 0 {
                return 0;
            }
        }
        let qs = q.squarefree();
        let stq = Sturm::new(&qs);
        let st = Sturm::new(&self.poly);
        let mut iv = self.iv.clone();
        loop {
            if iv.is_exact() {
                return q.sign_at(&iv.lo);
            }
            if q.sign_at(&iv.lo) != 0 && q.sign_at(&iv.hi) != 0 && (qs.deg() == 0 || stq.count_open(&iv.lo, &iv.hi) == 0) {
                return q.sign_at(&iv.lo);
            }
            iv = bisect_once(&self.poly, &st, iv);
        }
    }
}

/// A real number that is either rational or algebraic.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum RealNum {
    Rat(Q),
    Alg(AlgebraicNumber),
}

impl RealNum {
    /// Builds from an isolating interval of a root of `p`.
    pub fn from_isolating(p: &UPoly, iv: &IsolatingInterval) -> RealNum {
        if iv.is_exact() {
            RealNum::Rat(iv.lo.clone())
        } else {
            let sp = p.squarefree();
            if sp.deg() == 1 {
                return RealNum::Rat(-sp.coeff(0) / sp.coeff(1));
            }
            RealNum::Alg(AlgebraicNumber::new(&sp, iv.lo.clone(), iv.hi.clone()))
        }
    }

    pub fn enclosure(&self) -> Interval {
        match self {
            RealNum::Rat(q) => enclose(q),
            RealNum::Alg(a) => a.enclosure(),
        }
    }

    pub fn approx(&self) -> f64 {
        match self {
            RealNum::Rat(q) => to_f64(q),
            RealNum::Alg(a) => a.enclosure().mid(),
        }
    }

    pub fn as_rational(&self) -> Option<&Q> {
        match self {
            RealNum::Rat(q) => Some(q),
            RealNum::Alg(_) => None,
        }
    }

    /// Rational bracket `[lo, hi]` (degenerate for rationals).
    pub fn bracket(&self) -> (Q, Q) {
        match self {
            RealNum::Rat(q) => (q.clone(), q.clone()),
            RealNum::Alg(a) => (a.lo().clone(), a.hi().clone()),
        }
    }

    fn refine(&self) -> RealNum {
        match self {
            RealNum::Rat(_) => self.clone(),
            RealNum::Alg(a) => {
                let w = (a.hi() - a.lo()) / qi(4);
                RealNum::Alg(a.refined(&w))
            }
        }
    }

    /// Sign of a polynomial at this number.
    pub fn sign_of(&self, p: &UPoly) -> i32 {
        match self {
            RealNum::Rat(q) => p.sign_at(q),
            RealNum::Alg(a) => a.sign_of(p),
        }
    }

    /// Exact comparison.
    pub fn cmp_exact(&self, o: &RealNum) -> Ordering {
        match (self, o) {
            (RealNum::Rat(a), RealNum::Rat(b)) => a.cmp(b),
            (RealNum::Alg(a), RealNum::Rat(q)) => {
                // sign of (alpha - q)
                let lin = UPoly::linear_root(q.clone());
                if a.sign_of(&lin) == 0 {
                    return Ordering::Equal;
                }
                let mut cur = self.clone();
                loop {
                    let (lo, hi) = cur.bracket();
                    if &hi <= q {
                        return Ordering::Less;
                    }
                    if &lo >= q {
                        return Ordering::Greater;
                    }
                    cur = cur.refine();
                }
            }
            (RealNum::Rat(_), RealNum::Alg(_)) => o.cmp_exact(self).reverse(),
            (RealNum::Alg(a), RealNum::Alg(b)) => {
                let lo = a.lo().max(b.lo()).clone();
                let hi = a.hi().min(b.hi()).clone();
                if lo < hi {
                    let g = a.poly().gcd(b.poly());
                    if g.deg() > 0 && !isolate_roots(&g, &lo, &hi).map(|v| v.is_empty()).unwrap_or(true) {
                        return Ordering::Equal;
                    }
                }
                let (mut x, mut y) = (self.clone(), o.clone());
                loop {
                    let (xl, xh) = x.bracket();
                    let (yl, yh) = y.bracket();
                    if xh <= yl {
                        return Ordering::Less;
                    }
                    if yh <= xl {
                        return Ordering::Greater;
                    }
                    x = x.refine();
                    y = y.refine();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RealNum::Rat(q) if q.is_zero())
    }
}

/// All roots of `p` in `(lo, hi)` as real numbers, increasing.
pub fn real_roots(p: &UPoly, lo: &Q, hi: &Q) -> Vec<RealNum> {
    match isolate_roots(p, lo, hi) {
        Ok(v) => v.iter().map(|iv| RealNum::from_isolating(p, iv)).collect(),
        Err(_) => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn sqrt_half_compare() {
        let p = UPoly::from_ints(&[-1, 0, 2]);
        let r = real_roots(&p, &qi(0), &qi(1));
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].cmp_exact(&RealNum::Rat(q(7, 10))), Ordering::Greater);
        assert_eq!(r[0].cmp_exact(&RealNum::Rat(q(71, 100))), Ordering::Less);
        let e = r[0].enclosure();
        assert!(e.contains(std::f64::consts::FRAC_1_SQRT_2));
    }

    #[test]
    fn equal_roots_from_different_polys() {
        let p = UPoly::from_ints(&[-1, 0, 2]);
        let p2 = p.mul(&UPoly::from_ints(&[-1, 0, 3]));
        let a = real_roots(&p, &qi(0), &qi(1))[0].clone();
        let b = real_roots(&p2, &qi(0), &qi(1));
        assert!(b.iter().any(|x| x.cmp_exact(&a) == Ordering::Equal));
    }

    #[test]
    fn sign_of_poly_at_root() {
        let p = UPoly::from_ints(&[-1, 0, 2]);
        let a = real_roots(&p, &qi(0), &qi(1))[0].clone();
        assert_eq!(a.sign_of(&UPoly::from_ints(&[-1, 0, 2])), 0);
        assert_eq!(a.sign_of(&UPoly::from_ints(&[-1, 2])), 1);
    }
}
