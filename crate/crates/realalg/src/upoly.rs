//! Dense univariate polynomials over the rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::interval::Interval;
use crate::rational::{enclose, fmt_q, qi, Q};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct UPoly {
    c: Vec<Q>,
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => fmt_q(c),
                1 => format!("{}*x", fmt_q(c)),
                _ => format!("{}*x^{}", fmt_q(c), i),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl UPoly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly { c }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| qi(x)).collect())
    }

    pub fn zero() -> Self {
        UPoly { c: vec![] }
    }

    pub fn constant(a: Q) -> Self {
        Self::new(vec![a])
    }

    pub fn x() -> Self {
        Self::new(vec![Q::zero(), Q::one()])
    }

    /// `x - a`
    pub fn linear_root(a: Q) -> Self {
        Self::new(vec![-a, Q::one()])
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.c.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn deg(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn lc(&self) -> Q {
        self.c.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.c.len() <= 1
    }

    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }

    pub fn sub(&self, o: &UPoly) -> UPoly {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }

    pub fn neg(&self) -> UPoly {
        UPoly { c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn scale(&self, k: &Q) -> UPoly {
        UPoly::new(self.c.iter().map(|x| x * k).collect())
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        UPoly::new(c)
    }

    pub fn pow(&self, n: u32) -> UPoly {
        let mut r = UPoly::constant(Q::one());
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    pub fn deriv(&self) -> UPoly {
        UPoly::new(self.c.iter().enumerate().skip(1).map(|(i, a)| a * qi(i as i64)).collect())
    }

    pub fn nth_deriv(&self, k: usize) -> UPoly {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.deriv();
        }
        p
    }

    pub fn eval(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for a in self.c.iter().rev() {
            acc = acc * x + a;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for a in self.c.iter().rev() {
            acc = acc * x + crate::rational::to_f64(a);
        }
        acc
    }

    /// Interval Horner evaluation with enclosed coefficients.
    pub fn eval_interval(&self, x: Interval) -> Interval {
        // Centered form is tighter on narrow boxes; Horner is fine for the rest.
        let mut acc = Interval::ZERO;
        for a in self.c.iter().rev() {
            acc = acc * x + enclose(a);
        }
        acc
    }

    /// Returns `(quotient, remainder)`.
    pub fn div_rem(&self, d: &UPoly) -> (UPoly, UPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        if self.c.len() < d.c.len() {
            return (UPoly::zero(), self.clone());
        }
        let mut r = self.c.clone();
        let dl = d.lc();
        let dn = d.c.len();
        let mut qv = vec![Q::zero(); r.len() - dn + 1];
        for k in (0..qv.len()).rev() {
            let coef = &r[k + dn - 1] / &dl;
            if !coef.is_zero() {
                for (j, b) in d.c.iter().enumerate() {
                    r[k + j] -= &coef * b;
                }
            }
            qv[k] = coef;
        }
        r.truncate(dn - 1);
        (UPoly::new(qv), UPoly::new(r))
    }

    pub fn rem(&self, d: &UPoly) -> UPoly {
        self.div_rem(d).1
    }

    pub fn monic(&self) -> UPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lc().recip();
        self.scale(&l)
    }

    /// Integer coefficients with unit content and positive leading coefficient.
    pub fn primitive(&self) -> UPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut den = BigInt::one();
        for a in &self.c {
            den = den.lcm(a.denom());
        }
        let ints: Vec<BigInt> = self.c.iter().map(|a| (a * Q::from_integer(den.clone())).to_integer()).collect();
        let mut g = BigInt::zero();
        for a in &ints {
            g = g.gcd(a);
        }
        if self.lc().is_negative() {
            g = -g;
        }
        UPoly::new(ints.into_iter().map(|a| Q::from_integer(a / &g)).collect())
    }

    pub fn gcd(&self, o: &UPoly) -> UPoly {
        let mut a = self.primitive();
        let mut b = o.primitive();
        while !b.is_zero() {
            let r = a.rem(&b).primitive();
            a = b;
            b = r;
        }
        a.primitive()
    }

    /// Product of the distinct irreducible factors, primitive.
    pub fn squarefree(&self) -> UPoly {
        if self.deg() == 0 {
            return self.primitive();
        }
        let g = self.gcd(&self.deriv());
        self.div_rem(&g).0.primitive()
    }

    /// `self(q(x))`
    pub fn compose(&self, q: &UPoly) -> UPoly {
        let mut acc = UPoly::zero();
        for a in self.c.iter().rev() {
            acc = acc.mul(q).add(&UPoly::constant(a.clone()));
        }
        acc
    }

    /// Polynomial of `self(a + b x)`.
    pub fn affine_compose(&self, a: &Q, b: &Q) -> UPoly {
        self.compose(&UPoly::new(vec![a.clone(), b.clone()]))
    }

    pub fn sign_at(&self, x: &Q) -> i32 {
        let v = self.eval(x);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }

    /// Upper bound on `|p|` over `[a, b]` (crude, from coefficient magnitudes).
    pub fn coeff_bound(&self, a: &Q, b: &Q) -> Q {
        let m = a.abs().max(b.abs());
        let mut acc = Q::zero();
        for c in self.c.iter().rev() {
            acc = acc * &m + c.abs();
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn arithmetic() {
        let p = UPoly::from_ints(&[-1, 0, 1]);
        let (qq, r) = p.div_rem(&UPoly::from_ints(&[-1, 1]));
        assert_eq!(qq, UPoly::from_ints(&[1, 1]));
        assert!(r.is_zero());
        assert_eq!(p.eval(&q(1, 2)), q(-3, 4));
        assert_eq!(p.deriv(), UPoly::from_ints(&[0, 2]));
    }

    #[test]
    fn gcd_and_squarefree() {
        let a = UPoly::from_ints(&[-1, 1]).pow(3).mul(&UPoly::from_ints(&[2, 1]));
        assert_eq!(a.squarefree(), UPoly::from_ints(&[-1, 1]).mul(&UPoly::from_ints(&[2, 1])));
        let g = a.gcd(&UPoly::from_ints(&[-1, 1]).pow(2));
        assert_eq!(g, UPoly::from_ints(&[-1, 1]).pow(2));
    }

    #[test]
    fn composition() {
        let p = UPoly::from_ints(&[0, 0, 1]);
        let c = p.compose(&UPoly::from_ints(&[1, 1]));
        assert_eq!(c, UPoly::from_ints(&[1, 2, 1]));
    }

    #[test]
    fn interval_eval_encloses() {
        let p = UPoly::from_ints(&[0, 0, 3, -2]);
        let e = p.eval_interval(Interval::UNIT);
        assert!(e.lo <= 0.0 && e.hi >= 1.0);
    }
}
