//! Sparse multivariate polynomials over the rationals, with bivariate
//! resultants for projection.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::interval::Interval;
use crate::rational::{enclose, fmt_q, qi, Q};
use crate::upoly::UPoly;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = vec![];
        for (e, c) in &self.terms {
            let mut s = fmt_q(c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    s.push_str(&format!("*x{}", i + 1));
                    if k > 1 {
                        s.push_str(&format!("^{k}"));
                    }
                }
            }
            parts.push(s);
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, Q::one());
        p
    }

    /// Monomial `c * prod x_i^{e_i}`.
    pub fn monomial(c: Q, e: Vec<u32>) -> Self {
        let mut p = Self::zero(e.len());
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn from_upoly(nvars: usize, var: usize, u: &UPoly) -> Self {
        let mut p = Self::zero(nvars);
        for (k, c) in u.coeffs().iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0; nvars];
                e[var] = k as u32;
                p.terms.insert(e, c.clone());
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    /// Largest variable index that actually occurs, plus one.
    pub fn used_vars(&self) -> usize {
        let mut u = 0;
        for e in self.terms.keys() {
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    u = u.max(i + 1);
                }
            }
        }
        u
    }

    fn add_term(&mut self, e: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn with_nvars(&self, n: usize) -> MPoly {
        assert!(n >= self.used_vars());
        let mut p = MPoly::zero(n);
        for (e, c) in &self.terms {
            let mut e2 = vec![0; n];
            for i in 0..n.min(e.len()) {
                e2[i] = e[i];
            }
            p.terms.insert(e2, c.clone());
        }
        p
    }

    pub fn add(&self, o: &MPoly) -> MPoly {
        let n = self.nvars.max(o.nvars);
        let mut r = self.with_nvars(n);
        for (e, c) in &o.with_nvars(n).terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn neg(&self) -> MPoly {
        MPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &MPoly) -> MPoly {
        self.add(&o.neg())
    }

    pub fn scale(&self, k: &Q) -> MPoly {
        if k.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect() }
    }

    pub fn mul(&self, o: &MPoly) -> MPoly {
        let n = self.nvars.max(o.nvars);
        let a = self.with_nvars(n);
        let b = o.with_nvars(n);
        let mut r = MPoly::zero(n);
        for (e1, c1) in &a.terms {
            for (e2, c2) in &b.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(x, y)| x + y).collect();
                r.add_term(e, c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> MPoly {
        let mut r = MPoly::constant(self.nvars, Q::one());
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    pub fn deriv(&self, var: usize) -> MPoly {
        let mut r = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut e2 = e.clone();
                e2[var] -= 1;
                r.add_term(e2, c * qi(e[var] as i64));
            }
        }
        r
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= num_traits::pow(x[i].clone(), k as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_interval(&self, x: &[Interval]) -> Interval {
        let mut acc = Interval::ZERO;
        for (e, c) in &self.terms {
            let mut t = enclose(c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t * x[i].powi(k);
                }
            }
            acc = acc + t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = crate::rational::to_f64(c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= x[i].powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Substitute `x_var = v`, keeping the variable count.
    pub fn subst_value(&self, var: usize, v: &Q) -> MPoly {
        let mut r = MPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[var] = 0;
            r.add_term(e2, c * num_traits::pow(v.clone(), e[var] as usize));
        }
        r
    }

    /// View as a univariate polynomial in `var`; panics if other variables occur.
    pub fn to_upoly(&self, var: usize) -> UPoly {
        let d = self.degree_in(var) as usize;
        let mut c = vec![Q::zero(); d + 1];
        for (e, k) in &self.terms {
            assert!(e.iter().enumerate().all(|(i, &x)| i == var || x == 0), "not univariate");
            c[e[var] as usize] += k;
        }
        UPoly::new(c)
    }

    pub fn is_univariate_in(&self, var: usize) -> bool {
        self.terms.keys().all(|e| e.iter().enumerate().all(|(i, &x)| i == var || x == 0))
    }

    /// Bivariate polynomial written as `sum_j c_j(x1) x2^j`.
    pub fn coeffs_in_x2(&self) -> Vec<UPoly> {
        assert!(self.nvars == 2);
        let d = self.degree_in(1) as usize;
        let mut cols: Vec<Vec<Q>> = vec![vec![]; d + 1];
        for (e, c) in &self.terms {
            let col = &mut cols[e[1] as usize];
            let i = e[0] as usize;
            if col.len() <= i {
                col.resize(i + 1, Q::zero());
            }
            col[i] += c;
        }
        cols.into_iter().map(UPoly::new).collect()
    }

    pub fn from_coeffs_in_x2(cs: &[UPoly]) -> MPoly {
        let mut r = MPoly::zero(2);
        for (j, u) in cs.iter().enumerate() {
            for (i, c) in u.coeffs().iter().enumerate() {
                r.add_term(vec![i as u32, j as u32], c.clone());
            }
        }
        r
    }

    /// Bivariate specialisation `x1 = a`, as a polynomial in `x2`.
    pub fn at_x1(&self, a: &Q) -> UPoly {
        let cs = self.coeffs_in_x2();
        UPoly::new(cs.iter().map(|c| c.eval(a)).collect())
    }

    /// Bivariate specialisation `x2 = b`, as a polynomial in `x1`.
    pub fn at_x2(&self, b: &Q) -> UPoly {
        self.subst_value(1, b).to_upoly(0)
    }
}

/// Determinant over `Q[x]` by fraction-free elimination.
pub fn det_poly(mut m: Vec<Vec<UPoly>>) -> UPoly {
    let n = m.len();
    if n == 0 {
        return UPoly::constant(Q::one());
    }
    let mut sign = Q::one();
    let mut prev = UPoly::constant(Q::one());
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return UPoly::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j].mul(&m[k][k]).sub(&m[i][k].mul(&m[k][j]));
                m[i][j] = num.div_rem(&prev).0;
            }
            m[i][k] = UPoly::zero();
        }
        prev = m[k][k].clone();
    }
    m[n - 1][n - 1].scale(&sign)
}

/// Resultant with respect to `x2` of two bivariate polynomials, as a polynomial in `x1`.
pub fn resultant_x2(a: &MPoly, b: &MPoly) -> UPoly {
    let ca = a.coeffs_in_x2();
    let cb = b.coeffs_in_x2();
    let m = ca.len() - 1;
    let n = cb.len() - 1;
    if m == 0 && n == 0 {
        return UPoly::constant(Q::one());
    }
    if m == 0 {
        return ca[0].pow(n as u32);
    }
    if n == 0 {
        return cb[0].pow(m as u32);
    }
    let size = m + n;
    let mut mat = vec![vec![UPoly::zero(); size]; size];
    for r in 0..n {
        for (j, c) in ca.iter().rev().enumerate() {
            mat[r][r + j] = c.clone();
        }
    }
    for r in 0..m {
        for (j, c) in cb.iter().rev().enumerate() {
            mat[n + r][r + j] = c.clone();
        }
    }
    det_poly(mat)
}

/// Discriminant (up to a constant and leading-coefficient factor) with respect to `x2`.
pub fn discriminant_x2(a: &MPoly) -> UPoly {
    resultant_x2(a, &a.deriv(1))
}

/// Squarefree part with respect to `x2`, splitting off the content in `x1`.
/// Returns `(content in x1, primitive squarefree part)`.
pub fn squarefree_x2(a: &MPoly) -> (UPoly, MPoly) {
    let cs = a.coeffs_in_x2();
    let mut content = UPoly::zero();
    for c in &cs {
        content = if content.is_zero() { c.primitive() } else { content.gcd(c) };
    }
    let prim: Vec<UPoly> = cs.iter().map(|c| c.div_rem(&content).0).collect();
    let p = MPoly::from_coeffs_in_x2(&prim);
    if p.degree_in(1) == 0 {
        return (content, p);
    }
    let g = gcd_x2(&p, &p.deriv(1));
    if g.degree_in(1) == 0 {
        return (content, p);
    }
    (content, exact_div_x2(&p, &g))
}

/// Gcd of two bivariate polynomials, primitive in `x2`, by pseudo-remainder sequences.
pub fn gcd_x2(a: &MPoly, b: &MPoly) -> MPoly {
    let mut u = prim_x2(a);
    let mut v = prim_x2(b);
    if u.degree_in(1) < v.degree_in(1) {
        std::mem::swap(&mut u, &mut v);
    }
    while !v.is_zero() && v.degree_in(1) > 0 {
        let r = pseudo_rem_x2(&u, &v);
        u = v;
        v = if r.is_zero() { r } else { prim_x2(&r) };
    }
    if v.is_zero() {
        u
    } else {
        MPoly::constant(2, Q::one())
    }
}

fn prim_x2(a: &MPoly) -> MPoly {
    let cs = a.coeffs_in_x2();
    let mut content = UPoly::zero();
    for c in &cs {
        if !c.is_zero() {
            content = if content.is_zero() { c.primitive() } else { content.gcd(c) };
        }
    }
    if content.is_zero() {
        return a.clone();
    }
    let prim: Vec<UPoly> = cs.iter().map(|c| c.div_rem(&content).0).collect();
    MPoly::from_coeffs_in_x2(&prim)
}

fn pseudo_rem_x2(a: &MPoly, b: &MPoly) -> MPoly {
    let mut r = a.coeffs_in_x2();
    let bc = b.coeffs_in_x2();
    let db = bc.len() - 1;
    let lb = bc[db].clone();
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        // r := lb * r - lr * x2^{dr-db} * b
        let mut nr: Vec<UPoly> = r.iter().map(|c| c.mul(&lb)).collect();
        for (j, c) in bc.iter().enumerate() {
            nr[j + dr - db] = nr[j + dr - db].sub(&c.mul(&lr));
        }
        while nr.last().is_some_and(|c| c.is_zero()) {
            nr.pop();
        }
        r = nr;
    }
    MPoly::from_coeffs_in_x2(&r)
}

fn exact_div_x2(a: &MPoly, b: &MPoly) -> MPoly {
    // Division over Q(x1)[x2] whose result is known to be polynomial.
    let mut r = a.coeffs_in_x2();
    let bc = b.coeffs_in_x2();
    let db = bc.len() - 1;
    let lb = bc[db].clone();
    let mut qv = vec![UPoly::zero(); r.len().saturating_sub(db)];
    while r.len() > db {
        let dr = r.len() - 1;
        let (t, rem) = r[dr].div_rem(&lb);
        debug_assert!(rem.is_zero(), "inexact bivariate division");
        qv[dr - db] = t.clone();
        for (j, c) in bc.iter().enumerate() {
            r[j + dr - db] = r[j + dr - db].sub(&c.mul(&t));
        }
        r.pop();
    }
    MPoly::from_coeffs_in_x2(&qv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn circle() -> MPoly {
        let x = MPoly::var(2, 0).sub(&MPoly::constant(2, q(1, 2)));
        let y = MPoly::var(2, 1).sub(&MPoly::constant(2, q(1, 2)));
        x.pow(2).add(&y.pow(2)).sub(&MPoly::constant(2, q(1, 16)))
    }

    #[test]
    fn circle_discriminant_roots() {
        let d = discriminant_x2(&circle());
        assert_eq!(d.eval(&q(1, 4)), Q::zero());
        assert_eq!(d.eval(&q(3, 4)), Q::zero());
        assert!(d.eval(&q(1, 2)) != Q::zero());
    }

    #[test]
    fn resultant_of_line_and_parabola() {
        // y - x and y - x^2 meet where x = x^2
        let a = MPoly::var(2, 1).sub(&MPoly::var(2, 0));
        let b = MPoly::var(2, 1).sub(&MPoly::var(2, 0).pow(2));
        let r = resultant_x2(&a, &b);
        assert_eq!(r.eval(&Q::zero()), Q::zero());
        assert_eq!(r.eval(&Q::one()), Q::zero());
        assert_eq!(r.deg(), 2);
    }

    #[test]
    fn squarefree_splits_content() {
        let x = MPoly::var(2, 0);
        let y = MPoly::var(2, 1);
        let p = x.mul(&y.sub(&x).pow(2));
        let (c, s) = squarefree_x2(&p);
        assert_eq!(c.deg(), 1);
        assert_eq!(s.degree_in(1), 1);
    }

    #[test]
    fn specialise() {
        let p = circle();
        let u = p.at_x1(&q(1, 2));
        assert_eq!(u.eval(&q(3, 4)), Q::zero());
    }
}
