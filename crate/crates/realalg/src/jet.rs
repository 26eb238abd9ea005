//! Truncated multivariate Taylor expansions with interval coefficients.
//!
//! A jet evaluated at an interval box has coefficient `c_a` enclosing
//! `f^(a)(x) / a!` for every `x` in the box, which is exactly the quantity the
//! factorial-normalised C^r norm maximises.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::interval::Interval;

#[derive(Debug)]
pub struct Layout {
    pub nvars: usize,
    pub order: usize,
    pub monos: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    /// For each target monomial: pairs `(i, j)` with `mono[i] + mono[j] = target`.
    pairs: Vec<Vec<(usize, usize)>>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut monos = vec![];
        for deg in 0..=order as u32 {
            let mut cur = vec![0u32; nvars];
            gen(nvars, deg, 0, &mut cur, &mut monos);
        }
        let index: HashMap<Vec<u32>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut pairs = vec![vec![]; monos.len()];
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = index.get(&s) {
                    pairs[k].push((i, j));
                }
            }
        }
        Layout { nvars, order, monos, index, pairs }
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn index_of(&self, m: &[u32]) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.monos[i].iter().sum()
    }
}

fn gen(nvars: usize, deg: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if nvars == 0 {
        if deg == 0 {
            out.push(vec![]);
        }
        return;
    }
    if pos == nvars - 1 {
        cur[pos] = deg;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=deg).rev() {
        cur[pos] = k;
        gen(nvars, deg - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

pub fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let m = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = m.lock().unwrap();
    g.entry((nvars, order)).or_insert_with(|| Arc::new(Layout::build(nvars, order))).clone()
}

#[derive(Clone, Debug)]
pub struct Jet {
    pub layout: Arc<Layout>,
    pub c: Vec<Interval>,
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, v: Interval) -> Jet {
        let mut c = vec![Interval::ZERO; layout.len()];
        c[0] = v;
        Jet { layout: layout.clone(), c }
    }

    /// Jet of the coordinate `x_i` around the box component `v`.
    pub fn variable(layout: &Arc<Layout>, i: usize, v: Interval) -> Jet {
        let mut j = Self::constant(layout, v);
        if layout.order >= 1 {
            let mut m = vec![0; layout.nvars];
            m[i] = 1;
            let k = layout.index_of(&m).unwrap();
            j.c[k] = Interval::ONE;
        }
        j
    }

    pub fn value(&self) -> Interval {
        self.c[0]
    }

    pub fn coeff(&self, m: &[u32]) -> Interval {
        self.layout.index_of(m).map(|i| self.c[i]).unwrap_or(Interval::ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { layout: self.layout.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| *a + *b).collect() }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet { layout: self.layout.clone(), c: self.c.iter().zip(&o.c).map(|(a, b)| *a - *b).collect() }
    }

    pub fn neg(&self) -> Jet {
        Jet { layout: self.layout.clone(), c: self.c.iter().map(|a| -*a).collect() }
    }

    pub fn scale(&self, k: Interval) -> Jet {
        Jet { layout: self.layout.clone(), c: self.c.iter().map(|a| *a * k).collect() }
    }

    pub fn add_const(&self, k: Interval) -> Jet {
        let mut j = self.clone();
        j.c[0] = j.c[0] + k;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let l = &self.layout;
        let mut c = vec![Interval::ZERO; l.len()];
        for (k, ps) in l.pairs.iter().enumerate() {
            let mut acc = Interval::ZERO;
            for &(i, j) in ps {
                if self.c[i] == Interval::ZERO || o.c[j] == Interval::ZERO {
                    continue;
                }
                acc = acc + self.c[i] * o.c[j];
            }
            c[k] = acc;
        }
        Jet { layout: l.clone(), c }
    }

    pub fn sqr(&self) -> Jet {
        // Use the even-power rule for the constant term to keep it tight.
        let mut r = self.mul(self);
        r.c[0] = self.c[0].sqr();
        r
    }

    pub fn powi(&self, n: u32) -> Jet {
        match n {
            0 => Jet::constant(&self.layout, Interval::ONE),
            1 => self.clone(),
            _ if n.is_multiple_of(2) => {
                let h = self.powi(n / 2);
                let mut r = h.mul(&h);
                r.c[0] = self.c[0].powi(n);
                r
            }
            _ => {
                let mut r = self.mul(&self.powi(n - 1));
                r.c[0] = self.c[0].powi(n);
                r
            }
        }
    }

    pub fn div(&self, o: &Jet) -> Jet {
        let l = &self.layout;
        let b0 = o.c[0];
        let mut q = vec![Interval::ZERO; l.len()];
        for k in 0..l.len() {
            let mut acc = self.c[k];
            for &(i, j) in &l.pairs[k] {
                if j == 0 {
                    continue;
                }
                if q[i] == Interval::ZERO || o.c[j] == Interval::ZERO {
                    continue;
                }
                acc = acc - q[i] * o.c[j];
            }
            q[k] = acc / b0;
        }
        Jet { layout: l.clone(), c: q }
    }

    /// `sum_k coeffs[k] * (self - self_0)^k`, i.e. composition with a function
    /// whose univariate Taylor coefficients at the base value are `coeffs`.
    pub fn compose_univariate(&self, coeffs: &[Interval]) -> Jet {
        let mut delta = self.clone();
        delta.c[0] = Interval::ZERO;
        let mut acc = Jet::constant(&self.layout, *coeffs.last().unwrap_or(&Interval::ZERO));
        for k in (0..coeffs.len().saturating_sub(1)).rev() {
            acc = acc.mul(&delta).add_const(coeffs[k]);
        }
        acc
    }

    /// Largest magnitude among coefficients of total degree `d`.
    pub fn max_mag_of_degree(&self, d: u32) -> f64 {
        let mut m: f64 = 0.0;
        for (i, c) in self.c.iter().enumerate() {
            if self.layout.degree(i) == d {
                m = m.max(c.mag());
            }
        }
        m
    }

    /// Replace coefficients of total degree `>= d` by zero.
    pub fn truncate_from(&self, d: u32) -> Jet {
        let mut j = self.clone();
        for i in 0..j.c.len() {
            if self.layout.degree(i) >= d {
                j.c[i] = Interval::ZERO;
            }
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_layout() {
        let l = layout(2, 2);
        assert_eq!(l.len(), 6);
        assert_eq!(l.monos[0], vec![0, 0]);
        assert_eq!(layout(1, 3).len(), 4);
    }

    #[test]
    fn product_rule() {
        let l = layout(2, 2);
        let x = Jet::variable(&l, 0, Interval::point(2.0));
        let y = Jet::variable(&l, 1, Interval::point(3.0));
        let p = x.mul(&y);
        assert_eq!(p.value(), Interval::point(6.0));
        assert_eq!(p.coeff(&[1, 0]), Interval::point(3.0));
        assert_eq!(p.coeff(&[1, 1]), Interval::point(1.0));
        assert_eq!(p.coeff(&[2, 0]), Interval::ZERO);
    }

    #[test]
    fn reciprocal_series() {
        // 1/(1+x) at x=0: coefficients 1, -1, 1, -1
        let l = layout(1, 3);
        let x = Jet::variable(&l, 0, Interval::ZERO);
        let one = Jet::constant(&l, Interval::ONE);
        let r = one.div(&x.add_const(Interval::ONE));
        for (k, want) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert!(r.c[k].contains(*want), "{k}: {:?}", r.c[k]);
        }
    }

    #[test]
    fn cubic_normalised_coefficients() {
        // 3x^2 - 2x^3 on [0,1]: second coefficient is (6 - 12x)/2 in [-3, 3]
        let l = layout(1, 3);
        let x = Jet::variable(&l, 0, Interval::UNIT);
        let f = x.powi(2).scale(Interval::point(3.0)).sub(&x.powi(3).scale(Interval::point(2.0)));
        assert!(f.c[2].contains(3.0) && f.c[2].contains(-3.0));
        assert!(f.c[3].contains(-2.0));
    }
}
