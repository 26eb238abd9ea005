//! Closed float intervals with outward rounding.
//!
//! Each endpoint is rounded with an error-free transform (TwoSum / FMA /
//! remainder) and nudged by one ulp only when the operation was inexact, so
//! exactly representable results stay tight.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_dn(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        return f64::NEG_INFINITY;
    }
    if !s.is_finite() || !a.is_finite() || !b.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.is_nan() {
        return f64::INFINITY;
    }
    if !s.is_finite() || !a.is_finite() || !b.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn mul_exactness(a: f64, b: f64, p: f64) -> f64 {
    // Sign of (exact product - p). Subnormal results are treated as inexact.
    if p != 0.0 && p.abs() < f64::MIN_POSITIVE * 4.0 {
        return f64::NAN;
    }
    if p == 0.0 {
        return if a == 0.0 || b == 0.0 { 0.0 } else { f64::NAN };
    }
    a.mul_add(b, -p)
}

fn mul_dn(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let e = mul_exactness(a, b, p);
    if e.is_nan() || e < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    let e = mul_exactness(a, b, p);
    if e.is_nan() || e > 0.0 {
        p.next_up()
    } else {
        p
    }
}

fn div_sign(a: f64, b: f64, q: f64) -> f64 {
    // sign of (a/b - q) = sign(a - q b) * sign(b)
    if q != 0.0 && q.abs() < f64::MIN_POSITIVE * 4.0 {
        return f64::NAN;
    }
    if q == 0.0 {
        return if a == 0.0 { 0.0 } else { f64::NAN };
    }
    let r = (-q).mul_add(b, a);
    if b > 0.0 {
        r
    } else {
        -r
    }
}

fn div_dn(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() || b.is_infinite() || a.is_infinite() {
        return if q.is_nan() { f64::NEG_INFINITY } else { q };
    }
    let e = div_sign(a, b, q);
    if e.is_nan() || e < 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() || b.is_infinite() || a.is_infinite() {
        return if q.is_nan() { f64::INFINITY } else { q };
    }
    let e = div_sign(a, b, q);
    if e.is_nan() || e > 0.0 {
        q.next_up()
    } else {
        q
    }
}

impl Interval {
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() {
            return Self::ENTIRE;
        }
        debug_assert!(lo <= hi, "bad interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    pub fn from_int(k: i64) -> Self {
        let x = k as f64;
        if x as i64 == k {
            Self::point(x)
        } else {
            Self::new(x.next_down(), x.next_up())
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            0.5 * self.lo + 0.5 * self.hi
        } else if self.lo.is_finite() {
            self.lo.max(0.0) + 1.0
        } else if self.hi.is_finite() {
            self.hi.min(0.0) - 1.0
        } else {
            0.0
        }
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, o: &Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn hull(&self, o: &Interval) -> Interval {
        Interval::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    pub fn certainly_pos(&self) -> bool {
        self.lo > 0.0
    }

    pub fn certainly_neg(&self) -> bool {
        self.hi < 0.0
    }

    pub fn certainly_nonzero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }

    pub fn abs(&self) -> Interval {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Interval::new(0.0, self.mag())
        }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval::new(mul_dn(a.lo, a.lo), mul_up(a.hi, a.hi))
    }

    pub fn powi(&self, n: u32) -> Interval {
        match n {
            0 => Interval::ONE,
            1 => *self,
            _ if n.is_multiple_of(2) => self.powi(n / 2).sqr(),
            _ => *self * self.powi(n - 1),
        }
    }

    pub fn recip(&self) -> Interval {
        Interval::ONE / *self
    }

    /// Split at the midpoint.
    pub fn bisect(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    pub fn scale_pow2(&self, k: i32) -> Interval {
        let s = 2f64.powi(k);
        Interval::new(self.lo * s, self.hi * s)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(add_dn(self.lo, o.lo), add_up(self.hi, o.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        self + (-o)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let (a, b) = (self, o);
        if a.is_point() && a.lo == 0.0 || b.is_point() && b.lo == 0.0 {
            return Interval::ZERO;
        }
        let cand = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (x, y) in cand {
            lo = lo.min(mul_dn(x, y));
            hi = hi.max(mul_up(x, y));
        }
        Interval::new(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        let (a, b) = (self, o);
        if a.is_point() && a.lo == 0.0 && !(b.is_point() && b.lo == 0.0) {
            return Interval::ZERO;
        }
        if b.lo > 0.0 || b.hi < 0.0 {
            let cand = [(a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi)];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (x, y) in cand {
                lo = lo.min(div_dn(x, y));
                hi = hi.max(div_up(x, y));
            }
            return Interval::new(lo, hi);
        }
        // Denominator touches zero from one side only.
        if b.lo == 0.0 && b.hi > 0.0 {
            if a.lo >= 0.0 {
                return Interval::new(div_dn(a.lo, b.hi), f64::INFINITY);
            }
            if a.hi <= 0.0 {
                return Interval::new(f64::NEG_INFINITY, div_up(a.hi, b.hi));
            }
        }
        if b.hi == 0.0 && b.lo < 0.0 {
            if a.lo >= 0.0 {
                return Interval::new(f64::NEG_INFINITY, div_up(a.lo, b.lo));
            }
            if a.hi <= 0.0 {
                return Interval::new(div_dn(a.hi, b.lo), f64::INFINITY);
            }
        }
        Interval::ENTIRE
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ops_stay_tight() {
        let a = Interval::new(1.0, 2.0);
        let b = Interval::new(0.5, 0.75);
        assert_eq!(a + b, Interval::new(1.5, 2.75));
        assert_eq!(a * b, Interval::new(0.5, 1.5));
        assert_eq!(a / Interval::point(2.0), Interval::new(0.5, 1.0));
    }

    #[test]
    fn inexact_ops_round_outward() {
        let third = Interval::ONE / Interval::point(3.0);
        assert!(third.lo < third.hi);
        let back = third * Interval::point(3.0);
        assert!(back.contains(1.0));
        let s = Interval::point(0.1) + Interval::point(0.2);
        assert!(s.lo <= 0.30000000000000004 && s.hi >= 0.30000000000000004);
        assert!(s.width() > 0.0);
    }

    #[test]
    fn one_sided_division() {
        let r = Interval::ONE / Interval::new(0.0, 2.0);
        assert_eq!(r, Interval::new(0.5, f64::INFINITY));
        let e = Interval::new(-1.0, 1.0) / Interval::new(-1.0, 1.0);
        assert_eq!(e, Interval::ENTIRE);
    }

    #[test]
    fn zero_times_infinite() {
        let z = Interval::ZERO * Interval::ENTIRE;
        assert_eq!(z, Interval::ZERO);
    }

    #[test]
    fn even_powers() {
        assert_eq!(Interval::new(-1.0, 2.0).powi(2), Interval::new(0.0, 4.0));
        assert_eq!(Interval::new(-2.0, -1.0).powi(3), Interval::new(-8.0, -1.0));
    }
}
