//! Exact rationals and their conversion to outward-rounded floats.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::interval::Interval;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn from_f64(x: f64) -> Q {
    Q::from_f64(x).expect("finite float")
}

/// Parses `p`, `-p`, `p/q` or a plain decimal such as `0.25`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let whole: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().ok()? };
        let frac: BigInt = fp.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), fp.len());
        let v = Q::new(whole * &den + frac, den);
        return Some(if neg { -v } else { v });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Q::from_integer(n))
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Tightest float interval containing `x`.
pub fn enclose(x: &Q) -> Interval {
    let f = match x.to_f64() {
        Some(f) if f.is_finite() => f,
        _ => {
            return if x.is_negative() {
                Interval::new(f64::NEG_INFINITY, f64::MIN)
            } else {
                Interval::new(f64::MAX, f64::INFINITY)
            }
        }
    };
    let back = from_f64(f);
    match back.cmp(x) {
        std::cmp::Ordering::Equal => Interval::point(f),
        std::cmp::Ordering::Less => Interval::new(f, f.next_up()),
        std::cmp::Ordering::Greater => Interval::new(f.next_down(), f),
    }
}

/// Simplest rational (smallest denominator) in the closed interval `[lo, hi]`.
pub fn simplest_between(lo: &Q, hi: &Q) -> Q {
    debug_assert!(lo <= hi);
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return Q::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi, &-lo);
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if fl.clone() + Q::one() <= *hi {
        return fl + Q::one();
    }
    // lo and hi share the integer part; recurse on reciprocals of fractional parts.
    let a = lo - &fl;
    let b = hi - &fl;
    let inner = simplest_between(&b.recip(), &a.recip());
    fl + inner.recip()
}

pub fn mid(a: &Q, b: &Q) -> Q {
    (a + b) / qi(2)
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A dyadic rational inside `(lo, hi)` with few bits, used for splitting points.
pub fn dyadic_between(lo: &Q, hi: &Q) -> Q {
    let mut k = 0u32;
    loop {
        let scale = Q::from_integer(num_traits::pow(BigInt::from(2), k as usize));
        let c = (lo * &scale).floor() + Q::one();
        let cand = c / &scale;
        if &cand < hi && &cand > lo {
            return cand;
        }
        k += 1;
        if k > 4000 {
            return mid(lo, hi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/4"), Some(q(3, 4)));
        assert_eq!(parse_q("-2"), Some(qi(-2)));
        assert_eq!(parse_q("0.25"), Some(q(1, 4)));
        assert_eq!(parse_q("-1.5"), Some(q(-3, 2)));
        assert_eq!(parse_q("1/0"), None);
    }

    #[test]
    fn enclosure_contains_value() {
        let x = q(1, 3);
        let i = enclose(&x);
        assert!(from_f64(i.lo) <= x && x <= from_f64(i.hi));
        assert!(i.hi - i.lo > 0.0);
        assert_eq!(enclose(&q(1, 4)), Interval::point(0.25));
    }

    #[test]
    fn simplest() {
        assert_eq!(simplest_between(&q(1, 4), &q(3, 8)), q(1, 3));
        assert_eq!(simplest_between(&q(3, 10), &q(9, 10)), q(1, 2));
        assert_eq!(simplest_between(&q(5, 2), &q(7, 2)), qi(3));
    }

    #[test]
    fn dyadic() {
        let d = dyadic_between(&q(1, 3), &q(2, 5));
        assert!(d > q(1, 3) && d < q(2, 5));
        assert!(d.denom().to_u64().unwrap().is_power_of_two());
    }
}
