//! Sturm sequences and exact real root isolation.

use num_traits::{Signed, Zero};

use crate::rational::{mid, qi, simplest_between, Q};
use crate::upoly::UPoly;
use crate::AlgError;

/// Open interval `(lo, hi)` holding exactly one root, or an exact rational root when `lo == hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IsolatingInterval {
    pub lo: Q,
    pub hi: Q,
}

impl IsolatingInterval {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Q {
        &self.hi - &self.lo
    }
}

#[derive(Clone, Debug)]
pub struct Sturm {
    seq: Vec<UPoly>,
}

fn sign(q: &Q) -> i32 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

impl Sturm {
    /// `p` should be squarefree.
    pub fn new(p: &UPoly) -> Self {
        let mut seq = vec![p.clone()];
        if p.deg() > 0 {
            seq.push(p.deriv());
            loop {
                let n = seq.len();
                let r = seq[n - 2].rem(&seq[n - 1]);
                if r.is_zero() {
                    break;
                }
                seq.push(r.neg().primitive_keep_sign());
            }
        }
        Sturm { seq }
    }

    pub fn poly(&self) -> &UPoly {
        &self.seq[0]
    }

    pub fn variations(&self, x: &Q) -> usize {
        let mut last = 0;
        let mut v = 0;
        for p in &self.seq {
            let s = sign(&p.eval(x));
            if s != 0 {
                if last != 0 && s != last {
                    v += 1;
                }
                last = s;
            }
        }
        v
    }

    /// Number of distinct roots in the half-open interval `(a, b]`.
    pub fn count_half_open(&self, a: &Q, b: &Q) -> usize {
        self.variations(a).saturating_sub(self.variations(b))
    }

    /// Number of distinct roots in the open interval `(a, b)`.
    pub fn count_open(&self, a: &Q, b: &Q) -> usize {
        let n = self.count_half_open(a, b);
        if self.seq[0].eval(b).is_zero() {
            n - 1
        } else {
            n
        }
    }
}

impl UPoly {
    /// Divides by a positive rational so coefficients are coprime integers, keeping the sign.
    pub fn primitive_keep_sign(&self) -> UPoly {
        let p = self.primitive();
        if (p.lc().is_positive()) == (self.lc().is_positive()) {
            p
        } else {
            p.neg()
        }
    }
}

/// Isolates the distinct real roots of `p` in the open interval `(lo, hi)`, in increasing order.
/// Rational roots found along the way are reported exactly.
pub fn isolate_roots(p: &UPoly, lo: &Q, hi: &Q) -> Result<Vec<IsolatingInterval>, AlgError> {
    if p.is_zero() {
        return Err(AlgError::ZeroPolynomial);
    }
    let sp = p.squarefree();
    if sp.deg() == 0 {
        return Ok(vec![]);
    }
    let st = Sturm::new(&sp);
    let mut out = Vec::new();
    let target_width = (hi - lo) / qi(8);
    let mut stack = vec![(lo.clone(), hi.clone(), st.count_open(lo, hi))];
    let mut steps = 0usize;
    while let Some((a, b, n)) = stack.pop() {
        steps += 1;
        if steps > 200_000 {
            return Err(AlgError::Budget { lo: a.to_string(), hi: b.to_string() });
        }
        match n {
            0 => {}
            1 => out.push(refine_to(&sp, &st, IsolatingInterval { lo: a, hi: b }, &target_width)),
            _ => {
                let m = mid(&a, &b);
                let left = st.count_open(&a, &m);
                let at_m = sp.eval(&m).is_zero();
                let right = n - left - usize::from(at_m);
                if at_m {
                    out.push(IsolatingInterval { lo: m.clone(), hi: m.clone() });
                }
                stack.push((a, m.clone(), left));
                stack.push((m, b, right));
            }
        }
    }
    out.sort_by(|x, y| x.lo.cmp(&y.lo));
    Ok(out)
}

/// Refine an isolating interval of a squarefree polynomial until its width is at most `w`.
/// Tries the simplest rational in the interval at each step so rational roots end up exact.
pub fn refine_to(p: &UPoly, st: &Sturm, mut iv: IsolatingInterval, w: &Q) -> IsolatingInterval {
    let mut tries = 0;
    while !iv.is_exact() {
        if tries < 6 {
            let s = simplest_between(&iv.lo, &iv.hi);
            if s > iv.lo && s < iv.hi && p.eval(&s).is_zero() {
                return IsolatingInterval { lo: s.clone(), hi: s };
            }
            tries += 1;
        }
        if &iv.width() <= w {
            break;
        }
        iv = bisect_once(p, st, iv);
    }
    iv
}

/// One bisection step; keeps the half containing the root.
pub fn bisect_once(p: &UPoly, st: &Sturm, iv: IsolatingInterval) -> IsolatingInterval {
    let m = mid(&iv.lo, &iv.hi);
    let sm = p.sign_at(&m);
    if sm == 0 {
        return IsolatingInterval { lo: m.clone(), hi: m };
    }
    let sa = p.sign_at(&iv.lo);
    let left_has = if sa != 0 { sa != sm } else { st.count_open(&iv.lo, &m) == 1 };
    if left_has {
        IsolatingInterval { lo: iv.lo, hi: m }
    } else {
        IsolatingInterval { lo: m, hi: iv.hi }
    }
}

/// Number of distinct real roots of `p` in `(a, b)`.
pub fn count_roots(p: &UPoly, a: &Q, b: &Q) -> usize {
    if p.is_zero() {
        return usize::MAX;
    }
    let sp = p.squarefree();
    if sp.deg() == 0 {
        return 0;
    }
    Sturm::new(&sp).count_open(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn sqrt_two_isolated() {
        let p = UPoly::from_ints(&[-2, 0, 1]);
        let r = isolate_roots(&p, &qi(0), &qi(2)).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].lo >= qi(1) && r[0].hi <= q(3, 2));
        // sign-change oracle
        assert!(p.sign_at(&r[0].lo) * p.sign_at(&r[0].hi) < 0);
    }

    #[test]
    fn open_interval_excludes_endpoint() {
        let r = isolate_roots(&UPoly::x(), &qi(0), &qi(1)).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn rational_roots_exact() {
        let p = UPoly::from_ints(&[-1, 2]).mul(&UPoly::from_ints(&[-1, 3]));
        let r = isolate_roots(&p, &qi(0), &qi(1)).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|i| i.is_exact()));
        assert_eq!(r[0].lo, q(1, 3));
        assert_eq!(r[1].lo, q(1, 2));
    }

    #[test]
    fn repeated_roots_counted_once() {
        let p = UPoly::from_ints(&[-1, 4]).pow(3);
        assert_eq!(isolate_roots(&p, &qi(0), &qi(1)).unwrap().len(), 1);
        assert_eq!(count_roots(&p, &qi(0), &qi(1)), 1);
    }
}
