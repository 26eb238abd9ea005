use proptest::prelude::*;

use realalg::rational::q;
use realalg::{isolate_roots, parse_expr, AlgFunc, Interval, UPoly, Q};

fn from_roots(roots: &[Q]) -> UPoly {
    roots.iter().fold(UPoly::from_ints(&[1]), |p, r| p.mul(&UPoly::new(vec![-r.clone(), q(1, 1)])))
}

fn expr_text(c: &[i64]) -> String {
    let cs: Vec<String> = c.iter().map(|v| v.to_string()).collect();
    format!("(poly [{}] x)", cs.join(" "))
}

fn small_interval() -> impl Strategy<Value = (f64, f64, f64)> {
    (-8.0f64..8.0, 0.0f64..4.0, 0.0f64..=1.0).prop_map(|(lo, w, t)| (lo, lo + w, lo + t * w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn isolates_known_roots(nums in prop::collection::vec(1i64..40, 1..6), extra in prop::collection::vec(-20i64..20, 0..3)) {
        let mut inside: Vec<Q> = nums.iter().map(|&n| q(n, 40)).collect();
        inside.sort();
        inside.dedup();
        // Roots outside (0, 1) and a repeated root must not disturb the count.
        let mut all = inside.clone();
        all.extend(extra.iter().map(|&n| q(n.abs() + 41, 40)));
        all.push(inside[0].clone());
        let p = from_roots(&all);
        let ivs = isolate_roots(&p, &q(0, 1), &q(1, 1)).unwrap();
        prop_assert_eq!(ivs.len(), inside.len());
        for (iv, r) in ivs.iter().zip(&inside) {
            prop_assert!(iv.lo <= *r && *r <= iv.hi);
            if !iv.is_exact() {
                prop_assert!(iv.lo < *r && *r < iv.hi);
            }
        }
    }

    #[test]
    fn division_identity(a in prop::collection::vec(-9i64..=9, 1..8), d in prop::collection::vec(-9i64..=9, 1..5)) {
        let (a, d) = (UPoly::from_ints(&a), UPoly::from_ints(&d));
        prop_assume!(!d.is_zero());
        let (quo, rem) = a.div_rem(&d);
        prop_assert_eq!(quo.mul(&d).add(&rem), a.clone());
        prop_assert!(rem.is_zero() || rem.deg() < d.deg());
        let g = a.gcd(&d);
        prop_assert!(a.rem(&g).is_zero() && d.rem(&g).is_zero());
    }

    #[test]
    fn interval_ops_enclose(a in small_interval(), b in small_interval()) {
        let (x, y) = (Interval::new(a.0, a.1), Interval::new(b.0, b.1));
        let (u, v) = (a.2, b.2);
        prop_assert!(x.contains(u) && y.contains(v));
        prop_assert!((x + y).contains(u + v));
        prop_assert!((x - y).contains(u - v));
        prop_assert!((x * y).contains(u * v));
        prop_assert!(x.sqr().contains(u * u));
        prop_assert!(x.powi(3).contains(u * u * u));
        if y.certainly_nonzero() {
            prop_assert!((x / y).contains(u / v));
        }
    }

    #[test]
    fn jets_enclose_taylor_coefficients(c in prop::collection::vec(-5i64..=5, 1..7), x in 0.0f64..=1.0, order in 0usize..=4) {
        let f = parse_expr(&expr_text(&c)).unwrap();
        let jet = f.jet(&[Interval::point(x)], order);
        for k in 0..=order {
            // Coefficient of t^k in f(x + t), computed directly.
            let want: f64 = (k..c.len())
                .map(|i| c[i] as f64 * (0..k).fold(1.0, |acc, j| acc * (i - j) as f64 / (j + 1) as f64) * x.powi((i - k) as i32))
                .sum();
            let got = jet.coeff(&[k as u32]);
            prop_assert!(got.lo <= want + 1e-9 && want - 1e-9 <= got.hi, "order {k}: {got:?} vs {want}");
        }
    }

    #[test]
    fn printed_expressions_reparse(c in prop::collection::vec(-5i64..=5, 1..5), k in 1u32..4, x in 0.05f64..0.95) {
        let p = parse_expr(&expr_text(&c)).unwrap();
        let f = p.pow(k).div(&AlgFunc::var(0).add(&AlgFunc::one())).sub(&AlgFunc::rat(q(1, 3)));
        let g = parse_expr(&f.to_string()).unwrap();
        let (a, b) = (f.eval_f64(&[x]), g.eval_f64(&[x]));
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn exact_and_float_evaluation_agree(c in prop::collection::vec(-6i64..=6, 1..6), n in 0i64..=64) {
        let f = parse_expr(&expr_text(&c)).unwrap();
        let x = q(n, 64);
        let exact = f.eval_exact(std::slice::from_ref(&x)).unwrap();
        let up = UPoly::from_ints(&c).eval(&x);
        prop_assert_eq!(&exact, &up);
        let fl = f.eval_f64(&[n as f64 / 64.0]);
        prop_assert!((fl - realalg::rational::to_f64(&exact)).abs() < 1e-9);
    }
}
