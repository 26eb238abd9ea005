use proptest::prelude::*;
use realalg::{parse_expr, Interval};

use forts::fort::{validate_fort, Fort};
use forts::generate::{random_extension, random_fort, random_natural_morphism, random_subfort, rng};
use forts::ledger::{fd_intersection, fd_union, FDPair};
use forts::morphism::{combinatorially_equivalent, inverse_image, pullback};
use forts::norm::certify_r_function;
use forts::verify::enumerate_forts;

/// Coefficients of the k-th derivative divided by k!.
fn taylor_coeffs(c: &[f64], k: usize) -> Vec<f64> {
    (k..c.len())
        .map(|i| {
            let binom = (0..k).fold(1.0, |acc, j| acc * (i - j) as f64 / (j + 1) as f64);
            c[i] * binom
        })
        .collect()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// max over orders 0..=r of sup |f^(k)| / k!, sampled on a fine grid.
fn sampled_norm(c: &[f64], r: usize) -> f64 {
    let mut best: f64 = 0.0;
    for k in 0..=r.min(c.len().saturating_sub(1)) {
        let t = taylor_coeffs(c, k);
        for i in 0..=2000 {
            best = best.max(horner(&t, i as f64 / 2000.0).abs());
        }
    }
    best
}

fn poly_text(c: &[i64]) -> String {
    let cs: Vec<String> = c.iter().map(|v| v.to_string()).collect();
    format!("(poly [{}] x)", cs.join(" "))
}

/// Count forts of length two by brute force over every height vector.
fn naive_count_len2(max: usize) -> usize {
    let mut total = 0;
    for n in 1.. {
        let cols = 2 * n - 1;
        if cols > max {
            break;
        }
        let mut hs = vec![1u32; cols];
        loop {
            let cells: usize = hs.iter().map(|&h| 2 * h as usize - 1).sum();
            if cells <= max && Fort::from_flat(2, &[&[n as u32][..], &hs].concat()).is_ok() {
                total += 1;
            }
            let mut i = 0;
            loop {
                if i == cols {
                    break;
                }
                hs[i] += 1;
                if 2 * hs[i] as usize - 1 <= max {
                    break;
                }
                hs[i] = 1;
                i += 1;
            }
            if i == cols {
                break;
            }
        }
    }
    total
}

#[test]
fn enumeration_matches_brute_force() {
    for max in 1..=11 {
        let n = enumerate_forts(2, max, &mut |_| {}).unwrap();
        assert_eq!(n, naive_count_len2(max), "max {max}");
    }
}

#[test]
fn length_two_counts_follow_fibonacci() {
    // Cell counts of length-two forts are odd, so sizes 2k-1 and 2k agree.
    let fib: Vec<usize> = (0..30).scan((0usize, 1usize), |s, _| {
        let v = s.0;
        *s = (s.1, s.0 + s.1);
        Some(v)
    }).collect();
    for max in 1..=24usize {
        let k = max.div_ceil(2);
        assert_eq!(enumerate_forts(2, max, &mut |_| {}).unwrap(), fib[2 * k], "max {max}");
    }
}

#[test]
fn enumerated_forts_are_distinct_and_valid() {
    let mut seen = std::collections::HashSet::new();
    enumerate_forts(3, 13, &mut |f| {
        assert!(f.cell_count() <= 13);
        validate_fort(&f.cells()).unwrap();
        assert!(seen.insert(f.clone()));
    })
    .unwrap();
    assert!(!seen.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn norm_bound_is_sound(c in prop::collection::vec(-4i64..=4, 1..=6), r in 0usize..=3) {
        let f = parse_expr(&poly_text(&c)).unwrap();
        let cert = certify_r_function(&f, &[Interval::new(0.0, 1.0)], r, 4000);
        let cf: Vec<f64> = c.iter().map(|&v| v as f64).collect();
        let truth = sampled_norm(&cf, r);
        prop_assert!(cert.bound + 1e-9 >= truth, "bound {} below sampled {truth}", cert.bound);
        prop_assert!(cert.lower <= truth + 1e-6, "lower {} above sampled {truth}", cert.lower);
    }

    #[test]
    fn width_form_round_trip(seed in any::<u64>(), len in 1usize..=4) {
        let mut g = rng(seed);
        let f = random_fort(len, 50, 3, &mut g);
        let w = f.to_width_form();
        prop_assert_eq!(w.cells(), f.cells());
        prop_assert_eq!(w.to_height_form().unwrap(), f.clone());
        prop_assert_eq!(Fort::parse(&f.to_text()).unwrap(), f.clone());
        prop_assert_eq!(Fort::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn cells_determine_the_fort(seed in any::<u64>(), len in 1usize..=3) {
        let mut g = rng(seed);
        let f = random_fort(len, 40, 3, &mut g);
        prop_assert_eq!(validate_fort(&f.cells()).unwrap(), f);
    }

    #[test]
    fn inverse_images_are_valid(seed in any::<u64>(), len in 1usize..=3) {
        let mut g = rng(seed);
        let target = random_fort(len, 10, 2, &mut g);
        let m = random_natural_morphism(&target, 2, seed, seed ^ 0x5a5a);
        let sub = random_subfort(&target, &mut g);
        let (f, restricted) = inverse_image(&m, &sub).unwrap();
        validate_fort(&f.cells()).unwrap();
        restricted.validate().unwrap();
        prop_assert_eq!(restricted.target(), &sub);
    }

    #[test]
    fn pullback_depends_only_on_combinatorics(seed in any::<u64>(), len in 1usize..=2) {
        let mut g = rng(seed);
        let target = random_fort(len, 8, 2, &mut g);
        let a = random_natural_morphism(&target, 2, seed, 1);
        let b = random_natural_morphism(&target, 2, seed, 2);
        prop_assert!(combinatorially_equivalent(&a, &b).unwrap());
        let ext = random_extension(&target, 2, &mut g);
        let (fa, ma) = pullback(&a, &ext).unwrap();
        let (fb, _) = pullback(&b, &ext).unwrap();
        prop_assert_eq!(fa, fb);
        ma.validate().unwrap();
    }

    #[test]
    fn ledger_rules_are_symmetric(
        xs in prop::collection::vec((0u32..6, 0u64..50), 1..5),
    ) {
        let pairs: Vec<FDPair> = xs.iter().map(|&(f, d)| FDPair::new(f, d)).collect();
        let mut rev = pairs.clone();
        rev.reverse();
        let u = fd_union(&pairs).unwrap();
        prop_assert_eq!(u, fd_union(&rev).unwrap());
        let i = fd_intersection(&pairs).unwrap();
        prop_assert_eq!(i.degree, u.degree);
        prop_assert_eq!(i.format, u.format + 1);
        prop_assert_eq!(u.degree, xs.iter().map(|x| x.1).sum::<u64>());
    }
}
