//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use realalg::{parse_expr, AlgFunc, Interval, Q};

use forts::cad::cad_2;
use forts::certify::cell_box;
use forts::engine::{cubic_substitute, parametrize_1d, smooth_1d, EngineConfig, ParamResult};
use forts::fort::{validate_fort, Fort, FortPoint};
use forts::generate::{random_extension, random_fort, random_natural_morphism, random_point, random_subfort, rng};
use forts::ledger::{audit_poly_growth, fd_complement, fd_cylinder, fd_intersection, fd_project, fd_union, FDPair, GrowthSeries};
use forts::morphism::{combinatorially_equivalent, fiber_morphism, inverse_image, pullback};
use forts::norm::{certify_r_function, cr_norm_box, ROUNDING_SLACK};
use forts::plane::{parametrize_2d_fun, parametrize_2d_set, smooth_2d};
use forts::verify::{
    check_cylindrical, check_refinement, enumerate_forts, fd_check_result, is_r_morphism, t_junction_complex, verify_result,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e(s: &str) -> AlgFunc {
    parse_expr(s).unwrap()
}

/// Independent recertification of every pullback of a result.
fn recertify(p: &ParamResult) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for c in &p.cells {
        let bx = cell_box(&c.cell);
        for f in c.coords.iter().chain(&c.funcs) {
            let b = certify_r_function(f, &bx, p.r, 20_000).bound;
            ensure!(b <= 1.0 + ROUNDING_SLACK, "{}: pullback {} has norm bound {b}", c.cell, f);
            worst = worst.max(b);
        }
    }
    Ok(worst)
}

/// Equal flat encodings have equal cell sets; `with_cells` also compares the
/// cell lists built independently from both forms.
fn round_trip(f: &Fort, with_cells: bool) -> Result<(), String> {
    let w = f.to_width_form();
    let back = w.to_height_form().map_err(|e| e.to_string())?;
    ensure!(back == *f, "round trip changed {}", f.to_text());
    if with_cells {
        ensure!(back.cells() == f.cells() && w.cells() == f.cells(), "cell sets differ for {}", f.to_text());
    }
    Ok(())
}

fn fort_equivalence() -> Outcome {
    let t = Instant::now();
    let mut n = 0;
    let mut bad = None;
    for len in 1..=2 {
        enumerate_forts(len, 40, &mut |f| {
            n += 1;
            if bad.is_none() {
                bad = round_trip(f, n % 997 == 0).err();
            }
        })
        .map_err(|e| e.to_string())?;
    }
    if let Some(b) = bad {
        return Err(b);
    }
    let mut r = rng(11);
    for _ in 0..500 {
        let f = random_fort(3, 60, 3, &mut r);
        round_trip(&f, true)?;
    }
    let dt = t.elapsed();
    ensure!(dt < Duration::from_secs(60), "took {dt:?}");
    Ok(format!("{n} exhaustive + 500 random forts, {:.2}s", dt.as_secs_f64()))
}

fn structure_proposition() -> Outcome {
    let mut r = rng(21);
    let mut checks = 0;
    for s in 0..200u64 {
        let len = 1 + (s % 3) as usize;
        let target = random_fort(len, 12, 2, &mut r);
        let m = random_natural_morphism(&target, 2, s, 1000 + s);
        m.validate().map_err(|e| format!("generated map {s} invalid: {e}"))?;
        let src = m.source();
        for k in 1..len {
            for c in src.prefix_cells(k) {
                let fib = src.fiber(&c).map_err(|e| e.to_string())?;
                let over: Vec<_> = src.cells().into_iter().filter(|x| x.prefix(k) == c).collect();
                let lifted: Vec<_> = fib.cells().iter().map(|x| c.concat(x)).collect();
                ensure!(over == lifted, "map {s}: cells over {c} do not match its fiber");
                let mut first = None;
                for _ in 0..5 {
                    let x = FortPoint::new(random_point(&c, &mut r));
                    ensure!(src.fiber_at(&x).map_err(|e| e.to_string())? == fib, "map {s}: fiber at {x} differs over {c}");
                    let fm = fiber_morphism(&m, &x).map_err(|e| e.to_string())?;
                    fm.validate().map_err(|e| format!("map {s}: fiber map at {x}: {e}"))?;
                    match &first {
                        None => first = Some(fm),
                        Some(f0) => ensure!(
                            combinatorially_equivalent(f0, &fm).map_err(|e| e.to_string())?,
                            "map {s}: fiber maps over {c} not equivalent"
                        ),
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("200 maps, {checks} sampled fibers"))
}

fn inverse_image_and_pullback() -> Outcome {
    let mut r = rng(31);
    for s in 0..200u64 {
        let len = 1 + (s % 3) as usize;
        let target = random_fort(len, 12, 2, &mut r);
        let m = random_natural_morphism(&target, 2, s, 2000 + s);
        let sub = random_subfort(&target, &mut r);
        let (f, restricted) = inverse_image(&m, &sub).map_err(|e| format!("instance {s}: {e}"))?;
        validate_fort(&f.cells()).map_err(|e| format!("instance {s}: {e}"))?;
        restricted.validate().map_err(|e| format!("instance {s}: {e}"))?;
    }
    for s in 0..100u64 {
        let len = 1 + (s % 2) as usize;
        let target = random_fort(len, 10, 2, &mut r);
        let a = random_natural_morphism(&target, 2, 500 + s, 3000 + s);
        let b = random_natural_morphism(&target, 2, 500 + s, 4000 + s);
        ensure!(combinatorially_equivalent(&a, &b).map_err(|e| e.to_string())?, "pair {s} not equivalent");
        let ext = random_extension(&target, 2, &mut r);
        let (fa, ma) = pullback(&a, &ext).map_err(|e| e.to_string())?;
        let (fb, mb) = pullback(&b, &ext).map_err(|e| e.to_string())?;
        ensure!(fa == fb, "pair {s}: pullback forts differ");
        ma.validate().map_err(|e| format!("pair {s}: {e}"))?;
        mb.validate().map_err(|e| format!("pair {s}: {e}"))?;
    }
    Ok("200 inverse images, 100 equivalent pullback pairs".into())
}

/// Random polynomial scaled to have (r-1)-norm at most 1 on the unit interval.
fn scaled_poly(r: usize, g: &mut impl Rng) -> AlgFunc {
    let deg = g.gen_range(2..=5);
    let cs: Vec<String> = (0..=deg).map(|_| g.gen_range(-4..=4i64).to_string()).collect();
    let p = e(&format!("(poly [{}] x)", cs.join(" ")));
    let bound = cr_norm_box(&p, &[Interval::new(0.0, 1.0)], r - 1).bound.max(1e-3);
    let scale = ((bound * 1.01 * 64.0).ceil() as i64).max(1);
    p.mul(&AlgFunc::rat(Q::new(64.into(), scale.into())))
}

fn cubic_substitution() -> Outcome {
    let t = Instant::now();
    let mut g = rng(41);
    let mut points = 0;
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let r = 2 + (k % 3) as usize;
        let f = scaled_poly(r, &mut g);
        let pre = certify_r_function(&f, &[Interval::new(0.0, 1.0)], r - 1, 20_000).bound;
        ensure!(pre <= 1.0 + ROUNDING_SLACK, "input {f} is not an {}-function: {pre}", r - 1);
        let p = cubic_substitute(std::slice::from_ref(&f), &EngineConfig::new(r)).map_err(|e| format!("{f}: {e}"))?;
        worst = worst.max(recertify(&p)?);
        let per_cell = (1000 / (50 * p.cells.len())).max(2);
        let fd = fd_check_result(&p, per_cell, k).map_err(|e| e.to_string())?;
        ensure!(fd.pass, "{f}, r={r}:\n{}", fd.table());
        points += per_cell * p.cells.len();
    }
    let dt = t.elapsed();
    ensure!(points >= 1000, "only {points} sample points");
    ensure!(dt < Duration::from_secs(300), "took {dt:?}");
    Ok(format!("50 polynomials, worst bound {worst:.6}, {points} FD points, {:.2}s", dt.as_secs_f64()))
}

/// Brute-force cell count: greedy left-to-right pieces on a 2^-12 grid, each
/// either affine or, when an inverse is given, affine in the value.  Norms are
/// sampled, not certified.
fn greedy_cells(f: &AlgFunc, inverse: Option<&AlgFunc>, r: usize) -> usize {
    const GRID: i64 = 1 << 12;
    const SAMPLES: usize = 256;
    let derivs = |h: &AlgFunc| {
        let mut out = vec![h.clone()];
        for k in 0..r {
            out.push(out[k].deriv(0));
        }
        out
    };
    let fd = derivs(f);
    let gd = inverse.map(derivs);
    let fact = |k: usize| (1..=k).product::<usize>() as f64;
    let fits = |ds: &[AlgFunc], lo: f64, hi: f64| {
        (0..=SAMPLES).all(|i| {
            let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
            ds.iter().enumerate().all(|(k, d)| {
                let v = (hi - lo).powi(k as i32) * d.eval_f64(&[x]).abs() / fact(k);
                v.is_finite() && v <= 1.0
            })
        })
    };
    let ok = |a: i64, b: i64| {
        let (lo, hi) = (a as f64 / GRID as f64, b as f64 / GRID as f64);
        if fits(&fd, lo, hi) {
            return true;
        }
        match &gd {
            Some(gd) => fits(gd, f.eval_f64(&[lo]), f.eval_f64(&[hi])),
            None => false,
        }
    };
    let (mut a, mut pieces) = (0i64, 0usize);
    while a < GRID {
        let (mut lo, mut hi) = (a + 1, GRID);
        assert!(ok(a, lo), "no piece starts at {a}/{GRID}");
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if ok(a, mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        a = lo;
        pieces += 1;
    }
    2 * pieces - 1
}

fn end_to_end_1d() -> Outcome {
    let mut suite: Vec<(AlgFunc, Option<AlgFunc>, String)> =
        (2..=12).map(|d| (e(&format!("(pow x {d})")), None, format!("x^{d}"))).collect();
    suite.push((e("(inv (pow x 2) (0 1) x)"), Some(e("(pow x 2)")), "sqrt".into()));
    suite.push((e("(div 1 (add 1 x))"), None, "1/(1+x)".into()));
    let mut worst_ratio: f64 = 0.0;
    let mut runs = 0;
    for r in [2usize, 3] {
        let cfg = EngineConfig::new(r);
        for (f, inv, name) in &suite {
            let d = smooth_1d(std::slice::from_ref(f));
            let p = parametrize_1d(&d, std::slice::from_ref(f), &cfg).map_err(|e| format!("{name}, r={r}: {e}"))?;
            recertify(&p).map_err(|e| format!("{name}, r={r}: {e}"))?;
            let v = verify_result(&p, &d);
            ensure!(v.pass, "{name}, r={r}:\n{}", v.table());
            let oracle = greedy_cells(f, inv.as_ref(), r);
            let ratio = p.cell_count() as f64 / oracle as f64;
            ensure!(ratio <= 4.0, "{name}, r={r}: {} cells against greedy {oracle}", p.cell_count());
            worst_ratio = worst_ratio.max(ratio);
            runs += 1;
        }
    }
    Ok(format!("{runs} runs certified and verified, worst cells/greedy ratio {worst_ratio:.2}"))
}

fn end_to_end_2d() -> Outcome {
    let cfg = EngineConfig::new(2);
    let polys = vec![e("(sub y (pow x 2))").to_mpoly().unwrap().with_nvars(2)];
    let funcs = vec![e("(mul x y)"), e("(div y (add 1 x))")];
    let coarse = cad_2(&polys);
    let cyl = check_cylindrical(&coarse.complex());
    ensure!(cyl.pass, "cad not cylindrical:\n{}", cyl.table());
    let set = parametrize_2d_set(&coarse, &cfg).map_err(|e| e.to_string())?;
    recertify(&set)?;
    ensure!(is_r_morphism(&set.image, 2).pass, "set parametrization is not a 2-morphism");
    let v = verify_result(&set, &coarse);
    ensure!(v.pass, "set:\n{}", v.table());
    let d = smooth_2d(&polys, &funcs);
    let fun = parametrize_2d_fun(&d, &funcs, &cfg).map_err(|e| e.to_string())?;
    recertify(&fun)?;
    ensure!(is_r_morphism(&fun.image, 2).pass, "function parametrization is not a 2-morphism");
    let v = verify_result(&fun, &d);
    ensure!(v.pass, "functions:\n{}", v.table());
    let refine = check_refinement(&fun.image, &coarse);
    ensure!(refine.pass, "not a refinement of the cad:\n{}", refine.table());
    ensure!(check_cylindrical(&d.complex()).pass, "smoothing cad not cylindrical");
    ensure!(!check_cylindrical(&t_junction_complex()).pass, "T-junction complex passed the cylindricity check");
    Ok(format!("set {} cells, functions {} cells, negative control rejected", set.cell_count(), fun.cell_count()))
}

fn read_series(csv: &str) -> Vec<(u64, u64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<u64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect()
}

fn sharpness() -> Outcome {
    let dir = std::env::temp_dir().join(format!("forts-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let bench = |gen: &str| -> Result<(i32, Vec<(u64, u64)>), String> {
        let path = dir.join(format!("{gen}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_forts"))
            .args(["bench", "--gen", gen, "--from", "2", "--to", "12", "--r", "2", "--csv"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        Ok((out.status.code().unwrap_or(-1), read_series(&text)))
    };
    let (code, series) = bench("pow")?;
    ensure!(series.len() == 11, "{} rows", series.len());
    ensure!(code == 0, "bench exited {code}");
    let fit = audit_poly_growth(&GrowthSeries::new(series.clone()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(fit.drift.abs() < 0.5 && !fit.flagged, "drift {}", fit.drift);
    let (code, _) = bench("exp2")?;
    ensure!(code == 1, "exponential control not flagged (exit {code})");
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("exponent {:.3}, drift {:.3}; exponential control flagged", fit.exponent, fit.drift))
}

fn ledger_rules() -> Outcome {
    let p = FDPair::new;
    ensure!(fd_union(&[p(2, 3), p(2, 5)]).unwrap() == p(2, 8), "union");
    ensure!(fd_union(&[p(3, 4)]).unwrap() == p(3, 4), "single union");
    ensure!(fd_union(&[p(2, 3); 4]).unwrap() == p(2, 12), "repeated union");
    ensure!(fd_union(&[p(1, 1), p(4, 2)]).unwrap() == p(4, 3), "mixed union");
    ensure!(fd_intersection(&[p(2, 3), p(2, 5)]).unwrap() == p(3, 8), "intersection");
    ensure!(fd_intersection(&[p(2, 3)]).unwrap() == p(3, 3), "single intersection");
    ensure!(fd_intersection(&[p(2, 3), p(2, 3)]).unwrap() == p(3, 6), "repeated intersection");
    ensure!(fd_union(&[]).is_err() && fd_intersection(&[]).is_err(), "empty lists");
    for op in [fd_project, fd_complement, fd_cylinder] {
        ensure!(op(p(3, 7)) == p(4, 7), "unary rule");
        ensure!(op(op(p(3, 7))) == p(5, 7), "chained unary rule");
    }
    ensure!(fd_project(FDPair::zero_set(2, 5)) == p(3, 5), "projected zero set");
    Ok("union, intersection, projection, complement, cylinder and zero-set rules".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("fort equivalence round trip", fort_equivalence),
        ("structure of fibers", structure_proposition),
        ("inverse image and pullback", inverse_image_and_pullback),
        ("cubic substitution", cubic_substitution),
        ("end-to-end on the interval", end_to_end_1d),
        ("end-to-end on the square", end_to_end_2d),
        ("growth audit", sharpness),
        ("ledger rules", ledger_rules),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
