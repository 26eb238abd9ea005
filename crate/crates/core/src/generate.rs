//! Seeded random forts and natural morphisms for property checks.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realalg::{AlgFunc, Q};

use crate::fort::{Entry, Fort, IntegerCell};
use crate::morphism::{Morphism, Piece};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random fort of length `len` with at most `max_cells` cells.
pub fn random_fort(len: usize, max_cells: usize, max_height: u32, rng: &mut impl Rng) -> Fort {
    loop {
        let f = Fort::build(len, |_| rng.gen_range(1..=max_height));
        if let Ok(f) = f {
            if f.cell_count() <= max_cells {
                return f;
            }
        }
    }
}

/// A subfort sharing the lower-left corner of `f`.
pub fn random_subfort(f: &Fort, rng: &mut impl Rng) -> Fort {
    Fort::build(f.len(), |p| {
        let h = if p.is_empty() { f.width() } else { f.height_over(p).expect("cell of f") };
        rng.gen_range(1..=h)
    })
    .expect("subfort of a valid fort")
}

pub fn random_extension(f: &Fort, max_height: u32, rng: &mut impl Rng) -> Fort {
    let hs = (0..f.cell_count()).map(|_| rng.gen_range(1..=max_height)).collect();
    f.extend_vec(hs).expect("small extension")
}

/// Rational point of a cell at random local coordinates with denominator 64.
pub fn random_point(c: &IntegerCell, rng: &mut impl Rng) -> Vec<Q> {
    let t: Vec<Q> = (0..c.len()).map(|_| Q::new(rng.gen_range(1..64).into(), 64.into())).collect();
    c.point_at(&t)
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// How one source column covers a target column of height `h`.
struct Column {
    /// Source intervals per target interval.
    counts: Vec<u32>,
}

/// A random natural morphism onto `target`.  The combinatorial choices come
/// from `comb_seed` and the breakpoints from `num_seed`, so two calls with the
/// same `comb_seed` give combinatorially equivalent maps.
pub fn random_natural_morphism(target: &Fort, max_split: u32, comb_seed: u64, num_seed: u64) -> Morphism {
    let mut comb = rng(comb_seed);
    let mut num = rng(num_seed);
    // Source prefix cell -> (target prefix cell, coordinate functions).
    let mut plan: HashMap<IntegerCell, (IntegerCell, Vec<AlgFunc>)> = HashMap::new();
    plan.insert(IntegerCell::default(), (IntegerCell::default(), vec![]));
    let len = target.len();
    let source = Fort::build(len, |p| {
        let (tp, fns) = plan[p].clone();
        let h = if tp.is_empty() { target.width() } else { target.height_over(&tp).expect("target cell") };
        let col = Column { counts: (0..h).map(|_| comb.gen_range(1..=max_split)).collect() };
        let k = p.len();
        let wobble = (k > 0 && p.entries()[0].is_interval()).then(|| AlgFunc::var(0).sub(&AlgFunc::rat(q(1, 2))));
        let mut s = 0u32;
        for (j, &c) in col.counts.iter().enumerate() {
            let ends = breakpoints(c, wobble.as_ref(), &mut num);
            let base = AlgFunc::int(j as i64);
            for t in 0..c as usize {
                let (a, b) = (&ends[t], &ends[t + 1]);
                let u = AlgFunc::var(k);
                let fi = base.add(a).add(&u.mul(&b.sub(a)));
                let mut f = fns.clone();
                f.push(fi);
                plan.insert(p.pushed(Entry::Interval(s)), (tp.pushed(Entry::Interval(j as u32)), f));
                s += 1;
                if s < col.counts.iter().sum::<u32>() {
                    let (te, fi) = if t + 1 == c as usize {
                        (Entry::Point(j as u32 + 1), AlgFunc::int(j as i64 + 1))
                    } else {
                        (Entry::Interval(j as u32), base.add(b))
                    };
                    let mut f = fns.clone();
                    f.push(fi);
                    plan.insert(p.pushed(Entry::Point(s)), (tp.pushed(te), f));
                }
            }
        }
        s
    })
    .expect("generated fort");
    let pieces = source
        .cells()
        .into_iter()
        .map(|c| {
            let (t, f) = plan.remove(&c).expect("planned cell");
            Piece::new(c, t, f)
        })
        .collect();
    Morphism::new(source, target.clone(), pieces).expect("generated morphism")
}

/// `c+1` increasing ends from 0 to 1, inner ones optionally tilted along `wobble`.
fn breakpoints(c: u32, wobble: Option<&AlgFunc>, rng: &mut impl Rng) -> Vec<AlgFunc> {
    let den = 16 * c as i64;
    let mut cuts: Vec<i64> = vec![];
    while cuts.len() + 1 < c as usize {
        let v = rng.gen_range(1..den);
        if !cuts.contains(&v) {
            cuts.push(v);
        }
    }
    cuts.sort_unstable();
    let mut all = vec![0];
    all.extend(&cuts);
    all.push(den);
    let gap = all.windows(2).map(|w| w[1] - w[0]).min().unwrap_or(den);
    let mut out = vec![AlgFunc::zero()];
    for &v in &cuts {
        let mut e = AlgFunc::rat(q(v, den));
        if let Some(w) = wobble {
            let tilt = rng.gen_range(-1..=1i64);
            if tilt != 0 {
                e = e.add(&w.mul(&AlgFunc::rat(q(tilt * gap, 3 * den))));
            }
        }
        out.push(e);
    }
    out.push(AlgFunc::one());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_maps_validate() {
        let mut r = rng(7);
        for s in 0..30 {
            let len = 1 + s as usize % 3;
            let t = random_fort(len, 12, 2, &mut r);
            let m = random_natural_morphism(&t, 2, s, s + 100);
            m.validate().unwrap_or_else(|e| panic!("{e}\n{}", m.to_text()));
            assert!(m.is_natural());
        }
    }
}
