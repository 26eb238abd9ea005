//! Static SVG pictures of planar decompositions and of small forts.

use std::fmt::Write as _;

use forts::cad::Decomposition;
use forts::morphism::{Level, Morphism};
use forts::{Entry, Fort};

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;
const STEPS: usize = 64;

const FILLS: [&str; 6] = ["#dbe9f6", "#f6e3cf", "#dff0d8", "#efdcef", "#f9f3c9", "#d9f0ef"];

fn header(w: f64, h: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n"
    )
}

fn px(x: f64, y: f64) -> (f64, f64) {
    (PAD + x * SIZE, PAD + (1.0 - y) * SIZE)
}

fn points(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|&(x, y)| {
            let (a, b) = px(x, y);
            format!("{a:.2},{b:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn at(f: &realalg::AlgFunc, x: f64) -> f64 {
    f.eval_f64(&[x])
}

/// Cells of a decomposition of the square, with optional outlines of the
/// pieces of a parametrization drawn on top.
pub fn decomposition_svg(d: &Decomposition, overlay: Option<&Morphism>) -> String {
    let side = SIZE + 2.0 * PAD;
    let mut s = header(side, side);
    s.push_str("<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let mut lines = String::new();
    let mut dots = String::new();
    for (i, c) in d.cells.iter().enumerate() {
        let [first, second] = &c.levels[..] else { continue };
        match (first, second) {
            (Level::Band(a, b), Level::Band(lo, hi)) => {
                let (a, b) = (at(a, 0.0), at(b, 0.0));
                let xs: Vec<f64> = (0..=STEPS).map(|k| a + (b - a) * k as f64 / STEPS as f64).collect();
                let mut pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, at(lo, x))).collect();
                pts.extend(xs.iter().rev().map(|&x| (x, at(hi, x))));
                let _ = writeln!(s, "<polygon points=\"{}\" fill=\"{}\" stroke=\"none\"/>", points(&pts), FILLS[i % FILLS.len()]);
            }
            (Level::Band(a, b), Level::Point(g)) => {
                let (a, b) = (at(a, 0.0), at(b, 0.0));
                let pts: Vec<(f64, f64)> = (0..=STEPS).map(|k| a + (b - a) * k as f64 / STEPS as f64).map(|x| (x, at(g, x))).collect();
                let _ = writeln!(lines, "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f3b73\" stroke-width=\"2\"/>", points(&pts));
            }
            (Level::Point(p), Level::Band(lo, hi)) => {
                let x = at(p, 0.0);
                let _ = writeln!(lines, "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f3b73\" stroke-width=\"2\"/>", points(&[(x, at(lo, x)), (x, at(hi, x))]));
            }
            (Level::Point(p), Level::Point(g)) => {
                let x = at(p, 0.0);
                let (a, b) = px(x, at(g, x));
                let _ = writeln!(dots, "<circle cx=\"{a:.2}\" cy=\"{b:.2}\" r=\"4\" fill=\"#b22222\"/>");
            }
        }
    }
    if let Some(m) = overlay {
        for p in m.pieces() {
            if !p.source.entries().iter().all(|e| e.is_interval()) {
                continue;
            }
            let mut loop_pts = vec![];
            for side in 0..4 {
                for k in 0..STEPS / 4 {
                    let t = k as f64 / (STEPS / 4) as f64;
                    let (u, v) = match side {
                        0 => (t, 0.0),
                        1 => (1.0, t),
                        2 => (1.0 - t, 1.0),
                        _ => (0.0, 1.0 - t),
                    };
                    let y = p.eval_f64(&[u, v]);
                    loop_pts.push((y[0], y[1]));
                }
            }
            let _ = writeln!(s, "<polygon points=\"{}\" fill=\"none\" stroke=\"#888888\" stroke-width=\"0.6\"/>", points(&loop_pts));
        }
    }
    s.push_str(&lines);
    s.push_str(&dots);
    let (a, b) = px(0.0, 1.0);
    let _ = writeln!(s, "<rect x=\"{a:.2}\" y=\"{b:.2}\" width=\"{SIZE:.2}\" height=\"{SIZE:.2}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>");
    s.push_str("</svg>\n");
    s
}

const UNIT: f64 = 28.0;

/// Forts of length one or two side by side, interval cells shaded and
/// point cells drawn as strokes.
pub fn forts_svg(fs: &[Fort]) -> String {
    let tallest = fs.iter().map(|f| if f.len() == 1 { 1 } else { f.level(1).iter().copied().max().unwrap_or(1) }).max().unwrap_or(1);
    let total: u32 = fs.iter().map(|f| f.width() + 1).sum();
    let (w, h) = (PAD * 2.0 + total as f64 * UNIT, PAD * 2.0 + tallest as f64 * UNIT);
    let mut s = header(w, h);
    s.push_str("<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let y0 = h - PAD;
    let mut x0 = PAD;
    for f in fs {
        for c in f.prefix_cells(1) {
            let e = c.entries()[0];
            let x = x0 + e.anchor() as f64 * UNIT;
            let height = if f.len() == 1 { 1 } else { f.height_over(&c).unwrap_or(1) };
            if f.len() == 1 {
                match e {
                    Entry::Interval(_) => {
                        let _ = writeln!(s, "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{UNIT:.1}\" height=\"6\" fill=\"#dbe9f6\" stroke=\"#1f3b73\"/>", y0 - 6.0);
                    }
                    Entry::Point(_) => {
                        let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#b22222\"/>", y0 - 3.0);
                    }
                }
                continue;
            }
            for k in 0..height {
                let y = y0 - (k + 1) as f64 * UNIT;
                match e {
                    Entry::Interval(_) => {
                        let _ = writeln!(s, "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{UNIT:.1}\" height=\"{UNIT:.1}\" fill=\"#dbe9f6\" stroke=\"#1f3b73\"/>");
                    }
                    Entry::Point(_) => {
                        let _ = writeln!(s, "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#b22222\" stroke-width=\"2\"/>", y + UNIT);
                    }
                }
            }
        }
        x0 += (f.width() + 1) as f64 * UNIT;
    }
    s.push_str("</svg>\n");
    s
}
