use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use forts::cad::{cad_1, cad_2, cr_locus_1, Decomposition};
use forts::engine::{parametrize_1d, power_row, EngineConfig, EngineError, ParamResult};
use forts::ledger::{audit_poly_growth, write_csv, GrowthRow, GrowthSeries};
use forts::morphism::Level;
use forts::plane::{parametrize_2d_fun, parametrize_2d_set, smooth_2d};
use forts::verify::{enumerate_forts, fd_check_result, verify_result, Verdict};

mod input;
mod svg;

use input::{parse_input, Bare};

const PASS: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "forts", version, about = "Cylindrical decompositions and certified C^r parametrizations of the unit interval and square")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose I or I^2 compatibly with the zero sets of polynomials.
    Decompose {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        ell: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Parametrize a decomposition (and functions on it) with maps of C^r norm at most 1.
    Parametrize {
        input: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        /// Cap on subdivision orders and pieces per cell.
        #[arg(long)]
        budget: Option<u32>,
        /// Seed for the sampled cross-checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Count (and optionally list) all forts up to a size.
    Enumerate {
        #[arg(long)]
        ell: usize,
        #[arg(long = "max")]
        max_cells: usize,
        /// Print every fort, one per line.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Cell counts of a family of inputs against a size parameter, with a growth fit.
    Bench {
        #[arg(long = "gen", value_enum)]
        generator: Generator,
        #[arg(long)]
        from: u32,
        #[arg(long)]
        to: u32,
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long)]
        budget: Option<u32>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    /// `x^D` on the unit interval.
    Pow,
    /// Synthetic counts `2^D`, no pipeline.
    Exp2,
}

struct Fail(u8, String);

type Run = Result<u8, Fail>;

fn usage(msg: impl Into<String>) -> Fail {
    Fail(USAGE, msg.into())
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail(FAILED, format!("{}: {e}", path.display())))
}

fn read_input(path: &Path, bare: Bare, ell: usize) -> Result<input::Input, Fail> {
    let src = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_input(&src, bare, ell).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn check_ell(ell: usize) -> Result<(), Fail> {
    if ell == 1 || ell == 2 {
        Ok(())
    } else {
        Err(usage(format!("--ell must be 1 or 2, got {ell}")))
    }
}

fn decompose(polys: &[realalg::MPoly], ell: usize) -> Decomposition {
    if ell == 1 {
        let us: Vec<_> = polys.iter().map(|p| p.to_upoly(0)).collect();
        cad_1(&us)
    } else {
        cad_2(polys)
    }
}

fn level_text(l: &Level) -> String {
    match l {
        Level::Point(p) => format!("point({p})"),
        Level::Band(a, b) => format!("band({a}, {b})"),
    }
}

fn decomposition_json(d: &Decomposition) -> serde_json::Value {
    let cells: Vec<_> = d
        .fort
        .cells()
        .iter()
        .zip(&d.cells)
        .zip(&d.fd)
        .map(|((c, desc), fd)| {
            json!({
                "cell": c.to_string(),
                "levels": desc.levels.iter().map(level_text).collect::<Vec<_>>(),
                "fd": [fd.format, fd.degree],
            })
        })
        .collect();
    json!({
        "dim": d.dim,
        "fort": d.fort.to_text(),
        "morphism": d.morphism.to_text(),
        "cells": cells,
    })
}

fn cmd_decompose(path: &Path, ell: usize, out: Option<&Path>, svg_out: Option<&Path>) -> Run {
    check_ell(ell)?;
    let inp = read_input(path, Bare::Poly, ell)?;
    let d = decompose(&inp.polys, ell);
    let text = serde_json::to_string_pretty(&decomposition_json(&d)).expect("plain data");
    match out {
        Some(p) => write(p, &text)?,
        None => println!("{text}"),
    }
    if let Some(p) = svg_out {
        if ell != 2 {
            return Err(usage("--svg needs --ell 2"));
        }
        write(p, &svg::decomposition_svg(&d, None))?;
    }
    eprintln!("{} cells, fort {}", d.cell_count(), d.fort.to_text());
    Ok(PASS)
}

fn engine_fail(e: EngineError) -> Fail {
    match e {
        EngineError::Budget { .. } => Fail(BUDGET, e.to_string()),
        EngineError::Precondition(_) => usage(e.to_string()),
        _ => Fail(FAILED, e.to_string()),
    }
}

fn run_parametrize(inp: &input::Input, ell: usize, cfg: &EngineConfig) -> Result<(Decomposition, ParamResult), EngineError> {
    if ell == 1 {
        let mut us: Vec<_> = inp.polys.iter().map(|p| p.to_upoly(0)).collect();
        us.extend(cr_locus_1(&inp.funcs).polys);
        let d = cad_1(&us);
        let p = parametrize_1d(&d, &inp.funcs, cfg)?;
        Ok((d, p))
    } else if inp.funcs.is_empty() {
        let d = cad_2(&inp.polys);
        let p = parametrize_2d_set(&d, cfg)?;
        Ok((d, p))
    } else {
        let d = smooth_2d(&inp.polys, &inp.funcs);
        let p = parametrize_2d_fun(&d, &inp.funcs, cfg)?;
        Ok((d, p))
    }
}

/// Sample points per cell in the finite-difference cross-check.
const FD_POINTS: usize = 16;

#[allow(clippy::too_many_arguments)]
fn cmd_parametrize(path: &Path, r: usize, ell: usize, budget: Option<u32>, seed: u64, out: Option<&Path>, svg_out: Option<&Path>) -> Run {
    if r == 0 {
        return Err(usage("--r must be at least 1"));
    }
    check_ell(ell)?;
    let inp = read_input(path, Bare::Func, ell)?;
    let mut cfg = EngineConfig::new(r);
    if let Some(b) = budget {
        if b == 0 {
            return Err(usage("--budget must be positive"));
        }
        cfg.budget = b;
    }
    let (d, p) = run_parametrize(&inp, ell, &cfg).map_err(engine_fail)?;
    let mut verdict = verify_result(&p, &d);
    let fd: Verdict = fd_check_result(&p, FD_POINTS, seed).map_err(|e| Fail(FAILED, e.to_string()))?;
    verdict.merge(fd);
    let report = json!({
        "r": r,
        "ell": ell,
        "seed": seed,
        "cells": p.cell_count(),
        "max_bound": p.max_bound(),
        "fort": p.fort.to_text(),
        "format": p.fd.format,
        "degree": p.fd.degree,
        "pieces": p.stats.pieces,
        "reparametrized": p.stats.reparametrized,
        "orders": p.stats.orders,
        "image": p.image.to_text(),
        "verdict": verdict,
    });
    if let Some(o) = out {
        write(o, &serde_json::to_string_pretty(&report).expect("plain data"))?;
    }
    if let Some(s) = svg_out {
        if ell != 2 {
            return Err(usage("--svg needs --ell 2"));
        }
        write(s, &svg::decomposition_svg(&d, Some(&p.image)))?;
    }
    println!("cells {}  max bound {:.6}  format/degree {}", p.cell_count(), p.max_bound(), p.fd);
    print!("{}", verdict.table());
    Ok(if verdict.pass { PASS } else { FAILED })
}

fn cmd_enumerate(ell: usize, max: usize, list: bool, out: Option<&Path>, svg_out: Option<&Path>) -> Run {
    let mut all = vec![];
    let keep = list || out.is_some() || svg_out.is_some();
    let n = enumerate_forts(ell, max, &mut |f| {
        if keep {
            all.push(f.clone());
        }
    })
    .map_err(|e| usage(e.to_string()))?;
    let text: String = all.iter().map(|f| f.to_text() + "\n").collect();
    if list {
        print!("{text}");
    }
    if let Some(o) = out {
        write(o, &text)?;
    }
    if let Some(s) = svg_out {
        if ell > 2 {
            return Err(usage("fort pictures need --ell 1 or 2"));
        }
        write(s, &svg::forts_svg(&all))?;
    }
    println!("{n} forts");
    Ok(PASS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(generator: Generator, from: u32, to: u32, r: usize, budget: Option<u32>, csv_out: Option<&Path>, out: Option<&Path>) -> Run {
    if from == 0 || from > to {
        return Err(usage(format!("empty range {from}..={to}")));
    }
    if r == 0 {
        return Err(usage("--r must be at least 1"));
    }
    let mut cfg = EngineConfig::new(r);
    if let Some(b) = budget {
        cfg.budget = b.max(1);
    }
    let mut rows = vec![];
    let mut failures = vec![];
    for d in from..=to {
        let row = match generator {
            Generator::Pow => power_row(d, &cfg),
            Generator::Exp2 => Ok(GrowthRow { d: d as u64, cells: 1u64 << d.min(62), format: 1, degree: d as u64 }),
        };
        match row {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("D={d}: {e}");
                failures.push(json!({"D": d, "error": e.to_string()}));
            }
        }
    }
    let mut buf = vec![];
    write_csv(&mut buf, &rows).map_err(|e| Fail(FAILED, e.to_string()))?;
    let csv_text = String::from_utf8(buf).expect("csv is utf-8");
    match csv_out {
        Some(p) => write(p, &csv_text)?,
        None => print!("{csv_text}"),
    }
    let series = GrowthSeries::new(rows.iter().map(|r| (r.d, r.cells)).collect());
    let fit = series.map_err(|e| e.to_string()).and_then(|s| audit_poly_growth(&s).map_err(|e| e.to_string()));
    let (report, code) = match &fit {
        Ok(f) => (json!({"fit": f, "failures": failures}), if f.flagged { FAILED } else { PASS }),
        Err(e) => (json!({"fit": null, "error": e, "failures": failures}), FAILED),
    };
    let say = match &fit {
        Ok(f) => format!(
            "exponent {:.3}  lower {:.3}  upper {:.3}  drift {:.3}  {}",
            f.exponent,
            f.lower_exponent,
            f.upper_exponent,
            f.drift,
            if f.flagged { "FLAGGED: growth faster than polynomial" } else { "polynomial" }
        ),
        Err(e) => format!("no fit: {e}"),
    };
    if csv_out.is_some() {
        println!("{say}");
    } else {
        eprintln!("{say}");
    }
    if let Some(o) = out {
        write(o, &serde_json::to_string_pretty(&report).expect("plain data"))?;
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    let run = match cli.cmd {
        Command::Decompose { input, ell, out, svg } => cmd_decompose(&input, ell, out.as_deref(), svg.as_deref()),
        Command::Parametrize { input, r, ell, budget, seed, out, svg } => {
            cmd_parametrize(&input, r, ell, budget, seed, out.as_deref(), svg.as_deref())
        }
        Command::Enumerate { ell, max_cells, list, out, svg } => cmd_enumerate(ell, max_cells, list, out.as_deref(), svg.as_deref()),
        Command::Bench { generator, from, to, r, budget, csv, out } => cmd_bench(generator, from, to, r, budget, csv.as_deref(), out.as_deref()),
    };
    match run {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
