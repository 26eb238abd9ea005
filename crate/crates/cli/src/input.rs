//! Input files: one expression per line, optionally tagged `poly` or `func`.

use realalg::{parse_expr, AlgFunc, MPoly};

#[derive(Debug, Default)]
pub struct Input {
    pub polys: Vec<MPoly>,
    pub funcs: Vec<AlgFunc>,
}

#[derive(Debug)]
pub struct InputError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Bare {
    Poly,
    Func,
}

/// Parse the text of an input file; untagged lines are read as `bare`.
/// `#` starts a comment.
pub fn parse_input(src: &str, bare: Bare, nvars: usize) -> Result<Input, InputError> {
    let mut out = Input::default();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("");
        let body = text.trim_start();
        if body.trim().is_empty() {
            continue;
        }
        let lead = text.len() - body.len();
        let (kind, expr, skip) = if let Some(rest) = body.strip_prefix("poly ") {
            (Bare::Poly, rest, 5)
        } else if let Some(rest) = body.strip_prefix("func ") {
            (Bare::Func, rest, 5)
        } else {
            (bare, body, 0)
        };
        let col0 = lead + skip + 1;
        let e = parse_expr(expr).map_err(|e| InputError { line, col: col0 + e.col.saturating_sub(1), msg: e.msg })?;
        if e.nvars() > nvars {
            return Err(InputError { line, col: col0, msg: format!("uses {} variables, at most {nvars} allowed", e.nvars()) });
        }
        match kind {
            Bare::Poly => {
                let p = e.to_mpoly().ok_or_else(|| InputError { line, col: col0, msg: "not a polynomial".into() })?;
                out.polys.push(p.with_nvars(nvars));
            }
            Bare::Func => out.funcs.push(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_and_errors() {
        let i = parse_input("poly (sub y (pow x 2))\n# note\nfunc (mul x y)\n(add x 1)\n", Bare::Func, 2).unwrap();
        assert_eq!((i.polys.len(), i.funcs.len()), (1, 2));
        let e = parse_input("\npoly (sub y (pow x 2)\n", Bare::Poly, 2).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_input("poly (div 1 x)", Bare::Poly, 1).is_err());
        assert!(parse_input("(mul x y)", Bare::Poly, 1).is_err());
    }
}
