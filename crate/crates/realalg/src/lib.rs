//! Exact and certified real algebra for small semialgebraic problems.
//!
//! Polynomials carry exact rational coefficients. Real roots are isolated by
//! Sturm sequences. Everything analytic is bounded through [`Jet`], a truncated
//! Taylor expansion whose coefficients are outward-rounded [`Interval`]s.

pub mod algebraic;
pub mod expr;
pub mod interval;
pub mod jet;
pub mod mpoly;
pub mod rational;
pub mod roots;
pub mod sexpr;
pub mod upoly;

mod eval;
mod canon;

pub use algebraic::{AlgebraicNumber, RealNum};
pub use expr::{AlgFunc, InvBranch, Node, SectionSpec};
pub use interval::Interval;
pub use jet::Jet;
pub use mpoly::MPoly;
pub use rational::Q;
pub use roots::{isolate_roots, IsolatingInterval};
pub use sexpr::{parse_expr, ParseError};
pub use upoly::UPoly;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgError {
    #[error("zero polynomial has no isolated roots")]
    ZeroPolynomial,
    #[error("root isolation budget exhausted on ({lo}, {hi})")]
    Budget { lo: String, hi: String },
    #[error("function is not monotone on the requested interval")]
    NotMonotone,
    #[error("domain violation: {0}")]
    Domain(String),
}
