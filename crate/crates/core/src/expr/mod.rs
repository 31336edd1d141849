//! Differential functions on jet space.
//!
//! An [`Expr`] is kept permanently in normal form: a numerator and a
//! denominator, each a sparse Laurent polynomial with rational coefficients
//! over interned [`Atom`]s. Coordinates, parameters, jet variables, source
//! functions and function applications are all atoms. An expression vanishes
//! identically exactly when its numerator is empty.

mod atom;
mod display;
mod eval;
mod func;
mod poly;
mod value;
mod vector;

pub use atom::{atom, intern, Atom, AtomId, Axis, FuncApp, JetVar, MultiIndex, Sym};
pub use eval::Binding;
pub use func::{func_def, lookup_builtin, register_function, self_marker, FuncDef, FuncId, NumericFn};
pub use poly::{Mono, Poly, Q};
pub use value::Expr;
pub use vector::VectorExpr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("substitution rule for `{0}` contains `{0}` on its right side")]
    CyclicSubstitution(String),
    #[error("no numeric value bound for `{0}`")]
    MissingBinding(String),
    #[error("evaluation produced a non-finite value in `{0}`")]
    NumericOverflow(String),
    #[error("function `{name}` takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

pub type Result<T> = std::result::Result<T, ExprError>;

#[cfg(test)]
mod tests;
