//! Symbolic and numerical tools for conservation laws of 3-D PDE systems.

pub mod expr;

pub use expr::{Atom, Axis, Binding, Expr, ExprError, JetVar, MultiIndex, VectorExpr};
pub mod jetcalc;
pub mod testing;
pub mod sysdef;
pub mod conslaw;
pub mod mappings;
pub mod dsl;
pub mod catalog;
pub mod numgrid;
