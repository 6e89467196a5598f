//! Exact symbolic kernel: symbols, polynomials, canonical rational
//! expressions, and the auxiliary-relation machinery (trig pairs, radicals).

pub mod ast;
#[allow(clippy::module_inception)]
pub mod expr;
pub mod gcd;
pub mod poly;
pub mod symbol;

pub use ast::{eval_ast, normalize, Ast};
pub use expr::{derive_aux_values, rational_to_float, Expr, ExprError};
pub use poly::{Monomial, Poly};
pub use symbol::{
    AuxRule, Context, DuplicateSymbol, RelationSet, SymbolId, SymbolKind, SymbolTable,
};
