//! Raw expression trees as produced by the parser, before canonicalization.

use std::collections::BTreeMap;

use num::rational::BigRational;

use super::expr::{Expr, ExprError};
use super::poly::Poly;
use super::symbol::{Context, SymbolId};

#[derive(Debug, Clone, PartialEq)]
pub enum Ast {
    Num(BigRational),
    Var(SymbolId),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Neg(Box<Ast>),
    Pow(Box<Ast>, i64),
    Sin(Box<Ast>),
    Cos(Box<Ast>),
    Sqrt(Box<Ast>),
}

/// Canonicalize a raw tree. Registers trig pairs and radicals in `ctx` as
/// they are encountered; a sqrt of a rational expression n/d is rewritten to
/// sqrt(n*d)/d so the registered radicand stays polynomial.
pub fn normalize(ast: &Ast, ctx: &mut Context) -> Result<Expr, ExprError> {
    match ast {
        Ast::Num(r) => Ok(Expr::from_rational(r.clone())),
        Ast::Var(id) => Ok(Expr::var(*id)),
        Ast::Add(a, b) => {
            let ea = normalize(a, ctx)?;
            let eb = normalize(b, ctx)?;
            Ok(ea.add(&eb, ctx))
        }
        Ast::Sub(a, b) => {
            let ea = normalize(a, ctx)?;
            let eb = normalize(b, ctx)?;
            Ok(ea.sub(&eb, ctx))
        }
        Ast::Mul(a, b) => {
            let ea = normalize(a, ctx)?;
            let eb = normalize(b, ctx)?;
            Ok(ea.mul(&eb, ctx))
        }
        Ast::Div(a, b) => {
            let ea = normalize(a, ctx)?;
            let eb = normalize(b, ctx)?;
            ea.div(&eb, ctx)
        }
        Ast::Neg(a) => Ok(normalize(a, ctx)?.neg()),
        Ast::Pow(a, e) => {
            let ea = normalize(a, ctx)?;
            ea.pow(*e, ctx)
        }
        Ast::Sin(a) => {
            let arg = trig_argument(a, ctx)?;
            let (s, _) = ctx.trig_pair(arg);
            Ok(Expr::var(s))
        }
        Ast::Cos(a) => {
            let arg = trig_argument(a, ctx)?;
            let (_, c) = ctx.trig_pair(arg);
            Ok(Expr::var(c))
        }
        Ast::Sqrt(a) => {
            let ea = normalize(a, ctx)?;
            sqrt_expr(&ea, ctx)
        }
    }
}

fn trig_argument(a: &Ast, ctx: &mut Context) -> Result<SymbolId, ExprError> {
    let ea = normalize(a, ctx)?;
    if !ea.denominator().is_one() {
        return Err(ExprError::TrigArgNotSymbol);
    }
    let n = ea.numerator();
    let vars: Vec<_> = n.variables().into_iter().collect();
    if vars.len() == 1 && *n == Poly::var(vars[0]) && !ctx.is_auxiliary(vars[0]) {
        Ok(vars[0])
    } else {
        Err(ExprError::TrigArgNotSymbol)
    }
}

/// sqrt of a canonical expression: for a polynomial radicand register a
/// radical auxiliary directly; for n/d use sqrt(n/d) = sqrt(n*d)/d.
pub fn sqrt_expr(e: &Expr, ctx: &mut Context) -> Result<Expr, ExprError> {
    let poly_ok = |p: &Poly, ctx: &Context| p.variables().iter().all(|v| !ctx.is_auxiliary(*v));
    if !poly_ok(e.numerator(), ctx) || !poly_ok(e.denominator(), ctx) {
        return Err(ExprError::SqrtOfNonPolynomial);
    }
    if e.denominator().is_one() {
        let r = ctx.sqrt_aux(e.numerator());
        return Ok(Expr::var(r));
    }
    let nd = e.numerator() * e.denominator();
    let r = ctx.sqrt_aux(&nd);
    Expr::var(r).div(&Expr::from_poly(e.denominator().clone(), ctx), ctx)
}

/// Evaluate the raw tree directly over floats (the independent route used by
/// the normalize-vs-raw consistency checks).
pub fn eval_ast(ast: &Ast, values: &BTreeMap<SymbolId, f64>) -> Result<f64, ExprError> {
    Ok(match ast {
        Ast::Num(r) => super::poly::rational_to_f64(r),
        Ast::Var(id) => *values
            .get(id)
            .ok_or_else(|| ExprError::UnboundSymbol(format!("#{}", id.0)))?,
        Ast::Add(a, b) => eval_ast(a, values)? + eval_ast(b, values)?,
        Ast::Sub(a, b) => eval_ast(a, values)? - eval_ast(b, values)?,
        Ast::Mul(a, b) => eval_ast(a, values)? * eval_ast(b, values)?,
        Ast::Div(a, b) => {
            let d = eval_ast(b, values)?;
            if d == 0.0 {
                return Err(ExprError::NumericDivisionByZero);
            }
            eval_ast(a, values)? / d
        }
        Ast::Neg(a) => -eval_ast(a, values)?,
        Ast::Pow(a, e) => eval_ast(a, values)?.powi(*e as i32),
        Ast::Sin(a) => eval_ast(a, values)?.sin(),
        Ast::Cos(a) => eval_ast(a, values)?.cos(),
        Ast::Sqrt(a) => eval_ast(a, values)?.sqrt(),
    })
}
