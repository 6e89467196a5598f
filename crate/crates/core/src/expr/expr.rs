//! Canonical rational expressions modulo declared auxiliary relations.
//!
//! An `Expr` is a reduced fraction of two polynomials. Canonicalization
//! guarantees that equal values share one representation, so structural
//! equality is the zero test the constraint iteration depends on:
//!
//! * squares of reducible auxiliaries are rewritten away
//!   (`sin^2 -> 1 - cos^2`, `r^2 -> radicand`),
//! * reducible auxiliaries are cleared from denominators by conjugation,
//! * the fraction is reduced by the polynomial gcd,
//! * the denominator is scaled to be integer, primitive, with a positive
//!   leading coefficient.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{Signed, Zero};

use super::gcd::{div_exact, poly_gcd};
use super::poly::{rational_to_f64, Poly};
use super::symbol::{AuxRule, Context, SymbolId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("expression denominator reduces to zero")]
    DivisionByZeroExpression,
    #[error("symbol `{0}` is not bound to a numeric value")]
    UnboundSymbol(String),
    #[error("numeric binding for `{0}` violates its defining relation")]
    RelationViolated(String),
    #[error("numeric evaluation divides by zero")]
    NumericDivisionByZero,
    #[error("sin/cos argument must be a single declared symbol")]
    TrigArgNotSymbol,
    #[error("sqrt argument must be polynomial in non-auxiliary symbols")]
    SqrtOfNonPolynomial,
    #[error("exponents must be integers")]
    NonIntegerExponent,
}

/// Canonical rational expression. Construct through the arithmetic methods
/// or [`Expr::from_fraction`]; fields stay reduced by construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Expr {
    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Expr {
        Expr {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn from_int(n: i64) -> Expr {
        Expr {
            num: Poly::from_int(n),
            den: Poly::one(),
        }
    }

    pub fn from_rational(r: BigRational) -> Expr {
        Expr {
            num: Poly::constant(r),
            den: Poly::one(),
        }
    }

    pub fn var(id: SymbolId) -> Expr {
        Expr {
            num: Poly::var(id),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly, ctx: &Context) -> Expr {
        Expr::from_fraction(p, Poly::one(), ctx).expect("unit denominator")
    }

    /// Canonicalize num/den. Fails iff the denominator vanishes on the
    /// relation surface.
    pub fn from_fraction(num: Poly, den: Poly, ctx: &Context) -> Result<Expr, ExprError> {
        let mut num = reduce_squares(num, ctx);
        let mut den = reduce_squares(den, ctx);
        if den.is_zero() {
            return Err(ExprError::DivisionByZeroExpression);
        }
        if num.is_zero() {
            return Ok(Expr::zero());
        }
        // Clear reducible auxiliaries out of the denominator by conjugation.
        loop {
            let target = den
                .variables()
                .into_iter()
                .find(|&v| ctx.relations.square_rewrite(v).is_some() && den.contains(v));
            let Some(u) = target else { break };
            let q = ctx.relations.square_rewrite(u).expect("reducible");
            let coeffs = den.coeffs_in(u);
            debug_assert!(coeffs.len() <= 2);
            let a = coeffs[0].clone();
            let b = coeffs.get(1).cloned().unwrap_or_else(Poly::zero);
            // den = a + b*u ; multiply both sides by (a - b*u)
            let conj = &a - &(&b * &Poly::var(u));
            num = reduce_squares(&num * &conj, ctx);
            den = reduce_squares(&(&a * &a) - &(&(&b * &b) * &q), ctx);
            if den.is_zero() {
                // The denominator was a zero divisor on the relation surface.
                return Err(ExprError::DivisionByZeroExpression);
            }
        }
        // Reduce the fraction.
        let g = poly_gcd(&num, &den);
        if !g.is_one() {
            num = div_exact(&num, &g).expect("gcd divides");
            den = div_exact(&den, &g).expect("gcd divides");
        }
        // Unique scaling: denominator integer-primitive, positive leading coeff.
        let c = den.content();
        debug_assert!(!c.is_zero());
        den = den.scale(&c.recip());
        num = num.scale(&c.recip());
        Ok(Expr { num, den })
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// Some(r) iff the expression is a rational constant.
    pub fn as_rational(&self) -> Option<BigRational> {
        if !self.den.is_one() {
            return None;
        }
        self.num.as_constant()
    }

    pub fn add(&self, rhs: &Expr, ctx: &Context) -> Expr {
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        let den = &self.den * &rhs.den;
        Expr::from_fraction(num, den, ctx).expect("nonzero denominators")
    }

    pub fn sub(&self, rhs: &Expr, ctx: &Context) -> Expr {
        let num = &(&self.num * &rhs.den) - &(&rhs.num * &self.den);
        let den = &self.den * &rhs.den;
        Expr::from_fraction(num, den, ctx).expect("nonzero denominators")
    }

    pub fn mul(&self, rhs: &Expr, ctx: &Context) -> Expr {
        Expr::from_fraction(&self.num * &rhs.num, &self.den * &rhs.den, ctx)
            .expect("nonzero denominators")
    }

    pub fn div(&self, rhs: &Expr, ctx: &Context) -> Result<Expr, ExprError> {
        if rhs.is_zero() {
            return Err(ExprError::DivisionByZeroExpression);
        }
        Expr::from_fraction(&self.num * &rhs.den, &self.den * &rhs.num, ctx)
    }

    pub fn neg(&self) -> Expr {
        Expr {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn scale_rational(&self, c: &BigRational, ctx: &Context) -> Expr {
        self.mul(&Expr::from_rational(c.clone()), ctx)
    }

    pub fn pow(&self, e: i64, ctx: &Context) -> Result<Expr, ExprError> {
        if e < 0 {
            if self.is_zero() {
                return Err(ExprError::DivisionByZeroExpression);
            }
            let p = self.pow(-e, ctx)?;
            return Expr::one().div(&p, ctx);
        }
        let mut acc = Expr::one();
        for _ in 0..e {
            acc = acc.mul(self, ctx);
        }
        Ok(acc)
    }

    /// Partial derivative with implicit differentiation of auxiliaries:
    /// d sin_v/dv = cos_v, d cos_v/dv = -sin_v, d r/dv = (dq/dv)/(2r) for
    /// r = sqrt(q).
    pub fn diff(&self, v: SymbolId, ctx: &Context) -> Expr {
        let dn = poly_diff(&self.num, v, ctx);
        if self.den.is_one() {
            return dn;
        }
        let dd = poly_diff(&self.den, v, ctx);
        // (n/d)' = (n' d - n d') / d^2
        let n_expr = Expr::from_poly(self.num.clone(), ctx);
        let d_expr = Expr::from_poly(self.den.clone(), ctx);
        let num = dn.mul(&d_expr, ctx).sub(&n_expr.mul(&dd, ctx), ctx);
        let den2 = d_expr.mul(&d_expr, ctx);
        num.div(&den2, ctx).expect("denominator nonzero")
    }

    /// Simultaneous substitution of symbols by expressions, then
    /// renormalization. Unbound symbols pass through.
    pub fn substitute(
        &self,
        bindings: &BTreeMap<SymbolId, Expr>,
        ctx: &Context,
    ) -> Result<Expr, ExprError> {
        let n = poly_substitute(&self.num, bindings, ctx)?;
        let d = poly_substitute(&self.den, bindings, ctx)?;
        n.div(&d, ctx)
    }

    pub fn variables(&self) -> std::collections::BTreeSet<SymbolId> {
        let mut v = self.num.variables();
        v.extend(self.den.variables());
        v
    }

    /// Strict numeric evaluation: every symbol (auxiliaries included) must be
    /// bound, and auxiliary bindings must satisfy their defining relations to
    /// within 1e-9 and respect the sign convention of radicals.
    pub fn eval_checked(
        &self,
        values: &BTreeMap<SymbolId, f64>,
        ctx: &Context,
    ) -> Result<f64, ExprError> {
        for id in self.variables() {
            check_aux_binding(id, values, ctx)?;
        }
        self.eval_unchecked(values, ctx)
    }

    /// Numeric evaluation deriving auxiliary values from their relations
    /// (radicals take the positive branch; trig pairs evaluate sin/cos of
    /// the bound angle).
    pub fn eval_with_aux(
        &self,
        values: &BTreeMap<SymbolId, f64>,
        ctx: &Context,
    ) -> Result<f64, ExprError> {
        let mut full = values.clone();
        derive_aux_values(&self.variables(), &mut full, ctx)?;
        self.eval_unchecked(&full, ctx)
    }

    fn eval_unchecked(
        &self,
        values: &BTreeMap<SymbolId, f64>,
        ctx: &Context,
    ) -> Result<f64, ExprError> {
        let name = |id: SymbolId| ctx.table.name(id).to_string();
        let n = self
            .num
            .eval_f64(values)
            .map_err(|s| ExprError::UnboundSymbol(name(s)))?;
        let d = self
            .den
            .eval_f64(values)
            .map_err(|s| ExprError::UnboundSymbol(name(s)))?;
        if d == 0.0 {
            return Err(ExprError::NumericDivisionByZero);
        }
        Ok(n / d)
    }
}

/// Reduce even powers of reducible auxiliaries (`u^2 -> q`).
pub fn reduce_squares(p: Poly, ctx: &Context) -> Poly {
    if ctx.relations.is_empty() {
        return p;
    }
    let mut p = p;
    loop {
        let target = p.variables().into_iter().find_map(|v| {
            if p.degree_in(v) >= 2 {
                ctx.relations.square_rewrite(v).map(|q| (v, q))
            } else {
                None
            }
        });
        let Some((u, q)) = target else { return p };
        let coeffs = p.coeffs_in(u);
        let mut out = Poly::zero();
        let u_poly = Poly::var(u);
        for (e, c) in coeffs.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let half = (e / 2) as u32;
            let rem = (e % 2) as u32;
            let mut term = &c * &q.pow(half);
            if rem == 1 {
                term = &term * &u_poly;
            }
            out = &out + &term;
        }
        p = out;
        // q may contain no reducible symbols by construction, so each pass
        // strictly eliminates the squares of one auxiliary.
    }
}

fn poly_diff(p: &Poly, v: SymbolId, ctx: &Context) -> Expr {
    let mut out = Expr::from_poly(p.partial(v), ctx);
    for u in p.variables() {
        let Some(rule) = ctx.relations.rule(u) else {
            continue;
        };
        let du_dv = match rule {
            AuxRule::Sin { arg, cos } if *arg == v => Expr::var(*cos),
            AuxRule::Cos { arg, sin } if *arg == v => Expr::var(*sin).neg(),
            AuxRule::Sqrt { radicand } => {
                let dq = radicand.partial(v);
                if dq.is_zero() {
                    continue;
                }
                // dr/dv = (dq/dv) / (2 r)
                let two_r = Poly::var(u).scale(&BigRational::from_integer(2.into()));
                Expr::from_fraction(dq, two_r, ctx).expect("r nonzero by sign convention")
            }
            _ => continue,
        };
        let dp_du = Expr::from_poly(p.partial(u), ctx);
        out = out.add(&dp_du.mul(&du_dv, ctx), ctx);
    }
    out
}

fn poly_substitute(
    p: &Poly,
    bindings: &BTreeMap<SymbolId, Expr>,
    ctx: &Context,
) -> Result<Expr, ExprError> {
    if !p.variables().iter().any(|v| bindings.contains_key(v)) {
        return Ok(Expr::from_poly(p.clone(), ctx));
    }
    let mut acc = Expr::zero();
    for (mono, coeff) in p.terms() {
        let mut term = Expr::from_rational(coeff.clone());
        for &(s, e) in mono.factors() {
            let factor = match bindings.get(&s) {
                Some(b) => b.pow(e as i64, ctx)?,
                None => Expr::from_poly(Poly::var(s).pow(e), ctx),
            };
            term = term.mul(&factor, ctx);
        }
        acc = acc.add(&term, ctx);
    }
    Ok(acc)
}

const RELATION_TOL: f64 = 1e-9;

fn check_aux_binding(
    id: SymbolId,
    values: &BTreeMap<SymbolId, f64>,
    ctx: &Context,
) -> Result<(), ExprError> {
    let Some(rule) = ctx.relations.rule(id) else {
        return Ok(());
    };
    let name = ctx.table.name(id).to_string();
    let get = |s: SymbolId| {
        values
            .get(&s)
            .copied()
            .ok_or_else(|| ExprError::UnboundSymbol(ctx.table.name(s).to_string()))
    };
    match rule {
        AuxRule::Sin { cos, .. } => {
            let s = get(id)?;
            let c = get(*cos)?;
            if (s * s + c * c - 1.0).abs() > RELATION_TOL {
                return Err(ExprError::RelationViolated(name));
            }
        }
        AuxRule::Cos { sin, .. } => {
            let c = get(id)?;
            let s = get(*sin)?;
            if (s * s + c * c - 1.0).abs() > RELATION_TOL {
                return Err(ExprError::RelationViolated(name));
            }
        }
        AuxRule::Sqrt { radicand } => {
            let r = get(id)?;
            let q = radicand
                .eval_f64(values)
                .map_err(|s| ExprError::UnboundSymbol(ctx.table.name(s).to_string()))?;
            if (r * r - q).abs() > RELATION_TOL * (1.0 + q.abs()) || r < 0.0 {
                return Err(ExprError::RelationViolated(name));
            }
        }
    }
    Ok(())
}

/// Fill in numeric values for auxiliary symbols from their relations.
pub fn derive_aux_values(
    needed: &std::collections::BTreeSet<SymbolId>,
    values: &mut BTreeMap<SymbolId, f64>,
    ctx: &Context,
) -> Result<(), ExprError> {
    for &id in needed {
        if values.contains_key(&id) {
            continue;
        }
        let Some(rule) = ctx.relations.rule(id) else {
            continue;
        };
        let v = match rule {
            AuxRule::Sin { arg, .. } => {
                let a = *values
                    .get(arg)
                    .ok_or_else(|| ExprError::UnboundSymbol(ctx.table.name(*arg).to_string()))?;
                a.sin()
            }
            AuxRule::Cos { arg, .. } => {
                let a = *values
                    .get(arg)
                    .ok_or_else(|| ExprError::UnboundSymbol(ctx.table.name(*arg).to_string()))?;
                a.cos()
            }
            AuxRule::Sqrt { radicand } => {
                let q = radicand
                    .eval_f64(values)
                    .map_err(|s| ExprError::UnboundSymbol(ctx.table.name(s).to_string()))?;
                if q < 0.0 {
                    return Err(ExprError::RelationViolated(ctx.table.name(id).to_string()));
                }
                q.sqrt()
            }
        };
        values.insert(id, v);
    }
    Ok(())
}

pub fn rational_to_float(r: &BigRational) -> f64 {
    rational_to_f64(r)
}

impl Expr {
    /// Leading numerator coefficient sign; used to orient constraints.
    pub fn leading_sign_negative(&self) -> bool {
        self.num
            .leading()
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false)
    }
}
