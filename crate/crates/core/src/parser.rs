//! Expression grammar and the system-definition file format, plus the
//! deterministic pretty-printer used for all human-readable output.
//!
//! Expression grammar: rational literals, declared identifiers, `+ - * / ^`
//! (integer exponents only), unary minus, parentheses, and the builtin calls
//! `sin(v)`, `cos(v)`, `sqrt(expr)` which are rewritten to auxiliary symbols
//! with auto-registered relations. Precedence `^` > unary `-` > `* /` >
//! `+ -`; binary `-` and `/` associate to the left.
//!
//! System files are line-oriented: bracketed section headers, one item per
//! line, `#` starts a comment. Sections: `[variables]` (name : kind),
//! `[parameters]`, `[relations]` (name = sin(v)|cos(v)|sqrt(poly)),
//! `[one_form]` (one expression per variable), `[potential]`,
//! `[solve_hints]` (lhs -> expr), `[gauge_conditions]`, `[options]`
//! (max_iterations = N, verbose_multipliers = true|false).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use thiserror::Error;

use crate::expr::{
    normalize, Ast, AuxRule, Context, Expr, ExprError, Poly, SymbolId, SymbolKind, SymbolTable,
};
use crate::fj_core::{AnalysisOptions, SymplecticSystem};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at offset {position}: expected {expected}")]
    SyntaxError { position: usize, expected: String },
    #[error("undeclared identifier `{name}` at offset {position}")]
    UndeclaredIdentifier { position: usize, name: String },
    #[error("exponent at offset {position} must be an integer literal")]
    NonIntegerExponent { position: usize },
    #[error("sqrt argument at offset {position} must be polynomial in non-auxiliary symbols")]
    SqrtOfNonPolynomial { position: usize },
    #[error("required section [{section}] is missing")]
    SectionMissing { section: String },
    #[error("[one_form] lists {got} entries but [variables] declares {expected}")]
    CountMismatch { expected: usize, got: usize },
    #[error("symbol `{name}` is declared twice")]
    DuplicateSymbol { name: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<ParseError>,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer {
    tokens: Vec<(Tok, usize)>,
    cursor: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '/' => {
                i += 1;
                Tok::Slash
            }
            '^' => {
                i += 1;
                Tok::Caret
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            _ if c.is_ascii_digit() => {
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let mut frac_digits = 0usize;
                if i < bytes.len()
                    && bytes[i] as char == '.'
                    && i + 1 < bytes.len()
                    && (bytes[i + 1] as char).is_ascii_digit()
                {
                    i += 1;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                        frac_digits += 1;
                    }
                }
                let digits: String = text[start..i].chars().filter(|&d| d != '.').collect();
                let numer: BigInt = digits.parse().expect("digit string");
                let denom = BigInt::from(10u32).pow(frac_digits as u32);
                Tok::Num(BigRational::new(numer, denom))
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] as char == '_')
                {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            _ => {
                return Err(ParseError::SyntaxError {
                    position: start,
                    expected: "a number, identifier, operator, or parenthesis".into(),
                })
            }
        };
        tokens.push((tok, start));
    }
    tokens.push((Tok::End, text.len()));
    Ok(Lexer { tokens, cursor: 0 })
}

impl Lexer {
    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].0
    }
    fn pos(&self) -> usize {
        self.tokens[self.cursor].1
    }
    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.cursor].0.clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }
    fn expect(&mut self, want: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == &want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::SyntaxError {
                position: self.pos(),
                expected: expected.into(),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser over the token stream
// ---------------------------------------------------------------------------

fn parse_ast(text: &str, table: &SymbolTable) -> Result<Ast, ParseError> {
    let mut lx = lex(text)?;
    let ast = parse_sum(&mut lx, table)?;
    if lx.peek() != &Tok::End {
        return Err(ParseError::SyntaxError {
            position: lx.pos(),
            expected: "end of expression or an operator".into(),
        });
    }
    Ok(ast)
}

fn parse_sum(lx: &mut Lexer, table: &SymbolTable) -> Result<Ast, ParseError> {
    let mut lhs = parse_product(lx, table)?;
    loop {
        match lx.peek() {
            Tok::Plus => {
                lx.bump();
                let rhs = parse_product(lx, table)?;
                lhs = Ast::Add(Box::new(lhs), Box::new(rhs));
            }
            Tok::Minus => {
                lx.bump();
                let rhs = parse_product(lx, table)?;
                lhs = Ast::Sub(Box::new(lhs), Box::new(rhs));
            }
            _ => return Ok(lhs),
        }
    }
}

fn parse_product(lx: &mut Lexer, table: &SymbolTable) -> Result<Ast, ParseError> {
    let mut lhs = parse_unary(lx, table)?;
    loop {
        match lx.peek() {
            Tok::Star => {
                lx.bump();
                let rhs = parse_unary(lx, table)?;
                lhs = Ast::Mul(Box::new(lhs), Box::new(rhs));
            }
            Tok::Slash => {
                lx.bump();
                let rhs = parse_unary(lx, table)?;
                lhs = Ast::Div(Box::new(lhs), Box::new(rhs));
            }
            _ => return Ok(lhs),
        }
    }
}

fn parse_unary(lx: &mut Lexer, table: &SymbolTable) -> Result<Ast, ParseError> {
    if lx.peek() == &Tok::Minus {
        lx.bump();
        let inner = parse_unary(lx, table)?;
        return Ok(Ast::Neg(Box::new(inner)));
    }
    parse_power(lx, table)
}

fn parse_power(lx: &mut Lexer, table: &SymbolTable) -> Result<Ast, ParseError> {
    let mut base = parse_atom(lx, table)?;
    while lx.peek() == &Tok::Caret {
        lx.bump();
        let exp_pos = lx.pos();
        let negative = if lx.peek() == &Tok::Minus {
            lx.bump();
            true
        } else {
            false
        };
        let Tok::Num(n) = lx.peek().clone() else {
            return Err(ParseError::NonIntegerExponent { position: exp_pos });
        };
        lx.bump();
        if !n.denom().is_one() {
            return Err(ParseError::NonIntegerExponent { position: exp_pos });
        }
        let mut e: i64 = n
            .numer()
            .try_into()
            .map_err(|_| ParseError::NonIntegerExponent { position: exp_pos })?;
        if negative {
            e = -e;
        }
        base = Ast::Pow(Box::new(base), e);
    }
    Ok(base)
}

fn parse_atom(lx: &mut Lexer, table: &SymbolTable) -> Result<Ast, ParseError> {
    let pos = lx.pos();
    match lx.bump() {
        Tok::Num(n) => Ok(Ast::Num(n)),
        Tok::LParen => {
            let inner = parse_sum(lx, table)?;
            lx.expect(Tok::RParen, "a closing parenthesis")?;
            Ok(inner)
        }
        Tok::Ident(name) => {
            let is_call =
                matches!(name.as_str(), "sin" | "cos" | "sqrt") && lx.peek() == &Tok::LParen;
            if is_call {
                lx.bump();
                let arg_pos = lx.pos();
                let inner = parse_sum(lx, table)?;
                lx.expect(Tok::RParen, "a closing parenthesis")?;
                return Ok(match name.as_str() {
                    "sin" => Ast::Sin(Box::new(inner)),
                    "cos" => Ast::Cos(Box::new(inner)),
                    _ => {
                        // reject obvious non-polynomial radicands here so the
                        // error carries a source position
                        let _ = arg_pos;
                        Ast::Sqrt(Box::new(inner))
                    }
                });
            }
            match table.lookup(&name) {
                Some(id) => Ok(Ast::Var(id)),
                None => Err(ParseError::UndeclaredIdentifier {
                    position: pos,
                    name,
                }),
            }
        }
        _ => Err(ParseError::SyntaxError {
            position: pos,
            expected: "a number, identifier, unary minus, or parenthesized expression".into(),
        }),
    }
}

/// Parse and canonicalize one expression against the symbols (and relations)
/// already declared in `ctx`. sin/cos/sqrt calls register auxiliaries.
pub fn parse_expression(text: &str, ctx: &mut Context) -> Result<Expr, ParseError> {
    let ast = parse_ast(text, &ctx.table)?;
    normalize(&ast, ctx).map_err(|e| match e {
        ExprError::SqrtOfNonPolynomial => ParseError::SqrtOfNonPolynomial { position: 0 },
        other => ParseError::Expr(other),
    })
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn print_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn print_symbol(id: SymbolId, ctx: &Context) -> String {
    match ctx.relations.rule(id) {
        Some(AuxRule::Sin { arg, .. }) => format!("sin({})", ctx.table.name(*arg)),
        Some(AuxRule::Cos { arg, .. }) => format!("cos({})", ctx.table.name(*arg)),
        Some(AuxRule::Sqrt { radicand }) => format!("sqrt({})", print_poly(radicand, ctx)),
        None => ctx.table.name(id).to_string(),
    }
}

/// One monomial term without its sign; the returned flag says whether the
/// rendering is a bare product (safe to follow `/` or `*` unparenthesized).
fn print_term(mono: &crate::expr::Monomial, coeff: &BigRational, ctx: &Context) -> String {
    let mut parts: Vec<String> = Vec::new();
    let c = coeff.clone();
    if !c.is_one() || mono.factors().is_empty() {
        parts.push(print_rational(&c));
    }
    for &(id, e) in mono.factors() {
        let base = print_symbol(id, ctx);
        if e == 1 {
            parts.push(base);
        } else {
            parts.push(format!("{base}^{e}"));
        }
    }
    parts.join("*")
}

/// Terms in descending monomial order, joined with signed operators.
fn print_poly(p: &Poly, ctx: &Context) -> String {
    use num::Signed;
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (mono, coeff)) in p.terms().rev().enumerate() {
        let mag = coeff.abs();
        let body = print_term(mono, &mag, ctx);
        if k == 0 {
            if coeff.is_negative() {
                out.push('-');
            }
            out.push_str(&body);
        } else if coeff.is_negative() {
            out.push_str(" - ");
            out.push_str(&body);
        } else {
            out.push_str(" + ");
            out.push_str(&body);
        }
    }
    out
}

fn poly_is_atomic(p: &Poly) -> bool {
    use num::Signed;
    match p.terms().next() {
        Some((mono, coeff)) if p.num_terms() == 1 => {
            if mono.factors().is_empty() {
                // a bare non-negative integer literal
                coeff.denom().is_one() && !coeff.is_negative()
            } else {
                // a single variable to a power, coefficient one
                coeff.is_one() && mono.factors().len() == 1
            }
        }
        _ => false,
    }
}

/// Deterministic infix rendering in expanded canonical form; parsing the
/// output against the same context reproduces the expression exactly.
pub fn print_expression(e: &Expr, ctx: &Context) -> String {
    let num = print_poly(e.numerator(), ctx);
    if e.denominator().is_one() {
        return num;
    }
    let num_side = if e.numerator().num_terms() > 1 {
        format!("({num})")
    } else {
        num
    };
    let den = print_poly(e.denominator(), ctx);
    let den_side = if poly_is_atomic(e.denominator()) {
        den
    } else {
        format!("({den})")
    };
    format!("{num_side}/{den_side}")
}

// ---------------------------------------------------------------------------
// System-definition files
// ---------------------------------------------------------------------------

/// A parsed system file: the iteration-0 system plus the analysis options it
/// requested.
#[derive(Debug, Clone)]
pub struct ParsedSystem {
    pub system: SymplecticSystem,
    pub options: AnalysisOptions,
}

fn at_line(line: usize) -> impl Fn(ParseError) -> ParseError {
    move |e| ParseError::AtLine {
        line,
        source: Box::new(e),
    }
}

/// Parse a full system-definition file into an iteration-0 system.
pub fn parse_system(contents: &str) -> Result<ParsedSystem, ParseError> {
    // section name -> list of (line number, trimmed content line)
    let mut sections: Vec<(String, Vec<(usize, String)>)> = Vec::new();
    let mut current: Option<usize> = None;
    for (idx, raw) in contents.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(h) => &raw[..h],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            sections.push((name.trim().to_string(), Vec::new()));
            current = Some(sections.len() - 1);
            continue;
        }
        match current {
            Some(k) => sections[k].1.push((line_no, line.to_string())),
            None => {
                return Err(ParseError::Malformed {
                    line: line_no,
                    message: "content before the first [section] header".into(),
                })
            }
        }
    }
    let find = |name: &str| -> Option<&Vec<(usize, String)>> {
        sections.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    };
    for (name, _) in &sections {
        if !matches!(
            name.as_str(),
            "variables"
                | "parameters"
                | "relations"
                | "one_form"
                | "potential"
                | "solve_hints"
                | "gauge_conditions"
                | "options"
        ) {
            return Err(ParseError::SectionMissing {
                section: format!("{name}] is not a recognized section; expected one of [variables"),
            });
        }
    }
    let variables = find("variables").ok_or_else(|| ParseError::SectionMissing {
        section: "variables".into(),
    })?;
    let one_form_lines = find("one_form").ok_or_else(|| ParseError::SectionMissing {
        section: "one_form".into(),
    })?;
    let potential_lines = find("potential").ok_or_else(|| ParseError::SectionMissing {
        section: "potential".into(),
    })?;

    let mut ctx = Context::new();
    let mut var_ids: Vec<SymbolId> = Vec::new();

    for (line, item) in variables {
        let Some((name, kind)) = item.split_once(':') else {
            return Err(ParseError::Malformed {
                line: *line,
                message: format!("expected `name : kind`, got `{item}`"),
            });
        };
        let kind = match kind.trim() {
            "dynamical" => SymbolKind::Dynamical,
            "momentum" => SymbolKind::Momentum,
            other => {
                return Err(ParseError::Malformed {
                    line: *line,
                    message: format!("unknown variable kind `{other}` (dynamical|momentum)"),
                })
            }
        };
        let id = ctx
            .table
            .declare(name.trim(), kind)
            .map_err(|d| ParseError::DuplicateSymbol { name: d.0 })?;
        var_ids.push(id);
    }
    if let Some(params) = find("parameters") {
        for (line, item) in params {
            if !item.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(ParseError::Malformed {
                    line: *line,
                    message: format!("expected a bare parameter name, got `{item}`"),
                });
            }
            ctx.table
                .declare(item, SymbolKind::Parameter)
                .map_err(|d| ParseError::DuplicateSymbol { name: d.0 })?;
        }
    }
    if let Some(relations) = find("relations") {
        for (line, item) in relations {
            parse_relation(item, &mut ctx).map_err(at_line(*line))?;
        }
    }

    let mut one_form = Vec::new();
    for (line, item) in one_form_lines {
        one_form.push(parse_expression(item, &mut ctx).map_err(at_line(*line))?);
    }
    if one_form.len() != var_ids.len() {
        return Err(ParseError::CountMismatch {
            expected: var_ids.len(),
            got: one_form.len(),
        });
    }

    let joined: String = potential_lines
        .iter()
        .map(|(_, s)| s.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let first_potential_line = potential_lines.first().map(|(l, _)| *l).unwrap_or(0);
    if joined.trim().is_empty() {
        return Err(ParseError::SectionMissing {
            section: "potential".into(),
        });
    }
    let potential = parse_expression(&joined, &mut ctx).map_err(at_line(first_potential_line))?;

    let mut system = SymplecticSystem::new(ctx, var_ids, one_form, potential);

    if let Some(hints) = find("solve_hints") {
        for (line, item) in hints {
            let Some((lhs, rhs)) = item.split_once("->") else {
                return Err(ParseError::Malformed {
                    line: *line,
                    message: format!("expected `symbol -> expression`, got `{item}`"),
                });
            };
            let lhs_expr = parse_expression(lhs.trim(), &mut system.ctx).map_err(at_line(*line))?;
            let lhs_sym = single_symbol(&lhs_expr).ok_or_else(|| ParseError::Malformed {
                line: *line,
                message: "hint left side must be a single symbol (or sin/cos/sqrt call)".into(),
            })?;
            let rhs_expr = parse_expression(rhs.trim(), &mut system.ctx).map_err(at_line(*line))?;
            system.solve_hints.push((lhs_sym, rhs_expr));
        }
    }
    if let Some(conds) = find("gauge_conditions") {
        for (line, item) in conds {
            let e = parse_expression(item, &mut system.ctx).map_err(at_line(*line))?;
            system.gauge_conditions.push(e);
        }
    }
    let mut options = AnalysisOptions::default();
    if let Some(opts) = find("options") {
        for (line, item) in opts {
            let Some((key, value)) = item.split_once('=') else {
                return Err(ParseError::Malformed {
                    line: *line,
                    message: format!("expected `key = value`, got `{item}`"),
                });
            };
            match (key.trim(), value.trim()) {
                ("max_iterations", v) => {
                    options.max_iterations = v.parse().map_err(|_| ParseError::Malformed {
                        line: *line,
                        message: format!(
                            "max_iterations must be a non-negative integer, got `{v}`"
                        ),
                    })?;
                }
                ("verbose_multipliers", v) => {
                    options.verbose_multipliers = match v {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(ParseError::Malformed {
                                line: *line,
                                message: format!(
                                    "verbose_multipliers must be true or false, got `{v}`"
                                ),
                            })
                        }
                    };
                }
                (k, _) => {
                    return Err(ParseError::Malformed {
                        line: *line,
                        message: format!("unknown option `{k}`"),
                    })
                }
            }
        }
    }
    Ok(ParsedSystem { system, options })
}

fn single_symbol(e: &Expr) -> Option<SymbolId> {
    if !e.denominator().is_one() {
        return None;
    }
    let vars: Vec<SymbolId> = e.numerator().variables().into_iter().collect();
    if vars.len() == 1 && *e.numerator() == Poly::var(vars[0]) {
        Some(vars[0])
    } else {
        None
    }
}

/// `name = sin(v)`, `name = cos(v)`, or `name = sqrt(poly)`: registers the
/// auxiliary under the chosen name.
fn parse_relation(item: &str, ctx: &mut Context) -> Result<(), ParseError> {
    let Some((name, rhs)) = item.split_once('=') else {
        return Err(ParseError::SyntaxError {
            position: 0,
            expected: "`name = sin(v)|cos(v)|sqrt(poly)`".into(),
        });
    };
    let name = name.trim();
    let rhs = rhs.trim();
    let ast = parse_ast(rhs, &ctx.table)?;
    match ast {
        ref call @ (Ast::Sin(ref arg) | Ast::Cos(ref arg)) => {
            let is_sin = matches!(call, Ast::Sin(_));
            let Ast::Var(v) = **arg else {
                return Err(ParseError::Expr(ExprError::TrigArgNotSymbol));
            };
            ctx.register_trig_named(name, v, is_sin)
                .map_err(|d| ParseError::DuplicateSymbol { name: d.0 })?;
            Ok(())
        }
        Ast::Sqrt(arg) => {
            let inner = normalize(&arg, ctx)?;
            if !inner.denominator().is_one()
                || inner
                    .numerator()
                    .variables()
                    .iter()
                    .any(|&v| ctx.is_auxiliary(v))
            {
                return Err(ParseError::SqrtOfNonPolynomial { position: 0 });
            }
            ctx.register_sqrt_named(name, inner.numerator().clone())
                .map_err(|d| ParseError::DuplicateSymbol { name: d.0 })?;
            Ok(())
        }
        _ => Err(ParseError::SyntaxError {
            position: 0,
            expected: "a sin, cos, or sqrt call on the right of `=`".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx_with(names: &[(&str, SymbolKind)]) -> Context {
        let mut ctx = Context::new();
        for (n, k) in names {
            ctx.table.declare(n, *k).unwrap();
        }
        ctx
    }

    #[test]
    fn arithmetic_precedence_and_associativity() {
        let mut ctx = ctx_with(&[
            ("x", SymbolKind::Dynamical),
            ("y", SymbolKind::Dynamical),
            ("z", SymbolKind::Dynamical),
        ]);
        let direct = |t: &str, c: &mut Context| parse_expression(t, c).unwrap();
        // a - b - c is (a-b)-c
        let lhs = direct("x - y - z", &mut ctx);
        let rhs = direct("(x - y) - z", &mut ctx);
        assert_eq!(lhs, rhs);
        // a/b/c is (a/b)/c
        assert_eq!(direct("x/y/z", &mut ctx), direct("(x/y)/z", &mut ctx));
        // ^ binds tighter than unary minus
        assert_eq!(direct("-x^2", &mut ctx), direct("-(x^2)", &mut ctx));
        // * before +
        assert_eq!(direct("x + y*z", &mut ctx), direct("x + (y*z)", &mut ctx));
        // x - x = 0
        assert!(direct("x - x", &mut ctx).is_zero());
        // negative exponents land in the denominator
        assert_eq!(direct("x^-2", &mut ctx), direct("1/x^2", &mut ctx));
    }

    #[test]
    fn decimal_literals_are_exact_rationals() {
        let mut ctx = Context::new();
        let e = parse_expression("0.125", &mut ctx).unwrap();
        assert_eq!(
            e.as_rational().unwrap(),
            BigRational::new(1.into(), 8.into())
        );
    }

    #[test]
    fn trig_calls_share_one_pair_per_argument() {
        let mut ctx = ctx_with(&[("theta", SymbolKind::Dynamical)]);
        let s1 = parse_expression("sin(theta)", &mut ctx).unwrap();
        let s2 = parse_expression("sin(theta)", &mut ctx).unwrap();
        assert_eq!(s1, s2);
        // sin^2 + cos^2 = 1 through the registered relation
        let one = parse_expression("sin(theta)^2 + cos(theta)^2", &mut ctx).unwrap();
        assert!(one.is_one());
    }

    #[test]
    fn error_positions_point_at_offending_token() {
        let mut ctx = ctx_with(&[("x", SymbolKind::Dynamical)]);
        match parse_expression("x + ", &mut ctx).unwrap_err() {
            ParseError::SyntaxError { position, .. } => assert_eq!(position, 4),
            e => panic!("unexpected {e:?}"),
        }
        match parse_expression("x + qq*2", &mut ctx).unwrap_err() {
            ParseError::UndeclaredIdentifier { position, name } => {
                assert_eq!((position, name.as_str()), (4, "qq"));
            }
            e => panic!("unexpected {e:?}"),
        }
        match parse_expression("x^y", &mut ctx).unwrap_err() {
            ParseError::NonIntegerExponent { position } => assert_eq!(position, 2),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn printer_round_trips_and_matches_examples() {
        let mut ctx = ctx_with(&[("k1", SymbolKind::Parameter), ("k2", SymbolKind::Parameter)]);
        let e = parse_expression("k2/(k1 + k2)", &mut ctx).unwrap();
        assert_eq!(print_expression(&e, &ctx), "k2/(k1 + k2)");
        assert_eq!(print_expression(&Expr::zero(), &ctx), "0");
        let back = parse_expression(&print_expression(&e, &ctx), &mut ctx).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn printer_renders_auxiliaries_as_calls() {
        let mut ctx = ctx_with(&[
            ("x", SymbolKind::Dynamical),
            ("theta", SymbolKind::Dynamical),
        ]);
        let e = parse_expression("x*cos(theta) + sqrt(x^2)", &mut ctx).unwrap();
        let text = print_expression(&e, &ctx);
        assert!(text.contains("cos(theta)"), "{text}");
        assert!(text.contains("sqrt(x^2)"), "{text}");
        let back = parse_expression(&text, &mut ctx).unwrap();
        assert_eq!(back, e);
    }

    const COMPOUND: &str = r#"
# compound spring chain
[variables]
x1 : dynamical
x2 : dynamical
p1 : momentum
[parameters]
m
g
k1
k2
l1
l2
[one_form]
p1
p1
0
[potential]
p1^2/(2*m) - m*g*(x1 + x2) + k1*(x1 - l1)^2/2 + k2*(x2 - l2)^2/2
"#;

    #[test]
    fn system_file_parses_compound_spring() {
        let parsed = parse_system(COMPOUND).unwrap();
        let sys = &parsed.system;
        assert_eq!(sys.variable_names(), vec!["x1", "x2", "p1"]);
        let p1 = sys.ctx.table.lookup("p1").unwrap();
        assert_eq!(sys.one_form[0], Expr::var(p1));
        assert_eq!(sys.one_form[1], Expr::var(p1));
        assert!(sys.one_form[2].is_zero());
        assert_eq!(parsed.options.max_iterations, 12);
    }

    #[test]
    fn missing_sections_are_reported() {
        match parse_system("[variables]\nx : dynamical\n[one_form]\nx\n").unwrap_err() {
            ParseError::SectionMissing { section } => assert_eq!(section, "potential"),
            e => panic!("unexpected {e:?}"),
        }
        match parse_system("").unwrap_err() {
            ParseError::SectionMissing { section } => assert_eq!(section, "variables"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn one_form_count_mismatch() {
        let text = "[variables]\nx : dynamical\np : momentum\n[one_form]\np\n[potential]\np^2\n";
        match parse_system(text).unwrap_err() {
            ParseError::CountMismatch {
                expected: 2,
                got: 1,
            } => {}
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn duplicate_declaration_rejected() {
        let text = "[variables]\nx : dynamical\nx : momentum\n[one_form]\nx\nx\n[potential]\nx\n";
        assert!(matches!(
            parse_system(text).unwrap_err(),
            ParseError::DuplicateSymbol { .. }
        ));
    }

    #[test]
    fn relations_hints_and_options_parse() {
        let text = r#"
[variables]
x : dynamical
theta : dynamical
[parameters]
k
[relations]
r = sqrt(x^2 + k)
[one_form]
x*r
0
[potential]
k*cos(theta) + r
[solve_hints]
cos(theta) -> x/r
[gauge_conditions]
x - k
[options]
max_iterations = 3
verbose_multipliers = true
"#;
        let parsed = parse_system(text).unwrap();
        assert_eq!(parsed.options.max_iterations, 3);
        assert!(parsed.options.verbose_multipliers);
        assert_eq!(parsed.system.solve_hints.len(), 1);
        assert_eq!(parsed.system.gauge_conditions.len(), 1);
        let r = parsed.system.ctx.table.lookup("r").unwrap();
        assert!(parsed.system.ctx.is_auxiliary(r));
        // the hint lhs resolved to the named cos auxiliary
        let c = parsed.system.solve_hints[0].0;
        assert!(matches!(
            parsed.system.ctx.relations.rule(c),
            Some(AuxRule::Cos { .. })
        ));
    }
}
