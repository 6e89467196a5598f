//! The constraint-analysis state machine.
//!
//! Starting from a first-order Lagrangian L = a_i(xi) xidot_i - V(xi), the
//! symplectic two-form f_ij = da_j/dxi_i - da_i/dxi_j either is invertible
//! (regular system) or has zero modes. Contracting each zero mode with the
//! potential gradient yields a constraint; constraints are enforced by
//! extending the variable set with multipliers and restricting the potential
//! to the constraint surface, and the construction is iterated. A matrix that
//! stays singular after all constraints are found signals gauge symmetry: its
//! zero modes generate the gauge transformations, and supplying gauge-fixing
//! conditions restores invertibility. The inverse of the final matrix is the
//! table of generalized brackets.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{Context, Expr, ExprError, SymbolId, SymbolKind};
use crate::linalg::{invert, left_null_space, LinalgError, SymMatrix, ZeroMode};

#[derive(Debug, Error)]
pub enum FjError {
    #[error("constraint {constraint} restricts the potential but is not linear in any single variable and no solve hint matches it")]
    MissingSolveHint { constraint: String },
    #[error("cannot reduce a candidate constraint against nonlinear constraint {against} which has no solve hint")]
    NonlinearUnreducibleConstraint { against: String },
    #[error("gauge conditions do not fix the gauge: the extended matrix retains {residual_modes} zero mode(s)")]
    GaugeNotFixing { residual_modes: usize },
    #[error("constraint iteration did not terminate within {limit} extensions")]
    IterationLimitExceeded { limit: u32 },
    #[error("degree-of-freedom count is negative: {vars} variables minus {constraints} constraints minus {gauge} gauge conditions")]
    NegativeDof {
        vars: usize,
        constraints: usize,
        gauge: usize,
    },
    #[error("{got} gauge condition(s) supplied but the system has {expected} gauge generator(s)")]
    GaugeConditionCount { expected: usize, got: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The full first-order data at one iteration: variables xi, one-form
/// coefficients a, potential V, plus the symbol context they live in.
#[derive(Debug, Clone)]
pub struct SymplecticSystem {
    pub ctx: Context,
    pub variables: Vec<SymbolId>,
    pub one_form: Vec<Expr>,
    pub potential: Expr,
    pub iteration: u32,
    /// How many of `variables` belong to the original (iteration-0) system;
    /// multipliers appended by extension come after this prefix.
    pub n_original: usize,
    /// Substitutions the user supplied for solving non-linear constraints,
    /// e.g. sin_theta -> x/r. Applied as a batch when they reduce a
    /// constraint to zero.
    pub solve_hints: Vec<(SymbolId, Expr)>,
    /// Gauge-fixing conditions, applied only if the analysis ends gauge.
    pub gauge_conditions: Vec<Expr>,
}

impl SymplecticSystem {
    pub fn new(
        ctx: Context,
        variables: Vec<SymbolId>,
        one_form: Vec<Expr>,
        potential: Expr,
    ) -> SymplecticSystem {
        assert_eq!(variables.len(), one_form.len());
        let n = variables.len();
        SymplecticSystem {
            ctx,
            variables,
            one_form,
            potential,
            iteration: 0,
            n_original: n,
            solve_hints: Vec::new(),
            gauge_conditions: Vec::new(),
        }
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables
            .iter()
            .map(|&v| self.ctx.table.name(v).to_string())
            .collect()
    }

    pub fn is_multiplier(&self, v: SymbolId) -> bool {
        self.ctx.table.kind(v) == SymbolKind::Multiplier
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub expression: Expr,
    pub iteration_found: u32,
    pub source_mode: ZeroMode,
    /// Bindings that solve the constraint: substituting all of them into
    /// `expression` yields zero. Usually a single (variable, solution) pair;
    /// trigonometric constraints need the whole (sin, cos) pair at once.
    pub solve_hint: Option<Vec<(SymbolId, Expr)>>,
}

#[derive(Debug, Clone)]
pub struct GaugeGenerator {
    pub mode: ZeroMode,
    pub parameter: SymbolId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Regular,
    ConstrainedInvertible,
    Gauge,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Regular => "regular",
            Status::ConstrainedInvertible => "constrained_invertible",
            Status::Gauge => "gauge",
        }
    }
}

/// One consistency pass: the stacked matrix, its zero modes, and which
/// candidates survived reduction as genuinely new constraints.
#[derive(Debug, Clone)]
pub struct PassRecord {
    pub stacked: SymMatrix,
    pub modes: Vec<ZeroMode>,
    pub new_constraint_labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: u32,
    pub symplectic: SymMatrix,
    pub invertible: bool,
    pub passes: Vec<PassRecord>,
}

#[derive(Debug, Clone)]
pub struct BracketEntry {
    pub left: SymbolId,
    pub right: SymbolId,
    pub value: Expr,
}

/// Nonzero brackets {xi_i, xi_j} for i before j in variable order.
#[derive(Debug, Clone, Default)]
pub struct BracketTable {
    pub entries: Vec<BracketEntry>,
}

impl BracketTable {
    /// The bracket {a, b}, using antisymmetry for reversed lookups; zero when
    /// the pair is absent.
    pub fn value(&self, a: SymbolId, b: SymbolId) -> Expr {
        for e in &self.entries {
            if e.left == a && e.right == b {
                return e.value.clone();
            }
            if e.left == b && e.right == a {
                return e.value.neg();
            }
        }
        Expr::zero()
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub max_iterations: u32,
    pub verbose_multipliers: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            max_iterations: 12,
            verbose_multipliers: false,
        }
    }
}

#[derive(Debug)]
pub struct AnalysisReport {
    pub iterations: Vec<IterationRecord>,
    pub status: Status,
    pub constraints: Vec<Constraint>,
    pub gauge_generators: Vec<GaugeGenerator>,
    /// delta xi_i per non-multiplier variable, in variable order.
    pub gauge_transformations: Vec<(SymbolId, Expr)>,
    pub gauge_condition_constraints: Vec<Constraint>,
    pub gauge_fixed: bool,
    pub final_matrix: SymMatrix,
    pub inverse: Option<SymMatrix>,
    pub brackets: Option<BracketTable>,
    pub dof: u32,
    /// The final (fully extended) system; its potential is the restricted V
    /// the equations of motion are derived from.
    pub system: SymplecticSystem,
}

/// f_ij = da_j/dxi_i - da_i/dxi_j, labeled by variable names.
pub fn build_symplectic_matrix(sys: &SymplecticSystem) -> SymMatrix {
    let n = sys.variables.len();
    let mut f = SymMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let e = sys.one_form[j]
                .diff(sys.variables[i], &sys.ctx)
                .sub(&sys.one_form[i].diff(sys.variables[j], &sys.ctx), &sys.ctx);
            f.set(i, j, e.clone());
            f.set(j, i, e.neg());
        }
    }
    let names = sys.variable_names();
    f.with_labels(names.clone(), names)
}

/// dV/dxi_i in variable order.
pub fn potential_gradient(sys: &SymplecticSystem) -> Vec<Expr> {
    sys.variables
        .iter()
        .map(|&v| sys.potential.diff(v, &sys.ctx))
        .collect()
}

/// f on top, one constraint-gradient row per constraint below.
pub fn stack_consistency_matrix(
    f: &SymMatrix,
    constraints: &[Constraint],
    sys: &SymplecticSystem,
) -> SymMatrix {
    if constraints.is_empty() {
        return f.clone();
    }
    let rows: Vec<Vec<Expr>> = constraints
        .iter()
        .map(|c| {
            sys.variables
                .iter()
                .map(|&v| c.expression.diff(v, &sys.ctx))
                .collect()
        })
        .collect();
    let labels = constraints
        .iter()
        .map(|c| format!("d{}", c.label))
        .collect();
    let grad_rows = SymMatrix::from_rows(rows).with_labels(labels, f.col_labels.clone());
    f.vstack(&grad_rows).expect("matching widths")
}

/// True when a/b is a nonzero quantity built from parameters only, i.e. the
/// two expressions cut out the same surface for generic parameter values.
pub fn equal_up_to_scale(a: &Expr, b: &Expr, ctx: &Context) -> bool {
    if a.is_zero() || b.is_zero() {
        return a.is_zero() && b.is_zero();
    }
    let q = match a.div(b, ctx) {
        Ok(q) => q,
        Err(_) => return false,
    };
    !q.is_zero()
        && q.variables()
            .iter()
            .all(|&v| ctx.table.kind(v) == SymbolKind::Parameter)
}

/// Reduce a candidate to the constraint surface of `known`: substitute every
/// available solve hint, then treat parameter-scale multiples of a known
/// constraint as zero. Errors when the leftover still overlaps an unhinted
/// nonlinear constraint, because no decision is possible there.
fn reduce_candidate(
    cand: &Expr,
    known: &[Constraint],
    ctx: &Context,
) -> Result<Option<Expr>, FjError> {
    let mut cur = cand.clone();
    for c in known {
        if cur.is_zero() {
            return Ok(None);
        }
        if let Some(hint) = &c.solve_hint {
            let bind: BTreeMap<SymbolId, Expr> = hint.iter().cloned().collect();
            cur = cur.substitute(&bind, ctx)?;
        }
    }
    if cur.is_zero() {
        return Ok(None);
    }
    for c in known {
        if equal_up_to_scale(&cur, &c.expression, ctx) {
            return Ok(None);
        }
    }
    for c in known {
        if c.solve_hint.is_none() {
            let shared = cur
                .variables()
                .intersection(&c.expression.variables())
                .any(|&v| ctx.table.kind(v) != SymbolKind::Parameter);
            if shared {
                return Err(FjError::NonlinearUnreducibleConstraint {
                    against: c.label.clone(),
                });
            }
        }
    }
    Ok(Some(cur))
}

/// Find hint bindings that solve `expr = 0`: first the user-supplied batch
/// (kept when it annihilates the expression), then an automatic solution for
/// constraints linear in some variable with a parameter-only coefficient,
/// preferring the variable of highest ordering index.
fn assign_hint(
    expr: &Expr,
    sys: &SymplecticSystem,
) -> Result<Option<Vec<(SymbolId, Expr)>>, FjError> {
    let vars = expr.variables();
    let applicable: Vec<(SymbolId, Expr)> = sys
        .solve_hints
        .iter()
        .filter(|(s, _)| vars.contains(s))
        .cloned()
        .collect();
    if !applicable.is_empty() {
        let bind: BTreeMap<SymbolId, Expr> = applicable.iter().cloned().collect();
        if expr.substitute(&bind, &sys.ctx)?.is_zero() {
            return Ok(Some(applicable));
        }
    }
    let numer = expr.numerator();
    for &v in vars.iter().rev() {
        if sys.ctx.table.kind(v) == SymbolKind::Parameter {
            continue;
        }
        if numer.degree_in(v) != 1 {
            continue;
        }
        let coeffs = numer.coeffs_in(v);
        let a = &coeffs[1];
        let b = &coeffs[0];
        let coeff_is_parametric = a
            .variables()
            .iter()
            .all(|&u| sys.ctx.table.kind(u) == SymbolKind::Parameter);
        if !coeff_is_parametric || a.is_zero() {
            continue;
        }
        let solution = Expr::from_fraction(-b.clone(), a.clone(), &sys.ctx)?;
        return Ok(Some(vec![(v, solution)]));
    }
    Ok(None)
}

/// Contract each zero mode with the zero-padded gradient, reduce the result
/// on the surface of the known constraints, and keep the survivors as new
/// constraints (sign-normalized, labeled in discovery order).
pub fn constraints_from_modes(
    modes: &[ZeroMode],
    grad: &[Expr],
    existing: &[Constraint],
    sys: &SymplecticSystem,
) -> Result<Vec<Constraint>, FjError> {
    let mut found: Vec<Constraint> = Vec::new();
    for mode in modes {
        let mut cand = Expr::zero();
        for (i, g) in grad.iter().enumerate() {
            // components beyond the gradient rows contract against the zero
            // padding of the consistency system's right-hand side
            cand = cand.add(&mode.components[i].mul(g, &sys.ctx), &sys.ctx);
        }
        if cand.is_zero() {
            continue;
        }
        let known: Vec<Constraint> = existing.iter().chain(found.iter()).cloned().collect();
        let Some(mut reduced) = reduce_candidate(&cand, &known, &sys.ctx)? else {
            continue;
        };
        // Keep the original (unreduced) expression: the reduction only
        // decides novelty. Orient the sign so the leading coefficient is
        // positive; the overall scale stays as the contraction produced it,
        // since the multiplier one-form (and with it the multiplier
        // brackets) inherits it.
        let mut expression = cand;
        if expression.leading_sign_negative() {
            expression = expression.neg();
            reduced = reduced.neg();
        }
        let _ = reduced;
        let label = format!("Omega{}", existing.len() + found.len() + 1);
        let solve_hint = assign_hint(&expression, sys)?;
        found.push(Constraint {
            label,
            expression,
            iteration_found: sys.iteration,
            source_mode: mode.clone(),
            solve_hint,
        });
    }
    Ok(found)
}

fn restrict_potential(
    potential: &Expr,
    constraints: &[Constraint],
    ctx: &Context,
) -> Result<Expr, FjError> {
    let mut v = potential.clone();
    for c in constraints {
        match &c.solve_hint {
            Some(hint) => {
                let bind: BTreeMap<SymbolId, Expr> = hint.iter().cloned().collect();
                v = v.substitute(&bind, ctx)?;
            }
            None => {
                let overlap = v
                    .variables()
                    .intersection(&c.expression.variables())
                    .any(|&u| ctx.table.kind(u) != SymbolKind::Parameter);
                if overlap {
                    return Err(FjError::MissingSolveHint {
                        constraint: c.label.clone(),
                    });
                }
            }
        }
    }
    Ok(v)
}

/// Append one multiplier per constraint (its one-form coefficient is the
/// constraint itself) and restrict the potential to the constraint surface.
pub fn extend_system(
    sys: &SymplecticSystem,
    new_constraints: &[Constraint],
) -> Result<SymplecticSystem, FjError> {
    assert!(!new_constraints.is_empty());
    let mut out = sys.clone();
    let existing_multipliers = sys
        .variables
        .iter()
        .filter(|&&v| sys.is_multiplier(v))
        .count();
    for (k, c) in new_constraints.iter().enumerate() {
        let name = format!("lambda{}", existing_multipliers + k + 1);
        let lam = out.ctx.table.declare_fresh(&name, SymbolKind::Multiplier);
        out.variables.push(lam);
        out.one_form.push(c.expression.clone());
    }
    out.potential = restrict_potential(&sys.potential, new_constraints, &out.ctx)?;
    out.iteration += 1;
    Ok(out)
}

/// Zero modes of the iterated (square, still singular) matrix become gauge
/// generators, each tied to a fresh infinitesimal parameter.
pub fn detect_gauge(f_iterated: &SymMatrix, ctx: &mut Context) -> Vec<GaugeGenerator> {
    let modes = left_null_space(f_iterated, ctx);
    modes
        .into_iter()
        .enumerate()
        .map(|(k, mode)| {
            let parameter = ctx
                .table
                .declare_fresh(&format!("eps{}", k + 1), SymbolKind::GaugeParameter);
            GaugeGenerator { mode, parameter }
        })
        .collect()
}

/// delta xi_i = sum_alpha v_alpha[i] * eps_alpha over non-multiplier
/// variables, in variable order.
pub fn gauge_transformations(
    gens: &[GaugeGenerator],
    sys: &SymplecticSystem,
) -> Vec<(SymbolId, Expr)> {
    sys.variables
        .iter()
        .enumerate()
        .filter(|&(_, &v)| !sys.is_multiplier(v))
        .map(|(i, &v)| {
            let mut delta = Expr::zero();
            for g in gens {
                let term = g.mode.components[i].mul(&Expr::var(g.parameter), &sys.ctx);
                delta = delta.add(&term, &sys.ctx);
            }
            (v, delta)
        })
        .collect()
}

/// Append one multiplier (eta) per gauge condition with the condition as its
/// one-form coefficient, restrict the potential, and verify the result is
/// actually invertible.
pub fn fix_gauge(
    sys: &SymplecticSystem,
    conditions: &[Expr],
) -> Result<(SymplecticSystem, Vec<Constraint>), FjError> {
    let mut out = sys.clone();
    let mut phis = Vec::new();
    for (k, cond) in conditions.iter().enumerate() {
        let solve_hint = assign_hint(cond, sys)?;
        phis.push(Constraint {
            label: format!("Phi{}", k + 1),
            expression: cond.clone(),
            iteration_found: sys.iteration,
            source_mode: ZeroMode { components: vec![] },
            solve_hint,
        });
    }
    for (k, phi) in phis.iter().enumerate() {
        let eta = out
            .ctx
            .table
            .declare_fresh(&format!("eta{}", k + 1), SymbolKind::Multiplier);
        out.variables.push(eta);
        out.one_form.push(phi.expression.clone());
    }
    out.potential = restrict_potential(&sys.potential, &phis, &out.ctx)?;
    out.iteration += 1;
    let f = build_symplectic_matrix(&out);
    let residual = left_null_space(&f, &out.ctx);
    if !residual.is_empty() {
        return Err(FjError::GaugeNotFixing {
            residual_modes: residual.len(),
        });
    }
    Ok((out, phis))
}

/// Brackets {xi_i, xi_j} = (f^-1)_ij for i before j, skipping multiplier
/// rows/columns unless `verbose`. Zero entries are omitted; [`BracketTable`]
/// lookups treat absence as zero.
pub fn extract_brackets(f_inv: &SymMatrix, sys: &SymplecticSystem, verbose: bool) -> BracketTable {
    let mut entries = Vec::new();
    let n = sys.variables.len();
    for i in 0..n {
        if !verbose && sys.is_multiplier(sys.variables[i]) {
            continue;
        }
        for j in (i + 1)..n {
            if !verbose && sys.is_multiplier(sys.variables[j]) {
                continue;
            }
            let v = f_inv.at(i, j);
            if !v.is_zero() {
                entries.push(BracketEntry {
                    left: sys.variables[i],
                    right: sys.variables[j],
                    value: v.clone(),
                });
            }
        }
    }
    BracketTable { entries }
}

pub fn count_dof(
    n_vars: usize,
    n_constraints: usize,
    n_gauge_conditions: usize,
) -> Result<u32, FjError> {
    let dof = n_vars as i64 - n_constraints as i64 - n_gauge_conditions as i64;
    if dof < 0 {
        return Err(FjError::NegativeDof {
            vars: n_vars,
            constraints: n_constraints,
            gauge: n_gauge_conditions,
        });
    }
    Ok(dof as u32)
}

/// The full algorithm: iterate matrix construction, constraint generation,
/// and extension until the two-form is invertible or the residual
/// singularity is identified as gauge symmetry (and optionally fixed).
pub fn run_analysis(
    sys: &SymplecticSystem,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, FjError> {
    let mut sys = sys.clone();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut gauge_generators: Vec<GaugeGenerator> = Vec::new();
    let mut transformations: Vec<(SymbolId, Expr)> = Vec::new();
    let mut gauge_condition_constraints: Vec<Constraint> = Vec::new();
    let mut gauge_fixed = false;
    let mut extensions = 0u32;

    let (status, final_matrix, inverse) = loop {
        let f = build_symplectic_matrix(&sys);
        let mut record = IterationRecord {
            iteration: sys.iteration,
            symplectic: f.clone(),
            invertible: false,
            passes: Vec::new(),
        };
        match invert(&f, &sys.ctx) {
            Ok(inv) => {
                record.invertible = true;
                iterations.push(record);
                let status = if constraints.is_empty() && !gauge_fixed {
                    Status::Regular
                } else {
                    Status::ConstrainedInvertible
                };
                break (status, f, Some(inv));
            }
            Err(LinalgError::SingularMatrix) => {}
            Err(e) => return Err(e.into()),
        }

        // Consistency passes: stack the gradients of everything known so
        // far, contract the stacked matrix's zero modes with the padded
        // gradient, and repeat until no new constraint appears.
        let grad = potential_gradient(&sys);
        let mut new_this_iteration: Vec<Constraint> = Vec::new();
        loop {
            let known: Vec<Constraint> = constraints
                .iter()
                .chain(new_this_iteration.iter())
                .cloned()
                .collect();
            let stacked = stack_consistency_matrix(&f, &known, &sys);
            let modes = left_null_space(&stacked, &sys.ctx);
            let fresh = constraints_from_modes(&modes, &grad, &known, &sys)?;
            record.passes.push(PassRecord {
                stacked,
                modes,
                new_constraint_labels: fresh.iter().map(|c| c.label.clone()).collect(),
            });
            if fresh.is_empty() {
                break;
            }
            new_this_iteration.extend(fresh);
        }

        if !new_this_iteration.is_empty() {
            if extensions >= options.max_iterations {
                return Err(FjError::IterationLimitExceeded {
                    limit: options.max_iterations,
                });
            }
            sys = extend_system(&sys, &new_this_iteration)?;
            constraints.extend(new_this_iteration);
            extensions += 1;
            iterations.push(record);
            continue;
        }

        // No new constraints and still singular: gauge symmetry.
        gauge_generators = detect_gauge(&f, &mut sys.ctx);
        transformations = gauge_transformations(&gauge_generators, &sys);
        if sys.gauge_conditions.is_empty() {
            iterations.push(record);
            break (Status::Gauge, f, None);
        }
        if sys.gauge_conditions.len() != gauge_generators.len() {
            return Err(FjError::GaugeConditionCount {
                expected: gauge_generators.len(),
                got: sys.gauge_conditions.len(),
            });
        }
        let conditions = sys.gauge_conditions.clone();
        let (fixed, phis) = fix_gauge(&sys, &conditions)?;
        sys = fixed;
        gauge_condition_constraints = phis;
        gauge_fixed = true;
        iterations.push(record);
    };

    let n_gauge = if gauge_fixed {
        gauge_condition_constraints.len()
    } else {
        gauge_generators.len()
    };
    let dof = count_dof(sys.n_original, constraints.len(), n_gauge)?;
    let brackets = inverse
        .as_ref()
        .map(|inv| extract_brackets(inv, &sys, options.verbose_multipliers));

    Ok(AnalysisReport {
        iterations,
        status,
        constraints,
        gauge_generators,
        gauge_transformations: transformations,
        gauge_condition_constraints,
        gauge_fixed,
        final_matrix,
        inverse,
        brackets,
        dof,
        system: sys,
    })
}
