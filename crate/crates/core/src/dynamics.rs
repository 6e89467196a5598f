//! Equations of motion from the bracket table, plus an RK4 integrator used
//! to verify the symbolic dynamics numerically.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::expr::{Context, Expr, ExprError, SymbolId};
use crate::fj_core::{BracketTable, Constraint, SymplecticSystem};

#[derive(Debug, Error)]
pub enum DynError {
    #[error("step size must be positive, got {dt}")]
    NonPositiveStep { dt: f64 },
    #[error("initial state violates constraint {label}: |{label}| = {value:e} exceeds 1e-9")]
    ConstraintViolatedAtStart { label: String, value: f64 },
    #[error("numeric blowup at t = {t}: state magnitude exceeded 1e12")]
    NumericBlowup { t: f64 },
    #[error("initial state does not bind variable {name}")]
    UnboundInitial { name: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// xidot_i for every non-multiplier variable, in variable order.
#[derive(Debug, Clone)]
pub struct EquationsOfMotion {
    pub variables: Vec<SymbolId>,
    pub rhs: Vec<Expr>,
}

impl EquationsOfMotion {
    pub fn rhs_for(&self, v: SymbolId) -> Option<&Expr> {
        self.variables
            .iter()
            .position(|&u| u == v)
            .map(|i| &self.rhs[i])
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row per time, one column per `EquationsOfMotion` variable.
    pub states: Vec<Vec<f64>>,
    pub bindings: BTreeMap<SymbolId, f64>,
}

/// xidot_i = sum_j {xi_i, xi_j} dV/dxi_j over non-multiplier variables.
pub fn derive_eom(
    brackets: &BracketTable,
    potential: &Expr,
    sys: &SymplecticSystem,
) -> EquationsOfMotion {
    let physical: Vec<SymbolId> = sys
        .variables
        .iter()
        .copied()
        .filter(|&v| !sys.is_multiplier(v))
        .collect();
    let grad: Vec<Expr> = physical
        .iter()
        .map(|&v| potential.diff(v, &sys.ctx))
        .collect();
    let rhs = physical
        .iter()
        .map(|&vi| {
            let mut dot = Expr::zero();
            for (j, &vj) in physical.iter().enumerate() {
                let b = brackets.value(vi, vj);
                if !b.is_zero() && !grad[j].is_zero() {
                    dot = dot.add(&b.mul(&grad[j], &sys.ctx), &sys.ctx);
                }
            }
            dot
        })
        .collect();
    EquationsOfMotion {
        variables: physical,
        rhs,
    }
}

fn eval_state(
    eom: &EquationsOfMotion,
    state: &[f64],
    bindings: &BTreeMap<SymbolId, f64>,
    ctx: &Context,
) -> Result<Vec<f64>, ExprError> {
    let mut values = bindings.clone();
    for (i, &v) in eom.variables.iter().enumerate() {
        values.insert(v, state[i]);
    }
    eom.rhs
        .iter()
        .map(|e| e.eval_with_aux(&values, ctx))
        .collect()
}

/// Classical fixed-step RK4 on the reduced (post-substitution) system. The
/// initial state must satisfy every constraint to within 1e-9; drift is
/// monitored by [`constraint_drift`] afterwards, not corrected during the
/// run. Any state magnitude above 1e12 aborts the run.
pub fn integrate_rk4(
    eom: &EquationsOfMotion,
    constraints: &[Constraint],
    initial: &BTreeMap<SymbolId, f64>,
    params: &BTreeMap<SymbolId, f64>,
    t_end: f64,
    dt: f64,
    ctx: &Context,
) -> Result<Trajectory, DynError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(DynError::NonPositiveStep { dt });
    }
    let mut state: Vec<f64> = Vec::with_capacity(eom.variables.len());
    for &v in &eom.variables {
        match initial.get(&v) {
            Some(&x) => state.push(x),
            None => {
                return Err(DynError::UnboundInitial {
                    name: ctx.table.name(v).to_string(),
                })
            }
        }
    }
    let mut bindings = params.clone();
    bindings.extend(initial.iter().map(|(&k, &v)| (k, v)));

    for c in constraints {
        let value = c.expression.eval_with_aux(&bindings, ctx)?.abs();
        if value > 1e-9 {
            return Err(DynError::ConstraintViolatedAtStart {
                label: c.label.clone(),
                value,
            });
        }
    }

    let n_steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    states.push(state.clone());

    let axpy = |y: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    for step in 1..=n_steps {
        let k1 = eval_state(eom, &state, &bindings, ctx)?;
        let k2 = eval_state(eom, &axpy(&state, &k1, dt / 2.0), &bindings, ctx)?;
        let k3 = eval_state(eom, &axpy(&state, &k2, dt / 2.0), &bindings, ctx)?;
        let k4 = eval_state(eom, &axpy(&state, &k3, dt), &bindings, ctx)?;
        for i in 0..state.len() {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * dt;
        if state.iter().any(|x| !x.is_finite() || x.abs() > 1e12) {
            return Err(DynError::NumericBlowup { t });
        }
        times.push(t);
        states.push(state.clone());
    }
    Ok(Trajectory {
        times,
        states,
        bindings: params.clone(),
    })
}

/// Max |Omega(state)| per constraint over the whole trajectory. The state
/// columns are interpreted through `eom`'s variable order.
pub fn constraint_drift(
    traj: &Trajectory,
    constraints: &[Constraint],
    eom: &EquationsOfMotion,
    ctx: &Context,
) -> Result<Vec<f64>, DynError> {
    let mut drift = vec![0.0f64; constraints.len()];
    let mut values = traj.bindings.clone();
    for row in &traj.states {
        for (i, &v) in eom.variables.iter().enumerate() {
            values.insert(v, row[i]);
        }
        for (k, c) in constraints.iter().enumerate() {
            let x = c.expression.eval_with_aux(&values, ctx)?.abs();
            if x > drift[k] {
                drift[k] = x;
            }
        }
    }
    Ok(drift)
}

/// CSV export: header `t,<variable names>`, one row per step, 17 significant
/// digits so round-tripping through text is lossless.
pub fn write_csv<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    eom: &EquationsOfMotion,
    ctx: &Context,
) -> std::io::Result<()> {
    write!(out, "t")?;
    for &v in &eom.variables {
        write!(out, ",{}", ctx.table.name(v))?;
    }
    writeln!(out)?;
    for (t, row) in traj.times.iter().zip(&traj.states) {
        write!(out, "{:.16e}", t)?;
        for x in row {
            write!(out, ",{:.16e}", x)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
