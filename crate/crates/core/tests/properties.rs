//! Property-based suites for the expression kernel, the parser round trip,
//! and the numeric invariants of the integrator.

use std::collections::BTreeMap;

use num::rational::BigRational;
use proptest::prelude::*;

use fj_analysis::expr::{eval_ast, normalize, Ast, Context, Expr, SymbolId, SymbolKind};
use fj_analysis::parser::{parse_expression, print_expression};

const VAR_NAMES: [&str; 3] = ["x", "y", "z"];

fn fresh_context() -> (Context, Vec<SymbolId>) {
    let mut ctx = Context::new();
    let ids = VAR_NAMES
        .iter()
        .map(|n| ctx.table.declare(n, SymbolKind::Dynamical).unwrap())
        .collect();
    (ctx, ids)
}

/// Random expression trees over x, y, z with small integer leaves. Symbol
/// ids are positional (0, 1, 2) and valid for any context built by
/// `fresh_context`.
fn ast_strategy() -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![
        (-9i64..=9).prop_map(|n| Ast::Num(BigRational::from_integer(n.into()))),
        (0u32..3).prop_map(|i| Ast::Var(SymbolId(i))),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Ast::Neg(Box::new(a))),
            (inner, 1i64..=3).prop_map(|(a, e)| Ast::Pow(Box::new(a), e)),
        ]
    })
}

fn exprs(asts: &[&Ast], ctx: &mut Context) -> Vec<Expr> {
    asts.iter()
        .map(|a| normalize(a, ctx).expect("polynomial trees always normalize"))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ring_axioms_hold(a in ast_strategy(), b in ast_strategy(), c in ast_strategy()) {
        let (mut ctx, _) = fresh_context();
        let es = exprs(&[&a, &b, &c], &mut ctx);
        let (ea, eb, ec) = (&es[0], &es[1], &es[2]);
        // commutativity and associativity
        prop_assert_eq!(ea.add(eb, &ctx), eb.add(ea, &ctx));
        prop_assert_eq!(ea.mul(eb, &ctx), eb.mul(ea, &ctx));
        prop_assert_eq!(ea.add(eb, &ctx).add(ec, &ctx), ea.add(&eb.add(ec, &ctx), &ctx));
        prop_assert_eq!(ea.mul(eb, &ctx).mul(ec, &ctx), ea.mul(&eb.mul(ec, &ctx), &ctx));
        // distributivity
        prop_assert_eq!(
            ea.mul(&eb.add(ec, &ctx), &ctx),
            ea.mul(eb, &ctx).add(&ea.mul(ec, &ctx), &ctx)
        );
        // additive inverse
        prop_assert!(ea.sub(ea, &ctx).is_zero());
        prop_assert!(ea.add(&ea.neg(), &ctx).is_zero());
    }

    #[test]
    fn division_inverts_multiplication(a in ast_strategy(), b in ast_strategy()) {
        let (mut ctx, _) = fresh_context();
        let es = exprs(&[&a, &b], &mut ctx);
        let (ea, eb) = (&es[0], &es[1]);
        prop_assume!(!eb.is_zero());
        let q = ea.mul(eb, &ctx).div(eb, &ctx).unwrap();
        prop_assert_eq!(&q, ea);
    }

    #[test]
    fn derivative_is_linear_and_leibniz(a in ast_strategy(), b in ast_strategy()) {
        let (mut ctx, ids) = fresh_context();
        let es = exprs(&[&a, &b], &mut ctx);
        let (ea, eb) = (&es[0], &es[1]);
        for &v in &ids {
            let da = ea.diff(v, &ctx);
            let db = eb.diff(v, &ctx);
            // linearity
            prop_assert_eq!(
                ea.add(eb, &ctx).diff(v, &ctx),
                da.add(&db, &ctx)
            );
            // product rule
            prop_assert_eq!(
                ea.mul(eb, &ctx).diff(v, &ctx),
                da.mul(eb, &ctx).add(&ea.mul(&db, &ctx), &ctx)
            );
        }
    }

    #[test]
    fn canonicalization_preserves_numeric_value(
        a in ast_strategy(),
        x in -4.0f64..4.0,
        y in -4.0f64..4.0,
        z in -4.0f64..4.0,
    ) {
        let (mut ctx, ids) = fresh_context();
        let e = normalize(&a, &mut ctx).unwrap();
        let values = BTreeMap::from([(ids[0], x), (ids[1], y), (ids[2], z)]);
        let raw = eval_ast(&a, &values).unwrap();
        prop_assume!(raw.is_finite() && raw.abs() < 1e9);
        let canon = e.eval_checked(&values, &ctx).unwrap();
        let scale = 1.0f64.max(raw.abs());
        prop_assert!(
            (raw - canon).abs() <= 1e-6 * scale,
            "raw {raw} vs canonical {canon}"
        );
    }

    #[test]
    fn print_parse_round_trip(a in ast_strategy()) {
        let (mut ctx, _) = fresh_context();
        let e = normalize(&a, &mut ctx).unwrap();
        let text = print_expression(&e, &ctx);
        let back = parse_expression(&text, &mut ctx).unwrap();
        prop_assert_eq!(back, e, "through `{}`", text);
    }

    #[test]
    fn substitution_commutes_with_evaluation(
        a in ast_strategy(),
        b in ast_strategy(),
        x in -3.0f64..3.0,
        y in -3.0f64..3.0,
        z in -3.0f64..3.0,
    ) {
        let (mut ctx, ids) = fresh_context();
        let es = exprs(&[&a, &b], &mut ctx);
        let (ea, eb) = (&es[0], &es[1]);
        // substitute x -> eb, then evaluate; versus evaluate eb first and
        // bind the result
        let bind: BTreeMap<SymbolId, Expr> = BTreeMap::from([(ids[0], eb.clone())]);
        let substituted = ea.substitute(&bind, &ctx).unwrap();
        let mut values = BTreeMap::from([(ids[0], x), (ids[1], y), (ids[2], z)]);
        let eb_val = eb.eval_checked(&values, &ctx).unwrap();
        prop_assume!(eb_val.is_finite() && eb_val.abs() < 1e6);
        let lhs = substituted.eval_checked(&values, &ctx).unwrap();
        values.insert(ids[0], eb_val);
        let rhs = ea.eval_checked(&values, &ctx).unwrap();
        prop_assume!(rhs.is_finite() && rhs.abs() < 1e9);
        let scale = 1.0f64.max(rhs.abs());
        prop_assert!((lhs - rhs).abs() <= 1e-6 * scale, "{lhs} vs {rhs}");
    }
}

// ---------------------------------------------------------------------------
// Deterministic numeric invariants of the integrator
// ---------------------------------------------------------------------------

mod numeric {
    use std::collections::BTreeMap;
    use std::path::PathBuf;

    use fj_analysis::dynamics::{derive_eom, integrate_rk4, EquationsOfMotion, Trajectory};
    use fj_analysis::fj_core::{run_analysis, AnalysisReport};
    use fj_analysis::parser::parse_system;

    fn compound_run() -> (AnalysisReport, EquationsOfMotion, Trajectory) {
        let path =
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/compound_spring.fjs");
        let parsed = parse_system(&std::fs::read_to_string(path).unwrap()).unwrap();
        let report = run_analysis(&parsed.system, &parsed.options).unwrap();
        let sys = &report.system;
        let eom = derive_eom(report.brackets.as_ref().unwrap(), &sys.potential, sys);
        let look = |n: &str| sys.ctx.table.lookup(n).unwrap();
        let params = BTreeMap::from([
            (look("k1"), 2.0),
            (look("k2"), 2.0),
            (look("m"), 1.0),
            (look("g"), 1.0),
            (look("l1"), 1.0),
            (look("l2"), 1.0),
        ]);
        let initial = BTreeMap::from([(look("x1"), 1.6), (look("x2"), 1.6), (look("p1"), 0.0)]);
        let traj = integrate_rk4(
            &eom,
            &report.constraints,
            &initial,
            &params,
            10.0,
            1e-3,
            &sys.ctx,
        )
        .unwrap();
        (report, eom, traj)
    }

    #[test]
    fn restricted_potential_is_conserved_along_the_flow() {
        let (report, eom, traj) = compound_run();
        let ctx = &report.system.ctx;
        let mut values = traj.bindings.clone();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for row in &traj.states {
            for (i, &v) in eom.variables.iter().enumerate() {
                values.insert(v, row[i]);
            }
            let energy = report.system.potential.eval_with_aux(&values, ctx).unwrap();
            min = min.min(energy);
            max = max.max(energy);
        }
        let scale = 1.0f64.max(max.abs());
        assert!(
            (max - min) / scale < 1e-6,
            "potential varied by {} over [{min}, {max}]",
            max - min
        );
    }

    #[test]
    fn trajectory_slopes_match_symbolic_right_hand_sides() {
        let (report, eom, traj) = compound_run();
        let ctx = &report.system.ctx;
        let dt = traj.times[1] - traj.times[0];
        let mut values = traj.bindings.clone();
        // central differences at a sample of interior points
        for step in (1..traj.times.len() - 1).step_by(500) {
            for (i, &v) in eom.variables.iter().enumerate() {
                values.insert(v, traj.states[step][i]);
            }
            for (i, rhs) in eom.rhs.iter().enumerate() {
                let slope = (traj.states[step + 1][i] - traj.states[step - 1][i]) / (2.0 * dt);
                let symbolic = rhs.eval_with_aux(&values, ctx).unwrap();
                assert!(
                    (slope - symbolic).abs() < 10.0 * dt * dt,
                    "step {step}, component {i}: slope {slope} vs rhs {symbolic}"
                );
            }
        }
    }
}
