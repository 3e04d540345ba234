use std::sync::Arc;

use fuzzy_fopid::controllers::{
    ControllerBlock, ControllerParams, FopidParams, FuzzyFopidParams, FuzzyPidParams, PidParams,
};
use fuzzy_fopid::fracops::OustaloupBand;
use fuzzy_fopid::fuzzy::build_standard_engine;
use fuzzy_fopid::plants::{PlantModel, PlantState};
use fuzzy_fopid::simloop::{
    compute_indices, evaluate_params, EvalContext, ObjectiveSpec, Scenario, SimulationTrace,
};
use fuzzy_fopid::tables::ParameterTable;
use proptest::prelude::*;

fn block(params: ControllerParams) -> ControllerBlock {
    ControllerBlock::new(params, 0.01, Arc::new(build_standard_engine()), &OustaloupBand::default()).unwrap()
}

fn any_params() -> impl Strategy<Value = ControllerParams> {
    let g = 0.0f64..5.0;
    let o = 0.01f64..1.99;
    prop_oneof![
        (g.clone(), g.clone(), g.clone()).prop_map(|(kp, ki, kd)| ControllerParams::Pid(PidParams { kp, ki, kd })),
        (g.clone(), g.clone(), g.clone(), o.clone(), o.clone())
            .prop_map(|(kp, ki, kd, lambda, mu)| ControllerParams::Fopid(FopidParams { kp, ki, kd, lambda, mu })),
        (g.clone(), g.clone(), g.clone(), g.clone())
            .prop_map(|(ke, kd, alpha, beta)| ControllerParams::FuzzyPid(FuzzyPidParams { ke, kd, alpha, beta })),
        (g.clone(), g.clone(), g.clone(), g, o.clone(), o).prop_map(|(ke, kd, alpha, beta, lambda, mu)| {
            ControllerParams::FuzzyFopid(FuzzyFopidParams { ke, kd, alpha, beta, lambda, mu })
        }),
    ]
}

fn trace_from(e: &[f64], u: &[f64], h: f64) -> SimulationTrace {
    let n = e.len();
    SimulationTrace {
        t: (0..n).map(|k| k as f64 * h).collect(),
        r: vec![1.0; n],
        y: e.iter().map(|v| 1.0 - v).collect(),
        e: e.to_vec(),
        u: u.to_vec(),
        ..SimulationTrace::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn controllers_are_deterministic(p in any_params(), es in prop::collection::vec(-2.0f64..2.0, 100)) {
        let (mut a, mut b) = (block(p), block(p));
        for e in es {
            prop_assert_eq!(a.step(e).to_bits(), b.step(e).to_bits());
        }
    }

    #[test]
    fn linear_controllers_are_linear(
        kp in 0.0f64..5.0, ki in 0.0f64..5.0, kd in 0.0f64..5.0,
        lambda in 0.01f64..1.99, mu in 0.0f64..1.99,
        xs in prop::collection::vec(-1.0f64..1.0, 60),
        ys in prop::collection::vec(-1.0f64..1.0, 60),
        a in -2.0f64..2.0, b in -2.0f64..2.0,
    ) {
        let p = ControllerParams::Fopid(FopidParams { kp, ki, kd, lambda, mu });
        let (mut cx, mut cy, mut cz) = (block(p), block(p), block(p));
        for (x, y) in xs.iter().zip(&ys) {
            let expect = a * cx.step(*x) + b * cy.step(*y);
            let got = cz.step(a * x + b * y);
            prop_assert!((got - expect).abs() <= 1e-8 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn csv_round_trip(es in prop::collection::vec(-1e3f64..1e3, 2..50), us in prop::collection::vec(-1e3f64..1e3, 50)) {
        let tr = trace_from(&es, &us[..es.len()], 0.01);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        prop_assert_eq!(SimulationTrace::read_csv(buf.as_slice()).unwrap(), tr);
    }

    #[test]
    fn index_ordering_for_bounded_error(es in prop::collection::vec(-1.0f64..1.0, 2..200)) {
        let r = compute_indices(&trace_from(&es, &vec![0.0; es.len()], 0.05)).unwrap();
        // |e| <= 1 makes e^2 <= |e|.
        prop_assert!(r.itse <= r.itae + 1e-12);
        prop_assert!(r.ise <= r.iae + 1e-12);
        for v in [r.itae, r.itse, r.istes, r.istse, r.isco, r.iae, r.ise] {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn indices_grow_with_horizon(es in prop::collection::vec(-2.0f64..2.0, 3..200), cut in 2usize..200) {
        let cut = cut.min(es.len());
        let us: Vec<f64> = es.iter().map(|e| 0.5 * e).collect();
        let full = compute_indices(&trace_from(&es, &us, 0.05)).unwrap();
        let part = compute_indices(&trace_from(&es[..cut], &us[..cut], 0.05)).unwrap();
        for (a, b) in [(part.itae, full.itae), (part.itse, full.itse), (part.istes, full.istes), (part.istse, full.istse), (part.isco, full.isco)] {
            prop_assert!(a <= b + 1e-12);
        }
    }
}

#[test]
fn p1_step_size_convergence() {
    let y_at_5 = |h: f64| {
        let mut p = PlantState::new(&PlantModel::p1(), h).unwrap();
        let n = (5.0 / h).round() as usize;
        for _ in 0..n {
            p.step(1.0, 0.0);
        }
        p.output()
    };
    for h in [0.01, 0.005] {
        let d = (y_at_5(h) - y_at_5(h / 2.0)).abs();
        assert!(d < 1e-5, "h = {h}: {d}");
    }
}

#[test]
fn quadrature_converges_on_table_runs() {
    // Same closed-loop trace integrated on every sample and on every other
    // sample. The control effort jumps at t = 0, so only error indices are compared.
    let ctx = EvalContext::default();
    for id in 1..=4u8 {
        let table = ParameterTable::bundled(id).unwrap();
        let plant = table.plant.model();
        for k in [0, 4] {
            let fine = ctx.simulate(table.rows[k].params, &plant, &Scenario::tuning(&plant)).unwrap();
            let every_other = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<_>>();
            let coarse = SimulationTrace {
                t: every_other(&fine.t),
                r: every_other(&fine.r),
                y: every_other(&fine.y),
                e: every_other(&fine.e),
                u: every_other(&fine.u),
                ..SimulationTrace::default()
            };
            let a = compute_indices(&coarse).unwrap();
            let b = compute_indices(&fine).unwrap();
            for (x, y) in [(a.itae, b.itae), (a.itse, b.itse), (a.istes, b.istes), (a.istse, b.istse)] {
                assert!((x - y).abs() <= 0.005 * y.abs(), "table {id} row {k}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn stable_table_runs_stay_below_penalty() {
    let ctx = EvalContext::default();
    for id in 1..=4 {
        let table = ParameterTable::bundled(id).unwrap();
        let plant = table.plant.model();
        for row in &table.rows {
            let objective = ObjectiveSpec::new(row.index);
            let j = evaluate_params(row.params, &plant, &objective, &Scenario::tuning(&plant), &ctx).unwrap();
            assert!(j < objective.penalty, "table {id} {:?}: {j}", row.params.kind());
        }
    }
}
