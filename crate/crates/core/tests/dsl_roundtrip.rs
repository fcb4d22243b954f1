//! Printing a parsed program and parsing it again gives the same program.

mod common;

use artts_core::dsl::{
    parse_rung_program, parse_state_program, Expr, PointName, Rung, RungProgram, State,
    StateProgram, StateTask, TimerDecl, Transition, TransitionGuard,
};
use proptest::prelude::*;

use common::pn;

fn names(prefix: &str, n: usize) -> Vec<PointName> {
    (0..n).map(|i| pn(&format!("{prefix}{i}"))).collect()
}

fn expr_over(pool: Vec<PointName>) -> impl Strategy<Value = Expr> {
    let leaf = proptest::sample::select(pool).prop_map(Expr::Ref);
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            proptest::collection::vec(inner.clone(), 2..5).prop_map(Expr::and),
            proptest::collection::vec(inner, 2..5).prop_map(Expr::or),
        ]
    })
}

fn rung_program() -> impl Strategy<Value = RungProgram> {
    (1usize..6, 1usize..6, 0usize..3).prop_flat_map(|(ni, nc, nt)| {
        let inputs = names("IN_", ni);
        let coils = names("C_", nc);
        let timers = names("T_", nt);
        let mut pool = inputs.clone();
        pool.extend(coils.iter().cloned());
        pool.extend(timers.iter().cloned());
        let exprs = proptest::collection::vec(expr_over(pool.clone()), nc);
        let enables = proptest::collection::vec(expr_over(pool), nt);
        let presets = proptest::collection::vec(1u32..100_000, nt);
        let declared = proptest::collection::vec(any::<bool>(), nc);
        (
            Just((inputs, coils, timers)),
            exprs,
            enables,
            presets,
            declared,
        )
            .prop_map(
                |((inputs, coils, timers), exprs, enables, presets, declared)| RungProgram {
                    inputs,
                    coil_decls: coils
                        .iter()
                        .zip(&declared)
                        .filter(|(_, d)| **d)
                        .map(|(c, _)| c.clone())
                        .collect(),
                    timers: timers
                        .into_iter()
                        .zip(enables)
                        .zip(presets)
                        .map(|((name, enable), preset_ms)| TimerDecl {
                            name,
                            preset_ms,
                            enable,
                        })
                        .collect(),
                    rungs: coils
                        .into_iter()
                        .zip(exprs)
                        .map(|(coil, expr)| Rung { coil, expr })
                        .collect(),
                },
            )
    })
}

fn task(t: usize, inputs: Vec<PointName>) -> impl Strategy<Value = StateTask> {
    (1usize..5).prop_flat_map(move |ns| {
        let states = names(&format!("T{t}_S"), ns);
        let outs = names(&format!("OUT_{t}_"), 3);
        let transition = (
            prop_oneof![
                expr_over(inputs.clone()).prop_map(TransitionGuard::When),
                (1u32..50_000).prop_map(TransitionGuard::Timeout),
            ],
            proptest::sample::select(states.clone()),
        )
            .prop_map(|(guard, target)| Transition { guard, target });
        let emissions = proptest::sample::subsequence(outs, 0..=3)
            .prop_flat_map(|ps| {
                let n = ps.len();
                (Just(ps), proptest::collection::vec(any::<bool>(), n))
            })
            .prop_map(|(ps, vs)| ps.into_iter().zip(vs).collect::<Vec<_>>());
        let state_bodies =
            proptest::collection::vec((emissions, proptest::collection::vec(transition, 0..4)), ns);
        (Just(states), state_bodies, 0..ns).prop_map(move |(states, bodies, initial)| StateTask {
            name: pn(&format!("TASK_{t}")),
            states: states
                .into_iter()
                .zip(bodies)
                .map(|(name, (emissions, transitions))| State {
                    name,
                    emissions,
                    transitions,
                })
                .collect(),
            initial,
        })
    })
}

fn state_program() -> impl Strategy<Value = StateProgram> {
    (1usize..5, 1usize..3).prop_flat_map(|(ni, nt)| {
        let inputs = names("IN_", ni);
        let tasks: Vec<_> = (0..nt).map(|t| task(t, inputs.clone())).collect();
        (Just(inputs), tasks).prop_map(|(inputs, tasks)| StateProgram { inputs, tasks })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rung_programs_round_trip(p in rung_program()) {
        let text = p.to_string();
        let back = parse_rung_program(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn state_programs_round_trip(p in state_program()) {
        let text = p.to_string();
        let back = parse_state_program(&text).map_err(|d| TestCaseError::fail(format!("{d}\n{text}")))?;
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn expressions_round_trip(e in expr_over(names("X_", 4))) {
        let src = format!("input X_0\ninput X_1\ninput X_2\ninput X_3\nrung OUT := {e}\n");
        let p = parse_rung_program(&src).unwrap();
        prop_assert_eq!(&p.rungs[0].expr, &e);
    }
}

#[test]
fn reference_programs_round_trip() {
    let root = common::repo_root().join("stations/station-a");
    let a = std::fs::read_to_string(root.join("chain_a.state")).unwrap();
    let b = std::fs::read_to_string(root.join("chain_b.rung")).unwrap();
    let pa = parse_state_program(&a).unwrap();
    assert_eq!(parse_state_program(&pa.to_string()).unwrap(), pa);
    let pb = parse_rung_program(&b).unwrap();
    assert_eq!(parse_rung_program(&pb.to_string()).unwrap(), pb);
}
