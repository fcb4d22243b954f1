//! Substitution oracle for latch-free ladder programs.

use std::collections::HashMap;

use artts_core::dsl::{parse_rung_program, Expr, RungProgram};
use artts_core::engine::Engine;

use super::station_with_chain_b;

/// Evaluates by substituting coil definitions, without regard to rung order.
pub fn oracle(expr: &Expr, inputs: &HashMap<&str, bool>, defs: &HashMap<&str, &Expr>) -> bool {
    match expr {
        Expr::Ref(n) => match inputs.get(n.as_str()) {
            Some(&v) => v,
            None => oracle(defs[n.as_str()], inputs, defs),
        },
        Expr::Not(e) => !oracle(e, inputs, defs),
        Expr::And(es) => es.iter().all(|e| oracle(e, inputs, defs)),
        Expr::Or(es) => es.iter().any(|e| oracle(e, inputs, defs)),
    }
}

/// Checks every input combination; returns the number of rows.
pub fn check_truth_table(src: &str) -> usize {
    let prog: RungProgram = parse_rung_program(src).unwrap();
    assert!(prog.is_combinational());
    assert!(prog.inputs.len() <= 10);
    let names: Vec<String> = prog.inputs.iter().map(|n| n.to_string()).collect();
    let station = station_with_chain_b(&names, src);
    let mut engine = Engine::load(station).unwrap();
    let defs: HashMap<&str, &Expr> = prog
        .rungs
        .iter()
        .map(|r| (r.coil.as_str(), &r.expr))
        .collect();
    let rows = 1usize << names.len();
    for bits in 0..rows {
        let inputs: HashMap<&str, bool> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), bits >> i & 1 == 1))
            .collect();
        engine.reset();
        for (n, &v) in &inputs {
            engine.write_point(n, v).unwrap();
        }
        engine.step();
        for r in &prog.rungs {
            let want = oracle(&r.expr, &inputs, &defs);
            assert_eq!(
                engine.coil(r.coil.as_str()),
                Some(want),
                "{} with inputs {bits:b}",
                r.coil
            );
        }
        // a second scan with the same inputs changes nothing
        let before: Vec<_> = prog
            .rungs
            .iter()
            .map(|r| engine.coil(r.coil.as_str()))
            .collect();
        engine.step();
        let after: Vec<_> = prog
            .rungs
            .iter()
            .map(|r| engine.coil(r.coil.as_str()))
            .collect();
        assert_eq!(before, after);
    }
    rows
}

/// Every program in the combinational corpus; returns total rows checked.
pub fn check_corpus() -> usize {
    let dir = super::repo_root().join("crates/core/tests/fixtures/combinational");
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(files.len() >= 3);
    files
        .iter()
        .map(|f| check_truth_table(&std::fs::read_to_string(f).unwrap()))
        .sum()
}
