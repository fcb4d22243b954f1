//! Consistency warnings between a parsed program and the points its chain is
//! wired to. Lint never fails; it only reports.

use std::collections::BTreeSet;

use super::{Diagnostic, PointName, RungProgram, StateProgram, TransitionGuard};

/// The slice of a station point map a single chain is expected to use.
#[derive(Debug, Clone, Default)]
pub struct ChainPoints {
    /// Inputs wired to the chain.
    pub inputs: Vec<PointName>,
    /// Outputs the chain program is responsible for driving.
    pub outputs: Vec<PointName>,
}

#[derive(Debug, Clone, Copy)]
pub enum ProgramRef<'a> {
    Rung(&'a RungProgram),
    State(&'a StateProgram),
}

pub fn lint_program(program: ProgramRef<'_>, points: &ChainPoints) -> Vec<Diagnostic> {
    match program {
        ProgramRef::Rung(p) => lint_rung(p, points),
        ProgramRef::State(p) => lint_state(p, points),
    }
}

fn lint_rung(p: &RungProgram, points: &ChainPoints) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let read: BTreeSet<&PointName> = p
        .rungs
        .iter()
        .map(|r| &r.expr)
        .chain(p.timers.iter().map(|t| &t.enable))
        .flat_map(|e| e.refs())
        .collect();
    for input in &points.inputs {
        if !read.contains(input) {
            out.push(Diagnostic::warning(
                0,
                format!("input {input} is never read by the program"),
            ));
        }
    }
    let coils: BTreeSet<&PointName> = p.coils().collect();
    for output in &points.outputs {
        if !coils.contains(output) {
            out.push(Diagnostic::warning(
                0,
                format!("output {output} is never written by the program"),
            ));
        }
    }
    for r in &p.rungs {
        // a seal-in reference to itself does not count as a use
        let used_elsewhere = p
            .rungs
            .iter()
            .filter(|other| other.coil != r.coil)
            .map(|other| &other.expr)
            .chain(p.timers.iter().map(|t| &t.enable))
            .any(|e| e.refs().contains(&r.coil));
        if !used_elsewhere && !points.outputs.contains(&r.coil) {
            out.push(Diagnostic::warning(
                0,
                format!("coil {} is never used", r.coil),
            ));
        }
    }
    for t in &p.timers {
        if !read.contains(&t.name) {
            out.push(Diagnostic::warning(
                0,
                format!("timer {} is never used", t.name),
            ));
        }
    }
    out
}

fn lint_state(p: &StateProgram, points: &ChainPoints) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let read: BTreeSet<&PointName> = p
        .tasks
        .iter()
        .flat_map(|t| &t.states)
        .flat_map(|s| &s.transitions)
        .filter_map(|t| match &t.guard {
            TransitionGuard::When(e) => Some(e),
            TransitionGuard::Timeout(_) => None,
        })
        .flat_map(|e| e.refs())
        .collect();
    for input in &points.inputs {
        if !read.contains(input) {
            out.push(Diagnostic::warning(
                0,
                format!("input {input} is never read by the program"),
            ));
        }
    }
    let emitted = p.emitted_points();
    for output in &points.outputs {
        if !emitted.contains(output) {
            out.push(Diagnostic::warning(
                0,
                format!("output {output} is never written by the program"),
            ));
        }
    }
    for task in &p.tasks {
        let reachable = task.reachable_states();
        for (i, s) in task.states.iter().enumerate() {
            if !reachable.contains(&i) {
                out.push(Diagnostic::warning(
                    0,
                    format!("unreachable state {} in task {}", s.name, task.name),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_rung_program, parse_state_program};
    use super::*;

    fn names(v: &[&str]) -> Vec<PointName> {
        v.iter().map(|n| PointName::new(*n).unwrap()).collect()
    }

    #[test]
    fn clean_rung_program() {
        let p = parse_rung_program("input A\ninput B\nrung P := A AND NOT B").unwrap();
        let pts = ChainPoints {
            inputs: names(&["A", "B"]),
            outputs: names(&["P"]),
        };
        assert!(lint_program(ProgramRef::Rung(&p), &pts).is_empty());
    }

    #[test]
    fn extra_map_input_gives_one_warning() {
        let p = parse_rung_program("input A\ninput B\nrung P := A AND NOT B").unwrap();
        let pts = ChainPoints {
            inputs: names(&["A", "B", "SPARE"]),
            outputs: names(&["P"]),
        };
        let w = lint_program(ProgramRef::Rung(&p), &pts);
        assert_eq!(w.len(), 1);
        assert!(!w[0].is_error());
        assert!(w[0].message.contains("SPARE"));
    }

    #[test]
    fn unused_coil_and_timer() {
        let p = parse_rung_program("input A\ntimer T 10ms := A\nrung X := A OR X\nrung P := A")
            .unwrap();
        let pts = ChainPoints {
            inputs: names(&["A"]),
            outputs: names(&["P"]),
        };
        let w = lint_program(ProgramRef::Rung(&p), &pts);
        let msgs: Vec<_> = w.iter().map(|d| d.message.as_str()).collect();
        assert_eq!(msgs, ["coil X is never used", "timer T is never used"]);
    }

    #[test]
    fn orphan_state() {
        // IDLE -> RUN -> IDLE; ORPHAN has an outgoing edge but nothing enters it
        let src = "input GO\ntask T\n state IDLE initial\n  when GO goto RUN\n state RUN\n  emit P 1\n  when NOT GO goto IDLE\n state ORPHAN\n  when GO goto IDLE\n";
        let p = parse_state_program(src).unwrap();
        let pts = ChainPoints {
            inputs: names(&["GO"]),
            outputs: names(&["P"]),
        };
        let w = lint_program(ProgramRef::State(&p), &pts);
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].message, "unreachable state ORPHAN in task T");
    }
}
