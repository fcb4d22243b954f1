//! State-logic task programs (Chain A).
//!
//! ```text
//! input SEARCH_BTN_1
//! task ACCESS
//!   state IDLE initial
//!     when SEARCH_BTN_1 goto SEARCH_1
//!   state SEARCH_1
//!     emit SEARCH_LED_A 1
//!     timeout 30000ms goto IDLE
//! ```
//!
//! Each scan, every task checks the transitions of its active state in
//! declaration order and takes the first whose guard holds. A point a task
//! emits reads the value listed by the active state, or 0 when the state
//! does not list it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::expr::{Expr, ExprParser};
use super::lex::{tokenize, Tok};
use super::rung::{expect_name, positive_ms};
use super::{line_count, source_lines, Diagnostic, Diagnostics, PointName};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionGuard {
    When(Expr),
    /// Fires once the task has spent this long in the state.
    Timeout(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub guard: TransitionGuard,
    pub target: PointName,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub name: PointName,
    pub emissions: Vec<(PointName, bool)>,
    pub transitions: Vec<Transition>,
}

impl State {
    /// Timeout thresholds of this state, ascending and deduplicated.
    pub fn timeouts(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self
            .transitions
            .iter()
            .filter_map(|t| match t.guard {
                TransitionGuard::Timeout(ms) => Some(ms),
                TransitionGuard::When(_) => None,
            })
            .collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTask {
    pub name: PointName,
    pub states: Vec<State>,
    pub initial: usize,
}

impl StateTask {
    pub fn initial_state(&self) -> &State {
        &self.states[self.initial]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name.as_str() == name)
    }

    /// Points this task emits, in first-emission order.
    pub fn emitted(&self) -> Vec<&PointName> {
        let mut seen = Vec::new();
        for s in &self.states {
            for (p, _) in &s.emissions {
                if !seen.contains(&p) {
                    seen.push(p);
                }
            }
        }
        seen
    }

    /// Indices of states reachable from the initial state along transitions.
    pub fn reachable_states(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([self.initial]);
        let mut queue = VecDeque::from([self.initial]);
        while let Some(i) = queue.pop_front() {
            for t in &self.states[i].transitions {
                if let Some(j) = self.state_index(t.target.as_str()) {
                    if seen.insert(j) {
                        queue.push_back(j);
                    }
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateProgram {
    pub inputs: Vec<PointName>,
    pub tasks: Vec<StateTask>,
}

impl StateProgram {
    pub fn declared_inputs(&self) -> BTreeSet<&PointName> {
        self.inputs.iter().collect()
    }

    pub fn emitted_points(&self) -> BTreeSet<&PointName> {
        self.tasks.iter().flat_map(|t| t.emitted()).collect()
    }

    pub fn task(&self, name: &str) -> Option<&StateTask> {
        self.tasks.iter().find(|t| t.name.as_str() == name)
    }
}

impl fmt::Display for StateProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.inputs {
            writeln!(f, "input {i}")?;
        }
        for task in &self.tasks {
            writeln!(f, "task {}", task.name)?;
            for (idx, s) in task.states.iter().enumerate() {
                if idx == task.initial {
                    writeln!(f, "  state {} initial", s.name)?;
                } else {
                    writeln!(f, "  state {}", s.name)?;
                }
                for (p, v) in &s.emissions {
                    writeln!(f, "    emit {p} {}", u8::from(*v))?;
                }
                for t in &s.transitions {
                    match &t.guard {
                        TransitionGuard::When(e) => writeln!(f, "    when {e} goto {}", t.target)?,
                        TransitionGuard::Timeout(ms) => {
                            writeln!(f, "    timeout {ms}ms goto {}", t.target)?
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

struct TaskBuilder {
    name: PointName,
    line: usize,
    states: Vec<State>,
    state_lines: Vec<usize>,
    initial: Vec<(usize, usize)>,
    gotos: Vec<(usize, PointName)>,
}

pub fn parse_state_program(text: &str) -> Result<StateProgram, Diagnostics> {
    let mut diags = Vec::new();
    let mut inputs: Vec<PointName> = Vec::new();
    let mut builders: Vec<TaskBuilder> = Vec::new();
    let mut guards: Vec<(usize, Expr)> = Vec::new();

    for (line, content) in source_lines(text) {
        if content.is_empty() {
            continue;
        }
        let toks = match tokenize(line, content) {
            Ok(t) => t,
            Err(d) => {
                diags.push(d);
                continue;
            }
        };
        if let Err(d) = statement(&toks, line, &mut inputs, &mut builders, &mut guards) {
            diags.push(d);
        }
    }

    let declared: BTreeSet<&PointName> = inputs.iter().collect();
    for (line, e) in &guards {
        for r in e.refs() {
            if !declared.contains(r) {
                diags.push(Diagnostic::error(*line, format!("undeclared point {r}")));
            }
        }
    }

    let mut emitters: BTreeMap<PointName, (String, usize)> = BTreeMap::new();
    let mut tasks = Vec::new();
    let mut task_names = BTreeSet::new();
    for b in builders {
        if !task_names.insert(b.name.clone()) {
            diags.push(Diagnostic::error(
                b.line,
                format!("duplicate task {}", b.name),
            ));
        }
        if b.states.is_empty() {
            diags.push(Diagnostic::error(
                b.line,
                format!("task {} has no states", b.name),
            ));
            continue;
        }
        let initial = match b.initial.as_slice() {
            [] => {
                diags.push(Diagnostic::error(
                    b.line,
                    format!("task {} has no initial state", b.name),
                ));
                0
            }
            [(idx, _)] => *idx,
            [_, (_, line), ..] => {
                diags.push(Diagnostic::error(
                    *line,
                    format!("task {} has more than one initial state", b.name),
                ));
                0
            }
        };
        for (line, target) in &b.gotos {
            if !b.states.iter().any(|s| &s.name == target) {
                diags.push(Diagnostic::error(*line, format!("unknown state {target}")));
            }
        }
        for (s, line) in b.states.iter().zip(&b.state_lines) {
            for (p, _) in &s.emissions {
                if declared.contains(p) {
                    diags.push(Diagnostic::error(
                        *line,
                        format!("point {p} is an input and cannot be emitted"),
                    ));
                }
                match emitters.get(p) {
                    Some((task, _)) if task != b.name.as_str() => diags.push(Diagnostic::error(
                        *line,
                        format!("point {p} emitted by multiple tasks ({task}, {})", b.name),
                    )),
                    Some(_) => {}
                    None => {
                        emitters.insert(p.clone(), (b.name.to_string(), *line));
                    }
                }
            }
        }
        tasks.push(StateTask {
            name: b.name,
            states: b.states,
            initial,
        });
    }

    if diags.is_empty() {
        Ok(StateProgram { inputs, tasks })
    } else {
        let max = line_count(text);
        diags.iter_mut().for_each(|d| d.line = d.line.clamp(1, max));
        diags.sort_by_key(|d| d.line);
        Err(Diagnostics(diags))
    }
}

fn statement(
    toks: &[Tok<'_>],
    line: usize,
    inputs: &mut Vec<PointName>,
    builders: &mut Vec<TaskBuilder>,
    guards: &mut Vec<(usize, Expr)>,
) -> Result<(), Diagnostic> {
    let keyword = match toks.first() {
        Some(Tok::Word(w)) => *w,
        Some(t) => {
            return Err(Diagnostic::error(
                line,
                format!("unknown statement {}", t.describe()),
            ))
        }
        None => return Ok(()),
    };
    match keyword {
        "input" => {
            let name = expect_name(toks, 1, line, "input")?;
            no_trailing(toks, 2, line)?;
            if inputs.contains(&name) {
                return Err(Diagnostic::error(line, format!("duplicate input {name}")));
            }
            inputs.push(name);
        }
        "task" => {
            let name = expect_name(toks, 1, line, "task")?;
            no_trailing(toks, 2, line)?;
            builders.push(TaskBuilder {
                name,
                line,
                states: Vec::new(),
                state_lines: Vec::new(),
                initial: Vec::new(),
                gotos: Vec::new(),
            });
        }
        "state" => {
            let task = builders
                .last_mut()
                .ok_or_else(|| Diagnostic::error(line, "state outside of a task"))?;
            let name = expect_name(toks, 1, line, "state")?;
            let initial = match toks.get(2) {
                None => false,
                Some(Tok::Word("initial")) => true,
                Some(t) => {
                    return Err(Diagnostic::error(
                        line,
                        format!("expected 'initial' but found {}", t.describe()),
                    ))
                }
            };
            no_trailing(toks, 3, line)?;
            if task.states.iter().any(|s| s.name == name) {
                return Err(Diagnostic::error(
                    line,
                    format!("duplicate state {name} in task {}", task.name),
                ));
            }
            if initial {
                task.initial.push((task.states.len(), line));
            }
            task.states.push(State {
                name,
                emissions: Vec::new(),
                transitions: Vec::new(),
            });
            task.state_lines.push(line);
        }
        "emit" => {
            let state = current_state(builders, line, "emit")?;
            let point = expect_name(toks, 1, line, "point")?;
            let value = match toks.get(2) {
                Some(Tok::Int(0)) => false,
                Some(Tok::Int(1)) => true,
                Some(t) => {
                    return Err(Diagnostic::error(
                        line,
                        format!("emitted value must be 0 or 1, found {}", t.describe()),
                    ))
                }
                None => return Err(Diagnostic::error(line, "expected emitted value 0 or 1")),
            };
            no_trailing(toks, 3, line)?;
            if state.emissions.iter().any(|(p, _)| p == &point) {
                return Err(Diagnostic::error(
                    line,
                    format!("point {point} emitted twice in state {}", state.name),
                ));
            }
            state.emissions.push((point, value));
        }
        "when" => {
            let goto = toks
                .iter()
                .rposition(|t| matches!(t, Tok::Word("goto")))
                .ok_or_else(|| Diagnostic::error(line, "expected 'goto' in transition"))?;
            let expr = ExprParser::parse_complete(&toks[1..goto], line)?;
            let target = expect_name(toks, goto + 1, line, "state")?;
            no_trailing(toks, goto + 2, line)?;
            add_transition(builders, line, TransitionGuard::When(expr.clone()), target)?;
            guards.push((line, expr));
        }
        "timeout" => {
            let ms = positive_ms(toks.get(1), line, "timeout")?;
            match toks.get(2) {
                Some(Tok::Word("goto")) => {}
                _ => return Err(Diagnostic::error(line, "expected 'goto' after timeout")),
            }
            let target = expect_name(toks, 3, line, "state")?;
            no_trailing(toks, 4, line)?;
            add_transition(builders, line, TransitionGuard::Timeout(ms), target)?;
        }
        other => {
            return Err(Diagnostic::error(
                line,
                format!("unknown statement '{other}'"),
            ))
        }
    }
    Ok(())
}

fn current_state<'b>(
    builders: &'b mut [TaskBuilder],
    line: usize,
    what: &str,
) -> Result<&'b mut State, Diagnostic> {
    builders
        .last_mut()
        .and_then(|b| b.states.last_mut())
        .ok_or_else(|| Diagnostic::error(line, format!("{what} outside of a state")))
}

fn add_transition(
    builders: &mut [TaskBuilder],
    line: usize,
    guard: TransitionGuard,
    target: PointName,
) -> Result<(), Diagnostic> {
    current_state(builders, line, "transition")?
        .transitions
        .push(Transition {
            guard,
            target: target.clone(),
        });
    builders
        .last_mut()
        .expect("state implies task")
        .gotos
        .push((line, target));
    Ok(())
}

fn no_trailing(toks: &[Tok<'_>], idx: usize, line: usize) -> Result<(), Diagnostic> {
    match toks.get(idx) {
        None => Ok(()),
        Some(t) => Err(Diagnostic::error(
            line,
            format!("unexpected {}", t.describe()),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errs(src: &str) -> Vec<Diagnostic> {
        parse_state_program(src).unwrap_err().0
    }

    #[test]
    fn single_state_task() {
        let p = parse_state_program("task T\n state ONLY initial\n").unwrap();
        assert_eq!(p.tasks.len(), 1);
        let t = &p.tasks[0];
        assert_eq!(t.initial_state().name.as_str(), "ONLY");
        assert!(t.initial_state().transitions.is_empty());
    }

    #[test]
    fn unknown_goto_target() {
        let e = errs("input A\ntask T\n state S initial\n  when A goto MISSING\n");
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].line, 4);
        assert_eq!(e[0].message, "unknown state MISSING");
    }

    #[test]
    fn point_emitted_by_two_tasks() {
        let src = "task T1\n state S initial\n  emit SECURED_LED 1\ntask T2\n state S initial\n  emit SECURED_LED 0\n";
        let e = errs(src);
        assert!(e[0]
            .message
            .contains("point SECURED_LED emitted by multiple tasks"));
        assert_eq!(e[0].line, 5);
    }

    #[test]
    fn missing_initial() {
        let e = errs("task T\n state S\n");
        assert!(e[0].message.contains("no initial state"));
        let e = errs("task T\n state S initial\n state U initial\n");
        assert!(e[0].message.contains("more than one initial"));
    }

    #[test]
    fn guard_over_undeclared_point() {
        let e = errs("task T\n state S initial\n  when X goto S\n");
        assert!(e[0].message.contains("undeclared point X"));
    }

    #[test]
    fn misplaced_statements() {
        assert!(errs("state S initial\n")[0].message.contains("outside"));
        assert!(errs("emit P 1\n")[0].message.contains("outside"));
        assert!(errs("task T\n state S initial\n  emit P 2\n")[0]
            .message
            .contains("0 or 1"));
        assert!(errs("task T\n state S initial\n  timeout 0ms goto S\n")[0]
            .message
            .contains("positive"));
    }

    #[test]
    fn reachability() {
        let p = parse_state_program(
            "input A\ntask T\n state X initial\n  when A goto Y\n state Y\n  timeout 10ms goto X\n state Z\n  when A goto X\n",
        )
        .unwrap();
        let reach = p.tasks[0].reachable_states();
        assert_eq!(reach, BTreeSet::from([0, 1]));
    }

    #[test]
    fn print_round_trip() {
        let src = "input A\ninput B\ntask T\n state X initial\n  emit P 1\n  when A AND NOT B goto Y\n state Y\n  timeout 30ms goto X\n  when B goto X\n";
        let p = parse_state_program(src).unwrap();
        assert_eq!(parse_state_program(&p.to_string()).unwrap(), p);
    }
}
