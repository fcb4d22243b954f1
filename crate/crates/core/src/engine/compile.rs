//! Resolution of chain programs against a station's point map into
//! index-addressed form.

use std::collections::BTreeMap;

use crate::dsl::{Expr, PointName, TransitionGuard};
use crate::station::{Affinity, Chain, Direction, StationModel};

use super::LoadError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Slot {
    Input(usize),
    Coil(usize),
    Timer(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum CExpr {
    Slot(Slot),
    Not(Box<CExpr>),
    And(Vec<CExpr>),
    Or(Vec<CExpr>),
}

impl CExpr {
    pub(crate) fn eval(&self, inputs: &[bool], coils: &[bool], timers: &[bool]) -> bool {
        match self {
            CExpr::Slot(Slot::Input(i)) => inputs[*i],
            CExpr::Slot(Slot::Coil(i)) => coils[*i],
            CExpr::Slot(Slot::Timer(i)) => timers[*i],
            CExpr::Not(e) => !e.eval(inputs, coils, timers),
            CExpr::And(es) => es.iter().all(|e| e.eval(inputs, coils, timers)),
            CExpr::Or(es) => es.iter().any(|e| e.eval(inputs, coils, timers)),
        }
    }
}

fn compile(expr: &Expr, names: &BTreeMap<&PointName, Slot>) -> CExpr {
    match expr {
        // names were checked by the parser
        Expr::Ref(n) => CExpr::Slot(names[n].clone()),
        Expr::Not(e) => CExpr::Not(Box::new(compile(e, names))),
        Expr::And(es) => CExpr::And(es.iter().map(|e| compile(e, names)).collect()),
        Expr::Or(es) => CExpr::Or(es.iter().map(|e| compile(e, names)).collect()),
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CTimer {
    pub preset_ms: u32,
    pub enable: CExpr,
}

#[derive(Debug, Clone)]
pub(crate) struct CRungProgram {
    pub coil_names: Vec<PointName>,
    pub rungs: Vec<CExpr>,
    pub timers: Vec<CTimer>,
    /// (station point index, coil index) for coils that drive map outputs.
    pub outputs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub(crate) struct CTransition {
    pub guard: CGuard,
    pub target: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum CGuard {
    When(CExpr),
    Timeout(u32),
}

#[derive(Debug, Clone)]
pub(crate) struct CState {
    pub transitions: Vec<CTransition>,
    /// Ascending timeout thresholds; empty if the state has no timeout.
    pub timeouts: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct CTask {
    pub name: PointName,
    pub state_names: Vec<PointName>,
    pub states: Vec<CState>,
    pub initial: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct CStateProgram {
    pub tasks: Vec<CTask>,
    /// (station point index, task index, value per state).
    pub outputs: Vec<(usize, usize, Vec<bool>)>,
}

/// Index of each input point among the station's inputs.
fn input_slots(station: &StationModel) -> BTreeMap<&PointName, usize> {
    station
        .inputs()
        .enumerate()
        .map(|(i, p)| (&p.name, i))
        .collect()
}

fn check_input(station: &StationModel, chain: Chain, name: &PointName) -> Result<(), LoadError> {
    match station.point(name.as_str()) {
        Some(p) if p.direction == Direction::Input && p.chain.includes(chain) => Ok(()),
        Some(p) if p.direction == Direction::Input => Err(LoadError::Mismatch(format!(
            "chain {chain} reads input {name}, which is wired to chain {:?} only",
            p.chain
        ))),
        Some(_) => Err(LoadError::Mismatch(format!(
            "chain {chain} declares {name} as an input but it is an output"
        ))),
        None => Err(LoadError::Mismatch(format!(
            "chain {chain} reads {name}, which is not in the point map"
        ))),
    }
}

/// Checks that a chain program may drive station point `name`; returns its
/// index, or `None` for names outside the map (internal coils).
fn check_output(
    station: &StationModel,
    chain: Chain,
    name: &PointName,
) -> Result<Option<usize>, LoadError> {
    let Some(idx) = station.points().iter().position(|p| &p.name == name) else {
        return Ok(None);
    };
    let p = &station.points()[idx];
    let owned = p.direction == Direction::Output
        && p.chain != Affinity::Both
        && p.chain.includes(chain)
        && station.config.fault_indicators.get(chain) != Some(name);
    if owned {
        Ok(Some(idx))
    } else {
        Err(LoadError::Mismatch(format!(
            "chain {chain} drives {name}, which is not a chain {chain} program output"
        )))
    }
}

fn check_period(what: String, ms: u32, period: u32) -> Result<(), LoadError> {
    if !ms.is_multiple_of(period) {
        Err(LoadError::PresetNotMultiple {
            what,
            preset_ms: ms,
            period_ms: period,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn compile_rung_program(station: &StationModel) -> Result<CRungProgram, LoadError> {
    let prog = &station.chain_b;
    let period = station.config.scan_period_ms;
    let mut names: BTreeMap<&PointName, Slot> = BTreeMap::new();
    let inputs = input_slots(station);
    for i in &prog.inputs {
        check_input(station, Chain::B, i)?;
        names.insert(i, Slot::Input(inputs[i]));
    }
    let mut outputs = Vec::new();
    for (ci, r) in prog.rungs.iter().enumerate() {
        if let Some(idx) = check_output(station, Chain::B, &r.coil)? {
            outputs.push((idx, ci));
        }
        names.insert(&r.coil, Slot::Coil(ci));
    }
    for (ti, t) in prog.timers.iter().enumerate() {
        check_period(format!("timer {}", t.name), t.preset_ms, period)?;
        names.insert(&t.name, Slot::Timer(ti));
    }
    Ok(CRungProgram {
        coil_names: prog.rungs.iter().map(|r| r.coil.clone()).collect(),
        rungs: prog
            .rungs
            .iter()
            .map(|r| compile(&r.expr, &names))
            .collect(),
        timers: prog
            .timers
            .iter()
            .map(|t| CTimer {
                preset_ms: t.preset_ms,
                enable: compile(&t.enable, &names),
            })
            .collect(),
        outputs,
    })
}

pub(crate) fn compile_state_program(station: &StationModel) -> Result<CStateProgram, LoadError> {
    let prog = &station.chain_a;
    let period = station.config.scan_period_ms;
    let inputs = input_slots(station);
    let mut names: BTreeMap<&PointName, Slot> = BTreeMap::new();
    for i in &prog.inputs {
        check_input(station, Chain::A, i)?;
        names.insert(i, Slot::Input(inputs[i]));
    }
    let mut tasks = Vec::new();
    let mut outputs = Vec::new();
    for (ti, task) in prog.tasks.iter().enumerate() {
        let mut states = Vec::new();
        for s in &task.states {
            let mut transitions = Vec::new();
            for t in &s.transitions {
                let target = task
                    .state_index(t.target.as_str())
                    .expect("parser checked goto targets");
                let guard = match &t.guard {
                    TransitionGuard::When(e) => CGuard::When(compile(e, &names)),
                    TransitionGuard::Timeout(ms) => {
                        check_period(format!("timeout in {}.{}", task.name, s.name), *ms, period)?;
                        CGuard::Timeout(*ms)
                    }
                };
                transitions.push(CTransition { guard, target });
            }
            states.push(CState {
                transitions,
                timeouts: s.timeouts(),
            });
        }
        for point in task.emitted() {
            let Some(idx) = check_output(station, Chain::A, point)? else {
                return Err(LoadError::Mismatch(format!(
                    "chain A emits {point}, which is not in the point map"
                )));
            };
            let values = task
                .states
                .iter()
                .map(|s| {
                    s.emissions
                        .iter()
                        .find(|(p, _)| p == point)
                        .is_some_and(|(_, v)| *v)
                })
                .collect();
            outputs.push((idx, ti, values));
        }
        tasks.push(CTask {
            name: task.name.clone(),
            state_names: task.states.iter().map(|s| s.name.clone()).collect(),
            states,
            initial: task.initial,
        });
    }
    Ok(CStateProgram { tasks, outputs })
}
