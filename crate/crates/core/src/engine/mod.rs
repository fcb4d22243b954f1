//! Dual-chain scan-cycle interpreter.
//!
//! One call to [`Engine::step`] runs a full scan in a fixed order:
//!
//! 1. latch the input image from the pending environment writes;
//! 2. Chain B: advance timers, then evaluate rungs top to bottom;
//! 3. Chain A: each task takes at most one transition and applies the new
//!    state's emissions;
//! 4. redundant-contact discrepancy and e-stop checks latch faults;
//! 5. commit outputs: a faulted chain's outputs read 0, fault indicators
//!    follow the registers, voted outputs go through [`combine`];
//! 6. advance simulated time by one scan period.
//!
//! Time is simulated only. Nothing here reads the wall clock.

mod compile;
mod fault;
mod record;

use std::sync::Arc;

use crate::dsl::PointName;
use crate::station::{Chain, Direction, StationModel};

use compile::{CGuard, CRungProgram, CStateProgram};

pub use fault::{FaultCode, FaultRegister, UnknownFaultCode};
pub use record::{bits_hex, ScanRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LoadError {
    #[error("{what} preset {preset_ms}ms is not a multiple of scan period {period_ms}ms")]
    PresetNotMultiple {
        what: String,
        preset_ms: u32,
        period_ms: u32,
    },
    #[error("program/point-map mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown point {0}")]
    UnknownPoint(String),
    #[error("{0} is not an input")]
    NotAnInput(String),
    #[error("cannot inject NO_FAULT; use reset_faults")]
    NoFaultInjection,
    #[error("duration {ms}ms is not a multiple of scan period {period_ms}ms")]
    DurationNotMultiple { ms: u64, period_ms: u32 },
}

/// Failure inside a chain program during a scan; latches `PROGRAM_HALT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EvalError {
    TimerOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub scan_period_ms: u32,
    pub discrepancy_window_scans: u32,
    /// Reserved for fault-injection schedules.
    pub rng_seed: u64,
}

/// Two-chain vote: a combined output is on only when both chain sources are
/// on and neither chain is faulted.
pub fn combine(a: bool, b: bool, fault_a: FaultCode, fault_b: FaultCode) -> bool {
    a && b && fault_a == FaultCode::NoFault && fault_b == FaultCode::NoFault
}

/// Everything that determines how the engine evolves, apart from pending
/// inputs and the clock. Used by the reachability explorer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoreState {
    pub coils: Vec<bool>,
    pub timer_acc_ms: Vec<u32>,
    pub task_state: Vec<usize>,
    pub task_elapsed_ms: Vec<u32>,
    pub faults: [FaultRegister; 2],
    pub discrepancy_scans: Vec<u32>,
    /// Whether an e-stop input was asserted in the last latched image.
    pub estop_active: bool,
}

/// A snapshot of every point value at a scan boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoImage {
    pub time_ms: u64,
    pub values: Vec<(PointName, bool)>,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Input(usize),
    Output(usize),
}

#[derive(Debug, Clone)]
pub struct Engine {
    station: Arc<StationModel>,
    config: EngineConfig,
    chain_a: CStateProgram,
    chain_b: CRungProgram,
    slots: Vec<Slot>,
    input_names: Vec<PointName>,
    output_names: Vec<PointName>,
    initial_inputs: Vec<bool>,
    /// (output ordinal, chain A source ordinal, chain B source ordinal)
    combined: Vec<(usize, usize, usize)>,
    fault_leds: [Option<usize>; 2],
    /// chain B coil index / chain A (task, per-state values) by output ordinal
    b_outputs: Vec<(usize, usize)>,
    a_outputs: Vec<(usize, usize, Vec<bool>)>,
    pairs: Vec<(usize, usize)>,
    estops: Vec<usize>,

    pending: Vec<bool>,
    inputs: Vec<bool>,
    outputs: Vec<bool>,
    core: CoreState,
    seq: u64,
    time_ms: u64,
}

impl Engine {
    pub fn load(station: impl Into<Arc<StationModel>>) -> Result<Engine, LoadError> {
        let station = station.into();
        let cfg = &station.config;
        let config = EngineConfig {
            scan_period_ms: cfg.scan_period_ms,
            discrepancy_window_scans: cfg.discrepancy_window_scans,
            rng_seed: 0,
        };
        let chain_b = compile::compile_rung_program(&station)?;
        let chain_a = compile::compile_state_program(&station)?;

        let mut slots = Vec::new();
        let mut input_names = Vec::new();
        let mut output_names = Vec::new();
        let mut initial_inputs = Vec::new();
        for p in station.points() {
            match p.direction {
                Direction::Input => {
                    slots.push(Slot::Input(input_names.len()));
                    input_names.push(p.name.clone());
                    initial_inputs.push(p.initial);
                }
                Direction::Output => {
                    slots.push(Slot::Output(output_names.len()));
                    output_names.push(p.name.clone());
                }
            }
        }
        let out_ord = |idx: usize| match slots[idx] {
            Slot::Output(o) => o,
            Slot::Input(_) => unreachable!("compiled outputs are output points"),
        };
        let by_name = |n: &PointName| {
            station
                .points()
                .iter()
                .position(|p| &p.name == n)
                .expect("station validated")
        };
        let in_ord = |n: &PointName| match slots[by_name(n)] {
            Slot::Input(i) => i,
            Slot::Output(_) => unreachable!("station validated"),
        };
        let combined = station
            .points()
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                p.combine
                    .as_ref()
                    .map(|(a, b)| (out_ord(i), out_ord(by_name(a)), out_ord(by_name(b))))
            })
            .collect();
        let fault_leds =
            [Chain::A, Chain::B].map(|c| cfg.fault_indicators.get(c).map(|n| out_ord(by_name(n))));
        let b_outputs = chain_b
            .outputs
            .iter()
            .map(|(idx, coil)| (out_ord(*idx), *coil))
            .collect();
        let a_outputs = chain_a
            .outputs
            .iter()
            .map(|(idx, task, values)| (out_ord(*idx), *task, values.clone()))
            .collect();
        let pairs = cfg
            .redundant_pairs
            .iter()
            .map(|(x, y)| (in_ord(x), in_ord(y)))
            .collect();
        let estops = cfg.estop_inputs.iter().map(in_ord).collect();

        let mut engine = Engine {
            config,
            core: CoreState {
                coils: vec![false; chain_b.rungs.len()],
                timer_acc_ms: vec![0; chain_b.timers.len()],
                task_state: chain_a.tasks.iter().map(|t| t.initial).collect(),
                task_elapsed_ms: vec![0; chain_a.tasks.len()],
                faults: Default::default(),
                discrepancy_scans: vec![0; cfg.redundant_pairs.len()],
                estop_active: false,
            },
            chain_a,
            chain_b,
            slots,
            pending: initial_inputs.clone(),
            inputs: initial_inputs.clone(),
            outputs: vec![false; output_names.len()],
            input_names,
            output_names,
            initial_inputs,
            combined,
            fault_leds,
            b_outputs,
            a_outputs,
            pairs,
            estops,
            seq: 0,
            time_ms: 0,
            station,
        };
        engine.reset();
        Ok(engine)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.rng_seed = seed;
        self
    }

    /// Returns the engine to its post-load state.
    pub fn reset(&mut self) {
        self.pending.clone_from(&self.initial_inputs);
        self.inputs.clone_from(&self.initial_inputs);
        self.outputs.iter_mut().for_each(|o| *o = false);
        self.core.faults = Default::default();
        self.core.discrepancy_scans.iter_mut().for_each(|d| *d = 0);
        self.core.estop_active = self.estops.iter().any(|&i| self.inputs[i]);
        self.reinit_programs();
        self.seq = 0;
        self.time_ms = 0;
    }

    fn reinit_programs(&mut self) {
        self.core.coils.iter_mut().for_each(|c| *c = false);
        self.core.timer_acc_ms.iter_mut().for_each(|t| *t = 0);
        for (s, t) in self.core.task_state.iter_mut().zip(&self.chain_a.tasks) {
            *s = t.initial;
        }
        self.core.task_elapsed_ms.iter_mut().for_each(|e| *e = 0);
    }

    pub fn station(&self) -> &Arc<StationModel> {
        &self.station
    }

    pub fn config(&self) -> EngineConfig {
        self.config
    }

    pub fn scan_period_ms(&self) -> u32 {
        self.config.scan_period_ms
    }

    pub fn time_ms(&self) -> u64 {
        self.time_ms
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn input_names(&self) -> &[PointName] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[PointName] {
        &self.output_names
    }

    /// Runs one scan and returns its record.
    pub fn step(&mut self) -> ScanRecord {
        self.scan();
        self.record()
    }

    /// Runs one scan without building a record.
    pub fn scan(&mut self) {
        let period = self.config.scan_period_ms;
        let now = self.time_ms + u64::from(period);
        self.inputs.clone_from(&self.pending);

        if !self.core.faults[Chain::B.index()].is_faulted() && self.scan_chain_b().is_err() {
            self.core.faults[Chain::B.index()].latch(FaultCode::ProgramHalt, now);
        }
        if !self.core.faults[Chain::A.index()].is_faulted() && self.scan_chain_a().is_err() {
            self.core.faults[Chain::A.index()].latch(FaultCode::ProgramHalt, now);
        }

        let window = self.config.discrepancy_window_scans;
        let mut discrepancy = false;
        for (k, &(x, y)) in self.pairs.iter().enumerate() {
            let d = &mut self.core.discrepancy_scans[k];
            if self.inputs[x] != self.inputs[y] {
                *d = (*d + 1).min(window + 1);
                discrepancy |= *d > window;
            } else {
                *d = 0;
            }
        }
        let estop = self.estops.iter().any(|&i| self.inputs[i]);
        self.core.estop_active = estop;
        for f in &mut self.core.faults {
            if discrepancy {
                f.latch(FaultCode::Discrepancy, now);
            }
            if estop {
                f.latch(FaultCode::EstopLatch, now);
            }
        }

        self.commit_outputs();
        self.time_ms = now;
        self.seq += 1;
    }

    fn scan_chain_b(&mut self) -> Result<(), EvalError> {
        let period = self.config.scan_period_ms;
        let prog = &self.chain_b;
        let core = &mut self.core;
        let mut done: Vec<bool> = prog
            .timers
            .iter()
            .zip(&core.timer_acc_ms)
            .map(|(t, acc)| *acc >= t.preset_ms)
            .collect();
        for (i, t) in prog.timers.iter().enumerate() {
            let acc = &mut core.timer_acc_ms[i];
            if t.enable.eval(&self.inputs, &core.coils, &done) {
                *acc = acc
                    .checked_add(period)
                    .ok_or(EvalError::TimerOverflow)?
                    .min(t.preset_ms);
            } else {
                *acc = 0;
            }
            done[i] = *acc >= t.preset_ms;
        }
        for (i, rung) in prog.rungs.iter().enumerate() {
            core.coils[i] = rung.eval(&self.inputs, &core.coils, &done);
        }
        Ok(())
    }

    fn scan_chain_a(&mut self) -> Result<(), EvalError> {
        let period = self.config.scan_period_ms;
        for (ti, task) in self.chain_a.tasks.iter().enumerate() {
            let current = &task.states[self.core.task_state[ti]];
            let elapsed = &mut self.core.task_elapsed_ms[ti];
            if let Some(&longest) = current.timeouts.last() {
                *elapsed = elapsed
                    .checked_add(period)
                    .ok_or(EvalError::TimerOverflow)?
                    .min(longest);
            }
            let fired = current.transitions.iter().find(|t| match &t.guard {
                CGuard::When(e) => e.eval(&self.inputs, &[], &[]),
                CGuard::Timeout(ms) => *elapsed >= *ms,
            });
            if let Some(t) = fired {
                self.core.task_state[ti] = t.target;
                *elapsed = 0;
            }
        }
        Ok(())
    }

    fn commit_outputs(&mut self) {
        let [fa, fb] = self.core.faults.map(|f| f.code());
        self.outputs.iter_mut().for_each(|o| *o = false);
        if fb == FaultCode::NoFault {
            for &(o, coil) in &self.b_outputs {
                self.outputs[o] = self.core.coils[coil];
            }
        }
        if fa == FaultCode::NoFault {
            for (o, task, values) in &self.a_outputs {
                self.outputs[*o] = values[self.core.task_state[*task]];
            }
        }
        for (chain, led) in self.fault_leds.iter().enumerate() {
            if let Some(o) = led {
                self.outputs[*o] = self.core.faults[chain].is_faulted();
            }
        }
        for &(o, a, b) in &self.combined {
            self.outputs[o] = combine(self.outputs[a], self.outputs[b], fa, fb);
        }
    }

    /// Record of the most recent scan boundary.
    pub fn record(&self) -> ScanRecord {
        ScanRecord {
            seq: self.seq,
            time_ms: self.time_ms,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            faults: self.core.faults,
            active_states: self.task_states(),
        }
    }

    pub fn run_for(&mut self, duration_ms: u64) -> Result<Vec<ScanRecord>, EngineError> {
        let period = u64::from(self.config.scan_period_ms);
        if !duration_ms.is_multiple_of(period) {
            return Err(EngineError::DurationNotMultiple {
                ms: duration_ms,
                period_ms: self.config.scan_period_ms,
            });
        }
        Ok((0..duration_ms / period).map(|_| self.step()).collect())
    }

    fn slot(&self, point: &str) -> Result<Slot, EngineError> {
        self.station
            .points()
            .iter()
            .position(|p| p.name.as_str() == point)
            .map(|i| self.slots[i])
            .ok_or_else(|| EngineError::UnknownPoint(point.to_string()))
    }

    /// Queues an environment write; it is latched at the start of the next
    /// scan. Later writes before that scan replace earlier ones.
    pub fn write_point(&mut self, point: &str, value: bool) -> Result<(), EngineError> {
        match self.slot(point)? {
            Slot::Input(i) => {
                self.pending[i] = value;
                Ok(())
            }
            Slot::Output(_) => Err(EngineError::NotAnInput(point.to_string())),
        }
    }

    /// Value committed at the most recent scan boundary.
    pub fn read_point(&self, point: &str) -> Result<bool, EngineError> {
        Ok(match self.slot(point)? {
            Slot::Input(i) => self.inputs[i],
            Slot::Output(o) => self.outputs[o],
        })
    }

    /// Writes every input by map order; for exhaustive exploration.
    pub fn write_inputs(&mut self, values: &[bool]) {
        self.pending.copy_from_slice(values);
    }

    pub fn inputs(&self) -> &[bool] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[bool] {
        &self.outputs
    }

    pub fn image(&self) -> IoImage {
        let values = self
            .station
            .points()
            .iter()
            .zip(&self.slots)
            .map(|(p, s)| {
                let v = match *s {
                    Slot::Input(i) => self.inputs[i],
                    Slot::Output(o) => self.outputs[o],
                };
                (p.name.clone(), v)
            })
            .collect();
        IoImage {
            time_ms: self.time_ms,
            values,
        }
    }

    pub fn fault(&self, chain: Chain) -> FaultRegister {
        self.core.faults[chain.index()]
    }

    pub fn faults(&self) -> [FaultRegister; 2] {
        self.core.faults
    }

    /// Latches `code` on `chain` now. The chain's outputs read 0 from the next
    /// scan boundary on.
    pub fn inject_fault(&mut self, chain: Chain, code: FaultCode) -> Result<(), EngineError> {
        if code == FaultCode::NoFault {
            return Err(EngineError::NoFaultInjection);
        }
        self.core.faults[chain.index()].latch(code, self.time_ms);
        Ok(())
    }

    /// Operator fault reset. A register whose latching condition is still
    /// present (contacts disagreeing, e-stop held) stays latched; every chain
    /// program restarts from its initial state.
    pub fn reset_faults(&mut self) {
        // a nonzero counter means the pair disagreed in the last latched image
        let disagree = self.core.discrepancy_scans.iter().any(|&d| d > 0);
        let estop = self.core.estop_active;
        for f in &mut self.core.faults {
            let present = match f.code() {
                FaultCode::Discrepancy => disagree,
                FaultCode::EstopLatch => estop,
                _ => false,
            };
            if !present {
                f.clear();
            }
        }
        self.reinit_programs();
    }

    /// Voted value of every combined output given the committed chain
    /// outputs and the current fault registers.
    pub fn combined_permit(&self) -> Vec<(PointName, bool)> {
        let [fa, fb] = self.core.faults.map(|f| f.code());
        self.combined
            .iter()
            .map(|&(o, a, b)| {
                (
                    self.output_names[o].clone(),
                    combine(self.outputs[a], self.outputs[b], fa, fb),
                )
            })
            .collect()
    }

    /// Active state of each Chain A task as of the last scan boundary.
    pub fn task_states(&self) -> Vec<(PointName, PointName)> {
        self.chain_a
            .tasks
            .iter()
            .zip(&self.core.task_state)
            .map(|(t, &s)| (t.name.clone(), t.state_names[s].clone()))
            .collect()
    }

    pub fn task_state(&self, task: &str) -> Option<&PointName> {
        self.chain_a
            .tasks
            .iter()
            .zip(&self.core.task_state)
            .find(|(t, _)| t.name.as_str() == task)
            .map(|(t, &s)| &t.state_names[s])
    }

    /// Chain B coil value by name (internal coils included).
    pub fn coil(&self, name: &str) -> Option<bool> {
        self.chain_b
            .coil_names
            .iter()
            .position(|c| c.as_str() == name)
            .map(|i| self.core.coils[i])
    }

    pub fn core_state(&self) -> &CoreState {
        &self.core
    }

    pub fn restore_core_state(&mut self, core: CoreState) {
        assert_eq!(core.coils.len(), self.core.coils.len());
        assert_eq!(core.task_state.len(), self.core.task_state.len());
        self.core = core;
    }

    /// Timer presets in Chain B declaration order.
    pub fn timer_presets(&self) -> Vec<u32> {
        self.chain_b.timers.iter().map(|t| t.preset_ms).collect()
    }

    /// Timeout thresholds of a task's state, ascending.
    pub fn state_timeouts(&self, task: usize, state: usize) -> &[u32] {
        &self.chain_a.tasks[task].states[state].timeouts
    }

    pub fn task_count(&self) -> usize {
        self.chain_a.tasks.len()
    }

    pub fn state_name(&self, task: usize, state: usize) -> &PointName {
        &self.chain_a.tasks[task].state_names[state]
    }
}
