//! Exhaustive breadth-first exploration of the engine's reachable states.
//!
//! A state is the engine's [`CoreState`] with fault timestamps dropped and
//! each clock (Chain B timer accumulators, Chain A time-in-state) replaced by
//! the interval it occupies between its thresholds. Every interval is
//! expanded to its lowest and highest scan-aligned value when computing
//! successors. Threshold comparisons are the only way a clock affects
//! behaviour, so this over-approximates the concrete system: anything unsafe
//! in the concrete system shows up here, at the price of possible spurious
//! traces when two clocks are correlated.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::dsl::PointName;
use crate::engine::{CoreState, Engine, FaultCode, FaultRegister, LoadError};

use super::{Chain, StationModel, PERMIT, PERMIT_A, PERMIT_B};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Environment action applied before one scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    /// Value of every input, in map order.
    pub inputs: Vec<bool>,
    /// Operator fault reset before the scan.
    pub reset_faults: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    pub symbols: Vec<Symbol>,
}

impl Alphabet {
    /// Every input vector, optionally each paired with a fault reset as well.
    pub fn exhaustive(input_count: usize, with_fault_reset: bool) -> Alphabet {
        assert!(
            input_count <= 20,
            "exhaustive alphabet over {input_count} inputs"
        );
        let mut symbols = Vec::new();
        for reset in [false, true] {
            if reset && !with_fault_reset {
                break;
            }
            for bits in 0u32..(1 << input_count) {
                symbols.push(Symbol {
                    inputs: (0..input_count).map(|i| bits >> i & 1 == 1).collect(),
                    reset_faults: reset,
                });
            }
        }
        Alphabet { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// `permit = 1` must imply every `required` point is 1 and every listed
/// chain is unfaulted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyProperty {
    pub permit: PointName,
    pub required: Vec<PointName>,
    pub healthy: Vec<Chain>,
}

impl SafetyProperty {
    /// The shutter permit may only be on with every door closed, the chain(s)
    /// behind it secured, and no fault latched. Door inputs are the
    /// station's redundant contacts; "secured" is the `SECURED_LED_x`
    /// indicator. Per-chain permits are checked too so that a chain cannot
    /// rely on its partner for safety.
    pub fn station_defaults(station: &StationModel) -> Vec<SafetyProperty> {
        let doors: Vec<PointName> = station
            .config
            .redundant_pairs
            .iter()
            .flat_map(|(x, y)| [x.clone(), y.clone()])
            .collect();
        let secured = |c: Chain| PointName::new(format!("SECURED_LED_{c}")).expect("valid name");
        let with = |extra: &[Chain]| {
            let mut req = doors.clone();
            req.extend(
                extra
                    .iter()
                    .map(|&c| secured(c))
                    .filter(|p| station.point(p.as_str()).is_some()),
            );
            req
        };
        let name = |s: &str| PointName::new(s).expect("valid name");
        vec![
            SafetyProperty {
                permit: name(PERMIT),
                required: with(&Chain::BOTH),
                healthy: Chain::BOTH.to_vec(),
            },
            SafetyProperty {
                permit: name(PERMIT_A),
                required: with(&[Chain::A]),
                healthy: vec![Chain::A],
            },
            SafetyProperty {
                permit: name(PERMIT_B),
                required: with(&[Chain::B]),
                healthy: vec![Chain::B],
            },
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub alphabet: Alphabet,
    pub state_cap: usize,
    /// Empty means [`SafetyProperty::station_defaults`].
    pub properties: Vec<SafetyProperty>,
    /// Stop at this many recorded violations.
    pub max_violations: usize,
}

impl ExploreOptions {
    /// All input vectors, with and without a fault reset.
    pub fn exhaustive(station: &StationModel) -> ExploreOptions {
        ExploreOptions {
            alphabet: Alphabet::exhaustive(station.inputs().count(), true),
            state_cap: DEFAULT_STATE_CAP,
            properties: Vec::new(),
            max_violations: 16,
        }
    }
}

/// One step of a counterexample, starting from the reset state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub reset_faults: bool,
    /// Inputs held at 1 during the scan.
    pub inputs_on: Vec<PointName>,
    /// Clocks that had run to the end of their interval before the scan.
    pub clocks_late: Vec<String>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.reset_faults {
            f.write_str("reset faults; ")?;
        }
        let on: Vec<&str> = self.inputs_on.iter().map(PointName::as_str).collect();
        write!(f, "scan with [{}]", on.join(" "))?;
        if !self.clocks_late.is_empty() {
            write!(f, " after {} ran out", self.clocks_late.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub property: PointName,
    pub missing: Vec<String>,
    pub trace: Vec<TraceStep>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "SAFETY: {} on without {}",
            self.property,
            self.missing.join(", ")
        )?;
        for (i, s) in self.trace.iter().enumerate() {
            writeln!(f, "  {:>3}. {s}", i + 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExploreStatus {
    Complete,
    /// The state cap was reached before the frontier emptied.
    Incomplete {
        cap: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ReachabilityReport {
    pub status: ExploreStatus,
    pub states: usize,
    pub transitions: u64,
    pub violations: Vec<Violation>,
    /// Violating transitions, including those beyond `max_violations`.
    pub violation_count: u64,
    /// `(task, state)` pairs seen in some reachable state.
    pub task_states: BTreeSet<(PointName, PointName)>,
    /// Output points seen at 1 in some reachable state.
    pub outputs_reached: BTreeSet<PointName>,
}

impl ReachabilityReport {
    pub fn is_complete(&self) -> bool {
        self.status == ExploreStatus::Complete
    }

    /// Complete and without violations.
    pub fn is_safe(&self) -> bool {
        self.is_complete() && self.violation_count == 0
    }
}

impl fmt::Display for ReachabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.status {
            ExploreStatus::Complete => writeln!(f, "exploration complete")?,
            ExploreStatus::Incomplete { cap } => {
                writeln!(f, "exploration incomplete: state cap {cap} reached")?
            }
        }
        writeln!(
            f,
            "{} states, {} transitions, {} SAFETY violations",
            self.states, self.transitions, self.violation_count
        )?;
        for (t, s) in &self.task_states {
            writeln!(f, "reached {t}={s}")?;
        }
        for v in &self.violations {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    coils: Vec<bool>,
    timer_bucket: Vec<u8>,
    task_state: Vec<usize>,
    task_bucket: Vec<u8>,
    faults: [FaultCode; 2],
    discrepancy: Vec<u32>,
    estop: bool,
}

/// Interval index of `value` among ascending `thresholds`; the last interval
/// is the value pinned at the top threshold.
fn bucket(value: u32, thresholds: &[u32]) -> u8 {
    thresholds.iter().take_while(|&&t| value >= t).count() as u8
}

/// Lowest and highest scan-aligned values in interval `b`.
fn representatives(b: u8, thresholds: &[u32], period: u32) -> Vec<u32> {
    let b = usize::from(b);
    if b == thresholds.len() {
        return vec![thresholds.last().copied().unwrap_or(0)];
    }
    let lo = if b == 0 { 0 } else { thresholds[b - 1] };
    let hi = thresholds[b] - period;
    if hi > lo {
        vec![lo, hi]
    } else {
        vec![lo]
    }
}

struct Clocks {
    period: u32,
    timer_presets: Vec<u32>,
}

impl Clocks {
    fn abstract_state(&self, engine: &Engine, core: &CoreState) -> Node {
        Node {
            coils: core.coils.clone(),
            timer_bucket: core
                .timer_acc_ms
                .iter()
                .zip(&self.timer_presets)
                .map(|(&acc, &p)| bucket(acc, &[p]))
                .collect(),
            task_state: core.task_state.clone(),
            task_bucket: core
                .task_elapsed_ms
                .iter()
                .enumerate()
                .map(|(t, &e)| bucket(e, engine.state_timeouts(t, core.task_state[t])))
                .collect(),
            faults: core.faults.map(|f| f.code()),
            discrepancy: core.discrepancy_scans.clone(),
            estop: core.estop_active,
        }
    }

    /// Concrete states for every combination of clock representatives, with
    /// the names of clocks set to the late end of their interval.
    fn concretize(&self, engine: &Engine, node: &Node) -> Vec<(CoreState, Vec<String>)> {
        let mut choices: Vec<(String, Vec<u32>)> = Vec::new();
        for (i, (&b, &p)) in node
            .timer_bucket
            .iter()
            .zip(&self.timer_presets)
            .enumerate()
        {
            choices.push((format!("timer {i}"), representatives(b, &[p], self.period)));
        }
        for (t, (&b, &s)) in node.task_bucket.iter().zip(&node.task_state).enumerate() {
            let name = format!("{}.{}", engine.state_name(t, s), "timeout");
            choices.push((
                name,
                representatives(b, engine.state_timeouts(t, s), self.period),
            ));
        }
        let faults = node.faults.map(|c| {
            let mut r = FaultRegister::default();
            if c != FaultCode::NoFault {
                r.latch(c, 0);
            }
            r
        });
        let n_timers = node.timer_bucket.len();
        let mut out = Vec::new();
        let total: usize = choices.iter().map(|(_, v)| v.len()).product();
        for mut k in 0..total {
            let mut values = Vec::with_capacity(choices.len());
            let mut late = Vec::new();
            for (name, reps) in &choices {
                let pick = k % reps.len();
                k /= reps.len();
                values.push(reps[pick]);
                if pick > 0 {
                    late.push(name.clone());
                }
            }
            let (timers, tasks) = values.split_at(n_timers);
            out.push((
                CoreState {
                    coils: node.coils.clone(),
                    timer_acc_ms: timers.to_vec(),
                    task_state: node.task_state.clone(),
                    task_elapsed_ms: tasks.to_vec(),
                    faults,
                    discrepancy_scans: node.discrepancy.clone(),
                    estop_active: node.estop,
                },
                late,
            ));
        }
        out
    }
}

struct Check {
    permit: usize,
    permit_name: PointName,
    required: Vec<(PointName, usize, bool)>,
    healthy: Vec<Chain>,
}

fn compile_checks(engine: &Engine, props: &[SafetyProperty]) -> Vec<Check> {
    let locate = |p: &PointName| -> Option<(usize, bool)> {
        if let Some(i) = engine.output_names().iter().position(|n| n == p) {
            return Some((i, true));
        }
        engine
            .input_names()
            .iter()
            .position(|n| n == p)
            .map(|i| (i, false))
    };
    props
        .iter()
        .filter_map(|prop| {
            let (permit, true) = locate(&prop.permit)? else {
                return None;
            };
            let required = prop
                .required
                .iter()
                .filter_map(|r| locate(r).map(|(i, out)| (r.clone(), i, out)))
                .collect();
            Some(Check {
                permit,
                permit_name: prop.permit.clone(),
                required,
                healthy: prop.healthy.clone(),
            })
        })
        .collect()
}

fn check(engine: &Engine, c: &Check) -> Option<Vec<String>> {
    if !engine.outputs()[c.permit] {
        return None;
    }
    let mut missing: Vec<String> = c
        .required
        .iter()
        .filter(|(_, i, out)| {
            !if *out {
                engine.outputs()[*i]
            } else {
                engine.inputs()[*i]
            }
        })
        .map(|(n, _, _)| n.to_string())
        .collect();
    for &chain in &c.healthy {
        if engine.fault(chain).is_faulted() {
            missing.push(format!("chain {chain} healthy"));
        }
    }
    (!missing.is_empty()).then_some(missing)
}

/// Breadth-first search from the post-reset state over `options.alphabet`.
pub fn explore_reachable(
    station: &StationModel,
    options: &ExploreOptions,
) -> Result<ReachabilityReport, LoadError> {
    let mut engine = Engine::load(station.clone())?;
    let clocks = Clocks {
        period: engine.scan_period_ms(),
        timer_presets: engine.timer_presets(),
    };
    let props = if options.properties.is_empty() {
        SafetyProperty::station_defaults(station)
    } else {
        options.properties.clone()
    };
    let checks = compile_checks(&engine, &props);

    let root = clocks.abstract_state(&engine, engine.core_state());
    let mut nodes: Vec<Node> = vec![root.clone()];
    // parent node, symbol index, late clocks
    let mut parents: Vec<Option<(u32, u32, Vec<String>)>> = vec![None];
    let mut index: HashMap<Node, u32> = HashMap::from([(root, 0)]);
    let mut report = ReachabilityReport {
        status: ExploreStatus::Complete,
        states: 0,
        transitions: 0,
        violations: Vec::new(),
        violation_count: 0,
        task_states: BTreeSet::new(),
        outputs_reached: BTreeSet::new(),
    };
    let note_outputs = |engine: &Engine, report: &mut ReachabilityReport| {
        report.task_states.extend(engine.task_states());
        for (n, &v) in engine.output_names().iter().zip(engine.outputs()) {
            if v && !report.outputs_reached.contains(n) {
                report.outputs_reached.insert(n.clone());
            }
        }
    };
    note_outputs(&engine, &mut report);

    let step = |(_, sym, late): &(u32, u32, Vec<String>), engine: &Engine| {
        let s = &options.alphabet.symbols[*sym as usize];
        TraceStep {
            reset_faults: s.reset_faults,
            inputs_on: engine
                .input_names()
                .iter()
                .zip(&s.inputs)
                .filter(|(_, &v)| v)
                .map(|(n, _)| n.clone())
                .collect(),
            clocks_late: late.clone(),
        }
    };
    let trace = |parents: &[Option<(u32, u32, Vec<String>)>], mut at: u32, engine: &Engine| {
        let mut steps = Vec::new();
        while let Some(link) = &parents[at as usize] {
            steps.push(step(link, engine));
            at = link.0;
        }
        steps.reverse();
        steps
    };

    let mut next = 0usize;
    while next < nodes.len() {
        let here = next as u32;
        let node = nodes[next].clone();
        next += 1;
        for (core, late) in clocks.concretize(&engine, &node) {
            for (si, sym) in options.alphabet.symbols.iter().enumerate() {
                engine.restore_core_state(core.clone());
                engine.write_inputs(&sym.inputs);
                if sym.reset_faults {
                    engine.reset_faults();
                }
                engine.scan();
                report.transitions += 1;
                note_outputs(&engine, &mut report);

                let succ = clocks.abstract_state(&engine, engine.core_state());
                let link = (here, si as u32, late.clone());
                if !index.contains_key(&succ) {
                    if nodes.len() >= options.state_cap {
                        report.status = ExploreStatus::Incomplete {
                            cap: options.state_cap,
                        };
                        report.states = nodes.len();
                        return Ok(report);
                    }
                    index.insert(succ.clone(), nodes.len() as u32);
                    nodes.push(succ);
                    parents.push(Some(link.clone()));
                }
                for c in &checks {
                    if let Some(missing) = check(&engine, c) {
                        report.violation_count += 1;
                        if report.violations.len() < options.max_violations {
                            let mut steps = trace(&parents, here, &engine);
                            steps.push(step(&link, &engine));
                            report.violations.push(Violation {
                                property: c.permit_name.clone(),
                                missing,
                                trace: steps,
                            });
                        }
                    }
                }
            }
        }
    }
    report.states = nodes.len();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::station::build_reference_station;

    #[test]
    fn buckets_and_representatives() {
        assert_eq!(bucket(0, &[100]), 0);
        assert_eq!(bucket(90, &[100]), 0);
        assert_eq!(bucket(100, &[100]), 1);
        assert_eq!(representatives(0, &[100], 10), vec![0, 90]);
        assert_eq!(representatives(1, &[100], 10), vec![100]);
        assert_eq!(representatives(0, &[10], 10), vec![0]);
        assert_eq!(representatives(1, &[50, 100], 10), vec![50, 90]);
        assert_eq!(representatives(0, &[], 10), vec![0]);
    }

    #[test]
    fn empty_alphabet_reaches_only_the_initial_state() {
        let station = build_reference_station();
        let opts = ExploreOptions {
            alphabet: Alphabet::default(),
            ..ExploreOptions::exhaustive(&station)
        };
        let r = explore_reachable(&station, &opts).unwrap();
        assert!(r.is_safe());
        assert_eq!(r.states, 1);
        assert_eq!(r.transitions, 0);
    }

    #[test]
    fn cap_is_reported() {
        let station = build_reference_station();
        let opts = ExploreOptions {
            state_cap: 5,
            ..ExploreOptions::exhaustive(&station)
        };
        let r = explore_reachable(&station, &opts).unwrap();
        assert_eq!(r.status, ExploreStatus::Incomplete { cap: 5 });
        assert!(!r.is_safe());
        assert!(r.to_string().contains("incomplete"));
    }

    #[test]
    fn sabotaged_chain_b_is_caught() {
        let station = build_reference_station();
        // permit no longer checks the doors
        let src = station.chain_b_source.replace(
            "rung SHUTTER_PERMIT_B := SECURED_B AND SECURE_KEY AND BEAM_REQ AND",
            "rung SHUTTER_PERMIT_B := SECURED_B AND SECURE_KEY AND BEAM_REQ OR",
        );
        assert_ne!(src, station.chain_b_source);
        let bad = station.with_chain_source(Chain::B, &src).unwrap();
        let r = explore_reachable(&bad, &ExploreOptions::exhaustive(&bad)).unwrap();
        assert!(r.violation_count > 0);
        let v = &r.violations[0];
        assert_eq!(v.property.as_str(), PERMIT_B);
        assert!(!v.trace.is_empty());
        // replay the trace concretely: the last step should leave the permit on
        let mut e = Engine::load(bad.clone()).unwrap();
        for s in &v.trace {
            assert!(s.clocks_late.is_empty(), "trace needs no waiting");
            if s.reset_faults {
                e.reset_faults();
            }
            for n in e.input_names().to_vec() {
                e.write_point(n.as_str(), s.inputs_on.contains(&n)).unwrap();
            }
            e.scan();
        }
        assert!(e.read_point(PERMIT_B).unwrap());
    }
}
