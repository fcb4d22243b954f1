use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, EngineError};

use super::script::{TestCase, TestStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// The case could not be executed as written.
    Error,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
            Verdict::Error => "Error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedStep {
    /// 1-based position among the case's steps.
    pub index: usize,
    pub step: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub case_id: String,
    pub title: String,
    pub verdict: Verdict,
    /// Wall-clock start, RFC 3339. Metadata only.
    pub started_at: String,
    pub sim_duration_ms: u64,
    pub failed_step: Option<FailedStep>,
    pub message: Option<String>,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

enum Outcome {
    Fail { expected: String, actual: String },
    Error(String),
}

impl From<EngineError> for Outcome {
    fn from(e: EngineError) -> Self {
        Outcome::Error(e.to_string())
    }
}

/// Counts simulated time across station resets.
struct Clocked<'e> {
    engine: &'e mut Engine,
    sim_ms: u64,
}

impl Clocked<'_> {
    fn scans(&self, ms: u64) -> Result<u64, Outcome> {
        let period = u64::from(self.engine.scan_period_ms());
        if !ms.is_multiple_of(period) {
            return Err(EngineError::DurationNotMultiple {
                ms,
                period_ms: self.engine.scan_period_ms(),
            }
            .into());
        }
        Ok(ms / period)
    }

    fn scan(&mut self) {
        self.engine.scan();
        self.sim_ms += u64::from(self.engine.scan_period_ms());
    }

    /// Checks `probe` at the current scan boundary and after each scan for up
    /// to `within_ms`. Returns the last observed value on expiry.
    fn expect(
        &mut self,
        within_ms: u64,
        expected: String,
        probe: impl Fn(&Engine) -> Result<String, Outcome>,
    ) -> Result<(), Outcome> {
        let scans = self.scans(within_ms)?;
        let mut actual = probe(self.engine)?;
        for _ in 0..scans {
            if actual == expected {
                return Ok(());
            }
            self.scan();
            actual = probe(self.engine)?;
        }
        if actual == expected {
            Ok(())
        } else {
            Err(Outcome::Fail { expected, actual })
        }
    }

    fn run(&mut self, step: &TestStep) -> Result<(), Outcome> {
        let bit = |b: bool| u8::from(b).to_string();
        match step {
            TestStep::Set(p, v) => self.engine.write_point(p.as_str(), *v)?,
            TestStep::Wait(ms) => {
                for _ in 0..self.scans(*ms)? {
                    self.scan();
                }
            }
            TestStep::Expect {
                point,
                value,
                within_ms,
            } => {
                self.engine.read_point(point.as_str())?;
                self.expect(*within_ms, bit(*value), |e| {
                    Ok(bit(e.read_point(point.as_str())?))
                })?
            }
            TestStep::ExpectFault {
                chain,
                code,
                within_ms,
            } => self.expect(*within_ms, code.to_string(), |e| {
                Ok(e.fault(*chain).code().to_string())
            })?,
            TestStep::ExpectState {
                task,
                state,
                within_ms,
            } => {
                let Some(t) = self.engine.station().chain_a.task(task.as_str()) else {
                    return Err(Outcome::Error(format!("unknown task {task}")));
                };
                if t.state_index(state.as_str()).is_none() {
                    return Err(Outcome::Error(format!("task {task} has no state {state}")));
                }
                self.expect(*within_ms, state.to_string(), |e| {
                    Ok(e.task_state(task.as_str())
                        .expect("task checked")
                        .to_string())
                })?
            }
            TestStep::InjectFault(chain, code) => self.engine.inject_fault(*chain, *code)?,
            TestStep::ResetFaults => self.engine.reset_faults(),
            TestStep::ResetStation => self.engine.reset(),
        }
        Ok(())
    }
}

/// Executes `case` against `engine`. The engine is reset first unless the
/// case is a continuation.
pub fn run_case(case: &TestCase, engine: &mut Engine, started_at: DateTime<Utc>) -> TestResult {
    if !case.continuation {
        engine.reset();
    }
    let mut clocked = Clocked { engine, sim_ms: 0 };
    let mut verdict = Verdict::Pass;
    let mut failed_step = None;
    let mut message = None;
    for (i, step) in case.steps.iter().enumerate() {
        match clocked.run(step) {
            Ok(()) => {}
            Err(Outcome::Fail { expected, actual }) => {
                verdict = Verdict::Fail;
                failed_step = Some(FailedStep {
                    index: i + 1,
                    step: step.to_string(),
                    expected,
                    actual,
                });
                break;
            }
            Err(Outcome::Error(m)) => {
                verdict = Verdict::Error;
                message = Some(format!("step {} ({step}): {m}", i + 1));
                break;
            }
        }
    }
    TestResult {
        case_id: case.id.clone(),
        title: case.title.clone(),
        verdict,
        started_at: timestamp(started_at),
        sim_duration_ms: clocked.sim_ms,
        failed_step,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::parse_test_script;
    use crate::station::build_reference_station;

    fn run(src: &str) -> TestResult {
        let case = parse_test_script(src).unwrap();
        let mut e = Engine::load(build_reference_station()).unwrap();
        run_case(&case, &mut e, DateTime::UNIX_EPOCH)
    }

    #[test]
    fn smoke_passes_immediately() {
        let r = run("case TC-000 \"smoke\"\nexpect SHUTTER_PERMIT == 0 within 20ms\n");
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.sim_duration_ms, 0);
        assert_eq!(r.started_at, "1970-01-01T00:00:00.000Z");
    }

    #[test]
    fn permit_at_reset_fails_with_detail() {
        let r = run("case T \"t\"\nwait 10ms\nexpect SHUTTER_PERMIT == 1 within 30ms\n");
        assert_eq!(r.verdict, Verdict::Fail);
        let f = r.failed_step.unwrap();
        assert_eq!(f.index, 2);
        assert_eq!((f.expected.as_str(), f.actual.as_str()), ("1", "0"));
        assert_eq!(f.step, "expect SHUTTER_PERMIT == 1 within 30ms");
        assert_eq!(r.sim_duration_ms, 40);
    }

    #[test]
    fn errors_are_not_failures() {
        let r = run("case T \"t\"\nset NOPE 1\n");
        assert_eq!(r.verdict, Verdict::Error);
        assert!(r.message.unwrap().contains("unknown point NOPE"));
        assert!(r.failed_step.is_none());
        let r = run("case T \"t\"\nset SHUTTER_PERMIT 1\n");
        assert_eq!(r.verdict, Verdict::Error);
        let r = run("case T \"t\"\nwait 15ms\n");
        assert!(r.message.unwrap().contains("not a multiple"));
        let r = run("case T \"t\"\nexpect state NOPE == IDLE within 10ms\n");
        assert!(r.message.unwrap().contains("unknown task"));
        let r = run("case T \"t\"\nexpect state ACCESS == NOPE within 10ms\n");
        assert!(r.message.unwrap().contains("no state NOPE"));
        let r = run("case T \"t\"\ninject fault A NO_FAULT\n");
        assert_eq!(r.verdict, Verdict::Error);
    }

    #[test]
    fn trip_case() {
        let r = run("case T \"trip\"\n\
            set DOOR_CLOSED_1 1\nset DOOR_CLOSED_2 1\nset SEARCH_BTN_1 1\nwait 10ms\n\
            set SEARCH_BTN_1 0\nset SEARCH_BTN_2 1\nwait 10ms\nset SEARCH_BTN_2 0\n\
            set SECURE_KEY 1\nset BEAM_REQ 1\nexpect SHUTTER_PERMIT == 1 within 30ms\n\
            set DOOR_CLOSED_2 0\nexpect SHUTTER_PERMIT == 0 within 20ms\n\
            expect SHUTTER_PERMIT_A == 0 within 10ms\nexpect SHUTTER_PERMIT_B == 0 within 10ms\n\
            expect state ACCESS == TRIPPED within 10ms\n");
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }
}
