//! The `.tc` test-script language: one test case per file.

use std::fmt;

use crate::dsl::{Diagnostic, Diagnostics, PointName};
use crate::engine::FaultCode;
use crate::station::Chain;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestStep {
    Set(PointName, bool),
    Wait(u64),
    Expect {
        point: PointName,
        value: bool,
        within_ms: u64,
    },
    ExpectFault {
        chain: Chain,
        code: FaultCode,
        within_ms: u64,
    },
    ExpectState {
        task: PointName,
        state: PointName,
        within_ms: u64,
    },
    InjectFault(Chain, FaultCode),
    ResetFaults,
    ResetStation,
}

impl fmt::Display for TestStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestStep::Set(p, v) => write!(f, "set {p} {}", u8::from(*v)),
            TestStep::Wait(ms) => write!(f, "wait {ms}ms"),
            TestStep::Expect {
                point,
                value,
                within_ms,
            } => write!(
                f,
                "expect {point} == {} within {within_ms}ms",
                u8::from(*value)
            ),
            TestStep::ExpectFault {
                chain,
                code,
                within_ms,
            } => write!(f, "expect fault {chain} == {code} within {within_ms}ms"),
            TestStep::ExpectState {
                task,
                state,
                within_ms,
            } => write!(f, "expect state {task} == {state} within {within_ms}ms"),
            TestStep::InjectFault(c, code) => write!(f, "inject fault {c} {code}"),
            TestStep::ResetFaults => f.write_str("reset faults"),
            TestStep::ResetStation => f.write_str("reset station"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: String,
    pub title: String,
    /// Detail requirement ids.
    pub covers: Vec<String>,
    pub steps: Vec<TestStep>,
    /// Source line of each step.
    pub lines: Vec<usize>,
    /// Run against the engine as left by the previous case instead of a
    /// freshly reset one.
    pub continuation: bool,
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "case {} \"{}\"", self.id, self.title)?;
        if !self.covers.is_empty() {
            writeln!(f, "covers {}", self.covers.join(" "))?;
        }
        if self.continuation {
            writeln!(f, "continue")?;
        }
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

pub(crate) fn is_unit_id(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_'))
}

/// Drops a `#` comment that is not inside a quoted string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn duration(line: usize, tok: &str) -> Result<u64, Diagnostic> {
    let digits = tok
        .strip_suffix("ms")
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| {
            Diagnostic::error(
                line,
                format!("expected a duration like 100ms, found {tok:?}"),
            )
        })?;
    let ms: u64 = digits
        .parse()
        .map_err(|_| Diagnostic::error(line, format!("duration {tok} is too large")))?;
    if ms == 0 {
        return Err(Diagnostic::error(line, "duration must be positive"));
    }
    Ok(ms)
}

fn bit(line: usize, tok: &str) -> Result<bool, Diagnostic> {
    match tok {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Diagnostic::error(
            line,
            format!("expected 0 or 1, found {tok:?}"),
        )),
    }
}

fn name(line: usize, tok: &str) -> Result<PointName, Diagnostic> {
    PointName::new(tok).map_err(|e| Diagnostic::error(line, e.to_string()))
}

fn chain(line: usize, tok: &str) -> Result<Chain, Diagnostic> {
    Chain::parse(tok)
        .ok_or_else(|| Diagnostic::error(line, format!("expected chain A or B, found {tok:?}")))
}

fn fault(line: usize, tok: &str) -> Result<FaultCode, Diagnostic> {
    tok.parse()
        .map_err(|e: crate::engine::UnknownFaultCode| Diagnostic::error(line, e.to_string()))
}

/// `within Nms` at the end of an expect line.
fn within(line: usize, rest: &[&str]) -> Result<u64, Diagnostic> {
    match rest {
        ["within", d] => duration(line, d),
        [] => Err(Diagnostic::error(
            line,
            "expect needs a timeout: within <N>ms",
        )),
        _ => Err(Diagnostic::error(line, "expected 'within <N>ms'")),
    }
}

fn parse_step(line: usize, words: &[&str]) -> Result<TestStep, Diagnostic> {
    let bad = || Diagnostic::error(line, format!("malformed '{}' step", words[0]));
    Ok(match words {
        ["set", p, v] => TestStep::Set(name(line, p)?, bit(line, v)?),
        ["set", ..] => return Err(bad()),
        ["wait", d] => TestStep::Wait(duration(line, d)?),
        ["wait", ..] => return Err(bad()),
        ["expect", "fault", c, "==", code, rest @ ..] => TestStep::ExpectFault {
            chain: chain(line, c)?,
            code: fault(line, code)?,
            within_ms: within(line, rest)?,
        },
        ["expect", "state", t, "==", s, rest @ ..] => TestStep::ExpectState {
            task: name(line, t)?,
            state: name(line, s)?,
            within_ms: within(line, rest)?,
        },
        ["expect", p, "==", v, rest @ ..] => TestStep::Expect {
            point: name(line, p)?,
            value: bit(line, v)?,
            within_ms: within(line, rest)?,
        },
        ["expect", ..] => return Err(bad()),
        ["inject", "fault", c, code] => TestStep::InjectFault(chain(line, c)?, fault(line, code)?),
        ["inject", ..] => return Err(bad()),
        ["reset", "faults"] => TestStep::ResetFaults,
        ["reset", "station"] => TestStep::ResetStation,
        ["reset", ..] => {
            return Err(Diagnostic::error(
                line,
                "expected 'reset faults' or 'reset station'",
            ))
        }
        [verb, ..] => return Err(Diagnostic::error(line, format!("unknown verb {verb:?}"))),
        [] => unreachable!("blank lines skipped"),
    })
}

/// `case ID "title"`
fn parse_header(line: usize, text: &str) -> Result<(String, String), Diagnostic> {
    let rest = text["case".len()..].trim_start();
    let (id, title) = rest
        .split_once(char::is_whitespace)
        .ok_or_else(|| Diagnostic::error(line, "expected case <ID> \"<title>\""))?;
    if !is_unit_id(id) {
        return Err(Diagnostic::error(line, format!("bad case id {id:?}")));
    }
    let title = title.trim();
    let inner = title
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .filter(|t| !t.contains('"'))
        .ok_or_else(|| Diagnostic::error(line, "title must be one double-quoted string"))?;
    Ok((id.to_string(), inner.to_string()))
}

/// Parses one test case, collecting every line error.
pub fn parse_test_script(text: &str) -> Result<TestCase, Diagnostics> {
    let mut diags = Vec::new();
    let mut header: Option<(String, String)> = None;
    let mut covers = Vec::new();
    let mut steps = Vec::new();
    let mut lines = Vec::new();
    let mut continuation = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        let first = words[0];
        if first == "case" {
            if header.is_some() {
                diags.push(Diagnostic::error(line, "only one case per file"));
                continue;
            }
            match parse_header(line, content) {
                Ok(h) => header = Some(h),
                Err(d) => {
                    diags.push(d);
                    header = Some((String::new(), String::new()));
                }
            }
            continue;
        }
        if header.is_none() {
            diags.push(Diagnostic::error(
                line,
                "script must start with a case line",
            ));
            header = Some((String::new(), String::new()));
        }
        match first {
            "covers" => {
                if words.len() == 1 {
                    diags.push(Diagnostic::error(
                        line,
                        "covers needs at least one requirement id",
                    ));
                }
                for w in &words[1..] {
                    if is_unit_id(w) {
                        covers.push(w.to_string());
                    } else {
                        diags.push(Diagnostic::error(line, format!("bad requirement id {w:?}")));
                    }
                }
            }
            "continue" if words.len() == 1 => {
                if !steps.is_empty() {
                    diags.push(Diagnostic::error(
                        line,
                        "continue must come before the first step",
                    ));
                }
                continuation = true;
            }
            _ => match parse_step(line, &words) {
                Ok(s) => {
                    steps.push(s);
                    lines.push(line);
                }
                Err(d) => diags.push(d),
            },
        }
    }
    let Some((id, title)) = header else {
        return Err(Diagnostics(vec![Diagnostic::error(
            0,
            "empty script: expected case <ID> \"<title>\"",
        )]));
    };
    if steps.is_empty() && diags.is_empty() {
        diags.push(Diagnostic::error(0, "case has no steps"));
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    Ok(TestCase {
        id,
        title,
        covers,
        steps,
        lines,
        continuation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_smoke_case() {
        let c =
            parse_test_script("case TC-000 \"smoke\"\n expect SHUTTER_PERMIT == 0 within 20ms\n")
                .unwrap();
        assert_eq!(c.id, "TC-000");
        assert_eq!(c.title, "smoke");
        assert_eq!(c.steps.len(), 1);
        assert_eq!(c.lines, vec![2]);
        assert!(!c.continuation);
    }

    #[test]
    fn every_step_kind_round_trips() {
        let src = "case TC-9 \"all # kinds\"  # trailing\ncovers DR-4.2.1 DR-4.2.2\ncontinue\n\
            set DOOR_CLOSED_1 1\nwait 100ms\nexpect SEARCH_LED_A == 1 within 20ms\n\
            expect fault B == ESTOP_LATCH within 10ms\nexpect state ACCESS == IDLE within 10ms\n\
            inject fault A WATCHDOG\nreset faults\nreset station\n";
        let c = parse_test_script(src).unwrap();
        assert_eq!(c.title, "all # kinds");
        assert_eq!(c.covers, vec!["DR-4.2.1", "DR-4.2.2"]);
        assert!(c.continuation);
        assert_eq!(c.steps.len(), 8);
        let again = parse_test_script(&c.to_string()).unwrap();
        assert_eq!(again.steps, c.steps);
        assert_eq!(again.covers, c.covers);
    }

    fn first_error(src: &str) -> String {
        parse_test_script(src).unwrap_err().0[0].to_string()
    }

    #[test]
    fn diagnostics() {
        assert_eq!(
            first_error("case T \"t\"\nwait 0ms\n"),
            "error: line 2: duration must be positive"
        );
        assert!(first_error("case T \"t\"\nexpect X == 1\n").contains("timeout"));
        assert!(first_error("case T \"t\"\njump X\n").contains("unknown verb \"jump\""));
        assert!(first_error("set X 1\n").contains("must start with a case"));
        assert!(first_error("case T \"t\"\n").contains("no steps"));
        assert!(first_error("case T t\nwait 10ms\n").contains("double-quoted"));
        assert!(first_error("case T \"t\"\nset X 2\n").contains("0 or 1"));
        assert!(first_error("case T \"t\"\ninject fault C WATCHDOG\n").contains("chain"));
        assert!(first_error("case T \"t\"\ninject fault A BOGUS\n").contains("BOGUS"));
        assert!(first_error("").contains("empty script"));
        let all = parse_test_script("case T \"t\"\nwait 5\nset x 1\n").unwrap_err();
        assert_eq!(all.0.len(), 2);
    }
}
