//! Relay-ladder rung programs (Chain B).
//!
//! ```text
//! input DOOR_CLOSED_1
//! timer SEARCH_WINDOW 30000ms := SEARCH_1_B
//! rung SEARCH_1_B := SEARCH_BTN_1 OR SEARCH_1_B AND NOT SEARCH_WINDOW
//! ```
//!
//! Rungs run top to bottom each scan. A rung reads the value its coil had at
//! the end of the previous scan when it references itself (seal-in), and the
//! freshly committed value of any coil whose rung is above it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::expr::{Expr, ExprParser};
use super::lex::{tokenize, Tok};
use super::{line_count, source_lines, Diagnostic, Diagnostics, PointName};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rung {
    pub coil: PointName,
    pub expr: Expr,
}

/// On-delay timer. Its done flag reads true once `enable` has held for
/// `preset_ms` of scan time; dropping `enable` clears it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimerDecl {
    pub name: PointName,
    pub preset_ms: u32,
    pub enable: Expr,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RungProgram {
    pub inputs: Vec<PointName>,
    /// Coils declared with an explicit `coil` line. Every coil, declared or
    /// not, is defined by its rung.
    pub coil_decls: Vec<PointName>,
    pub timers: Vec<TimerDecl>,
    pub rungs: Vec<Rung>,
}

impl RungProgram {
    pub fn declared_inputs(&self) -> BTreeSet<&PointName> {
        self.inputs.iter().collect()
    }

    /// Coils in rung order.
    pub fn coils(&self) -> impl Iterator<Item = &PointName> {
        self.rungs.iter().map(|r| &r.coil)
    }

    pub fn rung_for(&self, coil: &PointName) -> Option<&Rung> {
        self.rungs.iter().find(|r| &r.coil == coil)
    }

    /// True when there are no timers and every rung reads only inputs and
    /// coils of earlier rungs, so a single scan is a pure function of the
    /// input image.
    pub fn is_combinational(&self) -> bool {
        let mut visible = self.declared_inputs();
        self.timers.is_empty()
            && self.rungs.iter().all(|r| {
                let ok = r.expr.refs().iter().all(|n| visible.contains(n));
                visible.insert(&r.coil);
                ok
            })
    }
}

impl fmt::Display for RungProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.inputs {
            writeln!(f, "input {i}")?;
        }
        for c in &self.coil_decls {
            writeln!(f, "coil {c}")?;
        }
        for t in &self.timers {
            writeln!(f, "timer {} {}ms := {}", t.name, t.preset_ms, t.enable)?;
        }
        for r in &self.rungs {
            writeln!(f, "rung {} := {}", r.coil, r.expr)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Input,
    Coil,
    Timer,
}

pub fn parse_rung_program(text: &str) -> Result<RungProgram, Diagnostics> {
    let mut prog = RungProgram::default();
    let mut diags = Vec::new();
    // name -> (kind, line)
    let mut names: BTreeMap<PointName, (Kind, usize)> = BTreeMap::new();
    let mut rung_lines: BTreeMap<PointName, usize> = BTreeMap::new();
    let mut coil_decl_lines: Vec<(PointName, usize)> = Vec::new();
    // expressions to resolve once all declarations are known
    let mut pending: Vec<(usize, Expr)> = Vec::new();

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
        let result = match toks.first() {
            Some(Tok::Word("input")) => declare_name(&toks, line, "input").and_then(|n| {
                claim(&mut names, &n, Kind::Input, line)?;
                prog.inputs.push(n);
                Ok(())
            }),
            Some(Tok::Word("coil")) => declare_name(&toks, line, "coil").and_then(|n| {
                if let Some((k, _)) = names.get(&n) {
                    if *k != Kind::Coil || coil_decl_lines.iter().any(|(c, _)| c == &n) {
                        return Err(collision(&n, *k, line));
                    }
                } else {
                    names.insert(n.clone(), (Kind::Coil, line));
                }
                coil_decl_lines.push((n.clone(), line));
                prog.coil_decls.push(n);
                Ok(())
            }),
            Some(Tok::Word("timer")) => parse_timer(&toks, line).and_then(|t| {
                claim(&mut names, &t.name, Kind::Timer, line)?;
                pending.push((line, t.enable.clone()));
                prog.timers.push(t);
                Ok(())
            }),
            Some(Tok::Word("rung")) => parse_rung(&toks, line).and_then(|r| {
                if rung_lines.contains_key(&r.coil) {
                    return Err(Diagnostic::error(
                        line,
                        format!("duplicate coil {}: already defined by another rung", r.coil),
                    ));
                }
                match names.get(&r.coil) {
                    Some((Kind::Coil, _)) => {}
                    Some((k, _)) => return Err(collision(&r.coil, *k, line)),
                    None => {
                        names.insert(r.coil.clone(), (Kind::Coil, line));
                    }
                }
                rung_lines.insert(r.coil.clone(), line);
                pending.push((line, r.expr.clone()));
                prog.rungs.push(r);
                Ok(())
            }),
            Some(t) => Err(Diagnostic::error(
                line,
                format!("unknown statement {}", t.describe()),
            )),
            None => Ok(()),
        };
        if let Err(d) = result {
            diags.push(d);
        }
    }

    for (name, line) in &coil_decl_lines {
        if !rung_lines.contains_key(name) {
            diags.push(Diagnostic::error(*line, format!("coil {name} has no rung")));
        }
    }
    for (line, expr) in &pending {
        for r in expr.refs() {
            if !names.contains_key(r) {
                diags.push(Diagnostic::error(*line, format!("undeclared point {r}")));
            }
        }
    }

    if diags.is_empty() {
        Ok(prog)
    } else {
        let max = line_count(text);
        diags.iter_mut().for_each(|d| d.line = d.line.clamp(1, max));
        diags.sort_by_key(|d| d.line);
        Err(Diagnostics(diags))
    }
}

fn collision(name: &PointName, existing: Kind, line: usize) -> Diagnostic {
    let what = match existing {
        Kind::Input => "input",
        Kind::Coil => "coil",
        Kind::Timer => "timer",
    };
    Diagnostic::error(
        line,
        format!("name {name} collides with an existing {what}"),
    )
}

fn claim(
    names: &mut BTreeMap<PointName, (Kind, usize)>,
    name: &PointName,
    kind: Kind,
    line: usize,
) -> Result<(), Diagnostic> {
    if let Some((k, _)) = names.get(name) {
        return Err(collision(name, *k, line));
    }
    names.insert(name.clone(), (kind, line));
    Ok(())
}

pub(crate) fn expect_name(
    toks: &[Tok<'_>],
    idx: usize,
    line: usize,
    what: &str,
) -> Result<PointName, Diagnostic> {
    match toks.get(idx) {
        Some(Tok::Word(w)) => PointName::new(*w)
            .map_err(|_| Diagnostic::error(line, format!("invalid {what} name '{w}'"))),
        Some(t) => Err(Diagnostic::error(
            line,
            format!("expected {what} name but found {}", t.describe()),
        )),
        None => Err(Diagnostic::error(line, format!("expected {what} name"))),
    }
}

fn declare_name(toks: &[Tok<'_>], line: usize, what: &str) -> Result<PointName, Diagnostic> {
    let name = expect_name(toks, 1, line, what)?;
    if let Some(extra) = toks.get(2) {
        return Err(Diagnostic::error(
            line,
            format!("unexpected {} after {what} name", extra.describe()),
        ));
    }
    Ok(name)
}

fn expect_assign(toks: &[Tok<'_>], idx: usize, line: usize) -> Result<(), Diagnostic> {
    match toks.get(idx) {
        Some(Tok::Assign) => Ok(()),
        Some(t) => Err(Diagnostic::error(
            line,
            format!("expected ':=' but found {}", t.describe()),
        )),
        None => Err(Diagnostic::error(line, "expected ':='")),
    }
}

/// Parses a positive millisecond count (`30000ms` or bare `30000`).
pub(crate) fn positive_ms(
    tok: Option<&Tok<'_>>,
    line: usize,
    what: &str,
) -> Result<u32, Diagnostic> {
    let n = match tok {
        Some(Tok::Millis(n)) | Some(Tok::Int(n)) => *n,
        Some(t) => {
            return Err(Diagnostic::error(
                line,
                format!("expected {what} in milliseconds but found {}", t.describe()),
            ))
        }
        None => {
            return Err(Diagnostic::error(
                line,
                format!("expected {what} in milliseconds"),
            ))
        }
    };
    if n <= 0 {
        return Err(Diagnostic::error(
            line,
            format!("{what} must be positive, got {n}ms"),
        ));
    }
    u32::try_from(n).map_err(|_| Diagnostic::error(line, format!("{what} {n}ms is too large")))
}

fn parse_timer(toks: &[Tok<'_>], line: usize) -> Result<TimerDecl, Diagnostic> {
    let name = expect_name(toks, 1, line, "timer")?;
    let preset_ms = positive_ms(toks.get(2), line, "timer preset")?;
    expect_assign(toks, 3, line)?;
    let enable = ExprParser::parse_complete(&toks[4..], line)?;
    Ok(TimerDecl {
        name,
        preset_ms,
        enable,
    })
}

fn parse_rung(toks: &[Tok<'_>], line: usize) -> Result<Rung, Diagnostic> {
    let coil = expect_name(toks, 1, line, "coil")?;
    expect_assign(toks, 2, line)?;
    let expr = ExprParser::parse_complete(&toks[3..], line)?;
    Ok(Rung { coil, expr })
}
