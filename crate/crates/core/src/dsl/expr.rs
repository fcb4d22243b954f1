use std::collections::BTreeSet;
use std::fmt;

use super::lex::Tok;
use super::{Diagnostic, PointName};

/// Boolean expression over named signals.
///
/// Parsing produces a canonical form: nested `AND`/`OR` of the same kind are
/// flattened and redundant parentheses dropped, so printing and reparsing
/// yields an equal tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Ref(PointName),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    pub fn and(parts: Vec<Expr>) -> Expr {
        Self::join(parts, true)
    }

    pub fn or(parts: Vec<Expr>) -> Expr {
        Self::join(parts, false)
    }

    fn join(parts: Vec<Expr>, is_and: bool) -> Expr {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match (p, is_and) {
                (Expr::And(inner), true) | (Expr::Or(inner), false) => flat.extend(inner),
                (p, _) => flat.push(p),
            }
        }
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if is_and {
            Expr::And(flat)
        } else {
            Expr::Or(flat)
        }
    }

    /// Every name the expression reads.
    pub fn refs(&self) -> BTreeSet<&PointName> {
        let mut out = BTreeSet::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut BTreeSet<&'a PointName>) {
        match self {
            Expr::Ref(n) => {
                out.insert(n);
            }
            Expr::Not(e) => e.collect_refs(out),
            Expr::And(es) | Expr::Or(es) => es.iter().for_each(|e| e.collect_refs(out)),
        }
    }

    /// Evaluates with `lookup` supplying each referenced value.
    pub fn eval(&self, lookup: &mut impl FnMut(&PointName) -> bool) -> bool {
        match self {
            Expr::Ref(n) => lookup(n),
            Expr::Not(e) => !e.eval(lookup),
            Expr::And(es) => es.iter().all(|e| e.eval(lookup)),
            Expr::Or(es) => es.iter().any(|e| e.eval(lookup)),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // precedence: OR 1, AND 2, NOT/atom 3
        match self {
            Expr::Ref(n) => write!(f, "{n}"),
            Expr::Not(e) => {
                f.write_str("NOT ")?;
                e.fmt_prec(f, 3)
            }
            Expr::And(es) | Expr::Or(es) => {
                let (prec, op) = match self {
                    Expr::And(_) => (2, " AND "),
                    _ => (1, " OR "),
                };
                // a nested same-kind group only exists when built by hand;
                // parenthesize it so reparsing is unambiguous
                let paren = parent >= prec;
                if paren {
                    f.write_str("(")?;
                }
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    e.fmt_prec(f, prec)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Recursive-descent parser over one line's tokens.
pub(crate) struct ExprParser<'t, 'a> {
    toks: &'t [Tok<'a>],
    pos: usize,
    line: usize,
}

impl<'t, 'a> ExprParser<'t, 'a> {
    pub(crate) fn new(toks: &'t [Tok<'a>], line: usize) -> Self {
        ExprParser { toks, pos: 0, line }
    }

    /// Parses an expression that must run to the end of `toks`.
    pub(crate) fn parse_complete(toks: &'t [Tok<'a>], line: usize) -> Result<Expr, Diagnostic> {
        let mut p = ExprParser::new(toks, line);
        let e = p.parse()?;
        if let Some(t) = p.toks.get(p.pos) {
            return Err(Diagnostic::error(
                line,
                format!("unexpected {} after expression", t.describe()),
            ));
        }
        Ok(e)
    }

    pub(crate) fn parse(&mut self) -> Result<Expr, Diagnostic> {
        let mut parts = vec![self.and_term()?];
        while self.eat_word("OR") {
            parts.push(self.and_term()?);
        }
        Ok(Expr::or(parts))
    }

    fn and_term(&mut self) -> Result<Expr, Diagnostic> {
        let mut parts = vec![self.unary()?];
        while self.eat_word("AND") {
            parts.push(self.unary()?);
        }
        Ok(Expr::and(parts))
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if self.eat_word("NOT") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        match self.toks.get(self.pos) {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.parse()?;
                match self.toks.get(self.pos) {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(e)
                    }
                    Some(t) => Err(Diagnostic::error(
                        self.line,
                        format!("expected ')' but found {}", t.describe()),
                    )),
                    None => Err(Diagnostic::error(self.line, "expected ')'")),
                }
            }
            Some(Tok::Word(w)) if PointName::is_valid(w) => {
                self.pos += 1;
                Ok(Expr::Ref(PointName::new(*w).expect("validated")))
            }
            Some(t) => Err(Diagnostic::error(
                self.line,
                format!("expected expression but found {}", t.describe()),
            )),
            None => Err(Diagnostic::error(self.line, "expected expression")),
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.toks.get(self.pos), Some(Tok::Word(w)) if *w == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::lex::tokenize;
    use super::*;

    fn parse(s: &str) -> Result<Expr, Diagnostic> {
        let toks = tokenize(1, s)?;
        ExprParser::parse_complete(&toks, 1)
    }

    #[test]
    fn precedence_and_flattening() {
        let e = parse("A OR B AND NOT C").unwrap();
        assert_eq!(e.to_string(), "A OR B AND NOT C");
        let e = parse("(A AND B) AND (C)").unwrap();
        assert_eq!(e, parse("A AND B AND C").unwrap());
        let e = parse("NOT (A OR B) AND C").unwrap();
        assert_eq!(e.to_string(), "NOT (A OR B) AND C");
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn errors() {
        assert!(parse("")
            .unwrap_err()
            .message
            .contains("expected expression"));
        assert!(parse("A AND").is_err());
        assert!(parse("(A").unwrap_err().message.contains("')'"));
        assert!(parse("A B").is_err());
        assert!(parse("a").is_err());
    }

    #[test]
    fn eval_truth() {
        let e = parse("A AND NOT B OR C").unwrap();
        let mut v = |n: &PointName| n.as_str() == "A";
        assert!(e.eval(&mut v));
        let mut v = |n: &PointName| n.as_str() == "B";
        assert!(!e.eval(&mut v));
    }
}
