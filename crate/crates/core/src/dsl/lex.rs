//! Per-line tokenizer shared by both chain languages.

use super::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok<'a> {
    /// Maximal run of `[A-Za-z0-9_]` that is not a plain number or duration.
    Word(&'a str),
    /// Unsigned or negative integer literal (sign kept so that presets like
    /// `-5ms` can be rejected with a useful message).
    Int(i64),
    /// Integer followed directly by `ms`.
    Millis(i64),
    Assign,
    LParen,
    RParen,
}

impl Tok<'_> {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Int(n) => format!("'{n}'"),
            Tok::Millis(n) => format!("'{n}ms'"),
            Tok::Assign => "':='".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
        }
    }
}

pub(crate) fn tokenize(line_no: usize, line: &str) -> Result<Vec<Tok<'_>>, Diagnostic> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' => i += 1,
            b'(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            b')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            b':' if bytes.get(i + 1) == Some(&b'=') => {
                out.push(Tok::Assign);
                i += 2;
            }
            b'-' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let (tok, next) = number(line_no, line, i + 1, true)?;
                out.push(tok);
                i = next;
            }
            _ if is_word_byte(c) => {
                let start = i;
                while i < bytes.len() && is_word_byte(bytes[i]) {
                    i += 1;
                }
                let word = &line[start..i];
                if word.bytes().all(|b| b.is_ascii_digit()) {
                    let (tok, next) = number(line_no, line, start, false)?;
                    out.push(tok);
                    i = next;
                } else if let Some(digits) = word
                    .strip_suffix("ms")
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                {
                    let n = parse_int(line_no, digits)?;
                    out.push(Tok::Millis(n));
                } else {
                    out.push(Tok::Word(word));
                }
            }
            _ => {
                let ch = line[i..].chars().next().unwrap_or('?');
                return Err(Diagnostic::error(
                    line_no,
                    format!("unexpected character {ch:?}"),
                ));
            }
        }
    }
    Ok(out)
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn number<'a>(
    line_no: usize,
    line: &'a str,
    start: usize,
    negative: bool,
) -> Result<(Tok<'a>, usize), Diagnostic> {
    let bytes = line.as_bytes();
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    let mut n = parse_int(line_no, &line[start..end])?;
    if negative {
        n = -n;
    }
    if line[end..].starts_with("ms") && !bytes.get(end + 2).copied().is_some_and(is_word_byte) {
        Ok((Tok::Millis(n), end + 2))
    } else if bytes.get(end).copied().is_some_and(is_word_byte) {
        Err(Diagnostic::error(
            line_no,
            format!("malformed number '{}'", &line[start..]),
        ))
    } else {
        Ok((Tok::Int(n), end))
    }
}

fn parse_int(line_no: usize, digits: &str) -> Result<i64, Diagnostic> {
    digits
        .parse::<i64>()
        .map_err(|_| Diagnostic::error(line_no, format!("number '{digits}' is out of range")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        let toks = tokenize(1, "timer T 30000ms := (A AND NOT B)").unwrap();
        assert_eq!(
            toks,
            vec![
                Tok::Word("timer"),
                Tok::Word("T"),
                Tok::Millis(30000),
                Tok::Assign,
                Tok::LParen,
                Tok::Word("A"),
                Tok::Word("AND"),
                Tok::Word("NOT"),
                Tok::Word("B"),
                Tok::RParen,
            ]
        );
        assert_eq!(tokenize(1, "-5ms").unwrap(), vec![Tok::Millis(-5)]);
        assert_eq!(tokenize(1, "emit X 1").unwrap()[2], Tok::Int(1));
        assert!(tokenize(3, "A & B").is_err());
    }
}
