//! Recursive-descent parser for operator expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := ('+' | '-')? factor ('*' factor)*
//! factor := literal | op | '(' expr ')'
//! op     := 'a' INT | 'A' INT          // annihilation / creation, INT >= 1
//! literal:= FLOAT | FLOAT 'i'
//! ```
//!
//! A complex literal `(re ± im i)` is the parenthesised sum of a real and an
//! imaginary literal. Whitespace between tokens is ignored.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use super::{Factor, OperatorPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    ZeroMode,
    MalformedNumber,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::ZeroMode => "mode index must be at least 1",
            ParseErrorKind::MalformedNumber => "malformed numeric literal",
        })
    }
}

/// Parse failure at a byte offset of the input.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{kind} at position {position}: expected {expected}, found {found}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
    pub expected: String,
    pub found: String,
}

/// Parses an expression into its normal-ordered polynomial.
pub fn parse(text: &str) -> Result<OperatorPoly, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let poly = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(ParseErrorKind::Syntax, "'+', '-', '*' or end of input"));
    }
    Ok(poly)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn found(&self) -> String {
        match self.src.get(self.pos) {
            Some(&b) => format!("{:?}", b as char),
            None => "end of input".into(),
        }
    }

    fn error(&self, kind: ParseErrorKind, expected: &str) -> ParseError {
        ParseError {
            kind,
            position: self.pos,
            expected: expected.into(),
            found: self.found(),
        }
    }

    fn expr(&mut self) -> Result<OperatorPoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<OperatorPoly, ParseError> {
        let negate = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.factor()?;
        }
        Ok(if negate { -acc } else { acc })
    }

    fn factor(&mut self) -> Result<OperatorPoly, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error(ParseErrorKind::Syntax, "')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b @ (b'a' | b'A')) => {
                self.pos += 1;
                let mode = self.mode_index()?;
                let f = if b == b'A' {
                    Factor::create(mode)
                } else {
                    Factor::annihilate(mode)
                };
                Ok(OperatorPoly::word(Complex64::new(1.0, 0.0), &[f]))
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => self.literal(),
            _ => Err(self.error(
                ParseErrorKind::Syntax,
                "a number, an operator 'a<k>'/'A<k>' or '('",
            )),
        }
    }

    fn mode_index(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error(ParseErrorKind::Syntax, "a mode index after 'a'/'A'"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match digits.parse::<usize>() {
            Ok(0) => Err(ParseError {
                kind: ParseErrorKind::ZeroMode,
                position: start,
                expected: "a mode index >= 1".into(),
                found: "0".into(),
            }),
            Ok(m) => Ok(m),
            Err(_) => Err(ParseError {
                kind: ParseErrorKind::MalformedNumber,
                position: start,
                expected: "a mode index that fits in usize".into(),
                found: digits.into(),
            }),
        }
    }

    fn literal(&mut self) -> Result<OperatorPoly, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            return Err(self.malformed(start, "digits in a numeric literal"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(self.malformed(start, "exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii literal");
        let value: f64 = text
            .parse()
            .map_err(|_| self.malformed(start, "a floating-point literal"))?;
        if self.src.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            return Ok(OperatorPoly::scalar(Complex64::new(0.0, value)));
        }
        if matches!(
            self.src.get(self.pos),
            Some(b'.') | Some(b'a'..=b'z') | Some(b'A'..=b'Z')
        ) {
            return Err(self.malformed(start, "a complete numeric literal"));
        }
        Ok(OperatorPoly::scalar(Complex64::new(value, 0.0)))
    }

    fn malformed(&self, start: usize, expected: &str) -> ParseError {
        ParseError {
            kind: ParseErrorKind::MalformedNumber,
            position: start,
            expected: expected.into(),
            found: String::from_utf8_lossy(
                &self.src[start..self.pos.max(start + 1).min(self.src.len())],
            )
            .into_owned(),
        }
    }
}
