//! Canonical text form of formulae.
//!
//! ```text
//! formula := "TRUE" | pred | "!" formula
//!          | "(" formula "&" formula ")" | "(" formula "|" formula ")"
//!          | ("F" | "G") "[" int "," int "]" formula
//! pred    := "(" "x" int (">=" | "<") float ")"
//! ```
//!
//! Formulae are printed in negation normal form, so `!` only survives in
//! front of `TRUE`.

use super::{Interval, StlFormula};
use crate::error::{Error, Result};

/// Prints a threshold with at most six decimals and no trailing zeros.
pub fn format_threshold(value: f64) -> String {
    let mut text = format!("{value:.6}");
    if text.contains('.') {
        let trimmed = text.trim_end_matches('0').trim_end_matches('.').len();
        text.truncate(trimmed);
    }
    if text == "-0" {
        text = "0".into();
    }
    text
}

pub fn format_formula(formula: &StlFormula) -> String {
    let mut out = String::new();
    write_nnf(&formula.nnf(), &mut out);
    out
}

fn write_nnf(formula: &StlFormula, out: &mut String) {
    match formula {
        StlFormula::True => out.push_str("TRUE"),
        StlFormula::Predicate { var, threshold } => {
            out.push_str(&format!("(x{} >= {})", var + 1, format_threshold(*threshold)));
        }
        StlFormula::Not(inner) => match inner.as_ref() {
            StlFormula::Predicate { var, threshold } => {
                out.push_str(&format!("(x{} < {})", var + 1, format_threshold(*threshold)));
            }
            other => {
                out.push('!');
                write_nnf(other, out);
            }
        },
        StlFormula::And(a, b) => write_binary(a, "&", b, out),
        StlFormula::Or(a, b) => write_binary(a, "|", b, out),
        StlFormula::Eventually(i, f) => {
            out.push_str(&format!("F{i}"));
            write_nnf(f, out);
        }
        StlFormula::Always(i, f) => {
            out.push_str(&format!("G{i}"));
            write_nnf(f, out);
        }
    }
}

fn write_binary(a: &StlFormula, op: &str, b: &StlFormula, out: &mut String) {
    out.push('(');
    write_nnf(a, out);
    out.push(' ');
    out.push_str(op);
    out.push(' ');
    write_nnf(b, out);
    out.push(')');
}

pub fn parse_formula(text: &str) -> Result<StlFormula> {
    let mut parser = Parser { text, pos: 0 };
    let formula = parser.formula()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(formula)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn formula(&mut self) -> Result<StlFormula> {
        match self.peek() {
            Some('T') => {
                self.expect("TRUE")?;
                Ok(StlFormula::True)
            }
            Some('!') => {
                self.pos += 1;
                Ok(self.formula()?.negate())
            }
            Some('F') | Some('G') => {
                let always = self.rest().starts_with('G');
                self.pos += 1;
                let interval = self.interval()?;
                let body = self.formula()?;
                Ok(if always {
                    StlFormula::always(interval, body)
                } else {
                    StlFormula::eventually(interval, body)
                })
            }
            Some('(') => {
                self.pos += 1;
                if self.peek() == Some('x') {
                    self.predicate()
                } else {
                    let lhs = self.formula()?;
                    let formula = if self.eat("&") {
                        lhs.and(self.formula()?)
                    } else if self.eat("|") {
                        lhs.or(self.formula()?)
                    } else {
                        return Err(self.error("expected `&` or `|`"));
                    };
                    self.expect(")")?;
                    Ok(formula)
                }
            }
            Some(_) => Err(self.error("expected a formula")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    /// Parses the remainder of a predicate; the opening parenthesis is consumed.
    fn predicate(&mut self) -> Result<StlFormula> {
        self.expect("x")?;
        let index = self.integer()?;
        if index == 0 {
            return Err(self.error("predicate indices start at x1"));
        }
        let strict = if self.eat(">=") {
            false
        } else if self.eat("<") {
            true
        } else {
            return Err(self.error("expected `>=` or `<`"));
        };
        let threshold = self.float()?;
        self.expect(")")?;
        Ok(if strict {
            StlFormula::lt(index - 1, threshold)
        } else {
            StlFormula::ge(index - 1, threshold)
        })
    }

    fn interval(&mut self) -> Result<Interval> {
        self.expect("[")?;
        let start = self.pos;
        let lo = self.integer()?;
        self.expect(",")?;
        let hi = self.integer()?;
        self.expect("]")?;
        Interval::new(lo, hi).map_err(|e| Error::Parse {
            position: start,
            message: e.to_string(),
        })
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected an integer"));
        }
        let value = self.rest()[..len]
            .parse()
            .map_err(|_| self.error("integer out of range"))?;
        self.pos += len;
        Ok(value)
    }

    fn float(&mut self) -> Result<f64> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
            .unwrap_or(self.rest().len());
        let value: f64 = self.rest()[..len]
            .parse()
            .map_err(|_| self.error("expected a number"))?;
        if !value.is_finite() {
            return Err(self.error("threshold must be finite"));
        }
        self.pos += len;
        Ok(value)
    }
}
