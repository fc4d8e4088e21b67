//! Recursive-descent parser for the expression grammar.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := atom ("^" exponent)?
//! exponent := ["-"] integer | "(" ["-"] integer ["/" integer] ")"
//! atom     := number | "(" expr ")" | fn "(" expr ")" | external | symbol
//! fn       := "sin" | "cos" | "exp" | "log"
//! external := ident "'"* "(" time ")"
//! symbol   := ident
//! ident    := [a-zA-Z_][a-zA-Z0-9_]*
//! number   := decimal or scientific literal
//! ```
//!
//! `pi` is a reserved constant. Every other identifier must be a chart
//! coordinate, a declared parameter, or (in call position) a declared
//! external function applied to the time coordinate; primes select the
//! derivative order, as in `ell''(t)`.

use std::collections::BTreeSet;

use super::{Expr, Rational};
use crate::chart::Chart;
use crate::error::{Error, Result};

/// Parse `text` against a chart, a parameter list, and an external-function
/// list. Free symbols outside those sets are rejected by name.
pub fn parse(text: &str, chart: &Chart, params: &[&str], externals: &[&str]) -> Result<Expr> {
    let mut parser = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        coords: chart.names().into_iter().collect(),
        time: chart.time_name().to_string(),
        params: params.iter().copied().collect(),
        externals: externals.iter().copied().collect(),
    };
    let e = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    coords: BTreeSet<String>,
    time: String,
    params: BTreeSet<&'a str>,
    externals: BTreeSet<&'a str>,
}

const FUNCTIONS: [&str; 4] = ["sin", "cos", "exp", "log"];

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    terms.push(-t);
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    factors.push(self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let f = self.unary()?;
                    factors.push(Expr::powi(f, -1));
                }
                _ => break,
            }
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            let e = self.exponent()?;
            Ok(Expr::pow(base, e))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<Rational> {
        self.skip_ws();
        if self.eat(b'(') {
            self.skip_ws();
            let neg = self.eat(b'-');
            let num = self.integer()?;
            self.skip_ws();
            let den = if self.eat(b'/') {
                self.skip_ws();
                self.integer()?
            } else {
                1
            };
            self.skip_ws();
            self.expect(b')')?;
            if den == 0 {
                return Err(self.syntax("zero denominator in exponent"));
            }
            Ok(Rational::new(if neg { -num } else { num }, den))
        } else {
            let neg = self.eat(b'-');
            let num = self.integer()?;
            if self.peek() == Some(b'.') {
                return Err(self.syntax("exponent must be a rational literal like 2 or (1/2)"));
            }
            Ok(Rational::int(if neg { -num } else { num }))
        }
    }

    fn integer(&mut self) -> Result<i64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax("expected an integer"));
        }
        self.src[start..self.pos]
            .parse::<i64>()
            .map_err(|_| self.syntax("integer literal out of range"))
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent suffix after all (e.g. `2*exp(x)` split oddly).
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Expr::num)
            .ok_or_else(|| Error::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];

        if FUNCTIONS.contains(&name) {
            self.skip_ws();
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.skip_ws();
            self.expect(b')')?;
            return Ok(match name {
                "sin" => Expr::sin(arg),
                "cos" => Expr::cos(arg),
                "exp" => Expr::exp(arg),
                "log" => Expr::log(arg),
                _ => unreachable!(),
            });
        }

        // Count derivative primes; only meaningful for external calls.
        let mut order = 0u32;
        while self.peek() == Some(b'\'') {
            self.pos += 1;
            order += 1;
        }

        let mut probe = self.pos;
        while probe < self.bytes.len() && self.bytes[probe].is_ascii_whitespace() {
            probe += 1;
        }
        let is_call = self.bytes.get(probe) == Some(&b'(');

        if is_call {
            if !self.externals.contains(name) {
                return Err(Error::UnknownSymbol {
                    name: name.to_string(),
                });
            }
            self.skip_ws();
            self.expect(b'(')?;
            self.skip_ws();
            let arg_start = self.pos;
            while self
                .peek()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
            {
                self.pos += 1;
            }
            let arg = &self.src[arg_start..self.pos];
            if arg != self.time {
                return Err(Error::Syntax {
                    offset: arg_start,
                    message: format!(
                        "external function `{name}` must be applied to the time coordinate `{}`",
                        self.time
                    ),
                });
            }
            self.skip_ws();
            self.expect(b')')?;
            return Ok(Expr::ext(name, arg, order));
        }

        if order > 0 {
            return Err(self.syntax("derivative primes are only valid on external function calls"));
        }
        if name == "pi" {
            return Ok(Expr::pi());
        }
        if self.coords.contains(name) || self.params.contains(name) {
            return Ok(Expr::sym(name));
        }
        Err(Error::UnknownSymbol {
            name: name.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;

    fn chart() -> Chart {
        Chart::lagrangian(&["q"], &["v"]).unwrap()
    }

    #[test]
    fn parses_time_symbol() {
        let e = parse("t", &chart(), &[], &[]).unwrap();
        assert_eq!(e, Expr::sym("t"));
    }

    #[test]
    fn parses_oscillator_lagrangian() {
        let e = parse(
            "(1/2)*m*v^2 - (k/2)*q^2 + q*f(t) - (gamma/m)*s",
            &chart(),
            &["m", "k", "gamma"],
            &["f"],
        )
        .unwrap();
        let m = Expr::sym("m");
        let k = Expr::sym("k");
        let gam = Expr::sym("gamma");
        let q = Expr::sym("q");
        let v = Expr::sym("v");
        let s = Expr::sym("s");
        let expected = Expr::num(0.5) * &m * &v * &v - Expr::num(0.5) * &k * &q * &q
            + &q * Expr::ext("f", "t", 0)
            - gam / m * s;
        assert_eq!(e, expected);
        assert_eq!(e.differentiate("s"), -(Expr::sym("gamma") / Expr::sym("m")));
    }

    #[test]
    fn reports_syntax_error_offset() {
        let err = parse("q*(", &chart(), &[], &[]).unwrap_err();
        match err {
            Error::Syntax { offset, .. } => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn rejects_unknown_symbols_by_name() {
        let err = parse("q + bogus", &chart(), &[], &[]).unwrap_err();
        match err {
            Error::UnknownSymbol { name } => assert_eq!(name, "bogus"),
            other => panic!("expected unknown symbol, got {other}"),
        }
    }

    #[test]
    fn parses_primed_externals() {
        let e = parse("v - ell'(t)", &chart(), &[], &["ell"]).unwrap();
        assert_eq!(e, Expr::sym("v") - Expr::ext("ell", "t", 1));
    }

    #[test]
    fn rejects_external_applied_to_non_time() {
        let err = parse("ell(q)", &chart(), &[], &["ell"]).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn parses_rational_exponents() {
        let e = parse("q^(3/2)", &chart(), &[], &[]).unwrap();
        assert_eq!(e, Expr::pow(Expr::sym("q"), Rational::new(3, 2)));
        let e = parse("q^-1", &chart(), &[], &[]).unwrap();
        assert_eq!(e, Expr::powi(Expr::sym("q"), -1));
    }

    #[test]
    fn scientific_notation_and_pi() {
        let e = parse("1.5e-3 * pi * t", &chart(), &[], &[]).unwrap();
        assert_eq!(e, Expr::num(1.5e-3) * Expr::pi() * Expr::sym("t"));
    }

    #[test]
    fn function_names_require_calls() {
        let err = parse("sin + 1", &chart(), &[], &[]).unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }
}
