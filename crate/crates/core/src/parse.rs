//! Recursive-descent parser for function and algebra expressions.
//!
//! Function syntax: `x^2 + 2*exp(0.5) - 3i*x*exp(-1)`, where `exp(t)` is the
//! character `e^{itx}` and `t` must be a real constant expression.
//!
//! Algebra syntax: `X^2 Y N[x^2 + exp(1.5)] - 2i (X Y)^2`. `H` abbreviates
//! `N[x]`; juxtaposition and `*` both multiply. `pi` is accepted wherever a
//! number is.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::AlgebraElement;
use crate::funcspace::FunctionExpr;

/// A parse failure with a 1-based column into the source string.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at column {column}")]
pub struct ParseError {
    pub message: String,
    pub column: usize,
}

impl ParseError {
    /// Source line followed by a caret under the failing column.
    pub fn diagnostic(&self, source: &str) -> String {
        format!(
            "{source}\n{}^\n{self}",
            " ".repeat(self.column.saturating_sub(1))
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Letter(char),
    Exp,
    Pi,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Imag(v) => write!(f, "{v}i"),
            Tok::Letter(c) => write!(f, "{c}"),
            Tok::Exp => write!(f, "exp"),
            Tok::Pi => write!(f, "pi"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    column: usize,
    text: String,
}

fn lex(src: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Lexed { tok, column, text: c.to_string() });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // scientific exponent, only when followed by a digit or sign+digit
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| ParseError {
                message: format!("invalid number '{text}'"),
                column,
            })?;
            let imaginary = i < chars.len()
                && chars[i] == 'i'
                && !chars.get(i + 1).is_some_and(|c| c.is_alphanumeric());
            if imaginary {
                i += 1;
                out.push(Lexed { tok: Tok::Imag(value), column, text: format!("{text}i") });
            } else {
                out.push(Lexed { tok: Tok::Num(value), column, text });
            }
            continue;
        }
        if c.is_alphabetic() {
            let rest: String = chars[i..].iter().take(3).collect();
            if rest == "exp" {
                out.push(Lexed { tok: Tok::Exp, column, text: "exp".into() });
                i += 3;
            } else if rest.starts_with("pi") {
                out.push(Lexed { tok: Tok::Pi, column, text: "pi".into() });
                i += 2;
            } else if c == 'i' {
                out.push(Lexed { tok: Tok::Imag(1.0), column, text: "i".into() });
                i += 1;
            } else {
                out.push(Lexed { tok: Tok::Letter(c), column, text: c.to_string() });
                i += 1;
            }
            continue;
        }
        return Err(ParseError { message: format!("unexpected character '{c}'"), column });
    }
    out.push(Lexed { tok: Tok::End, column: chars.len() + 1, text: String::new() });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn advance(&mut self) -> &Lexed {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        let t = &self.toks[self.pos];
        let message = if t.tok == Tok::End {
            "unexpected end of input".to_string()
        } else {
            format!("unexpected token '{}'", t.text)
        };
        ParseError { message, column: t.column }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn exponent(&mut self) -> Result<Option<u32>, ParseError> {
        if *self.peek() != Tok::Caret {
            return Ok(None);
        }
        self.advance();
        let column = self.toks[self.pos].column;
        match *self.peek() {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => {
                self.advance();
                Ok(Some(v as u32))
            }
            Tok::End => Err(self.unexpected()),
            _ => Err(ParseError {
                message: "exponent must be a non-negative integer".into(),
                column,
            }),
        }
    }

    // ---- function grammar ----

    fn fsum(&mut self) -> Result<FunctionExpr, ParseError> {
        let mut acc = self.fterm()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.advance();
                    acc = &acc + &self.fterm()?;
                }
                Tok::Minus => {
                    self.advance();
                    acc = &acc - &self.fterm()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn fterm(&mut self) -> Result<FunctionExpr, ParseError> {
        let mut acc = self.funary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.advance();
                    acc = &acc * &self.funary()?;
                }
                Tok::Num(_) | Tok::Imag(_) | Tok::Pi | Tok::Exp | Tok::LParen | Tok::Letter('x') => {
                    acc = &acc * &self.funary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn funary(&mut self) -> Result<FunctionExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.advance();
            return Ok(-self.funary()?);
        }
        let base = self.fatom()?;
        Ok(match self.exponent()? {
            Some(k) => (0..k).fold(FunctionExpr::one(), |acc, _| &acc * &base),
            None => base,
        })
    }

    fn fatom(&mut self) -> Result<FunctionExpr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(FunctionExpr::from(v))
            }
            Tok::Imag(v) => {
                self.advance();
                Ok(FunctionExpr::from(Complex64::new(0.0, v)))
            }
            Tok::Pi => {
                self.advance();
                Ok(FunctionExpr::from(std::f64::consts::PI))
            }
            Tok::Letter('x') => {
                self.advance();
                Ok(FunctionExpr::x())
            }
            Tok::Exp => {
                self.advance();
                self.expect(Tok::LParen)?;
                let column = self.toks[self.pos].column;
                let arg = self.fsum()?;
                self.expect(Tok::RParen)?;
                match arg.as_constant() {
                    Some(c) if c.im == 0.0 => Ok(FunctionExpr::exp_i(c.re)),
                    _ => Err(ParseError {
                        message: "exp() takes a real constant frequency".into(),
                        column,
                    }),
                }
            }
            Tok::LParen => {
                self.advance();
                let inner = self.fsum()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }

    // ---- algebra grammar ----

    fn sum(&mut self) -> Result<AlgebraElement, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.advance();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.advance();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<AlgebraElement, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.advance();
                    acc = &acc * &self.unary()?;
                }
                Tok::Num(_) | Tok::Imag(_) | Tok::Pi | Tok::LParen | Tok::Letter(_) => {
                    acc = &acc * &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<AlgebraElement, ParseError> {
        if *self.peek() == Tok::Minus {
            self.advance();
            return Ok(-self.unary()?);
        }
        let base = self.atom()?;
        Ok(match self.exponent()? {
            Some(k) => base.pow(k),
            None => base,
        })
    }

    fn atom(&mut self) -> Result<AlgebraElement, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.advance();
                Ok(AlgebraElement::scalar(Complex64::new(v, 0.0)))
            }
            Tok::Imag(v) => {
                self.advance();
                Ok(AlgebraElement::scalar(Complex64::new(0.0, v)))
            }
            Tok::Pi => {
                self.advance();
                Ok(AlgebraElement::scalar(Complex64::new(std::f64::consts::PI, 0.0)))
            }
            Tok::Letter('X') => {
                self.advance();
                Ok(AlgebraElement::x())
            }
            Tok::Letter('Y') => {
                self.advance();
                Ok(AlgebraElement::y())
            }
            Tok::Letter('H') => {
                self.advance();
                Ok(AlgebraElement::h())
            }
            Tok::Letter('N') => {
                self.advance();
                self.expect(Tok::LBracket)?;
                let f = self.fsum()?;
                self.expect(Tok::RBracket)?;
                Ok(AlgebraElement::cartan(f))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.sum()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses the function syntax.
pub fn parse_function(src: &str) -> Result<FunctionExpr, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.fsum()?;
    p.finish()?;
    Ok(f)
}

/// Parses the algebra syntax into canonical (normal-ordered) form.
pub fn parse_element(src: &str) -> Result<AlgebraElement, ParseError> {
    let mut p = Parser::new(src)?;
    let a = p.sum()?;
    p.finish()?;
    Ok(a)
}

impl FromStr for FunctionExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_function(s)
    }
}

impl FromStr for AlgebraElement {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_element(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn function_example() {
        let f = parse_function("x^2 + 2*exp(0.5) - 3i*x*exp(-1)").unwrap();
        let expected = &(&FunctionExpr::power(2) + &FunctionExpr::exp_i(0.5).scale(c(2.0, 0.0)))
            - &FunctionExpr::monomial(c(0.0, 3.0), 1, -1.0);
        assert_eq!(f, expected);
    }

    #[test]
    fn function_implicit_products_and_pi() {
        let f = parse_function("2x exp(pi)").unwrap();
        assert_eq!(f, FunctionExpr::monomial(c(2.0, 0.0), 1, std::f64::consts::PI));
        let g = parse_function("(x+1)^2").unwrap();
        assert_eq!(g.evaluate(2.0), c(9.0, 0.0));
    }

    #[test]
    fn complex_literals() {
        let f = parse_function("1.5+2i").unwrap();
        assert_eq!(f.as_constant(), Some(c(1.5, 2.0)));
        let g = parse_function("i").unwrap();
        assert_eq!(g.as_constant(), Some(c(0.0, 1.0)));
        let h = parse_function("1e-3").unwrap();
        assert_eq!(h.as_constant(), Some(c(1e-3, 0.0)));
    }

    #[test]
    fn exp_requires_real_constant() {
        let err = parse_function("exp(x)").unwrap_err();
        assert_eq!(err.column, 5);
    }

    #[test]
    fn algebra_example_parses() {
        let a = parse_element("X^2 Y N[x^2 + exp(1.5)] - 2i (X Y)^2").unwrap();
        assert!(a.get(2, 1).is_some());
        assert!(a.get(2, 2).is_some());
    }

    #[test]
    fn unexpected_token_reports_column() {
        let err = parse_element("X Q").unwrap_err();
        assert_eq!(err.to_string(), "unexpected token 'Q' at column 3");
        let diag = err.diagnostic("X Q");
        assert!(diag.contains("\n  ^\n"));
    }

    #[test]
    fn truncated_input() {
        let err = parse_element("X + ").unwrap_err();
        assert_eq!(err.message, "unexpected end of input");
        let err = parse_element("N[x").unwrap_err();
        assert_eq!(err.column, 4);
        let err = parse_element("X^-1").unwrap_err();
        assert_eq!(err.column, 3);
    }
}
