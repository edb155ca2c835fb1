//! Text format for polynomial phases.
//!
//! Grammar (no implicit multiplication):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' unary)?
//! primary := INTEGER | 'x' | 'y' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative. Division and
//! exponentiation are only accepted when they keep the result a polynomial:
//! the divisor must be a nonzero constant and the exponent a nonnegative
//! integer constant.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::Monomial;
use crate::{Polynomial, Rational};

const MAX_EXPONENT: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhaseError {
    #[error("syntax error at byte {position}: expected one of {}", expected.join(", "))]
    SyntaxError {
        position: usize,
        expected: Vec<String>,
    },
    #[error("not a polynomial at byte {position}: {reason}")]
    NonPolynomial { position: usize, reason: String },
    #[error("unknown symbol `{symbol}` at byte {position}")]
    UnknownSymbol { position: usize, symbol: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> &'static str {
        match self {
            Tok::Int(_) => "integer",
            Tok::Ident(_) => "identifier",
            Tok::Plus => "'+'",
            Tok::Minus => "'-'",
            Tok::Star => "'*'",
            Tok::Slash => "'/'",
            Tok::Caret => "'^'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::Eof => "end of input",
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, PhaseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let digits = &text[start..i];
                out.push((start, Tok::Int(digits.parse().expect("ascii digits"))));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap();
                let mut expected = expected(&["integer", "'x'", "'y'", "'('", "operator"]);
                expected.push(format!("(found {ch:?})"));
                return Err(PhaseError::SyntaxError {
                    position: start,
                    expected,
                });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

fn expected(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Polynomial, PhaseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PhaseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Tok::Slash => {
                    let at = self.offset();
                    self.bump();
                    let divisor = self.unary()?;
                    let c = constant_value(&divisor).ok_or_else(|| PhaseError::NonPolynomial {
                        position: at,
                        reason: "division by a non-constant expression".into(),
                    })?;
                    if c.is_zero() {
                        return Err(PhaseError::NonPolynomial {
                            position: at,
                            reason: "division by zero".into(),
                        });
                    }
                    acc = acc.scale(&c.recip());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, PhaseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(-&self.unary()?)
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, PhaseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let at = self.offset();
        self.bump();
        let exponent = self.unary()?;
        let e = constant_value(&exponent).ok_or_else(|| PhaseError::NonPolynomial {
            position: at,
            reason: "exponent must be a constant".into(),
        })?;
        if e.is_negative() {
            return Err(PhaseError::NonPolynomial {
                position: at,
                reason: format!("negative exponent {e}"),
            });
        }
        if !e.is_integer() {
            return Err(PhaseError::NonPolynomial {
                position: at,
                reason: format!("fractional exponent {e}"),
            });
        }
        let e = e
            .to_integer()
            .to_u32()
            .filter(|&e| e <= MAX_EXPONENT)
            .ok_or_else(|| PhaseError::NonPolynomial {
                position: at,
                reason: format!("exponent exceeds {MAX_EXPONENT}"),
            })?;
        Ok(base.pow(e))
    }

    fn primary(&mut self) -> Result<Polynomial, PhaseError> {
        let (at, tok) = self.bump();
        match tok {
            Tok::Int(n) => Ok(Polynomial::constant(Rational::from_integer(n))),
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Polynomial::x()),
                "y" => Ok(Polynomial::y()),
                _ => Err(PhaseError::UnknownSymbol {
                    position: at,
                    symbol: name,
                }),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                match self.bump() {
                    (_, Tok::RParen) => Ok(inner),
                    (pos, _) => Err(PhaseError::SyntaxError {
                        position: pos,
                        expected: expected(&["')'", "operator"]),
                    }),
                }
            }
            _ => Err(PhaseError::SyntaxError {
                position: at,
                expected: expected(&["integer", "'x'", "'y'", "'('", "'-'"]),
            }),
        }
    }
}

fn constant_value(p: &Polynomial) -> Option<Rational> {
    match p.len() {
        0 => Some(Rational::zero()),
        1 => p.coefficient(Monomial::ONE).cloned(),
        _ => None,
    }
}

/// Parses a phase expression into an exact polynomial with merged like terms.
pub fn parse_phase(text: &str) -> Result<Polynomial, PhaseError> {
    let toks = lex(text)?;
    // unknown identifiers are reported before syntax problems further along
    if let Some((position, Tok::Ident(symbol))) = toks
        .iter()
        .find(|(_, t)| matches!(t, Tok::Ident(s) if s != "x" && s != "y"))
    {
        return Err(PhaseError::UnknownSymbol {
            position: *position,
            symbol: symbol.clone(),
        });
    }
    let mut parser = Parser { toks, pos: 0 };
    if *parser.peek() == Tok::Eof {
        return Err(PhaseError::SyntaxError {
            position: 0,
            expected: expected(&["integer", "'x'", "'y'", "'('", "'-'"]),
        });
    }
    let poly = parser.expr()?;
    match parser.peek() {
        Tok::Eof => Ok(poly),
        other => {
            let found = other.describe();
            Err(PhaseError::SyntaxError {
                position: parser.offset(),
                expected: vec![
                    "'+'".into(),
                    "'-'".into(),
                    "'*'".into(),
                    "'/'".into(),
                    "'^'".into(),
                    "end of input".into(),
                    format!("(found {found})"),
                ],
            })
        }
    }
}

/// Canonical text: graded order, `p/q*x^a*y^b` terms, `"0"` for the zero polynomial.
pub fn format_phase(p: &Polynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().enumerate() {
        let negative = c.is_negative();
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let mag = c.abs();
        let mono = format_monomial(m);
        if mono.is_empty() {
            out.push_str(&mag.to_string());
        } else {
            if !mag.is_one() {
                out.push_str(&mag.to_string());
                out.push('*');
            }
            out.push_str(&mono);
        }
    }
    out
}

fn format_monomial(m: &Monomial) -> String {
    let factor = |v: &str, e: u32| match e {
        0 => None,
        1 => Some(v.to_string()),
        _ => Some(format!("{v}^{e}")),
    };
    [factor("x", m.dx), factor("y", m.dy)]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("*")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn poly(terms: &[((u32, u32), Rational)]) -> Polynomial {
        Polynomial::from_terms(terms.iter().cloned())
    }

    #[test]
    fn parses_examples() {
        assert_eq!(parse_phase("x*y").unwrap(), poly(&[((1, 1), rat(1, 1))]));
        assert_eq!(
            parse_phase("x^3*y + x*y^3").unwrap(),
            poly(&[((3, 1), rat(1, 1)), ((1, 3), rat(1, 1))])
        );
        assert_eq!(
            parse_phase("(x - y)^2 - x^5").unwrap(),
            poly(&[
                ((2, 0), rat(1, 1)),
                ((1, 1), rat(-2, 1)),
                ((0, 2), rat(1, 1)),
                ((5, 0), rat(-1, 1))
            ])
        );
    }

    #[test]
    fn formats_examples() {
        assert_eq!(format_phase(&Polynomial::zero()), "0");
        assert_eq!(format_phase(&poly(&[((1, 1), rat(1, 1))])), "x*y");
        assert_eq!(format_phase(&poly(&[((2, 1), rat(-3, 2))])), "-3/2*x^2*y");
        assert_eq!(
            format_phase(&parse_phase("(x - y)^2 - x^5").unwrap()),
            "x^2 - 2*x*y + y^2 - x^5"
        );
        assert_eq!(format_phase(&parse_phase("-1 + x - y").unwrap()), "-1 + x - y");
    }

    #[test]
    fn precedence() {
        // ^ over unary minus, right-associative ^
        assert_eq!(parse_phase("-x^2").unwrap(), poly(&[((2, 0), rat(-1, 1))]));
        assert_eq!(parse_phase("-2^2").unwrap(), poly(&[((0, 0), rat(-4, 1))]));
        assert_eq!(parse_phase("x^2^3").unwrap(), poly(&[((8, 0), rat(1, 1))]));
        assert_eq!(parse_phase("2*x - 3*y*x + 1").unwrap().len(), 3);
        assert_eq!(parse_phase("x - y - x").unwrap(), poly(&[((0, 1), rat(-1, 1))]));
        assert_eq!(parse_phase("x*y - x*y").unwrap(), Polynomial::zero());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_phase("x*z"), Err(PhaseError::UnknownSymbol { position: 2, .. })));
        assert!(matches!(parse_phase("xy"), Err(PhaseError::UnknownSymbol { .. })));
        assert!(matches!(parse_phase("2x"), Err(PhaseError::SyntaxError { position: 1, .. })));
        assert!(matches!(parse_phase("x^-1"), Err(PhaseError::NonPolynomial { .. })));
        assert!(matches!(parse_phase("x^(1/2)"), Err(PhaseError::NonPolynomial { .. })));
        assert!(matches!(parse_phase("x/y"), Err(PhaseError::NonPolynomial { .. })));
        assert!(matches!(parse_phase("x/(1-1)"), Err(PhaseError::NonPolynomial { .. })));
        assert!(matches!(parse_phase("x^y"), Err(PhaseError::NonPolynomial { .. })));
        assert!(matches!(parse_phase(""), Err(PhaseError::SyntaxError { .. })));
        assert!(matches!(parse_phase("(x+y"), Err(PhaseError::SyntaxError { .. })));
        assert!(matches!(parse_phase("x +"), Err(PhaseError::SyntaxError { .. })));
        assert!(matches!(parse_phase("x $ y"), Err(PhaseError::SyntaxError { position: 2, .. })));
    }

    #[test]
    fn rational_literals_round_trip() {
        let p = parse_phase("-3/2*x^2*y + 7/5*y^4 - 1/3").unwrap();
        assert_eq!(p.coefficient((2, 1)), Some(&rat(-3, 2)));
        assert_eq!(parse_phase(&format_phase(&p)).unwrap(), p);
    }
}
