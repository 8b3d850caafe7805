//! Recursive-descent parser for the formula text syntax.
//!
//! ```text
//! formula := and ('|' and)*
//! and     := until ('&' until)*
//! until   := unary ('U' '[' int ',' int ']' unary)?
//! unary   := '!' unary | ('G' | 'F') '[' int ',' int ']' unary | primary
//! primary := '(' formula ')' | 'true' | 'false' | VAR ('<=' | '>=') number
//! VAR     := 'I' | 'E' | 'S' | 'R' | 'D'
//! ```

use std::fmt;

use thiserror::Error;

use super::formula::{Formula, Relation, Window};
use crate::trajectory::compartment_index;

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: String },
    UnexpectedEnd { expected: String },
    InvalidNumber(String),
    InvalidBound(String),
    BoundOrder { start: usize, end: usize },
    UnknownVariable(String),
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "syntax error: unexpected character '{c}'")
            }
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "syntax error: found '{found}', expected {expected}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(
                    f,
                    "syntax error: unexpected end of input, expected {expected}"
                )
            }
            ParseErrorKind::InvalidNumber(s) => write!(f, "syntax error: invalid number '{s}'"),
            ParseErrorKind::InvalidBound(s) => {
                write!(f, "bound error: '{s}' is not a non-negative integer")
            }
            ParseErrorKind::BoundOrder { start, end } => {
                write!(f, "bound error: interval [{start},{end}] has start > end")
            }
            ParseErrorKind::UnknownVariable(v) => {
                write!(f, "unknown variable '{v}' (expected one of I, E, S, R, D)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Bang,
    Amp,
    Pipe,
    Le,
    Ge,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "{s}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBrack => write!(f, "["),
            Tok::RBrack => write!(f, "]"),
            Tok::Comma => write!(f, ","),
            Tok::Bang => write!(f, "!"),
            Tok::Amp => write!(f, "&"),
            Tok::Pipe => write!(f, "|"),
            Tok::Le => write!(f, "<="),
            Tok::Ge => write!(f, ">="),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            c if c.is_ascii_whitespace() => {
                i += 1;
                continue;
            }
            '(' => out.push((Tok::LParen, start)),
            ')' => out.push((Tok::RParen, start)),
            '[' => out.push((Tok::LBrack, start)),
            ']' => out.push((Tok::RBrack, start)),
            ',' => out.push((Tok::Comma, start)),
            '!' => out.push((Tok::Bang, start)),
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    i += 1;
                }
                out.push((Tok::Amp, start))
            }
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 1;
                }
                out.push((Tok::Pipe, start))
            }
            '<' | '>' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnexpectedChar(c),
                        position: start,
                    });
                }
                i += 1;
                out.push((if c == '<' { Tok::Le } else { Tok::Ge }, start));
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' || c == '+' => {
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    let exp_sign =
                        (d == '-' || d == '+') && matches!(bytes[i - 1] as char, 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Number(text[start..i].to_string()), start));
                continue;
            }
            other => {
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(other),
                    position: start,
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        let kind = match self.peek() {
            Some(t) => ParseErrorKind::UnexpectedToken {
                found: t.to_string(),
                expected: expected.to_string(),
            },
            None => ParseErrorKind::UnexpectedEnd {
                expected: expected.to_string(),
            },
        };
        Err(ParseError {
            kind,
            position: self.offset(),
        })
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(expected)
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.until()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_ident("U") {
            self.pos += 1;
            let window = self.window()?;
            let rhs = self.unary()?;
            return Ok(Formula::Until {
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                window,
            });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Ident(s)) if s == "G" || s == "F" => {
                let always = s == "G";
                self.pos += 1;
                let window = self.window()?;
                let child = Box::new(self.unary()?);
                Ok(if always {
                    Formula::Always { child, window }
                } else {
                    Formula::Eventually { child, window }
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                let at = self.offset();
                self.pos += 1;
                match name.as_str() {
                    "true" => return Ok(Formula::True),
                    "false" => return Ok(Formula::not(Formula::True)),
                    _ => {}
                }
                let coord = compartment_index(&name).ok_or(ParseError {
                    kind: ParseErrorKind::UnknownVariable(name.clone()),
                    position: at,
                })?;
                let relation = match self.peek() {
                    Some(Tok::Le) => Relation::Le,
                    Some(Tok::Ge) => Relation::Ge,
                    _ => return self.err("'<=' or '>='"),
                };
                self.pos += 1;
                let threshold = self.number()?;
                Ok(Formula::atom(coord, relation, threshold))
            }
            _ => self.err("'(', '!', 'G', 'F', 'true' or a variable"),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Number(s)) => {
                let at = self.offset();
                self.pos += 1;
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(ParseError {
                        kind: ParseErrorKind::InvalidNumber(s),
                        position: at,
                    }),
                }
            }
            _ => self.err("a number"),
        }
    }

    fn bound(&mut self) -> Result<usize, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Number(s)) => {
                let at = self.offset();
                self.pos += 1;
                s.parse::<usize>().map_err(|_| ParseError {
                    kind: ParseErrorKind::InvalidBound(s),
                    position: at,
                })
            }
            _ => self.err("an integer bound"),
        }
    }

    fn window(&mut self) -> Result<Window, ParseError> {
        let at = self.offset();
        self.expect(Tok::LBrack, "'['")?;
        let start = self.bound()?;
        self.expect(Tok::Comma, "','")?;
        let end = self.bound()?;
        self.expect(Tok::RBrack, "']'")?;
        if start > end {
            return Err(ParseError {
                kind: ParseErrorKind::BoundOrder { start, end },
                position: at,
            });
        }
        Ok(Window { start, end })
    }
}

/// Parses a formula from its text form.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return p.err("end of input");
    }
    Ok(f)
}
