//! Recursive-descent parser for polynomial input.
//!
//! ```text
//! expr   := sign? term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := primary ('^' uint | '/' uint)*
//! primary:= coefficient | var | '(' expr ')' | '-' factor
//! var    := ('I' | 'x') uint
//! ```
//!
//! Coefficients are integers or decimals; `a/b` parses as a divided factor,
//! which gives the same rational. Implicit multiplication is rejected.

use num::{BigInt, BigRational, One, Zero};

use super::poly::Polynomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(BigRational),
    Var(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits")
    }

    /// Returns the next token and the offset where it starts.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let at = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, at));
        };
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = simple {
            self.pos += 1;
            return Ok((t, at));
        }
        if c == b'I' || c == b'x' {
            self.pos += 1;
            let d = self.digits();
            if d.is_empty() {
                return Err(syntax(self.pos, "expected variable number"));
            }
            let idx: usize = d
                .parse()
                .map_err(|_| syntax(at, "variable number too large"))?;
            return Ok((Tok::Var(idx), at));
        }
        if c.is_ascii_digit() || c == b'.' {
            let int_part = self.digits().to_owned();
            let mut value = if int_part.is_empty() {
                BigRational::zero()
            } else {
                BigRational::from_integer(int_part.parse::<BigInt>().expect("digits"))
            };
            if self.src.get(self.pos) == Some(&b'.') {
                self.pos += 1;
                let frac = self.digits();
                if frac.is_empty() && int_part.is_empty() {
                    return Err(syntax(at, "malformed decimal"));
                }
                if !frac.is_empty() {
                    let num: BigInt = frac.parse().expect("digits");
                    let den = num::pow(BigInt::from(10), frac.len());
                    value += BigRational::new(num, den);
                }
            }
            return Ok((Tok::Number(value), at));
        }
        Err(syntax(at, &format!("unexpected character {:?}", c as char)))
    }
}

fn syntax(offset: usize, message: &str) -> Error {
    Error::Syntax {
        offset,
        message: message.to_owned(),
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    n: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (t, at) = self.lexer.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = if self.tok == Tok::Minus {
            self.bump()?;
            self.term()?.neg()
        } else {
            if self.tok == Tok::Plus {
                self.bump()?;
            }
            self.term()?
        };
        loop {
            match self.tok {
                Tok::Plus => {
                    self.bump()?;
                    acc = acc.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump()?;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        while self.tok == Tok::Star {
            self.bump()?;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn uint(&mut self) -> Result<BigInt> {
        match &self.tok {
            Tok::Number(v) if v.is_integer() => {
                let v = v.to_integer();
                self.bump()?;
                Ok(v)
            }
            _ => Err(syntax(self.at, "expected unsigned integer")),
        }
    }

    fn factor(&mut self) -> Result<Polynomial> {
        let mut acc = self.primary()?;
        loop {
            match self.tok {
                Tok::Caret => {
                    self.bump()?;
                    let at = self.at;
                    let e = self.uint()?;
                    let e: u32 = e
                        .try_into()
                        .map_err(|_| syntax(at, "exponent too large"))?;
                    acc = acc.pow(e);
                }
                Tok::Slash => {
                    self.bump()?;
                    let at = self.at;
                    let d = self.uint()?;
                    if d.is_zero() {
                        return Err(syntax(at, "division by zero"));
                    }
                    acc = acc.scale(&BigRational::new(BigInt::one(), d));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn primary(&mut self) -> Result<Polynomial> {
        match self.tok.clone() {
            Tok::Number(v) => {
                self.bump()?;
                Ok(Polynomial::constant(self.n, v))
            }
            Tok::Var(i) => {
                if i == 0 || i > self.n {
                    return Err(Error::VariableOutOfRange {
                        index: i,
                        n: self.n,
                    });
                }
                self.bump()?;
                Polynomial::variable(self.n, i - 1)
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(syntax(self.at, "expected ')'"));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Minus => {
                self.bump()?;
                Ok(self.factor()?.neg())
            }
            Tok::End => Err(syntax(self.at, "unexpected end of input")),
            other => Err(syntax(self.at, &format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses polynomial text in variables `I1..In` (or `x1..xn`).
pub fn parse_polynomial(text: &str, n: usize) -> Result<Polynomial> {
    let mut p = Parser {
        lexer: Lexer {
            src: text.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
        n,
    };
    p.bump()?;
    let poly = p.expr()?;
    if p.tok != Tok::End {
        return Err(syntax(p.at, "trailing input"));
    }
    Ok(poly)
}
