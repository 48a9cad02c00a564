//! Job files: a `poly:` line holding a polynomial expression in `z` and `w`
//! plus optional `base:`, `tol:`, `seed:` and `cap:` settings.
//!
//! ```text
//! # square root
//! poly: w^2 - z
//! base: auto
//! ```

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactpoly::{BiPoly, Rational, UniPoly};

/// A polynomial in `w` with `Q[z]` coefficients, lowest power first.
#[derive(Clone, Debug, PartialEq)]
struct Bivariate(Vec<UniPoly>);

impl Bivariate {
    fn constant(c: Rational) -> Self {
        Bivariate(vec![UniPoly::constant(c)])
    }

    fn z() -> Self {
        Bivariate(vec![UniPoly::z()])
    }

    fn w() -> Self {
        Bivariate(vec![UniPoly::zero(), UniPoly::one()])
    }

    fn trim(mut self) -> Self {
        while self.0.last().is_some_and(UniPoly::is_zero) {
            self.0.pop();
        }
        self
    }

    fn as_constant(&self) -> Option<Rational> {
        match self.0.as_slice() {
            [] => Some(Rational::zero()),
            [c] if c.degree().unwrap_or(0) == 0 => Some(c.coeff(0)),
            _ => None,
        }
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Bivariate(
            (0..n)
                .map(|k| match (self.0.get(k), other.0.get(k)) {
                    (Some(a), Some(b)) => a + b,
                    (Some(a), None) | (None, Some(a)) => a.clone(),
                    (None, None) => UniPoly::zero(),
                })
                .collect(),
        )
        .trim()
    }

    fn neg(&self) -> Self {
        Bivariate(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Bivariate(Vec::new());
        }
        let mut out = vec![UniPoly::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Bivariate(out).trim()
    }

    fn pow(&self, e: u32) -> Self {
        let mut acc = Bivariate::constant(Rational::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Var(char),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(s: &str, offset: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        match c {
            ' ' | '\t' => i += 1,
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n: num_bigint::BigInt = digits.parse().expect("ascii digits");
                out.push((Tok::Num(Rational::from_integer(n)), col));
            }
            'z' | 'w' => {
                out.push((Tok::Var(c), col));
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' => {
                out.push((Tok::Op(c), col));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            _ => {
                return Err(Error::Parse {
                    column: col,
                    message: format!("unexpected character {c:?}"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.1)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            column: self.col(),
            message: message.into(),
        })
    }

    // expr := ['-'] term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Bivariate> {
        let mut acc = if self.peek() == Some(&Tok::Op('-')) {
            self.pos += 1;
            self.term()?.neg()
        } else {
            self.term()?
        };
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let t = self.term()?;
            acc = if op == '+' { acc.add(&t) } else { acc.add(&t.neg()) };
        }
        Ok(acc)
    }

    // term := power (('*'|'/') power | power)*   (juxtaposition multiplies)
    fn term(&mut self) -> Result<Bivariate> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Op('*')) => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(Tok::Op('/')) => {
                    self.pos += 1;
                    let col = self.col();
                    let d = self.power()?;
                    match d.as_constant() {
                        Some(c) if !c.is_zero() => {
                            acc = acc.mul(&Bivariate::constant(Rational::one() / c));
                        }
                        Some(_) => {
                            return Err(Error::Parse {
                                column: col,
                                message: "division by zero".into(),
                            })
                        }
                        None => {
                            return Err(Error::Parse {
                                column: col,
                                message: "only division by a nonzero constant is supported".into(),
                            })
                        }
                    }
                }
                Some(Tok::Num(_) | Tok::Var(_) | Tok::LParen) => acc = acc.mul(&self.power()?),
                _ => return Ok(acc),
            }
        }
    }

    // power := atom ('^' integer)?
    fn power(&mut self) -> Result<Bivariate> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Op('^')) {
            self.pos += 1;
            let col = self.col();
            match self.peek().cloned() {
                Some(Tok::Num(n)) if n.is_integer() && n <= Rational::from_integer(64.into()) => {
                    self.pos += 1;
                    let e: u32 = n.to_integer().try_into().expect("small exponent");
                    Ok(base.pow(e))
                }
                _ => Err(Error::Parse {
                    column: col,
                    message: "exponent must be an integer between 0 and 64".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Bivariate> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Bivariate::constant(n))
            }
            Some(Tok::Var('z')) => {
                self.pos += 1;
                Ok(Bivariate::z())
            }
            Some(Tok::Var(_)) => {
                self.pos += 1;
                Ok(Bivariate::w())
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(self.power()?.neg())
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of expression"),
        }
    }
}

fn parse_at(text: &str, offset: usize) -> Result<Vec<UniPoly>> {
    let toks = tokenize(text, offset)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: offset + text.chars().count() + 1,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e.0)
}

/// Parses a polynomial expression in `z` and `w` and normalizes it to be
/// monic in `w`.
pub fn parse_poly(text: &str) -> Result<BiPoly> {
    let raw = parse_at(text, 0)?;
    if raw.len() < 2 {
        return Err(Error::Malformed("polynomial must involve w".into()));
    }
    BiPoly::from_polys(&raw)
}

/// Settings read from a job file. Unset options fall back to the library
/// defaults (or to command-line overrides).
#[derive(Clone, Debug, PartialEq)]
pub struct JobSpec {
    pub poly: BiPoly,
    pub poly_text: String,
    pub base: Option<Complex64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub cap: Option<usize>,
}

impl JobSpec {
    pub fn parse(text: &str) -> Result<JobSpec> {
        let mut poly = None;
        let mut base = None;
        let mut tol = None;
        let mut seed = None;
        let mut cap = None;
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or_default();
            if line.trim().is_empty() {
                continue;
            }
            let at = |message: String| Error::Malformed(format!("line {}: {message}", lineno + 1));
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| at("expected `key: value`".into()))?;
            let value_offset = key.chars().count() + 1;
            let key = key.trim();
            let value = value.trim();
            match key {
                "poly" => {
                    let lead = line[key.len()..].find(value).unwrap_or(0);
                    let offset = value_offset + lead.saturating_sub(1);
                    let raw = parse_at(value, offset).map_err(|e| match e {
                        Error::Parse { column, message } => {
                            at(format!("column {column}: {message}"))
                        }
                        other => other,
                    })?;
                    if raw.len() < 2 {
                        return Err(at("polynomial must involve w".into()));
                    }
                    poly = Some((BiPoly::from_polys(&raw)?, value.to_string()));
                }
                "base" => {
                    base = if value == "auto" {
                        None
                    } else {
                        let parts: Vec<&str> = value.split_whitespace().collect();
                        match parts.as_slice() {
                            [re, im] => Some(Complex64::new(
                                re.parse().map_err(|_| at(format!("bad number {re:?}")))?,
                                im.parse().map_err(|_| at(format!("bad number {im:?}")))?,
                            )),
                            _ => return Err(at("base must be `auto` or `<re> <im>`".into())),
                        }
                    };
                }
                "tol" => {
                    let t: f64 = value.parse().map_err(|_| at(format!("bad tolerance {value:?}")))?;
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(at("tolerance must be positive".into()));
                    }
                    tol = Some(t);
                }
                "seed" => seed = Some(value.parse().map_err(|_| at(format!("bad seed {value:?}")))?),
                "cap" => {
                    let c: usize = value.parse().map_err(|_| at(format!("bad cap {value:?}")))?;
                    if c == 0 {
                        return Err(at("cap must be positive".into()));
                    }
                    cap = Some(c);
                }
                other => return Err(at(format!("unknown key {other:?}"))),
            }
        }
        let (poly, poly_text) = poly.ok_or_else(|| Error::Malformed("missing `poly:` line".into()))?;
        Ok(JobSpec {
            poly,
            poly_text,
            base,
            tol,
            seed,
            cap,
        })
    }
}
