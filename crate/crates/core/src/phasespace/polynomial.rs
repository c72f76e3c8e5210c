//! Real polynomial observables in `q` and `p`.
//!
//! Text form: a signed sum of terms such as `0.5*p^2 + 0.5*q^2 - q*p + 3`.
//! Each term is a product of decimal numbers and `q`/`p` factors with an
//! optional non-negative integer power. Whitespace is ignored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{ClassicalOperator, PhasePoint, PhaseSpaceGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub q_pow: u32,
    pub p_pow: u32,
}

impl Monomial {
    pub const fn new(coeff: f64, q_pow: u32, p_pow: u32) -> Self {
        Self { coeff, q_pow, p_pow }
    }

    fn eval(&self, q: f64, p: f64) -> f64 {
        self.coeff * q.powi(self.q_pow as i32) * p.powi(self.p_pow as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolynomialObservable {
    terms: Vec<Monomial>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("polynomial parse error at column {column}: {message}")]
pub struct ParsePolynomialError {
    /// 1-based character column into the source text.
    pub column: usize,
    pub message: String,
}

impl PolynomialObservable {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Monomial::new(c, 0, 0)])
    }

    /// The position observable `q`.
    pub fn position() -> Self {
        Self::new(vec![Monomial::new(1.0, 1, 0)])
    }

    /// The momentum observable `p`.
    pub fn momentum() -> Self {
        Self::new(vec![Monomial::new(1.0, 0, 1)])
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(q, p)).sum()
    }

    pub fn eval_at(&self, z: PhasePoint) -> f64 {
        self.eval(z.q, z.p)
    }

    pub fn d_dq(&self) -> Self {
        Self::new(
            self.terms
                .iter()
                .filter(|t| t.q_pow > 0 && t.coeff != 0.0)
                .map(|t| Monomial::new(t.coeff * t.q_pow as f64, t.q_pow - 1, t.p_pow))
                .collect(),
        )
    }

    pub fn d_dp(&self) -> Self {
        Self::new(
            self.terms
                .iter()
                .filter(|t| t.p_pow > 0 && t.coeff != 0.0)
                .map(|t| Monomial::new(t.coeff * t.p_pow as f64, t.q_pow, t.p_pow - 1))
                .collect(),
        )
    }

    /// `(dH/dq, dH/dp)` at `z`.
    pub fn gradient(&self, z: PhasePoint) -> (f64, f64) {
        let mut gq = 0.0;
        let mut gp = 0.0;
        for t in &self.terms {
            if t.q_pow > 0 {
                gq += t.coeff * t.q_pow as f64 * z.q.powi(t.q_pow as i32 - 1) * z.p.powi(t.p_pow as i32);
            }
            if t.p_pow > 0 {
                gp += t.coeff * t.p_pow as f64 * z.q.powi(t.q_pow as i32) * z.p.powi(t.p_pow as i32 - 1);
            }
        }
        (gq, gp)
    }

    /// True when no term mixes `q` and `p`, i.e. `H = T(p) + U(q)`.
    pub fn is_separable(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0 || t.q_pow == 0 || t.p_pow == 0)
    }

    /// `self + scale * other`.
    pub fn plus_scaled(&self, other: &PolynomialObservable, scale: f64) -> Self {
        let mut terms = self.terms.clone();
        if scale != 0.0 {
            terms.extend(other.terms.iter().map(|t| Monomial::new(t.coeff * scale, t.q_pow, t.p_pow)));
        }
        Self::new(terms)
    }

    /// Values on every grid node, flat-index order.
    pub fn sample(&self, grid: &PhaseSpaceGrid) -> Vec<f64> {
        grid.points().map(|z| self.eval_at(z)).collect()
    }

    /// Multiplication operator on the grid (diagonal, no dyads).
    pub fn to_operator(&self, grid: &PhaseSpaceGrid) -> ClassicalOperator {
        ClassicalOperator::from_real(*grid, self.sample(grid))
    }
}

impl fmt::Display for PolynomialObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let c = t.coeff;
            let mag = c.abs();
            if k == 0 {
                if c.is_sign_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_sign_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = [("q", t.q_pow), ("p", t.p_pow)]
                .into_iter()
                .filter(|&(_, pow)| pow > 0)
                .map(|(name, pow)| if pow == 1 { name.to_string() } else { format!("{name}^{pow}") })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for PolynomialObservable {
    type Err = ParsePolynomialError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parser::new(s).parse()
    }
}

impl Serialize for PolynomialObservable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolynomialObservable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

struct Parser {
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Self {
        let chars = src.chars().enumerate().filter(|(_, c)| !c.is_whitespace()).map(|(i, c)| (i + 1, c)).collect();
        Self { chars, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn column(&self) -> usize {
        self.chars.get(self.pos).map(|&(col, _)| col).unwrap_or_else(|| self.chars.last().map_or(1, |&(c, _)| c + 1))
    }

    fn error(&self, message: impl Into<String>) -> ParsePolynomialError {
        ParsePolynomialError { column: self.column(), message: message.into() }
    }

    fn parse(mut self) -> Result<PolynomialObservable, ParsePolynomialError> {
        if self.chars.is_empty() {
            return Err(self.error("empty polynomial"));
        }
        let mut terms = Vec::new();
        let mut sign = match self.peek() {
            Some('-') => {
                self.pos += 1;
                -1.0
            }
            Some('+') => {
                self.pos += 1;
                1.0
            }
            _ => 1.0,
        };
        loop {
            let mut term = self.term()?;
            term.coeff *= sign;
            terms.push(term);
            sign = match self.peek() {
                None => break,
                Some('+') => 1.0,
                Some('-') => -1.0,
                Some(c) => return Err(self.error(format!("expected '+' or '-', found '{c}'"))),
            };
            self.pos += 1;
        }
        Ok(PolynomialObservable::new(terms))
    }

    fn term(&mut self) -> Result<Monomial, ParsePolynomialError> {
        let mut m = Monomial::new(1.0, 0, 0);
        loop {
            match self.peek() {
                Some('q') | Some('p') => {
                    let var = self.peek().unwrap();
                    self.pos += 1;
                    let pow = if self.peek() == Some('^') {
                        self.pos += 1;
                        self.integer()?
                    } else {
                        1
                    };
                    if var == 'q' {
                        m.q_pow += pow;
                    } else {
                        m.p_pow += pow;
                    }
                }
                Some(c) if c.is_ascii_digit() || c == '.' => m.coeff *= self.number()?,
                Some(c) => return Err(self.error(format!("expected a number, 'q' or 'p', found '{c}'"))),
                None => return Err(self.error("unexpected end of polynomial")),
            }
            if self.peek() == Some('*') {
                self.pos += 1;
            } else {
                return Ok(m);
            }
        }
    }

    fn integer(&mut self) -> Result<u32, ParsePolynomialError> {
        let start = self.pos;
        let mut text = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
            text.push(c);
            self.pos += 1;
        }
        if text.is_empty() {
            self.pos = start;
            return Err(self.error("expected a non-negative integer power"));
        }
        text.parse().map_err(|_| {
            self.pos = start;
            self.error("power out of range")
        })
    }

    fn number(&mut self) -> Result<f64, ParsePolynomialError> {
        let start = self.pos;
        let mut text = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_ascii_digit() || *c == '.') {
            text.push(c);
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            text.push('e');
            self.pos += 1;
            if let Some(c) = self.peek().filter(|c| *c == '-' || *c == '+') {
                text.push(c);
                self.pos += 1;
            }
            while let Some(c) = self.peek().filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.pos += 1;
            }
        }
        text.parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error(format!("malformed number '{text}'"))
        })
    }
}
