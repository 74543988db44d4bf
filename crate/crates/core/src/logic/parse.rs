use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Predicate, StlFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

/// Parse tree before negation normalization. `Not` may wrap anything.
#[derive(Debug, Clone, PartialEq)]
pub enum RawStl {
    True,
    False,
    Pred(Predicate),
    Not(Box<RawStl>),
    And(Vec<RawStl>),
    Or(Vec<RawStl>),
    Always(usize, usize, Box<RawStl>),
    Eventually(usize, usize, Box<RawStl>),
    Until(usize, usize, Box<RawStl>, Box<RawStl>),
}

impl RawStl {
    /// Pushes negations down to the predicates.
    pub fn to_nnf(&self) -> Result<StlFormula, String> {
        self.nnf(false)
    }

    fn nnf(&self, neg: bool) -> Result<StlFormula, String> {
        let many = |cs: &[RawStl]| -> Result<Vec<StlFormula>, String> { cs.iter().map(|c| c.nnf(neg)).collect() };
        Ok(match (self, neg) {
            (RawStl::True, false) | (RawStl::False, true) => StlFormula::True,
            (RawStl::True, true) | (RawStl::False, false) => StlFormula::falsum(),
            (RawStl::Pred(p), false) => StlFormula::Pred(p.clone()),
            (RawStl::Pred(p), true) => StlFormula::NotPred(p.clone()),
            (RawStl::Not(c), _) => c.nnf(!neg)?,
            (RawStl::And(cs), false) | (RawStl::Or(cs), true) => StlFormula::And(many(cs)?),
            (RawStl::Or(cs), false) | (RawStl::And(cs), true) => StlFormula::Or(many(cs)?),
            (RawStl::Always(a, b, c), false) | (RawStl::Eventually(a, b, c), true) => {
                StlFormula::always(*a, *b, c.nnf(neg)?)
            }
            (RawStl::Eventually(a, b, c), false) | (RawStl::Always(a, b, c), true) => {
                StlFormula::eventually(*a, *b, c.nnf(neg)?)
            }
            (RawStl::Until(a, b, l, r), false) => StlFormula::until(*a, *b, l.nnf(false)?, r.nnf(false)?),
            (RawStl::Until(..), true) => return Err("negated until has no negation normal form without release".into()),
        })
    }
}

/// Parses formula text into a negation-normal-form syntax tree.
pub fn parse_stl(text: &str) -> Result<StlFormula, ParseError> {
    let raw = parse_stl_raw(text)?;
    raw.to_nnf().map_err(|msg| ParseError { pos: 0, msg })
}

/// Parses formula text without normalizing negations.
pub fn parse_stl_raw(text: &str) -> Result<RawStl, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let f = p.formula()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.src.get(self.pos + offset).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{s}'")))
        }
    }

    /// Keyword followed (after optional whitespace) by `[`.
    fn eat_temporal(&mut self, kw: u8) -> bool {
        self.skip_ws();
        if self.peek_at(0) != Some(kw) {
            return false;
        }
        let mut k = 1;
        while self.peek_at(k).is_some_and(|c| c.is_ascii_whitespace()) {
            k += 1;
        }
        if self.peek_at(k) == Some(b'[') {
            self.pos += k + 1;
            true
        } else {
            false
        }
    }

    fn formula(&mut self) -> Result<RawStl, ParseError> {
        let first = self.conjunction()?;
        let mut parts = vec![first];
        while self.eat("||") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RawStl::Or(parts)
        })
    }

    fn conjunction(&mut self) -> Result<RawStl, ParseError> {
        let first = self.until()?;
        let mut parts = vec![first];
        while self.eat("&&") {
            parts.push(self.until()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            RawStl::And(parts)
        })
    }

    fn until(&mut self) -> Result<RawStl, ParseError> {
        let left = self.unary()?;
        if self.eat_temporal(b'U') {
            let (a, b) = self.interval()?;
            let right = self.unary()?;
            return Ok(RawStl::Until(a, b, Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<RawStl, ParseError> {
        if self.eat_temporal(b'G') {
            let (a, b) = self.interval()?;
            return Ok(RawStl::Always(a, b, Box::new(self.unary()?)));
        }
        if self.eat_temporal(b'F') {
            let (a, b) = self.interval()?;
            return Ok(RawStl::Eventually(a, b, Box::new(self.unary()?)));
        }
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(RawStl::Not(Box::new(self.unary()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(")")?;
                Ok(f)
            }
            None => Err(self.error("unexpected end of input")),
            _ => self.atom(),
        }
    }

    fn interval(&mut self) -> Result<(usize, usize), ParseError> {
        let a = self.bound()?;
        self.expect(",")?;
        let b = self.bound()?;
        self.expect("]")?;
        if a > b {
            return Err(self.error(format!("empty interval [{a},{b}]")));
        }
        Ok((a, b))
    }

    fn bound(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        if self.eat("inf") || self.eat("∞") {
            return Err(self.error("unbounded interval; only bounded-time operators are supported"));
        }
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            if self.pos >= self.src.len() || self.peek() == Some(b']') {
                return Err(self.error("missing interval bound (unbounded intervals are not allowed)"));
            }
            return Err(self.error("expected a step index"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError {
                pos: start,
                msg: "step index out of range".into(),
            })
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        if rest.starts_with(kw.as_bytes())
            && !rest
                .get(kw.len())
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn atom(&mut self) -> Result<RawStl, ParseError> {
        if self.keyword("true") {
            return Ok(RawStl::True);
        }
        if self.keyword("false") {
            return Ok(RawStl::False);
        }
        let lhs = self.linear_expr()?;
        self.skip_ws();
        let (strict_gt, flip) = if self.eat(">=") || self.eat(">") {
            (true, false)
        } else if self.eat("<=") || self.eat("<") {
            (true, true)
        } else {
            return Err(self.error("expected a comparison operator"));
        };
        debug_assert!(strict_gt);
        let rhs = self.linear_expr()?;
        let diff = if flip { rhs.minus(&lhs) } else { lhs.minus(&rhs) };
        Ok(RawStl::Pred(diff.into_predicate()))
    }

    fn linear_expr(&mut self) -> Result<Affine, ParseError> {
        let mut acc = Affine::default();
        let mut sign = 1.0;
        if self.eat("-") {
            sign = -1.0;
        } else {
            self.eat("+");
        }
        loop {
            let term = self.term()?;
            acc.add_scaled(&term, sign);
            if self.eat("+") {
                sign = 1.0;
            } else if self.peek() == Some(b'-') {
                self.pos += 1;
                sign = -1.0;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Affine, ParseError> {
        let mut sign = 1.0;
        while let Some(c) = self.peek() {
            if c == b'-' {
                sign = -sign;
                self.pos += 1;
            } else if c == b'+' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let mut t = Affine::default();
        match self.peek() {
            Some(b'[') => {
                self.pos += 1;
                let mut coeffs = Vec::new();
                if self.peek() != Some(b']') {
                    loop {
                        coeffs.push(self.signed_number()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("]")?;
                self.expect(".")?;
                self.expect_bare_x()?;
                for (i, c) in coeffs.into_iter().enumerate() {
                    t.coeffs.insert(i, sign * c);
                }
                t.width = t.width.max(t.coeffs.len());
            }
            Some(b'x') => {
                let idx = self.variable()?;
                t.coeffs.insert(idx, sign);
                t.width = idx + 1;
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = sign * self.number()?;
                self.eat("*");
                if self.peek() == Some(b'x') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
                    let idx = self.variable()?;
                    t.coeffs.insert(idx, v);
                    t.width = idx + 1;
                } else {
                    t.constant = v;
                }
            }
            _ => return Err(self.error("expected a term")),
        }
        Ok(t)
    }

    fn expect_bare_x(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek_at(0) == Some(b'x') && !self.peek_at(1).is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error("expected 'x' after '.'"))
        }
    }

    fn variable(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        self.pos += 1; // 'x'
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let idx: usize = std::str::from_utf8(&self.src[digits..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError {
                pos: start,
                msg: "expected a variable like x1".into(),
            })?;
        if idx == 0 {
            return Err(ParseError {
                pos: start,
                msg: "signal variables are 1-based (x1, x2, ...)".into(),
            });
        }
        Ok(idx - 1)
    }

    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let neg = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        let v = self.number()?;
        Ok(if neg { -v } else { v })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut k = self.pos + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                self.pos = k;
                while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        std::str::from_utf8(&s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ParseError {
                pos: start,
                msg: "malformed number".into(),
            })
    }
}

#[derive(Debug, Default, Clone)]
struct Affine {
    coeffs: BTreeMap<usize, f64>,
    width: usize,
    constant: f64,
}

impl Affine {
    fn add_scaled(&mut self, other: &Affine, s: f64) {
        for (i, c) in &other.coeffs {
            *self.coeffs.entry(*i).or_insert(0.0) += s * c;
        }
        self.width = self.width.max(other.width);
        self.constant += s * other.constant;
    }

    fn minus(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    fn into_predicate(self) -> Predicate {
        let mut coeffs = vec![0.0; self.width];
        for (i, c) in self.coeffs {
            coeffs[i] = c;
        }
        Predicate::new(coeffs, self.constant)
    }
}

fn write_predicate(f: &mut fmt::Formatter<'_>, p: &Predicate) -> fmt::Result {
    let cs: Vec<String> = p.coeffs.iter().map(|c| format!("{c}")).collect();
    write!(f, "[{}] . x + {} > 0", cs.join(", "), p.offset)
}

impl fmt::Display for StlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StlFormula::True => write!(f, "true"),
            StlFormula::Pred(p) => write_predicate(f, p),
            StlFormula::NotPred(p) => {
                write!(f, "!(")?;
                write_predicate(f, p)?;
                write!(f, ")")
            }
            StlFormula::And(cs) if cs.is_empty() => write!(f, "true"),
            StlFormula::Or(cs) if cs.is_empty() => write!(f, "false"),
            StlFormula::And(cs) | StlFormula::Or(cs) => {
                let sep = if matches!(self, StlFormula::And(_)) {
                    " && "
                } else {
                    " || "
                };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "({c})")?;
                }
                Ok(())
            }
            StlFormula::Always(a, b, c) => write!(f, "G[{a},{b}] ({c})"),
            StlFormula::Eventually(a, b, c) => write!(f, "F[{a},{b}] ({c})"),
            StlFormula::Until(a, b, l, r) => write!(f, "({l}) U[{a},{b}] ({r})"),
            StlFormula::SpatialAtom(psi) => write!(f, "{{{psi}}}"),
        }
    }
}
