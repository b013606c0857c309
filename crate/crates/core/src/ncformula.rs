//! Non-commutative rational formulas and randomized identity testing.
//!
//! Grammar (whitespace is ignored, `-` may also be written `\u{2212}`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := ['-'] factor ('*' factor)*
//! factor := atom ('^-1')*
//! atom   := integer | 't' positive-integer | '(' expr ')'
//! ```
//!
//! `a - b` becomes `Add(a, Neg(b))` and a leading `-` negates the whole
//! product of its term. Size counts every node, leaves included.
//!
//! A formula of size `s` is tested at random `p x p` tuples with
//! `p = 2(s + 1) - 1`. A nonzero formula `f` makes `f^-1` a correct formula
//! of size `s + 1`, and every correct formula of size `n` is defined at
//! some tuple of size `2n - 1`, so at this `p` a generic tuple makes `f`
//! defined and invertible, in particular nonzero.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactalg::{Field, Matrix};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(BigUint),
    /// 1-based variable index.
    Var(usize),
    Neg(Box<Formula>),
    Add(Box<Formula>, Box<Formula>),
    Mul(Box<Formula>, Box<Formula>),
    Inv(Box<Formula>),
}

impl Formula {
    pub fn var(i: usize) -> Self {
        Formula::Var(i)
    }

    pub fn constant(c: u64) -> Self {
        Formula::Const(BigUint::from(c))
    }

    pub fn neg(self) -> Self {
        Formula::Neg(Box::new(self))
    }

    pub fn inv(self) -> Self {
        Formula::Inv(Box::new(self))
    }

    pub fn add(self, other: Formula) -> Self {
        Formula::Add(Box::new(self), Box::new(other))
    }

    pub fn mul(self, other: Formula) -> Self {
        Formula::Mul(Box::new(self), Box::new(other))
    }

    pub fn sub(self, other: Formula) -> Self {
        self.add(other.neg())
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Var(_) => 1,
            Formula::Neg(x) | Formula::Inv(x) => 1 + x.size(),
            Formula::Add(a, b) | Formula::Mul(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Largest variable index, 0 if there are none.
    pub fn num_vars(&self) -> usize {
        match self {
            Formula::Const(_) => 0,
            Formula::Var(i) => *i,
            Formula::Neg(x) | Formula::Inv(x) => x.num_vars(),
            Formula::Add(a, b) | Formula::Mul(a, b) => a.num_vars().max(b.num_vars()),
        }
    }

    pub fn has_inverse(&self) -> bool {
        match self {
            Formula::Const(_) | Formula::Var(_) => false,
            Formula::Inv(_) => true,
            Formula::Neg(x) => x.has_inverse(),
            Formula::Add(a, b) | Formula::Mul(a, b) => a.has_inverse() || b.has_inverse(),
        }
    }
}

/// Fully parenthesized, so that parsing the output gives the same tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(c) => write!(f, "{c}"),
            Formula::Var(i) => write!(f, "t{i}"),
            Formula::Neg(x) => write!(f, "(-{x})"),
            Formula::Add(a, b) => write!(f, "({a} + {b})"),
            Formula::Mul(a, b) => write!(f, "({a}*{b})"),
            Formula::Inv(x) => write!(f, "{x}^-1"),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn is_minus(c: char) -> bool {
        c == '-' || c == '\u{2212}'
    }

    fn expr(&mut self) -> Result<Formula> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.bump();
                    acc = acc.add(self.term()?);
                }
                Some(c) if Self::is_minus(c) => {
                    self.bump();
                    acc = acc.sub(self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Formula> {
        let negate = matches!(self.peek(), Some(c) if Self::is_minus(c));
        if negate {
            self.bump();
        }
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.bump();
            acc = acc.mul(self.factor()?);
        }
        Ok(if negate { acc.neg() } else { acc })
    }

    fn factor(&mut self) -> Result<Formula> {
        let mut acc = self.atom()?;
        while self.peek() == Some('^') {
            self.bump();
            match self.bump() {
                Some(c) if Self::is_minus(c) => {}
                _ => return self.error("expected `-1` after `^`"),
            }
            let start = self.pos;
            match self.digits() {
                Some(d) if d == "1" => acc = acc.inv(),
                _ => {
                    self.pos = start;
                    return self.error("only the exponent -1 is supported");
                }
            }
        }
        Ok(acc)
    }

    /// Digits starting exactly at the cursor (after whitespace).
    fn digits(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek() {
            Some('(') => {
                self.bump();
                let inner = self.expr()?;
                if self.bump() != Some(')') {
                    return self.error("expected `)`");
                }
                Ok(inner)
            }
            Some('t') => {
                self.bump();
                let start = self.pos;
                let rest = &self.text[self.pos..];
                let len = rest.bytes().take_while(u8::is_ascii_digit).count();
                if len == 0 {
                    return self.error("expected a variable index after `t`");
                }
                self.pos += len;
                let index = match rest[..len].parse::<usize>() {
                    Ok(i) => i,
                    Err(_) => {
                        return Err(Error::Index {
                            pos: start,
                            msg: "variable index too large".into(),
                        })
                    }
                };
                if index == 0 {
                    return Err(Error::Index {
                        pos: start,
                        msg: "variables are numbered from t1".into(),
                    });
                }
                Ok(Formula::Var(index))
            }
            Some(c) if c.is_ascii_digit() => {
                let d = self.digits().expect("peeked a digit");
                Ok(Formula::Const(d.parse().expect("ascii digits")))
            }
            Some(c) => self.error(format!("unexpected `{c}`")),
            None => self.error("unexpected end of input"),
        }
    }
}

/// Parse a formula; positions in errors are byte offsets.
pub fn parse(text: &str) -> Result<Formula> {
    let mut p = Parser { text, pos: 0 };
    let f = p.expr()?;
    if let Some(c) = p.peek() {
        return p.error(format!("unexpected `{c}` after end of formula"));
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation<F: Field> {
    Defined(Matrix<F>),
    /// Some inverse gate received a singular matrix.
    Undefined,
}

impl<F: Field> Evaluation<F> {
    pub fn value(&self) -> Option<&Matrix<F>> {
        match self {
            Evaluation::Defined(m) => Some(m),
            Evaluation::Undefined => None,
        }
    }
}

/// Evaluate at a tuple of `p x p` matrices (`p` read from the tuple).
pub fn evaluate<F: Field>(f: &Formula, tuple: &[Matrix<F>]) -> Result<Evaluation<F>> {
    let first = tuple
        .first()
        .ok_or_else(|| Error::shape("empty tuple: use evaluate_at"))?;
    evaluate_at(f, first.field(), first.rows(), tuple)
}

/// Evaluate at `p x p` matrices; constants become scalar multiples of `I_p`.
pub fn evaluate_at<F: Field>(f: &Formula, field: &F, p: usize, tuple: &[Matrix<F>]) -> Result<Evaluation<F>> {
    if tuple.len() < f.num_vars() {
        return Err(Error::shape(format!(
            "formula uses t{} but the tuple has {} matrices",
            f.num_vars(),
            tuple.len()
        )));
    }
    if let Some(bad) = tuple.iter().find(|t| t.shape() != (p, p)) {
        return Err(Error::shape(format!(
            "tuple entry is {}x{}, expected {p}x{p}",
            bad.rows(),
            bad.cols()
        )));
    }
    Ok(match eval_node(f, field, p, tuple)? {
        Some(m) => Evaluation::Defined(m),
        None => Evaluation::Undefined,
    })
}

fn eval_node<F: Field>(f: &Formula, field: &F, p: usize, tuple: &[Matrix<F>]) -> Result<Option<Matrix<F>>> {
    let sub = |x: &Formula| eval_node(x, field, p, tuple);
    Ok(match f {
        Formula::Const(c) => {
            let c = field.from_bigint(&BigInt::from(c.clone()));
            Some(Matrix::identity(field.clone(), p).scale(&c))
        }
        Formula::Var(i) => Some(tuple[i - 1].clone()),
        Formula::Neg(x) => sub(x)?.map(|m| m.neg()),
        Formula::Add(a, b) => match (sub(a)?, sub(b)?) {
            (Some(x), Some(y)) => Some(x.add(&y)?),
            _ => None,
        },
        Formula::Mul(a, b) => match (sub(a)?, sub(b)?) {
            (Some(x), Some(y)) => Some(x.mul(&y)?),
            _ => None,
        },
        Formula::Inv(x) => match sub(x)? {
            Some(m) => match m.inverse() {
                Ok(inv) => Some(inv),
                Err(Error::Singular) => None,
                Err(e) => return Err(e),
            },
            None => None,
        },
    })
}

/// Evaluation dimension used by [`rit`]: `2(size + 1) - 1`.
pub fn rit_dimension(f: &Formula) -> usize {
    2 * (f.size() + 1) - 1
}

/// Degree of the polynomial whose nonvanishing at `T` guarantees that `f`
/// is defined and nonzero at `T` (when `f` is nonzero at some tuple).
///
/// Every gate value is written `N / D` with `N` a matrix of polynomials of
/// degree `<= a` and `D` a scalar polynomial of degree `<= b`; an inverse gate
/// contributes `det N`, of degree `<= p a`, to the product tested. The result
/// is `sum over inverse gates of p a + a` for the root.
pub fn certificate_degree(f: &Formula, p: usize) -> f64 {
    fn walk(f: &Formula, p: f64, dets: &mut f64) -> (f64, f64) {
        match f {
            Formula::Const(_) => (0.0, 0.0),
            Formula::Var(_) => (1.0, 0.0),
            Formula::Neg(x) => walk(x, p, dets),
            Formula::Add(l, r) => {
                let ((a1, b1), (a2, b2)) = (walk(l, p, dets), walk(r, p, dets));
                ((a1 + b2).max(a2 + b1), b1 + b2)
            }
            Formula::Mul(l, r) => {
                let ((a1, b1), (a2, b2)) = (walk(l, p, dets), walk(r, p, dets));
                (a1 + a2, b1 + b2)
            }
            Formula::Inv(x) => {
                let (a, b) = walk(x, p, dets);
                *dets += p * a;
                (b + (p - 1.0) * a, p * a)
            }
        }
    }
    let mut dets = 0.0;
    let (a, _) = walk(f, p as f64, &mut dets);
    dets + a
}

#[derive(Debug, Clone, PartialEq)]
pub enum RitStatus<F: Field> {
    /// Defined, nonzero value at `tuple` (exact counterexample to `f = 0`).
    NonZero {
        trial: usize,
        tuple: Vec<Matrix<F>>,
        value: Matrix<F>,
    },
    /// Every defined evaluation was zero and at least one was defined.
    ZeroWhp,
    /// No evaluation was defined.
    UndefinedWhp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RitVerdict<F: Field> {
    pub formula: Formula,
    pub dimension: usize,
    pub trials: usize,
    /// Number of trials at which `f` was defined.
    pub defined: usize,
    /// Bound on the probability of a wrong `ZeroWhp` / `UndefinedWhp`.
    pub failure_bound: f64,
    pub status: RitStatus<F>,
}

impl<F: Field> RitVerdict<F> {
    pub fn status_name(&self) -> &'static str {
        match self.status {
            RitStatus::NonZero { .. } => "NonZero",
            RitStatus::ZeroWhp => "ZeroWhp",
            RitStatus::UndefinedWhp => "UndefinedWhp",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "status": self.status_name(),
            "formula": self.formula.to_string(),
            "size": self.formula.size(),
            "vars": self.formula.num_vars(),
            "dimension": self.dimension,
            "trials": self.trials,
            "defined": self.defined,
        });
        match &self.status {
            RitStatus::NonZero { trial, tuple, value } => {
                out["trial"] = json!(trial);
                out["witness"] = json!(tuple.iter().map(Matrix::to_strings).collect::<Vec<_>>());
                out["value"] = json!(value.to_strings());
            }
            _ => out["failure_bound"] = json!(self.failure_bound),
        }
        out
    }
}

/// Randomized identity test at dimension [`rit_dimension`]. Trial `i`
/// samples from stream `i` of `seed`; the reported witness is the nonzero
/// evaluation with the lowest trial index.
pub fn rit<F: Field>(field: &F, f: &Formula, trials: usize, seed: u64) -> Result<RitVerdict<F>> {
    if trials == 0 {
        return Err(Error::precondition("at least one trial is required"));
    }
    let p = rit_dimension(f);
    let m = f.num_vars();
    let results = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = substream(seed, trial as u64);
            let tuple: Vec<_> = (0..m).map(|_| Matrix::random(field.clone(), p, p, &mut rng)).collect();
            let value = evaluate_at(f, field, p, &tuple)?;
            Ok((tuple, value))
        })
        .collect::<Result<Vec<_>>>()?;
    let defined = results.iter().filter(|(_, v)| v.value().is_some()).count();
    let per_trial = (certificate_degree(f, p) / field.sample_space()).min(1.0);
    let failure_bound = per_trial.powi(trials as i32);
    let hit = results
        .into_iter()
        .enumerate()
        .find_map(|(trial, (tuple, v))| match v {
            Evaluation::Defined(value) if !value.is_zero() => Some((trial, tuple, value)),
            _ => None,
        });
    let status = match hit {
        Some((trial, tuple, value)) => RitStatus::NonZero { trial, tuple, value },
        None if defined > 0 => RitStatus::ZeroWhp,
        None => RitStatus::UndefinedWhp,
    };
    Ok(RitVerdict {
        formula: f.clone(),
        dimension: p,
        trials,
        defined,
        failure_bound,
        status,
    })
}
