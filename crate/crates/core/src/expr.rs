//! Arithmetic expressions over named variables and their natural interval
//! extension.
//!
//! Grammar accepted by [`parse`]:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := NUMBER | IDENT | '-' factor | '(' expr ')'
//! ```
//!
//! `NUMBER` is a decimal literal (`12`, `0.25`, `1.5e-3`). A minus sign
//! directly in front of a literal is folded into the constant.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::interval::{Interval, IntervalBox};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("undeclared variable {name} at offset {position}")]
    UndeclaredVariable { name: String, position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no binding for variable {0}")]
    Unbound(String),
}

/// Variable bindings used by the evaluators.
pub trait Env<T> {
    fn lookup(&self, name: &str) -> Option<T>;
}

impl<K, T> Env<T> for HashMap<K, T>
where
    K: Borrow<str> + Hash + Eq,
    T: Copy,
{
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<K, T> Env<T> for std::collections::BTreeMap<K, T>
where
    K: Borrow<str> + Ord,
    T: Copy,
{
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<T: Copy> Env<T> for [(&str, T)] {
    fn lookup(&self, name: &str) -> Option<T> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<T: Copy, const N: usize> Env<T> for [(&str, T); N] {
    fn lookup(&self, name: &str) -> Option<T> {
        self.as_slice().lookup(name)
    }
}

/// A rational constant: its decimal text, the nearest double, and a tight
/// enclosing interval of the exact value.
#[derive(Debug, Clone)]
pub struct Constant {
    text: String,
    nearest: f64,
    enclosure: Interval,
}

impl Constant {
    /// Exact binary value; its enclosure is the point interval.
    pub fn from_f64(value: f64) -> Self {
        assert!(value.is_finite(), "constants must be finite");
        let value = value + 0.0;
        Constant {
            text: format!("{value}"),
            nearest: value,
            enclosure: Interval::point(value),
        }
    }

    pub fn nearest(&self) -> f64 {
        self.nearest
    }

    /// Smallest floating interval containing the exact decimal value.
    pub fn enclosure(&self) -> Interval {
        self.enclosure
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    fn negated(&self) -> Self {
        let text = match self.text.strip_prefix('-') {
            Some(rest) => rest.to_string(),
            None => format!("-{}", self.text),
        };
        Constant {
            text,
            nearest: -self.nearest + 0.0,
            enclosure: -self.enclosure,
        }
    }
}

impl PartialEq for Constant {
    fn eq(&self, other: &Self) -> bool {
        self.nearest == other.nearest && self.enclosure == other.enclosure
    }
}

impl FromStr for Constant {
    type Err = String;

    /// Parses a decimal literal, optionally signed, with outward-safe rounding.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let exact = parse_decimal(text).ok_or_else(|| format!("not a decimal literal: {text}"))?;
        let nearest: f64 = text
            .parse()
            .map_err(|_| format!("not a decimal literal: {text}"))?;
        if !nearest.is_finite() {
            return Err(format!("literal out of range: {text}"));
        }
        let nearest = nearest + 0.0;
        let enclosure = match BigRational::from_float(nearest) {
            Some(r) if r == exact => Interval::point(nearest),
            Some(r) if r < exact => Interval::new(nearest, nearest.next_up()),
            _ => Interval::new(nearest.next_down(), nearest),
        };
        Ok(Constant {
            text: text.to_string(),
            nearest,
            enclosure,
        })
    }
}

/// Exact rational value of `[-]digits[.digits][(e|E)[+-]digits]`.
fn parse_decimal(text: &str) -> Option<BigRational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = exponent - i32::try_from(frac_part.len()).ok()?;
    let ten = BigInt::from(10u32);
    let mut value = BigRational::from_integer(numer);
    let factor = BigRational::from_integer(num_traits::pow(ten, scale.unsigned_abs() as usize));
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    if negative && !value.is_zero() {
        value = -value;
    }
    Some(value)
}

/// Arithmetic expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Constant),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn constant(value: f64) -> Self {
        Expr::Const(Constant::from_f64(value))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Self {
        Expr::Neg(Box::new(a))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
            Expr::Neg(a) => a.collect_variables(out),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Expr::Neg(a) => 1 + a.node_count(),
        }
    }

    /// Replaces every variable found in `map` by the mapped expression.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(name) => map.get(name).cloned().unwrap_or_else(|| self.clone()),
            Expr::Add(a, b) => Expr::add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(map), b.substitute(map)),
            Expr::Neg(a) => Expr::neg(a.substitute(map)),
        }
    }

    /// Renames variables; names not in `map` are kept.
    pub fn rename(&self, map: &HashMap<String, String>) -> Expr {
        let as_exprs: HashMap<String, Expr> = map
            .iter()
            .map(|(k, v)| (k.clone(), Expr::Var(v.clone())))
            .collect();
        self.substitute(&as_exprs)
    }

    pub fn eval_point<E: Env<f64> + ?Sized>(&self, env: &E) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => c.nearest,
            Expr::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Add(a, b) => a.eval_point(env)? + b.eval_point(env)?,
            Expr::Sub(a, b) => a.eval_point(env)? - b.eval_point(env)?,
            Expr::Mul(a, b) => a.eval_point(env)? * b.eval_point(env)?,
            Expr::Neg(a) => -a.eval_point(env)?,
        })
    }

    /// Natural interval extension: the result contains the exact range of the
    /// expression over the bound intervals.
    pub fn eval_interval<E: Env<Interval> + ?Sized>(&self, env: &E) -> Result<Interval, EvalError> {
        Ok(match self {
            Expr::Const(c) => c.enclosure,
            Expr::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Add(a, b) => a.eval_interval(env)? + b.eval_interval(env)?,
            Expr::Sub(a, b) => a.eval_interval(env)? - b.eval_interval(env)?,
            Expr::Mul(a, b) => a.eval_interval(env)? * b.eval_interval(env)?,
            Expr::Neg(a) => -a.eval_interval(env)?,
        })
    }

    /// Resolves variable names to slot indices for fast repeated evaluation.
    pub(crate) fn compile(
        &self,
        slot_of: &impl Fn(&str) -> Option<usize>,
    ) -> Result<SlotExpr, EvalError> {
        Ok(match self {
            Expr::Const(c) => SlotExpr::Const(c.enclosure),
            Expr::Var(name) => {
                SlotExpr::Slot(slot_of(name).ok_or_else(|| EvalError::Unbound(name.clone()))?)
            }
            Expr::Add(a, b) => {
                SlotExpr::Add(Box::new(a.compile(slot_of)?), Box::new(b.compile(slot_of)?))
            }
            Expr::Sub(a, b) => {
                SlotExpr::Sub(Box::new(a.compile(slot_of)?), Box::new(b.compile(slot_of)?))
            }
            Expr::Mul(a, b) => {
                SlotExpr::Mul(Box::new(a.compile(slot_of)?), Box::new(b.compile(slot_of)?))
            }
            Expr::Neg(a) => SlotExpr::Neg(Box::new(a.compile(slot_of)?)),
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) => 2,
            Expr::Const(c) if c.nearest.is_sign_negative() || c.text.starts_with('-') => 2,
            Expr::Neg(_) => 3,
            Expr::Const(_) | Expr::Var(_) => 4,
        }
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>, min_precedence: u8) -> fmt::Result {
        if self.precedence() < min_precedence {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    /// Prints with the minimal parentheses needed to reparse the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{}", c.text),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Add(a, b) => {
                a.write_operand(f, 1)?;
                write!(f, " + ")?;
                b.write_operand(f, 2)
            }
            Expr::Sub(a, b) => {
                a.write_operand(f, 1)?;
                write!(f, " - ")?;
                b.write_operand(f, 2)
            }
            Expr::Mul(a, b) => {
                a.write_operand(f, 2)?;
                write!(f, "*")?;
                b.write_operand(f, 3)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                // `-5` would fold into a constant, so literals keep parentheses
                if matches!(**a, Expr::Const(_)) {
                    write!(f, "({a})")
                } else {
                    a.write_operand(f, 3)
                }
            }
        }
    }
}

/// Expression with variables resolved to positions in a flat environment.
#[derive(Debug, Clone)]
pub(crate) enum SlotExpr {
    Const(Interval),
    Slot(usize),
    Add(Box<SlotExpr>, Box<SlotExpr>),
    Sub(Box<SlotExpr>, Box<SlotExpr>),
    Mul(Box<SlotExpr>, Box<SlotExpr>),
    Neg(Box<SlotExpr>),
}

impl SlotExpr {
    pub(crate) fn eval(&self, env: &[Interval]) -> Interval {
        match self {
            SlotExpr::Const(c) => *c,
            SlotExpr::Slot(i) => env[*i],
            SlotExpr::Add(a, b) => a.eval(env) + b.eval(env),
            SlotExpr::Sub(a, b) => a.eval(env) - b.eval(env),
            SlotExpr::Mul(a, b) => a.eval(env) * b.eval(env),
            SlotExpr::Neg(a) => -a.eval(env),
        }
    }
}

/// A vector-valued expression, e.g. a transition function.
#[derive(Debug, Clone, PartialEq)]
pub struct VecExpr {
    outputs: Vec<String>,
    components: Vec<Expr>,
}

impl VecExpr {
    /// Panics if there are no components or the output names do not line up.
    pub fn new(outputs: Vec<String>, components: Vec<Expr>) -> Self {
        assert!(!components.is_empty(), "vector expression without components");
        assert_eq!(outputs.len(), components.len(), "one output name per component");
        VecExpr { outputs, components }
    }

    pub fn parse<S: AsRef<str>>(
        outputs: Vec<String>,
        texts: &[S],
        declared: &[&str],
    ) -> Result<Self, ParseError> {
        let components = texts
            .iter()
            .map(|t| parse(t.as_ref(), declared))
            .collect::<Result<Vec<_>, _>>()?;
        if components.is_empty() || components.len() != outputs.len() {
            return Err(ParseError::Syntax {
                position: 0,
                message: format!(
                    "{} components for {} outputs",
                    components.len(),
                    outputs.len()
                ),
            });
        }
        Ok(VecExpr { outputs, components })
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.components.iter().flat_map(Expr::variables).collect()
    }

    pub fn with_outputs(&self, outputs: Vec<String>) -> Self {
        VecExpr::new(outputs, self.components.clone())
    }

    pub fn rename_inputs(&self, map: &HashMap<String, String>) -> Self {
        VecExpr {
            outputs: self.outputs.clone(),
            components: self.components.iter().map(|c| c.rename(map)).collect(),
        }
    }

    /// Componentwise interval evaluation; an overestimate of the image box.
    pub fn range_over<E: Env<Interval> + ?Sized>(&self, env: &E) -> Result<IntervalBox, EvalError> {
        let sides = self
            .components
            .iter()
            .map(|c| c.eval_interval(env))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IntervalBox::new(sides))
    }
}

/// Parses `text`; every identifier must appear in `declared`.
pub fn parse(text: &str, declared: &[&str]) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: text,
        pos: 0,
        declared,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < text.len() {
        return Err(parser.syntax(format!("unexpected {:?}", parser.peek().unwrap_or(' '))));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    declared: &'a [&'a str],
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            message,
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat('*') {
                lhs = Expr::mul(lhs, self.factor()?);
            } else {
                self.skip_ws();
                if self.peek() == Some('/') {
                    return Err(self.syntax("division is not supported".into()));
                }
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                self.skip_ws();
                let literal = matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.');
                match self.factor()? {
                    Expr::Const(c) if literal => Ok(Expr::Const(c.negated())),
                    inner => Ok(Expr::neg(inner)),
                }
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.syntax("expected ')'".into()));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() || c == '_' => self.ident(),
            Some(c) => Err(self.syntax(format!("unexpected {c:?}"))),
            None => Err(self.syntax("unexpected end of input".into())),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let constant: Constant = text.parse().map_err(|m| ParseError::Syntax {
            position: start,
            message: m,
        })?;
        self.pos = i;
        Ok(Expr::Const(constant))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let name = &self.src[start..self.pos];
        if !self.declared.contains(&name) {
            return Err(ParseError::UndeclaredVariable {
                name: name.to_string(),
                position: start,
            });
        }
        Ok(Expr::Var(name.to_string()))
    }
}
