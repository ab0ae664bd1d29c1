//! Constraint trees and the three-valued truth algebra.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::{BitAnd, BitOr};

use thiserror::Error;

use crate::expr::{self, Expr, ParseError, VecExpr};
use crate::interval::IntervalBox;

/// Kleene truth value of a constraint over a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    /// T∧T = T, F∧x = F, otherwise U.
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }

    pub fn is_known(self) -> bool {
        self != Truth::Unknown
    }

    /// Information order: U below both T and F.
    pub fn refines(self, coarser: Truth) -> bool {
        coarser == Truth::Unknown || self == coarser
    }

    pub fn letter(self) -> char {
        match self {
            Truth::True => 'T',
            Truth::False => 'F',
            Truth::Unknown => 'U',
        }
    }

    pub fn from_letter(c: char) -> Option<Truth> {
        match c {
            'T' => Some(Truth::True),
            'F' => Some(Truth::False),
            'U' => Some(Truth::Unknown),
            _ => None,
        }
    }
}

impl BitAnd for Truth {
    type Output = Truth;

    fn bitand(self, rhs: Truth) -> Truth {
        self.and(rhs)
    }
}

impl BitOr for Truth {
    type Output = Truth;

    fn bitor(self, rhs: Truth) -> Truth {
        self.or(rhs)
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub fn truth_and(a: Truth, b: Truth) -> Truth {
    a.and(b)
}

/// Identifies the memo cache attached to a function-inversion node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheId(pub u32);

impl fmt::Display for CacheId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantifier {
    pub vars: Vec<String>,
    pub domain: IntervalBox,
    pub body: Box<Constraint>,
}

/// `⌊f(inputs) = bound_vars⌋ body`: semantically `body(f(inputs))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncInv {
    pub map: VecExpr,
    pub bound_vars: Vec<String>,
    pub body: Box<Constraint>,
    pub cache_id: CacheId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `lhs <= rhs`
    Le(Expr, Expr),
    And(Vec<Constraint>),
    Exists(Quantifier),
    Forall(Quantifier),
    FuncInv(FuncInv),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("binder {0} shadows an enclosing variable")]
    Shadowing(String),
    #[error("quantifier over {vars} variables has a {domain}-dimensional domain")]
    DomainDimension { vars: usize, domain: usize },
    #[error("funcinv {cache_id}: map has {map} components but {bound} bound variables")]
    FuncInvDimension {
        cache_id: CacheId,
        map: usize,
        bound: usize,
    },
    #[error("funcinv body not closed over bound vars: cache {cache_id} mentions {names:?}")]
    FuncInvNotClosed {
        cache_id: CacheId,
        names: Vec<String>,
    },
    #[error("duplicate cache id {0}")]
    DuplicateCacheId(CacheId),
    #[error("empty conjunction")]
    EmptyConjunction,
}

impl Constraint {
    pub fn le(lhs: Expr, rhs: Expr) -> Self {
        Constraint::Le(lhs, rhs)
    }

    pub fn and(parts: Vec<Constraint>) -> Self {
        Constraint::And(parts)
    }

    pub fn exists(vars: Vec<String>, domain: IntervalBox, body: Constraint) -> Self {
        Constraint::Exists(Quantifier {
            vars,
            domain,
            body: Box::new(body),
        })
    }

    pub fn forall(vars: Vec<String>, domain: IntervalBox, body: Constraint) -> Self {
        Constraint::Forall(Quantifier {
            vars,
            domain,
            body: Box::new(body),
        })
    }

    pub fn funcinv(map: VecExpr, bound_vars: Vec<String>, body: Constraint, cache_id: CacheId) -> Self {
        Constraint::FuncInv(FuncInv {
            map,
            bound_vars,
            body: Box::new(body),
            cache_id,
        })
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Constraint::Le(l, r) => {
                let mut vars = l.variables();
                vars.extend(r.variables());
                vars
            }
            Constraint::And(parts) => parts.iter().flat_map(Constraint::free_vars).collect(),
            Constraint::Exists(q) | Constraint::Forall(q) => {
                let mut vars = q.body.free_vars();
                for v in &q.vars {
                    vars.remove(v);
                }
                vars
            }
            Constraint::FuncInv(fi) => {
                let mut vars = fi.body.free_vars();
                for v in &fi.bound_vars {
                    vars.remove(v);
                }
                vars.extend(fi.map.variables());
                vars
            }
        }
    }

    /// Every error found; empty means well formed.
    pub fn well_formed(&self) -> Result<(), Vec<WellFormedError>> {
        let mut errors = Vec::new();
        let mut ids = HashSet::new();
        let mut scope: Vec<String> = self.free_vars().into_iter().collect();
        self.check(&mut scope, &mut ids, &mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    fn check(
        &self,
        scope: &mut Vec<String>,
        ids: &mut HashSet<CacheId>,
        errors: &mut Vec<WellFormedError>,
    ) {
        match self {
            Constraint::Le(..) => {}
            Constraint::And(parts) => {
                if parts.is_empty() {
                    errors.push(WellFormedError::EmptyConjunction);
                }
                for p in parts {
                    p.check(scope, ids, errors);
                }
            }
            Constraint::Exists(q) | Constraint::Forall(q) => {
                if q.vars.len() != q.domain.dim() {
                    errors.push(WellFormedError::DomainDimension {
                        vars: q.vars.len(),
                        domain: q.domain.dim(),
                    });
                }
                let mark = scope.len();
                bind(&q.vars, scope, errors);
                q.body.check(scope, ids, errors);
                scope.truncate(mark);
            }
            Constraint::FuncInv(fi) => {
                if !ids.insert(fi.cache_id) {
                    errors.push(WellFormedError::DuplicateCacheId(fi.cache_id));
                }
                if fi.map.dim() != fi.bound_vars.len() {
                    errors.push(WellFormedError::FuncInvDimension {
                        cache_id: fi.cache_id,
                        map: fi.map.dim(),
                        bound: fi.bound_vars.len(),
                    });
                }
                let outside: Vec<String> = fi
                    .body
                    .free_vars()
                    .into_iter()
                    .filter(|v| !fi.bound_vars.contains(v))
                    .collect();
                if !outside.is_empty() {
                    errors.push(WellFormedError::FuncInvNotClosed {
                        cache_id: fi.cache_id,
                        names: outside,
                    });
                }
                let mark = scope.len();
                bind(&fi.bound_vars, scope, errors);
                fi.body.check(scope, ids, errors);
                scope.truncate(mark);
            }
        }
    }

    /// Renames binders that shadow an enclosing name, so that every variable
    /// name denotes one binding site along any path.
    pub fn rename_shadowed(&self) -> Constraint {
        let mut scope: Vec<String> = self.free_vars().into_iter().collect();
        let mut counter = 0;
        self.rename_rec(&mut scope, &HashMap::new(), &mut counter)
    }

    fn rename_rec(
        &self,
        scope: &mut Vec<String>,
        renames: &HashMap<String, String>,
        counter: &mut usize,
    ) -> Constraint {
        let fresh_binders = |vars: &[String], scope: &mut Vec<String>, counter: &mut usize| {
            let mut map = renames.clone();
            let mut new_vars = Vec::with_capacity(vars.len());
            for v in vars {
                let name = if scope.contains(v) {
                    loop {
                        *counter += 1;
                        let candidate = format!("{v}#{counter}");
                        if !scope.contains(&candidate) {
                            break candidate;
                        }
                    }
                } else {
                    v.clone()
                };
                map.insert(v.clone(), name.clone());
                scope.push(name.clone());
                new_vars.push(name);
            }
            (new_vars, map)
        };
        match self {
            Constraint::Le(l, r) => Constraint::Le(l.rename(renames), r.rename(renames)),
            Constraint::And(parts) => Constraint::And(
                parts
                    .iter()
                    .map(|p| p.rename_rec(scope, renames, counter))
                    .collect(),
            ),
            Constraint::Exists(q) | Constraint::Forall(q) => {
                let mark = scope.len();
                let (vars, map) = fresh_binders(&q.vars, scope, counter);
                let body = q.body.rename_rec(scope, &map, counter);
                scope.truncate(mark);
                let q = Quantifier {
                    vars,
                    domain: q.domain.clone(),
                    body: Box::new(body),
                };
                if matches!(self, Constraint::Exists(_)) {
                    Constraint::Exists(q)
                } else {
                    Constraint::Forall(q)
                }
            }
            Constraint::FuncInv(fi) => {
                let map_expr = fi.map.rename_inputs(renames);
                let mark = scope.len();
                let (bound, map) = fresh_binders(&fi.bound_vars, scope, counter);
                let body = fi.body.rename_rec(scope, &map, counter);
                scope.truncate(mark);
                Constraint::FuncInv(FuncInv {
                    map: map_expr.with_outputs(bound.clone()),
                    bound_vars: bound,
                    body: Box::new(body),
                    cache_id: fi.cache_id,
                })
            }
        }
    }

    /// Number of atoms.
    pub fn atom_count(&self) -> usize {
        match self {
            Constraint::Le(..) => 1,
            Constraint::And(parts) => parts.iter().map(Constraint::atom_count).sum(),
            Constraint::Exists(q) | Constraint::Forall(q) => q.body.atom_count(),
            Constraint::FuncInv(fi) => fi.body.atom_count(),
        }
    }

    /// Total expression nodes over all atoms.
    pub fn expr_node_count(&self) -> usize {
        match self {
            Constraint::Le(l, r) => l.node_count() + r.node_count(),
            Constraint::And(parts) => parts.iter().map(Constraint::expr_node_count).sum(),
            Constraint::Exists(q) | Constraint::Forall(q) => q.body.expr_node_count(),
            Constraint::FuncInv(fi) => {
                fi.map.components().iter().map(Expr::node_count).sum::<usize>()
                    + fi.body.expr_node_count()
            }
        }
    }

    pub fn cache_ids(&self) -> Vec<CacheId> {
        let mut out = Vec::new();
        self.visit(&mut |c| {
            if let Constraint::FuncInv(fi) = c {
                out.push(fi.cache_id);
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Constraint)) {
        f(self);
        match self {
            Constraint::Le(..) => {}
            Constraint::And(parts) => parts.iter().for_each(|p| p.visit(f)),
            Constraint::Exists(q) | Constraint::Forall(q) => q.body.visit(f),
            Constraint::FuncInv(fi) => fi.body.visit(f),
        }
    }
}

fn bind(vars: &[String], scope: &mut Vec<String>, errors: &mut Vec<WellFormedError>) {
    for v in vars {
        if scope.contains(v) {
            errors.push(WellFormedError::Shadowing(v.clone()));
        }
        scope.push(v.clone());
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Le(l, r) => write!(f, "{l} <= {r}"),
            Constraint::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    match p {
                        Constraint::Le(..) => write!(f, "{p}")?,
                        _ => write!(f, "({p})")?,
                    }
                }
                Ok(())
            }
            Constraint::Exists(q) => write!(f, "exists {} in {}. {}", q.vars.join(","), q.domain, q.body),
            Constraint::Forall(q) => write!(f, "forall {} in {}. {}", q.vars.join(","), q.domain, q.body),
            Constraint::FuncInv(fi) => {
                write!(f, "[")?;
                for (i, c) in fi.map.components().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, " = {}]#{} {}", fi.bound_vars.join(","), fi.cache_id, fi.body)
            }
        }
    }
}

/// Parses a chain of comparisons such as `-1 <= x1 <= 1` or `x >= 0` into
/// `<=` atoms, one per adjacent pair.
pub fn parse_inequality(text: &str, declared: &[&str]) -> Result<Vec<Constraint>, ParseError> {
    let mut pieces: Vec<(usize, &str)> = Vec::new();
    let mut ops: Vec<bool> = Vec::new(); // true for <=, false for >=
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i + 1 < bytes.len() {
        let op = match (bytes[i], bytes[i + 1]) {
            (b'<', b'=') => Some(true),
            (b'>', b'=') => Some(false),
            _ => None,
        };
        if let Some(le) = op {
            pieces.push((start, &text[start..i]));
            ops.push(le);
            i += 2;
            start = i;
        } else {
            i += 1;
        }
    }
    pieces.push((start, &text[start..]));
    if ops.is_empty() {
        return Err(ParseError::Syntax {
            position: 0,
            message: "expected a comparison `<=` or `>=`".into(),
        });
    }
    let exprs = pieces
        .iter()
        .map(|(offset, piece)| {
            expr::parse(piece, declared).map_err(|e| shift(e, *offset))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ops
        .iter()
        .enumerate()
        .map(|(k, &le)| {
            let (a, b) = (exprs[k].clone(), exprs[k + 1].clone());
            if le {
                Constraint::le(a, b)
            } else {
                Constraint::le(b, a)
            }
        })
        .collect())
}

fn shift(e: ParseError, offset: usize) -> ParseError {
    match e {
        ParseError::Syntax { position, message } => ParseError::Syntax {
            position: position + offset,
            message,
        },
        ParseError::UndeclaredVariable { name, position } => ParseError::UndeclaredVariable {
            name,
            position: position + offset,
        },
    }
}
