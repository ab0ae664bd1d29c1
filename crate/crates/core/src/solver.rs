//! Three-valued evaluation of constraints on boxes, memoized refinement of
//! function-inversion nodes, and the top-level paver.
//!
//! A [`Solver`] compiles a [`Constraint`] once: variables become slots in a
//! flat interval environment, and every function-inversion node gets a memo
//! cache whose root box is the interval image of the node's map over the
//! whole domain of its inputs. Evaluating such a node on a box computes the
//! image box `Z`, refines the cache on demand until the unknown part of `Z`
//! is small relative to `Z`, and answers with a single truth value for the
//! calling box.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::approxset::{own_measure, split_rule, ApproximateSet, Grow};
use crate::constraint::{CacheId, Constraint, Truth, WellFormedError};
use crate::expr::{Env, EvalError, Expr, SlotExpr};
use crate::interval::{Interval, IntervalBox};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("constraint is not well formed: {0:?}")]
    IllFormed(Vec<WellFormedError>),
    #[error("free variable {0} is not a dimension of the search box")]
    UnknownFreeVariable(String),
    #[error("search box has {box_dim} dimensions but {names} names were given")]
    DomainDimension { box_dim: usize, names: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no cache with id {0}")]
    NoSuchCache(CacheId),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Pave,
    SingleTrue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Paving stops once the unknown volume is at most this (absolute).
    pub target_err: f64,
    /// Boxes whose widest side is at most this are never bisected.
    pub min_width: f64,
    /// A cache query is satisfied once its unknown part is at most this
    /// fraction of the query box.
    pub cache_rel_eps: f64,
    /// Quantifier domains are bisected down to this fraction of their
    /// original width per axis.
    pub quantifier_min_width: f64,
    pub mode: Mode,
    /// When false every cache query starts from an everywhere-unknown set.
    pub memoize: bool,
    /// Bisections allowed per refine call; `None` means twice the cache
    /// dimension.
    pub refine_depth: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            target_err: 0.2,
            min_width: 2.0 / 1024.0,
            cache_rel_eps: 0.25,
            quantifier_min_width: 1.0 / 8.0,
            mode: Mode::Pave,
            memoize: true,
            refine_depth: None,
        }
    }
}

impl SolverConfig {
    /// Defaults with the width floor set to 2^-10 of the widest side of
    /// `domain`.
    pub fn for_domain(domain: &IntervalBox) -> Self {
        let widest = domain.max_width();
        SolverConfig {
            min_width: if widest > 0.0 { widest / 1024.0 } else { 2.0 / 1024.0 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("target_err", self.target_err),
            ("min_width", self.min_width),
            ("cache_rel_eps", self.cache_rel_eps),
            ("quantifier_min_width", self.quantifier_min_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cache_rel_eps >= 1.0 {
            return Err(SolverError::Config("cache_rel_eps must be below 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CacheStats {
    pub refine_calls: u64,
    pub queries: u64,
    pub memo_hits: u64,
    pub leaves: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub atom_evals: u64,
    pub funcinv_evals: u64,
    pub bisections: u64,
    pub caches: BTreeMap<u32, CacheStats>,
    pub boxes_true: usize,
    pub boxes_false: usize,
    pub boxes_unknown: usize,
    pub wall_seconds: f64,
    /// Time spent on cache bookkeeping: err, choose, embed and lookups.
    pub box_handling_seconds: f64,
    /// Time spent inside refine calls (outermost calls only).
    pub refine_seconds: f64,
}

/// A finite partition of a box into labelled sub-boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct Paving {
    pub names: Vec<String>,
    pub domain: IntervalBox,
    pub boxes: Vec<(IntervalBox, Truth)>,
}

impl Paving {
    /// Total measure of the unknown boxes.
    pub fn err(&self) -> f64 {
        self.measure_of(Truth::Unknown)
    }

    pub fn measure_of(&self, truth: Truth) -> f64 {
        self.boxes
            .iter()
            .filter(|(_, t)| *t == truth)
            .fold(0.0, |acc, (b, _)| acc + own_measure(b))
    }

    pub fn count_of(&self, truth: Truth) -> usize {
        self.boxes.iter().filter(|(_, t)| *t == truth).count()
    }

    /// Value at a point: a definite value wins over unknown when the point
    /// sits on a shared face.
    pub fn value_at(&self, point: &[f64]) -> Option<Truth> {
        let mut found = None;
        for (b, t) in &self.boxes {
            if b.contains(point).unwrap_or(false) {
                match (found, *t) {
                    (None, t) | (Some(Truth::Unknown), t) => found = Some(t),
                    _ => {}
                }
            }
        }
        found
    }

    /// Rows sorted by lower corner, lexicographically.
    pub fn sorted(&self) -> Vec<(IntervalBox, Truth)> {
        let mut rows = self.boxes.clone();
        rows.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        rows
    }
}

/// Lexicographic on the lower corner, then on the upper corner.
fn lex_cmp(a: &IntervalBox, b: &IntervalBox) -> Ordering {
    let key = |bx: &IntervalBox| {
        let (lo, hi): (Vec<f64>, Vec<f64>) = bx.sides().iter().map(|s| (s.lo(), s.hi())).unzip();
        lo.into_iter().chain(hi)
    };
    key(a)
        .zip(key(b))
        .map(|(x, y)| x.total_cmp(&y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Truth of `lhs <= rhs` over the bound intervals.
pub fn eval_atom<E: Env<Interval> + ?Sized>(
    lhs: &Expr,
    rhs: &Expr,
    env: &E,
) -> Result<Truth, EvalError> {
    let diff = lhs.eval_interval(env)? - rhs.eval_interval(env)?;
    Ok(sign_truth(diff))
}

#[inline]
fn sign_truth(diff: Interval) -> Truth {
    if diff.hi() <= 0.0 {
        Truth::True
    } else if diff.lo() > 0.0 {
        Truth::False
    } else {
        Truth::Unknown
    }
}

/// Truth of a function-inversion node on a calling box whose image is
/// `z_region`: T (F) if every leaf of `set` relevant to `z_region` is T (F),
/// U otherwise, and U whenever `z_region` leaves the root of `set`.
pub fn prop_funcinv(set: &ApproximateSet, z_region: &IntervalBox) -> Truth {
    if !z_region.is_subset(set.root()).unwrap_or(false) {
        return Truth::Unknown;
    }
    let mut verdict: Option<Truth> = None;
    set.visit_relevant(z_region, |_, t, _| {
        match (verdict, t) {
            (_, Truth::Unknown) => verdict = Some(Truth::Unknown),
            (None, t) => verdict = Some(t),
            (Some(v), t) if v != t => verdict = Some(Truth::Unknown),
            _ => {}
        }
        verdict != Some(Truth::Unknown)
    });
    verdict.unwrap_or(Truth::Unknown)
}

// ---------------------------------------------------------------------------
// compiled form

#[derive(Debug)]
enum Node {
    Le(SlotExpr),
    And(Vec<Node>),
    Quant(QuantNode),
    FuncInv { map: Vec<SlotExpr>, cache: usize },
}

#[derive(Debug)]
struct QuantNode {
    exists: bool,
    slots: Vec<usize>,
    domain: IntervalBox,
    floors: Vec<f64>,
    body: Box<Node>,
}

#[derive(Debug)]
struct CacheDef {
    id: CacheId,
    slots: Vec<usize>,
    body: Node,
}

#[derive(Debug)]
struct Program {
    top: Node,
    caches: Vec<CacheDef>,
}

struct Compiler<'a> {
    cfg: &'a SolverConfig,
    /// (name, slot) pairs currently in scope, innermost last
    scope: Vec<(String, usize)>,
    domains: Vec<Interval>,
    caches: Vec<Option<CacheDef>>,
    roots: Vec<IntervalBox>,
}

impl Compiler<'_> {
    fn fresh(&mut self, name: &str, domain: Interval) -> usize {
        let slot = self.domains.len();
        self.domains.push(domain);
        self.scope.push((name.to_string(), slot));
        slot
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }

    fn expr(&self, e: &Expr) -> Result<SlotExpr, EvalError> {
        e.compile(&|n| self.lookup(n))
    }

    fn compile(&mut self, c: &Constraint) -> Result<Node, SolverError> {
        Ok(match c {
            Constraint::Le(l, r) => Node::Le(self.expr(&Expr::sub(l.clone(), r.clone()))?),
            Constraint::And(parts) => Node::And(
                parts
                    .iter()
                    .map(|p| self.compile(p))
                    .collect::<Result<_, _>>()?,
            ),
            Constraint::Exists(q) | Constraint::Forall(q) => {
                let mark = self.scope.len();
                let slots = q
                    .vars
                    .iter()
                    .zip(q.domain.sides())
                    .map(|(v, d)| self.fresh(v, *d))
                    .collect();
                let floors = q
                    .domain
                    .sides()
                    .iter()
                    .map(|s| s.width() * self.cfg.quantifier_min_width)
                    .collect();
                let body = self.compile(&q.body)?;
                self.scope.truncate(mark);
                Node::Quant(QuantNode {
                    exists: matches!(c, Constraint::Exists(_)),
                    slots,
                    domain: q.domain.clone(),
                    floors,
                    body: Box::new(body),
                })
            }
            Constraint::FuncInv(fi) => {
                let map = fi
                    .map
                    .components()
                    .iter()
                    .map(|e| self.expr(e))
                    .collect::<Result<Vec<_>, _>>()?;
                let image: Vec<Interval> = map.iter().map(|m| m.eval(&self.domains)).collect();
                let root = IntervalBox::new(image.iter().map(|s| inflate_flat(*s)).collect());
                let index = self.caches.len();
                self.caches.push(None);
                self.roots.push(root.clone());
                // the body only sees its bound variables
                let outer = std::mem::take(&mut self.scope);
                let slots = fi
                    .bound_vars
                    .iter()
                    .zip(root.sides())
                    .map(|(v, d)| self.fresh(v, *d))
                    .collect();
                let body = self.compile(&fi.body);
                self.scope = outer;
                self.caches[index] = Some(CacheDef {
                    id: fi.cache_id,
                    slots,
                    body: body?,
                });
                Node::FuncInv { map, cache: index }
            }
        })
    }
}

/// Flat image sides would give a cache root of zero volume; widen them a
/// little so the root can still be bisected on its other axes.
fn inflate_flat(s: Interval) -> Interval {
    if s.width() > 0.0 {
        return s;
    }
    let pad = s.lo().abs().max(1.0) * 1e-9;
    Interval::new(s.lo() - pad, s.hi() + pad)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub id: CacheId,
    pub set: ApproximateSet,
    pub stats: CacheStats,
}

/// Outcome of a memoized cache query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoView {
    pub truth: Truth,
    /// Unknown measure of the cache inside the query box after refinement.
    pub err: f64,
    /// Own measure of the query box.
    pub measure: f64,
    pub refine_calls: u64,
}

pub struct Solver {
    program: Program,
    names: Vec<String>,
    domain: IntervalBox,
    cfg: SolverConfig,
    caches: Vec<CacheEntry>,
    env: Vec<Interval>,
    stats: SolveStats,
    handling: Duration,
    refine_time: Duration,
    refine_nesting: usize,
}

impl Solver {
    /// Compiles `constraint` for solving over `domain`, whose axes are named
    /// by `names`. Shadowing binders are renamed first.
    pub fn new(
        constraint: &Constraint,
        names: &[String],
        domain: &IntervalBox,
        cfg: SolverConfig,
    ) -> Result<Solver, SolverError> {
        cfg.validate()?;
        if names.len() != domain.dim() {
            return Err(SolverError::DomainDimension {
                box_dim: domain.dim(),
                names: names.len(),
            });
        }
        let constraint = constraint.rename_shadowed();
        constraint.well_formed().map_err(SolverError::IllFormed)?;
        if let Some(v) = constraint.free_vars().iter().find(|v| !names.contains(v)) {
            return Err(SolverError::UnknownFreeVariable(v.clone()));
        }
        let mut compiler = Compiler {
            cfg: &cfg,
            scope: Vec::new(),
            domains: Vec::new(),
            caches: Vec::new(),
            roots: Vec::new(),
        };
        for (n, side) in names.iter().zip(domain.sides()) {
            compiler.fresh(n, *side);
        }
        let top = compiler.compile(&constraint)?;
        let slot_count = compiler.domains.len();
        let roots = std::mem::take(&mut compiler.roots);
        let defs: Vec<CacheDef> = compiler.caches.into_iter().map(|c| c.unwrap()).collect();
        let caches = defs
            .iter()
            .zip(roots)
            .map(|(d, root)| CacheEntry {
                id: d.id,
                set: ApproximateSet::new_unknown(root).expect("cache roots are inflated"),
                stats: CacheStats::default(),
            })
            .collect();
        let mut stats = SolveStats::default();
        for d in &defs {
            stats.caches.insert(d.id.0, CacheStats::default());
        }
        Ok(Solver {
            program: Program {
                top,
                caches: defs,
            },
            names: names.to_vec(),
            domain: domain.clone(),
            env: vec![Interval::ZERO; slot_count],
            refine_nesting: 0,
            cfg,
            caches,
            stats,
            handling: Duration::ZERO,
            refine_time: Duration::ZERO,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn domain(&self) -> &IntervalBox {
        &self.domain
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn caches(&self) -> &[CacheEntry] {
        &self.caches
    }

    pub fn cache(&self, id: CacheId) -> Option<&CacheEntry> {
        self.caches.iter().find(|c| c.id == id)
    }

    /// Statistics accumulated so far.
    pub fn stats(&self) -> SolveStats {
        let mut s = self.stats.clone();
        for c in &self.caches {
            let mut cs = c.stats.clone();
            cs.leaves = c.set.leaf_count();
            s.caches.insert(c.id.0, cs);
        }
        s.box_handling_seconds = self.handling.as_secs_f64();
        s.refine_seconds = self.refine_time.as_secs_f64();
        s
    }

    /// Truth of the constraint on a box of the search space.
    pub fn eval_box(&mut self, bx: &IntervalBox) -> Truth {
        assert_eq!(bx.dim(), self.names.len(), "box dimension");
        for (i, side) in bx.sides().iter().enumerate() {
            self.env[i] = *side;
        }
        let program = std::mem::replace(&mut self.program, Program::placeholder());
        let t = self.eval_node(&program, &program.top);
        self.program = program;
        t
    }

    /// Truth of the constraint with the free variables bound by name.
    pub fn eval_env<E: Env<Interval> + ?Sized>(&mut self, env: &E) -> Result<Truth, SolverError> {
        let sides = self
            .names
            .iter()
            .map(|n| env.lookup(n).ok_or_else(|| EvalError::Unbound(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.eval_box(&IntervalBox::new(sides)))
    }

    fn cache_index(&self, id: CacheId) -> Result<usize, SolverError> {
        self.caches
            .iter()
            .position(|c| c.id == id)
            .ok_or(SolverError::NoSuchCache(id))
    }

    /// Approximates the solution set of the body of cache `id` on `bx` with
    /// a bounded branch-and-prune.
    pub fn refine(&mut self, id: CacheId, bx: &IntervalBox) -> Result<ApproximateSet, SolverError> {
        let index = self.cache_index(id)?;
        let program = std::mem::replace(&mut self.program, Program::placeholder());
        let set = self.refine_at(&program, index, bx);
        self.program = program;
        Ok(set)
    }

    /// Memoized query of cache `id` on `z`; see [`MemoView`].
    pub fn refine_memo(&mut self, id: CacheId, z: &IntervalBox) -> Result<MemoView, SolverError> {
        let index = self.cache_index(id)?;
        let program = std::mem::replace(&mut self.program, Program::placeholder());
        let view = self.refine_memo_at(&program, index, z);
        self.program = program;
        Ok(view)
    }

    fn eval_node(&mut self, prog: &Program, node: &Node) -> Truth {
        match node {
            Node::Le(diff) => {
                self.stats.atom_evals += 1;
                sign_truth(diff.eval(&self.env))
            }
            Node::And(parts) => {
                let mut acc = Truth::True;
                for p in parts {
                    acc = acc.and(self.eval_node(prog, p));
                    if acc == Truth::False {
                        break;
                    }
                }
                acc
            }
            Node::Quant(q) => {
                let saved: Vec<Interval> = q.slots.iter().map(|&s| self.env[s]).collect();
                let t = self.eval_quant(prog, q, &q.domain);
                for (&s, v) in q.slots.iter().zip(saved) {
                    self.env[s] = v;
                }
                t
            }
            Node::FuncInv { map, cache } => {
                self.stats.funcinv_evals += 1;
                let z = IntervalBox::new(map.iter().map(|m| m.eval(&self.env)).collect());
                self.refine_memo_at(prog, *cache, &z).truth
            }
        }
    }

    fn eval_quant(&mut self, prog: &Program, q: &QuantNode, d: &IntervalBox) -> Truth {
        for (&s, side) in q.slots.iter().zip(d.sides()) {
            self.env[s] = *side;
        }
        let t = self.eval_node(prog, &q.body);
        if t.is_known() {
            return t;
        }
        let mut axis = None;
        let mut widest = 0.0;
        for (i, side) in d.sides().iter().enumerate() {
            let w = side.width();
            if w > q.floors[i] && w > widest && side.split_point().is_some() {
                axis = Some(i);
                widest = w;
            }
        }
        let Some(axis) = axis else {
            return Truth::Unknown;
        };
        let (lo, hi) = d.bisect(axis).expect("split point checked");
        self.stats.bisections += 1;
        let first = self.eval_quant(prog, q, &lo);
        match (q.exists, first) {
            (true, Truth::True) => return Truth::True,
            (false, Truth::False) => return Truth::False,
            _ => {}
        }
        let second = self.eval_quant(prog, q, &hi);
        if q.exists {
            first.or(second)
        } else {
            first.and(second)
        }
    }

    fn refine_memo_at(&mut self, prog: &Program, index: usize, z: &IntervalBox) -> MemoView {
        let rho = self.cfg.cache_rel_eps;
        let min_width = self.cfg.min_width;
        let measure = own_measure(z);
        self.caches[index].stats.queries += 1;
        let mut scratch = if self.cfg.memoize {
            None
        } else {
            Some(ApproximateSet::new_unknown(self.caches[index].set.root().clone()).unwrap())
        };
        let mut calls = 0;
        let err = loop {
            let started = Instant::now();
            let set = scratch.as_ref().unwrap_or(&self.caches[index].set);
            let err = set.err(z);
            let next = if err > rho * measure {
                set.choose(z).filter(|b| b.max_width() > min_width)
            } else {
                None
            };
            self.handling += started.elapsed();
            let Some(leaf) = next else {
                break err;
            };
            let refined = self.refine_at(prog, index, &leaf);
            calls += 1;
            let started = Instant::now();
            let set = match scratch.as_mut() {
                Some(s) => s,
                None => &mut self.caches[index].set,
            };
            set.embed(&refined).expect("chosen leaves are dyadic");
            self.handling += started.elapsed();
        };
        if calls == 0 {
            self.caches[index].stats.memo_hits += 1;
        }
        let started = Instant::now();
        let truth = prop_funcinv(scratch.as_ref().unwrap_or(&self.caches[index].set), z);
        self.handling += started.elapsed();
        MemoView {
            truth,
            err,
            measure,
            refine_calls: calls,
        }
    }

    fn refine_at(&mut self, prog: &Program, index: usize, bx: &IntervalBox) -> ApproximateSet {
        self.refine_nesting += 1;
        let outermost = self.refine_nesting == 1;
        let started = Instant::now();
        self.caches[index].stats.refine_calls += 1;
        let def = &prog.caches[index];
        let budget = self.cfg.refine_depth.unwrap_or(2 * def.slots.len());
        let min_width = self.cfg.min_width;
        let saved: Vec<Interval> = def.slots.iter().map(|&s| self.env[s]).collect();
        let set = ApproximateSet::grow(bx.clone(), |b, depth| {
            for (&s, side) in def.slots.iter().zip(b.sides()) {
                self.env[s] = *side;
            }
            let t = self.eval_node(prog, &def.body);
            if t.is_known() {
                Grow::Leaf(t)
            } else if depth < budget && b.max_width() > min_width {
                self.stats.bisections += 1;
                Grow::Split
            } else {
                Grow::Leaf(Truth::Unknown)
            }
        })
        .expect("refined boxes are cache leaves");
        for (&s, v) in def.slots.iter().zip(saved) {
            self.env[s] = v;
        }
        self.refine_nesting -= 1;
        if outermost {
            self.refine_time += started.elapsed();
        }
        set
    }

    fn splittable(&self, b: &IntervalBox) -> bool {
        b.max_width() > self.cfg.min_width && split_rule(b).is_some()
    }

    /// Paves the search box until the unknown measure is at most
    /// `target_err` or every unknown box is at the width floor. Unknown
    /// boxes are processed largest first.
    pub fn pave(&mut self) -> (Paving, SolveStats) {
        let started = Instant::now();
        let mut done: Vec<(IntervalBox, Truth)> = Vec::new();
        let mut queue = BinaryHeap::new();
        let mut err = 0.0;
        let root = self.domain.clone();
        let t = self.eval_box(&root);
        if t == Truth::Unknown {
            err += own_measure(&root);
            queue.push(Pending::new(root));
        } else {
            done.push((root, t));
        }
        while err > self.cfg.target_err {
            let Some(Pending { bx, measure, .. }) = queue.pop() else {
                break;
            };
            if !self.splittable(&bx) {
                done.push((bx, Truth::Unknown));
                continue;
            }
            let (axis, mid) = split_rule(&bx).expect("checked splittable");
            self.stats.bisections += 1;
            err -= measure;
            let (l, r) = bx.split_at(axis, mid);
            for child in [l, r] {
                let t = self.eval_box(&child);
                if t == Truth::Unknown {
                    let p = Pending::new(child);
                    err += p.measure;
                    queue.push(p);
                } else {
                    done.push((child, t));
                }
            }
        }
        done.extend(queue.into_iter().map(|p| (p.bx, Truth::Unknown)));
        let paving = Paving {
            names: self.names.clone(),
            domain: self.domain.clone(),
            boxes: done,
        };
        self.stats.wall_seconds += started.elapsed().as_secs_f64();
        let mut stats = self.stats();
        stats.boxes_true = paving.count_of(Truth::True);
        stats.boxes_false = paving.count_of(Truth::False);
        stats.boxes_unknown = paving.count_of(Truth::Unknown);
        (paving, stats)
    }

    /// Best-first search for one box on which the constraint is certainly
    /// true. Larger boxes are tried first.
    pub fn find_single_true(&mut self) -> Option<IntervalBox> {
        let started = Instant::now();
        let mut queue = BinaryHeap::new();
        queue.push(Pending::new(self.domain.clone()));
        let mut found = None;
        while let Some(Pending { bx, .. }) = queue.pop() {
            match self.eval_box(&bx) {
                Truth::True => {
                    found = Some(bx);
                    break;
                }
                Truth::False => {}
                Truth::Unknown => {
                    if self.splittable(&bx) {
                        let (axis, mid) = split_rule(&bx).expect("checked splittable");
                        self.stats.bisections += 1;
                        let (l, r) = bx.split_at(axis, mid);
                        queue.push(Pending::new(l));
                        queue.push(Pending::new(r));
                    }
                }
            }
        }
        self.stats.wall_seconds += started.elapsed().as_secs_f64();
        found
    }
}

impl Program {
    fn placeholder() -> Program {
        Program {
            top: Node::And(Vec::new()),
            caches: Vec::new(),
        }
    }
}

/// Work-list entry ordered by measure (largest first), then by lower corner.
struct Pending {
    bx: IntervalBox,
    measure: f64,
}

impl Pending {
    fn new(bx: IntervalBox) -> Self {
        Pending {
            measure: own_measure(&bx),
            bx,
        }
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: larger measure first, then smaller corner
        self.measure
            .total_cmp(&other.measure)
            .then_with(|| lex_cmp(&other.bx, &self.bx))
    }
}
