//! Approximate sets: bisection trees over a root box whose leaves carry a
//! [`Truth`] value.
//!
//! Every node box is obtained from the root by repeatedly halving the widest
//! side (ties to the lowest axis), so any region handed out by
//! [`ApproximateSet::choose`] can later be overwritten exactly with
//! [`ApproximateSet::embed`].
//!
//! Overlap with a query box is measured in the query box's own dimension:
//! axes on which the query is flat contribute a factor of one instead of
//! zero. For full-dimensional queries this is ordinary volume. A leaf is
//! *relevant* to a query when this overlap is positive; because leaf values
//! hold on closed boxes, the relevant leaves alone determine the value on the
//! whole query box.

use std::cmp::Ordering;

use thiserror::Error;

use crate::constraint::Truth;
use crate::interval::{mul_up, Interval, IntervalBox};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxSetError {
    #[error("root box must be bounded with positive width on every axis")]
    DegenerateRoot,
    #[error("non-dyadic embed: region is not reachable by bisection of the root")]
    NonDyadicEmbed,
    #[error("point lies outside the root box")]
    OutsideRoot,
    #[error("dimension mismatch: set has {expected} dimensions, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(Truth),
    Split {
        axis: usize,
        mid: f64,
        left: usize,
        right: usize,
    },
}

/// Decision returned by the callback of [`ApproximateSet::grow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grow {
    Leaf(Truth),
    Split,
}

#[derive(Debug, Clone)]
pub struct ApproximateSet {
    root: IntervalBox,
    nodes: Vec<Node>,
    free: Vec<usize>,
}

const ROOT: usize = 0;

/// Splits on the widest axis at its midpoint; `None` if that axis is too
/// narrow to split.
pub fn split_rule(b: &IntervalBox) -> Option<(usize, f64)> {
    let axis = b.widest_axis();
    b.side(axis).split_point().map(|mid| (axis, mid))
}

impl ApproximateSet {
    /// Everywhere-unknown set on `root`.
    pub fn new_unknown(root: IntervalBox) -> Result<Self, ApproxSetError> {
        Self::uniform(root, Truth::Unknown)
    }

    pub fn uniform(root: IntervalBox, value: Truth) -> Result<Self, ApproxSetError> {
        if !root.is_bounded() || root.sides().iter().any(|s| s.width() <= 0.0) {
            return Err(ApproxSetError::DegenerateRoot);
        }
        Ok(ApproximateSet {
            root,
            nodes: vec![Node::Leaf(value)],
            free: Vec::new(),
        })
    }

    /// Builds a set top-down. `decide` is called on each box with its depth;
    /// asking to split a box that cannot be split yields an unknown leaf.
    pub fn grow(
        root: IntervalBox,
        mut decide: impl FnMut(&IntervalBox, usize) -> Grow,
    ) -> Result<Self, ApproxSetError> {
        let mut set = Self::new_unknown(root)?;
        let root = set.root.clone();
        set.grow_at(ROOT, &root, 0, &mut decide);
        Ok(set)
    }

    fn grow_at(
        &mut self,
        node: usize,
        bx: &IntervalBox,
        depth: usize,
        decide: &mut impl FnMut(&IntervalBox, usize) -> Grow,
    ) {
        match decide(bx, depth) {
            Grow::Leaf(t) => self.nodes[node] = Node::Leaf(t),
            Grow::Split => match split_rule(bx) {
                None => self.nodes[node] = Node::Leaf(Truth::Unknown),
                Some((axis, mid)) => {
                    let (l, r) = self.split_node(node, axis, mid, Truth::Unknown);
                    let (lb, rb) = bx.split_at(axis, mid);
                    self.grow_at(l, &lb, depth + 1, decide);
                    self.grow_at(r, &rb, depth + 1, decide);
                    self.coalesce(node);
                }
            },
        }
    }

    pub fn root(&self) -> &IntervalBox {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.root.dim()
    }

    fn alloc(&mut self, node: Node) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.nodes[i] = node;
                i
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    fn split_node(&mut self, node: usize, axis: usize, mid: f64, value: Truth) -> (usize, usize) {
        let left = self.alloc(Node::Leaf(value));
        let right = self.alloc(Node::Leaf(value));
        self.nodes[node] = Node::Split {
            axis,
            mid,
            left,
            right,
        };
        (left, right)
    }

    fn release(&mut self, node: usize) {
        if let Node::Split { left, right, .. } = self.nodes[node] {
            self.release(left);
            self.release(right);
        }
        self.free.push(node);
    }

    /// Merges two sibling leaves carrying the same definite value. Unknown
    /// siblings stay split: the split records refinement work already done.
    fn coalesce(&mut self, node: usize) -> bool {
        if let Node::Split { left, right, .. } = self.nodes[node] {
            if let (Node::Leaf(a), Node::Leaf(b)) = (self.nodes[left], self.nodes[right]) {
                if a == b && a.is_known() {
                    self.free.push(left);
                    self.free.push(right);
                    self.nodes[node] = Node::Leaf(a);
                    return true;
                }
            }
        }
        false
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.for_each_leaf(|_, _| n += 1);
        n
    }

    /// All leaves in depth-first order (lower child first).
    pub fn leaves(&self) -> Vec<(IntervalBox, Truth)> {
        let mut out = Vec::new();
        self.for_each_leaf(|b, t| out.push((b.clone(), t)));
        out
    }

    pub fn for_each_leaf(&self, mut f: impl FnMut(&IntervalBox, Truth)) {
        let mut stack = vec![(ROOT, self.root.clone())];
        while let Some((node, bx)) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf(t) => f(&bx, t),
                Node::Split {
                    axis,
                    mid,
                    left,
                    right,
                } => {
                    let (lb, rb) = bx.split_at(axis, mid);
                    stack.push((right, rb));
                    stack.push((left, lb));
                }
            }
        }
    }

    /// Visits leaves relevant to `within` together with their overlap
    /// measure. The visitor returns `false` to stop early.
    pub fn visit_relevant(
        &self,
        within: &IntervalBox,
        mut f: impl FnMut(&IntervalBox, Truth, f64) -> bool,
    ) {
        assert_eq!(within.dim(), self.dim(), "query dimension mismatch");
        if within.is_empty() {
            return;
        }
        let mut stack = vec![(ROOT, self.root.clone())];
        while let Some((node, bx)) = stack.pop() {
            let Some(overlap) = overlap_measure(&bx, within) else {
                continue;
            };
            match self.nodes[node] {
                Node::Leaf(t) => {
                    if !f(&bx, t, overlap) {
                        return;
                    }
                }
                Node::Split {
                    axis,
                    mid,
                    left,
                    right,
                } => {
                    let (lb, rb) = bx.split_at(axis, mid);
                    stack.push((right, rb));
                    stack.push((left, lb));
                }
            }
        }
    }

    /// Measure of the unknown part of the set inside `within`.
    pub fn err(&self, within: &IntervalBox) -> f64 {
        let mut total = 0.0;
        self.visit_relevant(within, |_, t, m| {
            if t == Truth::Unknown {
                total += m;
            }
            true
        });
        total
    }

    /// Measure of the part of `within` that lies outside the root box.
    pub fn uncovered(&self, within: &IntervalBox) -> f64 {
        let full = own_measure(within);
        let inside = overlap_measure(&self.root, within).unwrap_or(0.0);
        (full - inside).max(0.0)
    }

    /// Value of the leaf containing `point`; points on a split plane belong
    /// to the lower child.
    pub fn value_at(&self, point: &[f64]) -> Result<Truth, ApproxSetError> {
        if point.len() != self.dim() {
            return Err(ApproxSetError::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        if !self.root.contains(point).unwrap_or(false) {
            return Err(ApproxSetError::OutsideRoot);
        }
        let mut node = ROOT;
        loop {
            match self.nodes[node] {
                Node::Leaf(t) => return Ok(t),
                Node::Split {
                    axis,
                    mid,
                    left,
                    right,
                } => node = if point[axis] <= mid { left } else { right },
            }
        }
    }

    /// The unknown leaf with the largest overlap with `within`; ties go to the
    /// lexicographically smallest lower corner.
    pub fn choose(&self, within: &IntervalBox) -> Option<IntervalBox> {
        let mut best: Option<(IntervalBox, f64)> = None;
        self.visit_relevant(within, |bx, t, m| {
            if t == Truth::Unknown {
                let better = match &best {
                    None => true,
                    Some((b, bm)) => m > *bm || (m == *bm && lex_lower(bx, b) == Ordering::Less),
                };
                if better {
                    best = Some((bx.clone(), m));
                }
            }
            true
        });
        best.map(|(b, _)| b)
    }

    /// Overwrites the set on `region` with `refined`, whose root must be
    /// `region`. Leaves on the way down are split with the bisection rule as
    /// needed; `region` must be one of the boxes this produces.
    pub fn embed(&mut self, refined: &ApproximateSet) -> Result<(), ApproxSetError> {
        let region = refined.root();
        if region.dim() != self.dim() {
            return Err(ApproxSetError::DimensionMismatch {
                expected: self.dim(),
                got: region.dim(),
            });
        }
        let mut path = Vec::new();
        let mut speculative = Vec::new();
        let mut node = ROOT;
        let mut bx = self.root.clone();
        loop {
            if bx == *region {
                break;
            }
            let (axis, mid, left, right) = match self.nodes[node] {
                Node::Split {
                    axis,
                    mid,
                    left,
                    right,
                } => (axis, mid, left, right),
                Node::Leaf(t) => {
                    let splittable = region.is_subset(&bx).unwrap_or(false)
                        .then(|| split_rule(&bx))
                        .flatten();
                    let Some((axis, mid)) = splittable else {
                        for &(n, t) in speculative.iter().rev() {
                            if let Node::Split { left, right, .. } = self.nodes[n] {
                                self.free.push(left);
                                self.free.push(right);
                            }
                            self.nodes[n] = Node::Leaf(t);
                        }
                        return Err(ApproxSetError::NonDyadicEmbed);
                    };
                    let (left, right) = self.split_node(node, axis, mid, t);
                    speculative.push((node, t));
                    (axis, mid, left, right)
                }
            };
            let side = region.side(axis);
            let (lb, rb) = bx.split_at(axis, mid);
            path.push(node);
            if side.hi() <= mid {
                node = left;
                bx = lb;
            } else if side.lo() >= mid {
                node = right;
                bx = rb;
            } else {
                // undo speculative splits so the set is left untouched
                for &(n, t) in speculative.iter().rev() {
                    if let Node::Split { left, right, .. } = self.nodes[n] {
                        self.free.push(left);
                        self.free.push(right);
                    }
                    self.nodes[n] = Node::Leaf(t);
                }
                return Err(ApproxSetError::NonDyadicEmbed);
            }
        }
        if let Node::Split { left, right, .. } = self.nodes[node] {
            self.release(left);
            self.release(right);
        }
        self.copy_from(node, refined, ROOT);
        self.coalesce_path(&path);
        Ok(())
    }

    /// Sets every point of `region` (a dyadic box) to `value`.
    pub fn set_region(&mut self, region: IntervalBox, value: Truth) -> Result<(), ApproxSetError> {
        let patch = ApproximateSet::uniform(region, value)?;
        self.embed(&patch)
    }

    fn copy_from(&mut self, dst: usize, src: &ApproximateSet, src_node: usize) {
        match src.nodes[src_node] {
            Node::Leaf(t) => self.nodes[dst] = Node::Leaf(t),
            Node::Split {
                axis,
                mid,
                left,
                right,
            } => {
                let (l, r) = self.split_node(dst, axis, mid, Truth::Unknown);
                self.copy_from(l, src, left);
                self.copy_from(r, src, right);
                self.coalesce(dst);
            }
        }
    }

    fn coalesce_path(&mut self, path: &[usize]) {
        for &n in path.iter().rev() {
            self.coalesce(n);
        }
    }

    /// Checks the structural invariants; used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut leaf_volume = 0.0;
        let mut err = None;
        let mut stack = vec![(ROOT, self.root.clone())];
        while let Some((node, bx)) = stack.pop() {
            match self.nodes[node] {
                Node::Leaf(_) => leaf_volume += bx.volume(),
                Node::Split {
                    axis,
                    mid,
                    left,
                    right,
                } => {
                    if let (Node::Leaf(a), Node::Leaf(b)) = (self.nodes[left], self.nodes[right]) {
                        if a == b && a.is_known() {
                            err = Some(format!("uncoalesced {a} siblings under {bx}"));
                        }
                    }
                    if !(bx.side(axis).lo() < mid && mid < bx.side(axis).hi()) {
                        err = Some(format!("split point {mid} outside {bx}"));
                    }
                    let (lb, rb) = bx.split_at(axis, mid);
                    stack.push((right, rb));
                    stack.push((left, lb));
                }
            }
        }
        if let Some(e) = err {
            return Err(e);
        }
        let root_volume = self.root.volume();
        let tol = root_volume * 1e-12 * self.dim() as f64;
        if (leaf_volume - root_volume).abs() > tol {
            return Err(format!(
                "leaf volumes sum to {leaf_volume}, root volume is {root_volume}"
            ));
        }
        Ok(())
    }
}

fn lex_lower(a: &IntervalBox, b: &IntervalBox) -> Ordering {
    for (x, y) in a.sides().iter().zip(b.sides()) {
        match x.lo().total_cmp(&y.lo()) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Measure of a box in its own dimension: product of the non-zero widths.
pub fn own_measure(b: &IntervalBox) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    b.sides()
        .iter()
        .filter(|s| !s.is_degenerate())
        .fold(1.0, |acc, s| mul_up(acc, s.width()))
}

/// Overlap of `leaf` with `within`, measured in `within`'s own dimension.
/// `None` when the overlap has measure zero there.
pub fn overlap_measure(leaf: &IntervalBox, within: &IntervalBox) -> Option<f64> {
    let mut m = 1.0;
    for (a, w) in leaf.sides().iter().zip(within.sides()) {
        let i: Interval = a.intersect(w);
        if i.is_empty() {
            return None;
        }
        if w.is_degenerate() {
            continue;
        }
        if i.is_degenerate() {
            return None;
        }
        m = mul_up(m, i.width());
    }
    Some(m)
}
