//! Discrete-time systems with control and perturbation, and their unrolling
//! into constraints over the initial state.
//!
//! Stage `k` state variables are named `<name>@<k>`; stage 0 keeps the plain
//! state names so that the unrolled constraint is over the user's variables.
//! Control and perturbation variables of stage `k` are always suffixed.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::constraint::{CacheId, Constraint};
use crate::expr::{Expr, VecExpr};
use crate::interval::IntervalBox;

/// Per-stage data, either one value used at every stage or an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum Stages<T> {
    Constant(T),
    PerStage(Vec<T>),
}

impl<T> Stages<T> {
    pub fn at(&self, stage: usize) -> &T {
        match self {
            Stages::Constant(v) => v,
            Stages::PerStage(vs) => &vs[stage],
        }
    }

    fn explicit_len(&self) -> Option<usize> {
        match self {
            Stages::Constant(_) => None,
            Stages::PerStage(vs) => Some(vs.len()),
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = &T> + '_> {
        match self {
            Stages::Constant(v) => Box::new(std::iter::once(v)),
            Stages::PerStage(vs) => Box::new(vs.iter()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub state_vars: Vec<String>,
    pub control_vars: Vec<String>,
    pub perturbation_vars: Vec<String>,
    pub horizon: usize,
    /// One component per state variable, over state, control and
    /// perturbation variables.
    pub transition: VecExpr,
    /// Allowed states: conjunctions of `<=` atoms over the state variables,
    /// for stages `0..=horizon`.
    pub allowed: Stages<Vec<Constraint>>,
    /// Control box for stages `0..horizon`, over `control_vars`.
    pub control_domain: Stages<Option<IntervalBox>>,
    /// Perturbation box for stages `0..horizon`, over `perturbation_vars`.
    pub perturbation_domain: Stages<Option<IntervalBox>>,
    pub initial_box: IntervalBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("no state variables")]
    NoStateVars,
    #[error("variable name {0:?} is not a plain identifier")]
    BadName(String),
    #[error("variable {0} declared more than once")]
    DuplicateName(String),
    #[error("transition has {got} components for {expected} state variables")]
    TransitionDimension { expected: usize, got: usize },
    #[error("transition mentions undeclared variable {0}")]
    TransitionVariable(String),
    #[error("allowed-state constraint at stage {stage} must be a <= atom over state variables")]
    AllowedShape { stage: usize },
    #[error("allowed-state constraint at stage {stage} mentions non-state variable {name}")]
    AllowedVariable { stage: usize, name: String },
    #[error("{what} has {got} per-stage entries, expected {expected}")]
    StageCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} at stage {stage} has dimension {got}, expected {expected}")]
    DomainDimension {
        what: &'static str,
        stage: usize,
        expected: usize,
        got: usize,
    },
    #[error("{what} at stage {stage} must be a bounded box")]
    UnboundedDomain { what: &'static str, stage: usize },
    #[error("initial box has dimension {got}, expected {expected}")]
    InitialDimension { expected: usize, got: usize },
    #[error("initial box must be bounded and non-empty")]
    InitialUnbounded,
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub fn stage_name(base: &str, stage: usize) -> String {
    format!("{base}@{stage}")
}

impl DiscreteSystem {
    pub fn validate(&self) -> Result<(), Vec<SystemError>> {
        let mut errors = Vec::new();
        let a = self.state_vars.len();
        if a == 0 {
            errors.push(SystemError::NoStateVars);
        }
        let mut seen = BTreeSet::new();
        for name in self
            .state_vars
            .iter()
            .chain(&self.control_vars)
            .chain(&self.perturbation_vars)
        {
            if !is_identifier(name) {
                errors.push(SystemError::BadName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                errors.push(SystemError::DuplicateName(name.clone()));
            }
        }
        if self.transition.dim() != a {
            errors.push(SystemError::TransitionDimension {
                expected: a,
                got: self.transition.dim(),
            });
        }
        for v in self.transition.variables() {
            if !seen.contains(v.as_str()) {
                errors.push(SystemError::TransitionVariable(v));
            }
        }

        let n = self.horizon;
        let stage_count = |what, stages: Option<usize>, expected, errors: &mut Vec<_>| {
            if let Some(got) = stages {
                if got != expected {
                    errors.push(SystemError::StageCount { what, expected, got });
                    return false;
                }
            }
            true
        };
        if stage_count("allowed", self.allowed.explicit_len(), n + 1, &mut errors) {
            for (stage, atoms) in self.allowed.iter().enumerate() {
                for atom in atoms {
                    if !matches!(atom, Constraint::Le(..)) {
                        errors.push(SystemError::AllowedShape { stage });
                    }
                    for v in atom.free_vars() {
                        if !self.state_vars.contains(&v) {
                            errors.push(SystemError::AllowedVariable { stage, name: v });
                        }
                    }
                }
            }
        }
        for (what, stages, vars) in [
            ("control_domain", &self.control_domain, &self.control_vars),
            (
                "perturbation_domain",
                &self.perturbation_domain,
                &self.perturbation_vars,
            ),
        ] {
            if !stage_count(what, stages.explicit_len(), n, &mut errors) {
                continue;
            }
            for (stage, domain) in stages.iter().enumerate() {
                let got = domain.as_ref().map_or(0, IntervalBox::dim);
                if got != vars.len() {
                    errors.push(SystemError::DomainDimension {
                        what,
                        stage,
                        expected: vars.len(),
                        got,
                    });
                } else if domain.as_ref().is_some_and(|d| !d.is_bounded()) {
                    errors.push(SystemError::UnboundedDomain { what, stage });
                }
            }
        }
        if self.initial_box.dim() != a {
            errors.push(SystemError::InitialDimension {
                expected: a,
                got: self.initial_box.dim(),
            });
        } else if !self.initial_box.is_bounded() {
            errors.push(SystemError::InitialUnbounded);
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    fn state_names(&self, stage: usize) -> Vec<String> {
        if stage == 0 {
            self.state_vars.clone()
        } else {
            self.state_vars.iter().map(|v| stage_name(v, stage)).collect()
        }
    }

    fn renaming(&self, stage: usize) -> HashMap<String, String> {
        let mut map: HashMap<String, String> = self
            .state_vars
            .iter()
            .cloned()
            .zip(self.state_names(stage))
            .collect();
        for v in self.control_vars.iter().chain(&self.perturbation_vars) {
            map.insert(v.clone(), stage_name(v, stage));
        }
        map
    }

    fn allowed_at(&self, stage: usize, state: &HashMap<String, Expr>) -> Vec<Constraint> {
        self.allowed
            .at(stage)
            .iter()
            .map(|atom| match atom {
                Constraint::Le(l, r) => Constraint::le(l.substitute(state), r.substitute(state)),
                other => other.clone(),
            })
            .collect()
    }

    /// Wraps `body` in the stage's `exists u / forall w` prefix.
    fn quantify(&self, stage: usize, body: Constraint) -> Constraint {
        let names = |vars: &[String]| vars.iter().map(|v| stage_name(v, stage)).collect();
        let mut c = body;
        if let Some(w) = self.perturbation_domain.at(stage) {
            c = Constraint::forall(names(&self.perturbation_vars), w.clone(), c);
        }
        if let Some(u) = self.control_domain.at(stage) {
            c = Constraint::exists(names(&self.control_vars), u.clone(), c);
        }
        c
    }

    /// One function-inversion node per transition: each stage constraint
    /// has exactly the stage's state vector free. Cache ids are the index of
    /// the stage the node maps into.
    pub fn unroll_composed(&self) -> Result<Constraint, Vec<SystemError>> {
        self.validate()?;
        let mut inner: Option<Constraint> = None;
        for stage in (0..=self.horizon).rev() {
            let names = self.state_names(stage);
            let identity: HashMap<String, Expr> = self
                .state_vars
                .iter()
                .zip(&names)
                .map(|(v, s)| (v.clone(), Expr::var(s.clone())))
                .collect();
            let mut parts = self.allowed_at(stage, &identity);
            if let Some(next) = inner.take() {
                let map = self
                    .transition
                    .rename_inputs(&self.renaming(stage))
                    .with_outputs(self.state_names(stage + 1));
                let bound = self.state_names(stage + 1);
                let step = Constraint::funcinv(map, bound, next, CacheId(stage as u32 + 1));
                parts.push(self.quantify(stage, step));
            }
            inner = Some(conjoin(parts));
        }
        Ok(inner.expect("horizon loop runs at least once"))
    }

    /// The transition is substituted syntactically into every later allowed
    /// state constraint; no function-inversion nodes.
    pub fn unroll_naive(&self) -> Result<Constraint, Vec<SystemError>> {
        self.validate()?;
        let mut states: Vec<HashMap<String, Expr>> = Vec::with_capacity(self.horizon + 1);
        states.push(
            self.state_vars
                .iter()
                .map(|v| (v.clone(), Expr::var(v.clone())))
                .collect(),
        );
        for stage in 0..self.horizon {
            let mut subst = states[stage].clone();
            for v in self.control_vars.iter().chain(&self.perturbation_vars) {
                subst.insert(v.clone(), Expr::var(stage_name(v, stage)));
            }
            let next = self
                .state_vars
                .iter()
                .zip(self.transition.components())
                .map(|(v, f)| (v.clone(), f.substitute(&subst)))
                .collect();
            states.push(next);
        }
        let mut inner: Option<Constraint> = None;
        for stage in (0..=self.horizon).rev() {
            let mut parts = self.allowed_at(stage, &states[stage]);
            if let Some(next) = inner.take() {
                parts.push(self.quantify(stage, next));
            }
            inner = Some(conjoin(parts));
        }
        Ok(inner.expect("horizon loop runs at least once"))
    }
}

fn conjoin(mut parts: Vec<Constraint>) -> Constraint {
    match parts.len() {
        0 => Constraint::le(Expr::constant(0.0), Expr::constant(0.0)),
        1 => parts.pop().unwrap(),
        _ => Constraint::and(parts),
    }
}

/// The two-state bilinear system used throughout the tests and examples:
/// `f(x1, x2, u, w) = (3*x1*x2 + w*u, 2*x2 + x1)`, states kept in
/// `[-1, 1]^2`, `u` in `[-0.5, 0.5]`, `w` in `[-0.1, 0.1]`.
pub fn demo_system(horizon: usize) -> DiscreteSystem {
    let declared = ["x1", "x2", "u", "w"];
    let transition = VecExpr::parse(
        vec!["x1".into(), "x2".into()],
        &["3*x1*x2 + w*u", "2*x2 + x1"],
        &declared,
    )
    .expect("demo transition parses");
    let allowed = ["-1 <= x1", "x1 <= 1", "-1 <= x2", "x2 <= 1"]
        .iter()
        .flat_map(|s| crate::constraint::parse_inequality(s, &["x1", "x2"]).unwrap())
        .collect();
    let u: crate::expr::Constant = "0.5".parse().unwrap();
    let w: crate::expr::Constant = "0.1".parse().unwrap();
    let w_lo: crate::expr::Constant = "-0.1".parse().unwrap();
    DiscreteSystem {
        state_vars: vec!["x1".into(), "x2".into()],
        control_vars: vec!["u".into()],
        perturbation_vars: vec!["w".into()],
        horizon,
        transition,
        allowed: Stages::Constant(allowed),
        control_domain: Stages::Constant(Some(IntervalBox::from_bounds(&[(
            -u.nearest(),
            u.nearest(),
        )]))),
        perturbation_domain: Stages::Constant(Some(IntervalBox::new(vec![
            crate::interval::Interval::new(w_lo.enclosure().lo(), w.enclosure().hi()),
        ]))),
        initial_box: IntervalBox::from_bounds(&[(-1.0, 1.0), (-1.0, 1.0)]),
    }
}
