//! The TOML system document.
//!
//! ```toml
//! state_vars = ["x1", "x2"]
//! control_vars = ["u"]
//! perturbation_vars = ["w"]
//! horizon = 2
//! transition = ["3*x1*x2 + w*u", "2*x2 + x1"]
//! allowed = ["-1 <= x1 <= 1", "-1 <= x2 <= 1"]
//! control_domain = [[-0.5, 0.5]]
//! perturbation_domain = [["-0.1", "0.1"]]
//! initial_box = [[-1, 1], [-1, 1]]
//! ```
//!
//! `allowed`, `control_domain` and `perturbation_domain` may instead be given
//! per stage as one more level of nesting. Bounds are numbers or decimal
//! strings; either way they are read as decimals and rounded outward.

use std::fmt::Write as _;
use std::path::Path;

use robustpave::constraint::parse_inequality;
use robustpave::expr::{Constant, VecExpr};
use robustpave::system::SystemError;
use robustpave::{Constraint, DiscreteSystem, Interval, IntervalBox, Stages};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("invalid system: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<SystemError>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Bound {
    Number(f64),
    Text(String),
}

type Pair = [Bound; 2];

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DomainSpec {
    Constant(Vec<Pair>),
    PerStage(Vec<Vec<Pair>>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum AllowedSpec {
    Constant(Vec<String>),
    PerStage(Vec<Vec<String>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    state_vars: Vec<String>,
    #[serde(default)]
    control_vars: Vec<String>,
    #[serde(default)]
    perturbation_vars: Vec<String>,
    horizon: usize,
    transition: Vec<String>,
    allowed: AllowedSpec,
    control_domain: Option<DomainSpec>,
    perturbation_domain: Option<DomainSpec>,
    initial_box: Vec<Pair>,
}

fn field(name: impl Into<String>, message: impl ToString) -> DocumentError {
    DocumentError::Field {
        field: name.into(),
        message: message.to_string(),
    }
}

fn bound(b: &Bound, upper: bool, at: &str) -> Result<f64, DocumentError> {
    let text = match b {
        Bound::Number(v) if v.is_finite() => format!("{v}"),
        Bound::Number(v) => return Err(field(at, format!("bound {v} is not finite"))),
        Bound::Text(t) => t.trim().to_string(),
    };
    let c: Constant = text.parse().map_err(|m: String| field(at, m))?;
    let e = c.enclosure();
    Ok(if upper { e.hi() } else { e.lo() })
}

fn interval_box(pairs: &[Pair], at: &str) -> Result<IntervalBox, DocumentError> {
    if pairs.is_empty() {
        return Err(field(at, "empty box"));
    }
    let sides = pairs
        .iter()
        .enumerate()
        .map(|(i, [lo, hi])| {
            let at = format!("{at}[{i}]");
            let (lo, hi) = (bound(lo, false, &at)?, bound(hi, true, &at)?);
            Interval::checked(lo, hi).ok_or_else(|| field(&at, format!("lower bound {lo} exceeds upper bound {hi}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IntervalBox::new(sides))
}

fn domain(spec: Option<&DomainSpec>, at: &str) -> Result<Stages<Option<IntervalBox>>, DocumentError> {
    let one = |pairs: &Vec<Pair>, at: &str| -> Result<Option<IntervalBox>, DocumentError> {
        if pairs.is_empty() {
            Ok(None)
        } else {
            interval_box(pairs, at).map(Some)
        }
    };
    Ok(match spec {
        None => Stages::Constant(None),
        Some(DomainSpec::Constant(pairs)) => Stages::Constant(one(pairs, at)?),
        Some(DomainSpec::PerStage(stages)) => Stages::PerStage(
            stages
                .iter()
                .enumerate()
                .map(|(k, p)| one(p, &format!("{at}[{k}]")))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn inequalities(lines: &[String], states: &[&str], at: &str) -> Result<Vec<Constraint>, DocumentError> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let atoms = parse_inequality(line, states).map_err(|e| field(format!("{at}[{i}]"), e))?;
        out.extend(atoms);
    }
    Ok(out)
}

/// Parses and validates a system document.
pub fn parse_system(text: &str) -> Result<DiscreteSystem, DocumentError> {
    let doc: Document = toml::from_str(text).map_err(|e| DocumentError::Syntax(e.to_string()))?;
    let declared: Vec<&str> = doc
        .state_vars
        .iter()
        .chain(&doc.control_vars)
        .chain(&doc.perturbation_vars)
        .map(String::as_str)
        .collect();
    let states: Vec<&str> = doc.state_vars.iter().map(String::as_str).collect();
    if doc.transition.is_empty() {
        return Err(field("transition", "no components"));
    }
    if doc.transition.len() != doc.state_vars.len() {
        return Err(DocumentError::Invalid(vec![SystemError::TransitionDimension {
            expected: doc.state_vars.len(),
            got: doc.transition.len(),
        }]));
    }
    let components = doc
        .transition
        .iter()
        .enumerate()
        .map(|(i, t)| robustpave::expr::parse(t, &declared).map_err(|e| field(format!("transition[{i}]"), e)))
        .collect::<Result<Vec<_>, _>>()?;
    let transition = VecExpr::new(doc.state_vars.clone(), components);
    let allowed = match &doc.allowed {
        AllowedSpec::Constant(lines) => Stages::Constant(inequalities(lines, &states, "allowed")?),
        AllowedSpec::PerStage(stages) => Stages::PerStage(
            stages
                .iter()
                .enumerate()
                .map(|(k, lines)| inequalities(lines, &states, &format!("allowed[{k}]")))
                .collect::<Result<_, _>>()?,
        ),
    };
    let system = DiscreteSystem {
        control_domain: domain(doc.control_domain.as_ref(), "control_domain")?,
        perturbation_domain: domain(doc.perturbation_domain.as_ref(), "perturbation_domain")?,
        initial_box: interval_box(&doc.initial_box, "initial_box")?,
        state_vars: doc.state_vars,
        control_vars: doc.control_vars,
        perturbation_vars: doc.perturbation_vars,
        horizon: doc.horizon,
        transition,
        allowed,
    };
    system.validate().map_err(DocumentError::Invalid)?;
    Ok(system)
}

pub fn load_system(path: &Path) -> Result<DiscreteSystem, DocumentError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocumentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text)
}

/// Shortest decimal whose outward enclosure has `v` as the requested end.
fn bound_text(v: f64, upper: bool) -> String {
    let reads_back = |t: &str| {
        t.parse::<Constant>()
            .map(|c| if upper { c.enclosure().hi() } else { c.enclosure().lo() } == v)
            .unwrap_or(false)
    };
    let shortest = format!("{}", v + 0.0);
    if reads_back(&shortest) {
        return shortest;
    }
    (1..=800)
        .map(|p| format!("{:.*e}", p, v))
        .find(|t| reads_back(t))
        .expect("the exact expansion of a double reads back")
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn string_list(items: impl IntoIterator<Item = String>) -> String {
    let items: Vec<String> = items.into_iter().map(|s| toml_string(&s)).collect();
    format!("[{}]", items.join(", "))
}

fn box_text(b: &IntervalBox) -> String {
    let sides: Vec<String> = b
        .sides()
        .iter()
        .map(|s| format!("[{}, {}]", toml_string(&bound_text(s.lo(), false)), toml_string(&bound_text(s.hi(), true))))
        .collect();
    format!("[{}]", sides.join(", "))
}

fn domain_text(d: &Stages<Option<IntervalBox>>) -> String {
    let one = |b: &Option<IntervalBox>| b.as_ref().map_or("[]".to_string(), box_text);
    match d {
        Stages::Constant(b) => one(b),
        Stages::PerStage(bs) => format!("[{}]", bs.iter().map(one).collect::<Vec<_>>().join(", ")),
    }
}

/// Writes `system` as a document that [`parse_system`] reads back to an
/// equal system.
pub fn print_system(system: &DiscreteSystem) -> String {
    let atoms = |cs: &Vec<Constraint>| string_list(cs.iter().map(ToString::to_string));
    let allowed = match &system.allowed {
        Stages::Constant(cs) => atoms(cs),
        Stages::PerStage(stages) => format!("[{}]", stages.iter().map(atoms).collect::<Vec<_>>().join(", ")),
    };
    let mut out = String::new();
    let _ = writeln!(out, "state_vars = {}", string_list(system.state_vars.clone()));
    let _ = writeln!(out, "control_vars = {}", string_list(system.control_vars.clone()));
    let _ = writeln!(out, "perturbation_vars = {}", string_list(system.perturbation_vars.clone()));
    let _ = writeln!(out, "horizon = {}", system.horizon);
    let _ = writeln!(
        out,
        "transition = {}",
        string_list(system.transition.components().iter().map(ToString::to_string))
    );
    let _ = writeln!(out, "allowed = {allowed}");
    let _ = writeln!(out, "control_domain = {}", domain_text(&system.control_domain));
    let _ = writeln!(out, "perturbation_domain = {}", domain_text(&system.perturbation_domain));
    let _ = writeln!(out, "initial_box = {}", box_text(&system.initial_box));
    out
}
