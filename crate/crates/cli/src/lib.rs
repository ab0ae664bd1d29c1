//! Batch front end: load a system document, solve, write outputs.

pub mod document;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use robustpave::{Mode, Solver, SolverConfig, Truth};
use thiserror::Error;

pub use document::{load_system, parse_system, print_system, DocumentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Unrolling {
    #[default]
    Composed,
    Naive,
}

impl Unrolling {
    fn name(self) -> &'static str {
        match self {
            Unrolling::Composed => "composed",
            Unrolling::Naive => "naive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum RunMode {
    #[default]
    Pave,
    Single,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub system: PathBuf,
    pub mode: RunMode,
    pub target_err: f64,
    /// Defaults to 2^-10 of the widest side of the initial box.
    pub min_width: Option<f64>,
    pub cache_rel_eps: f64,
    pub quantifier_min_width: f64,
    pub unrolling: Unrolling,
    pub memoize: bool,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

impl RunRequest {
    pub fn new(system: impl Into<PathBuf>) -> Self {
        let d = SolverConfig::default();
        RunRequest {
            system: system.into(),
            mode: RunMode::Pave,
            target_err: d.target_err,
            min_width: None,
            cache_rel_eps: d.cache_rel_eps,
            quantifier_min_width: d.quantifier_min_width,
            unrolling: Unrolling::Composed,
            memoize: true,
            csv: None,
            svg: None,
            stats: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Document(DocumentError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot read {0}")]
    Read(String),
    #[error("no certified true box found")]
    NoTrueBox,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Document(_) => 2,
            CliError::NoTrueBox => 3,
            CliError::Write { .. } | CliError::Read(_) => 4,
        }
    }
}

impl From<DocumentError> for CliError {
    fn from(e: DocumentError) -> Self {
        match e {
            DocumentError::Io { .. } => CliError::Read(e.to_string()),
            other => CliError::Document(other),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Runs a request, writing the summary line to `out`.
pub fn run(req: &RunRequest, out: &mut dyn Write) -> Result<(), CliError> {
    let system = load_system(&req.system)?;
    if req.svg.is_some() && system.state_vars.len() != 2 {
        return Err(CliError::Usage("svg requires 2 state variables".into()));
    }
    if req.mode == RunMode::Single && (req.csv.is_some() || req.svg.is_some()) {
        return Err(CliError::Usage("--csv and --svg only apply to pave mode".into()));
    }
    let constraint = match req.unrolling {
        Unrolling::Composed => system.unroll_composed(),
        Unrolling::Naive => system.unroll_naive(),
    }
    .map_err(|e| CliError::Document(DocumentError::Invalid(e)))?;
    let base = SolverConfig::for_domain(&system.initial_box);
    let cfg = SolverConfig {
        target_err: req.target_err,
        min_width: req.min_width.unwrap_or(base.min_width),
        cache_rel_eps: req.cache_rel_eps,
        quantifier_min_width: req.quantifier_min_width,
        mode: match req.mode {
            RunMode::Pave => Mode::Pave,
            RunMode::Single => Mode::SingleTrue,
        },
        memoize: req.memoize,
        ..base
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut solver = Solver::new(&constraint, &system.state_vars, &system.initial_box, cfg)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mode = match req.mode {
        RunMode::Pave => "pave",
        RunMode::Single => "single",
    };
    let mut report = output::StatsReport {
        mode,
        unrolling: req.unrolling.name(),
        horizon: system.horizon,
        target_err: req.target_err,
        err: None,
        measure_true: None,
        measure_false: None,
        found: None,
        stats: &Default::default(),
    };
    let stats;
    let outcome = match req.mode {
        RunMode::Pave => {
            let (paving, s) = solver.pave();
            stats = s;
            report.err = Some(paving.err());
            report.measure_true = Some(paving.measure_of(Truth::True));
            report.measure_false = Some(paving.measure_of(Truth::False));
            if let Some(path) = &req.csv {
                write_file(path, &output::paving_csv(&paving))?;
            }
            if let Some(path) = &req.svg {
                write_file(path, &output::paving_svg(&paving).expect("checked dimension"))?;
            }
            let _ = writeln!(
                out,
                "err {} (T {}, F {}) in {} boxes, {:.3} s",
                paving.err(),
                paving.measure_of(Truth::True),
                paving.measure_of(Truth::False),
                paving.boxes.len(),
                stats.wall_seconds
            );
            Ok(())
        }
        RunMode::Single => {
            let found = solver.find_single_true();
            stats = solver.stats();
            match found {
                Some(bx) => {
                    report.found = Some(bx.sides().iter().map(|s| [s.lo(), s.hi()]).collect());
                    let parts: Vec<String> = system
                        .state_vars
                        .iter()
                        .zip(bx.sides())
                        .map(|(n, s)| format!("{n} in [{}, {}]", output::number(s.lo()), output::number(s.hi())))
                        .collect();
                    let _ = writeln!(out, "{}", parts.join(", "));
                    Ok(())
                }
                None => Err(CliError::NoTrueBox),
            }
        }
    };
    report.stats = &stats;
    if let Some(path) = &req.stats {
        write_file(path, &output::stats_json(&report))?;
    }
    outcome
}
