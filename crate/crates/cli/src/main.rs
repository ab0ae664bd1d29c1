use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use robustpave_cli::{run, RunMode, RunRequest, Unrolling};

/// Paves the robust feasible initial set of a discrete-time system.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// System document (TOML).
    system: PathBuf,
    #[arg(long, value_enum, default_value_t = RunMode::Pave)]
    mode: RunMode,
    /// Target measure of the unknown region.
    #[arg(long, default_value_t = 0.2)]
    error: f64,
    /// Boxes at most this wide are not bisected [default: 2^-10 of the widest initial side].
    #[arg(long)]
    min_width: Option<f64>,
    /// Cache queries stop refining once their unknown part is this fraction of the query.
    #[arg(long, default_value_t = 0.25)]
    cache_eps: f64,
    /// Quantifier domains are bisected down to this fraction of their width.
    #[arg(long, default_value_t = 0.125)]
    quantifier_min_width: f64,
    #[arg(long, value_enum, default_value_t = Unrolling::Composed)]
    unrolling: Unrolling,
    /// Answer every cache query from scratch.
    #[arg(long)]
    no_memo: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Statistics as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let req = RunRequest {
        system: args.system,
        mode: args.mode,
        target_err: args.error,
        min_width: args.min_width,
        cache_rel_eps: args.cache_eps,
        quantifier_min_width: args.quantifier_min_width,
        unrolling: args.unrolling,
        memoize: !args.no_memo,
        csv: args.csv,
        svg: args.svg,
        stats: args.stats,
    };
    match run(&req, &mut std::io::stdout()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("robustpave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
