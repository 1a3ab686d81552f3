//! Command-line front end for the gqm library: runs verification campaigns
//! and surface experiments, emitting CSV rows plus a JSON summary.
//!
//! Exit codes: 0 when every checked invariant holds at the configured
//! tolerances, 1 when a violation is found (the violating trial is dumped
//! into the summary), 2 for usage errors (bad flags, bad config file, bad
//! `GQM_TOL_EQ`).

mod campaign;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use campaign::{CampaignSpec, Mode, Outcome};

#[derive(Parser, Debug)]
#[command(
    name = "gqm",
    version,
    about = "Verification campaigns and surface experiments for geometric quantum mechanics"
)]
struct Cli {
    /// Campaign to run
    #[arg(long, value_enum)]
    mode: Option<Mode>,

    /// Hilbert-space dimension for state-space campaigns
    #[arg(long)]
    dim: Option<usize>,

    /// Random trials (rs-verify, point-identity) or perturbation count (invariance)
    #[arg(long)]
    trials: Option<u64>,

    /// Base seed; per-trial seeds are derived from it deterministically
    #[arg(long)]
    seed: Option<u64>,

    /// Value of hbar entering every metric and symplectic quantity
    #[arg(long)]
    hbar: Option<f64>,

    /// Comma-separated grid resolutions; surface-identity runs every level,
    /// the other surface modes use the first entry
    #[arg(long, value_delimiter = ',')]
    grid_n: Option<Vec<usize>>,

    /// Radius of the disk domain used by surface modes
    #[arg(long)]
    grid_radius: Option<f64>,

    /// Degree of the rational curve sample
    #[arg(long)]
    degree: Option<u32>,

    /// Perturbation amplitude (invariance, relax)
    #[arg(long)]
    amplitude: Option<f64>,

    /// Gradient-descent step budget (relax)
    #[arg(long)]
    steps: Option<usize>,

    /// Gradient-descent step size (relax)
    #[arg(long)]
    step_size: Option<f64>,

    /// Directory for the report files; reports go to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// JSON file with campaign parameters; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Use one observable for both slots of each trial (degenerate campaign)
    #[arg(long)]
    same_operator: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match CampaignSpec::resolve(
        cli.mode,
        cli.dim,
        cli.trials,
        cli.seed,
        cli.hbar,
        cli.grid_n,
        cli.grid_radius,
        cli.degree,
        cli.amplitude,
        cli.steps,
        cli.step_size,
        cli.out,
        cli.config.as_deref(),
        cli.same_operator,
    ) {
        Ok(spec) => spec,
        Err(err) => {
            eprintln!("usage error: {err:#}");
            return ExitCode::from(2);
        }
    };
    match campaign::run(&spec) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(err) => {
            eprintln!("campaign failed: {err:#}");
            ExitCode::from(1)
        }
    }
}
