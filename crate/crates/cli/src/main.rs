use beltrami_core::runner::{error_json, run, Command, RunConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Dirichlet problems for degenerate Beltrami equations.
#[derive(Parser)]
#[command(name = "beltrami", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Admissibility checks on the dilatation quotient.
    Check {
        #[command(flatten)]
        common: Common,
        /// divergence, log, loglog, fmo, bmo, limsup, calibrated, orlicz or all.
        #[arg(long)]
        criterion: Option<String>,
        /// Orlicz function: exp:a, power:p or tlogq:q.
        #[arg(long)]
        phi: Option<String>,
        /// Number of boundary points.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Principal solution of the Beltrami equation.
    SolveQc {
        #[command(flatten)]
        common: Common,
    },
    /// Regular solution of the Dirichlet problem.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Multivalent solution on an annulus.
    SolveMultivalent {
        #[command(flatten)]
        common: Common,
    },
    /// Oscillation decay of the principal solution at the boundary.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn fail(code: u8, value: serde_json::Value) -> ExitCode {
    eprintln!("{}", serde_json::to_string_pretty(&value).unwrap_or_default());
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, criterion, orlicz, points) = match cli.command {
        Cmd::Check { common, criterion, phi, points } => (Command::Check, common, criterion, phi, points),
        Cmd::SolveQc { common } => (Command::SolveQc, common, None, None, None),
        Cmd::Solve { common } => (Command::Solve, common, None, None, None),
        Cmd::SolveMultivalent { common } => (Command::SolveMultivalent, common, None, None, None),
        Cmd::Verify { common } => (Command::Verify, common, None, None, None),
    };
    let mut cfg = match RunConfig::from_file(&common.config) {
        Ok(c) => c,
        Err(e) => return fail(2, error_json(&e)),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(c) = criterion {
        cfg.criterion = c;
    }
    if orlicz.is_some() {
        cfg.orlicz = orlicz;
    }
    if let Some(p) = points {
        cfg.points = p;
    }
    if let Some(c) = cfg.command {
        if c != command {
            eprintln!("note: config names `{}`, running `{}`", c.name(), command.name());
        }
    }
    let validation = cfg.validate();
    match run(&cfg, command) {
        Ok(summary) => {
            if !common.quiet {
                println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(if validation.is_err() { 2 } else { 1 }, error_json(&e)),
    }
}
