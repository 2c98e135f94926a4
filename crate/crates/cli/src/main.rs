//! Data emission and numerical checks for the Sturmian cocycle.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid configuration,
//! 3 a computation error. Failures print one JSON record on stderr.

mod commands;
mod config;
mod emit;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{GlobalArgs, RunConfig};
use emit::Output;

#[derive(Debug, Parser)]
#[command(name = "sturmian-cocycle", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Samples of the staircase inverse `h̃(y)` on a uniform grid.
    Staircase {
        #[arg(long, default_value_t = 256)]
        points: usize,
    },
    /// Endpoints and lengths of the first `depth` gaps.
    Gaps {
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// `φ` and `ψ` on a grid, restricted to the first `depth` gaps.
    Phi {
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 4096)]
        points: usize,
    },
    /// Herman's exponent from seeded starts and the identity along `R^{-n}(1/4)`.
    HermanCheck {
        #[arg(long, default_value_t = 1_000_000)]
        iters: usize,
        /// Number of seeded starting points.
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Largest `n` for the identity check.
        #[arg(long, default_value_t = 25)]
        depth: usize,
    },
    /// Norm bound of the chosen family over a grid of `(t, y)`.
    FamilyAudit {
        /// Size of the geometric mesh in `t`.
        #[arg(long, default_value_t = 40)]
        points: usize,
        /// Random base points in addition to 0, 1/4, 1/2, 3/4.
        #[arg(long, default_value_t = 16)]
        samples: usize,
        /// Longest product checked.
        #[arg(long, default_value_t = 1_000)]
        iters: usize,
    },
    /// Gap traversal bound over all `(n, m) ∈ [0, depth]²`.
    #[command(name = "lemma-key")]
    GapTraversal {
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Exponent and `μ(I_0)` of every periodic orbit up to a period.
    Sweep {
        #[arg(long, default_value_t = 14)]
        period_max: usize,
    },
    /// Exponent of the assembled cocycle for the Sturmian measure.
    SturmianExponent {
        #[arg(long, default_value_t = 1_000_000)]
        iters: usize,
        /// Number of seeded Sturmian parameters.
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Steps on which both sides of the reduction are compared.
        #[arg(long, default_value_t = 1_000)]
        points: usize,
    },
    /// Two-symbol example with a bounded cocycle over the full shift.
    DemoShift {
        #[arg(long, default_value_t = 12)]
        depth: u32,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Staircase { .. } => "staircase",
            Command::Gaps { .. } => "gaps",
            Command::Phi { .. } => "phi",
            Command::HermanCheck { .. } => "herman-check",
            Command::FamilyAudit { .. } => "family-audit",
            Command::GapTraversal { .. } => "lemma-key",
            Command::Sweep { .. } => "sweep",
            Command::SturmianExponent { .. } => "sturmian-exponent",
            Command::DemoShift { .. } => "demo-shift",
        }
    }
}

fn run(cfg: &RunConfig, command: &Command) -> anyhow::Result<Output> {
    match *command {
        Command::Staircase { points } => commands::staircase(cfg, points),
        Command::Gaps { depth } => commands::gaps(cfg, depth),
        Command::Phi { depth, points } => commands::phi(cfg, depth, points),
        Command::HermanCheck { iters, points, depth } => commands::herman_check(cfg, iters, points, depth),
        Command::FamilyAudit { points, samples, iters } => commands::family_audit_cmd(cfg, points, samples, iters),
        Command::GapTraversal { depth, samples } => commands::gap_traversal(cfg, depth, samples),
        Command::Sweep { period_max } => commands::sweep_cmd(cfg, period_max),
        Command::SturmianExponent { iters, samples, points } => commands::sturmian(cfg, iters, samples, points),
        Command::DemoShift { depth } => commands::shift(cfg, depth),
    }
}

fn report(command: &str, status: &str, body: serde_json::Value) {
    let mut record = json!({ "status": status, "command": command });
    if let (Some(r), Some(b)) = (record.as_object_mut(), body.as_object()) {
        r.extend(b.clone());
    }
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let cfg = match RunConfig::from_args(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            report(name, "invalid-config", json!({ "error": format!("{e:#}") }));
            return ExitCode::from(2);
        }
    };
    let out = match run(&cfg, &cli.command) {
        Ok(o) => o,
        Err(e) => {
            report(name, "error", json!({ "error": format!("{e:#}") }));
            return ExitCode::from(3);
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &out.body).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", out.body);
            Ok(())
        }
    };
    if let Err(e) = written {
        report(name, "error", json!({ "error": e }));
        return ExitCode::from(3);
    }
    if out.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        report(name, "failed", json!({ "failures": out.failures }));
        ExitCode::from(1)
    }
}
