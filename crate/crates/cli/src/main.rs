//! `emlab`: run an EM experiment from a JSON config and write its artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use emlab::experiment::{execute, parse_config, Command};
use emlab::EmError;
use serde_json::json;

#[derive(Parser)]
#[command(name = "emlab", version, about = "EM experiments for two-component Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Experiment config (JSON). Optional for `kernels` and `verify`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel trials.
    #[arg(long, global = true, env = "EMLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    RunPopulation,
    RunSample,
    Coupled,
    Landscape,
    Kernels,
    Consistency,
    Verify,
}

impl Sub {
    fn command(self) -> Command {
        match self {
            Sub::RunPopulation => Command::RunPopulation,
            Sub::RunSample => Command::RunSample,
            Sub::Coupled => Command::Coupled,
            Sub::Landscape => Command::Landscape,
            Sub::Kernels => Command::Kernels,
            Sub::Consistency => Command::Consistency,
            Sub::Verify => Command::Verify,
        }
    }
}

fn report(kind: &str, message: String, path: Option<String>) -> ExitCode {
    let mut err = json!({ "kind": kind, "message": message });
    if let Some(p) = path {
        err["path"] = json!(p);
    }
    eprintln!("{}", json!({ "error": err }));
    ExitCode::FAILURE
}

fn fail(e: EmError) -> ExitCode {
    let path = match &e {
        EmError::Config { path, .. } => Some(path.clone()),
        _ => None,
    };
    report(e.kind(), e.to_string(), path)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            return report("config_error", "--threads must be at least 1".into(), Some("threads".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report("io_error", e.to_string(), None);
        }
    }

    let wanted = cli.command.command();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return report("io_error", format!("{}: {e}", p.display()), None),
        },
        None => json!({ "command": wanted }).to_string(),
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    if cfg.command != wanted {
        return report(
            "config_error",
            format!("config is for `{}` but `{}` was requested", json!(cfg.command), json!(wanted)).replace('"', ""),
            Some("command".into()),
        );
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match execute(&cfg, &cli.out) {
        Ok(r) => {
            print!("{}", r.stdout);
            for f in &r.files {
                println!("wrote {}", f.display());
            }
            if r.success {
                ExitCode::SUCCESS
            } else {
                report("acceptance_failed", "at least one acceptance criterion failed".into(), None)
            }
        }
        Err(e) => fail(e),
    }
}
