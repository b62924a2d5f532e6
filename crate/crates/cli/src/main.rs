//! `gl2nf`: runs one experiment task from a JSON config and writes
//! `<out>/<table>.csv` plus `<out>/report.txt`.
//!
//! Exit status: 0 when every assertion passes, 1 on an assertion failure,
//! 2 on a configuration error.

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, ExperimentConfig};
use tasks::RunError;

#[derive(Parser, Debug)]
#[command(name = "gl2nf", version, about = "Newform matrix-coefficient and lattice-counting experiments")]
struct Args {
    /// verify-support, decay, exponent, counting, speedup, filtration, dimension, gauss or sweep.
    #[arg(long)]
    task: Option<String>,
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn load(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => config::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(t) = &args.task {
        cfg.task = Some(t.clone());
    }
    if let Some(o) = &args.out {
        cfg.out = o.to_string_lossy().into_owned();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    cfg.task()?;
    Ok(cfg)
}

fn write_outputs(cfg: &ExperimentConfig, out: &tasks::TaskOutput) -> std::io::Result<()> {
    let dir = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(&out.csv_name), &out.csv)?;
    let mut report = out.report.join("\n");
    report.push('\n');
    std::fs::write(dir.join("report.txt"), report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error at `threads`: {e}");
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| tasks::run(&cfg));
    let out = match result {
        Ok(o) => o,
        Err(RunError::Compute(gl2_newform::Error::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    for line in &out.report {
        println!("{line}");
    }
    if let Err(e) = write_outputs(&cfg, &out) {
        eprintln!("cannot write outputs to {}: {e}", cfg.out);
        return ExitCode::from(2);
    }
    if out.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} assertion(s) failed", out.failures.len());
        ExitCode::from(1)
    }
}
