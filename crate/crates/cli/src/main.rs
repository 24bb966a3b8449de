//! `thirring`: solves, decompositions, norm reports and studies from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (including a study whose verdict is FAIL).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "thirring", version, about = "Massive Thirring model lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve on one diamond and dump fields and lab-frame slices.
    Solve(Common),
    /// Solve, split into linear and bounded parts, and check the mass identity.
    Decompose(Common),
    /// Norm report of one component of a slice or initial-data CSV.
    Norms(NormsArgs),
    /// Run a named study and write its verdict.
    Study(StudyArgs),
}

#[derive(Args, Debug, Clone, Default)]
#[command(allow_negative_numbers = true)]
struct Common {
    /// Config file (`key = value` lines with `[section]` headers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long = "R")]
    radius: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Root directory for artifacts.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct NormsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    s: Option<String>,
    /// psi or phi.
    #[arg(long)]
    component: Option<String>,
    #[arg(long)]
    time: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct StudyArgs {
    name: String,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn resolve(&self, extra: &[(&str, &Option<String>)]) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        let flags = [
            ("data", &self.data),
            ("m", &self.m),
            ("lambda", &self.lambda),
            ("R", &self.radius),
            ("n", &self.n),
            ("scheme", &self.scheme),
            ("tol", &self.tol),
            ("max_iter", &self.max_iter),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        for (key, val) in flags.iter().chain(extra) {
            if let Some(v) = val {
                cfg.set(key, v, &format!("--{key}"))?;
            }
        }
        Ok(cfg)
    }
}

fn init_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("THIRRING_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("THIRRING_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Solve(c) => c.resolve(&[]).map_err(Into::into).and_then(commands::solve),
        Command::Decompose(c) => c.resolve(&[]).map_err(Into::into).and_then(commands::decompose),
        Command::Norms(a) => a
            .common
            .resolve(&[
                ("input", &a.input),
                ("s", &a.s),
                ("component", &a.component),
                ("time", &a.time),
            ])
            .map_err(Into::into)
            .and_then(commands::norms),
        Command::Study(a) => a
            .common
            .resolve(&[])
            .map_err(Into::into)
            .and_then(|cfg| commands::study(&a.name, cfg)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
