//! Config-driven batch runner for `idpath`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_config, parse_str, ExperimentConfig, Mode};
pub use run::{run, RunError, RunOutcome};

/// Exit status of a failed run.
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "idpath",
    version,
    about = "Shot noise simulation of infinitely divisible processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Principal truncation X(m, n)
    Simulate(RunArgs),
    /// Assumption checks and statistical diagnostics
    Diagnose(RunArgs),
    /// Empirical against theoretical characteristic function
    Validate(RunArgs),
    /// Small-jump band (m, M]
    Qband(RunArgs),
    /// Out-of-window band
    Rband(RunArgs),
    /// Principal truncation plus Gaussian refinement
    Refine(RunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "quadrature-tol")]
    pub quadrature_tol: Option<f64>,
}

impl Command {
    pub fn split(&self) -> (Mode, &RunArgs) {
        match self {
            Command::Simulate(a) => (Mode::Simulate, a),
            Command::Diagnose(a) => (Mode::Diagnose, a),
            Command::Validate(a) => (Mode::Validate, a),
            Command::Qband(a) => (Mode::Qband, a),
            Command::Rband(a) => (Mode::Rband, a),
            Command::Refine(a) => (Mode::Refine, a),
        }
    }
}

/// Applies command line overrides; the subcommand decides the mode.
pub fn apply_overrides(parsed: &mut config::Parsed, mode: Mode, args: &RunArgs) -> Result<(), config::ConfigErrors> {
    let c = &mut parsed.config;
    if c.mode != mode {
        parsed
            .warnings
            .push(format!("config mode `{}` replaced by subcommand `{mode}`", c.mode));
        c.mode = mode;
    }
    if let Some(seed) = args.seed {
        c.seed = seed;
    }
    if let Some(out) = &args.out {
        c.output.dir = out.clone();
    }
    if let Some(tol) = args.quadrature_tol {
        c.quadrature_tol = Some(tol);
    }
    let errors = config::validate(c);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(config::ConfigErrors(errors))
    }
}

/// Runs one command end to end; failures leave `error.json` and return
/// [`EXIT_FAILURE`].
pub fn execute(command: &Command) -> i32 {
    let (mode, args) = command.split();
    let fallback_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let fail = |dir: &std::path::Path, e: RunError| {
        log::error!("{e}");
        for d in &e.details {
            log::error!("  {d}");
        }
        if let Err(io) = output::write_error(dir, &e.code, &e.message, &e.details) {
            log::error!("could not write error.json: {io}");
        }
        EXIT_FAILURE
    };
    let parsed = parse_config(&args.config).and_then(|mut p| apply_overrides(&mut p, mode, args).map(|_| p));
    let parsed = match parsed {
        Ok(p) => p,
        Err(errs) => {
            let e = RunError {
                code: "CONFIG_INVALID".into(),
                message: format!("{} configuration problem(s)", errs.0.len()),
                details: errs.0,
            };
            return fail(&fallback_dir, e);
        }
    };
    match run(&parsed.config, &parsed.warnings) {
        Ok(_) => 0,
        Err(e) => fail(&parsed.config.output.dir, e),
    }
}
