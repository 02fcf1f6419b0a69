//! Experiment runner for the anyon gas simulator: configuration files,
//! subcommands, CSV tables and digest-pinned run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use config::RunConfig;
use error::{CliError, CliResult};
use output::{unix_now, OutputDir, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Meanfield,
    Sample,
    GammaScan,
    Scaling,
    Confinement,
    Boson,
    OracleCheck,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Meanfield => "meanfield",
            Subcommand::Sample => "sample",
            Subcommand::GammaScan => "gamma-scan",
            Subcommand::Scaling => "scaling",
            Subcommand::Confinement => "confinement",
            Subcommand::Boson => "boson",
            Subcommand::OracleCheck => "oracle-check",
        }
    }
}

/// Everything needed to execute one subcommand.
#[derive(Debug)]
pub struct Invocation {
    pub subcommand: Subcommand,
    pub config: Option<PathBuf>,
    pub seed: u64,
    /// Zero uses every available core.
    pub threads: usize,
    pub out: PathBuf,
    pub overrides: Vec<String>,
}

/// Run a subcommand and write its manifest. Inconclusive results still
/// leave their tables and manifest on disk before the error is returned.
pub fn execute(inv: &Invocation) -> CliResult<(Vec<String>, RunManifest)> {
    let mut cfg = match &inv.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for o in &inv.overrides {
        cfg.apply_override(o)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inv.threads)
        .build()
        .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    let started = unix_now();
    let mut out = OutputDir::create(&inv.out)?;
    let seed = inv.seed;
    let result = pool.install(|| {
        use commands::*;
        match inv.subcommand {
            Subcommand::Meanfield => meanfield::run(&cfg, &mut out),
            Subcommand::Sample => sample::run(&cfg, seed, &mut out),
            Subcommand::GammaScan => gamma::run(&cfg, seed, &mut out),
            Subcommand::Scaling => scaling::run(&cfg, seed, &mut out),
            Subcommand::Confinement => confinement::run(&cfg, seed, &mut out),
            Subcommand::Boson => boson::run(&cfg, &mut out),
            Subcommand::OracleCheck => oracle::run(&cfg, seed, &mut out),
        }
    });
    let keep = matches!(
        result,
        Ok(_) | Err(CliError::Inconclusive(_)) | Err(CliError::Numerical(_))
    );
    if !keep || out.files().is_empty() {
        return result.map(|lines| (lines, manifest_stub(inv, &cfg, started)));
    }
    let manifest = out.finish(RunManifest {
        finished_unix: unix_now(),
        ..manifest_stub(inv, &cfg, started)
    })?;
    result.map(|lines| (lines, manifest))
}

fn manifest_stub(inv: &Invocation, cfg: &RunConfig, started: f64) -> RunManifest {
    RunManifest {
        tool: "anyonsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: inv.subcommand.name().into(),
        seed: inv.seed,
        threads: inv.threads,
        parameters: cfg.resolved(),
        started_unix: started,
        finished_unix: started,
        outputs: Vec::new(),
    }
}
