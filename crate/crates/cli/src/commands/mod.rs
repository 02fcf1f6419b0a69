//! Subcommand implementations. Each reads its parameters from a
//! [`RunConfig`], rejects unknown keys, computes, and writes its tables
//! into an [`OutputDir`].

pub mod boson;
pub mod confinement;
pub mod gamma;
pub mod meanfield;
pub mod oracle;
pub mod sample;
pub mod scaling;

use anyon_core::sampler::{MoveMix, RecordStream};
use anyon_core::torus::default_scale_grid;
use anyon_core::{
    ChainSettings, EnergyModel, PairPotential, ParityWindow, SampleRecord, TorusLattice,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Lines printed to stdout after a successful run.
pub type Summary = Vec<String>;

/// Potential family named in `model.potential`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    None,
    PowerLaw,
    Log,
}

impl std::str::FromStr for PotentialKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "power-law" => Ok(Self::PowerLaw),
            "log" => Ok(Self::Log),
            other => Err(format!(
                "unknown potential {other:?} (none, power-law, log)"
            )),
        }
    }
}

/// `[model]` section without the lattice size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub coupling: f64,
    pub kind: PotentialKind,
    pub amplitude: f64,
    pub exponent: f64,
}

impl ModelSpec {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let kind: PotentialKind = cfg.choice("model.potential", "none")?;
        let amplitude = cfg.get_or("model.amplitude", 1.0)?;
        let exponent = cfg.get_or("model.exponent", 1.0)?;
        Ok(Self {
            coupling: cfg.get_or("model.coupling", 1.0)?,
            kind,
            amplitude,
            exponent,
        })
    }

    pub fn potential(&self) -> PairPotential {
        match self.kind {
            PotentialKind::None => PairPotential::NonInteracting,
            PotentialKind::PowerLaw => PairPotential::PowerLaw {
                amplitude: self.amplitude,
                exponent: self.exponent,
            },
            PotentialKind::Log => PairPotential::Logarithmic {
                amplitude: self.amplitude,
            },
        }
    }

    pub fn build(&self, side: usize) -> CliResult<EnergyModel> {
        let lattice =
            TorusLattice::new(side).map_err(|e| RunConfig::field_error("model.side", e))?;
        Ok(EnergyModel::new(lattice, self.coupling, self.potential())?)
    }

    pub fn label(&self) -> String {
        match self.kind {
            PotentialKind::None => "none".into(),
            PotentialKind::PowerLaw => {
                format!("power-law(A={},alpha={})", self.amplitude, self.exponent)
            }
            PotentialKind::Log => format!("log(A={})", self.amplitude),
        }
    }
}

/// `[chain]` section. `beta` and `stream` are filled in per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub base: ChainSettings,
    pub chains: u64,
}

impl ChainSpec {
    pub fn from_config(cfg: &RunConfig, seed: u64) -> CliResult<Self> {
        let d = ChainSettings::default();
        let mix = cfg.list_or(
            "chain.move_mix",
            &[
                d.move_mix.global_pair,
                d.move_mix.local_pair,
                d.move_mix.hop,
            ],
        )?;
        let [global_pair, local_pair, hop] = mix[..] else {
            return Err(RunConfig::field_error(
                "chain.move_mix",
                "expected three weights",
            ));
        };
        let base = ChainSettings {
            beta: cfg.get_or("chain.beta", d.beta)?,
            sweeps: cfg.get_or("chain.sweeps", d.sweeps)?,
            burn_in: cfg.get_or("chain.burn_in", d.burn_in)?,
            thinning: cfg.get_or("chain.thinning", d.thinning)?,
            seed,
            stream: 0,
            move_mix: MoveMix {
                global_pair,
                local_pair,
                hop,
            },
            local_radius: cfg.get_or("chain.local_radius", d.local_radius)?,
            hot_start_sweeps: cfg.get_or("chain.hot_start_sweeps", d.hot_start_sweeps)?,
        };
        let chains = cfg.get_or("chain.chains", 1u64)?;
        if chains == 0 {
            return Err(RunConfig::field_error("chain.chains", "must be at least 1"));
        }
        base.validate()
            .map_err(|e| RunConfig::field_error("chain", e))?;
        Ok(Self { base, chains })
    }

    /// Settings of chain `k` of cell `cell`, with independent streams.
    pub fn settings(&self, beta: f64, cell: u64, k: u64) -> ChainSettings {
        ChainSettings {
            beta,
            stream: cell * self.chains + k,
            ..self.base.clone()
        }
    }
}

/// Window sides probed on an `L x L` torus when none are configured.
pub fn default_scales(side: usize) -> Vec<usize> {
    let grid = default_scale_grid(side);
    if grid.is_empty() {
        vec![1]
    } else {
        grid
    }
}

pub fn windows(lattice: TorusLattice, scales: &[usize]) -> CliResult<Vec<ParityWindow>> {
    scales
        .iter()
        .map(|&l| {
            ParityWindow::new(lattice, l, (0, 0))
                .map_err(|e| RunConfig::field_error("estimator.scales", e))
        })
        .collect()
}

/// All records of one chain.
pub fn collect_records(
    model: &EnergyModel,
    settings: &ChainSettings,
    scales: &[usize],
) -> CliResult<Vec<SampleRecord>> {
    let stream = RecordStream::new(model, settings, windows(*model.lattice(), scales)?)?;
    let records: Vec<SampleRecord> = stream.collect();
    if records.iter().any(|r| !r.energy.is_finite()) {
        return Err(CliError::Numerical("non-finite energy in chain".into()));
    }
    Ok(records)
}
