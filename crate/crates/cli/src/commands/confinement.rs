//! Two-anyon confinement scan.
//!
//! `confinement.amplitude` is the amplitude of the single-counted pair energy
//! `A ln r`. The energy model sums ordered pairs, so it is built with `A/2`.

use anyon_core::meanfield::confinement_critical_temperature;
use anyon_core::scaling::{
    analytic_confinement_cells, escape_observable, locate_confinement_transition, ConfinementCell,
    ConfinementOutcome,
};
use anyon_core::stats::blocking;
use anyon_core::{
    fixed_number_sampler, two_anyon_distance_law, EnergyModel, PairPotential, TorusLattice,
};
use rayon::prelude::*;
use serde::Serialize;

use super::{ChainSpec, Summary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutputDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    MonteCarlo,
    Exact,
    Analytic,
}

#[derive(Debug, Clone)]
pub struct Params {
    pub source: Source,
    pub amplitude: f64,
    pub sides: Vec<usize>,
    pub temperatures: Vec<f64>,
    pub ratio: f64,
    pub chain: ChainSpec,
}

impl Params {
    pub fn from_config(cfg: &RunConfig, seed: u64) -> CliResult<Self> {
        let source = match cfg.choice::<String>("confinement.source", "mc")?.as_str() {
            "mc" => Source::MonteCarlo,
            "exact" => Source::Exact,
            "analytic" => Source::Analytic,
            other => {
                return Err(RunConfig::field_error(
                    "confinement.source",
                    format!("unknown source {other:?} (mc, exact, analytic)"),
                ))
            }
        };
        let amplitude: f64 = cfg.get_or("confinement.amplitude", 1.0)?;
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(RunConfig::field_error(
                "confinement.amplitude",
                "must be finite and >= 0",
            ));
        }
        let default_t: Vec<f64> = (0..16)
            .map(|i| (0.25 + 0.05 * i as f64) * amplitude.max(f64::MIN_POSITIVE))
            .collect();
        let temperatures: Vec<f64> = cfg.list_or("confinement.temperatures", &default_t)?;
        if temperatures.iter().any(|&t| !(t > 0.0)) {
            return Err(RunConfig::field_error(
                "confinement.temperatures",
                "temperatures must be positive",
            ));
        }
        let ratio: f64 = cfg.get_or("confinement.ratio", 0.25)?;
        if !(ratio > 0.0 && ratio <= 0.5) {
            return Err(RunConfig::field_error(
                "confinement.ratio",
                "must lie in (0, 1/2]",
            ));
        }
        let mut chain = ChainSpec::from_config(cfg, seed)?;
        chain.chains = 1;
        Ok(Self {
            source,
            amplitude,
            sides: cfg.list_or("confinement.sides", &[32usize, 64])?,
            temperatures,
            ratio,
            chain,
        })
    }
}

/// Fixed-number model for two anyons with single-counted amplitude `amplitude`.
pub fn pair_model(side: usize, amplitude: f64) -> CliResult<EnergyModel> {
    let lattice =
        TorusLattice::new(side).map_err(|e| RunConfig::field_error("confinement.sides", e))?;
    Ok(EnergyModel::new(
        lattice,
        0.0,
        PairPotential::Logarithmic {
            amplitude: amplitude / 2.0,
        },
    )?)
}

/// Pair separations of a fixed two-anyon chain.
pub fn pair_distances(
    model: &EnergyModel,
    chain: &ChainSpec,
    beta: f64,
    cell: u64,
) -> CliResult<Vec<f64>> {
    let settings = chain.settings(beta, cell, 0);
    Ok(fixed_number_sampler(model, 2, &settings)?
        .map(|r| r.max_separation)
        .collect())
}

fn cell(p: &Params, side: usize, t: f64, index: u64) -> CliResult<ConfinementCell> {
    let radius = p.ratio * side as f64;
    let model = pair_model(side, p.amplitude)?;
    match p.source {
        Source::MonteCarlo => {
            let d = pair_distances(&model, &p.chain, 1.0 / t, index)?;
            if d.len() < 2 {
                return Err(RunConfig::field_error(
                    "chain.sweeps",
                    "chain yields fewer than 2 records",
                ));
            }
            let inside: Vec<f64> = d
                .iter()
                .map(|&r| f64::from(u8::from(r <= radius + 1e-9)))
                .collect();
            let b = blocking(&inside);
            Ok(ConfinementCell {
                side,
                temperature: t,
                cdf: b.mean,
                stderr: b.stderr,
            })
        }
        Source::Exact => {
            let law = two_anyon_distance_law(&model, 1.0 / t)?;
            let cdf = law
                .iter()
                .filter(|(r, _)| *r <= radius + 1e-9)
                .map(|(_, p)| p)
                .sum();
            Ok(ConfinementCell {
                side,
                temperature: t,
                cdf,
                stderr: 0.0,
            })
        }
        Source::Analytic => Ok(analytic_confinement_cells(&[side], &[t], p.amplitude, p.ratio)?[0]),
    }
}

pub fn cells(p: &Params) -> CliResult<Vec<ConfinementCell>> {
    let grid: Vec<(usize, f64)> = p
        .sides
        .iter()
        .flat_map(|&l| p.temperatures.iter().map(move |&t| (l, t)))
        .collect();
    grid.par_iter()
        .enumerate()
        .map(|(i, &(l, t))| cell(p, l, t, i as u64))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfinementReport {
    pub amplitude: f64,
    pub ratio: f64,
    pub reference: Option<f64>,
    pub outcome: ConfinementOutcome,
}

pub fn cells_table(cells: &[ConfinementCell]) -> Table {
    let mut t = Table::new(["side", "temperature", "cdf", "cdf_err", "escape"]);
    for c in cells {
        t.push(vec![
            c.side.to_string(),
            num(c.temperature),
            num(c.cdf),
            num(c.stderr),
            num(escape_observable(c.cdf, c.side)),
        ]);
    }
    t
}

pub fn run(cfg: &RunConfig, seed: u64, out: &mut OutputDir) -> CliResult<Summary> {
    let p = Params::from_config(cfg, seed)?;
    cfg.reject_unknown()?;
    let cells = cells(&p)?;
    out.write_table("confinement.csv", &cells_table(&cells))?;
    let outcome = locate_confinement_transition(&cells, p.amplitude)?;
    let reference = if p.amplitude > 0.0 {
        Some(confinement_critical_temperature(2, p.amplitude)?.temperature)
    } else {
        None
    };
    let report = ConfinementReport {
        amplitude: p.amplitude,
        ratio: p.ratio,
        reference,
        outcome,
    };
    out.write_json("confinement.json", &report)?;
    match report.outcome {
        ConfinementOutcome::Located { temperature, stderr, reference, relative_error, .. } => Ok(vec![format!(
            "confinement: T_c = {temperature:.4} ± {stderr:.4} (reference {reference}, relative error {:.1}%)",
            100.0 * relative_error
        )]),
        ConfinementOutcome::Inconclusive { reason } => Err(CliError::Inconclusive(reason)),
    }
}
