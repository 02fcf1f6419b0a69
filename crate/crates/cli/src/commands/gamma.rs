use anyon_core::estimators::{GammaProfile, LambdaEstimate, NotCrossed, ParityEstimator};
use anyon_core::{EnergyModel, SampleRecord};
use rayon::prelude::*;
use serde::Serialize;

use super::{collect_records, default_scales, ChainSpec, ModelSpec, Summary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutputDir, Table};

/// Options shared by every subcommand that estimates parity profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    /// `None` selects the default grid for each lattice size.
    pub scales: Option<Vec<usize>>,
    pub delta: f64,
    pub parity: ParityEstimator,
}

impl EstimatorSpec {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let delta = cfg.get_or("estimator.delta", 0.05)?;
        if !(delta > 0.0 && delta < 0.5) {
            return Err(RunConfig::field_error(
                "estimator.delta",
                "must lie in (0, 1/2)",
            ));
        }
        let parity = match cfg.choice::<String>("estimator.parity", "anchor")?.as_str() {
            "anchor" => ParityEstimator::Anchor,
            "translation-averaged" => ParityEstimator::TranslationAveraged,
            other => {
                return Err(RunConfig::field_error(
                    "estimator.parity",
                    format!("unknown estimator {other:?} (anchor, translation-averaged)"),
                ))
            }
        };
        Ok(Self {
            scales: cfg.list("estimator.scales")?,
            delta,
            parity,
        })
    }

    pub fn scales_for(&self, side: usize) -> Vec<usize> {
        self.scales.clone().unwrap_or_else(|| default_scales(side))
    }
}

/// Records of all chains of one cell, concatenated in chain order.
pub fn cell_records(
    model: &EnergyModel,
    chain: &ChainSpec,
    beta: f64,
    cell: u64,
    scales: &[usize],
) -> CliResult<Vec<SampleRecord>> {
    let per_chain = (0..chain.chains)
        .into_par_iter()
        .map(|k| collect_records(model, &chain.settings(beta, cell, k), scales))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(per_chain.into_iter().flatten().collect())
}

pub fn gamma_cell(
    model: &EnergyModel,
    chain: &ChainSpec,
    est: &EstimatorSpec,
    beta: f64,
    cell: u64,
) -> CliResult<GammaProfile> {
    let side = model.lattice().side();
    let scales = est.scales_for(side);
    let records = cell_records(model, chain, beta, cell, &scales)?;
    if records.len() < 2 {
        return Err(RunConfig::field_error(
            "chain.sweeps",
            "chain yields fewer than 2 records",
        ));
    }
    Ok(GammaProfile::from_records(
        &records,
        side * side,
        &scales,
        est.parity,
        est.delta,
    )?)
}

pub fn lambda_status(e: &LambdaEstimate) -> &'static str {
    match e {
        LambdaEstimate::Crossed { .. } => "crossed",
        LambdaEstimate::NotCrossed {
            side: NotCrossed::Above,
        } => "not-crossed-above",
        LambdaEstimate::NotCrossed {
            side: NotCrossed::Below,
        } => "not-crossed-below",
    }
}

#[derive(Debug, Clone)]
pub struct Params {
    pub model: ModelSpec,
    pub sides: Vec<usize>,
    pub betas: Vec<f64>,
    pub chain: ChainSpec,
    pub estimator: EstimatorSpec,
}

impl Params {
    pub fn from_config(cfg: &RunConfig, seed: u64) -> CliResult<Self> {
        Ok(Self {
            model: ModelSpec::from_config(cfg)?,
            sides: cfg.list_or("grid.sides", &[16usize])?,
            betas: cfg.list_or("grid.beta", &[1.0])?,
            chain: ChainSpec::from_config(cfg, seed)?,
            estimator: EstimatorSpec::from_config(cfg)?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaCell {
    pub side: usize,
    pub beta: f64,
    pub profile: GammaProfile,
}

pub fn scan(p: &Params) -> CliResult<Vec<GammaCell>> {
    let cells: Vec<(usize, f64)> = p
        .sides
        .iter()
        .flat_map(|&l| p.betas.iter().map(move |&b| (l, b)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(i, &(side, beta))| {
            let model = p.model.build(side)?;
            let profile = gamma_cell(&model, &p.chain, &p.estimator, beta, i as u64)?;
            Ok(GammaCell {
                side,
                beta,
                profile,
            })
        })
        .collect()
}

pub fn summary_table(cells: &[GammaCell]) -> Table {
    let mut t = Table::new([
        "side",
        "beta",
        "samples",
        "block_size",
        "rho",
        "rho_err",
        "lambda",
        "lambda_err",
        "lambda_status",
        "isotonic_applied",
        "non_monotone_beyond_noise",
    ]);
    for c in cells {
        let pr = &c.profile;
        let (lambda, err) = pr
            .lambda
            .estimate
            .value()
            .map_or((String::new(), String::new()), |(l, e)| (num(l), num(e)));
        t.push(vec![
            c.side.to_string(),
            num(c.beta),
            pr.samples.to_string(),
            pr.block_size.to_string(),
            num(pr.density.rho),
            num(pr.density.stderr),
            lambda,
            err,
            lambda_status(&pr.lambda.estimate).to_string(),
            pr.lambda.isotonic_applied.to_string(),
            pr.lambda.non_monotone_beyond_noise.to_string(),
        ]);
    }
    t
}

pub fn run(cfg: &RunConfig, seed: u64, out: &mut OutputDir) -> CliResult<Summary> {
    let p = Params::from_config(cfg, seed)?;
    cfg.reject_unknown()?;
    let cells = scan(&p)?;
    for c in &cells {
        out.write_bytes(
            &format!("gamma_L{}_beta{}.csv", c.side, c.beta),
            c.profile.to_csv().as_bytes(),
        )?;
        out.write_json(
            &format!("gamma_L{}_beta{}.json", c.side, c.beta),
            &c.profile.summary(),
        )?;
    }
    out.write_table("gamma_scan.csv", &summary_table(&cells))?;
    out.write_json("gamma_scan.json", &cells)?;
    if cells
        .iter()
        .any(|c| c.profile.points.iter().any(|g| !g.gamma.is_finite()))
    {
        return Err(CliError::Numerical("non-finite entropy estimate".into()));
    }
    Ok(cells
        .iter()
        .map(|c| {
            format!(
                "L={} beta={}: rho={:.5}±{:.5}, lambda {}",
                c.side,
                c.beta,
                c.profile.density.rho,
                c.profile.density.stderr,
                match c.profile.lambda.estimate.value() {
                    Some((l, e)) => format!("{l:.3}±{e:.3}"),
                    None => lambda_status(&c.profile.lambda.estimate).to_string(),
                }
            )
        })
        .collect())
}
