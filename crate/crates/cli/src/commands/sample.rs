use std::collections::HashMap;

use anyon_core::estimators::{estimate_density, DensityEstimate};
use anyon_core::exact::EXACT_PLAQUETTE_LIMIT;
use anyon_core::sampler::RecordStream;
use anyon_core::{exact_distribution, SampleRecord};
use rayon::prelude::*;
use serde::Serialize;

use super::{default_scales, windows, ChainSpec, ModelSpec, Summary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutputDir, Table};

#[derive(Debug, Clone)]
pub struct Params {
    pub model: ModelSpec,
    pub side: usize,
    pub chain: ChainSpec,
    pub scales: Vec<usize>,
    pub oracle: bool,
}

impl Params {
    pub fn from_config(cfg: &RunConfig, seed: u64) -> CliResult<Self> {
        let side = cfg.get_or("model.side", 8usize)?;
        let p = Self {
            model: ModelSpec::from_config(cfg)?,
            side,
            chain: ChainSpec::from_config(cfg, seed)?,
            scales: cfg.list_or("estimator.scales", &default_scales(side))?,
            oracle: cfg.get_or("oracle.check", false)?,
        };
        if p.oracle && side * side > EXACT_PLAQUETTE_LIMIT {
            return Err(RunConfig::field_error(
                "oracle.check",
                format!("exact comparison needs L² <= {EXACT_PLAQUETTE_LIMIT}"),
            ));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub total_variation: f64,
    pub mean_anyons: f64,
    pub exact_mean_anyons: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub records: usize,
    pub density: Vec<DensityEstimate>,
    pub oracle: Option<OracleReport>,
}

pub struct ChainOutput {
    pub records: Vec<SampleRecord>,
    pub masks: HashMap<u64, u64>,
}

pub fn run_chains(p: &Params) -> CliResult<Vec<ChainOutput>> {
    let model = p.model.build(p.side)?;
    let beta = p.chain.base.beta;
    (0..p.chain.chains)
        .into_par_iter()
        .map(|k| {
            let settings = p.chain.settings(beta, 0, k);
            let mut stream =
                RecordStream::new(&model, &settings, windows(*model.lattice(), &p.scales)?)?;
            let mut records = Vec::new();
            let mut masks = HashMap::new();
            while let Some(r) = stream.next() {
                if !r.energy.is_finite() {
                    return Err(CliError::Numerical(format!(
                        "non-finite energy at sweep {}",
                        r.sweep
                    )));
                }
                if p.oracle {
                    let m = stream.config().to_mask().expect("small lattice");
                    *masks.entry(m).or_insert(0) += 1;
                }
                records.push(r);
            }
            Ok(ChainOutput { records, masks })
        })
        .collect()
}

pub fn run(cfg: &RunConfig, seed: u64, out: &mut OutputDir) -> CliResult<Summary> {
    let p = Params::from_config(cfg, seed)?;
    cfg.reject_unknown()?;
    let chains = run_chains(&p)?;

    let mut header = vec![
        "chain".to_string(),
        "sweep".into(),
        "anyon_count".into(),
        "energy".into(),
    ];
    header.extend(p.scales.iter().map(|l| format!("even_l{l}")));
    header.extend(p.scales.iter().map(|l| format!("even_fraction_l{l}")));
    let mut t = Table::new(header);
    for (k, c) in chains.iter().enumerate() {
        for r in &c.records {
            let mut row = vec![
                k.to_string(),
                r.sweep.to_string(),
                r.anyon_count.to_string(),
                num(r.energy),
            ];
            row.extend(r.parity_even.iter().map(|&b| u8::from(b).to_string()));
            row.extend(r.even_fraction.iter().map(|&f| num(f)));
            t.push(row);
        }
    }
    out.write_table("records.csv", &t)?;

    let plaquettes = p.side * p.side;
    let density = chains
        .iter()
        .filter(|c| c.records.len() >= 2)
        .map(|c| estimate_density(&c.records, plaquettes))
        .collect::<Result<Vec<_>, _>>()?;
    let oracle = if p.oracle {
        let model = p.model.build(p.side)?;
        let exact = exact_distribution(&model, p.chain.base.beta)?;
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for c in &chains {
            for (&m, &n) in &c.masks {
                *counts.entry(m).or_insert(0) += n;
            }
        }
        let total: usize = chains.iter().map(|c| c.records.len()).sum();
        let mean = chains
            .iter()
            .flat_map(|c| &c.records)
            .map(|r| r.anyon_count as f64)
            .sum::<f64>()
            / total.max(1) as f64;
        Some(OracleReport {
            total_variation: exact.total_variation(&counts),
            mean_anyons: mean,
            exact_mean_anyons: exact.mean_anyon_count(),
        })
    } else {
        None
    };
    let summary = SampleSummary {
        records: t.rows.len(),
        density,
        oracle,
    };
    out.write_json("summary.json", &summary)?;

    let mut lines = vec![format!(
        "sample: {} records from {} chain(s)",
        summary.records, p.chain.chains
    )];
    if let Some(o) = &summary.oracle {
        lines.push(format!(
            "oracle: total variation {:.5}, <N> {:.5} (exact {:.5})",
            o.total_variation, o.mean_anyons, o.exact_mean_anyons
        ));
    }
    Ok(lines)
}
