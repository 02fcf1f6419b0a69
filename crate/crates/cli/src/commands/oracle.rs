//! Equivalence checks against exact enumeration.

use std::collections::HashMap;

use anyon_core::estimators::{conditional_gamma_oracle, ks_distance_discrete};
use anyon_core::sampler::RecordStream;
use anyon_core::stats::blocking;
use anyon_core::{
    exact_distribution, fixed_number_sampler, two_anyon_distance_law, AnnulusPartition,
    ChainSettings, EnergyModel, PairPotential, ParityWindow, TorusLattice,
};
use rayon::prelude::*;
use serde::Serialize;

use super::Summary;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, OutputDir, Table};

/// Total-variation bound between sampled and exact configuration laws.
pub const TV_TOLERANCE: f64 = 0.02;
/// Moments must agree within this many standard errors.
pub const SIGMA_TOLERANCE: f64 = 3.0;
pub const KS_TOLERANCE: f64 = 0.02;

pub fn oracle_potentials() -> [(&'static str, PairPotential); 3] {
    [
        ("none", PairPotential::NonInteracting),
        (
            "power-law",
            PairPotential::PowerLaw {
                amplitude: 1.0,
                exponent: 1.0,
            },
        ),
        ("log", PairPotential::Logarithmic { amplitude: 1.0 }),
    ]
}

/// Sampled and exact statistics of one small-lattice chain.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCell {
    pub side: usize,
    pub potential: String,
    pub beta: f64,
    pub samples: usize,
    pub total_variation: f64,
    pub mean_anyons: f64,
    pub mean_anyons_err: f64,
    pub exact_mean_anyons: f64,
    pub pi: f64,
    pub pi_err: f64,
    pub exact_pi: f64,
}

impl OracleCell {
    pub fn passes(&self) -> bool {
        self.total_variation < TV_TOLERANCE
            && within_sigma(
                self.mean_anyons,
                self.exact_mean_anyons,
                self.mean_anyons_err,
            )
            && within_sigma(self.pi, self.exact_pi, self.pi_err)
    }
}

pub fn within_sigma(x: f64, reference: f64, err: f64) -> bool {
    (x - reference).abs() <= SIGMA_TOLERANCE * err || x == reference
}

/// Run one chain of `samples` records at unit coupling and compare with
/// the exact law. The parity probe is the single plaquette at the origin.
pub fn oracle_cell(
    side: usize,
    name: &str,
    potential: PairPotential,
    beta: f64,
    samples: u64,
    seed: u64,
    stream: u64,
) -> CliResult<OracleCell> {
    let lattice = TorusLattice::new(side)?;
    let model = EnergyModel::new(lattice, 1.0, potential)?;
    let exact = exact_distribution(&model, beta)?;
    let window = ParityWindow::new(lattice, 1, (0, 0))?;
    let settings = ChainSettings {
        beta,
        sweeps: 1000 + samples,
        burn_in: 1000,
        seed,
        stream,
        ..Default::default()
    };
    let mut chain = RecordStream::new(&model, &settings, vec![window])?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut n = Vec::with_capacity(samples as usize);
    let mut even = Vec::with_capacity(samples as usize);
    while let Some(r) = chain.next() {
        *counts
            .entry(chain.config().to_mask().expect("small lattice"))
            .or_insert(0) += 1;
        n.push(r.anyon_count as f64);
        even.push(f64::from(u8::from(r.parity_even[0])));
    }
    let bn = blocking(&n);
    let bp = blocking(&even);
    Ok(OracleCell {
        side,
        potential: name.to_string(),
        beta,
        samples: n.len(),
        total_variation: exact.total_variation(&counts),
        mean_anyons: bn.mean,
        mean_anyons_err: bn.stderr,
        exact_mean_anyons: exact.mean_anyon_count(),
        pi: bp.mean,
        pi_err: bp.stderr,
        exact_pi: exact.parity_probability(&window)?,
    })
}

/// `(conditional, unconditional)` entropies on the `L = 4`, `l = w = 1` partition.
pub fn conditioning_check(potential: PairPotential, beta: f64) -> CliResult<(f64, f64)> {
    let model = EnergyModel::new(TorusLattice::new(4)?, 1.0, potential)?;
    let exact = exact_distribution(&model, beta)?;
    let part = AnnulusPartition::build(4, 1, 1, (1, 1))?;
    let c = conditional_gamma_oracle(&exact, &part)?;
    Ok((c.conditional, c.unconditional))
}

/// KS distance of a fixed two-anyon chain from the exact separation law.
pub fn two_anyon_check(
    side: usize,
    amplitude: f64,
    beta: f64,
    samples: u64,
    seed: u64,
) -> CliResult<f64> {
    let model = EnergyModel::new(
        TorusLattice::new(side)?,
        0.0,
        PairPotential::Logarithmic { amplitude },
    )?;
    let settings = ChainSettings {
        beta,
        sweeps: 100 + samples,
        burn_in: 100,
        seed,
        ..Default::default()
    };
    let d: Vec<f64> = fixed_number_sampler(&model, 2, &settings)?
        .map(|r| r.max_separation)
        .collect();
    Ok(ks_distance_discrete(
        &d,
        &two_anyon_distance_law(&model, beta)?,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: String,
    pub pass: bool,
}

pub fn checks(samples: u64, seed: u64) -> CliResult<Vec<Check>> {
    let mut grid = Vec::new();
    for side in [2usize, 3] {
        for (name, v) in oracle_potentials() {
            for beta in [0.5, 1.0] {
                grid.push((side, name, v, beta));
            }
        }
    }
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(side, name, v, beta))| {
            oracle_cell(side, name, v, beta, samples, seed, i as u64)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = Vec::new();
    for c in &cells {
        let tag = format!("L={} {} beta={}", c.side, c.potential, c.beta);
        out.push(Check {
            name: format!("total variation {tag}"),
            value: c.total_variation,
            reference: 0.0,
            tolerance: format!("< {TV_TOLERANCE}"),
            pass: c.total_variation < TV_TOLERANCE,
        });
        out.push(Check {
            name: format!("mean anyon number {tag}"),
            value: c.mean_anyons,
            reference: c.exact_mean_anyons,
            tolerance: format!("3 x {}", num(c.mean_anyons_err)),
            pass: within_sigma(c.mean_anyons, c.exact_mean_anyons, c.mean_anyons_err),
        });
        out.push(Check {
            name: format!("plaquette parity {tag}"),
            value: c.pi,
            reference: c.exact_pi,
            tolerance: format!("3 x {}", num(c.pi_err)),
            pass: within_sigma(c.pi, c.exact_pi, c.pi_err),
        });
    }
    for (name, v) in oracle_potentials() {
        for beta in [0.5, 1.0] {
            let (cond, uncond) = conditioning_check(v, beta)?;
            out.push(Check {
                name: format!("conditioning inequality L=4 {name} beta={beta}"),
                value: cond,
                reference: uncond,
                tolerance: ">= reference".into(),
                pass: cond >= uncond - 1e-12,
            });
        }
    }
    let ks = two_anyon_check(8, 1.0, 1.0, samples.min(100_000), seed)?;
    out.push(Check {
        name: "two-anyon separation law L=8 log beta=1".into(),
        value: ks,
        reference: 0.0,
        tolerance: format!("< {KS_TOLERANCE}"),
        pass: ks < KS_TOLERANCE,
    });
    Ok(out)
}

pub fn run(cfg: &RunConfig, seed: u64, out: &mut OutputDir) -> CliResult<Summary> {
    let samples: u64 = cfg.get_or("oracle.samples", 1_000_000)?;
    if samples < 2 {
        return Err(RunConfig::field_error(
            "oracle.samples",
            "must be at least 2",
        ));
    }
    cfg.reject_unknown()?;
    let checks = checks(samples, seed)?;
    let mut t = Table::new(["check", "value", "reference", "tolerance", "pass"]);
    for c in &checks {
        t.push(vec![
            c.name.clone(),
            num(c.value),
            num(c.reference),
            c.tolerance.clone(),
            c.pass.to_string(),
        ]);
    }
    out.write_table("oracle.csv", &t)?;
    let lines: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "[{}] {}: {} (reference {}, {})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                num(c.value),
                num(c.reference),
                c.tolerance
            )
        })
        .collect();
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        for l in &lines {
            eprintln!("{l}");
        }
        return Err(CliError::Numerical(format!(
            "{failed} oracle check(s) failed"
        )));
    }
    Ok(lines)
}
