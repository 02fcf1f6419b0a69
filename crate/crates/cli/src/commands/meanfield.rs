use anyon_core::meanfield::{
    boltzmann_density, correlation_range, gamma_single_sector, lambda_scaling_prediction,
    parity_probability, self_consistent_density, sublinear_density, MeanFieldSum, ThermoPoint,
};

use super::{ModelSpec, PotentialKind, Summary};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{num, opt, OutputDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Boltzmann,
    Continuum,
    Lattice,
    Sublinear,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "boltzmann" => Ok(Self::Boltzmann),
            "continuum" => Ok(Self::Continuum),
            "lattice" => Ok(Self::Lattice),
            "sublinear" => Ok(Self::Sublinear),
            other => Err(format!(
                "unknown mode {other:?} (boltzmann, continuum, lattice, sublinear)"
            )),
        }
    }
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Boltzmann => "boltzmann",
            Mode::Continuum => "continuum",
            Mode::Lattice => "lattice",
            Mode::Sublinear => "sublinear",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Params {
    pub model: ModelSpec,
    pub side: usize,
    pub betas: Vec<f64>,
    pub mode: Mode,
    pub c_alpha: f64,
    pub delta: f64,
    pub scales: Vec<usize>,
}

impl Params {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let p = Self {
            model: ModelSpec::from_config(cfg)?,
            side: cfg.get_or("model.side", 64usize)?,
            betas: cfg.list_or("grid.beta", &[1.0])?,
            mode: cfg.choice("meanfield.mode", "boltzmann")?,
            c_alpha: cfg.get_or("meanfield.c_alpha", 1.0)?,
            delta: cfg.get_or("estimator.delta", 0.05)?,
            scales: cfg.list_or("estimator.scales", &[1, 2, 3, 4])?,
        };
        if p.mode != Mode::Boltzmann && p.model.kind != PotentialKind::PowerLaw {
            return Err(RunConfig::field_error(
                "meanfield.mode",
                "interacting modes need model.potential = power-law",
            ));
        }
        let alpha = p.model.exponent;
        match p.mode {
            Mode::Continuum if alpha <= 2.0 => {
                return Err(RunConfig::field_error(
                    "model.exponent",
                    "continuum mode needs alpha > 2",
                ));
            }
            Mode::Sublinear if !(0.0..2.0).contains(&alpha) => {
                return Err(RunConfig::field_error(
                    "model.exponent",
                    "sublinear mode needs 0 <= alpha < 2",
                ));
            }
            _ => {}
        }
        if p.mode != Mode::Boltzmann && p.betas.iter().any(|&b| b <= 0.0) {
            return Err(RunConfig::field_error(
                "grid.beta",
                "interacting modes need beta > 0",
            ));
        }
        if p.betas.iter().any(|&b| !(b >= 0.0) || !b.is_finite()) {
            return Err(RunConfig::field_error(
                "grid.beta",
                "beta must be finite and >= 0",
            ));
        }
        if !(p.delta > 0.0 && p.delta < 0.5) {
            return Err(RunConfig::field_error(
                "estimator.delta",
                "must lie in (0, 1/2)",
            ));
        }
        Ok(p)
    }
}

pub const COLUMNS: [&str; 14] = [
    "beta",
    "coupling",
    "amplitude",
    "exponent",
    "side",
    "mode",
    "rho",
    "residual",
    "correlation_range",
    "lambda_prediction",
    "lambda_exponent",
    "l",
    "pi_p",
    "gamma",
];

/// One row per `(beta, l)` grid point.
pub fn table(p: &Params) -> CliResult<Table> {
    let mut t = Table::new(COLUMNS)
        .comment("rho: density per plaquette; residual: |rho - f(rho)| of the self-consistent solve")
        .comment("correlation_range: side at which P(even) falls to 1 - delta; empty when undefined")
        .comment("lambda_prediction, lambda_exponent: large-L range and its growth exponent (sublinear mode only)")
        .comment("pi_p: P(even anyon number in an l x l block); gamma: 2 (ln 2 - S(pi_p))");
    for &beta in &p.betas {
        let point = ThermoPoint {
            beta,
            coupling: p.model.coupling,
            amplitude: p.model.amplitude,
            exponent: p.model.exponent,
            side: p.side,
        };
        let (rho, residual) = match p.mode {
            Mode::Boltzmann => (boltzmann_density(p.model.coupling, beta), 0.0),
            Mode::Continuum => {
                let r = self_consistent_density(&point, MeanFieldSum::Continuum)?;
                (r.rho, r.residual)
            }
            Mode::Lattice => {
                let r = self_consistent_density(&point, MeanFieldSum::Lattice)?;
                (r.rho, r.residual)
            }
            Mode::Sublinear => (sublinear_density(&point, p.c_alpha)?.rho, 0.0),
        };
        let range = correlation_range(rho, p.delta).ok();
        let prediction = match p.mode {
            Mode::Sublinear => Some(lambda_scaling_prediction(&point, p.c_alpha, p.delta)?),
            _ => None,
        };
        for &l in &p.scales {
            let pi = parity_probability(rho, l);
            t.push(vec![
                num(beta),
                num(p.model.coupling),
                num(p.model.amplitude),
                num(p.model.exponent),
                p.side.to_string(),
                p.mode.name().to_string(),
                num(rho),
                num(residual),
                opt(range),
                opt(prediction.map(|x| x.lambda)),
                opt(prediction.map(|x| x.exponent)),
                l.to_string(),
                num(pi),
                num(gamma_single_sector(pi)),
            ]);
        }
    }
    Ok(t)
}

pub fn run(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Summary> {
    let p = Params::from_config(cfg)?;
    cfg.reject_unknown()?;
    let t = table(&p)?;
    out.write_table("meanfield.csv", &t)?;
    Ok(vec![format!(
        "meanfield: {} rows ({} mode)",
        t.rows.len(),
        p.mode.name()
    )])
}
