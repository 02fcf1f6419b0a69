use anyon_core::meanfield::boson_phase_prediction;
use anyon_core::scaling::{
    density_suppression, fit_power_law, DensitySuppression, FitModel, ScalingFit, ScalingPoint,
};
use anyon_core::{BosonCouplingModel, Phase};
use serde::Serialize;

use super::Summary;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{num, opt, OutputDir, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    /// `J = c T ln(L/2)`
    Log,
    /// `J = kappa L`
    Linear,
}

#[derive(Debug, Clone)]
pub struct Params {
    pub form: Form,
    pub values: Vec<f64>,
    pub temperature: f64,
    pub sides: Vec<usize>,
    pub delta: f64,
}

impl Params {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let form = match cfg.choice::<String>("boson.form", "log")?.as_str() {
            "log" => Form::Log,
            "linear" => Form::Linear,
            other => {
                return Err(RunConfig::field_error(
                    "boson.form",
                    format!("unknown form {other:?} (log, linear)"),
                ))
            }
        };
        let p = Self {
            form,
            values: cfg.list_or("boson.values", &[0.5, 1.0, 2.0, 3.0, 4.0])?,
            temperature: cfg.get_or("boson.temperature", 1.0)?,
            sides: cfg.list_or("boson.sides", &[8usize, 16, 32, 64, 128, 256, 512])?,
            delta: cfg.get_or("estimator.delta", 0.05)?,
        };
        if p.sides.iter().any(|&l| l < 3) {
            return Err(RunConfig::field_error(
                "boson.sides",
                "sizes must be at least 3",
            ));
        }
        if !(p.temperature > 0.0) {
            return Err(RunConfig::field_error(
                "boson.temperature",
                "must be positive",
            ));
        }
        for &v in &p.values {
            model(form, v).map_err(|e| RunConfig::field_error("boson.values", e))?;
        }
        Ok(p)
    }
}

fn model(form: Form, value: f64) -> anyon_core::Result<BosonCouplingModel> {
    match form {
        Form::Log => BosonCouplingModel::log(value),
        Form::Linear => BosonCouplingModel::linear(value),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BosonEntry {
    pub value: f64,
    pub phase: Phase,
    /// Growth exponent of the range over the size grid.
    pub lambda_fit: Option<ScalingFit>,
    /// `c/2` for the logarithmic form.
    pub expected_exponent: Option<f64>,
    pub density: Option<DensitySuppression>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BosonReport {
    pub form: Form,
    pub temperature: f64,
    pub entries: Vec<BosonEntry>,
}

pub fn compute(p: &Params) -> CliResult<(Table, BosonReport)> {
    let mut t = Table::new(["value", "side", "coupling", "rho", "lambda", "phase"]);
    let mut entries = Vec::new();
    for &value in &p.values {
        let m = model(p.form, value)?;
        let mut points = Vec::new();
        let mut dens = Vec::new();
        let mut phase = None;
        for &side in &p.sides {
            let pred = boson_phase_prediction(&m, side, p.temperature, p.delta)?;
            t.push(vec![
                num(value),
                side.to_string(),
                num(pred.coupling),
                num(pred.rho),
                opt(pred.lambda),
                pred.phase.to_string(),
            ]);
            if let Some(lambda) = pred.lambda {
                points.push(ScalingPoint {
                    side,
                    lambda,
                    stderr: 0.0,
                });
            }
            if pred.rho > 0.0 {
                dens.push((side, pred.rho, 0.0));
            }
            phase = Some(pred.phase);
        }
        entries.push(BosonEntry {
            value,
            phase: phase.unwrap_or(Phase::Boundary),
            lambda_fit: fit_power_law(&points, FitModel::PowerLaw).ok(),
            expected_exponent: (p.form == Form::Log).then_some(value / 2.0),
            density: density_suppression(&dens).ok(),
        });
    }
    Ok((
        t,
        BosonReport {
            form: p.form,
            temperature: p.temperature,
            entries,
        },
    ))
}

pub fn run(cfg: &RunConfig, out: &mut OutputDir) -> CliResult<Summary> {
    let p = Params::from_config(cfg)?;
    cfg.reject_unknown()?;
    let (table, report) = compute(&p)?;
    out.write_table("boson.csv", &table)?;
    out.write_json("boson.json", &report)?;
    Ok(report
        .entries
        .iter()
        .map(|e| {
            let fit = e
                .lambda_fit
                .as_ref()
                .map_or("n/a".to_string(), |f| format!("{:.4}", f.exponent));
            format!(
                "boson {:?} {}: {} (lambda exponent {fit})",
                p.form, e.value, e.phase
            )
        })
        .collect())
}
