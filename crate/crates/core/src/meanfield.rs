//! Closed-form analytics: anyon densities, region parity probabilities,
//! anyonic topological entropy, correlation range, the two-anyon
//! confinement law and the boson-coupling phase map.
//!
//! Natural logarithms throughout.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::energy::{BosonCouplingModel, EnergyModel, PairPotential};
use crate::error::{domain, Error, Result};
use crate::scaling::Phase;
use crate::torus::TorusLattice;

/// Thermodynamic point for analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoPoint {
    pub beta: f64,
    /// Per-anyon cost `J`.
    pub coupling: f64,
    /// Interaction amplitude `A`.
    pub amplitude: f64,
    /// Power-law exponent `alpha`.
    pub exponent: f64,
    pub side: usize,
}

impl ThermoPoint {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return domain(format!("beta must be positive and finite, got {}", self.beta));
        }
        if self.side < 2 {
            return domain(format!("L must be at least 2, got {}", self.side));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMode {
    Boltzmann,
    SelfConsistentContinuum,
    SelfConsistentLattice,
    Sublinear,
}

/// How the interaction energy per anyon is evaluated in the self-consistent solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanFieldSum {
    /// `2 pi A rho / (alpha - 2)`, the plane integral from `r = 1`.
    Continuum,
    /// `2 rho Σ_{p' != p} V(r)` summed exactly over the torus.
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldResult {
    pub rho: f64,
    pub mode: DensityMode,
    /// `|rho - f(rho)|` for the self-consistent modes, zero otherwise.
    pub residual: f64,
}

/// Independent-plaquette occupation probability `(e^{beta J} + 1)^-1`.
pub fn boltzmann_density(coupling: f64, beta: f64) -> f64 {
    1.0 / ((coupling * beta).exp() + 1.0)
}

const MAX_FIXED_POINT_ITERATIONS: usize = 500;
const RESIDUAL_TARGET: f64 = 1e-12;

/// Solve `rho = (e^{beta (J + eps(rho))} + 1)^-1` for a repulsive power law.
pub fn self_consistent_density(point: &ThermoPoint, sum: MeanFieldSum) -> Result<MeanFieldResult> {
    point.validate()?;
    let ThermoPoint { beta, coupling, amplitude, exponent, side } = *point;
    if !(amplitude >= 0.0) {
        return domain(format!("self-consistent density needs A >= 0, got {amplitude}"));
    }
    // Interaction energy per anyon per unit density.
    let slope = match sum {
        MeanFieldSum::Continuum => {
            if !(exponent > 2.0) {
                return domain(format!(
                    "continuum interaction energy diverges for alpha <= 2 (alpha = {exponent})"
                ));
            }
            2.0 * PI * amplitude / (exponent - 2.0)
        }
        MeanFieldSum::Lattice => {
            let model = EnergyModel::new(
                TorusLattice::new(side)?,
                coupling,
                PairPotential::PowerLaw { amplitude, exponent },
            )?;
            2.0 * model.lattice_potential_sum()
        }
    };
    let mode = match sum {
        MeanFieldSum::Continuum => DensityMode::SelfConsistentContinuum,
        MeanFieldSum::Lattice => DensityMode::SelfConsistentLattice,
    };
    let f = |rho: f64| boltzmann_density(coupling + slope * rho, beta);
    let g = |rho: f64| rho - f(rho);

    let mut rho = f(0.0);
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        let next = 0.5 * rho + 0.5 * f(rho);
        if (next - rho).abs() < 1e-15 {
            rho = next;
            break;
        }
        rho = next;
    }
    if !(g(rho).abs() < RESIDUAL_TARGET) {
        // g is increasing with g(0) < 0 < g(1).
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        rho = if g(lo).abs() < g(hi).abs() { lo } else { hi };
    }
    let residual = g(rho).abs();
    if !(residual < RESIDUAL_TARGET) || !rho.is_finite() {
        return Err(Error::Numerical(format!(
            "self-consistent density did not converge: rho = {rho}, residual = {residual:e}"
        )));
    }
    Ok(MeanFieldResult { rho, mode, residual })
}

/// Mean-field density for `0 <= alpha < 2`:
/// `rho = (2 - alpha) ln L / (c_alpha beta A L^{2 - alpha})`.
pub fn sublinear_density(point: &ThermoPoint, c_alpha: f64) -> Result<MeanFieldResult> {
    point.validate()?;
    let ThermoPoint { beta, amplitude, exponent, side, .. } = *point;
    if !(0.0..2.0).contains(&exponent) {
        return domain(format!("sublinear density needs 0 <= alpha < 2, got {exponent}"));
    }
    if !(c_alpha > 0.0) {
        return domain(format!("c_alpha must be positive, got {c_alpha}"));
    }
    if !(amplitude > 0.0) {
        return domain(format!("sublinear density needs A > 0, got {amplitude}"));
    }
    if side < 3 {
        return domain(format!("sublinear density needs L >= 3, got {side}"));
    }
    let l = side as f64;
    let rho = (2.0 - exponent) * l.ln() / (c_alpha * beta * amplitude * l.powf(2.0 - exponent));
    if !(rho < 1.0) {
        return domain(format!("sublinear density {rho} is not a probability at L = {side}"));
    }
    Ok(MeanFieldResult { rho, mode: DensityMode::Sublinear, residual: 0.0 })
}

/// Probability of an even number of anyons in an `l x l` block of
/// independently occupied plaquettes.
pub fn parity_probability(rho: f64, l: usize) -> f64 {
    let area = (l * l) as i32;
    0.5 * (1.0 + (1.0 - 2.0 * rho).powi(area))
}

/// [`parity_probability`] for real `l`; needs `rho <= 1/2`.
pub fn parity_probability_continuous(rho: f64, l: f64) -> f64 {
    0.5 * (1.0 + (1.0 - 2.0 * rho).powf(l * l))
}

/// Binary Shannon entropy with `0 ln 0 = 0`.
pub fn shannon_entropy(pi: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.ln() };
    (h(pi) + h(1.0 - pi)).clamp(0.0, LN_2)
}

/// `2 ln 2 - S(pi_P) - S(pi_V)`.
pub fn gamma_from_parity(pi_p: f64, pi_v: f64) -> f64 {
    (2.0 * LN_2 - shannon_entropy(pi_p) - shannon_entropy(pi_v)).clamp(0.0, 2.0 * LN_2)
}

/// Both sectors identically distributed: `2 (ln 2 - S(pi))`.
pub fn gamma_single_sector(pi: f64) -> f64 {
    gamma_from_parity(pi, pi)
}

/// Correlation range: the `l` at which the block parity probability falls
/// to `1 - delta`, `lambda² = ln(1 - 2 delta) / ln(1 - 2 rho)`.
pub fn correlation_range(rho: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return domain(format!("tolerance delta must lie in (0, 1/2), got {delta}"));
    }
    if rho == 0.0 {
        return domain("correlation range diverges at rho = 0");
    }
    if rho == 0.5 {
        return domain("correlation range degenerates at rho = 1/2 (parity fully random)");
    }
    if !(rho > 0.0 && rho < 0.5) {
        return domain(format!("correlation range needs 0 < rho < 1/2, got {rho}"));
    }
    Ok(((1.0 - 2.0 * delta).ln() / (-2.0 * rho).ln_1p()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPrediction {
    pub lambda: f64,
    /// Growth exponent `1 - alpha / 2`.
    pub exponent: f64,
}

/// Large-`L` correlation range from the sublinear density with
/// `ln(1 - 2 rho) ~ -2 rho`:
/// `lambda² = c_alpha beta A ln(1 - 2 delta) / (2 (alpha - 2)) * L^{2-alpha} / ln L`.
pub fn lambda_scaling_prediction(point: &ThermoPoint, c_alpha: f64, delta: f64) -> Result<LambdaPrediction> {
    point.validate()?;
    let ThermoPoint { beta, amplitude, exponent, side, .. } = *point;
    if !(0.0..2.0).contains(&exponent) {
        return domain(format!("lambda scaling needs 0 <= alpha < 2, got {exponent}"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return domain(format!("tolerance delta must lie in (0, 1/2), got {delta}"));
    }
    if side < 3 {
        return domain(format!("lambda scaling needs L >= 3, got {side}"));
    }
    let l = side as f64;
    let lambda2 = c_alpha * beta * amplitude * (1.0 - 2.0 * delta).ln() / (2.0 * (exponent - 2.0))
        * l.powf(2.0 - exponent)
        / l.ln();
    Ok(LambdaPrediction { lambda: lambda2.sqrt(), exponent: 1.0 - exponent / 2.0 })
}

/// Width of the window around `beta A = 2` where the logarithmic limit is used.
const CRITICAL_WINDOW: f64 = 1e-9;

/// Continuum probability that the second of two log-interacting anyons lies
/// within distance `radius` of the first, on a disc of radius `side`.
pub fn two_anyon_radial_cdf(radius: f64, side: f64, beta: f64, amplitude: f64) -> Result<f64> {
    if !(side > 1.0) {
        return domain(format!("system size must exceed 1, got {side}"));
    }
    if !(1.0..=side).contains(&radius) {
        return domain(format!("radius must lie in [1, {side}], got {radius}"));
    }
    let ba = beta * amplitude;
    if !(ba >= 0.0) {
        return domain(format!("beta A must be non-negative, got {ba}"));
    }
    let x = 2.0 - ba;
    if x.abs() < CRITICAL_WINDOW {
        return Ok(radius.ln() / side.ln());
    }
    Ok((x * radius.ln()).exp_m1() / (x * side.ln()).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalTemperature {
    pub anyons: usize,
    pub amplitude: f64,
    pub temperature: f64,
}

/// Confinement temperature `T_c(N) = N A / 4` of `N` log-interacting anyons.
pub fn confinement_critical_temperature(anyons: usize, amplitude: f64) -> Result<CriticalTemperature> {
    if anyons < 2 || anyons % 2 != 0 {
        return domain(format!("anyon number must be even and >= 2, got {anyons}"));
    }
    if !(amplitude >= 0.0) {
        return domain(format!("amplitude must be non-negative, got {amplitude}"));
    }
    Ok(CriticalTemperature {
        anyons,
        amplitude,
        temperature: anyons as f64 * amplitude / 4.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BosonPhasePrediction {
    pub coupling: f64,
    pub rho: f64,
    /// `None` when the range is undefined (`rho = 1/2`) or infinite (`rho = 0`).
    pub lambda: Option<f64>,
    pub phase: Phase,
}

/// Density, correlation range and phase for a boson-induced coupling.
pub fn boson_phase_prediction(
    model: &BosonCouplingModel,
    side: usize,
    temperature: f64,
    delta: f64,
) -> Result<BosonPhasePrediction> {
    if side < 3 {
        return domain(format!("boson phase prediction needs L >= 3, got {side}"));
    }
    let coupling = model.effective_coupling(side, temperature)?;
    let rho = boltzmann_density(coupling, 1.0 / temperature);
    let lambda = if rho > 0.0 && rho < 0.5 { Some(correlation_range(rho, delta)?) } else { None };
    let phase = match *model {
        BosonCouplingModel::LinearInL { .. } => Phase::StronglyTO,
        BosonCouplingModel::LogInL { c } => {
            if c == 0.0 {
                Phase::Disordered
            } else if (c - 2.0).abs() < 1e-12 {
                Phase::Boundary
            } else if c > 2.0 {
                Phase::StronglyTO
            } else {
                Phase::WeaklyTO
            }
        }
    };
    Ok(BosonPhasePrediction { coupling, rho, lambda, phase })
}
