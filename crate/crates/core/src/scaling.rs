//! Finite-size scaling of the correlation range, phase labels and location
//! of the two-anyon confinement transition.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::meanfield::{confinement_critical_temperature, two_anyon_radial_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Disordered,
    WeaklyTO,
    StronglyTO,
    Boundary,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Disordered => "Disordered",
            Phase::WeaklyTO => "WeaklyTO",
            Phase::StronglyTO => "StronglyTO",
            Phase::Boundary => "Boundary",
        };
        f.write_str(s)
    }
}

/// One measured correlation range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub side: usize,
    pub lambda: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `ln lambda = gamma ln L + b`
    PowerLaw,
    /// `ln lambda = gamma ln L + b - ½ ln ln L`
    LogCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    pub model: FitModel,
    pub exponent: f64,
    pub exponent_err: f64,
    pub intercept: f64,
    pub chi2: f64,
    pub dof: usize,
    /// `false` when some point had no error bar and all points were
    /// weighted equally.
    pub weighted: bool,
}

/// Straight-line fit with per-point weights.
#[derive(Debug, Clone, Copy, PartialEq)]
struct LineFit {
    slope: f64,
    intercept: f64,
    slope_err: f64,
    chi2: f64,
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64], weighted: bool) -> LineFit {
    let s: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let (mx, my) = (sx / s, sy / s);
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((w, x), y)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let dof = x.len().saturating_sub(2).max(1) as f64;
    let slope_err = if weighted {
        // Inflate by the reduced chi-square when the scatter exceeds the bars.
        (1.0 / sxx).sqrt() * (chi2 / dof).max(1.0).sqrt()
    } else {
        (chi2 / dof / sxx).sqrt()
    };
    LineFit { slope, intercept, slope_err, chi2 }
}

/// Weighted least squares of `ln lambda` on `ln L`, weights `(lambda/err)²`.
pub fn fit_power_law(points: &[ScalingPoint], model: FitModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return domain(format!("scaling fit needs at least 3 points, got {}", points.len()));
    }
    let mut sides: Vec<usize> = points.iter().map(|p| p.side).collect();
    sides.sort_unstable();
    sides.dedup();
    if sides.len() == 1 {
        return domain("degenerate design: all system sizes are equal");
    }
    if sides.len() != points.len() {
        return domain("system sizes in a scaling fit must be distinct");
    }
    if let Some(p) = points.iter().find(|p| p.side < 2 || !(p.lambda > 0.0) || !p.lambda.is_finite()) {
        return domain(format!("invalid scaling point L = {}, lambda = {}", p.side, p.lambda));
    }
    let weighted = points.iter().all(|p| p.stderr > 0.0 && p.stderr.is_finite());
    let x: Vec<f64> = points.iter().map(|p| (p.side as f64).ln()).collect();
    let y: Vec<f64> = points
        .iter()
        .map(|p| {
            let ln_l = (p.side as f64).ln();
            match model {
                FitModel::PowerLaw => p.lambda.ln(),
                FitModel::LogCorrected => p.lambda.ln() + 0.5 * ln_l.ln(),
            }
        })
        .collect();
    let w: Vec<f64> = if weighted {
        points.iter().map(|p| (p.lambda / p.stderr).powi(2)).collect()
    } else {
        vec![1.0; points.len()]
    };
    let line = weighted_line(&x, &y, &w, weighted);
    if !line.slope.is_finite() {
        return domain("scaling fit produced a non-finite exponent");
    }
    Ok(ScalingFit {
        points: points.to_vec(),
        model,
        exponent: line.slope,
        exponent_err: line.slope_err,
        intercept: line.intercept,
        chi2: line.chi2,
        dof: points.len() - 2,
        weighted,
    })
}

/// Comparison of exponential and power-law decay of the density with `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySuppression {
    /// `b` in `ln rho = a - b L`.
    pub rate: f64,
    pub rate_err: f64,
    pub chi2_exponential: f64,
    pub chi2_power: f64,
    /// The exponential form fits better and its rate is positive beyond
    /// three standard errors.
    pub suppressed: bool,
}

/// Fit `(L, rho, err)` triples both as `e^{-bL}` and as `L^{-c}`.
pub fn density_suppression(points: &[(usize, f64, f64)]) -> Result<DensitySuppression> {
    if points.len() < 3 {
        return domain(format!("density suppression needs at least 3 points, got {}", points.len()));
    }
    if points.iter().any(|&(l, rho, _)| l < 2 || !(rho > 0.0)) {
        return domain("density suppression needs L >= 2 and rho > 0");
    }
    let weighted = points.iter().all(|&(_, _, e)| e > 0.0 && e.is_finite());
    let y: Vec<f64> = points.iter().map(|&(_, rho, _)| rho.ln()).collect();
    let w: Vec<f64> = if weighted {
        points.iter().map(|&(_, rho, e)| (rho / e).powi(2)).collect()
    } else {
        vec![1.0; points.len()]
    };
    let lin: Vec<f64> = points.iter().map(|&(l, _, _)| l as f64).collect();
    let log: Vec<f64> = points.iter().map(|&(l, _, _)| (l as f64).ln()).collect();
    let exp_fit = weighted_line(&lin, &y, &w, weighted);
    let pow_fit = weighted_line(&log, &y, &w, weighted);
    let rate = -exp_fit.slope;
    Ok(DensitySuppression {
        rate,
        rate_err: exp_fit.slope_err,
        chi2_exponential: exp_fit.chi2,
        chi2_power: pow_fit.chi2,
        suppressed: exp_fit.chi2 < pow_fit.chi2 && rate > 3.0 * exp_fit.slope_err,
    })
}

/// Cut-offs of the phase rule. Reported with every label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseThresholds {
    /// `|gamma|` below this is read as `lambda = O(L^0)`.
    pub disordered_below: f64,
    /// Upper end of the sub-extensive window `[disordered_below, weak_upper]`.
    pub weak_upper: f64,
    /// Fraction of sizes with an uncrossed profile that signals saturation.
    pub saturation_majority: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self { disordered_below: 0.1, weak_upper: 0.9, saturation_majority: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub phase: Phase,
    pub exponent: f64,
    pub exponent_err: f64,
    pub not_crossed_fraction: f64,
    pub density: Option<DensitySuppression>,
    pub thresholds: PhaseThresholds,
    /// Which branch of the rule fired.
    pub evidence: String,
}

/// Label a scaling fit. Saturation of the parity profile or exponential
/// suppression of the density takes precedence over the exponent, since a
/// weak phase may also reach `gamma = 1`.
pub fn classify_phase(
    fit: &ScalingFit,
    not_crossed_fraction: f64,
    density: Option<DensitySuppression>,
    thresholds: PhaseThresholds,
) -> PhaseLabel {
    let g = fit.exponent;
    let saturated = not_crossed_fraction > thresholds.saturation_majority;
    let suppressed = density.is_some_and(|d| d.suppressed);
    let (phase, evidence) = if saturated {
        (
            Phase::StronglyTO,
            format!(
                "profile never fell below 1 - delta for {:.0}% of sizes (saturation heuristic)",
                100.0 * not_crossed_fraction
            ),
        )
    } else if suppressed {
        (Phase::StronglyTO, "density exponentially suppressed in L".to_string())
    } else if g.abs() < thresholds.disordered_below {
        (Phase::Disordered, format!("|gamma| = {:.3} < {}", g.abs(), thresholds.disordered_below))
    } else if (thresholds.disordered_below..=thresholds.weak_upper).contains(&g) {
        (
            Phase::WeaklyTO,
            format!("gamma = {g:.3} in [{}, {}]", thresholds.disordered_below, thresholds.weak_upper),
        )
    } else {
        (Phase::Boundary, format!("gamma = {g:.3} outside every phase window"))
    };
    PhaseLabel {
        phase,
        exponent: g,
        exponent_err: fit.exponent_err,
        not_crossed_fraction,
        density,
        thresholds,
        evidence,
    }
}

/// Measured `p(R)` at the probe radius for one `(L, T)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfinementCell {
    pub side: usize,
    pub temperature: f64,
    pub cdf: f64,
    pub stderr: f64,
}

/// Scaled escape probability `(1 - p) ln L`. At the critical point the
/// continuum law gives `ln (L/R)` for every `L`, so curves for different
/// sizes cross there, while `p` itself shifts monotonically with `L`.
pub fn escape_observable(cdf: f64, side: usize) -> f64 {
    (1.0 - cdf) * (side as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub small: usize,
    pub large: usize,
    pub temperature: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ConfinementOutcome {
    Located {
        temperature: f64,
        stderr: f64,
        /// `T_c = A/2` for two anyons.
        reference: f64,
        relative_error: f64,
        crossings: Vec<PairCrossing>,
    },
    Inconclusive {
        reason: String,
    },
}

fn pair_crossing(small: &[ConfinementCell], large: &[ConfinementCell]) -> Option<PairCrossing> {
    let mut rows: Vec<(f64, f64, f64)> = small
        .iter()
        .filter_map(|a| {
            large.iter().find(|b| b.temperature == a.temperature).map(|b| {
                let d = escape_observable(b.cdf, b.side) - escape_observable(a.cdf, a.side);
                let e = ((b.stderr * (b.side as f64).ln()).powi(2)
                    + (a.stderr * (a.side as f64).ln()).powi(2))
                .sqrt();
                (a.temperature, d, e)
            })
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (s, l) = (small[0].side, large[0].side);
    for w in rows.windows(2) {
        let ((t0, d0, e0), (t1, d1, e1)) = (w[0], w[1]);
        if d0 == 0.0 {
            return Some(PairCrossing { small: s, large: l, temperature: t0, stderr: e0 });
        }
        if d0.signum() != d1.signum() {
            let h = t1 - t0;
            let delta = d0 - d1;
            let temperature = t0 + h * d0 / delta;
            let stderr = h / delta.powi(2) * ((d1 * e0).powi(2) + (d0 * e1).powi(2)).sqrt();
            return Some(PairCrossing { small: s, large: l, temperature, stderr });
        }
    }
    None
}

/// Finite-size crossing estimate of the confinement temperature from cells
/// on a `(T, L)` grid. Successive sizes are paired and the first sign change
/// of the escape-observable difference, scanning up in `T`, is interpolated.
pub fn locate_confinement_transition(
    cells: &[ConfinementCell],
    amplitude: f64,
) -> Result<ConfinementOutcome> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return domain(format!("amplitude must be finite and >= 0, got {amplitude}"));
    }
    if let Some(c) = cells.iter().find(|c| !(c.temperature > 0.0) || c.side < 2) {
        return domain(format!("invalid confinement cell L = {}, T = {}", c.side, c.temperature));
    }
    if amplitude == 0.0 {
        return Ok(ConfinementOutcome::Inconclusive {
            reason: "zero amplitude: no interaction, no transition".into(),
        });
    }
    let mut sides: Vec<usize> = cells.iter().map(|c| c.side).collect();
    sides.sort_unstable();
    sides.dedup();
    if sides.len() < 2 {
        return domain("confinement transition needs at least two system sizes");
    }
    let by_side = |l: usize| -> Vec<ConfinementCell> { cells.iter().filter(|c| c.side == l).copied().collect() };
    let crossings: Vec<PairCrossing> = sides
        .windows(2)
        .filter_map(|w| pair_crossing(&by_side(w[0]), &by_side(w[1])))
        .collect();
    if crossings.is_empty() {
        return Ok(ConfinementOutcome::Inconclusive {
            reason: "curves for successive sizes do not cross within the temperature grid".into(),
        });
    }
    let (temperature, stderr) = if crossings.iter().all(|c| c.stderr > 0.0) {
        let w: Vec<f64> = crossings.iter().map(|c| c.stderr.powi(-2)).collect();
        let s: f64 = w.iter().sum();
        (crossings.iter().zip(&w).map(|(c, w)| c.temperature * w).sum::<f64>() / s, s.powf(-0.5))
    } else {
        let n = crossings.len() as f64;
        (crossings.iter().map(|c| c.temperature).sum::<f64>() / n, 0.0)
    };
    let reference = confinement_critical_temperature(2, amplitude)?.temperature;
    Ok(ConfinementOutcome::Located {
        temperature,
        stderr,
        reference,
        relative_error: (temperature - reference).abs() / reference,
        crossings,
    })
}

/// Noise-free cells from the continuum two-anyon law at radius `ratio · L`.
pub fn analytic_confinement_cells(
    sides: &[usize],
    temperatures: &[f64],
    amplitude: f64,
    ratio: f64,
) -> Result<Vec<ConfinementCell>> {
    let mut out = Vec::with_capacity(sides.len() * temperatures.len());
    for &side in sides {
        for &t in temperatures {
            let l = side as f64;
            let cdf = two_anyon_radial_cdf((ratio * l).max(1.0), l, 1.0 / t, amplitude)?;
            out.push(ConfinementCell { side, temperature: t, cdf, stderr: 0.0 });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn points(sides: &[usize], f: impl Fn(f64) -> f64) -> Vec<ScalingPoint> {
        sides.iter().map(|&l| ScalingPoint { side: l, lambda: f(l as f64), stderr: 0.0 }).collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_power_law(&points(&[8, 16, 32, 64], |l| 3.0 * l.sqrt()), FitModel::PowerLaw).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        let flat = fit_power_law(&points(&[8, 16, 32], |_| 7.0), FitModel::PowerLaw).unwrap();
        assert!(flat.exponent.abs() < 1e-12);
    }

    #[test]
    fn log_corrected_model_removes_correction() {
        let fit = fit_power_law(
            &points(&[16, 64, 256, 1024], |l| 2.0 * l.powf(0.75) / l.ln().sqrt()),
            FitModel::LogCorrected,
        )
        .unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-10);
    }

    #[test]
    fn noisy_fit_recovers_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let pts: Vec<ScalingPoint> = [16usize, 24, 32, 48, 64]
            .iter()
            .map(|&l| {
                let lambda = 2.0 * (l as f64).powf(0.75) * (1.0 + noise.sample(&mut rng));
                ScalingPoint { side: l, lambda, stderr: 0.02 * lambda }
            })
            .collect();
        let fit = fit_power_law(&pts, FitModel::PowerLaw).unwrap();
        assert!((fit.exponent - 0.75).abs() < 0.05, "{}", fit.exponent);
        assert!(fit.weighted && fit.exponent_err > 0.0);
    }

    #[test]
    fn fit_rejects_bad_designs() {
        let same = points(&[16, 16, 16], |_| 2.0);
        assert!(fit_power_law(&same, FitModel::PowerLaw).is_err());
        assert!(fit_power_law(&points(&[16, 32], |_| 2.0), FitModel::PowerLaw).is_err());
        assert!(fit_power_law(&points(&[16, 32, 64], |_| -1.0), FitModel::PowerLaw).is_err());
    }

    proptest! {
        #[test]
        fn fit_is_scale_equivariant(k in 0.01f64..100.0, g in -1.0f64..2.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, 0.05).unwrap();
            let base: Vec<ScalingPoint> = [8usize, 12, 20, 40, 90].iter().map(|&l| {
                let lambda = (l as f64).powf(g) * (1.0f64 + noise.sample(&mut rng)).abs().max(0.1);
                ScalingPoint { side: l, lambda, stderr: 0.05 * lambda }
            }).collect();
            let scaled: Vec<ScalingPoint> = base.iter()
                .map(|p| ScalingPoint { lambda: k * p.lambda, stderr: k * p.stderr, ..*p })
                .collect();
            for model in [FitModel::PowerLaw, FitModel::LogCorrected] {
                let a = fit_power_law(&base, model).unwrap();
                let b = fit_power_law(&scaled, model).unwrap();
                prop_assert!((a.exponent - b.exponent).abs() < 1e-12);
                prop_assert!((b.intercept - a.intercept - k.ln()).abs() < 1e-9);
            }
        }

        #[test]
        fn classification_is_deterministic(g in -0.5f64..1.5, f in 0.0f64..1.0) {
            let fit = fit_power_law(&points(&[8, 16, 32], |l| l.powf(g)), FitModel::PowerLaw).unwrap();
            let a = classify_phase(&fit, f, None, PhaseThresholds::default());
            let b = classify_phase(&fit, f, None, PhaseThresholds::default());
            prop_assert_eq!(a, b);
        }
    }

    fn fit_with(g: f64, err: f64) -> ScalingFit {
        let mut fit = fit_power_law(&points(&[8, 16, 32], |l| l.powf(g)), FitModel::PowerLaw).unwrap();
        fit.exponent_err = err;
        fit
    }

    #[test]
    fn phase_rule_examples() {
        let t = PhaseThresholds::default();
        assert_eq!(classify_phase(&fit_with(0.02, 0.03), 0.0, None, t).phase, Phase::Disordered);
        assert_eq!(classify_phase(&fit_with(0.5, 0.1), 0.0, None, t).phase, Phase::WeaklyTO);
        assert_eq!(classify_phase(&fit_with(1.0, 0.1), 0.0, None, t).phase, Phase::Boundary);
        assert_eq!(classify_phase(&fit_with(0.02, 0.03), 0.75, None, t).phase, Phase::StronglyTO);
    }

    #[test]
    fn exponential_density_is_strong_order() {
        // rho ~ e^{-beta kappa L} for a coupling linear in L.
        let pts: Vec<(usize, f64, f64)> =
            [8usize, 16, 32, 64].iter().map(|&l| (l, 1.0 / ((0.3 * l as f64).exp() + 1.0), 0.0)).collect();
        let d = density_suppression(&pts).unwrap();
        assert!(d.suppressed && (d.rate - 0.3).abs() < 0.02);
        let label = classify_phase(&fit_with(0.9, 0.1), 0.0, Some(d), PhaseThresholds::default());
        assert_eq!(label.phase, Phase::StronglyTO);

        let power: Vec<(usize, f64, f64)> =
            [8usize, 16, 32, 64].iter().map(|&l| (l, (l as f64 / 2.0).powi(-1), 0.0)).collect();
        assert!(!density_suppression(&power).unwrap().suppressed);
    }

    #[test]
    fn analytic_crossing_near_half_amplitude() {
        let temps: Vec<f64> = (0..=30).map(|i| 0.25 + 0.025 * i as f64).collect();
        let cells = analytic_confinement_cells(&[32, 64], &temps, 1.0, 0.25).unwrap();
        match locate_confinement_transition(&cells, 1.0).unwrap() {
            ConfinementOutcome::Located { temperature, relative_error, .. } => {
                assert!(relative_error < 0.1, "T_c = {temperature}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_amplitude_is_inconclusive() {
        let cells = analytic_confinement_cells(&[32, 64], &[0.5, 1.0], 1.0, 0.25).unwrap();
        assert!(matches!(
            locate_confinement_transition(&cells, 0.0).unwrap(),
            ConfinementOutcome::Inconclusive { .. }
        ));
    }

    #[test]
    fn no_crossing_in_grid_is_inconclusive() {
        let temps = [0.8, 0.9, 1.0];
        let cells = analytic_confinement_cells(&[32, 64], &temps, 1.0, 0.25).unwrap();
        assert!(matches!(
            locate_confinement_transition(&cells, 1.0).unwrap(),
            ConfinementOutcome::Inconclusive { .. }
        ));
    }

    #[test]
    fn confined_side_probe_grows_with_size() {
        let mut last = 0.0;
        for l in [16usize, 32, 64, 128, 256] {
            let p = two_anyon_radial_cdf(l as f64 / 4.0, l as f64, 3.0, 1.0).unwrap();
            assert!(p > last);
            last = p;
        }
        assert!(last > 0.9);
    }
}
