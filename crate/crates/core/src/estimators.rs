//! Estimates of density, block parity, topological entropy and correlation
//! range from Monte Carlo record streams, and the exact conditional-entropy
//! oracle for small lattices.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::ExactDistribution;
use crate::meanfield::{gamma_single_sector, shannon_entropy};
use crate::sampler::SampleRecord;
use crate::stats::blocking;
use crate::torus::{AnnulusPartition, Region};

/// Default tolerance for the correlation range.
pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub rho: f64,
    pub stderr: f64,
    pub block_size: usize,
}

/// Mean anyon density per plaquette with a blocking error bar.
pub fn estimate_density(records: &[SampleRecord], plaquettes: usize) -> Result<DensityEstimate> {
    if records.len() < 2 {
        return domain(format!("density estimate needs at least 2 records, got {}", records.len()));
    }
    let xs: Vec<f64> = records.iter().map(|r| r.anyon_count as f64 / plaquettes as f64).collect();
    let b = blocking(&xs);
    Ok(DensityEstimate { rho: b.mean, stderr: b.stderr, block_size: b.block_size })
}

/// Which per-record observable feeds the parity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityEstimator {
    /// The parity bit of the window at its registered anchor.
    #[default]
    Anchor,
    /// The even fraction over all translates of the window.
    TranslationAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub l: usize,
    pub pi: f64,
    pub stderr: f64,
    pub block_size: usize,
}

/// `pi_P(l)` for every registered window. `scales[k]` is the side of the
/// `k`-th window carried by the records.
pub fn estimate_parity_profile(
    records: &[SampleRecord],
    scales: &[usize],
    estimator: ParityEstimator,
) -> Result<Vec<ParityPoint>> {
    if records.len() < 2 {
        return domain(format!("parity estimate needs at least 2 records, got {}", records.len()));
    }
    scales
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let xs = records
                .iter()
                .map(|r| match estimator {
                    ParityEstimator::Anchor => r.parity_even.get(k).map(|&b| f64::from(u8::from(b))),
                    ParityEstimator::TranslationAveraged => r.even_fraction.get(k).copied(),
                })
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| {
                    Error::Domain(format!("record at sweep lacks the parity entry for l = {l}"))
                })?;
            let b = blocking(&xs);
            Ok(ParityPoint { l, pi: b.mean, stderr: b.stderr, block_size: b.block_size })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub l: usize,
    pub pi: f64,
    pub pi_err: f64,
    pub gamma: f64,
    pub gamma_err: f64,
}

const BOOTSTRAP_DRAWS: usize = 4000;

/// Standard error of `f(pi)` for `pi ~ N(mean, se)` clipped to `[0, 1]`,
/// by a fixed-seed parametric bootstrap.
fn bootstrap_err(mean: f64, se: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let draws: Vec<f64> = (0..BOOTSTRAP_DRAWS)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            f((mean + se * z).clamp(0.0, 1.0))
        })
        .collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    (draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64).sqrt()
}

/// Standard error of the single-sector entropy `2 (ln 2 - S(pi))`.
pub fn gamma_stderr(pi: f64, se: f64) -> f64 {
    if se == 0.0 {
        return 0.0;
    }
    let near_degenerate = (pi - 0.5).abs() < 3.0 * se || pi < 3.0 * se || 1.0 - pi < 3.0 * se;
    if near_degenerate {
        bootstrap_err(pi, se, gamma_single_sector)
    } else {
        (2.0 * (pi / (1.0 - pi)).ln()).abs() * se
    }
}

/// `Gamma(l) = 2 (ln 2 - S(pi_P(l)))` with propagated errors.
pub fn estimate_gamma(profile: &[ParityPoint]) -> Vec<GammaPoint> {
    profile
        .iter()
        .map(|p| GammaPoint {
            l: p.l,
            pi: p.pi,
            pi_err: p.stderr,
            gamma: gamma_single_sector(p.pi),
            gamma_err: gamma_stderr(p.pi, p.stderr),
        })
        .collect()
}

/// Side of the profile on which the crossing was not found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotCrossed {
    /// `pi_P` stays above `1 - delta` up to the largest `l`: correlations
    /// span every probed scale.
    Above,
    /// `pi_P` is already below `1 - delta` at the smallest `l`.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum LambdaEstimate {
    Crossed { lambda: f64, stderr: f64 },
    NotCrossed { side: NotCrossed },
}

impl LambdaEstimate {
    pub fn value(&self) -> Option<(f64, f64)> {
        match *self {
            LambdaEstimate::Crossed { lambda, stderr } => Some((lambda, stderr)),
            LambdaEstimate::NotCrossed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub estimate: LambdaEstimate,
    pub delta: f64,
    /// Pool-adjacent-violators was needed to make the profile non-increasing.
    pub isotonic_applied: bool,
    /// Some increase in the raw profile exceeded twice its combined error.
    pub non_monotone_beyond_noise: bool,
}

/// Non-increasing weighted isotonic fit (pool adjacent violators).
fn isotonic_decreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (v2, w2, n2) = blocks[blocks.len() - 1];
            let (v1, w1, n1) = blocks[blocks.len() - 2];
            if v1 >= v2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, n1 + n2));
        }
    }
    blocks.into_iter().flat_map(|(v, _, n)| std::iter::repeat_n(v, n)).collect()
}

/// Interpolated `lambda²` between two profile points, in coordinates
/// `(l², ln(2 pi - 1))` where independent occupation is linear.
fn crossing_square(l_a: f64, pi_a: f64, l_b: f64, pi_b: f64, target: f64) -> f64 {
    let (xa, xb) = (l_a * l_a, l_b * l_b);
    let log_coords = pi_b > 0.5 && pi_a > 0.5 && target > 0.5;
    let (ya, yb, yt) = if log_coords {
        ((2.0 * pi_a - 1.0).ln(), (2.0 * pi_b - 1.0).ln(), (2.0 * target - 1.0).ln())
    } else {
        (pi_a, pi_b, target)
    };
    if ya == yb {
        return xa;
    }
    xa + (xb - xa) * (yt - ya) / (yb - ya)
}

/// Correlation range from the scale at which `pi_P` falls to `1 - delta`.
pub fn estimate_lambda(profile: &[ParityPoint], delta: f64) -> Result<LambdaResult> {
    if !(delta > 0.0 && delta < 0.5) {
        return domain(format!("tolerance delta must lie in (0, 1/2), got {delta}"));
    }
    if profile.is_empty() {
        return domain("empty parity profile");
    }
    if profile.windows(2).any(|w| w[0].l >= w[1].l) {
        return domain("parity profile must be sorted by strictly increasing l");
    }
    let raw: Vec<f64> = profile.iter().map(|p| p.pi).collect();
    let non_monotone_beyond_noise = profile.windows(2).any(|w| {
        let combined = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].pi - w[0].pi > 2.0 * combined
    });
    let isotonic_applied = raw.windows(2).any(|w| w[1] > w[0]);
    let pis = if isotonic_applied {
        let weights: Vec<f64> =
            profile.iter().map(|p| if p.stderr > 0.0 { p.stderr.powi(-2) } else { 1e12 }).collect();
        isotonic_decreasing(&raw, &weights)
    } else {
        raw
    };
    let target = 1.0 - delta;
    let estimate = match pis.iter().position(|&pi| pi < target) {
        None => LambdaEstimate::NotCrossed { side: NotCrossed::Above },
        Some(0) => LambdaEstimate::NotCrossed { side: NotCrossed::Below },
        Some(k) => {
            let (a, b) = (&profile[k - 1], &profile[k]);
            let (la, lb) = (a.l as f64, b.l as f64);
            let lam = |pa: f64, pb: f64| crossing_square(la, pa, lb, pb, target).max(0.0).sqrt();
            let lambda = lam(pis[k - 1], pis[k]);
            let h = 1e-7;
            let da = (lam(pis[k - 1] + h, pis[k]) - lam(pis[k - 1] - h, pis[k])) / (2.0 * h);
            let db = (lam(pis[k - 1], pis[k] + h) - lam(pis[k - 1], pis[k] - h)) / (2.0 * h);
            let stderr = ((da * a.stderr).powi(2) + (db * b.stderr).powi(2)).sqrt();
            LambdaEstimate::Crossed { lambda, stderr }
        }
    };
    Ok(LambdaResult { estimate, delta, isotonic_applied, non_monotone_beyond_noise })
}

/// Everything measured for one thermodynamic point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaProfile {
    pub points: Vec<GammaPoint>,
    pub lambda: LambdaResult,
    pub density: DensityEstimate,
    pub samples: usize,
    /// Largest blocking length used among the parity estimates.
    pub block_size: usize,
}

impl GammaProfile {
    pub fn from_records(
        records: &[SampleRecord],
        plaquettes: usize,
        scales: &[usize],
        estimator: ParityEstimator,
        delta: f64,
    ) -> Result<Self> {
        let density = estimate_density(records, plaquettes)?;
        let parity = estimate_parity_profile(records, scales, estimator)?;
        let lambda = estimate_lambda(&parity, delta)?;
        let block_size = parity.iter().map(|p| p.block_size).max().unwrap_or(1);
        Ok(Self { points: estimate_gamma(&parity), lambda, density, samples: records.len(), block_size })
    }

    /// CSV with columns `l,pi_hat,pi_err,gamma_hat,gamma_err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,pi_hat,pi_err,gamma_hat,gamma_err\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{}\n", p.l, p.pi, p.pi_err, p.gamma, p.gamma_err));
        }
        out
    }
}

/// Flat summary of a profile's range estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSummary {
    pub lambda_hat: Option<f64>,
    pub lambda_err: Option<f64>,
    pub delta: f64,
    pub not_crossed: Option<NotCrossed>,
    pub isotonic_applied: bool,
    pub non_monotone_beyond_noise: bool,
    pub samples: usize,
    pub block_size: usize,
}

impl GammaProfile {
    pub fn summary(&self) -> GammaSummary {
        let v = self.lambda.estimate.value();
        GammaSummary {
            lambda_hat: v.map(|x| x.0),
            lambda_err: v.map(|x| x.1),
            delta: self.lambda.delta,
            not_crossed: match self.lambda.estimate {
                LambdaEstimate::NotCrossed { side } => Some(side),
                LambdaEstimate::Crossed { .. } => None,
            },
            isotonic_applied: self.lambda.isotonic_applied,
            non_monotone_beyond_noise: self.lambda.non_monotone_beyond_noise,
            samples: self.samples,
            block_size: self.block_size,
        }
    }
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// a continuous CDF.
pub fn ks_distance_continuous(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / n).abs()).max((f - j as f64 / n).abs());
        i = j;
    }
    d
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and a
/// discrete law given as `(value, probability)` sorted by value.
pub fn ks_distance_discrete(samples: &[f64], law: &[(f64, f64)]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    let mut below = 0usize;
    let mut cum = 0.0;
    for &(v, p) in law {
        cum += p;
        while below < xs.len() && xs[below] <= v + 1e-9 {
            below += 1;
        }
        d = d.max((cum - below as f64 / n).abs());
    }
    d
}

/// Exact entropy of the inner-square parity conditioned on the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGamma {
    /// `2 ln 2 - 2 H(parity(Ra) | config(Rb))`.
    pub conditional: f64,
    /// `2 ln 2 - 2 S(pi_P)` from the same table.
    pub unconditional: f64,
    pub pi: f64,
    /// The frame carries information about the inner parity.
    pub diverges: bool,
}

pub fn conditional_gamma_oracle(
    exact: &ExactDistribution,
    partition: &AnnulusPartition,
) -> Result<ConditionalGamma> {
    if partition.lattice() != *exact.lattice() {
        return Err(Error::LatticeMismatch {
            model: exact.lattice().side(),
            config: partition.lattice().side(),
        });
    }
    let ra = partition.mask(Region::Ra).ok_or_else(|| Error::Domain("lattice too large".into()))?;
    let rb = partition.mask(Region::Rb).ok_or_else(|| Error::Domain("lattice too large".into()))?;
    let mut joint: BTreeMap<u64, [f64; 2]> = BTreeMap::new();
    for (mask, p) in exact.iter() {
        let odd = ((mask & ra).count_ones() % 2) as usize;
        joint.entry(mask & rb).or_insert([0.0; 2])[odd] += p;
    }
    let mut h_cond = 0.0;
    let mut pi = 0.0;
    for [even, odd] in joint.values() {
        let py = even + odd;
        if py > 0.0 {
            h_cond += py * shannon_entropy(even / py);
        }
        pi += even;
    }
    let conditional = (2.0 * LN_2 - 2.0 * h_cond).clamp(0.0, 2.0 * LN_2);
    let unconditional = gamma_single_sector(pi);
    Ok(ConditionalGamma {
        conditional,
        unconditional,
        pi,
        diverges: (conditional - unconditional).abs() > 1e-12,
    })
}
