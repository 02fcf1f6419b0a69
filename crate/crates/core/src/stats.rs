//! Blocking (binning) error analysis for autocorrelated Monte Carlo series.

use serde::{Deserialize, Serialize};

/// Fewest blocks a level may have before the analysis stops coarsening.
const MIN_BLOCKS: usize = 32;

/// Mean with its blocking standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Block length (in samples) at which the error was read off.
    pub block_size: usize,
    /// `false` when the error was still growing at the coarsest level.
    pub converged: bool,
}

fn naive_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let se = (var / (n - 1.0)).max(0.0).sqrt();
    (se, se / (2.0 * (n - 1.0)).sqrt())
}

/// Flyvbjerg-Petersen blocking: pairwise-average the series until the
/// standard error stops increasing beyond its own uncertainty.
///
/// Panics if `xs` has fewer than two elements.
pub fn blocking(xs: &[f64]) -> BlockingEstimate {
    assert!(xs.len() >= 2, "blocking needs at least two samples");
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut level: Vec<f64> = xs.to_vec();
    let mut block = 1usize;
    let (mut se, mut dse) = naive_stderr(&level);
    loop {
        if level.len() / 2 < MIN_BLOCKS.max(2) {
            return BlockingEstimate { mean, stderr: se, block_size: block, converged: se == 0.0 };
        }
        let next: Vec<f64> = level.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        let (se_next, dse_next) = naive_stderr(&next);
        if se_next <= se + dse {
            return BlockingEstimate {
                mean,
                stderr: se.max(se_next),
                block_size: block * 2,
                converged: true,
            };
        }
        level = next;
        block *= 2;
        se = se_next;
        dse = dse_next;
    }
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_series_has_zero_error() {
        let e = blocking(&[0.0; 1000]);
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn alternating_series_mean() {
        let xs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect();
        assert_eq!(blocking(&xs).mean, 1.0);
    }

    #[test]
    fn iid_error_matches_textbook() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let e = blocking(&xs);
        let expected = (1.0 / 12.0 / 100_000f64).sqrt();
        assert!((e.stderr / expected - 1.0).abs() < 0.1, "{} vs {expected}", e.stderr);
    }

    #[test]
    fn correlated_series_error_grows() {
        // AR(1) with phi = 0.9: integrated autocorrelation time (1+phi)/(1-phi) = 19.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = 0.9 * x + (rng.random::<f64>() - 0.5);
                x
            })
            .collect();
        let e = blocking(&xs);
        let sigma2 = (1.0 / 12.0) / (1.0 - 0.81);
        let expected = (sigma2 * 19.0 / 200_000f64).sqrt();
        assert!(e.block_size > 1);
        assert!((e.stderr / expected - 1.0).abs() < 0.25, "{} vs {expected}", e.stderr);
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (s, b) = linear_fit(&x, &y);
        assert!((s - 2.5).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
    }
}
