//! Brute-force enumeration of the even-parity Boltzmann law on small tori.

use std::collections::HashMap;

use crate::energy::EnergyModel;
use crate::error::{domain, Error, Result};
use crate::torus::{ParityWindow, TorusLattice};

/// Largest number of plaquettes accepted for enumeration (`2^15` even states).
pub const EXACT_PLAQUETTE_LIMIT: usize = 16;

/// Probability of every even-parity configuration, keyed by occupation mask.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    lattice: TorusLattice,
    masks: Vec<u64>,
    probs: Vec<f64>,
}

/// Enumerate all `2^(L²-1)` even configurations and their Boltzmann weights.
///
/// Weights are shifted by the ground-state energy, so very large `beta`
/// collapses cleanly onto the minimum.
pub fn exact_distribution(model: &EnergyModel, beta: f64) -> Result<ExactDistribution> {
    let lattice = *model.lattice();
    let n = lattice.len();
    if n > EXACT_PLAQUETTE_LIMIT {
        return Err(Error::TooLarge { plaquettes: n, limit: EXACT_PLAQUETTE_LIMIT });
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return domain(format!("beta must be finite and >= 0, got {beta}"));
    }
    let mut masks = Vec::with_capacity(1 << (n - 1));
    let mut energies = Vec::with_capacity(1 << (n - 1));
    let mut sites = Vec::with_capacity(n);
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() % 2 != 0 {
            continue;
        }
        sites.clear();
        sites.extend((0..n).filter(|&i| mask >> i & 1 == 1));
        let mut pairs = 0.0;
        for (i, &p) in sites.iter().enumerate() {
            for &q in &sites[i + 1..] {
                pairs += model.pair_energy(p, q);
            }
        }
        masks.push(mask);
        energies.push(model.coupling() * sites.len() as f64 + 2.0 * pairs);
    }
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut probs: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(ExactDistribution { lattice, masks, probs })
}

impl ExactDistribution {
    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    /// `(mask, probability)` pairs over all even configurations.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.masks.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn probability(&self, mask: u64) -> f64 {
        self.masks.binary_search(&mask).map_or(0.0, |i| self.probs[i])
    }

    pub fn mean_anyon_count(&self) -> f64 {
        self.iter().map(|(m, p)| m.count_ones() as f64 * p).sum()
    }

    /// Probability that the window holds an even number of anyons.
    pub fn parity_probability(&self, window: &ParityWindow) -> Result<f64> {
        let w = window.mask().ok_or_else(|| Error::Domain("window mask unavailable".into()))?;
        Ok(self.iter().filter(|(m, _)| (m & w).count_ones() % 2 == 0).map(|(_, p)| p).sum())
    }

    /// Total-variation distance to an empirical histogram of masks.
    pub fn total_variation(&self, counts: &HashMap<u64, u64>) -> f64 {
        let total: u64 = counts.values().sum();
        if total == 0 {
            return 1.0;
        }
        let total = total as f64;
        let mut tv: f64 = self
            .iter()
            .map(|(m, p)| (p - counts.get(&m).copied().unwrap_or(0) as f64 / total).abs())
            .sum();
        // Mass on states outside the even sector.
        tv += counts
            .iter()
            .filter(|(m, _)| m.count_ones() % 2 != 0)
            .map(|(_, &c)| c as f64 / total)
            .sum::<f64>();
        0.5 * tv
    }
}

/// Exact law of the minimal-image separation of two anyons at fixed number,
/// as `(distance, probability)` sorted by distance. Valid for any size.
pub fn two_anyon_distance_law(model: &EnergyModel, beta: f64) -> Result<Vec<(f64, f64)>> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return domain(format!("beta must be finite and >= 0, got {beta}"));
    }
    let lattice = *model.lattice();
    // Fix the first anyon at the origin; translation invariance does the rest.
    let mut shells: Vec<(f64, f64)> = (1..lattice.len())
        .map(|q| {
            let r = lattice.slot_distance(q).expect("non-zero slot");
            (r, 2.0 * model.pair_energy(0, q))
        })
        .collect();
    let e0 = shells.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    shells.iter_mut().for_each(|s| s.1 = (-beta * (s.1 - e0)).exp());
    shells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut law: Vec<(f64, f64)> = Vec::new();
    for (r, w) in shells {
        match law.last_mut() {
            Some(last) if (last.0 - r).abs() < 1e-12 => last.1 += w,
            _ => law.push((r, w)),
        }
    }
    let z: f64 = law.iter().map(|s| s.1).sum();
    law.iter_mut().for_each(|s| s.1 /= z);
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::PairPotential;

    fn model(side: usize, v: PairPotential) -> EnergyModel {
        EnergyModel::new(TorusLattice::new(side).unwrap(), 1.0, v).unwrap()
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let d = exact_distribution(&model(2, PairPotential::NonInteracting), 0.0).unwrap();
        assert_eq!(d.len(), 8);
        assert!(d.iter().all(|(m, p)| m.count_ones() % 2 == 0 && (p - 0.125).abs() < 1e-15));
        assert!((d.mean_anyon_count() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_partition_function() {
        let d = exact_distribution(&model(2, PairPotential::NonInteracting), 2f64.ln()).unwrap();
        let z = 1.0 + 6.0 / 4.0 + 1.0 / 16.0;
        assert!((d.probability(0) - 1.0 / z).abs() < 1e-12);
        assert!((d.probability(0b11) - 0.25 / z).abs() < 1e-12);
        assert!((d.mean_anyon_count() - 1.268292682926829).abs() < 1e-12);
    }

    #[test]
    fn probabilities_are_normalised() {
        for v in [
            PairPotential::NonInteracting,
            PairPotential::PowerLaw { amplitude: 1.0, exponent: 1.0 },
            PairPotential::Logarithmic { amplitude: 1.0 },
        ] {
            for side in [2, 3, 4] {
                let d = exact_distribution(&model(side, v), 0.8).unwrap();
                let s: f64 = d.iter().map(|(_, p)| p).sum();
                assert!((s - 1.0).abs() < 1e-12);
                assert_eq!(d.len(), 1 << (side * side - 1));
            }
        }
    }

    #[test]
    fn frozen_limit_is_point_mass_on_empty() {
        let d = exact_distribution(&model(3, PairPotential::PowerLaw { amplitude: 1.0, exponent: 1.0 }), 1e6)
            .unwrap();
        assert!((d.probability(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_lattices() {
        let err = exact_distribution(&model(5, PairPotential::NonInteracting), 1.0).unwrap_err();
        assert_eq!(err, Error::TooLarge { plaquettes: 25, limit: 16 });
    }

    #[test]
    fn window_parity_for_free_model() {
        // Single plaquette: P(even) = P(empty). Away from the tiny-lattice
        // parity correction this is 1 - rho.
        let m = model(4, PairPotential::NonInteracting);
        let d = exact_distribution(&m, 1.0).unwrap();
        let w = ParityWindow::new(*m.lattice(), 1, (1, 1)).unwrap();
        let direct: f64 = d.iter().filter(|(mask, _)| mask >> 5 & 1 == 0).map(|(_, p)| p).sum();
        assert!((d.parity_probability(&w).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn two_anyon_law_matches_enumeration() {
        let m = model(4, PairPotential::Logarithmic { amplitude: 0.7 });
        let d = exact_distribution(&m, 1.3).unwrap();
        let law = two_anyon_distance_law(&m, 1.3).unwrap();
        let pairs: Vec<(u64, f64)> = d.iter().filter(|(mask, _)| mask.count_ones() == 2).collect();
        let z: f64 = pairs.iter().map(|p| p.1).sum();
        for &(r, p) in &law {
            let direct: f64 = pairs
                .iter()
                .filter(|(mask, _)| {
                    let a = mask.trailing_zeros() as usize;
                    let b = 63 - mask.leading_zeros() as usize;
                    (m.lattice().min_image_distance(a.into(), b.into()).unwrap() - r).abs() < 1e-12
                })
                .map(|p| p.1)
                .sum();
            assert!((direct / z - p).abs() < 1e-12);
        }
    }
}
