//! Occupancy-level energy functionals and their incremental updates.
//!
//! The interaction term is the ordered double sum over distinct occupied
//! plaquettes, so every unordered pair contributes `2 V(r)`:
//!
//! ```text
//! E = J N + Σ_p Σ_{p' != p} n_p n_p' V(r_pp')
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::occupancy::OccupancyConfig;
use crate::torus::{PlaquetteIndex, TorusLattice};

/// Two-body potential between anyons of the same sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PairPotential {
    NonInteracting,
    /// `A r^{-alpha}`; `alpha` may take either sign.
    PowerLaw { amplitude: f64, exponent: f64 },
    /// `A ln r`.
    Logarithmic { amplitude: f64 },
}

impl PairPotential {
    /// Potential at separation `r >= 1`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= 1.0) {
            return domain(format!("pair potential needs r >= 1, got {r}"));
        }
        Ok(self.eval(r))
    }

    #[inline]
    fn eval(&self, r: f64) -> f64 {
        match *self {
            PairPotential::NonInteracting => 0.0,
            PairPotential::PowerLaw { amplitude, exponent } => {
                if exponent == 0.0 {
                    amplitude
                } else {
                    amplitude * r.powf(-exponent)
                }
            }
            PairPotential::Logarithmic { amplitude } => amplitude * r.ln(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            PairPotential::NonInteracting => 0.0,
            PairPotential::PowerLaw { amplitude, .. } => amplitude,
            PairPotential::Logarithmic { amplitude } => amplitude,
        }
    }
}

#[derive(Debug, Clone)]
enum Kernel {
    Zero,
    Constant(f64),
    Table(Vec<f64>),
}

/// Anyon creation cost `J` plus a pair potential on a given torus.
///
/// Pair energies are read from a precomputed displacement table, so a flip
/// costs one pass over the current anyon list.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    lattice: TorusLattice,
    coupling: f64,
    potential: PairPotential,
    kernel: Kernel,
}

impl EnergyModel {
    pub fn new(lattice: TorusLattice, coupling: f64, potential: PairPotential) -> Result<Self> {
        if !coupling.is_finite() {
            return config(format!("coupling J must be finite, got {coupling}"));
        }
        let kernel = match potential {
            PairPotential::NonInteracting => Kernel::Zero,
            PairPotential::PowerLaw { amplitude, exponent } => {
                if !amplitude.is_finite() || !exponent.is_finite() {
                    return config("power-law amplitude and exponent must be finite");
                }
                if amplitude == 0.0 {
                    Kernel::Zero
                } else if exponent == 0.0 {
                    Kernel::Constant(amplitude)
                } else {
                    Kernel::Table(Self::table(&lattice, &potential))
                }
            }
            PairPotential::Logarithmic { amplitude } => {
                if !amplitude.is_finite() {
                    return config("logarithmic amplitude must be finite");
                }
                if amplitude == 0.0 {
                    Kernel::Zero
                } else {
                    Kernel::Table(Self::table(&lattice, &potential))
                }
            }
        };
        Ok(Self { lattice, coupling, potential, kernel })
    }

    fn table(lattice: &TorusLattice, potential: &PairPotential) -> Vec<f64> {
        (0..lattice.len())
            .map(|slot| lattice.slot_distance(slot).map_or(0.0, |r| potential.eval(r)))
            .collect()
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    /// Per-anyon cost `J`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn potential(&self) -> &PairPotential {
        &self.potential
    }

    /// `V(r_pq)` for distinct plaquettes.
    #[inline]
    pub fn pair_energy(&self, p: usize, q: usize) -> f64 {
        match &self.kernel {
            Kernel::Zero => 0.0,
            Kernel::Constant(a) => *a,
            Kernel::Table(t) => {
                t[self.lattice.displacement_slot(PlaquetteIndex(p), PlaquetteIndex(q))]
            }
        }
    }

    /// `Σ_{p' occupied, p' != p} V(r_pp')`.
    #[inline]
    pub fn local_field(&self, config: &OccupancyConfig, p: usize) -> f64 {
        match &self.kernel {
            Kernel::Zero => 0.0,
            Kernel::Constant(a) => {
                let others = config.anyon_count() - usize::from(config.occupied()[p]);
                a * others as f64
            }
            Kernel::Table(t) => {
                let side = self.lattice.side();
                let (px, py) = (p % side, p / side);
                let mut sum = 0.0;
                for &q in config.anyons() {
                    let (qx, qy) = (q % side, q / side);
                    let dx = if qx >= px { qx - px } else { qx + side - px };
                    let dy = if qy >= py { qy - py } else { qy + side - py };
                    sum += t[dy * side + dx];
                }
                // The zero-offset slot holds 0, so p itself contributes nothing.
                sum
            }
        }
    }

    /// `Σ_{p' != p} V(r_pp')` over every other plaquette of the torus.
    pub fn lattice_potential_sum(&self) -> f64 {
        match &self.kernel {
            Kernel::Zero => 0.0,
            Kernel::Constant(a) => a * (self.lattice.len() - 1) as f64,
            Kernel::Table(t) => t.iter().sum(),
        }
    }

    fn check(&self, config: &OccupancyConfig) -> Result<()> {
        if config.lattice() != &self.lattice {
            return Err(crate::error::Error::LatticeMismatch {
                model: self.lattice.side(),
                config: config.lattice().side(),
            });
        }
        Ok(())
    }

    /// Energy recomputed from scratch, ignoring the cached value.
    pub fn total_energy(&self, config: &OccupancyConfig) -> Result<f64> {
        self.check(config)?;
        let anyons = config.anyons();
        let mut pairs = 0.0;
        if !matches!(self.kernel, Kernel::Zero) {
            for (i, &p) in anyons.iter().enumerate() {
                for &q in &anyons[i + 1..] {
                    pairs += self.pair_energy(p, q);
                }
            }
        }
        Ok(self.coupling * anyons.len() as f64 + 2.0 * pairs)
    }

    /// Energy change from flipping the occupation of `p`.
    pub fn flip_delta(&self, config: &OccupancyConfig, p: PlaquetteIndex) -> Result<f64> {
        self.check(config)?;
        Ok(self.flip_delta_unchecked(config, p.0))
    }

    #[inline]
    pub(crate) fn flip_delta_unchecked(&self, config: &OccupancyConfig, p: usize) -> f64 {
        let sign = if config.occupied()[p] { -1.0 } else { 1.0 };
        sign * (self.coupling + 2.0 * self.local_field(config, p))
    }

    /// Energy change from flipping both `p` and `q` (distinct). Covers pair
    /// creation, pair annihilation and the hop of one anyon from `p` to `q`.
    #[inline]
    pub(crate) fn pair_delta(&self, config: &OccupancyConfig, p: usize, q: usize) -> f64 {
        let occ = config.occupied();
        let sp = if occ[p] { -1.0 } else { 1.0 };
        let sq = if occ[q] { -1.0 } else { 1.0 };
        let cross = if matches!(self.kernel, Kernel::Zero) {
            0.0
        } else {
            2.0 * sp * sq * self.pair_energy(p, q)
        };
        self.flip_delta_unchecked(config, p) + self.flip_delta_unchecked(config, q) + cross
    }
}

/// Effective anyon cost induced by coupling the code to hopping bosons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BosonCouplingModel {
    /// `J = kappa L`.
    LinearInL { kappa: f64 },
    /// `J = c T ln(L / 2)`.
    LogInL { c: f64 },
}

impl BosonCouplingModel {
    pub fn linear(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return config(format!("kappa must be positive, got {kappa}"));
        }
        Ok(Self::LinearInL { kappa })
    }

    /// `c = 0` is accepted as the zero-coupling limit.
    pub fn log(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return config(format!("c must be non-negative, got {c}"));
        }
        Ok(Self::LogInL { c })
    }

    /// Effective coupling at lattice side `side` and temperature `temperature`.
    pub fn effective_coupling(&self, side: usize, temperature: f64) -> Result<f64> {
        if !(temperature > 0.0) {
            return domain(format!("temperature must be positive, got {temperature}"));
        }
        match *self {
            BosonCouplingModel::LinearInL { kappa } => Ok(kappa * side as f64),
            BosonCouplingModel::LogInL { c } => {
                if side < 2 {
                    return domain(format!("ln(L/2) coupling needs L >= 2, got {side}"));
                }
                Ok(c * temperature * (side as f64 / 2.0).ln())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lat(side: usize) -> TorusLattice {
        TorusLattice::new(side).unwrap()
    }

    #[test]
    fn potential_examples() {
        let pl = PairPotential::PowerLaw { amplitude: 1.0, exponent: 2.0 };
        assert!((pl.value(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(PairPotential::Logarithmic { amplitude: 3.0 }.value(1.0).unwrap(), 0.0);
        let c = PairPotential::PowerLaw { amplitude: 2.0, exponent: 0.0 };
        assert_eq!(c.value(7.0).unwrap(), 2.0);
        assert_eq!(PairPotential::NonInteracting.value(3.0).unwrap(), 0.0);
        assert!(pl.value(0.5).is_err());
        assert!(pl.value(f64::NAN).is_err());
    }

    #[test]
    fn total_energy_examples() {
        let l = lat(8);
        let pl = PairPotential::PowerLaw { amplitude: 1.0, exponent: 2.0 };
        let m = EnergyModel::new(l, 1.0, pl).unwrap();
        assert_eq!(m.total_energy(&OccupancyConfig::empty(l)).unwrap(), 0.0);

        let m15 = EnergyModel::new(l, 1.5, pl).unwrap();
        let mut single = OccupancyConfig::empty(l);
        single.flip_single(5, 0.0);
        assert_eq!(m15.total_energy(&single).unwrap(), 1.5);

        let two =
            OccupancyConfig::from_plaquettes(&m, &[l.index(0, 0), l.index(2, 0)]).unwrap();
        assert!((m.total_energy(&two).unwrap() - 2.5).abs() < 1e-12);
        assert!((two.energy() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn lattice_mismatch_is_reported() {
        let m = EnergyModel::new(lat(4), 1.0, PairPotential::NonInteracting).unwrap();
        let cfg = OccupancyConfig::empty(lat(5));
        assert!(matches!(
            m.total_energy(&cfg),
            Err(crate::error::Error::LatticeMismatch { model: 4, config: 5 })
        ));
    }

    #[test]
    fn flip_delta_examples() {
        let l = lat(8);
        let free = EnergyModel::new(l, 1.0, PairPotential::NonInteracting).unwrap();
        let empty = OccupancyConfig::empty(l);
        assert_eq!(free.flip_delta(&empty, l.index(3, 3)).unwrap(), 1.0);

        let mut one = OccupancyConfig::empty(l);
        one.flip_single(l.index(3, 3).0, 1.0);
        assert_eq!(free.flip_delta(&one, l.index(3, 3)).unwrap(), -1.0);

        let pl = EnergyModel::new(
            l,
            1.0,
            PairPotential::PowerLaw { amplitude: 1.0, exponent: 2.0 },
        )
        .unwrap();
        let mut other = OccupancyConfig::empty(l);
        other.flip_single(l.index(5, 3).0, 1.0);
        let d = pl.flip_delta(&other, l.index(3, 3)).unwrap();
        assert!((d - 1.5).abs() < 1e-12);
    }

    #[test]
    fn effective_coupling_examples() {
        let log2 = BosonCouplingModel::log(2.0).unwrap();
        assert_eq!(log2.effective_coupling(2, 0.7).unwrap(), 0.0);
        let lin = BosonCouplingModel::linear(0.5).unwrap();
        assert_eq!(lin.effective_coupling(10, 3.0).unwrap(), 5.0);
        // L = 2e is not an integer side; evaluate the formula at that point directly.
        let c = 2.0;
        let t = 1.0;
        let two_e = 2.0 * std::f64::consts::E;
        assert!((c * t * (two_e / 2.0).ln() - 2.0).abs() < 1e-15);
        assert!(BosonCouplingModel::LogInL { c: 1.0 }.effective_coupling(1, 1.0).is_err());
        assert!(log2.effective_coupling(8, 0.0).is_err());
        assert!(BosonCouplingModel::linear(0.0).is_err());
    }

    #[test]
    fn lattice_potential_sum_matches_brute_force() {
        let l = lat(6);
        let pot = PairPotential::PowerLaw { amplitude: 0.7, exponent: 1.3 };
        let m = EnergyModel::new(l, 1.0, pot).unwrap();
        let p = l.index(0, 0);
        let brute: f64 = l
            .plaquettes()
            .filter(|&q| q != p)
            .map(|q| pot.value(l.min_image_distance(p, q).unwrap()).unwrap())
            .sum();
        assert!((m.lattice_potential_sum() - brute).abs() < 1e-12);
        let c = EnergyModel::new(l, 1.0, PairPotential::PowerLaw { amplitude: 0.7, exponent: 0.0 })
            .unwrap();
        assert!((c.lattice_potential_sum() - 0.7 * 35.0).abs() < 1e-12);
    }

    fn models(side: usize) -> Vec<EnergyModel> {
        let l = lat(side);
        [
            PairPotential::NonInteracting,
            PairPotential::PowerLaw { amplitude: 1.0, exponent: 1.0 },
            PairPotential::PowerLaw { amplitude: 0.3, exponent: 0.0 },
            PairPotential::PowerLaw { amplitude: 0.2, exponent: -1.5 },
            PairPotential::Logarithmic { amplitude: 1.0 },
        ]
        .into_iter()
        .map(|v| EnergyModel::new(l, 1.0, v).unwrap())
        .collect()
    }

    #[test]
    fn energy_cache_survives_a_million_flips() {
        for m in models(12) {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut cfg = OccupancyConfig::empty(*m.lattice());
            let n = m.lattice().len();
            for _ in 0..1_000_000 {
                let p = rng.random_range(0..n);
                let mut q = rng.random_range(0..n - 1);
                if q >= p {
                    q += 1;
                }
                let d = m.pair_delta(&cfg, p, q);
                cfg.apply_pair(p, q, d);
            }
            let exact = m.total_energy(&cfg).unwrap();
            let tol = 1e-9 * exact.abs().max(1.0);
            assert!((cfg.energy() - exact).abs() <= tol, "{:?}: {} vs {exact}", m.potential(), cfg.energy());
        }
    }

    proptest! {
        #[test]
        fn pair_delta_matches_recomputation(seed in 0u64..500, kind in 0usize..5) {
            let m = &models(7)[kind];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = m.lattice().len();
            let mut cfg = OccupancyConfig::empty(*m.lattice());
            for _ in 0..rng.random_range(0..12) {
                let p = rng.random_range(0..n);
                let q = (p + rng.random_range(1..n)) % n;
                let d = m.pair_delta(&cfg, p, q);
                cfg.apply_pair(p, q, d);
            }
            let p = rng.random_range(0..n);
            let q = (p + rng.random_range(1..n)) % n;
            let before = m.total_energy(&cfg).unwrap();
            let d = m.pair_delta(&cfg, p, q);
            cfg.apply_pair(p, q, d);
            let after = m.total_energy(&cfg).unwrap();
            prop_assert!((after - before - d).abs() <= 1e-9 * (1.0 + after.abs()));
        }

        #[test]
        fn flip_delta_is_exact_and_antisymmetric(seed in 0u64..500, kind in 0usize..5) {
            let m = &models(6)[kind];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = m.lattice().len();
            let mut cfg = OccupancyConfig::empty(*m.lattice());
            for i in 0..n {
                if rng.random::<f64>() < 0.3 {
                    let d = m.flip_delta_unchecked(&cfg, i);
                    cfg.flip_single(i, d);
                }
            }
            let p = PlaquetteIndex(rng.random_range(0..n));
            let before = m.total_energy(&cfg).unwrap();
            let forward = m.flip_delta(&cfg, p).unwrap();
            cfg.flip_single(p.0, forward);
            let after = m.total_energy(&cfg).unwrap();
            prop_assert!((after - before - forward).abs() <= 1e-9 * (1.0 + after.abs()));
            let back = m.flip_delta(&cfg, p).unwrap();
            prop_assert!((forward + back).abs() <= 1e-12);
        }

        #[test]
        fn energy_is_translation_invariant(seed in 0u64..200, kind in 0usize..5, sx in 0i64..7, sy in 0i64..7) {
            let m = &models(7)[kind];
            let l = *m.lattice();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut list: Vec<PlaquetteIndex> = l.plaquettes().filter(|_| rng.random::<f64>() < 0.3).collect();
            if list.len() % 2 == 1 { list.pop(); }
            let shifted: Vec<PlaquetteIndex> = list.iter().map(|&p| {
                let (x, y) = l.coords(p);
                l.index(x as i64 + sx, y as i64 + sy)
            }).collect();
            let a = OccupancyConfig::from_plaquettes(m, &list).unwrap();
            let b = OccupancyConfig::from_plaquettes(m, &shifted).unwrap();
            prop_assert!((a.energy() - b.energy()).abs() <= 1e-9 * (1.0 + a.energy().abs()));
        }

        #[test]
        fn repulsive_power_law_is_monotone_in_additions(seed in 0u64..200, alpha in 0.1f64..4.0) {
            let l = lat(7);
            let m = EnergyModel::new(l, 1.0, PairPotential::PowerLaw { amplitude: 1.0, exponent: alpha }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cfg = OccupancyConfig::empty(l);
            for i in 0..l.len() {
                if rng.random::<f64>() < 0.4 {
                    let d = m.flip_delta_unchecked(&cfg, i);
                    cfg.flip_single(i, d);
                }
            }
            for p in l.plaquettes().filter(|&p| !cfg.is_occupied(p)) {
                prop_assert!(m.flip_delta(&cfg, p).unwrap() >= 0.0);
            }
        }
    }
}
