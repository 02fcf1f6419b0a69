//! Metropolis sampling of the even-parity Boltzmann law of an [`EnergyModel`].
//!
//! Every move flips exactly two plaquettes, so the anyon number stays even:
//!
//! * global pair-flip: two distinct uniformly chosen plaquettes,
//! * local pair-flip: a uniform plaquette and a uniform offset from the
//!   `(2R+1)²-1` box around it,
//! * hop: a uniform anyon moves to a uniform empty plaquette.
//!
//! All three proposals are symmetric, so acceptance is plain Metropolis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyModel;
use crate::error::{config, Error, Result};
use crate::occupancy::OccupancyConfig;
use crate::torus::{AnnulusPartition, ParityWindow, TorusLattice};

/// Relative proposal weights of the three move types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveMix {
    pub global_pair: f64,
    pub local_pair: f64,
    pub hop: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        Self { global_pair: 0.2, local_pair: 0.6, hop: 0.2 }
    }
}

impl MoveMix {
    pub fn validate(&self) -> Result<()> {
        let w = [self.global_pair, self.local_pair, self.hop];
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return config("move weights must be finite and non-negative");
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return config("move weights must not all be zero");
        }
        Ok(())
    }

    fn total(&self) -> f64 {
        self.global_pair + self.local_pair + self.hop
    }
}

/// Parameters of one Markov chain. One sweep is `L²` proposals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSettings {
    pub beta: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    /// Independent stream of the generator for this chain.
    pub stream: u64,
    pub move_mix: MoveMix,
    pub local_radius: usize,
    /// Sweeps at infinite temperature before the burn-in, for attractive
    /// models that would otherwise start in a metastable empty state.
    pub hot_start_sweeps: u64,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            beta: 1.0,
            sweeps: 10_000,
            burn_in: 1_000,
            thinning: 1,
            seed: 0,
            stream: 0,
            move_mix: MoveMix::default(),
            local_radius: 2,
            hot_start_sweeps: 0,
        }
    }
}

impl ChainSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return config(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if self.sweeps < self.burn_in {
            return config(format!(
                "sweeps ({}) must be at least burn_in ({})",
                self.sweeps, self.burn_in
            ));
        }
        if self.thinning == 0 {
            return config("thinning must be at least 1");
        }
        if self.local_radius == 0 {
            return config("local_radius must be at least 1");
        }
        self.move_mix.validate()
    }

    /// Number of records the chain will emit.
    pub fn record_count(&self) -> u64 {
        (self.sweeps - self.burn_in) / self.thinning
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One thinned observation of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sweep: u64,
    pub anyon_count: usize,
    pub energy: f64,
    /// `true` when the registered window holds an even number of anyons.
    pub parity_even: Vec<bool>,
    /// Fraction of all translates of each window holding an even number.
    pub even_fraction: Vec<f64>,
}

/// Which move a proposal used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKind {
    GlobalPair,
    LocalPair,
    Hop,
}

/// Single-chain Metropolis kernel.
#[derive(Debug, Clone)]
pub struct Metropolis<'a> {
    model: &'a EnergyModel,
    beta: f64,
    mix: MoveMix,
    local_radius: usize,
}

impl<'a> Metropolis<'a> {
    pub fn new(model: &'a EnergyModel, beta: f64, mix: MoveMix, local_radius: usize) -> Self {
        Self { model, beta, mix, local_radius }
    }

    pub fn model(&self) -> &EnergyModel {
        self.model
    }

    fn choose_move<R: Rng + ?Sized>(&self, rng: &mut R) -> MoveKind {
        let u = rng.random::<f64>() * self.mix.total();
        if u < self.mix.global_pair {
            MoveKind::GlobalPair
        } else if u < self.mix.global_pair + self.mix.local_pair {
            MoveKind::LocalPair
        } else {
            MoveKind::Hop
        }
    }

    /// Draw the two plaquettes to flip, or `None` for a null proposal.
    fn propose<R: Rng + ?Sized>(
        &self,
        kind: MoveKind,
        config: &OccupancyConfig,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        let lattice = self.model.lattice();
        let n = lattice.len();
        match kind {
            MoveKind::GlobalPair => {
                let p = rng.random_range(0..n);
                let mut q = rng.random_range(0..n - 1);
                if q >= p {
                    q += 1;
                }
                Some((p, q))
            }
            MoveKind::LocalPair => {
                let r = self.local_radius as i64;
                let span = 2 * r + 1;
                let centre = (span * span) / 2;
                let mut k = rng.random_range(0..span * span - 1);
                if k >= centre {
                    k += 1;
                }
                let (dx, dy) = (k % span - r, k / span - r);
                let p = rng.random_range(0..n);
                let side = lattice.side() as i64;
                let (x, y) = ((p as i64) % side, (p as i64) / side);
                let q = lattice.index(x + dx, y + dy).0;
                (q != p).then_some((p, q))
            }
            MoveKind::Hop => hop_proposal(config, rng),
        }
    }

    /// Metropolis acceptance of an energy change.
    #[inline]
    fn accept<R: Rng + ?Sized>(&self, delta: f64, rng: &mut R) -> bool {
        delta <= 0.0 || rng.random::<f64>() < (-self.beta * delta).exp()
    }

    /// One proposal; returns whether it was accepted.
    pub fn step<R: Rng + ?Sized>(&self, config: &mut OccupancyConfig, rng: &mut R) -> bool {
        let kind = self.choose_move(rng);
        self.step_with(kind, config, rng)
    }

    pub fn step_with<R: Rng + ?Sized>(
        &self,
        kind: MoveKind,
        config: &mut OccupancyConfig,
        rng: &mut R,
    ) -> bool {
        let Some((p, q)) = self.propose(kind, config, rng) else {
            return false;
        };
        let delta = self.model.pair_delta(config, p, q);
        if self.accept(delta, rng) {
            config.apply_pair(p, q, delta);
            true
        } else {
            false
        }
    }

    /// `L²` proposals; returns the number accepted.
    pub fn sweep<R: Rng + ?Sized>(&self, config: &mut OccupancyConfig, rng: &mut R) -> usize {
        (0..self.model.lattice().len()).filter(|_| self.step(config, rng)).count()
    }
}

fn hop_proposal<R: Rng + ?Sized>(config: &OccupancyConfig, rng: &mut R) -> Option<(usize, usize)> {
    let n = config.occupied().len();
    let count = config.anyon_count();
    if count == 0 || count == n {
        return None;
    }
    let from = config.anyons()[rng.random_range(0..count)];
    loop {
        let to = rng.random_range(0..n);
        if !config.occupied()[to] {
            return Some((from, to));
        }
    }
}

/// One Metropolis proposal with the given move mix at inverse temperature `beta`.
pub fn metropolis_step<R: Rng + ?Sized>(
    config: &mut OccupancyConfig,
    model: &EnergyModel,
    beta: f64,
    mix: MoveMix,
    local_radius: usize,
    rng: &mut R,
) -> bool {
    Metropolis::new(model, beta, mix, local_radius).step(config, rng)
}

/// Iterator over the records of one chain.
pub struct RecordStream<'a> {
    kernel: Metropolis<'a>,
    config: OccupancyConfig,
    rng: ChaCha8Rng,
    windows: Vec<ParityWindow>,
    sweep: u64,
    settings: ChainSettings,
}

impl<'a> RecordStream<'a> {
    pub fn new(
        model: &'a EnergyModel,
        settings: &ChainSettings,
        windows: Vec<ParityWindow>,
    ) -> Result<Self> {
        settings.validate()?;
        for w in &windows {
            if w.lattice() != *model.lattice() {
                return Err(Error::LatticeMismatch {
                    model: model.lattice().side(),
                    config: w.lattice().side(),
                });
            }
        }
        let mut rng = settings.rng();
        let mut config = OccupancyConfig::empty(*model.lattice());
        if settings.hot_start_sweeps > 0 {
            let hot = Metropolis::new(model, 0.0, settings.move_mix, settings.local_radius);
            for _ in 0..settings.hot_start_sweeps {
                hot.sweep(&mut config, &mut rng);
            }
        }
        let kernel = Metropolis::new(model, settings.beta, settings.move_mix, settings.local_radius);
        for _ in 0..settings.burn_in {
            kernel.sweep(&mut config, &mut rng);
        }
        Ok(Self {
            kernel,
            config,
            rng,
            windows,
            sweep: settings.burn_in,
            settings: settings.clone(),
        })
    }

    /// Current chain state.
    pub fn config(&self) -> &OccupancyConfig {
        &self.config
    }

    fn record(&self) -> SampleRecord {
        let occ = self.config.occupied();
        SampleRecord {
            sweep: self.sweep,
            anyon_count: self.config.anyon_count(),
            energy: self.config.energy(),
            parity_even: self.windows.iter().map(|w| w.is_even(occ)).collect(),
            even_fraction: self.windows.iter().map(|w| w.even_fraction(occ)).collect(),
        }
    }
}

impl Iterator for RecordStream<'_> {
    type Item = SampleRecord;

    fn next(&mut self) -> Option<SampleRecord> {
        if self.sweep + self.settings.thinning > self.settings.sweeps {
            return None;
        }
        for _ in 0..self.settings.thinning {
            self.kernel.sweep(&mut self.config, &mut self.rng);
        }
        self.sweep += self.settings.thinning;
        let record = self.record();
        assert!(record.anyon_count % 2 == 0, "odd anyon number in record");
        Some(record)
    }
}

/// Run a chain from the empty configuration, probing the inner square of
/// each partition.
pub fn run_chain<'a>(
    model: &'a EnergyModel,
    settings: &ChainSettings,
    partitions: &[AnnulusPartition],
) -> Result<RecordStream<'a>> {
    let windows = partitions.iter().map(|p| *p.window()).collect();
    RecordStream::new(model, settings, windows)
}

/// Snapshot of a fixed-number chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedNumberRecord {
    pub sweep: u64,
    pub positions: Vec<usize>,
    /// Largest pairwise minimal-image separation; the pair distance for `N = 2`.
    pub max_separation: f64,
}

/// Canonical sampler at fixed even anyon number using hop moves only.
pub struct FixedNumberStream<'a> {
    kernel: Metropolis<'a>,
    config: OccupancyConfig,
    rng: ChaCha8Rng,
    sweep: u64,
    settings: ChainSettings,
}

impl FixedNumberStream<'_> {
    fn record(&self) -> FixedNumberRecord {
        let lattice = self.config.lattice();
        let pos = self.config.anyons();
        let mut max = 0.0f64;
        for (i, &p) in pos.iter().enumerate() {
            for &q in &pos[i + 1..] {
                let (dx, dy) = lattice.min_image_offsets(p.into(), q.into());
                max = max.max(((dx * dx + dy * dy) as f64).sqrt());
            }
        }
        let mut positions = pos.to_vec();
        positions.sort_unstable();
        FixedNumberRecord { sweep: self.sweep, positions, max_separation: max }
    }
}

impl Iterator for FixedNumberStream<'_> {
    type Item = FixedNumberRecord;

    fn next(&mut self) -> Option<FixedNumberRecord> {
        if self.sweep + self.settings.thinning > self.settings.sweeps {
            return None;
        }
        let n = self.config.lattice().len();
        for _ in 0..self.settings.thinning * n as u64 {
            self.kernel.step_with(MoveKind::Hop, &mut self.config, &mut self.rng);
        }
        self.sweep += self.settings.thinning;
        Some(self.record())
    }
}

/// Sample `count` anyons at fixed number from `e^{-beta E}`. Anyons start at
/// distinct uniformly random plaquettes drawn from the chain's generator.
pub fn fixed_number_sampler<'a>(
    model: &'a EnergyModel,
    count: usize,
    settings: &ChainSettings,
) -> Result<FixedNumberStream<'a>> {
    settings.validate()?;
    if count % 2 != 0 {
        return Err(Error::Parity(format!("fixed anyon number must be even, got {count}")));
    }
    if count < 2 || count >= model.lattice().len() {
        return config(format!(
            "fixed anyon number must satisfy 2 <= N < L², got {count}"
        ));
    }
    let mut rng = settings.rng();
    let lattice: TorusLattice = *model.lattice();
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    while picked.len() < count {
        let p = rng.random_range(0..lattice.len());
        if !picked.contains(&p) {
            picked.push(p);
        }
    }
    let list: Vec<_> = picked.into_iter().map(crate::torus::PlaquetteIndex).collect();
    let mut config = OccupancyConfig::from_plaquettes(model, &list)?;
    let kernel = Metropolis::new(model, settings.beta, settings.move_mix, settings.local_radius);
    for _ in 0..settings.burn_in * lattice.len() as u64 {
        kernel.step_with(MoveKind::Hop, &mut config, &mut rng);
    }
    Ok(FixedNumberStream { kernel, config, rng, sweep: settings.burn_in, settings: settings.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::PairPotential;
    use crate::exact::exact_distribution;
    use std::collections::HashSet;

    fn model(side: usize, j: f64, v: PairPotential) -> EnergyModel {
        EnergyModel::new(TorusLattice::new(side).unwrap(), j, v).unwrap()
    }

    #[test]
    fn downhill_moves_always_accepted() {
        // Two anyons annihilating under J > 0 lowers the energy.
        let m = model(4, 1.0, PairPotential::NonInteracting);
        let mut cfg = OccupancyConfig::from_mask(&m, 0b11).unwrap();
        let kernel = Metropolis::new(&m, 50.0, MoveMix::default(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = 0;
        for _ in 0..10_000 {
            let mut c = cfg.clone();
            let delta = m.pair_delta(&c, 0, 1);
            assert!(delta < 0.0);
            assert!(kernel.accept(delta, &mut rng));
            c.apply_pair(0, 1, delta);
            hits += usize::from(c.anyon_count() == 0);
        }
        assert_eq!(hits, 10_000);
        cfg.apply_pair(0, 1, -2.0);
        assert_eq!(cfg.anyon_count(), 0);
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        let m = model(5, 3.0, PairPotential::Logarithmic { amplitude: 2.0 });
        let kernel = Metropolis::new(&m, 0.0, MoveMix { global_pair: 1.0, local_pair: 0.0, hop: 0.0 }, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfg = OccupancyConfig::empty(*m.lattice());
        assert_eq!(kernel.sweep(&mut cfg, &mut rng), 25);
    }

    #[test]
    fn equal_sweeps_and_burn_in_yield_nothing() {
        let m = model(4, 1.0, PairPotential::NonInteracting);
        let s = ChainSettings { sweeps: 50, burn_in: 50, ..Default::default() };
        assert_eq!(run_chain(&m, &s, &[]).unwrap().count(), 0);
        let bad = ChainSettings { sweeps: 10, burn_in: 50, ..Default::default() };
        assert!(matches!(run_chain(&m, &bad, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn settings_validation() {
        let s = ChainSettings { thinning: 0, ..Default::default() };
        assert!(s.validate().is_err());
        let s = ChainSettings {
            move_mix: MoveMix { global_pair: 0.0, local_pair: 0.0, hop: 0.0 },
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = ChainSettings {
            move_mix: MoveMix { global_pair: -1.0, local_pair: 1.0, hop: 0.0 },
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn frozen_chain_stays_empty() {
        let m = model(8, 1.0, PairPotential::PowerLaw { amplitude: 1.0, exponent: 1.0 });
        let part = AnnulusPartition::build(8, 2, 2, (0, 0)).unwrap();
        let s = ChainSettings { beta: 1e6, sweeps: 200, burn_in: 10, ..Default::default() };
        for rec in run_chain(&m, &s, &[part]).unwrap() {
            assert_eq!(rec.anyon_count, 0);
            assert_eq!(rec.parity_even, vec![true]);
            assert_eq!(rec.even_fraction, vec![1.0]);
        }
    }

    #[test]
    fn record_schedule_follows_thinning() {
        let m = model(4, 1.0, PairPotential::NonInteracting);
        let s = ChainSettings { sweeps: 100, burn_in: 10, thinning: 7, ..Default::default() };
        let sweeps: Vec<u64> = run_chain(&m, &s, &[]).unwrap().map(|r| r.sweep).collect();
        assert_eq!(sweeps.len() as u64, s.record_count());
        assert_eq!(sweeps.first(), Some(&17));
        assert!(sweeps.windows(2).all(|w| w[1] - w[0] == 7));
    }

    #[test]
    fn identical_settings_reproduce_records() {
        let m = model(6, 1.0, PairPotential::PowerLaw { amplitude: 1.0, exponent: 1.0 });
        let part = AnnulusPartition::build(6, 1, 1, (2, 2)).unwrap();
        let s = ChainSettings { beta: 0.7, sweeps: 300, burn_in: 20, seed: 99, ..Default::default() };
        let a: Vec<_> = run_chain(&m, &s, std::slice::from_ref(&part)).unwrap().collect();
        let b: Vec<_> = run_chain(&m, &s, std::slice::from_ref(&part)).unwrap().collect();
        assert_eq!(a, b);
        let other = ChainSettings { stream: 1, ..s };
        let c: Vec<_> = run_chain(&m, &other, &[part]).unwrap().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn infinite_temperature_visits_every_even_configuration() {
        let m = model(2, 1.0, PairPotential::NonInteracting);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kernel = Metropolis::new(&m, 0.0, MoveMix::default(), 2);
        let mut cfg = OccupancyConfig::empty(*m.lattice());
        let mut seen = HashSet::new();
        for _ in 0..100_000 {
            kernel.sweep(&mut cfg, &mut rng);
            seen.insert(cfg.to_mask().unwrap());
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn two_by_two_free_chain_matches_exact_mean() {
        // Z = 1 + 6/4 + 1/16, <N> = (12/4 + 4/16) / Z.
        let m = model(2, 1.0, PairPotential::NonInteracting);
        let beta = 2f64.ln();
        let exact = exact_distribution(&m, beta).unwrap();
        assert!((exact.mean_anyon_count() - 3.25 / 2.5625).abs() < 1e-12);
        let s = ChainSettings { beta, sweeps: 400_000, burn_in: 100, seed: 11, ..Default::default() };
        let mean = run_chain(&m, &s, &[]).unwrap().map(|r| r.anyon_count as f64).sum::<f64>()
            / s.record_count() as f64;
        assert!((mean - 1.26829).abs() < 0.01, "{mean}");
    }

    #[test]
    fn fixed_number_rejects_odd_counts() {
        let m = model(8, 0.0, PairPotential::Logarithmic { amplitude: 1.0 });
        let s = ChainSettings::default();
        assert!(matches!(fixed_number_sampler(&m, 3, &s), Err(Error::Parity(_))));
        assert!(fixed_number_sampler(&m, 0, &s).is_err());
    }

    #[test]
    fn fixed_number_keeps_count_and_confines_when_cold() {
        let m = model(16, 0.0, PairPotential::Logarithmic { amplitude: 1.0 });
        let s = ChainSettings { beta: 40.0, sweeps: 300, burn_in: 50, seed: 2, ..Default::default() };
        let recs: Vec<_> = fixed_number_sampler(&m, 2, &s).unwrap().collect();
        assert!(recs.iter().all(|r| r.positions.len() == 2));
        assert!(recs.iter().all(|r| (r.max_separation - 1.0).abs() < 1e-12));
    }
}
