//! Anyon occupation patterns on the plaquette lattice.

use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::torus::{PlaquetteIndex, TorusLattice};

const VACANT: u32 = u32::MAX;

/// Even-parity occupation pattern with its cached total energy.
///
/// The occupancy bits and the anyon list are kept in sync; the list order is
/// an implementation detail but is deterministic for a given move history.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyConfig {
    lattice: TorusLattice,
    occupied: Vec<bool>,
    anyons: Vec<usize>,
    slot: Vec<u32>,
    energy: f64,
}

impl OccupancyConfig {
    /// The anyon-free configuration (energy zero for every model).
    pub fn empty(lattice: TorusLattice) -> Self {
        Self {
            lattice,
            occupied: vec![false; lattice.len()],
            anyons: Vec::new(),
            slot: vec![VACANT; lattice.len()],
            energy: 0.0,
        }
    }

    /// Configuration with anyons on the given plaquettes.
    pub fn from_plaquettes(model: &EnergyModel, plaquettes: &[PlaquetteIndex]) -> Result<Self> {
        let mut cfg = Self::empty(*model.lattice());
        for &p in plaquettes {
            if p.0 >= cfg.occupied.len() {
                return Err(Error::Domain(format!("plaquette {} out of range", p.0)));
            }
            if cfg.occupied[p.0] {
                return Err(Error::Domain(format!("plaquette {} listed twice", p.0)));
            }
            cfg.toggle(p.0);
        }
        if cfg.anyons.len() % 2 != 0 {
            return Err(Error::Parity(format!(
                "{} anyons given; the torus requires an even number",
                cfg.anyons.len()
            )));
        }
        cfg.energy = model.total_energy(&cfg)?;
        Ok(cfg)
    }

    /// Configuration from a bit mask (bit `i` = plaquette `i`), `L² <= 64`.
    pub fn from_mask(model: &EnergyModel, mask: u64) -> Result<Self> {
        let n = model.lattice().len();
        if n > 64 {
            return Err(Error::Domain("bit-mask configurations need L² <= 64".into()));
        }
        let list: Vec<PlaquetteIndex> =
            (0..n).filter(|&i| mask >> i & 1 == 1).map(PlaquetteIndex).collect();
        Self::from_plaquettes(model, &list)
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    #[inline]
    pub fn is_occupied(&self, p: PlaquetteIndex) -> bool {
        self.occupied[p.0]
    }

    /// Occupied plaquettes (raw indices).
    pub fn anyons(&self) -> &[usize] {
        &self.anyons
    }

    pub fn anyon_count(&self) -> usize {
        self.anyons.len()
    }

    /// Cached total energy.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Bit mask of the occupation for lattices with at most 64 plaquettes.
    pub fn to_mask(&self) -> Option<u64> {
        if self.occupied.len() > 64 {
            return None;
        }
        Some(self.anyons.iter().fold(0u64, |m, &p| m | (1u64 << p)))
    }

    /// Flip the two plaquettes `p`, `q` (distinct) and add `delta` to the
    /// cached energy. Used by moves whose energy change was already computed.
    pub(crate) fn apply_pair(&mut self, p: usize, q: usize, delta: f64) {
        debug_assert_ne!(p, q);
        self.toggle(p);
        self.toggle(q);
        self.energy += delta;
    }

    /// Single-plaquette flip. Breaks the parity invariant.
    #[cfg(test)]
    pub(crate) fn flip_single(&mut self, p: usize, delta: f64) {
        self.toggle(p);
        self.energy += delta;
    }

    fn toggle(&mut self, p: usize) {
        if self.occupied[p] {
            let at = self.slot[p] as usize;
            self.anyons.swap_remove(at);
            if at < self.anyons.len() {
                self.slot[self.anyons[at]] = at as u32;
            }
            self.slot[p] = VACANT;
            self.occupied[p] = false;
        } else {
            self.slot[p] = self.anyons.len() as u32;
            self.anyons.push(p);
            self.occupied[p] = true;
        }
    }

    /// Checks that the bit field and the anyon list agree.
    pub fn is_consistent(&self) -> bool {
        let count = self.occupied.iter().filter(|&&b| b).count();
        count == self.anyons.len()
            && self
                .anyons
                .iter()
                .enumerate()
                .all(|(i, &p)| self.occupied[p] && self.slot[p] as usize == i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::PairPotential;

    fn model(side: usize) -> EnergyModel {
        EnergyModel::new(TorusLattice::new(side).unwrap(), 1.0, PairPotential::NonInteracting).unwrap()
    }

    #[test]
    fn rejects_odd_parity() {
        let m = model(4);
        let err = OccupancyConfig::from_plaquettes(&m, &[PlaquetteIndex(1)]).unwrap_err();
        assert!(matches!(err, Error::Parity(_)));
    }

    #[test]
    fn mask_round_trip_and_consistency() {
        let m = model(4);
        let cfg = OccupancyConfig::from_mask(&m, 0b1010_0000_0000_0110).unwrap();
        assert_eq!(cfg.anyon_count(), 4);
        assert_eq!(cfg.to_mask(), Some(0b1010_0000_0000_0110));
        assert!(cfg.is_consistent());
        assert_eq!(cfg.energy(), 4.0);
    }

    #[test]
    fn toggling_keeps_list_in_sync() {
        let m = model(5);
        let mut cfg = OccupancyConfig::empty(*m.lattice());
        for (p, q) in [(0, 3), (7, 9), (3, 12), (0, 7), (20, 24), (9, 12)] {
            cfg.apply_pair(p, q, 0.0);
            assert!(cfg.is_consistent());
        }
        assert_eq!(cfg.anyon_count(), 2);
        assert!(cfg.is_occupied(PlaquetteIndex(20)) && cfg.is_occupied(PlaquetteIndex(24)));
    }
}
