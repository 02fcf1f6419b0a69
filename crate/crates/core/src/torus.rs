//! Periodic square lattice of plaquettes, minimal-image distances and the
//! annular region partition used by the topological entropy estimators.
//!
//! Plaquette centres sit on the integer grid with unit lattice constant.
//! Vertices are never indexed separately: the vertex sector is an identical,
//! independent copy of the plaquette sector.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};

/// An `L x L` torus of plaquettes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusLattice {
    side: usize,
}

/// Linear plaquette label, `index = y * L + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaquetteIndex(pub usize);

impl From<usize> for PlaquetteIndex {
    fn from(i: usize) -> Self {
        PlaquetteIndex(i)
    }
}

impl TorusLattice {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return config(format!("lattice side must satisfy L >= 2, got {side}"));
        }
        Ok(Self { side })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of plaquettes, `L²`.
    #[inline]
    pub fn len(&self) -> usize {
        self.side * self.side
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the plaquette at `(x, y)`, wrapping both coordinates.
    #[inline]
    pub fn index(&self, x: i64, y: i64) -> PlaquetteIndex {
        let l = self.side as i64;
        let x = x.rem_euclid(l) as usize;
        let y = y.rem_euclid(l) as usize;
        PlaquetteIndex(y * self.side + x)
    }

    #[inline]
    pub fn coords(&self, p: PlaquetteIndex) -> (usize, usize) {
        (p.0 % self.side, p.0 / self.side)
    }

    pub fn plaquettes(&self) -> impl Iterator<Item = PlaquetteIndex> {
        (0..self.len()).map(PlaquetteIndex)
    }

    /// Periodic displacement `p' - p` reduced to the minimal image, each
    /// component in `0..=L/2`.
    #[inline]
    pub fn min_image_offsets(&self, p: PlaquetteIndex, q: PlaquetteIndex) -> (usize, usize) {
        let (x0, y0) = self.coords(p);
        let (x1, y1) = self.coords(q);
        (self.fold(x1 + self.side - x0), self.fold(y1 + self.side - y0))
    }

    #[inline]
    fn fold(&self, d: usize) -> usize {
        let d = d % self.side;
        d.min(self.side - d)
    }

    /// Index into a displacement table of length `L²` for the offset `q - p`
    /// (unreduced, `dy * L + dx` with both components in `0..L`).
    #[inline]
    pub fn displacement_slot(&self, p: PlaquetteIndex, q: PlaquetteIndex) -> usize {
        let (x0, y0) = self.coords(p);
        let (x1, y1) = self.coords(q);
        let dx = (x1 + self.side - x0) % self.side;
        let dy = (y1 + self.side - y0) % self.side;
        dy * self.side + dx
    }

    /// Minimal-image Euclidean distance between two distinct plaquettes.
    pub fn min_image_distance(&self, p: PlaquetteIndex, q: PlaquetteIndex) -> Result<f64> {
        if p == q {
            return domain("distance requested between a plaquette and itself");
        }
        if p.0 >= self.len() || q.0 >= self.len() {
            return domain(format!("plaquette index out of range for L = {}", self.side));
        }
        let (dx, dy) = self.min_image_offsets(p, q);
        Ok(((dx * dx + dy * dy) as f64).sqrt())
    }

    /// Distance for a displacement-table slot; `None` for the zero offset.
    pub fn slot_distance(&self, slot: usize) -> Option<f64> {
        if slot == 0 {
            return None;
        }
        let dx = self.fold(slot % self.side);
        let dy = self.fold(slot / self.side);
        Some(((dx * dx + dy * dy) as f64).sqrt())
    }
}

/// Label of a plaquette within an [`AnnulusPartition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Inner square.
    Ra,
    /// Frame surrounding the inner square.
    Rb,
    /// Everything else.
    Rc,
}

/// An `l x l` square block of plaquettes, the region whose net anyon
/// occupancy is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParityWindow {
    lattice: TorusLattice,
    anchor: (usize, usize),
    side: usize,
}

impl ParityWindow {
    pub fn new(lattice: TorusLattice, side: usize, anchor: (usize, usize)) -> Result<Self> {
        if side == 0 || side > lattice.side() {
            return config(format!(
                "window side must satisfy 1 <= l <= L = {}, got {side}",
                lattice.side()
            ));
        }
        let anchor = (anchor.0 % lattice.side(), anchor.1 % lattice.side());
        Ok(Self { lattice, anchor, side })
    }

    pub fn lattice(&self) -> TorusLattice {
        self.lattice
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn plaquettes(&self) -> impl Iterator<Item = PlaquetteIndex> + '_ {
        let (ax, ay) = (self.anchor.0 as i64, self.anchor.1 as i64);
        let l = self.side as i64;
        (0..l).flat_map(move |dy| (0..l).map(move |dx| self.lattice.index(ax + dx, ay + dy)))
    }

    /// `true` when the window holds an even number of anyons.
    pub fn is_even(&self, occupied: &[bool]) -> bool {
        self.plaquettes().filter(|p| occupied[p.0]).count() % 2 == 0
    }

    /// Bit mask of the window for lattices with at most 64 plaquettes.
    pub fn mask(&self) -> Option<u64> {
        if self.lattice.len() > 64 {
            return None;
        }
        Some(self.plaquettes().fold(0u64, |m, p| m | (1u64 << p.0)))
    }

    /// Fraction of all `L²` translates of this window that hold an even
    /// number of anyons.
    pub fn even_fraction(&self, occupied: &[bool]) -> f64 {
        let side = self.lattice.side();
        let l = self.side;
        // Horizontal sliding parity, then vertical.
        let mut rows = vec![false; side * side];
        for y in 0..side {
            let row = &occupied[y * side..(y + 1) * side];
            let mut acc = row[..l].iter().fold(false, |a, &b| a ^ b);
            for x in 0..side {
                rows[y * side + x] = acc;
                acc ^= row[x] ^ row[(x + l) % side];
            }
        }
        let mut even = 0usize;
        for x in 0..side {
            let mut acc = (0..l).fold(false, |a, y| a ^ rows[y * side + x]);
            for y in 0..side {
                if !acc {
                    even += 1;
                }
                acc ^= rows[y * side + x] ^ rows[((y + l) % side) * side + x];
            }
        }
        even as f64 / (side * side) as f64
    }
}

/// Three-region partition: an inner square `Ra` of side `l`, a frame `Rb` of
/// width `w` around it and the remainder `Rc`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusPartition {
    window: ParityWindow,
    width: usize,
    labels: Vec<Region>,
}

impl AnnulusPartition {
    pub fn build(side: usize, l: usize, w: usize, anchor: (usize, usize)) -> Result<Self> {
        let lattice = TorusLattice::new(side)?;
        if l < 1 {
            return config("inner square side must satisfy l >= 1");
        }
        if w < 1 {
            return config("annulus width must satisfy w >= 1");
        }
        if l + 2 * w > side.saturating_sub(1) {
            return config(format!(
                "partition requires l + 2w <= L - 1, got {l} + 2*{w} > {}",
                side as i64 - 1
            ));
        }
        let window = ParityWindow::new(lattice, l, anchor)?;
        let mut labels = vec![Region::Rc; lattice.len()];
        let (ax, ay) = (window.anchor.0 as i64, window.anchor.1 as i64);
        let (li, wi) = (l as i64, w as i64);
        for dy in -wi..li + wi {
            for dx in -wi..li + wi {
                let inner = (0..li).contains(&dx) && (0..li).contains(&dy);
                labels[lattice.index(ax + dx, ay + dy).0] =
                    if inner { Region::Ra } else { Region::Rb };
            }
        }
        Ok(Self { window, width: w, labels })
    }

    /// Partition with the default annulus width `w = l`.
    pub fn with_default_width(side: usize, l: usize, anchor: (usize, usize)) -> Result<Self> {
        Self::build(side, l, l, anchor)
    }

    pub fn lattice(&self) -> TorusLattice {
        self.window.lattice
    }

    pub fn inner_side(&self) -> usize {
        self.window.side
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.window.anchor
    }

    /// The `Ra` block.
    pub fn window(&self) -> &ParityWindow {
        &self.window
    }

    pub fn region(&self, p: PlaquetteIndex) -> Region {
        self.labels[p.0]
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&r| r == region).count()
    }

    pub fn members(&self, region: Region) -> impl Iterator<Item = PlaquetteIndex> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &r)| r == region)
            .map(|(i, _)| PlaquetteIndex(i))
    }

    /// Bit mask of a region for lattices with at most 64 plaquettes.
    pub fn mask(&self, region: Region) -> Option<u64> {
        if self.labels.len() > 64 {
            return None;
        }
        Some(self.members(region).fold(0u64, |m, p| m | (1u64 << p.0)))
    }
}

/// Default scale grid: every `l` with `3l <= L - 1`, thinned geometrically
/// (ratio 1.25) above `l = 8`.
pub fn default_scale_grid(side: usize) -> Vec<usize> {
    let max = side.saturating_sub(1) / 3;
    let mut grid: Vec<usize> = (1..=max.min(8)).collect();
    if max > 8 {
        let mut l = 8usize;
        loop {
            l = ((l as f64) * 1.25).ceil() as usize;
            if l >= max {
                break;
            }
            grid.push(l);
        }
        grid.push(max);
    }
    grid
}
