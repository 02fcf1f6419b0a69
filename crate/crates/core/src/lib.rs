//! Thermal equilibrium of interacting anyon gases on the toric-code torus.
//!
//! The plaquette sector is modelled as occupation bits on an `L x L` torus
//! with even total parity. Modules cover the lattice geometry, energy
//! functionals with incremental deltas, Metropolis and exact samplers,
//! closed-form mean-field analytics, estimators for topological entropy and
//! correlation range, and finite-size scaling.

pub mod energy;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod meanfield;
pub mod occupancy;
pub mod sampler;
pub mod scaling;
pub mod stats;
pub mod torus;

pub use energy::{BosonCouplingModel, EnergyModel, PairPotential};
pub use error::{Error, Result};
pub use exact::{exact_distribution, two_anyon_distance_law, ExactDistribution};
pub use occupancy::OccupancyConfig;
pub use sampler::{fixed_number_sampler, run_chain, ChainSettings, MoveMix, SampleRecord};
pub use scaling::Phase;
pub use torus::{AnnulusPartition, ParityWindow, PlaquetteIndex, Region, TorusLattice};
