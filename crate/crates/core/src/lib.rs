//! Numerical twin of a fibre-optic asymmetric phase-covariant 1→2 qubit cloner.
//!
//! * [`fock`]: one- and two-photon states under couplers, phases, losses and post-selection.
//! * [`design`]: coupler reflectances for a given asymmetry, fidelity trade-off curves.
//! * [`network`]: the cloner circuit and fidelity read-out.
//! * [`noise`]: imperfection models and Monte-Carlo coincidence counting.
//! * [`experiments`]: configuration, CSV tables and the commands behind the `cloner` binary.

pub mod design;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod network;
pub mod noise;

pub use error::{Error, Result};
