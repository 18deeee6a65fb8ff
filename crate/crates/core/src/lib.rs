//! Numerical laboratory for retrodiction in three formulations of quantum
//! mechanics: unitary propagation with projective measurement, Bohmian
//! trajectories, and decoherent histories.
//!
//! Units are `hbar = 1`; the Schrödinger-picture convention is
//! `psi(t) = exp(-iHt) psi(0)`.

// `!(x > 0.0)` style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohm;
pub mod error;
pub mod flux;
pub mod grid;
pub mod histories;
pub mod measure;
pub mod potential;
pub mod propagate;
pub mod rng;
pub mod scenarios;
pub mod snapshot;
pub mod spectral;
pub mod verify;
pub mod wave;

pub use error::{Error, Result};
pub use flux::{continuity_residual, current, density};
pub use grid::{Axis, Grid};
pub use potential::{Potential, PotentialKind};
pub use propagate::{evolve, reverse_evolve, step_split, EvolutionRecord, Hamiltonian, Propagator};
pub use wave::{gaussian_packet, Packet, WaveFunction};

pub use num_complex::Complex64;
