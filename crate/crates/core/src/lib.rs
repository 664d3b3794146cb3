//! Simulation toolkit for the asymmetric magnetization problem (AMP).
//!
//! The AMP is a classical energy that depends only on the total
//! magnetization of `N` spins, with a false minimum at `m = 0` and the true
//! minimum at `m = 1`. This crate builds annealing Hamiltonians for a family
//! of drive schemes (uniform sweep, inhomogeneous driving, transverse
//! couplers, RFQA variants and reverse annealing), computes instantaneous
//! spectra and minimum gaps, integrates the time-dependent Schrödinger
//! equation, and fits time-to-solution scaling exponents.
//!
//! Module map:
//!
//! * [`problem`] – AMP energy, magnetization, density of states.
//! * [`hilbert`] – state vectors and matrix-free Hamiltonian kernels in the
//!   full `2^N` space and the `N + 1` dimensional symmetric subspace.
//! * [`drives`] – drive schemes and their Hamiltonian terms at `(s, t)`.
//! * [`spectrum`] – gap profiles, level diagrams, forward-approximation gap
//!   prediction and the multi-photon rate estimate.
//! * [`evolve`] – time integration, success probability and TTS.
//! * [`experiments`] – exponential fits, scaling studies and the method ×
//!   problem-set exponent table.

pub mod drives;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod hilbert;
pub mod lanczos;
pub mod problem;
pub mod rng;
pub mod spectrum;

pub use drives::{CouplerKind, DriveScheme, SchemeFamily};
pub use error::{AmpError, Result};
pub use evolve::{EvolutionConfig, TtsRecord};
pub use experiments::{RunConfig, ScalingFit};
pub use hilbert::{HamiltonianTerms, StateVector, SymmetricState};
pub use problem::{AmpParams, DifficultyEnsemble};
pub use spectrum::{GapProfile, LevelDiagram};

/// Complex amplitude type used throughout the crate.
pub type C64 = num_complex::Complex64;
