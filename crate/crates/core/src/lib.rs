//! Simulation and training toolkit for learning the pairwise SWAP operation of a
//! quantum repeater node.
//!
//! A spin Hamiltonian with time-dependent tunneling, bias and Ising coupling
//! terms drives the joint density matrix of `n` qubits. The control
//! coefficients are truncated Fourier series in time and are fitted with
//! Levenberg-Marquardt so that the evolved state matches the SWAP of the
//! initial state. Trained two-qubit controllers can then be replicated onto
//! larger registers and stress-tested with per-step noise injection.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex matrices and the small set of kernels used everywhere.
//! - [`hamiltonian`]: Fourier-parameterized controls and Hamiltonian assembly.
//! - [`evolution`]: fixed-step RK4 integration of the von Neumann equation with noise.
//! - [`states`]: charge-basis and Haar-random samples with their SWAP targets.
//! - [`training`]: finite-difference Jacobians and the Levenberg-Marquardt loop.
//! - [`scaling`]: pairwise replication of trained controls.
//! - [`harness`]: experiment orchestration behind the `swapnet` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod scaling;
pub mod states;
pub mod training;

pub use error::{Error, Result};
pub use evolution::{evolve, EvolutionConfig, NoiseConfig, NoiseKind};
pub use hamiltonian::{build_hamiltonian, ControlParameters, FourierSeries, QubitPair};
pub use linalg::{ComplexMatrix, ComplexVector};
pub use scaling::{replicate, CrossPairCoupling, ReplicationSpec};
pub use states::{make_training_set, PairingScheme, SampleMode, TrainingSample};
pub use training::{train, TrainingConfig, TrainingHistory};

/// Largest register the toolkit supports (a 256×256 density matrix).
pub const MAX_QUBITS: usize = 8;
