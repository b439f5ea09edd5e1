//! Quantum trajectories of a continuously (weakly) measured, externally
//! driven qubit, with work/heat bookkeeping along single realizations.
//!
//! The conditional state obeys the Bayesian stochastic master equation for
//! a qubit monitored in the `σ_z` basis by a linear detector of contrast
//! `ΔI` and noise density `S_0`, while the Hamiltonian
//! `H_t = ε σ_z + λ_t σ_x` is driven by a sech ramp. Every integration step
//! is split additively into a unitary increment (work) and a measurement
//! increment (heat), from which the module [`thermo`] builds per-trajectory
//! ledgers, transition-probability decompositions, two-point-measurement
//! work statistics and Jarzynski free-energy estimates.
//!
//! Modules:
//! - [`qubit`]: 2×2 Hermitian operators, density matrices, spectra, Gibbs states.
//! - [`noise`]: counter-based detector noise streams.
//! - [`sme`]: single-trajectory integration schemes.
//! - [`thermo`]: ledgers, transition decompositions, TPM and Jarzynski.
//! - [`feedback`]: drive-gain feedback that tracks a backaction-free reference.
//! - [`ensemble`]: seeded Monte Carlo ensembles and the dephasing reference.
//! - [`experiment`]: configuration, presets and result files.

pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod feedback;
pub mod noise;
pub mod qubit;
pub mod sme;
pub mod thermo;

pub use error::{Error, Result};
