//! Simulator for discretized quantum greedy optimization (d-QGO):
//! Trotterized annealing with counterdiabatic driving whose term signs are
//! fixed greedily from finite-difference energy sensitivities.
//!
//! Modules follow the pipeline: an Ising instance ([`ising`]) is annealed
//! under a schedule ([`schedule`]) by a statevector engine ([`statevector`],
//! [`evolve`]), the greedy optimizer ([`qgo`]) drives repeated evolutions,
//! calibration ([`calibration`]) fixes the schedule prefactors per size, and
//! [`experiment`] aggregates success probabilities over instance ensembles.

pub mod calibration;
pub mod error;
pub mod evolve;
pub mod experiment;
pub mod ising;
pub mod qgo;
pub mod rng;
pub mod schedule;
pub mod statevector;

pub use error::{Error, Result};
pub use ising::{IsingInstance, SpinConfig, MAX_QUBITS};
pub use qgo::{daqc_run, qgo_run, Engine, QgoConfig, QgoResult};
pub use schedule::AnnealSchedule;
pub use statevector::StateVector;
