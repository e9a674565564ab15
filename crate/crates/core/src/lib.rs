//! Quantum estimation of clipped KL divergence and conditional mutual
//! information, with a classical plug-in baseline and PC skeleton discovery.
//!
//! The crate has two execution paths for the quantum estimator:
//!
//! * [`qkla_circuit`] builds the amplitude-encoding unitary gate by gate and
//!   simulates canonical amplitude estimation on the dense state vector in
//!   [`statevector`]. This is exact but exponential in qubit count.
//! * [`qae_model`] evaluates the closed-form outcome law of canonical QAE
//!   directly from the known amplitude, which is what the benchmark
//!   experiments use for everything beyond gate-level validation.
//!
//! Classical machinery lives in [`distributions`] (finite distributions, KL,
//! MI/CMI, plug-in estimators) and [`bayesnet`] (discrete Bayesian networks,
//! exact joints, ancestral sampling). [`pc`] runs PC skeleton discovery with
//! either estimator as its conditional-independence subroutine and accounts
//! for every oracle query in a [`QueryLedger`].

pub mod bayesnet;
pub mod distributions;
pub mod error;
pub mod pc;
pub mod qae_model;
pub mod qkla_circuit;
pub mod rng;
pub mod statevector;

pub use bayesnet::{asia_network, random_cpts, random_dag, BayesNet, Dag, ForwardSampler, Skeleton};
pub use distributions::{ClipParams, DiscreteDistribution, JointTable, Stratum};
pub use error::{Error, Result};
pub use pc::{pc_skeleton, skeleton_f1, CiDecision, PcConfig};
pub use qae_model::{Method, QaeSchedule, QueryLedger};
pub use qkla_circuit::{FixedPointCodec, QklaCircuit};
pub use statevector::{QuantumState, UnitaryMatrix};
