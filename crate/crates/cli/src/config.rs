//! Harness configuration: a JSON config file with per-experiment sections,
//! overridable by command-line flags. Every field has a default, so an empty
//! file (or no file) reproduces the reference benchmark setup.

use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed; every work item derives its own stream from this.
    pub seed: u64,
    pub out_dir: String,
    pub format: OutputFormat,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub exp1: Exp1Config,
    pub exp2: Exp2Config,
    pub exp3: Exp3Config,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 11,
            out_dir: "results".into(),
            format: OutputFormat::Csv,
            threads: None,
            exp1: Exp1Config::default(),
            exp2: Exp2Config::default(),
            exp3: Exp3Config::default(),
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Gate-level validation on the fixed 2×2 instance p = [[0.4, 0.1], [0.1, 0.4]].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Exp1Config {
    /// Clip bound for the log-ratio oracle.
    pub l: f64,
    /// Arithmetic register width in qubits.
    pub arith_bits: u32,
    /// Phase-register sizes t (M = 2^t) to sweep, inclusive.
    pub t_min: usize,
    pub t_max: usize,
    /// Shots per median estimate in the sampled-error curve.
    pub median_shots: u32,
    /// Monte Carlo repeats of the median estimate per t.
    pub median_trials: usize,
}

impl Default for Exp1Config {
    fn default() -> Self {
        Self {
            l: 2.0,
            arith_bits: 6,
            t_min: 3,
            t_max: 8,
            median_shots: 5,
            median_trials: 400,
        }
    }
}

/// Estimator error vs budget across random 2×2 instances.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Exp2Config {
    /// Number of random joint instances (K).
    pub instances: usize,
    /// Monte Carlo trials per (instance, budget) cell.
    pub trials: usize,
    /// Clip bound for the quantum estimator.
    pub l: f64,
    /// Median shots per quantum estimate.
    pub shots: u32,
    /// Instances are rejection-sampled until analytic MI lies in this range.
    pub mi_lo: f64,
    pub mi_hi: f64,
    /// Classical sample budgets: log-spaced grid.
    pub classical_min: u64,
    pub classical_max: u64,
    pub classical_points: usize,
    /// Quantum Grover-iteration budgets: log-spaced, `m_points_per_octave`
    /// values per doubling of M.
    pub m_min: u64,
    pub m_max: u64,
    pub m_points_per_octave: u32,
    /// Targets for the queries-to-precision table.
    pub tau_grid: Vec<f64>,
}

impl Default for Exp2Config {
    fn default() -> Self {
        Self {
            instances: 20,
            trials: 120,
            l: 3.0,
            shots: 5,
            mi_lo: 0.030,
            mi_hi: 0.323,
            classical_min: 50,
            classical_max: 500_000,
            classical_points: 25,
            m_min: 8,
            m_max: 8192,
            m_points_per_octave: 3,
            tau_grid: vec![0.1, 0.05, 0.02, 0.01, 0.005, 0.003, 0.002, 0.001],
        }
    }
}

/// Which networks the PC benchmark runs on.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NetworkSpec {
    /// The 8-node chest-clinic network with its standard CPTs.
    Asia,
    /// Seeded random binary DAG with uniform clamped CPTs.
    Synthetic {
        nodes: usize,
        edge_prob: f64,
        seed: u64,
    },
}

impl NetworkSpec {
    pub fn label(&self) -> String {
        match self {
            NetworkSpec::Asia => "asia".into(),
            NetworkSpec::Synthetic { nodes, .. } => format!("synthetic-{nodes}"),
        }
    }
}

/// PC skeleton recovery: F1 and total queries per (τ, method) cell.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Exp3Config {
    /// PC trials per (network, τ, method) cell.
    pub trials: usize,
    /// Maximum conditioning-set size d.
    pub max_depth: usize,
    /// Clip bound for the quantum CI test.
    pub l: f64,
    /// Median shots per quantum estimate.
    pub shots: u32,
    pub tau_grid: Vec<f64>,
    pub networks: Vec<NetworkSpec>,
}

impl Default for Exp3Config {
    fn default() -> Self {
        Self {
            trials: 20,
            max_depth: 3,
            l: 3.0,
            shots: 5,
            tau_grid: vec![
                0.05, 0.03, 0.02, 0.014, 0.01, 0.007, 0.005, 0.003, 0.002, 0.001,
            ],
            networks: vec![
                NetworkSpec::Asia,
                NetworkSpec::Synthetic {
                    nodes: 12,
                    edge_prob: 0.22,
                    seed: 11,
                },
            ],
        }
    }
}
