//! Experiment configuration files.
//!
//! Every command echoes its fully resolved configuration as `config.json`;
//! passing that file back through `--config` reproduces the run.

use serde::{Deserialize, Serialize};
use subnyquist::demodulator::DemodConfig;
use subnyquist::evaluation::{LabeledModel, SweepSpec};
use subnyquist::pscs::{FingerBank, WindowPlan};
use subnyquist::{BasisKind, MeasurementKind, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Generate(GenerateConfig),
    Discrete(DiscreteConfig),
    Serial(SerialConfig),
    Pscs(PscsConfig),
    Reconstruct(SolverConfig),
    Sweep(SweepSpec),
    Energy(EnergyConfig),
}

impl ExperimentConfig {
    pub fn mode(&self) -> &'static str {
        match self {
            ExperimentConfig::Generate(_) => "generate",
            ExperimentConfig::Discrete(_) => "discrete",
            ExperimentConfig::Serial(_) => "serial",
            ExperimentConfig::Pscs(_) => "pscs",
            ExperimentConfig::Reconstruct(_) => "reconstruct",
            ExperimentConfig::Sweep(_) => "sweep",
            ExperimentConfig::Energy(_) => "energy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub n: usize,
    pub k: usize,
    pub basis: BasisKind,
    pub seed: u64,
    pub amplitude_range: [f64; 2],
    pub sign_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    pub l: usize,
    pub matrix_kind: MeasurementKind,
    pub seed: u64,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerialConfig {
    pub demod: DemodConfig,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PscsConfig {
    pub plan: WindowPlan,
    pub bank: FingerBank,
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// Raw samples per block.
    pub n: usize,
    /// Compressed measurements per block.
    pub l: usize,
    pub models: Vec<LabeledModel>,
    /// Label of the model the energy ratios are taken against; the first
    /// model when absent.
    #[serde(default)]
    pub reference: Option<String>,
}
