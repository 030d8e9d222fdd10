//! Experiment configuration: the JSON file every command reads.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{Backend, ModelConfig, ShiftingMode, SignalModel, Strategy};
use crate::simulator::SimSettings;

use super::generate::GenParams;

pub const DEFAULT_SEED: u64 = 42;

/// One row of a comparison matrix; unset fields inherit the base config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareCell {
    pub label: Option<String>,
    pub strategy: Option<Strategy>,
    pub shifting_mode: Option<ShiftingMode>,
    pub signal_model: Option<SignalModel>,
    pub eps_p: Option<f64>,
}

impl CompareCell {
    pub fn apply(&self, base: &ModelConfig) -> ModelConfig {
        let mut cfg = base.clone();
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(m) = self.shifting_mode {
            cfg.shifting_mode = m;
        }
        if let Some(m) = self.signal_model {
            cfg.signal_model = m;
        }
        if let Some(e) = self.eps_p {
            cfg.eps_p = e;
        }
        cfg
    }

    pub fn label_for(&self, cfg: &ModelConfig) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}/{}/{}", cfg.strategy, cfg.shifting_mode, cfg.signal_model))
    }
}

/// Named comparison matrices available from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    Strategies,
    Modes,
    Signals,
}

impl std::str::FromStr for Matrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strategies" => Ok(Self::Strategies),
            "modes" => Ok(Self::Modes),
            "signals" => Ok(Self::Signals),
            other => Err(Error::Invalid(format!("unknown matrix {other:?} (strategies | modes | signals)"))),
        }
    }
}

impl Matrix {
    pub fn cells(self) -> Vec<CompareCell> {
        match self {
            Self::Strategies => Strategy::ALL
                .iter()
                .map(|s| CompareCell { label: Some(s.to_string()), strategy: Some(*s), ..CompareCell::default() })
                .collect(),
            Self::Modes => ShiftingMode::ALL
                .iter()
                .map(|m| CompareCell {
                    label: Some(m.to_string()),
                    strategy: Some(Strategy::Cooperative),
                    shifting_mode: Some(*m),
                    ..CompareCell::default()
                })
                .collect(),
            Self::Signals => [SignalModel::DirectGaussian, SignalModel::Envelope]
                .iter()
                .map(|m| CompareCell { label: Some(m.to_string()), signal_model: Some(*m), ..CompareCell::default() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Instance bundle directory.
    pub instance: Option<PathBuf>,
    /// `bundled` or `cmd:<command>`.
    pub backend: String,
    #[serde(flatten)]
    pub model: ModelConfig,
    pub simulation: SimSettings,
    pub generator: GenParams,
    /// Rows of `compare`; empty means one row per strategy.
    pub matrix: Vec<CompareCell>,
    /// ε_p values for the revenue–risk frontier written by `simulate`.
    pub eps_sweep: Vec<f64>,
    /// Also write the solved model as `model.mps`.
    pub export_mps: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            instance: None,
            backend: "bundled".into(),
            model: ModelConfig::default(),
            simulation: SimSettings::default(),
            generator: GenParams::default(),
            matrix: Vec::new(),
            eps_sweep: vec![0.05, 0.10, 0.25],
            export_mps: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn backend(&self) -> Result<Backend> {
        self.backend.parse()
    }

    /// Checks everything that can be checked without an instance.
    pub fn validate(&self) -> Result<()> {
        self.backend()?;
        self.simulation.validate()?;
        if let Some(dir) = &self.instance {
            if !dir.is_dir() {
                return Err(Error::Invalid(format!("instance directory {} does not exist", dir.display())));
            }
        }
        if let Some(e) = self.eps_sweep.iter().find(|e| !(**e > 0.0 && **e <= 0.5)) {
            return Err(Error::Domain(format!("eps sweep value {e} outside (0, 0.5]")));
        }
        Ok(())
    }

    pub fn matrix_cells(&self) -> Vec<CompareCell> {
        if self.matrix.is_empty() { Matrix::Strategies.cells() } else { self.matrix.clone() }
    }
}
