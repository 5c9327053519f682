//! Flat key-value run configuration.
//!
//! Precedence is built-in defaults < settings file < command-line flags.
//! Unknown keys are an error so typos never pass silently. The full key list
//! is in the README; values are plain scalars or comma-separated integer
//! lists (`conv_channels = 16,16`).

use crate::error::CliError;
use coldplate_core::fdm::{Preconditioner, SolverOptions};
use coldplate_core::grid::{GridSpec, PhysicalConfig};
use coldplate_core::pipeline::TrainConfig;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub physical: PhysicalConfig,
    pub rel_tol: f64,
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = GridSpec::default();
        let solver = SolverOptions::default();
        Self {
            nx: spec.nx,
            ny: spec.ny,
            physical: PhysicalConfig::default(),
            rel_tol: solver.rel_tol,
            max_iter: solver.max_iter,
            preconditioner: solver.preconditioner,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the optional settings file.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut config = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {path:?}: {e}")))?;
            config.apply_file(&text)?;
        }
        Ok(config)
    }

    fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key = value", line_no + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|msg| CliError::Config(format!("config line {}: {msg}", line_no + 1)))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("cannot parse value {value:?} for key {key}"))
        }
        fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
            if value.is_empty() {
                return Ok(Vec::new());
            }
            value
                .split(',')
                .map(|v| parse::<usize>(key, v.trim()))
                .collect()
        }
        match key {
            "nx" => self.nx = parse(key, value)?,
            "ny" => self.ny = parse(key, value)?,
            "lx" => self.physical.lx = parse(key, value)?,
            "ly" => self.physical.ly = parse(key, value)?,
            "k" => self.physical.k = parse(key, value)?,
            "thickness" => self.physical.thickness = parse(key, value)?,
            "h_coeff" => self.physical.h_coeff = parse(key, value)?,
            "h_bg" => self.physical.h_bg = parse(key, value)?,
            "t_coolant" => self.physical.t_coolant = parse(key, value)?,
            "q_batt" => self.physical.q_batt = parse(key, value)?,
            "rel_tol" => self.rel_tol = parse(key, value)?,
            "max_iter" => self.max_iter = Some(parse(key, value)?),
            "preconditioner" => {
                self.preconditioner = match value {
                    "none" => Preconditioner::None,
                    "jacobi" => Preconditioner::Jacobi,
                    other => return Err(format!("unknown preconditioner {other:?}")),
                }
            }
            "epochs" => self.train.epochs = parse(key, value)?,
            "lr" => self.train.lr = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "split_fraction" => self.train.split_fraction = parse(key, value)?,
            "w1" => self.train.weights.w1 = parse(key, value)?,
            "w2" => self.train.weights.w2 = parse(key, value)?,
            "w3" => self.train.weights.w3 = parse(key, value)?,
            "seed" => self.train.seed = parse(key, value)?,
            "pinn_sample" => self.train.pinn_sample = parse(key, value)?,
            "conv_channels" => self.train.arch.conv_channels = parse_list(key, value)?,
            "kernel_size" => self.train.arch.kernel_size = parse(key, value)?,
            "dense_hidden" => self.train.arch.dense_hidden = parse_list(key, value)?,
            unknown => return Err(format!("unknown config key {unknown:?}")),
        }
        Ok(())
    }

    /// Cell sizes always derive from the plate extent so the grid tiles it
    /// exactly.
    pub fn grid(&self) -> Result<GridSpec, CliError> {
        self.physical.validate()?;
        Ok(GridSpec::covering(self.nx, self.ny, &self.physical)?)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
            preconditioner: self.preconditioner,
        }
    }
}
