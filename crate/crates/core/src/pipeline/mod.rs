//! Dataset generation, train/test splitting, the two surrogate training
//! loops (data-driven and physics-informed), the single-geometry coordinate
//! network, evaluation, and the convergence-comparison experiment.

mod compare;
mod dataset;
mod train;

pub use compare::{compare_experiment, ComparisonReport};
pub use dataset::{
    generate_dataset, generate_dataset_with_reports, split_dataset, Dataset, Sample,
};
pub use train::{
    evaluate, predict_field, train, training_split, EvalReport, SampleEval, TrainOutput,
};

use crate::fdm::FdmError;
use crate::geometry::GeometryError;
use crate::grid::GridError;
use crate::io::IoError;
use crate::loss::{LossError, LossWeights};
use crate::nn::NnError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("sample {index}: {source}")]
    SampleSolve { index: usize, source: FdmError },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sample {index}: energy balance error {value:.3e} exceeds 1e-6")]
    EnergyBalance { index: usize, value: f64 },
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },
}

/// Training objective / input-encoding mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Mask-to-field surrogate trained on the data MSE alone.
    DataDriven,
    /// Mask-to-field surrogate trained on the weighted composite loss.
    Piml,
    /// Coordinate-input network fit to a single geometry.
    PinnSingle,
}

/// How a trained model consumes its input; stored in model files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    /// Input is the `[1, 1, ny, nx]` channel-mask image.
    Fcn,
    /// Input is the `[N, 2]` list of normalized cell-center coordinates.
    Coordinate,
}

impl TrainMode {
    pub fn model_mode(&self) -> ModelMode {
        match self {
            TrainMode::DataDriven | TrainMode::Piml => ModelMode::Fcn,
            TrainMode::PinnSingle => ModelMode::Coordinate,
        }
    }
}

/// Network-shape overrides; every number has a sensible default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchConfig {
    /// Hidden channel widths of the convolutional stack.
    pub conv_channels: Vec<usize>,
    /// Square odd kernel size of every conv layer.
    pub kernel_size: usize,
    /// Hidden widths of the coordinate network.
    pub dense_hidden: Vec<usize>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            conv_channels: vec![16, 16],
            kernel_size: 9,
            dense_hidden: vec![64, 64],
        }
    }
}

/// Everything the training loop needs beyond the dataset itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub split_fraction: f64,
    pub weights: LossWeights,
    pub seed: u64,
    pub arch: ArchConfig,
    /// Dataset index the coordinate network fits (PinnSingle only).
    pub pinn_sample: usize,
    /// Evaluate batch samples on the rayon pool; gradients are still reduced
    /// in fixed sample order, so results are bit-identical to serial runs.
    pub batch_parallel: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::DataDriven,
            epochs: 100,
            lr: 0.001,
            batch_size: 8,
            split_fraction: 0.8,
            weights: LossWeights::default(),
            seed: 0,
            arch: ArchConfig::default(),
            pinn_sample: 0,
            batch_parallel: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.epochs < 1 {
            return Err(PipelineError::Config("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(PipelineError::Config("batch_size must be >= 1".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(PipelineError::Config(
                "split_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(PipelineError::Config("lr must be positive and finite".into()));
        }
        if self.kernel_is_even() {
            return Err(PipelineError::Config(
                "kernel_size must be odd for same-padding".into(),
            ));
        }
        if matches!(self.mode, TrainMode::Piml | TrainMode::PinnSingle) {
            self.weights.validate().map_err(PipelineError::Loss)?;
        }
        Ok(())
    }

    fn kernel_is_even(&self) -> bool {
        self.arch.kernel_size % 2 == 0
    }
}

/// Per-epoch training diagnostics. `train_mse` and `val_mse` are measured
/// after the epoch's updates with frozen weights, in normalized units;
/// `l_pde`/`l_bc`/`l_total` average the per-sample training losses seen
/// during the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    pub l_pde: f64,
    pub l_bc: f64,
    pub l_total: f64,
    pub val_rmse_celsius: f64,
}

/// Independent named sub-seeds derived from one run seed.
pub(crate) struct SeedSet {
    pub split: u64,
    pub init: u64,
    pub shuffle: u64,
}

pub(crate) fn derive_seeds(seed: u64) -> SeedSet {
    use rand::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    SeedSet {
        split: rng.next_u64(),
        init: rng.next_u64(),
        shuffle: rng.next_u64(),
    }
}
