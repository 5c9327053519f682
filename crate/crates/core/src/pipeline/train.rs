//! Training loops and evaluation.
//!
//! Both surrogate modes run the same per-sample composite-loss path; the
//! data-driven mode simply pins the weights to `(1, 0, 0)`, which makes the
//! weight-degeneracy property (a PIML run with those weights is bit-identical
//! to a data-driven run) hold by construction rather than by accident.

use super::dataset::{split_dataset, Dataset};
use super::{derive_seeds, EpochRecord, ModelMode, PipelineError, TrainConfig, TrainMode};
use crate::grid::{ChannelMask, GridSpec, ScalarField};
use crate::loss::{fit_norm, mse_loss, total_loss, LossBreakdown, LossWeights, NormStats};
use crate::nn::{
    he_init, Activation, AdamState, ConvLayer, DenseLayer, Layer, LayerOp, Network, NetworkGrads,
    Tensor,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub network: Network,
    pub stats: NormStats,
    pub records: Vec<EpochRecord>,
    pub mode: ModelMode,
}

/// Mask image `[1, 1, ny, nx]` for the convolutional surrogate.
fn mask_tensor(mask: &ChannelMask) -> Tensor {
    let spec = mask.spec();
    let data = mask.values().iter().map(|&m| f64::from(m)).collect();
    Tensor::from_vec(&[1, 1, spec.ny, spec.nx], data).expect("mask length matches grid")
}

/// `[N, 2]` list of cell centers normalized to the unit square, in flat cell
/// order.
fn coords_tensor(spec: &GridSpec) -> Tensor {
    let mut data = Vec::with_capacity(spec.cell_count() * 2);
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            data.push((i as f64 + 0.5) / spec.nx as f64);
            data.push((j as f64 + 0.5) / spec.ny as f64);
        }
    }
    Tensor::from_vec(&[spec.cell_count(), 2], data).expect("length by construction")
}

/// Conv stack `1 -> channels... -> 1`, ReLU between, linear head.
pub(crate) fn build_fcn(arch: &super::ArchConfig) -> Result<Network, PipelineError> {
    let mut layers = Vec::new();
    let mut prev = 1;
    let k = arch.kernel_size;
    for &ch in &arch.conv_channels {
        layers.push(Layer {
            op: LayerOp::Conv(ConvLayer::new(prev, ch, k, k).map_err(PipelineError::Nn)?),
            activation: Activation::Relu,
        });
        prev = ch;
    }
    layers.push(Layer {
        op: LayerOp::Conv(ConvLayer::new(prev, 1, k, k).map_err(PipelineError::Nn)?),
        activation: Activation::Linear,
    });
    Network::new(layers).map_err(PipelineError::Nn)
}

/// Dense stack `2 -> hidden... -> 1` for the coordinate network.
pub(crate) fn build_coordinate_net(arch: &super::ArchConfig) -> Result<Network, PipelineError> {
    let mut layers = Vec::new();
    let mut prev = 2;
    for &width in &arch.dense_hidden {
        layers.push(Layer {
            op: LayerOp::Dense(DenseLayer::new(prev, width).map_err(PipelineError::Nn)?),
            activation: Activation::Relu,
        });
        prev = width;
    }
    layers.push(Layer {
        op: LayerOp::Dense(DenseLayer::new(prev, 1).map_err(PipelineError::Nn)?),
        activation: Activation::Linear,
    });
    Network::new(layers).map_err(PipelineError::Nn)
}

/// Prepared network inputs for every dataset sample.
enum ModelInputs {
    Fcn(Vec<Tensor>),
    /// One shared coordinate list; the coordinate network is geometry-blind.
    Coordinate(Tensor),
}

impl ModelInputs {
    fn build(mode: ModelMode, dataset: &Dataset) -> Self {
        match mode {
            ModelMode::Fcn => {
                ModelInputs::Fcn(dataset.samples.iter().map(|s| mask_tensor(&s.mask)).collect())
            }
            ModelMode::Coordinate => ModelInputs::Coordinate(coords_tensor(&dataset.spec)),
        }
    }

    fn input(&self, index: usize) -> &Tensor {
        match self {
            ModelInputs::Fcn(tensors) => &tensors[index],
            ModelInputs::Coordinate(coords) => coords,
        }
    }
}

/// Output cells of one forward pass as a flat plane in grid order.
fn output_plane(out: &Tensor) -> &[f64] {
    // [1, 1, ny, nx] and [N, 1] both store the plane contiguously.
    out.data()
}

struct SampleAgg {
    sum_sq: f64,
    max_abs: f64,
}

/// Joint per-cell MSE over `indices` plus per-sample aggregates, accumulated
/// in index order. Shared by the training loop and `evaluate` so replaying an
/// evaluation reproduces logged numbers exactly.
fn eval_metrics(
    network: &Network,
    inputs: &ModelInputs,
    targets: &[Vec<f64>],
    indices: &[usize],
) -> Result<(f64, Vec<SampleAgg>), PipelineError> {
    let mut total_sq = 0.0;
    let mut cells = 0usize;
    let mut per_sample = Vec::with_capacity(indices.len());
    for &idx in indices {
        let (out, _) = network.forward(inputs.input(idx))?;
        let pred = output_plane(&out);
        let target = &targets[idx];
        let mut sum_sq = 0.0;
        let mut max_abs = 0.0f64;
        for (&p, &t) in pred.iter().zip(target.iter()) {
            let d = p - t;
            sum_sq += d * d;
            max_abs = max_abs.max(d.abs());
        }
        total_sq += sum_sq;
        cells += target.len();
        per_sample.push(SampleAgg { sum_sq, max_abs });
    }
    if cells == 0 {
        return Err(PipelineError::Config("no samples to evaluate".into()));
    }
    Ok((total_sq / cells as f64, per_sample))
}

fn normalized_targets(dataset: &Dataset, stats: &NormStats) -> Vec<Vec<f64>> {
    dataset
        .samples
        .iter()
        .map(|s| {
            s.field
                .values()
                .iter()
                .map(|&t| stats.normalize_value(t))
                .collect()
        })
        .collect()
}

/// The train/test partition a run with this configuration uses. When the
/// rounded split would leave the test side empty (for example a single-sample
/// overfit run), every sample trains and the test side is empty.
pub fn training_split(
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    let n = dataset.len();
    let planned = (cfg.split_fraction * n as f64).round() as usize;
    if planned >= n {
        return Ok(((0..n).collect(), Vec::new()));
    }
    split_dataset(dataset, cfg.split_fraction, derive_seeds(cfg.seed).split)
}

/// Trains a surrogate per the configuration, returning the network, the
/// training-split statistics, and per-epoch diagnostics.
///
/// When the rounded split would leave the test side empty (for example a
/// single-sample overfit run), every sample trains and the validation
/// metrics are computed on the training split instead.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput, PipelineError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(PipelineError::Config("dataset is empty".into()));
    }
    match cfg.mode {
        TrainMode::DataDriven | TrainMode::Piml => train_fcn(dataset, cfg),
        TrainMode::PinnSingle => train_pinn_single(dataset, cfg),
    }
}

fn train_fcn(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput, PipelineError> {
    let seeds = derive_seeds(cfg.seed);
    let (train_idx, test_idx) = training_split(dataset, cfg)?;
    let val_idx: &[usize] = if test_idx.is_empty() { &train_idx } else { &test_idx };

    let train_fields: Vec<&ScalarField> =
        train_idx.iter().map(|&i| &dataset.samples[i].field).collect();
    let stats = fit_norm(&train_fields)?;
    let targets = normalized_targets(dataset, &stats);
    let inputs = ModelInputs::build(ModelMode::Fcn, dataset);

    let mut network = build_fcn(&cfg.arch)?;
    he_init(&mut network, seeds.init);
    let mut adam = AdamState::new(&network, cfg.lr);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(seeds.shuffle);

    let eff_weights = match cfg.mode {
        TrainMode::DataDriven => LossWeights {
            w1: 1.0,
            w2: 0.0,
            w3: 0.0,
        },
        _ => cfg.weights,
    };

    let mut records = Vec::with_capacity(cfg.epochs);
    let mut order = train_idx.clone();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sums = LossBreakdown {
            l_mse: 0.0,
            l_pde: 0.0,
            l_bc: 0.0,
            l_total: 0.0,
        };
        for batch in order.chunks(cfg.batch_size) {
            let step = |&idx: &usize| -> Result<(LossBreakdown, NetworkGrads), PipelineError> {
                let (out, cache) = network.forward(inputs.input(idx))?;
                let (bd, grad) = total_loss(
                    output_plane(&out),
                    &targets[idx],
                    &stats,
                    &dataset.samples[idx].mask,
                    &dataset.config,
                    &eff_weights,
                )?;
                let grad_tensor = Tensor::from_vec(out.shape(), grad).map_err(PipelineError::Nn)?;
                let (grads, _) = network.backward(&cache, &grad_tensor)?;
                Ok((bd, grads))
            };
            let results: Vec<(LossBreakdown, NetworkGrads)> = if cfg.batch_parallel {
                batch.par_iter().map(step).collect::<Result<_, _>>()?
            } else {
                batch.iter().map(step).collect::<Result<_, _>>()?
            };
            let mut batch_grads = NetworkGrads::zeros_like(&network);
            for (bd, grads) in &results {
                if !bd.l_total.is_finite() {
                    return Err(PipelineError::Divergence {
                        epoch,
                        detail: format!("non-finite training loss {bd:?}"),
                    });
                }
                sums.l_mse += bd.l_mse;
                sums.l_pde += bd.l_pde;
                sums.l_bc += bd.l_bc;
                sums.l_total += bd.l_total;
                batch_grads.add_assign(grads);
            }
            batch_grads.scale(1.0 / results.len() as f64);
            adam.step(&mut network, &batch_grads)?;
        }
        let n_train = train_idx.len() as f64;
        let (train_mse, _) = eval_metrics(&network, &inputs, &targets, &train_idx)?;
        let (val_mse, _) = eval_metrics(&network, &inputs, &targets, val_idx)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(PipelineError::Divergence {
                epoch,
                detail: format!("non-finite epoch metrics (train {train_mse}, val {val_mse})"),
            });
        }
        records.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
            l_pde: sums.l_pde / n_train,
            l_bc: sums.l_bc / n_train,
            l_total: sums.l_total / n_train,
            val_rmse_celsius: stats.sigma() * val_mse.sqrt(),
        });
    }
    Ok(TrainOutput {
        network,
        stats,
        records,
        mode: ModelMode::Fcn,
    })
}

fn train_pinn_single(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutput, PipelineError> {
    let seeds = derive_seeds(cfg.seed);
    let index = cfg.pinn_sample;
    let sample = dataset.samples.get(index).ok_or_else(|| {
        PipelineError::Config(format!(
            "pinn_sample {index} out of range for {} samples",
            dataset.len()
        ))
    })?;
    // The single fitted geometry is the entire training split.
    let stats = fit_norm(&[&sample.field])?;
    let target: Vec<f64> = sample
        .field
        .values()
        .iter()
        .map(|&t| stats.normalize_value(t))
        .collect();
    let coords = coords_tensor(&dataset.spec);

    let mut network = build_coordinate_net(&cfg.arch)?;
    he_init(&mut network, seeds.init);
    let mut adam = AdamState::new(&network, cfg.lr);

    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let (out, cache) = network.forward(&coords)?;
        let (bd, grad) = total_loss(
            output_plane(&out),
            &target,
            &stats,
            &sample.mask,
            &dataset.config,
            &cfg.weights,
        )?;
        if !bd.l_total.is_finite() {
            return Err(PipelineError::Divergence {
                epoch,
                detail: format!("non-finite training loss {bd:?}"),
            });
        }
        let grad_tensor = Tensor::from_vec(out.shape(), grad).map_err(PipelineError::Nn)?;
        let (grads, _) = network.backward(&cache, &grad_tensor)?;
        adam.step(&mut network, &grads)?;

        let (post, _) = network.forward(&coords)?;
        let (mse, _) = mse_loss(output_plane(&post), &target)?;
        if !mse.is_finite() {
            return Err(PipelineError::Divergence {
                epoch,
                detail: format!("non-finite epoch metric {mse}"),
            });
        }
        records.push(EpochRecord {
            epoch,
            train_mse: mse,
            val_mse: mse,
            l_pde: bd.l_pde,
            l_bc: bd.l_bc,
            l_total: bd.l_total,
            val_rmse_celsius: stats.sigma() * mse.sqrt(),
        });
    }
    Ok(TrainOutput {
        network,
        stats,
        records,
        mode: ModelMode::Coordinate,
    })
}

/// Per-sample evaluation detail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEval {
    pub index: usize,
    pub mse_norm: f64,
    pub rmse_celsius: f64,
    pub max_abs_err_celsius: f64,
}

/// Aggregate metrics over the evaluated indices. `mse_norm` averages squared
/// normalized errors over every cell of every listed sample; the Celsius
/// variants undo the standardization (`rmse_celsius = sigma * sqrt(mse_norm)`,
/// `mse_celsius2 = sigma^2 * mse_norm`).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mse_norm: f64,
    pub mse_celsius2: f64,
    pub rmse_celsius: f64,
    pub max_abs_err_celsius: f64,
    pub per_sample: Vec<SampleEval>,
}

/// Denormalized prediction (deg C) of one dataset sample.
pub fn predict_field(
    network: &Network,
    mode: ModelMode,
    stats: &NormStats,
    dataset: &Dataset,
    index: usize,
) -> Result<ScalarField, PipelineError> {
    if index >= dataset.len() {
        return Err(PipelineError::Config(format!(
            "sample index {index} out of range for {} samples",
            dataset.len()
        )));
    }
    let input = match mode {
        ModelMode::Fcn => mask_tensor(&dataset.samples[index].mask),
        ModelMode::Coordinate => coords_tensor(&dataset.spec),
    };
    let (out, _) = network.forward(&input)?;
    let celsius: Vec<f64> = output_plane(&out)
        .iter()
        .map(|&p| stats.denormalize_value(p))
        .collect();
    ScalarField::from_vec(dataset.spec, celsius).map_err(PipelineError::Grid)
}

/// Evaluates a trained network over the listed dataset indices.
pub fn evaluate(
    network: &Network,
    mode: ModelMode,
    stats: &NormStats,
    dataset: &Dataset,
    indices: &[usize],
) -> Result<EvalReport, PipelineError> {
    if indices.is_empty() {
        return Err(PipelineError::Config("no samples to evaluate".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= dataset.len()) {
        return Err(PipelineError::Config(format!(
            "sample index {bad} out of range for {} samples",
            dataset.len()
        )));
    }
    let inputs = ModelInputs::build(mode, dataset);
    let targets = normalized_targets(dataset, stats);
    let (mse_norm, aggs) = eval_metrics(network, &inputs, &targets, indices)?;
    let cells = dataset.spec.cell_count() as f64;
    let sigma = stats.sigma();
    let per_sample = indices
        .iter()
        .zip(&aggs)
        .map(|(&index, agg)| {
            let sample_mse = agg.sum_sq / cells;
            SampleEval {
                index,
                mse_norm: sample_mse,
                rmse_celsius: sigma * sample_mse.sqrt(),
                max_abs_err_celsius: sigma * agg.max_abs,
            }
        })
        .collect();
    let max_abs = aggs.iter().fold(0.0f64, |acc, a| acc.max(a.max_abs));
    Ok(EvalReport {
        mse_norm,
        mse_celsius2: sigma * sigma * mse_norm,
        rmse_celsius: sigma * mse_norm.sqrt(),
        max_abs_err_celsius: sigma * max_abs,
        per_sample,
    })
}
