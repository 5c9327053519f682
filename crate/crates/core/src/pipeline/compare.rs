//! Convergence comparison between the data-driven and physics-informed
//! surrogates under identical seeds, splits, initial weights, and
//! architecture, isolating the loss-function effect.

use super::dataset::Dataset;
use super::train::{train, training_split};
use super::{EpochRecord, PipelineError, TrainConfig, TrainMode};
use crate::grid::ScalarField;
use crate::io::{export_heatmap_ppm, write_comparison_summary, write_curves_csv, RangeMode};
use crate::loss::normalize;
use std::path::Path;

/// Outcome of one paired training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub data_records: Vec<EpochRecord>,
    pub piml_records: Vec<EpochRecord>,
    pub epoch1_val_mse_piml: f64,
    pub epoch10_val_mse_data: f64,
    pub epoch10_val_mse_piml: f64,
    /// Relative epoch-10 validation-MSE reduction of PIML over data-driven,
    /// in percent.
    pub epoch10_improvement_pct: f64,
    pub test_indices: Vec<usize>,
}

/// Trains both surrogates from shared initial weights, writes convergence
/// curves, an epoch-10 summary, and per-sample test-split error maps under
/// `out_dir`, and returns the report.
pub fn compare_experiment(
    dataset: &Dataset,
    base: &TrainConfig,
    out_dir: &Path,
) -> Result<ComparisonReport, PipelineError> {
    if dataset.len() < 10 {
        return Err(PipelineError::Config(format!(
            "comparison needs at least 10 samples, got {}",
            dataset.len()
        )));
    }
    if base.epochs < 10 {
        return Err(PipelineError::Config(format!(
            "comparison needs at least 10 epochs, got {}",
            base.epochs
        )));
    }
    let mut data_cfg = base.clone();
    data_cfg.mode = TrainMode::DataDriven;
    let mut piml_cfg = base.clone();
    piml_cfg.mode = TrainMode::Piml;

    let data_out = train(dataset, &data_cfg)?;
    let piml_out = train(dataset, &piml_cfg)?;

    let epoch10_val_mse_data = data_out.records[9].val_mse;
    let epoch10_val_mse_piml = piml_out.records[9].val_mse;
    let report = ComparisonReport {
        epoch1_val_mse_piml: piml_out.records[0].val_mse,
        epoch10_val_mse_data,
        epoch10_val_mse_piml,
        epoch10_improvement_pct: 100.0 * (epoch10_val_mse_data - epoch10_val_mse_piml)
            / epoch10_val_mse_data,
        test_indices: training_split(dataset, base)?.1,
        data_records: data_out.records.clone(),
        piml_records: piml_out.records.clone(),
    };

    std::fs::create_dir_all(out_dir).map_err(crate::io::IoError::from)?;
    write_curves_csv(&out_dir.join("curves_data.csv"), &report.data_records)?;
    write_curves_csv(&out_dir.join("curves_piml.csv"), &report.piml_records)?;
    write_comparison_summary(&out_dir.join("summary.csv"), &report)?;

    let maps_dir = out_dir.join("error_maps");
    std::fs::create_dir_all(&maps_dir).map_err(crate::io::IoError::from)?;
    for (label, out) in [("data", &data_out), ("piml", &piml_out)] {
        for &idx in &report.test_indices {
            let sample = &dataset.samples[idx];
            let target_norm = normalize(&sample.field, &out.stats);
            let input = mask_image(sample);
            let (pred, _) = out.network.forward(&input)?;
            // Signed prediction error in deg C.
            let err: Vec<f64> = pred
                .data()
                .iter()
                .zip(target_norm.values())
                .map(|(&p, &t)| out.stats.sigma() * (p - t))
                .collect();
            let err_field =
                ScalarField::from_vec(dataset.spec, err).map_err(PipelineError::Grid)?;
            export_heatmap_ppm(
                &maps_dir.join(format!("{label}_sample_{idx:03}.ppm")),
                &err_field,
                RangeMode::Auto,
            )?;
        }
    }
    Ok(report)
}

fn mask_image(sample: &super::Sample) -> crate::nn::Tensor {
    let spec = sample.mask.spec();
    let data = sample.mask.values().iter().map(|&m| f64::from(m)).collect();
    crate::nn::Tensor::from_vec(&[1, 1, spec.ny, spec.nx], data).expect("mask matches grid")
}
