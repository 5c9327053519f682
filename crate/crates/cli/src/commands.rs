//! Subcommand implementations. Progress and diagnostics go to stderr;
//! machine-readable results go to files or stdout.

use crate::config::RunConfig;
use crate::error::CliError;
use coldplate_core::fdm::{energy_balance, solve_steady_state};
use coldplate_core::geometry::{gen_mask, ChannelFamily, ChannelParams, GeometrySeed};
use coldplate_core::grid::{ChannelMask, GridSpec, ScalarField};
use coldplate_core::io::{
    export_field_csv, export_heatmap_ppm, read_dataset, read_mask_text, read_model, write_dataset,
    write_curves_csv, write_model, RangeMode,
};
use coldplate_core::pipeline::{
    compare_experiment, evaluate, generate_dataset_with_reports, predict_field, train,
    training_split, Dataset, TrainConfig, TrainMode,
};
use std::io::Write;
use std::path::Path;

pub fn generate(config: &RunConfig, n: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if n < 1 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    let spec = config.grid()?;
    let (dataset, reports) = generate_dataset_with_reports(
        n,
        GeometrySeed(seed),
        &spec,
        &config.physical,
        &config.solver(),
    )?;
    for (idx, report) in reports.iter().enumerate() {
        eprintln!(
            "sample {}/{}: iterations={} rel_residual={:.3e} energy_balance={:.3e}",
            idx + 1,
            n,
            report.iterations,
            report.final_rel_residual,
            report.energy_balance_error
        );
    }
    write_dataset(out, &dataset)?;
    println!("dataset: {} samples ({}x{}) -> {}", n, spec.nx, spec.ny, out.display());
    Ok(())
}

fn parse_family_spec(spec: &GridSpec, arg: &str) -> Result<ChannelMask, CliError> {
    let (family_str, rest) = arg.split_once(':').ok_or_else(|| {
        CliError::Config(format!(
            "mask {arg:?} is neither an existing file nor a family spec \
             (all-ones | all-zeros | straight:... | serpentine:... | border:...)"
        ))
    })?;
    let family = match family_str {
        "straight" => ChannelFamily::StraightParallel,
        "serpentine" => ChannelFamily::Serpentine,
        "border" => ChannelFamily::BorderLoop,
        other => return Err(CliError::Config(format!("unknown channel family {other:?}"))),
    };
    let mut count = 1usize;
    let mut width = None;
    let mut margin = 0usize;
    for pair in rest.split(',') {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("family spec part {pair:?} is not key=value")))?;
        let parsed: usize = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("cannot parse {value:?} in family spec")))?;
        match key.trim() {
            "count" => count = parsed,
            "width" => width = Some(parsed),
            "margin" => margin = parsed,
            other => return Err(CliError::Config(format!("unknown family spec key {other:?}"))),
        }
    }
    let width = width.ok_or_else(|| CliError::Config("family spec needs width=<cells>".into()))?;
    let params = ChannelParams {
        family,
        channel_count: count,
        width_cells: width,
        margin_cells: margin,
    };
    Ok(gen_mask(spec, &params)?)
}

fn resolve_mask(config: &RunConfig, arg: &str) -> Result<ChannelMask, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let (nx, ny, data) = read_mask_text(path)?;
        let spec = GridSpec::covering(nx, ny, &config.physical)?;
        return Ok(ChannelMask::from_vec(spec, data)?);
    }
    let spec = config.grid()?;
    match arg {
        "all-ones" => Ok(ChannelMask::filled(spec, true)),
        "all-zeros" => Ok(ChannelMask::filled(spec, false)),
        other => parse_family_spec(&spec, other),
    }
}

pub fn solve(
    config: &RunConfig,
    mask_arg: &str,
    out_field: Option<&Path>,
    out_image: Option<&Path>,
) -> Result<(), CliError> {
    let mask = resolve_mask(config, mask_arg)?;
    let (field, report) = solve_steady_state(&mask, &config.physical, &config.solver())?;
    let balance = if config.physical.q_batt > 0.0 {
        energy_balance(&field, &mask, &config.physical)?
    } else {
        0.0
    };
    eprintln!(
        "solved {}x{} in {} iterations (rel_residual {:.3e})",
        mask.spec().nx,
        mask.spec().ny,
        report.iterations,
        report.final_rel_residual
    );
    println!(
        "min_c={:.6} max_c={:.6} mean_c={:.6} energy_balance={:.3e}",
        field.min(),
        field.max(),
        field.mean(),
        balance
    );
    if let Some(path) = out_field {
        export_field_csv(path, &field)?;
        eprintln!("field -> {}", path.display());
    }
    if let Some(path) = out_image {
        export_heatmap_ppm(path, &field, RangeMode::Auto)?;
        eprintln!("heatmap -> {}", path.display());
    }
    Ok(())
}

pub fn train_cmd(
    config: &RunConfig,
    data: &Path,
    mode: TrainMode,
    out_model: &Path,
    curves: &Path,
) -> Result<(), CliError> {
    let dataset = read_dataset(data)?;
    let mut cfg = config.train.clone();
    cfg.mode = mode;
    let output = train(&dataset, &cfg)?;
    write_model(out_model, &output.network, &output.stats, output.mode)?;
    write_curves_csv(curves, &output.records)?;
    let last = output.records.last().expect("at least one epoch");
    println!(
        "epochs={} final_train_mse={} final_val_mse={} val_rmse_celsius={}",
        last.epoch, last.train_mse, last.val_mse, last.val_rmse_celsius
    );
    eprintln!("model -> {}", out_model.display());
    eprintln!("curves -> {}", curves.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    Test,
    Train,
    All,
}

/// Reproduces the train/test partition of a training run with the same seed
/// and split fraction.
fn split_indices(
    dataset: &Dataset,
    cfg: &TrainConfig,
    choice: SplitChoice,
) -> Result<Vec<usize>, CliError> {
    if choice == SplitChoice::All {
        return Ok((0..dataset.len()).collect());
    }
    let (train_idx, test_idx) = training_split(dataset, cfg)?;
    match choice {
        SplitChoice::Train => Ok(train_idx),
        _ if test_idx.is_empty() => Err(CliError::Config(
            "test split is empty for this dataset size and split_fraction".into(),
        )),
        _ => Ok(test_idx),
    }
}

pub fn eval_cmd(
    config: &RunConfig,
    model: &Path,
    data: &Path,
    split: SplitChoice,
    report_path: &Path,
    error_maps: Option<&Path>,
) -> Result<(), CliError> {
    let dataset = read_dataset(data)?;
    let (network, stats, mode) = read_model(model)?;
    let indices = split_indices(&dataset, &config.train, split)?;
    let report = evaluate(&network, mode, &stats, &dataset, &indices)?;

    let mut out = std::io::BufWriter::new(std::fs::File::create(report_path)?);
    writeln!(out, "index,mse_norm,mse_celsius2,rmse_celsius,max_abs_err_celsius")
        .map_err(CliError::from)?;
    let sigma2 = stats.sigma() * stats.sigma();
    for s in &report.per_sample {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.index,
            s.mse_norm,
            sigma2 * s.mse_norm,
            s.rmse_celsius,
            s.max_abs_err_celsius
        )
        .map_err(CliError::from)?;
    }
    writeln!(
        out,
        "all,{},{},{},{}",
        report.mse_norm, report.mse_celsius2, report.rmse_celsius, report.max_abs_err_celsius
    )
    .map_err(CliError::from)?;
    out.flush().map_err(CliError::from)?;

    if let Some(dir) = error_maps {
        std::fs::create_dir_all(dir)?;
        for &idx in &indices {
            let pred = predict_field(&network, mode, &stats, &dataset, idx)?;
            let truth = &dataset.samples[idx].field;
            let err: Vec<f64> = pred
                .values()
                .iter()
                .zip(truth.values())
                .map(|(&p, &t)| p - t)
                .collect();
            let err_field = ScalarField::from_vec(dataset.spec, err)
                .map_err(|e| CliError::Config(e.to_string()))?;
            export_heatmap_ppm(
                &dir.join(format!("error_{idx:03}.ppm")),
                &err_field,
                RangeMode::Auto,
            )?;
        }
        eprintln!("error maps -> {}", dir.display());
    }
    println!(
        "samples={} mse_norm={} mse_celsius2={} rmse_celsius={} max_abs_err_celsius={}",
        indices.len(),
        report.mse_norm,
        report.mse_celsius2,
        report.rmse_celsius,
        report.max_abs_err_celsius
    );
    eprintln!("report -> {}", report_path.display());
    Ok(())
}

pub fn compare_cmd(config: &RunConfig, data: &Path, out_dir: &Path) -> Result<(), CliError> {
    let dataset = read_dataset(data)?;
    let report = compare_experiment(&dataset, &config.train, out_dir)?;
    println!(
        "epoch10_mse_data={} epoch10_mse_piml={} epoch10_improvement_pct={:.2} epoch1_mse_piml={}",
        report.epoch10_val_mse_data,
        report.epoch10_val_mse_piml,
        report.epoch10_improvement_pct,
        report.epoch1_val_mse_piml
    );
    println!("reference_benchmark: epoch10 MSE 5.66 (piml) vs 11.12 (data-driven), improvement 49.1%");
    eprintln!("artifacts -> {}", out_dir.display());
    Ok(())
}
