//! Mask/temperature-pair dataset generation and train/test splitting.

use super::PipelineError;
use crate::fdm::{energy_balance, solve_steady_state, SolveReport, SolverOptions};
use crate::geometry::{gen_mask, sample_configs, GeometrySeed};
use crate::grid::{ChannelMask, GridSpec, PhysicalConfig, ScalarField};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// One mask/field pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub mask: ChannelMask,
    pub field: ScalarField,
}

/// Solved dataset; all samples share the grid and physical constants, and
/// every field passed the energy-balance gate at generation time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: GridSpec,
    pub config: PhysicalConfig,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const ENERGY_BALANCE_GATE: f64 = 1e-6;

/// Samples `n` channel configurations, solves each one (in parallel, results
/// ordered by configuration index), and validates conservation. Deterministic
/// per seed.
pub fn generate_dataset(
    n: usize,
    seed: GeometrySeed,
    spec: &GridSpec,
    config: &PhysicalConfig,
    opts: &SolverOptions,
) -> Result<Dataset, PipelineError> {
    Ok(generate_dataset_with_reports(n, seed, spec, config, opts)?.0)
}

/// [`generate_dataset`] plus the per-sample solver reports, for callers that
/// log iteration counts and conservation errors.
pub fn generate_dataset_with_reports(
    n: usize,
    seed: GeometrySeed,
    spec: &GridSpec,
    config: &PhysicalConfig,
    opts: &SolverOptions,
) -> Result<(Dataset, Vec<SolveReport>), PipelineError> {
    if n < 1 {
        return Err(PipelineError::Config("dataset size must be >= 1".into()));
    }
    let params = sample_configs(spec, n, seed)?;
    let solved: Vec<(Sample, SolveReport)> = params
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            let mask = gen_mask(spec, p)?;
            let (field, report) = solve_steady_state(&mask, config, opts)
                .map_err(|source| PipelineError::SampleSolve { index, source })?;
            Ok((Sample { mask, field }, report))
        })
        .collect::<Result<_, PipelineError>>()?;
    let mut samples = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    for (index, (sample, report)) in solved.into_iter().enumerate() {
        let value = energy_balance(&sample.field, &sample.mask, config)
            .map_err(|source| PipelineError::SampleSolve { index, source })?;
        if value > ENERGY_BALANCE_GATE {
            return Err(PipelineError::EnergyBalance { index, value });
        }
        samples.push(sample);
        reports.push(report);
    }
    Ok((
        Dataset {
            spec: *spec,
            config: *config,
            samples,
        },
        reports,
    ))
}

/// Seeded shuffle split into `round(fraction * n)` training indices and the
/// rest; both sides sorted ascending. Errors if either side is empty.
pub fn split_dataset(
    dataset: &Dataset,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    let n = dataset.len();
    if n == 0 {
        return Err(PipelineError::Split("dataset is empty".into()));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 {
        return Err(PipelineError::Split(format!(
            "train side empty: round({fraction} * {n}) = 0"
        )));
    }
    if n_train >= n {
        return Err(PipelineError::Split(format!(
            "test side empty: round({fraction} * {n}) = {n_train}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut train = indices[..n_train].to_vec();
    let mut test = indices[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dataset(n: usize) -> Dataset {
        let config = PhysicalConfig::default();
        let spec = GridSpec::covering(14, 11, &config).unwrap();
        generate_dataset(
            n,
            GeometrySeed(9),
            &spec,
            &config,
            &SolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn generate_validates_energy_and_minimum_principle() {
        let ds = small_dataset(6);
        assert_eq!(ds.len(), 6);
        for sample in &ds.samples {
            assert!(sample.field.min() >= ds.config.t_coolant - 1e-9);
            let eb = energy_balance(&sample.field, &sample.mask, &ds.config).unwrap();
            assert!(eb <= 1e-6);
        }
    }

    #[test]
    fn generate_is_deterministic() {
        let a = small_dataset(4);
        let b = small_dataset(4);
        assert_eq!(a, b);
    }

    #[test]
    fn generate_single_sample() {
        assert_eq!(small_dataset(1).len(), 1);
    }

    #[test]
    fn split_80_20() {
        let ds = small_dataset(10);
        let (train, test) = split_dataset(&ds, 0.8, 3).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let mut all: Vec<usize> = train.iter().chain(test.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_rounds_and_is_deterministic() {
        let ds = small_dataset(5);
        let (train, test) = split_dataset(&ds, 0.8, 7).unwrap();
        assert_eq!((train.len(), test.len()), (4, 1));
        let again = split_dataset(&ds, 0.8, 7).unwrap();
        assert_eq!((train, test), again);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let ds = small_dataset(2);
        // round(0.8 * 2) = 2 leaves the test side empty.
        assert!(matches!(
            split_dataset(&ds, 0.8, 1),
            Err(PipelineError::Split(_))
        ));
        assert!(matches!(
            split_dataset(&ds, 0.1, 1),
            Err(PipelineError::Split(_))
        ));
    }
}
