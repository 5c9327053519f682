//! Training objectives: target standardization, data MSE, normalized PDE
//! residual loss, boundary penalty, and their weighted composite. Every loss
//! returns its exact gradient with respect to the normalized prediction.
//!
//! The PDE and boundary terms are evaluated on the denormalized field (they
//! are physical quantities); the chain rule through the standardization is
//! the constant factor sigma. The PDE term reuses the solver's stencil, so a
//! converged ground-truth field has (numerically) zero PDE loss.

use crate::fdm::{apply_residual_jacobian, pde_residual_field, FdmError};
use crate::grid::{ChannelMask, GridSpec, PhysicalConfig, ScalarField};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("cannot fit statistics on an empty pool")]
    EmptyPool,
    #[error("degenerate statistics: standard deviation {sigma:.3e} below 1e-12")]
    DegenerateStats { sigma: f64 },
    #[error("invalid statistics: {0}")]
    InvalidStats(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("pde loss requires q_gen > 0")]
    ZeroHeatGeneration,
    #[error("boundary loss requires at least a 2x2 grid, got {nx}x{ny}")]
    DegenerateGrid { nx: usize, ny: usize },
    #[error("weights must be nonnegative and not all zero")]
    InvalidWeights,
    #[error(transparent)]
    Fdm(#[from] FdmError),
}

/// Standardization statistics computed from the training split only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    mu: f64,
    sigma: f64,
}

impl NormStats {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, LossError> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(LossError::InvalidStats(format!(
                "mu = {mu}, sigma = {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline(always)]
    pub fn normalize_value(&self, t: f64) -> f64 {
        (t - self.mu) / self.sigma
    }

    #[inline(always)]
    pub fn denormalize_value(&self, tn: f64) -> f64 {
        tn * self.sigma + self.mu
    }
}

/// Mean and population standard deviation over every cell of the given
/// fields (two-pass for stability).
pub fn fit_norm(fields: &[&ScalarField]) -> Result<NormStats, LossError> {
    let count: usize = fields.iter().map(|f| f.values().len()).sum();
    if count == 0 {
        return Err(LossError::EmptyPool);
    }
    let sum: f64 = fields.iter().map(|f| f.values().iter().sum::<f64>()).sum();
    let mu = sum / count as f64;
    let sq_sum: f64 = fields
        .iter()
        .map(|f| f.values().iter().map(|v| (v - mu) * (v - mu)).sum::<f64>())
        .sum();
    let sigma = (sq_sum / count as f64).sqrt();
    if sigma < 1e-12 {
        return Err(LossError::DegenerateStats { sigma });
    }
    Ok(NormStats { mu, sigma })
}

/// `(T - mu) / sigma` per cell.
pub fn normalize(field: &ScalarField, stats: &NormStats) -> ScalarField {
    let data = field.values().iter().map(|&t| stats.normalize_value(t)).collect();
    ScalarField::from_vec(*field.spec(), data).expect("affine map of finite field is finite")
}

/// `Tn * sigma + mu` per cell.
pub fn denormalize(field: &ScalarField, stats: &NormStats) -> ScalarField {
    let data = field
        .values()
        .iter()
        .map(|&tn| stats.denormalize_value(tn))
        .collect();
    ScalarField::from_vec(*field.spec(), data).expect("affine map of finite field is finite")
}

/// Per-cell mean squared error and its gradient `2 (pred - target) / n`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>), LossError> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(LossError::ShapeMismatch(format!(
            "pred has {} entries, target {}",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (g, (&p, &t)) in grad.iter_mut().zip(pred.iter().zip(target)) {
        let d = p - t;
        value += d * d;
        *g = 2.0 * d / n;
    }
    Ok((value / n, grad))
}

/// Mean squared PDE residual normalized by the heat-generation flux:
/// `(1/N) sum (R_i / q_gen)^2`, with the gradient taken through the shared
/// residual stencil and the affine denormalization.
pub fn pde_loss(
    pred_norm: &[f64],
    stats: &NormStats,
    mask: &ChannelMask,
    config: &PhysicalConfig,
) -> Result<(f64, Vec<f64>), LossError> {
    let spec = *mask.spec();
    if pred_norm.len() != spec.cell_count() {
        return Err(LossError::ShapeMismatch(format!(
            "prediction has {} entries, grid {}x{}",
            pred_norm.len(),
            spec.nx,
            spec.ny
        )));
    }
    let q_gen = config.q_gen();
    if !(q_gen > 0.0) {
        return Err(LossError::ZeroHeatGeneration);
    }
    let celsius: Vec<f64> = pred_norm.iter().map(|&p| stats.denormalize_value(p)).collect();
    let t_field = ScalarField::from_vec(spec, celsius).map_err(FdmError::from)?;
    let residual = pde_residual_field(&t_field, mask, config)?;
    let n = pred_norm.len() as f64;
    let value = residual
        .values()
        .iter()
        .map(|&r| (r / q_gen) * (r / q_gen))
        .sum::<f64>()
        / n;
    // d value / d T = (2 / (N q^2)) J(R), and d T / d pred = sigma.
    let jr = apply_residual_jacobian(&residual, mask, config)?;
    let factor = 2.0 * stats.sigma() / (n * q_gen * q_gen);
    let grad = jr.values().iter().map(|&v| factor * v).collect();
    Ok((value, grad))
}

/// Soft adiabatic-boundary penalty: mean over boundary cells of the squared
/// one-sided normal gradient `(T_boundary - T_inward) / dstep` in deg C per
/// meter, corners contributing both normals.
pub fn bc_loss(
    pred_norm: &[f64],
    stats: &NormStats,
    spec: &GridSpec,
) -> Result<(f64, Vec<f64>), LossError> {
    let (nx, ny) = (spec.nx, spec.ny);
    if nx < 2 || ny < 2 {
        return Err(LossError::DegenerateGrid { nx, ny });
    }
    if pred_norm.len() != spec.cell_count() {
        return Err(LossError::ShapeMismatch(format!(
            "prediction has {} entries, grid {nx}x{ny}",
            pred_norm.len()
        )));
    }
    let celsius: Vec<f64> = pred_norm.iter().map(|&p| stats.denormalize_value(p)).collect();
    let boundary_cells = (2 * (nx + ny) - 4) as f64;
    let mut sum = 0.0;
    let mut grad = vec![0.0; pred_norm.len()];
    let mut add = |outer: usize, inner: usize, dstep: f64| {
        let g = (celsius[outer] - celsius[inner]) / dstep;
        sum += g * g;
        grad[outer] += 2.0 * g / dstep;
        grad[inner] -= 2.0 * g / dstep;
    };
    for j in 0..ny {
        add(spec.index(0, j), spec.index(1, j), spec.dx);
        add(spec.index(nx - 1, j), spec.index(nx - 2, j), spec.dx);
    }
    for i in 0..nx {
        add(spec.index(i, 0), spec.index(i, 1), spec.dy);
        add(spec.index(i, ny - 1), spec.index(i, ny - 2), spec.dy);
    }
    let factor = stats.sigma() / boundary_cells;
    for g in grad.iter_mut() {
        *g *= factor;
    }
    Ok((sum / boundary_cells, grad))
}

/// Composite-loss weights; all nonnegative, not all zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        let ws = [self.w1, self.w2, self.w3];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) || ws.iter().all(|&w| w == 0.0) {
            return Err(LossError::InvalidWeights);
        }
        Ok(())
    }
}

/// Per-step loss components and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_mse: f64,
    pub l_pde: f64,
    pub l_bc: f64,
    pub l_total: f64,
}

/// Weighted composite `w1 L_MSE + w2 L_PDE + w3 L_BC` with its gradient.
/// Components with zero weight are skipped entirely (reported as 0), so a
/// `(1, 0, 0)` run is bit-identical to a pure MSE run.
pub fn total_loss(
    pred_norm: &[f64],
    target_norm: &[f64],
    stats: &NormStats,
    mask: &ChannelMask,
    config: &PhysicalConfig,
    weights: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>), LossError> {
    weights.validate()?;
    let (l_mse, g_mse) = mse_loss(pred_norm, target_norm)?;
    let mut grad: Vec<f64> = g_mse.iter().map(|&g| weights.w1 * g).collect();
    let mut l_pde = 0.0;
    if weights.w2 > 0.0 {
        let (value, g) = pde_loss(pred_norm, stats, mask, config)?;
        l_pde = value;
        for (total, gi) in grad.iter_mut().zip(&g) {
            *total += weights.w2 * gi;
        }
    }
    let mut l_bc = 0.0;
    if weights.w3 > 0.0 {
        let (value, g) = bc_loss(pred_norm, stats, mask.spec())?;
        l_bc = value;
        for (total, gi) in grad.iter_mut().zip(&g) {
            *total += weights.w3 * gi;
        }
    }
    let breakdown = LossBreakdown {
        l_mse,
        l_pde,
        l_bc,
        l_total: weights.w1 * l_mse + weights.w2 * l_pde + weights.w3 * l_bc,
    };
    Ok((breakdown, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdm::{solve_steady_state, SolverOptions};
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Moderate-magnitude config so finite-difference probes stay well
    /// conditioned; the math is identical to the plate defaults.
    fn tame_config() -> PhysicalConfig {
        PhysicalConfig {
            k: 2.0,
            thickness: 0.5,
            h_coeff: 3.0,
            h_bg: 0.0,
            t_coolant: 1.0,
            q_batt: 6.0,
            lx: 1.5,
            ly: 1.25,
        }
    }

    fn tame_grid() -> GridSpec {
        GridSpec::new(6, 5, 0.25, 0.25).unwrap()
    }

    fn rand_mask(spec: GridSpec, rng: &mut ChaCha8Rng) -> ChannelMask {
        loop {
            let data: Vec<u8> = (0..spec.cell_count())
                .map(|_| u8::from(rng.gen_bool(0.3)))
                .collect();
            if data.iter().any(|&v| v == 1) {
                return ChannelMask::from_vec(spec, data).unwrap();
            }
        }
    }

    #[test]
    fn fit_norm_two_point_pool() {
        let spec = GridSpec::new(1, 1, 1.0, 1.0).unwrap();
        let a = ScalarField::constant(spec, 20.0).unwrap();
        let b = ScalarField::constant(spec, 30.0).unwrap();
        let stats = fit_norm(&[&a, &b]).unwrap();
        assert_eq!(stats.mu(), 25.0);
        assert_eq!(stats.sigma(), 5.0);
    }

    #[test]
    fn fit_norm_rejects_degenerate_pools() {
        let spec = GridSpec::new(2, 2, 1.0, 1.0).unwrap();
        let constant = ScalarField::constant(spec, 7.0).unwrap();
        assert!(matches!(
            fit_norm(&[&constant]),
            Err(LossError::DegenerateStats { .. })
        ));
        assert!(matches!(fit_norm(&[]), Err(LossError::EmptyPool)));
    }

    #[test]
    fn stats_depend_only_on_the_fitted_pool() {
        let spec = GridSpec::new(1, 1, 1.0, 1.0).unwrap();
        let train: Vec<ScalarField> = [20.0, 30.0]
            .iter()
            .map(|&v| ScalarField::constant(spec, v).unwrap())
            .collect();
        let refs: Vec<&ScalarField> = train.iter().collect();
        let before = fit_norm(&refs).unwrap();
        // A disjoint test pool exists but never enters the fit.
        let _test_only = ScalarField::constant(spec, 1000.0).unwrap();
        let after = fit_norm(&refs).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn normalize_examples_and_round_trip() {
        let stats = NormStats::new(25.0, 5.0).unwrap();
        assert_eq!(stats.normalize_value(30.0), 1.0);
        assert_eq!(stats.normalize_value(25.0), 0.0);

        let spec = GridSpec::new(4, 3, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..12).map(|_| rng.gen_range(10.0..40.0)).collect();
        let field = ScalarField::from_vec(spec, data).unwrap();
        let round = denormalize(&normalize(&field, &stats), &stats);
        for (&a, &b) in field.values().iter().zip(round.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mse_examples() {
        let target = vec![1.0, 2.0, 3.0];
        let (zero, grad) = mse_loss(&target, &target).unwrap();
        assert_eq!(zero, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));

        let pred: Vec<f64> = target.iter().map(|v| v + 1.0).collect();
        let (one, _) = mse_loss(&pred, &target).unwrap();
        assert_eq!(one, 1.0);

        assert!(mse_loss(&pred, &[1.0]).is_err());
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pred: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = mse_loss(&pred, &target).unwrap();
        let eps = 1e-6;
        for idx in 0..pred.len() {
            let mut plus = pred.clone();
            plus[idx] += eps;
            let mut minus = pred.clone();
            minus[idx] -= eps;
            let num =
                (mse_loss(&plus, &target).unwrap().0 - mse_loss(&minus, &target).unwrap().0) / (2.0 * eps);
            let rel = (grad[idx] - num).abs() / grad[idx].abs().max(num.abs()).max(1e-8);
            assert!(rel < 1e-6, "cell {idx}: {} vs {num}", grad[idx]);
        }
    }

    #[test]
    fn pde_loss_of_exact_solution_is_tiny() {
        let config = PhysicalConfig::default();
        let spec = GridSpec::new(20, 25, 1e-3, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mask = rand_mask(spec, &mut rng);
        let (field, _) = solve_steady_state(&mask, &config, &SolverOptions::default()).unwrap();
        let stats = NormStats::new(25.0, 0.5).unwrap();
        let pred: Vec<f64> = field.values().iter().map(|&t| stats.normalize_value(t)).collect();
        let (value, _) = pde_loss(&pred, &stats, &mask, &config).unwrap();
        assert!(value < 1e-12, "pde loss {value}");
    }

    #[test]
    fn pde_loss_of_coolant_field_on_empty_mask_is_one() {
        let config = PhysicalConfig::default();
        let spec = GridSpec::new(7, 6, 1e-3, 1e-3).unwrap();
        let mask = ChannelMask::filled(spec, false);
        let stats = NormStats::new(20.0, 2.0).unwrap();
        let pred = vec![stats.normalize_value(config.t_coolant); spec.cell_count()];
        let (value, _) = pde_loss(&pred, &stats, &mask, &config).unwrap();
        assert_eq!(value, 1.0);
    }

    #[test]
    fn pde_loss_requires_heat_generation() {
        let mut config = tame_config();
        config.q_batt = 0.0;
        let spec = tame_grid();
        let mask = ChannelMask::filled(spec, true);
        let stats = NormStats::new(1.0, 1.0).unwrap();
        let pred = vec![0.0; spec.cell_count()];
        assert!(matches!(
            pde_loss(&pred, &stats, &mask, &config),
            Err(LossError::ZeroHeatGeneration)
        ));
    }

    #[test]
    fn pde_gradient_matches_finite_differences() {
        let config = tame_config();
        let spec = tame_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mask = rand_mask(spec, &mut rng);
        let stats = NormStats::new(1.5, 0.8).unwrap();
        let pred: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = pde_loss(&pred, &stats, &mask, &config).unwrap();
        let eps = 1e-6;
        for idx in 0..pred.len() {
            let mut plus = pred.clone();
            plus[idx] += eps;
            let mut minus = pred.clone();
            minus[idx] -= eps;
            let num = (pde_loss(&plus, &stats, &mask, &config).unwrap().0
                - pde_loss(&minus, &stats, &mask, &config).unwrap().0)
                / (2.0 * eps);
            let rel = (grad[idx] - num).abs() / grad[idx].abs().max(num.abs()).max(1e-8);
            assert!(rel < 1e-6, "cell {idx}: {} vs {num}", grad[idx]);
        }
    }

    #[test]
    fn pde_loss_invariant_under_compensated_sigma_scaling() {
        let config = tame_config();
        let spec = tame_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask = rand_mask(spec, &mut rng);
        let stats = NormStats::new(1.5, 0.8).unwrap();
        let pred: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let doubled = NormStats::new(1.5, 1.6).unwrap();
        let halved: Vec<f64> = pred.iter().map(|p| p / 2.0).collect();
        let (a, _) = pde_loss(&pred, &stats, &mask, &config).unwrap();
        let (b, _) = pde_loss(&halved, &doubled, &mask, &config).unwrap();
        // Power-of-two rescaling is exact, so the physics sees identical
        // temperatures.
        assert_eq!(a, b);
    }

    #[test]
    fn bc_loss_of_constant_field_is_zero() {
        let spec = tame_grid();
        let stats = NormStats::new(3.0, 2.0).unwrap();
        let pred = vec![0.4; spec.cell_count()];
        let (value, grad) = bc_loss(&pred, &stats, &spec).unwrap();
        assert_eq!(value, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn bc_loss_of_linear_ramp_matches_closed_form() {
        // T = a*x: every left/right boundary cell contributes a^2 through its
        // x-normal; top/bottom normals see no y-variation.
        let spec = tame_grid();
        let stats = NormStats::new(0.0, 1.0).unwrap();
        let a = 1.75;
        let mut pred = vec![0.0; spec.cell_count()];
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let (x, _) = spec.cell_center(i, j).unwrap();
                pred[spec.index(i, j)] = a * x;
            }
        }
        let (value, _) = bc_loss(&pred, &stats, &spec).unwrap();
        let boundary_cells = (2 * (spec.nx + spec.ny) - 4) as f64;
        let expected = 2.0 * spec.ny as f64 * a * a / boundary_cells;
        assert!((value - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn bc_gradient_matches_finite_differences() {
        let spec = tame_grid();
        let stats = NormStats::new(1.0, 0.6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pred: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grad) = bc_loss(&pred, &stats, &spec).unwrap();
        let eps = 1e-6;
        for idx in 0..pred.len() {
            let mut plus = pred.clone();
            plus[idx] += eps;
            let mut minus = pred.clone();
            minus[idx] -= eps;
            let num = (bc_loss(&plus, &stats, &spec).unwrap().0
                - bc_loss(&minus, &stats, &spec).unwrap().0)
                / (2.0 * eps);
            let denom = grad[idx].abs().max(num.abs()).max(1e-8);
            assert!((grad[idx] - num).abs() / denom < 1e-6);
        }
    }

    #[test]
    fn bc_loss_rejects_degenerate_grids() {
        let spec = GridSpec::new(1, 5, 1.0, 1.0).unwrap();
        let stats = NormStats::new(0.0, 1.0).unwrap();
        assert!(matches!(
            bc_loss(&vec![0.0; 5], &stats, &spec),
            Err(LossError::DegenerateGrid { .. })
        ));
    }

    #[test]
    fn total_loss_with_mse_only_weights_reduces_to_mse() {
        let config = tame_config();
        let spec = tame_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mask = rand_mask(spec, &mut rng);
        let stats = NormStats::new(1.0, 1.0).unwrap();
        let pred: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights = LossWeights { w1: 1.0, w2: 0.0, w3: 0.0 };
        let (bd, grad) = total_loss(&pred, &target, &stats, &mask, &config, &weights).unwrap();
        let (mse, mse_grad) = mse_loss(&pred, &target).unwrap();
        assert_eq!(bd.l_total, mse);
        assert_eq!(bd.l_pde, 0.0);
        assert_eq!(bd.l_bc, 0.0);
        assert_eq!(grad, mse_grad);
    }

    #[test]
    fn total_loss_breakdown_identity() {
        let config = tame_config();
        let spec = tame_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mask = rand_mask(spec, &mut rng);
        let stats = NormStats::new(1.0, 0.5).unwrap();
        let pred: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights = LossWeights { w1: 0.7, w2: 0.2, w3: 0.1 };
        let (bd, _) = total_loss(&pred, &target, &stats, &mask, &config, &weights).unwrap();
        let expected = 0.7 * bd.l_mse + 0.2 * bd.l_pde + 0.1 * bd.l_bc;
        assert!((bd.l_total - expected).abs() <= 1e-15 * expected.abs().max(1.0));
        assert!(bd.l_mse >= 0.0 && bd.l_pde >= 0.0 && bd.l_bc >= 0.0);
    }

    #[test]
    fn total_loss_of_ground_truth_data_and_pde_terms_vanish() {
        let config = PhysicalConfig::default();
        let spec = GridSpec::new(16, 20, 1e-3, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mask = rand_mask(spec, &mut rng);
        let (field, _) = solve_steady_state(&mask, &config, &SolverOptions::default()).unwrap();
        let stats = fit_norm(&[&field]).unwrap();
        let pred: Vec<f64> = field.values().iter().map(|&t| stats.normalize_value(t)).collect();
        let weights = LossWeights { w1: 1.0, w2: 1.0, w3: 0.0 };
        let (bd, _) = total_loss(&pred, &pred.clone(), &stats, &mask, &config, &weights).unwrap();
        assert!(bd.l_total < 1e-10, "l_total {}", bd.l_total);
        // The one-sided boundary penalty of the discrete solution is a real
        // physical magnitude, not a solver artifact; it stays finite.
        let (bc, _) = bc_loss(&pred, &stats, &spec).unwrap();
        assert!(bc > 0.0);
    }

    #[test]
    fn total_gradient_matches_finite_differences() {
        let config = tame_config();
        let spec = tame_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mask = rand_mask(spec, &mut rng);
        let stats = NormStats::new(1.2, 0.9).unwrap();
        let pred: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..spec.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let weights = LossWeights { w1: 1.0, w2: 0.5, w3: 0.25 };
        let (_, grad) = total_loss(&pred, &target, &stats, &mask, &config, &weights).unwrap();
        let eps = 1e-6;
        let value = |p: &[f64]| {
            total_loss(p, &target, &stats, &mask, &config, &weights)
                .unwrap()
                .0
                .l_total
        };
        for idx in 0..pred.len() {
            let mut plus = pred.clone();
            plus[idx] += eps;
            let mut minus = pred.clone();
            minus[idx] -= eps;
            let num = (value(&plus) - value(&minus)) / (2.0 * eps);
            let denom = grad[idx].abs().max(num.abs()).max(1e-8);
            assert!((grad[idx] - num).abs() / denom < 1e-6);
        }
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(LossWeights { w1: 0.0, w2: 0.0, w3: 0.0 }.validate().is_err());
        assert!(LossWeights { w1: -1.0, w2: 1.0, w3: 1.0 }.validate().is_err());
        assert!(LossWeights::default().validate().is_ok());
    }
}
