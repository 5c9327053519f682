//! Parametric generator of cooling-channel footprint masks.
//!
//! Three channel families cover low- and high-coverage layouts while staying
//! parameterizable by shape and width: straight parallel channels, a
//! serpentine path, and a border loop. A seeded sampler draws feasible,
//! pairwise-distinct configurations for dataset generation.

use crate::grid::{ChannelMask, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("infeasible channel params: {0}")]
    Infeasible(String),
    #[error("could not draw config {index} after {attempts} attempts")]
    Sampling { index: usize, attempts: usize },
    #[error("invalid channel params: {0}")]
    InvalidParams(String),
}

/// Channel layout family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelFamily {
    /// Evenly spaced full-height vertical channels.
    StraightParallel,
    /// Vertical passes joined alternately by top/bottom horizontal bends.
    Serpentine,
    /// Rectangular ring inset from the plate edge.
    BorderLoop,
}

/// Parameters of one channel layout.
///
/// `channel_count` is the number of vertical channels (StraightParallel) or
/// vertical passes (Serpentine); BorderLoop ignores it. All extents are in
/// grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelParams {
    pub family: ChannelFamily,
    pub channel_count: usize,
    pub width_cells: usize,
    pub margin_cells: usize,
}

/// Seed for reproducible sampling of channel configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometrySeed(pub u64);

impl ChannelParams {
    fn validate(&self) -> Result<(), GeometryError> {
        if self.width_cells < 1 {
            return Err(GeometryError::InvalidParams("width_cells must be >= 1".into()));
        }
        if self.channel_count < 1 {
            return Err(GeometryError::InvalidParams(
                "channel_count must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Checks that `params` fits inside `spec` without overlap, returning the
/// violated constraint otherwise.
pub fn check_feasible(spec: &GridSpec, params: &ChannelParams) -> Result<(), GeometryError> {
    params.validate()?;
    let (nx, ny) = (spec.nx, spec.ny);
    let w = params.width_cells;
    let m = params.margin_cells;
    let c = params.channel_count;
    match params.family {
        ChannelFamily::StraightParallel => {
            let occupied = c * w + 2 * m;
            if occupied > nx {
                return Err(GeometryError::Infeasible(format!(
                    "straight channels need {c}*{w} + 2*{m} = {occupied} cells, grid has nx = {nx}"
                )));
            }
        }
        ChannelFamily::Serpentine => {
            let occupied = c * w + 2 * m;
            if occupied > nx {
                return Err(GeometryError::Infeasible(format!(
                    "serpentine passes need {c}*{w} + 2*{m} = {occupied} cells, grid has nx = {nx}"
                )));
            }
            let vertical = 2 * m + 2 * w + 1;
            if vertical > ny {
                return Err(GeometryError::Infeasible(format!(
                    "serpentine bends need 2*{m} + 2*{w} + 1 = {vertical} cells, grid has ny = {ny}"
                )));
            }
        }
        ChannelFamily::BorderLoop => {
            let extent = 2 * (m + w);
            if extent > nx || extent > ny {
                return Err(GeometryError::Infeasible(format!(
                    "border loop needs 2*({m} + {w}) = {extent} cells, grid is {nx}x{ny}"
                )));
            }
        }
    }
    Ok(())
}

/// x-offsets of `count` evenly spaced strips of `width` inside
/// `[margin, nx - margin)`. Gaps between strips and margins are equal up to
/// rounding; exact divisibility yields a mirror-symmetric layout.
fn strip_starts(nx: usize, count: usize, width: usize, margin: usize) -> Vec<usize> {
    let usable = nx - 2 * margin;
    let rem = usable - count * width;
    let gap = rem as f64 / (count + 1) as f64;
    (0..count)
        .map(|k| margin + (gap * (k + 1) as f64).round() as usize + k * width)
        .collect()
}

/// Generates the binary footprint mask for `params` on `spec`.
///
/// Deterministic in its inputs; the output has at least one set cell.
pub fn gen_mask(spec: &GridSpec, params: &ChannelParams) -> Result<ChannelMask, GeometryError> {
    check_feasible(spec, params)?;
    let (nx, ny) = (spec.nx, spec.ny);
    let w = params.width_cells;
    let m = params.margin_cells;
    let mut data = vec![0u8; nx * ny];
    let mut fill_rect = |i0: usize, i1: usize, j0: usize, j1: usize| {
        for j in j0..j1 {
            data[j * nx + i0..j * nx + i1].fill(1);
        }
    };
    match params.family {
        ChannelFamily::StraightParallel => {
            for start in strip_starts(nx, params.channel_count, w, m) {
                fill_rect(start, start + w, 0, ny);
            }
        }
        ChannelFamily::Serpentine => {
            let starts = strip_starts(nx, params.channel_count, w, m);
            let (j_lo, j_hi) = (m, ny - m);
            for &start in &starts {
                fill_rect(start, start + w, j_lo, j_hi);
            }
            for (k, pair) in starts.windows(2).enumerate() {
                let (i0, i1) = (pair[0], pair[1] + w);
                if k % 2 == 0 {
                    fill_rect(i0, i1, j_hi - w, j_hi); // top bend
                } else {
                    fill_rect(i0, i1, j_lo, j_lo + w); // bottom bend
                }
            }
        }
        ChannelFamily::BorderLoop => {
            let (i0, i1) = (m, nx - m);
            let (j0, j1) = (m, ny - m);
            fill_rect(i0, i1, j0, j0 + w);
            fill_rect(i0, i1, j1 - w, j1);
            for j in j0..j1 {
                data[j * nx + i0..j * nx + i0 + w].fill(1);
                data[j * nx + i1 - w..j * nx + i1].fill(1);
            }
        }
    }
    let mask = ChannelMask::from_vec(*spec, data).expect("generated mask is binary by construction");
    debug_assert!(mask.count_ones() >= 1);
    Ok(mask)
}

const SAMPLE_ATTEMPTS: usize = 1000;
const WIDTH_RANGE: (usize, usize) = (4, 20);
const MARGIN_RANGE: (usize, usize) = (0, 10);

/// Draws `n` feasible, pairwise-distinct channel configurations for `spec`,
/// cycling the three families round-robin. Identical seeds yield identical
/// lists; collisions and infeasible draws are re-drawn up to 1000 times per
/// record.
pub fn sample_configs(
    spec: &GridSpec,
    n: usize,
    seed: GeometrySeed,
) -> Result<Vec<ChannelParams>, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let families = [
        ChannelFamily::StraightParallel,
        ChannelFamily::Serpentine,
        ChannelFamily::BorderLoop,
    ];
    let mut configs: Vec<ChannelParams> = Vec::with_capacity(n);
    for index in 0..n {
        let family = families[index % families.len()];
        let mut accepted = None;
        for _ in 0..SAMPLE_ATTEMPTS {
            let channel_count = match family {
                ChannelFamily::StraightParallel => rng.gen_range(1..=6),
                ChannelFamily::Serpentine => rng.gen_range(2..=6),
                ChannelFamily::BorderLoop => 1,
            };
            let width_cells = rng.gen_range(WIDTH_RANGE.0..=WIDTH_RANGE.1);
            let margin_cells = rng.gen_range(MARGIN_RANGE.0..=MARGIN_RANGE.1);
            let params = ChannelParams {
                family,
                channel_count,
                width_cells,
                margin_cells,
            };
            if check_feasible(spec, &params).is_ok() && !configs.contains(&params) {
                accepted = Some(params);
                break;
            }
        }
        match accepted {
            Some(params) => configs.push(params),
            None => {
                return Err(GeometryError::Sampling {
                    index,
                    attempts: SAMPLE_ATTEMPTS,
                })
            }
        }
    }
    Ok(configs)
}

/// Fraction of grid cells covered by channels.
pub fn mask_coverage(mask: &ChannelMask) -> f64 {
    mask.count_ones() as f64 / mask.spec().cell_count() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_spec() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn straight_two_channels_ones_count() {
        let params = ChannelParams {
            family: ChannelFamily::StraightParallel,
            channel_count: 2,
            width_cells: 10,
            margin_cells: 10,
        };
        let mask = gen_mask(&default_spec(), &params).unwrap();
        // count * width * ny by construction.
        assert_eq!(mask.count_ones(), 2 * 10 * 203);
        assert!((mask_coverage(&mask) - 4060.0 / 31262.0).abs() < 1e-15);
    }

    #[test]
    fn full_width_channel_is_all_ones() {
        let params = ChannelParams {
            family: ChannelFamily::StraightParallel,
            channel_count: 1,
            width_cells: 154,
            margin_cells: 0,
        };
        let mask = gen_mask(&default_spec(), &params).unwrap();
        assert_eq!(mask.count_ones(), mask.spec().cell_count());
        assert_eq!(mask_coverage(&mask), 1.0);
    }

    #[test]
    fn infeasible_straight_layout() {
        let params = ChannelParams {
            family: ChannelFamily::StraightParallel,
            channel_count: 20,
            width_cells: 10,
            margin_cells: 0,
        };
        assert!(matches!(
            gen_mask(&default_spec(), &params),
            Err(GeometryError::Infeasible(_))
        ));
    }

    #[test]
    fn all_zeros_coverage() {
        let mask = ChannelMask::filled(default_spec(), false);
        assert_eq!(mask_coverage(&mask), 0.0);
    }

    #[test]
    fn border_loop_ones_count() {
        let spec = default_spec();
        let params = ChannelParams {
            family: ChannelFamily::BorderLoop,
            channel_count: 1,
            width_cells: 8,
            margin_cells: 6,
        };
        let mask = gen_mask(&spec, &params).unwrap();
        let outer = (154 - 12) * (203 - 12);
        let hole = (154 - 12 - 16) * (203 - 12 - 16);
        assert_eq!(mask.count_ones(), outer - hole);
    }

    #[test]
    fn serpentine_is_connected_top_and_bottom() {
        let spec = default_spec();
        let params = ChannelParams {
            family: ChannelFamily::Serpentine,
            channel_count: 3,
            width_cells: 6,
            margin_cells: 5,
        };
        let mask = gen_mask(&spec, &params).unwrap();
        // Rows inside the top bend must span between the first two passes.
        let starts = strip_starts(spec.nx, 3, 6, 5);
        let j_top = spec.ny - 5 - 1;
        for i in starts[0]..starts[1] + 6 {
            assert!(mask.is_one(i, j_top));
        }
    }

    #[test]
    fn gen_mask_is_deterministic() {
        let params = ChannelParams {
            family: ChannelFamily::Serpentine,
            channel_count: 4,
            width_cells: 7,
            margin_cells: 3,
        };
        let a = gen_mask(&default_spec(), &params).unwrap();
        let b = gen_mask(&default_spec(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn straight_mask_mirror_symmetric_for_even_spacing() {
        // usable = 134, rem = 114, gaps of exactly 38: symmetric layout.
        let params = ChannelParams {
            family: ChannelFamily::StraightParallel,
            channel_count: 2,
            width_cells: 10,
            margin_cells: 10,
        };
        let spec = default_spec();
        let mask = gen_mask(&spec, &params).unwrap();
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                assert_eq!(mask.is_one(i, j), mask.is_one(spec.nx - 1 - i, j));
            }
        }
    }

    #[test]
    fn sample_configs_deterministic_and_distinct() {
        let spec = default_spec();
        let a = sample_configs(&spec, 100, GeometrySeed(42)).unwrap();
        let b = sample_configs(&spec, 100, GeometrySeed(42)).unwrap();
        assert_eq!(a, b);
        for (x, rest) in a.iter().zip(1..) {
            for y in &a[rest..] {
                assert_ne!(x, y);
            }
        }
    }

    #[test]
    fn sampled_configs_generate_nonempty_masks() {
        let spec = default_spec();
        for params in sample_configs(&spec, 30, GeometrySeed(7)).unwrap() {
            let mask = gen_mask(&spec, &params).unwrap();
            assert!(mask.count_ones() >= 1);
        }
    }

    #[test]
    fn single_config_sample_is_feasible() {
        let spec = default_spec();
        let configs = sample_configs(&spec, 1, GeometrySeed(123)).unwrap();
        assert_eq!(configs.len(), 1);
        assert!(gen_mask(&spec, &configs[0]).is_ok());
    }
}
