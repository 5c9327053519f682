//! Grid geometry and field containers shared by every other module.
//!
//! The discretization convention is fixed here once: a cell-centered grid of
//! `nx x ny` cells tiles the plate exactly (`nx * dx == lx`), stored row-major
//! with y as the outer index and the origin at the lower-left corner. Cell
//! `(i, j)` lives at flat index `j * nx + i`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cell index ({i}, {j}) out of range for {nx}x{ny} grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        nx: usize,
        ny: usize,
    },
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("data length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("mask entry at flat index {index} is {value}, expected 0 or 1")]
    BadMaskValue { index: usize, value: u8 },
    #[error("invalid physical config: {0}")]
    InvalidConfig(String),
}

/// Cell-centered structured grid: `nx` cells of width `dx` along x,
/// `ny` cells of height `dy` along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Default for GridSpec {
    /// 154 x 203 cells at 1 mm spacing.
    fn default() -> Self {
        Self {
            nx: 154,
            ny: 203,
            dx: 1.0e-3,
            dy: 1.0e-3,
        }
    }
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self, GridError> {
        if nx < 1 || ny < 1 {
            return Err(GridError::InvalidSpec(format!(
                "cell counts must be >= 1, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0) || !(dy > 0.0) || !dx.is_finite() || !dy.is_finite() {
            return Err(GridError::InvalidSpec(format!(
                "cell sizes must be positive and finite, got dx={dx}, dy={dy}"
            )));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Grid of `nx x ny` cells tiling the plate of `config` exactly
    /// (`dx = lx / nx`, `dy = ly / ny`).
    pub fn covering(nx: usize, ny: usize, config: &PhysicalConfig) -> Result<Self, GridError> {
        if nx < 1 || ny < 1 {
            return Err(GridError::InvalidSpec(format!(
                "cell counts must be >= 1, got {nx}x{ny}"
            )));
        }
        Self::new(nx, ny, config.lx / nx as f64, config.ly / ny as f64)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Area of one cell, `dx * dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Flat index of cell `(i, j)`; callers guarantee the range.
    #[inline(always)]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Inverse of [`GridSpec::index`].
    #[inline(always)]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.cell_count());
        (index % self.nx, index / self.nx)
    }

    /// Physical center of cell `(i, j)`: `((i + 0.5) dx, (j + 0.5) dy)`.
    pub fn cell_center(&self, i: usize, j: usize) -> Result<(f64, f64), GridError> {
        if i >= self.nx || j >= self.ny {
            return Err(GridError::IndexOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok(((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy))
    }

    /// Whether this grid tiles the plate of `config` exactly (to rounding).
    pub fn tiles_plate(&self, config: &PhysicalConfig) -> bool {
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
        rel(self.nx as f64 * self.dx, config.lx) && rel(self.ny as f64 * self.dy, config.ly)
    }
}

/// Dense 2D grid of 64-bit reals (temperature, residual, convection map, ...).
///
/// Immutable after construction; every public constructor rejects non-finite
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn constant(spec: GridSpec, value: f64) -> Result<Self, GridError> {
        if !value.is_finite() {
            return Err(GridError::NonFinite { index: 0 });
        }
        Ok(Self {
            spec,
            data: vec![value; spec.cell_count()],
        })
    }

    pub fn from_vec(spec: GridSpec, data: Vec<f64>) -> Result<Self, GridError> {
        if data.len() != spec.cell_count() {
            return Err(GridError::LengthMismatch {
                got: data.len(),
                want: spec.cell_count(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.spec.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Binary footprint of coolant channels on the grid: 1 under a channel,
/// 0 elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMask {
    spec: GridSpec,
    data: Vec<u8>,
}

impl ChannelMask {
    pub fn filled(spec: GridSpec, one: bool) -> Self {
        Self {
            spec,
            data: vec![u8::from(one); spec.cell_count()],
        }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<u8>) -> Result<Self, GridError> {
        if data.len() != spec.cell_count() {
            return Err(GridError::LengthMismatch {
                got: data.len(),
                want: spec.cell_count(),
            });
        }
        if let Some(index) = data.iter().position(|&v| v > 1) {
            return Err(GridError::BadMaskValue {
                index,
                value: data[index],
            });
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[u8] {
        &self.data
    }

    #[inline(always)]
    pub fn is_one(&self, i: usize, j: usize) -> bool {
        self.data[self.spec.index(i, j)] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }
}

/// Physical constants of the plate model. Temperatures in deg C, SI otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    /// Thermal conductivity of the cold plate, W/(m K).
    pub k: f64,
    /// Plate thickness, m.
    pub thickness: f64,
    /// Convection coefficient under coolant channels, W/(m^2 K).
    pub h_coeff: f64,
    /// Background convection coefficient away from channels, W/(m^2 K).
    pub h_bg: f64,
    /// Coolant temperature, deg C.
    pub t_coolant: f64,
    /// Total cell heat generation, W.
    pub q_batt: f64,
    /// Plate width, m.
    pub lx: f64,
    /// Plate length, m.
    pub ly: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            k: 202.4,
            thickness: 2.0e-3,
            h_coeff: 1500.0,
            h_bg: 0.0,
            t_coolant: 25.0,
            q_batt: 8.0,
            lx: 0.154,
            ly: 0.203,
        }
    }
}

impl PhysicalConfig {
    pub fn validate(&self) -> Result<(), GridError> {
        let fields = [
            ("k", self.k),
            ("thickness", self.thickness),
            ("h_coeff", self.h_coeff),
            ("h_bg", self.h_bg),
            ("t_coolant", self.t_coolant),
            ("q_batt", self.q_batt),
            ("lx", self.lx),
            ("ly", self.ly),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(GridError::InvalidConfig(format!("{name} is not finite")));
            }
        }
        if self.k <= 0.0 || self.thickness <= 0.0 || self.lx <= 0.0 || self.ly <= 0.0 {
            return Err(GridError::InvalidConfig(
                "k, thickness, lx, ly must be positive".into(),
            ));
        }
        if self.h_coeff < 0.0 || self.h_bg < 0.0 || self.q_batt < 0.0 {
            return Err(GridError::InvalidConfig(
                "h_coeff, h_bg, q_batt must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Uniform areal heat-generation flux `q_batt / (lx * ly)`, W/m^2.
    pub fn q_gen(&self) -> f64 {
        self.q_batt / (self.lx * self.ly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_grid_spec() {
        let spec = GridSpec::default();
        assert_eq!(spec.nx, 154);
        assert_eq!(spec.ny, 203);
        assert_eq!(spec.dx, 1.0e-3);
        assert_eq!(spec.dy, 1.0e-3);
        // Derived plate extent and cell area.
        assert!((spec.nx as f64 * spec.dx - 0.154).abs() < 1e-15);
        assert!((spec.cell_area() - 1.0e-6).abs() < 1e-21);
    }

    #[test]
    fn cell_center_origin_and_far_corner() {
        let spec = GridSpec::default();
        assert_eq!(spec.cell_center(0, 0).unwrap(), (0.0005, 0.0005));
        let (x, y) = spec.cell_center(153, 202).unwrap();
        assert!((x - 0.1535).abs() < 1e-15);
        assert!((y - 0.2025).abs() < 1e-15);
    }

    #[test]
    fn cell_center_out_of_range() {
        let spec = GridSpec::default();
        assert!(matches!(
            spec.cell_center(154, 0),
            Err(GridError::IndexOutOfRange { i: 154, j: 0, .. })
        ));
    }

    #[test]
    fn q_gen_default_value() {
        let config = PhysicalConfig::default();
        // Independent arithmetic: 8 / (0.154 * 0.203).
        let expected = 8.0 / (0.154 * 0.203);
        assert_eq!(config.q_gen(), expected);
        assert!((config.q_gen() - 255.90).abs() < 0.01);
    }

    #[test]
    fn q_gen_zero_and_linear() {
        let mut config = PhysicalConfig::default();
        config.q_batt = 0.0;
        assert_eq!(config.q_gen(), 0.0);

        let mut half = PhysicalConfig::default();
        half.q_batt = 4.0;
        let full = PhysicalConfig::default();
        // Exact in 64-bit arithmetic for power-of-two scaling.
        assert_eq!(2.0 * half.q_gen(), full.q_gen());
    }

    #[test]
    fn covering_reduced_profile() {
        let config = PhysicalConfig::default();
        let spec = GridSpec::covering(77, 102, &config).unwrap();
        assert!(spec.tiles_plate(&config));
        assert!((spec.dx - 2.0e-3).abs() < 1e-15);
    }

    #[test]
    fn field_rejects_non_finite() {
        let spec = GridSpec::new(2, 2, 1.0, 1.0).unwrap();
        assert!(matches!(
            ScalarField::from_vec(spec, vec![0.0, 1.0, f64::NAN, 3.0]),
            Err(GridError::NonFinite { index: 2 })
        ));
        assert!(ScalarField::constant(spec, f64::INFINITY).is_err());
    }

    #[test]
    fn mask_rejects_non_binary() {
        let spec = GridSpec::new(2, 1, 1.0, 1.0).unwrap();
        assert!(matches!(
            ChannelMask::from_vec(spec, vec![0, 2]),
            Err(GridError::BadMaskValue { index: 1, value: 2 })
        ));
    }

    proptest! {
        #[test]
        fn index_round_trips(nx in 1usize..64, ny in 1usize..64, seed in 0usize..4096) {
            let spec = GridSpec::new(nx, ny, 1e-3, 1e-3).unwrap();
            let i = seed % nx;
            let j = (seed / nx) % ny;
            let flat = spec.index(i, j);
            prop_assert_eq!(spec.coords(flat), (i, j));
        }

        #[test]
        fn constant_fields_are_finite(value in -1e300f64..1e300) {
            let spec = GridSpec::new(3, 5, 1e-3, 1e-3).unwrap();
            let field = ScalarField::constant(spec, value).unwrap();
            prop_assert!(field.values().iter().all(|v| v.is_finite()));
        }
    }
}
