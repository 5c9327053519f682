//! Dense row-major tensor of 64-bit reals, up to rank 4.

use super::NnError;

/// Row-major tensor; images use channels-first `[batch, channels, ny, nx]`
/// and the spatial plane layout matches `grid::ScalarField` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        if shape.is_empty() || shape.len() > 4 {
            return Err(NnError::Shape {
                op: "tensor",
                detail: format!("rank must be 1..=4, got {}", shape.len()),
            });
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(NnError::Shape {
                op: "tensor",
                detail: format!("data length {} != shape product {}", data.len(), len),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn dims4(&self, op: &'static str) -> Result<(usize, usize, usize, usize), NnError> {
        match self.shape[..] {
            [b, c, h, w] => Ok((b, c, h, w)),
            _ => Err(NnError::Shape {
                op,
                detail: format!("expected rank-4 tensor, got shape {:?}", self.shape),
            }),
        }
    }

    pub(crate) fn dims2(&self, op: &'static str) -> Result<(usize, usize), NnError> {
        match self.shape[..] {
            [r, c] => Ok((r, c)),
            _ => Err(NnError::Shape {
                op,
                detail: format!("expected rank-2 tensor, got shape {:?}", self.shape),
            }),
        }
    }

    /// Spatial plane `(batch, channel)` of a rank-4 tensor.
    pub fn plane(&self, b: usize, c: usize) -> &[f64] {
        let (_, channels, h, w) = (self.shape[0], self.shape[1], self.shape[2], self.shape[3]);
        let plane = h * w;
        let start = (b * channels + c) * plane;
        &self.data[start..start + plane]
    }

    pub fn plane_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let (_, channels, h, w) = (self.shape[0], self.shape[1], self.shape[2], self.shape[3]);
        let plane = h * w;
        let start = (b * channels + c) * plane;
        &mut self.data[start..start + plane]
    }
}
