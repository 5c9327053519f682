//! Bit-exact binary persistence for datasets and models, plus CSV, PPM
//! heatmap, and text-mask formats. All multi-byte numbers are little-endian;
//! byte layouts are the module's contract.

mod dataset;
mod export;
mod mask_text;
mod model;

pub use dataset::{read_dataset, write_dataset};
pub use export::{
    export_field_csv, export_heatmap_ppm, write_comparison_summary, write_curves_csv, RangeMode,
};
pub use mask_text::read_mask_text;
pub use model::{read_model, write_model};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid heatmap range: max {max} must exceed min {min}")]
    Range { min: f64, max: f64 },
    #[error("curves file needs at least one record")]
    EmptyCurves,
    #[error("dataset grid does not tile the plate dimensions of its config")]
    GridMismatch,
}

/// In-memory cursor that tracks absolute byte offsets for error reporting.
pub(crate) struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], IoError> {
        if self.remaining() < n {
            return Err(IoError::Format {
                offset: self.offset(),
                message: format!(
                    "truncated while reading {what}: expected {n} bytes, found {}",
                    self.remaining()
                ),
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub(crate) fn byte(&mut self, what: &str) -> Result<u8, IoError> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32, IoError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64, IoError> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }
}
