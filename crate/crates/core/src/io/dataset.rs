//! Single-file binary dataset format (magic `PCTD`, version 1).
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset 0    magic "PCTD"
//! offset 4    version u32 = 1
//! offset 8    nx u32, ny u32, n_samples u32
//! offset 20   lx, ly, k, t, h_coeff, h_bg, t_coolant, q_batt (8 x f64)
//! offset 84   per sample: nx*ny mask bytes, then nx*ny field f64s,
//!             both in row-major grid order
//! ```

use super::{Cursor, IoError};
use crate::grid::{ChannelMask, GridSpec, PhysicalConfig, ScalarField};
use crate::pipeline::{Dataset, Sample};
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"PCTD";
const VERSION: u32 = 1;

/// Writes a dataset: header (magic, version, nx, ny, n_samples, then the
/// eight physical reals lx, ly, k, t, h_coeff, h_bg, t_coolant, q_batt),
/// followed per sample by nx*ny mask bytes and nx*ny field reals in grid
/// order. The grid must tile the plate, since cell sizes are reconstructed
/// from lx/nx and ly/ny on read.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), IoError> {
    if !dataset.spec.tiles_plate(&dataset.config) {
        return Err(IoError::GridMismatch);
    }
    let spec = dataset.spec;
    let config = dataset.config;
    let mut out = Vec::with_capacity(84 + dataset.len() * spec.cell_count() * 9);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.nx as u32).to_le_bytes());
    out.extend_from_slice(&(spec.ny as u32).to_le_bytes());
    out.extend_from_slice(&(dataset.len() as u32).to_le_bytes());
    for value in [
        config.lx,
        config.ly,
        config.k,
        config.thickness,
        config.h_coeff,
        config.h_bg,
        config.t_coolant,
        config.q_batt,
    ] {
        out.extend_from_slice(&value.to_le_bytes());
    }
    for sample in &dataset.samples {
        out.extend_from_slice(sample.mask.values());
        for &value in sample.field.values() {
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`], verifying magic, version,
/// exact payload length, mask bytes, and field finiteness.
pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let buf = fs::read(path)?;
    let mut cur = Cursor::new(&buf);

    let magic = cur.take(4, "magic")?;
    if magic != MAGIC {
        return Err(IoError::Format {
            offset: 0,
            message: format!("bad magic {magic:?}, expected {MAGIC:?}"),
        });
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let nx = cur.u32("nx")? as usize;
    let ny = cur.u32("ny")? as usize;
    let n_samples = cur.u32("n_samples")? as usize;
    if nx == 0 || ny == 0 {
        return Err(IoError::Format {
            offset: 8,
            message: format!("grid dimensions must be positive, got {nx}x{ny}"),
        });
    }
    let mut phys = [0.0; 8];
    for value in phys.iter_mut() {
        *value = cur.f64("physical block")?;
    }
    let config = PhysicalConfig {
        lx: phys[0],
        ly: phys[1],
        k: phys[2],
        thickness: phys[3],
        h_coeff: phys[4],
        h_bg: phys[5],
        t_coolant: phys[6],
        q_batt: phys[7],
    };
    config.validate().map_err(|e| IoError::Format {
        offset: 20,
        message: format!("invalid physical block: {e}"),
    })?;
    let spec = GridSpec::covering(nx, ny, &config).map_err(|e| IoError::Format {
        offset: 8,
        message: format!("invalid grid: {e}"),
    })?;

    let cells = nx * ny;
    let expected = 84u64 + (n_samples as u64) * (cells as u64) * 9;
    if (buf.len() as u64) != expected {
        return Err(IoError::Format {
            offset: buf.len().min(84) as u64,
            message: format!(
                "payload length mismatch: expected {expected} bytes total, found {}",
                buf.len()
            ),
        });
    }

    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mask_offset = cur.offset();
        let mask_bytes = cur.take(cells, "mask")?;
        if let Some(bad) = mask_bytes.iter().position(|&b| b > 1) {
            return Err(IoError::Format {
                offset: mask_offset + bad as u64,
                message: format!("mask byte {} is not 0 or 1", mask_bytes[bad]),
            });
        }
        let mask = ChannelMask::from_vec(spec, mask_bytes.to_vec())
            .expect("validated mask bytes");
        let field_offset = cur.offset();
        let field_bytes = cur.take(cells * 8, "field")?;
        let mut values = Vec::with_capacity(cells);
        for (idx, chunk) in field_bytes.chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
            if !v.is_finite() {
                return Err(IoError::Format {
                    offset: field_offset + (idx as u64) * 8,
                    message: "non-finite field value".into(),
                });
            }
            values.push(v);
        }
        let field = ScalarField::from_vec(spec, values).expect("validated finite values");
        samples.push(Sample { mask, field });
    }
    Ok(Dataset {
        spec,
        config,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdm::SolverOptions;
    use crate::geometry::GeometrySeed;
    use crate::pipeline::generate_dataset;

    fn sample_dataset() -> Dataset {
        let config = PhysicalConfig::default();
        let spec = GridSpec::covering(14, 11, &config).unwrap();
        generate_dataset(3, GeometrySeed(4), &spec, &config, &SolverOptions::default()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.pctd");
        write_dataset(&path, &dataset).unwrap();
        let read = read_dataset(&path).unwrap();
        assert_eq!(read, dataset);

        // Byte-level idempotence of write(read(f)).
        let path2 = dir.path().join("ds2.pctd");
        write_dataset(&path2, &read).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn bad_magic_reported_at_offset_zero() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.pctd");
        write_dataset(&path, &dataset).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        fs::write(&path, &bytes).unwrap();
        match read_dataset(&path) {
            Err(IoError::Format { offset: 0, .. }) => {}
            other => panic!("expected format error at offset 0, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_version_rejected() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.pctd");
        write_dataset(&path, &dataset).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4..8].copy_from_slice(&2u32.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(IoError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn truncation_names_expected_and_actual_lengths() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.pctd");
        write_dataset(&path, &dataset).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        match read_dataset(&path) {
            Err(IoError::Format { message, .. }) => {
                assert!(message.contains("expected"), "message: {message}");
                assert!(message.contains("found"), "message: {message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn non_binary_mask_byte_rejected() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.pctd");
        write_dataset(&path, &dataset).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[84] = 7; // first mask byte
        fs::write(&path, &bytes).unwrap();
        match read_dataset(&path) {
            Err(IoError::Format { offset: 84, message }) => {
                assert!(message.contains("not 0 or 1"));
            }
            other => panic!("expected mask format error, got {other:?}"),
        }
    }

    #[test]
    fn non_tiling_grid_rejected_on_write() {
        let mut dataset = sample_dataset();
        dataset.spec = GridSpec::new(10, 8, 1.0, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_dataset(&dir.path().join("ds.pctd"), &dataset),
            Err(IoError::GridMismatch)
        ));
    }
}
