//! Human-readable exports: field CSVs, PPM heatmaps, convergence curves,
//! and the comparison summary.

use super::IoError;
use crate::grid::ScalarField;
use crate::pipeline::{ComparisonReport, EpochRecord};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Color range of a heatmap export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeMode {
    /// Span the field's own min/max; a constant field renders all white.
    Auto,
    /// Fixed range; values outside are clamped. Requires `max > min`.
    Fixed { min: f64, max: f64 },
}

/// Writes `ny` rows of `nx` comma-separated values, top row (j = ny-1) first
/// so spreadsheets show the plate in image orientation. Values use 17
/// significant digits and parse back to the identical 64-bit float.
pub fn export_field_csv(path: &Path, field: &ScalarField) -> Result<(), IoError> {
    let spec = field.spec();
    let mut out = BufWriter::new(fs::File::create(path)?);
    for j in (0..spec.ny).rev() {
        let row = &field.values()[j * spec.nx..(j + 1) * spec.nx];
        let mut line = String::with_capacity(spec.nx * 26);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Rounds half-up to an integer channel value.
fn channel(value: f64) -> u8 {
    (value + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Two-segment linear colormap blue -> white -> red over `[0, 1]`.
fn colormap(u: f64) -> [u8; 3] {
    if u <= 0.5 {
        let s = 2.0 * u;
        [channel(255.0 * s), channel(255.0 * s), 255]
    } else {
        let s = 2.0 * (u - 0.5);
        [255, channel(255.0 * (1.0 - s)), channel(255.0 * (1.0 - s))]
    }
}

/// Binary P6 heatmap, one pixel per cell, top row first. The midpoint of the
/// range maps to white, the minimum to blue, the maximum to red.
pub fn export_heatmap_ppm(
    path: &Path,
    field: &ScalarField,
    range: RangeMode,
) -> Result<(), IoError> {
    let (min, max) = match range {
        RangeMode::Auto => (field.min(), field.max()),
        RangeMode::Fixed { min, max } => {
            if !(max > min) {
                return Err(IoError::Range { min, max });
            }
            (min, max)
        }
    };
    let spec = field.spec();
    let mut out = Vec::with_capacity(64 + 3 * spec.cell_count());
    out.extend_from_slice(format!("P6\n{} {}\n255\n", spec.nx, spec.ny).as_bytes());
    for j in (0..spec.ny).rev() {
        for i in 0..spec.nx {
            let pixel = if max > min {
                let u = ((field.get(i, j) - min) / (max - min)).clamp(0.0, 1.0);
                colormap(u)
            } else {
                [255, 255, 255]
            };
            out.extend_from_slice(&pixel);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

const CURVES_HEADER: &str = "epoch,train_mse,val_mse,l_pde,l_bc,l_total,val_rmse_celsius";

/// Per-epoch convergence curves, one row per record.
pub fn write_curves_csv(path: &Path, records: &[EpochRecord]) -> Result<(), IoError> {
    if records.is_empty() {
        return Err(IoError::EmptyCurves);
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{CURVES_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.epoch, r.train_mse, r.val_mse, r.l_pde, r.l_bc, r.l_total, r.val_rmse_celsius
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Epoch-10 comparison summary of one paired run.
pub fn write_comparison_summary(path: &Path, report: &ComparisonReport) -> Result<(), IoError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(
        out,
        "epoch1_val_mse_piml,epoch10_val_mse_data,epoch10_val_mse_piml,epoch10_improvement_pct"
    )?;
    writeln!(
        out,
        "{},{},{},{}",
        report.epoch1_val_mse_piml,
        report.epoch10_val_mse_data,
        report.epoch10_val_mse_piml,
        report.epoch10_improvement_pct
    )?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn csv_round_trips_at_full_precision() {
        let spec = GridSpec::new(3, 2, 1.0, 1.0).unwrap();
        let values = vec![25.0, 1.0 / 3.0, 7.125e-9, -4.0, 1e10, 0.1 + 0.2];
        let field = ScalarField::from_vec(spec, values.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        export_field_csv(&path, &field).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 2);
        // Top row first: row j=1 of the grid leads the file.
        let parsed: Vec<f64> = rows
            .iter()
            .flat_map(|row| row.split(',').map(|v| v.parse::<f64>().unwrap()))
            .collect();
        assert_eq!(&parsed[..3], &values[3..]);
        assert_eq!(&parsed[3..], &values[..3]);
        for (a, b) in parsed.iter().zip(values[3..].iter().chain(&values[..3])) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn heatmap_endpoints_are_pure_blue_and_red() {
        let spec = GridSpec::new(2, 1, 1.0, 1.0).unwrap();
        let field = ScalarField::from_vec(spec, vec![10.0, 30.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.ppm");
        export_heatmap_ppm(&path, &field, RangeMode::Auto).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..11], b"P6\n2 1\n255\n");
        assert_eq!(&bytes[11..], &[0, 0, 255, 255, 0, 0]);
    }

    #[test]
    fn heatmap_midpoint_is_white() {
        let spec = GridSpec::new(3, 1, 1.0, 1.0).unwrap();
        let field = ScalarField::from_vec(spec, vec![0.0, 0.5, 1.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.ppm");
        export_heatmap_ppm(&path, &field, RangeMode::Auto).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 9..], &[0, 0, 255, 255, 255, 255, 255, 0, 0]);
    }

    #[test]
    fn constant_field_renders_all_white_in_auto_mode() {
        let spec = GridSpec::new(2, 2, 1.0, 1.0).unwrap();
        let field = ScalarField::constant(spec, 25.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.ppm");
        export_heatmap_ppm(&path, &field, RangeMode::Auto).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header_len = b"P6\n2 2\n255\n".len();
        assert!(bytes[header_len..].iter().all(|&b| b == 255));
    }

    #[test]
    fn degenerate_fixed_range_rejected() {
        let spec = GridSpec::new(2, 1, 1.0, 1.0).unwrap();
        let field = ScalarField::from_vec(spec, vec![0.0, 1.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            export_heatmap_ppm(
                &dir.path().join("map.ppm"),
                &field,
                RangeMode::Fixed { min: 5.0, max: 5.0 }
            ),
            Err(IoError::Range { .. })
        ));
    }

    #[test]
    fn curves_have_header_plus_one_row_per_record() {
        let records: Vec<EpochRecord> = (1..=100)
            .map(|epoch| EpochRecord {
                epoch,
                train_mse: 1.0 / epoch as f64,
                val_mse: 2.0 / epoch as f64,
                l_pde: 0.5,
                l_bc: 0.25,
                l_total: 1.75,
                val_rmse_celsius: 0.1,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curves.csv");
        write_curves_csv(&path, &records).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 101);
        assert_eq!(lines[0], CURVES_HEADER);
        assert!(lines[1].starts_with("1,"));

        assert!(matches!(
            write_curves_csv(&dir.path().join("e.csv"), &[]),
            Err(IoError::EmptyCurves)
        ));
    }
}
