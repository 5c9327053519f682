//! Plain-text mask files: ny lines of nx `0`/`1` characters, top row
//! (j = ny-1) first, matching the CSV/heatmap orientation.

use super::IoError;
use std::fs;
use std::path::Path;

/// Parses a text mask, returning `(nx, ny, data)` with `data` in row-major
/// grid order (bottom row first).
pub fn read_mask_text(path: &Path) -> Result<(usize, usize, Vec<u8>), IoError> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut offset = 0u64;
    for line in text.lines() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.is_empty() {
            offset += line.len() as u64 + 1;
            continue;
        }
        let mut row = Vec::with_capacity(trimmed.len());
        for (col, ch) in trimmed.chars().enumerate() {
            match ch {
                '0' => row.push(0u8),
                '1' => row.push(1u8),
                other => {
                    return Err(IoError::Format {
                        offset: offset + col as u64,
                        message: format!("mask character {other:?} is not 0 or 1"),
                    })
                }
            }
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(IoError::Format {
                    offset,
                    message: format!(
                        "ragged mask: row has {} columns, expected {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
        offset += line.len() as u64 + 1;
    }
    if rows.is_empty() {
        return Err(IoError::Format {
            offset: 0,
            message: "mask file has no rows".into(),
        });
    }
    let nx = rows[0].len();
    let ny = rows.len();
    let mut data = vec![0u8; nx * ny];
    for (file_row, row) in rows.iter().enumerate() {
        let j = ny - 1 - file_row;
        data[j * nx..(j + 1) * nx].copy_from_slice(row);
    }
    Ok((nx, ny, data))
}
