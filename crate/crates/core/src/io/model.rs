//! Binary model format (magic `PCTM`, version 1).
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset 0    magic "PCTM"
//! offset 4    version u32 = 1
//! offset 8    mode byte: 0 = mask-image network, 1 = coordinate network
//! offset 9    mu f64, sigma f64 (standardization statistics)
//! offset 25   layer_count u32
//! then per layer:
//!   type byte 0 (conv):  in, out, kh, kw (u32 each),
//!                        weights [out,in,kh,kw] f64, bias [out] f64
//!   type byte 1 (dense): in, out (u32 each),
//!                        weights [out,in] f64, bias [out] f64
//! ```
//!
//! Trailing bytes after the last layer are an error. The mode byte governs
//! input semantics only, not the layer mix. Activations are not stored: the
//! standard rule (ReLU everywhere except a linear final layer) is applied on
//! read, which matches every network this crate constructs.

use super::{Cursor, IoError};
use crate::loss::NormStats;
use crate::nn::{Activation, ConvLayer, DenseLayer, Layer, LayerOp, Network};
use crate::pipeline::ModelMode;
use std::fs;
use std::io::Write;
use std::path::Path;

const MAGIC: &[u8; 4] = b"PCTM";
const VERSION: u32 = 1;
const MAX_DIM: usize = 1_000_000;
const MAX_PARAMS: usize = 100_000_000;

pub fn write_model(
    path: &Path,
    network: &Network,
    stats: &NormStats,
    mode: ModelMode,
) -> Result<(), IoError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match mode {
        ModelMode::Fcn => 0u8,
        ModelMode::Coordinate => 1u8,
    });
    out.extend_from_slice(&stats.mu().to_le_bytes());
    out.extend_from_slice(&stats.sigma().to_le_bytes());
    out.extend_from_slice(&(network.layers().len() as u32).to_le_bytes());
    for layer in network.layers() {
        match &layer.op {
            LayerOp::Conv(c) => {
                out.push(0u8);
                for dim in [c.in_channels, c.out_channels, c.kernel_h, c.kernel_w] {
                    out.extend_from_slice(&(dim as u32).to_le_bytes());
                }
                for &w in &c.weights {
                    out.extend_from_slice(&w.to_le_bytes());
                }
                for &b in &c.bias {
                    out.extend_from_slice(&b.to_le_bytes());
                }
            }
            LayerOp::Dense(d) => {
                out.push(1u8);
                for dim in [d.in_dim, d.out_dim] {
                    out.extend_from_slice(&(dim as u32).to_le_bytes());
                }
                for &w in &d.weights {
                    out.extend_from_slice(&w.to_le_bytes());
                }
                for &b in &d.bias {
                    out.extend_from_slice(&b.to_le_bytes());
                }
            }
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

fn read_params(cur: &mut Cursor, count: usize,what: &str) -> Result<Vec<f64>, IoError> {
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let offset = cur.offset();
        let v = cur.f64(what)?;
        if !v.is_finite() {
            return Err(IoError::Format {
                offset,
                message: format!("non-finite {what}"),
            });
        }
        values.push(v);
    }
    Ok(values)
}

pub fn read_model(path: &Path) -> Result<(Network, NormStats, ModelMode), IoError> {
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
    let mode = match cur.byte("mode")? {
        0 => ModelMode::Fcn,
        1 => ModelMode::Coordinate,
        other => {
            return Err(IoError::Format {
                offset: 8,
                message: format!("unknown mode byte {other}"),
            })
        }
    };
    let mu = cur.f64("mu")?;
    let sigma = cur.f64("sigma")?;
    let stats = NormStats::new(mu, sigma).map_err(|e| IoError::Format {
        offset: 9,
        message: e.to_string(),
    })?;
    let layer_count = cur.u32("layer_count")? as usize;
    if layer_count == 0 || layer_count > 1024 {
        return Err(IoError::Format {
            offset: 25,
            message: format!("implausible layer count {layer_count}"),
        });
    }

    let mut layers = Vec::with_capacity(layer_count);
    for layer_idx in 0..layer_count {
        let type_offset = cur.offset();
        let type_byte = cur.byte("layer type")?;
        let op = match type_byte {
            0 => {
                let dims_offset = cur.offset();
                let mut dims = [0usize; 4];
                for d in dims.iter_mut() {
                    *d = cur.u32("conv dims")? as usize;
                }
                let [ci, co, kh, kw] = dims;
                let weight_count = check_size(ci * co, kh * kw, dims_offset)?;
                let mut conv = ConvLayer::new(ci, co, kh, kw).map_err(|e| IoError::Format {
                    offset: dims_offset,
                    message: format!("layer {layer_idx}: {e}"),
                })?;
                conv.weights = read_params(&mut cur, weight_count, "conv weight")?;
                conv.bias = read_params(&mut cur, co, "conv bias")?;
                LayerOp::Conv(conv)
            }
            1 => {
                let dims_offset = cur.offset();
                let di = cur.u32("dense dims")? as usize;
                let dout = cur.u32("dense dims")? as usize;
                let weight_count = check_size(di, dout, dims_offset)?;
                let mut dense = DenseLayer::new(di, dout).map_err(|e| IoError::Format {
                    offset: dims_offset,
                    message: format!("layer {layer_idx}: {e}"),
                })?;
                dense.weights = read_params(&mut cur, weight_count, "dense weight")?;
                dense.bias = read_params(&mut cur, dout, "dense bias")?;
                LayerOp::Dense(dense)
            }
            other => {
                return Err(IoError::Format {
                    offset: type_offset,
                    message: format!("unknown layer type byte {other}"),
                })
            }
        };
        let activation = if layer_idx + 1 == layer_count {
            Activation::Linear
        } else {
            Activation::Relu
        };
        layers.push(Layer { op, activation });
    }
    if cur.remaining() != 0 {
        return Err(IoError::Format {
            offset: cur.offset(),
            message: format!("{} trailing bytes after last layer", cur.remaining()),
        });
    }
    let network = Network::new(layers).map_err(|e| IoError::Format {
        offset: 25,
        message: e.to_string(),
    })?;
    Ok((network, stats, mode))
}

fn check_size(a: usize, b: usize, offset: u64) -> Result<usize, IoError> {
    if a == 0 || b == 0 || a > MAX_DIM || b > MAX_DIM {
        return Err(IoError::Format {
            offset,
            message: "implausible layer dimensions".into(),
        });
    }
    a.checked_mul(b)
        .filter(|&n| n <= MAX_PARAMS)
        .ok_or_else(|| IoError::Format {
            offset,
            message: "layer parameter count overflows sanity cap".into(),
        })
}
