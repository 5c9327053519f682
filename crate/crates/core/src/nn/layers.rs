//! Convolutional and dense layer primitives with exact gradients.
//!
//! Convolutions are zero-padded same-convolutions over odd kernels. The hot
//! loops are written as contiguous row operations (shift-and-accumulate for
//! forward/input gradients, row dot products for weight gradients) so they
//! vectorize while keeping a fixed, reproducible accumulation order.

use super::{NnError, Tensor};

/// 2D convolution layer; weights are `[out, in, kh, kw]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
    ) -> Result<Self, NnError> {
        if in_channels == 0 || out_channels == 0 {
            return Err(NnError::InvalidLayer("channel counts must be >= 1".into()));
        }
        if kernel_h % 2 == 0 || kernel_w % 2 == 0 || kernel_h == 0 || kernel_w == 0 {
            return Err(NnError::InvalidLayer(format!(
                "kernels must be odd for same-padding, got {kernel_h}x{kernel_w}"
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel_h,
            kernel_w,
            weights: vec![0.0; out_channels * in_channels * kernel_h * kernel_w],
            bias: vec![0.0; out_channels],
        })
    }

    #[inline(always)]
    fn w_index(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> usize {
        ((oc * self.in_channels + ic) * self.kernel_h + ky) * self.kernel_w + kx
    }

    pub fn fan_in(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }
}

/// Dense layer; weights are `[out, in]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize) -> Result<Self, NnError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(NnError::InvalidLayer("dimensions must be >= 1".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights: vec![0.0; out_dim * in_dim],
            bias: vec![0.0; out_dim],
        })
    }

    pub fn fan_in(&self) -> usize {
        self.in_dim
    }
}

/// Valid row extents for a kernel offset: iterating output index `y` in
/// `off..len-off` bounds keeps `y + off` inside `[0, len)`.
#[inline(always)]
fn valid_range(len: usize, off: isize) -> (usize, usize) {
    let lo = (-off).max(0) as usize;
    let hi = ((len as isize - off).min(len as isize)).max(0) as usize;
    (lo, hi)
}

/// Fixed-order dot product with eight independent accumulator lanes.
fn dot_rows(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() / 8 * 8;
    let mut acc = [0.0f64; 8];
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Zero-padded same-convolution: `[b, ci, h, w] -> [b, co, h, w]`.
pub fn conv2d_forward(input: &Tensor, layer: &ConvLayer) -> Result<Tensor, NnError> {
    let (bsz, ci, h, w) = input.dims4("conv2d_forward")?;
    if ci != layer.in_channels {
        return Err(NnError::Shape {
            op: "conv2d_forward",
            detail: format!("input has {ci} channels, layer expects {}", layer.in_channels),
        });
    }
    let (ph, pw) = (layer.kernel_h / 2, layer.kernel_w / 2);
    let mut out = Tensor::zeros(&[bsz, layer.out_channels, h, w]);
    for b in 0..bsz {
        for oc in 0..layer.out_channels {
            out.plane_mut(b, oc).fill(layer.bias[oc]);
            for ic in 0..ci {
                let in_plane = input.plane(b, ic);
                for ky in 0..layer.kernel_h {
                    let oy = ky as isize - ph as isize;
                    let (y0, y1) = valid_range(h, oy);
                    for kx in 0..layer.kernel_w {
                        let ox = kx as isize - pw as isize;
                        let (x0, x1) = valid_range(w, ox);
                        if x0 >= x1 {
                            continue;
                        }
                        let wt = layer.weights[layer.w_index(oc, ic, ky, kx)];
                        let out_plane = out.plane_mut(b, oc);
                        for y in y0..y1 {
                            let yin = (y as isize + oy) as usize;
                            let xin = (x0 as isize + ox) as usize;
                            let orow = &mut out_plane[y * w + x0..y * w + x1];
                            let irow = &in_plane[yin * w + xin..yin * w + xin + (x1 - x0)];
                            for (o, i) in orow.iter_mut().zip(irow) {
                                *o += wt * i;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact gradients of [`conv2d_forward`] with respect to input, weights,
/// and bias. `upstream` has the output shape.
pub fn conv2d_backward(
    input: &Tensor,
    layer: &ConvLayer,
    upstream: &Tensor,
) -> Result<(Tensor, Vec<f64>, Vec<f64>), NnError> {
    let (bsz, ci, h, w) = input.dims4("conv2d_backward")?;
    let (ub, uc, uh, uw) = upstream.dims4("conv2d_backward")?;
    if ci != layer.in_channels || ub != bsz || uc != layer.out_channels || uh != h || uw != w {
        return Err(NnError::Shape {
            op: "conv2d_backward",
            detail: format!(
                "input {:?} with upstream {:?} inconsistent for {}->{} conv",
                input.shape(),
                upstream.shape(),
                layer.in_channels,
                layer.out_channels
            ),
        });
    }
    let (ph, pw) = (layer.kernel_h / 2, layer.kernel_w / 2);
    let mut grad_input = Tensor::zeros(&[bsz, ci, h, w]);
    let mut grad_weights = vec![0.0; layer.weights.len()];
    let mut grad_bias = vec![0.0; layer.out_channels];

    for b in 0..bsz {
        for oc in 0..layer.out_channels {
            let up_plane = upstream.plane(b, oc);
            grad_bias[oc] += up_plane.iter().sum::<f64>();
            for ic in 0..ci {
                let in_plane = input.plane(b, ic);
                for ky in 0..layer.kernel_h {
                    let oy = ky as isize - ph as isize;
                    let (y0, y1) = valid_range(h, oy);
                    for kx in 0..layer.kernel_w {
                        let ox = kx as isize - pw as isize;
                        let (x0, x1) = valid_range(w, ox);
                        if x0 >= x1 {
                            continue;
                        }
                        let widx = layer.w_index(oc, ic, ky, kx);
                        let wt = layer.weights[widx];
                        let gin_plane = grad_input.plane_mut(b, ic);
                        let mut gw = 0.0;
                        for y in y0..y1 {
                            let yin = (y as isize + oy) as usize;
                            let xin = (x0 as isize + ox) as usize;
                            let urow = &up_plane[y * w + x0..y * w + x1];
                            let irow = &in_plane[yin * w + xin..yin * w + xin + (x1 - x0)];
                            gw += dot_rows(urow, irow);
                            let grow = &mut gin_plane[yin * w + xin..yin * w + xin + (x1 - x0)];
                            for (g, u) in grow.iter_mut().zip(urow) {
                                *g += wt * u;
                            }
                        }
                        grad_weights[widx] += gw;
                    }
                }
            }
        }
    }
    Ok((grad_input, grad_weights, grad_bias))
}

/// Elementwise `max(0, x)`.
pub fn relu_forward(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&x| x.max(0.0)).collect();
    Tensor::from_vec(input.shape(), data).expect("same shape")
}

/// Zeroes the upstream gradient where the pre-activation is <= 0 (the
/// subgradient at exactly 0 is 0). Because `relu(x) > 0` iff `x > 0`, the
/// activation output can be passed in place of the pre-activation.
pub fn relu_backward(pre_activation: &Tensor, upstream: &Tensor) -> Result<Tensor, NnError> {
    if pre_activation.shape() != upstream.shape() {
        return Err(NnError::Shape {
            op: "relu_backward",
            detail: format!(
                "pre-activation {:?} vs upstream {:?}",
                pre_activation.shape(),
                upstream.shape()
            ),
        });
    }
    let data = pre_activation
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&p, &u)| if p > 0.0 { u } else { 0.0 })
        .collect();
    Ok(Tensor::from_vec(upstream.shape(), data).expect("same shape"))
}

/// `[b, in] -> [b, out]` affine map.
pub fn dense_forward(input: &Tensor, layer: &DenseLayer) -> Result<Tensor, NnError> {
    let (bsz, idim) = input.dims2("dense_forward")?;
    if idim != layer.in_dim {
        return Err(NnError::Shape {
            op: "dense_forward",
            detail: format!("input dim {idim}, layer expects {}", layer.in_dim),
        });
    }
    let mut out = Tensor::zeros(&[bsz, layer.out_dim]);
    for b in 0..bsz {
        let x = &input.data()[b * idim..(b + 1) * idim];
        let o = &mut out.data_mut()[b * layer.out_dim..(b + 1) * layer.out_dim];
        for (oi, (bias, wrow)) in o
            .iter_mut()
            .zip(layer.bias.iter().zip(layer.weights.chunks_exact(idim)))
        {
            *oi = bias + dot_rows(wrow, x);
        }
    }
    Ok(out)
}

/// Exact gradients of [`dense_forward`].
pub fn dense_backward(
    input: &Tensor,
    layer: &DenseLayer,
    upstream: &Tensor,
) -> Result<(Tensor, Vec<f64>, Vec<f64>), NnError> {
    let (bsz, idim) = input.dims2("dense_backward")?;
    let (ub, udim) = upstream.dims2("dense_backward")?;
    if idim != layer.in_dim || ub != bsz || udim != layer.out_dim {
        return Err(NnError::Shape {
            op: "dense_backward",
            detail: format!(
                "input {:?} with upstream {:?} inconsistent for {}->{} dense",
                input.shape(),
                upstream.shape(),
                layer.in_dim,
                layer.out_dim
            ),
        });
    }
    let mut grad_input = Tensor::zeros(&[bsz, idim]);
    let mut grad_weights = vec![0.0; layer.weights.len()];
    let mut grad_bias = vec![0.0; layer.out_dim];
    for b in 0..bsz {
        let x = &input.data()[b * idim..(b + 1) * idim];
        let u = &upstream.data()[b * layer.out_dim..(b + 1) * layer.out_dim];
        let gx = &mut grad_input.data_mut()[b * idim..(b + 1) * idim];
        for (o, &uo) in u.iter().enumerate() {
            grad_bias[o] += uo;
            let wrow = &layer.weights[o * idim..(o + 1) * idim];
            let gwrow = &mut grad_weights[o * idim..(o + 1) * idim];
            for ((g, gw), (&wi, &xi)) in gx
                .iter_mut()
                .zip(gwrow.iter_mut())
                .zip(wrow.iter().zip(x.iter()))
            {
                *g += uo * wi;
                *gw += uo * xi;
            }
        }
    }
    Ok((grad_input, grad_weights, grad_bias))
}
