//! Adam optimizer with bias correction.

use super::network::{LayerOp, Network, NetworkGrads};
use super::NnError;

/// Optimizer state: hyperparameters plus first/second moment buffers aligned
/// with the network's parameter layout (weights then bias, per layer).
#[derive(Debug, Clone)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step_count: u64,
    moments: Vec<MomentBuffer>,
}

#[derive(Debug, Clone)]
struct MomentBuffer {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl MomentBuffer {
    fn zeros(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update on a flat parameter slice.
///
/// `m` and `v` are the running first/second moments and `t` the 1-based step
/// number used for bias correction.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    debug_assert_eq!(params.len(), grads.len());
    let bc1 = 1.0 - beta1.powi(t as i32);
    let bc2 = 1.0 - beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

impl AdamState {
    /// Fresh state for `network` with zeroed moments and the given learning
    /// rate; beta1/beta2/eps take the conventional 0.9/0.999/1e-8.
    pub fn new(network: &Network, lr: f64) -> Self {
        let mut moments = Vec::new();
        for layer in network.layers() {
            let (w_len, b_len) = match &layer.op {
                LayerOp::Conv(c) => (c.weights.len(), c.bias.len()),
                LayerOp::Dense(d) => (d.weights.len(), d.bias.len()),
            };
            moments.push(MomentBuffer::zeros(w_len));
            moments.push(MomentBuffer::zeros(b_len));
        }
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_count: 0,
            moments,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update to every parameter of `network` from `grads`.
    pub fn step(&mut self, network: &mut Network, grads: &NetworkGrads) -> Result<(), NnError> {
        if grads.layers.len() != network.layers().len() {
            return Err(NnError::Shape {
                op: "adam_step",
                detail: format!(
                    "gradients cover {} layers, network has {}",
                    grads.layers.len(),
                    network.layers().len()
                ),
            });
        }
        self.step_count += 1;
        let t = self.step_count;
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        for (idx, (layer, lg)) in network.layers_mut().iter_mut().zip(&grads.layers).enumerate() {
            let (w, b): (&mut Vec<f64>, &mut Vec<f64>) = match &mut layer.op {
                LayerOp::Conv(c) => (&mut c.weights, &mut c.bias),
                LayerOp::Dense(d) => (&mut d.weights, &mut d.bias),
            };
            if w.len() != lg.weights.len() || b.len() != lg.bias.len() {
                return Err(NnError::Shape {
                    op: "adam_step",
                    detail: format!("layer {idx} gradient sizes do not match parameters"),
                });
            }
            let mw = &mut self.moments[2 * idx];
            adam_update(w, &lg.weights, &mut mw.m, &mut mw.v, t, lr, b1, b2, eps);
            let mb = &mut self.moments[2 * idx + 1];
            adam_update(b, &lg.bias, &mut mb.m, &mut mb.v, t, lr, b1, b2, eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_roughly_lr() {
        // Closed-form first step: m_hat = g, v_hat = g^2, so the update is
        // lr * g / (|g| + eps) ~ lr * sign(g).
        let mut params = vec![1.0];
        let grads = vec![0.5];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        adam_update(&mut params, &grads, &mut m, &mut v, 1, 0.001, 0.9, 0.999, 1e-8);
        assert!((params[0] - 0.99900).abs() < 1e-6, "{}", params[0]);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut params = vec![1.5, -2.0];
        let grads = vec![0.0, 0.0];
        let mut m = vec![0.0; 2];
        let mut v = vec![0.0; 2];
        adam_update(&mut params, &grads, &mut m, &mut v, 1, 0.001, 0.9, 0.999, 1e-8);
        assert_eq!(params, vec![1.5, -2.0]);
        assert_eq!(m, vec![0.0; 2]);
        assert_eq!(v, vec![0.0; 2]);
    }

    #[test]
    fn constant_gradient_steps_near_lr() {
        let mut params = vec![1.0];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        let mut prev = params[0];
        for t in 1..=2 {
            adam_update(&mut params, &[0.25], &mut m, &mut v, t, 0.001, 0.9, 0.999, 1e-8);
            let delta = (prev - params[0]).abs();
            assert!((delta - 0.001).abs() < 1e-4, "step {t} moved {delta}");
            prev = params[0];
        }
    }

    #[test]
    fn step_count_increments_once_per_update() {
        use crate::nn::{Activation, DenseLayer, Layer, LayerOp, Network, NetworkGrads};
        let net0 = Network::new(vec![Layer {
            op: LayerOp::Dense(DenseLayer::new(2, 2).unwrap()),
            activation: Activation::Linear,
        }])
        .unwrap();
        let mut net = net0.clone();
        let mut state = AdamState::new(&net, 0.001);
        let grads = NetworkGrads::zeros_like(&net);
        assert_eq!(state.step_count(), 0);
        state.step(&mut net, &grads).unwrap();
        state.step(&mut net, &grads).unwrap();
        assert_eq!(state.step_count(), 2);
        // Zero gradients leave parameters untouched.
        assert_eq!(net, net0);
    }

    #[test]
    fn mismatched_gradients_are_rejected() {
        use crate::nn::{Activation, DenseLayer, Layer, LayerOp, Network, NetworkGrads};
        let mut net = Network::new(vec![Layer {
            op: LayerOp::Dense(DenseLayer::new(2, 2).unwrap()),
            activation: Activation::Linear,
        }])
        .unwrap();
        let mut state = AdamState::new(&net, 0.001);
        let grads = NetworkGrads { layers: vec![] };
        assert!(state.step(&mut net, &grads).is_err());
    }
}
