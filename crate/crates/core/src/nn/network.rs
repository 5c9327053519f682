//! Layer composition, cached forward passes, backpropagation, and He
//! initialization.

use super::layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, relu_backward, relu_forward,
    ConvLayer, DenseLayer,
};
use super::{NnError, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerOp {
    Conv(ConvLayer),
    Dense(DenseLayer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub op: LayerOp,
    pub activation: Activation,
}

/// Ordered stack of layers; the final activation must be linear so the head
/// predicts unbounded normalized values.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Post-activation values of every stage of one forward pass:
/// `stages[0]` is the input, `stages[n + 1]` the output of layer `n`.
/// Backward consumes the cache of the forward pass it belongs to; holding the
/// cache by value makes "backward without forward" unrepresentable.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    stages: Vec<Tensor>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        self.stages.last().expect("cache has at least the input stage")
    }
}

/// Per-layer parameter gradients, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub layers: Vec<LayerGrads>,
}

impl NetworkGrads {
    pub fn zeros_like(network: &Network) -> Self {
        let layers = network
            .layers
            .iter()
            .map(|layer| match &layer.op {
                LayerOp::Conv(c) => LayerGrads {
                    weights: vec![0.0; c.weights.len()],
                    bias: vec![0.0; c.bias.len()],
                },
                LayerOp::Dense(d) => LayerGrads {
                    weights: vec![0.0; d.weights.len()],
                    bias: vec![0.0; d.bias.len()],
                },
            })
            .collect();
        Self { layers }
    }

    /// `self += other`, elementwise in fixed order.
    pub fn add_assign(&mut self, other: &NetworkGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in self.layers.iter_mut() {
            for x in layer.weights.iter_mut() {
                *x *= factor;
            }
            for x in layer.bias.iter_mut() {
                *x *= factor;
            }
        }
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::InvalidNetwork("network needs at least one layer".into()));
        }
        if layers.last().unwrap().activation != Activation::Linear {
            return Err(NnError::InvalidNetwork(
                "final activation must be linear".into(),
            ));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|layer| match &layer.op {
                LayerOp::Conv(c) => c.weights.len() + c.bias.len(),
                LayerOp::Dense(d) => d.weights.len() + d.bias.len(),
            })
            .sum()
    }

    /// Runs the stack, returning the output and the cache backward needs.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache), NnError> {
        let mut stages = Vec::with_capacity(self.layers.len() + 1);
        stages.push(input.clone());
        for layer in &self.layers {
            let pre = match &layer.op {
                LayerOp::Conv(c) => conv2d_forward(stages.last().unwrap(), c)?,
                LayerOp::Dense(d) => dense_forward(stages.last().unwrap(), d)?,
            };
            let post = match layer.activation {
                Activation::Relu => relu_forward(&pre),
                Activation::Linear => pre,
            };
            stages.push(post);
        }
        let output = stages.last().unwrap().clone();
        Ok((output, ForwardCache { stages }))
    }

    /// Backpropagates `output_grad` through the cached pass, returning
    /// parameter gradients and the gradient with respect to the input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &Tensor,
    ) -> Result<(NetworkGrads, Tensor), NnError> {
        if cache.stages.len() != self.layers.len() + 1 {
            return Err(NnError::InvalidNetwork(
                "forward cache does not match network depth".into(),
            ));
        }
        if output_grad.shape() != cache.output().shape() {
            return Err(NnError::Shape {
                op: "network_backward",
                detail: format!(
                    "output grad {:?} vs forward output {:?}",
                    output_grad.shape(),
                    cache.output().shape()
                ),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_grad.clone();
        for (n, layer) in self.layers.iter().enumerate().rev() {
            // ReLU keeps output > 0 exactly where pre-activation > 0, so the
            // cached post-activation stands in for the pre-activation.
            let grad_pre = match layer.activation {
                Activation::Relu => relu_backward(&cache.stages[n + 1], &upstream)?,
                Activation::Linear => upstream,
            };
            let (grad_in, weights, bias) = match &layer.op {
                LayerOp::Conv(c) => conv2d_backward(&cache.stages[n], c, &grad_pre)?,
                LayerOp::Dense(d) => dense_backward(&cache.stages[n], d, &grad_pre)?,
            };
            grads.push(LayerGrads { weights, bias });
            upstream = grad_in;
        }
        grads.reverse();
        Ok((NetworkGrads { layers: grads }, upstream))
    }
}

/// He initialization: weights ~ Normal(0, sqrt(2 / fan_in)) from a seeded
/// stream, biases zero. Deterministic per seed.
pub fn he_init(network: &mut Network, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    for layer in network.layers_mut() {
        let (weights, bias, fan_in) = match &mut layer.op {
            LayerOp::Conv(c) => {
                let fan_in = c.fan_in();
                (&mut c.weights, &mut c.bias, fan_in)
            }
            LayerOp::Dense(d) => {
                let fan_in = d.fan_in();
                (&mut d.weights, &mut d.bias, fan_in)
            }
        };
        let std = (2.0 / fan_in as f64).sqrt();
        for w in weights.iter_mut() {
            let z: f64 = normal.sample(&mut rng);
            *w = std * z;
        }
        bias.fill(0.0);
    }
}
