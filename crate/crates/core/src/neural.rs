//! Small feed-forward networks with hand-rolled reverse-mode gradients.
//!
//! The critics need two gradient flavors: parameter gradients for their own
//! training, and gradients with respect to the *input* so the action part of
//! `(state, action)` can be pushed uphill. [`DiffNet::backward`] returns
//! both. Layers are affine with rectifier hidden activations; the output is
//! linear (critics) or tanh (the neural-actor baseline).

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cast, Scalar};

/// Activation applied to the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    Tanh,
}

/// Fully-connected network: `sizes[0] -> ... -> sizes[last]`, rectifier
/// between layers, [`OutputActivation`] at the end.
#[derive(Debug, Clone)]
pub struct DiffNet<T> {
    /// Per layer, shape `(fan_out, fan_in)`.
    weights: Vec<Array2<T>>,
    biases: Vec<Array1<T>>,
    output: OutputActivation,
}

/// Intermediate values of one forward pass, kept for [`DiffNet::backward`].
pub struct ForwardCache<T> {
    /// Input to each layer (index 0 is the network input).
    inputs: Vec<Array2<T>>,
    /// Pre-activation of each layer.
    preacts: Vec<Array2<T>>,
    /// Network output (post output activation).
    output: Array2<T>,
}

impl<T: Clone> ForwardCache<T> {
    pub fn output(&self) -> &Array2<T> {
        &self.output
    }
}

/// Gradients from one backward pass.
pub struct Gradients<T> {
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array1<T>>,
    /// Gradient with respect to the network input, shape like the batch.
    pub input: Array2<T>,
}

impl<T: Scalar> DiffNet<T> {
    /// Random network with `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` weights and
    /// biases, drawn layer by layer (weights row-major, then biases).
    pub fn new(sizes: &[usize], output: OutputActivation, rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0), "zero-width layer");
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = cast::<T>(1.0 / (fan_in as f64).sqrt());
            weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || {
                T::sample_uniform(rng, -bound, bound)
            }));
            biases.push(Array1::from_shape_simple_fn(fan_out, || {
                T::sample_uniform(rng, -bound, bound)
            }));
        }
        DiffNet {
            weights,
            biases,
            output,
        }
    }

    /// Network from explicit parameters; shapes must chain.
    pub fn from_parts(
        weights: Vec<Array2<T>>,
        biases: Vec<Array1<T>>,
        output: OutputActivation,
    ) -> Self {
        assert_eq!(weights.len(), biases.len());
        assert!(!weights.is_empty());
        for (w, b) in weights.iter().zip(&biases) {
            assert_eq!(w.nrows(), b.len(), "bias width mismatch");
        }
        for pair in weights.windows(2) {
            assert_eq!(pair[1].ncols(), pair[0].nrows(), "layer widths must chain");
        }
        DiffNet {
            weights,
            biases,
            output,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.weights[0].ncols()];
        sizes.extend(self.weights.iter().map(|w| w.nrows()));
        sizes
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().unwrap().nrows()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    /// `input` is `(batch, input_dim)`; returns `(batch, output_dim)`.
    pub fn forward(&self, input: ArrayView2<'_, T>) -> Array2<T> {
        self.forward_cached(input).output
    }

    pub fn forward_cached(&self, input: ArrayView2<'_, T>) -> ForwardCache<T> {
        assert_eq!(input.ncols(), self.input_dim(), "input width mismatch");
        let depth = self.weights.len();
        let mut inputs = Vec::with_capacity(depth);
        let mut preacts = Vec::with_capacity(depth);
        let mut current = input.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = current.dot(&w.t()) + b;
            let a = if l + 1 == depth {
                match self.output {
                    OutputActivation::Linear => z.clone(),
                    OutputActivation::Tanh => z.mapv(|v| v.tanh()),
                }
            } else {
                z.mapv(|v| if v > T::zero() { v } else { T::zero() })
            };
            inputs.push(current);
            preacts.push(z);
            current = a;
        }
        ForwardCache {
            inputs,
            preacts,
            output: current,
        }
    }

    /// Exact reverse-mode gradients of any scalar loss `L`, given
    /// `output_grad` = dL/d(output). Returns dL/d(parameters) and
    /// dL/d(input).
    pub fn backward(&self, cache: &ForwardCache<T>, output_grad: ArrayView2<'_, T>) -> Gradients<T> {
        let depth = self.weights.len();
        assert_eq!(output_grad.dim(), cache.output.dim());

        // dL/dz of the last layer.
        let mut dz = match self.output {
            OutputActivation::Linear => output_grad.to_owned(),
            OutputActivation::Tanh => {
                let mut g = output_grad.to_owned();
                Zip::from(&mut g)
                    .and(&cache.output)
                    .for_each(|g, &y| *g = *g * (T::one() - y * y));
                g
            }
        };

        let mut d_weights = vec![Array2::zeros((0, 0)); depth];
        let mut d_biases = vec![Array1::zeros(0); depth];
        for l in (0..depth).rev() {
            d_weights[l] = dz.t().dot(&cache.inputs[l]);
            d_biases[l] = dz.sum_axis(Axis(0));
            let d_input = dz.dot(&self.weights[l]);
            if l == 0 {
                return Gradients {
                    weights: d_weights,
                    biases: d_biases,
                    input: d_input,
                };
            }
            // Rectifier mask of the previous layer.
            dz = d_input;
            Zip::from(&mut dz)
                .and(&cache.preacts[l - 1])
                .for_each(|g, &z| {
                    if z <= T::zero() {
                        *g = T::zero();
                    }
                });
        }
        unreachable!("loop returns at layer 0");
    }

    /// Polyak blend toward `online`: `self <- tau * online + (1 - tau) * self`.
    pub fn blend_from(&mut self, online: &DiffNet<T>, tau: T) {
        let keep = T::one() - tau;
        for (t, o) in self.weights.iter_mut().zip(&online.weights) {
            Zip::from(t).and(o).for_each(|t, &o| *t = tau * o + keep * *t);
        }
        for (t, o) in self.biases.iter_mut().zip(&online.biases) {
            Zip::from(t).and(o).for_each(|t, &o| *t = tau * o + keep * *t);
        }
    }

    /// Widened, JSON-friendly snapshot of shapes and parameters.
    pub fn checkpoint(&self) -> NetCheckpoint {
        NetCheckpoint {
            layer_sizes: self.layer_sizes(),
            output: self.output,
            weights: self
                .weights
                .iter()
                .map(|w| w.iter().map(|v| v.to_f64_lossless()).collect())
                .collect(),
            biases: self
                .biases
                .iter()
                .map(|b| b.iter().map(|v| v.to_f64_lossless()).collect())
                .collect(),
        }
    }

    pub fn from_checkpoint(c: &NetCheckpoint) -> Result<Self, CheckpointError> {
        if c.layer_sizes.len() < 2 {
            return Err(CheckpointError::Shape("fewer than two layer sizes".into()));
        }
        let depth = c.layer_sizes.len() - 1;
        if c.weights.len() != depth || c.biases.len() != depth {
            return Err(CheckpointError::Shape(format!(
                "expected {depth} layers, got {} weight and {} bias blocks",
                c.weights.len(),
                c.biases.len()
            )));
        }
        let mut weights = Vec::with_capacity(depth);
        let mut biases = Vec::with_capacity(depth);
        for l in 0..depth {
            let (fan_in, fan_out) = (c.layer_sizes[l], c.layer_sizes[l + 1]);
            if c.weights[l].len() != fan_in * fan_out || c.biases[l].len() != fan_out {
                return Err(CheckpointError::Shape(format!(
                    "layer {l} parameter counts do not match sizes {fan_in}x{fan_out}"
                )));
            }
            let w: Vec<T> = c.weights[l].iter().map(|&v| T::from_f64_lossy(v)).collect();
            weights.push(
                Array2::from_shape_vec((fan_out, fan_in), w)
                    .expect("length checked against shape"),
            );
            biases.push(Array1::from_vec(
                c.biases[l].iter().map(|&v| T::from_f64_lossy(v)).collect(),
            ));
        }
        Ok(DiffNet {
            weights,
            biases,
            output: c.output,
        })
    }
}

/// Serialized network: shapes plus flat row-major parameter arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub layer_sizes: Vec<usize>,
    pub output: OutputActivation,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint shape error: {0}")]
    Shape(String),
}

/// Adam with bias correction, one moment pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    lr: T,
    beta1: f64,
    beta2: f64,
    eps: T,
    step: u64,
    m_w: Vec<Array2<T>>,
    v_w: Vec<Array2<T>>,
    m_b: Vec<Array1<T>>,
    v_b: Vec<Array1<T>>,
}

pub const ADAM_DEFAULT_LR: f64 = 3e-4;

impl<T: Scalar> Adam<T> {
    pub fn new(net: &DiffNet<T>) -> Self {
        Self::with_lr(net, ADAM_DEFAULT_LR)
    }

    pub fn with_lr(net: &DiffNet<T>, lr: f64) -> Self {
        Adam {
            lr: cast(lr),
            beta1: 0.9,
            beta2: 0.999,
            eps: cast(1e-8),
            step: 0,
            m_w: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            v_w: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            m_b: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            v_b: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of `net` along `-grads`.
    pub fn step(&mut self, net: &mut DiffNet<T>, grads: &Gradients<T>) {
        assert_eq!(grads.weights.len(), net.weights.len());
        self.step += 1;
        let t = self.step as i32;
        // Corrections in f64: beta powers underflow gracefully there even
        // when T is f32.
        let bc1 = cast::<T>(1.0 - self.beta1.powi(t));
        let bc2 = cast::<T>(1.0 - self.beta2.powi(t));
        let (b1, b2) = (cast::<T>(self.beta1), cast::<T>(self.beta2));
        let (lr, eps) = (self.lr, self.eps);

        let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        };
        for l in 0..net.weights.len() {
            Zip::from(&mut net.weights[l])
                .and(&grads.weights[l])
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .for_each(|p, &g, m, v| update(p, g, m, v));
            Zip::from(&mut net.biases[l])
                .and(&grads.biases[l])
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}
