//! A minimal feed-forward network: rectifier hidden layers, softmax output,
//! exact backpropagation. Parameters are plain `f64` tensors owned by the
//! training loop.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use taumax_core::simplex::{validate_simplex, SimplexPoint};

use crate::error::TrainerError;

/// Layer widths: input dimension, hidden widths (rectifier activations),
/// and the softmax output width m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
}

impl MlpArchitecture {
    pub fn new(
        input_dim: usize,
        hidden: Vec<usize>,
        output_dim: usize,
    ) -> Result<Self, TrainerError> {
        if input_dim == 0 {
            return Err(TrainerError::InvalidConfig(
                "input dimension must be positive".into(),
            ));
        }
        if output_dim < 2 {
            return Err(TrainerError::InvalidConfig(format!(
                "output width must be at least 2 classes, got {output_dim}"
            )));
        }
        if hidden.iter().any(|&w| w == 0) {
            return Err(TrainerError::InvalidConfig(
                "hidden layer widths must be positive".into(),
            ));
        }
        Ok(Self {
            input_dim,
            hidden,
            output_dim,
        })
    }

    /// Fan-in/fan-out pairs for each weight matrix, input to output.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Network parameters: one (fan_in × fan_out) weight matrix and one bias
/// vector per layer. Forward maps are `a_{l+1} = act(a_l W_l + b_l)`.
#[derive(Debug, Clone)]
pub struct MlpParams {
    pub arch: MlpArchitecture,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Per-layer parameter gradients, same shapes as [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Intermediate values of one forward pass, consumed by [`MlpParams::backward`].
pub struct ForwardCache {
    /// Layer inputs: activations a_0 (the batch itself) through a_{L-1}.
    inputs: Vec<Array2<f64>>,
    /// Softmax outputs of the final layer.
    probs: Array2<f64>,
}

impl ForwardCache {
    /// The batch's softmax outputs, n × m.
    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }
}

impl MlpParams {
    /// Scaled-Gaussian initialization suited to rectifier layers
    /// (std = sqrt(2 / fan_in)), zero biases, seeded.
    pub fn init(arch: MlpArchitecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (fan_in, fan_out) in arch.layer_dims() {
            let std = (2.0 / fan_in as f64).sqrt();
            let w = Array2::from_shape_simple_fn((fan_in, fan_out), || {
                let z: f64 = rng.sample(StandardNormal);
                std * z
            });
            weights.push(w);
            biases.push(Array1::zeros(fan_out));
        }
        Self {
            arch,
            weights,
            biases,
        }
    }

    /// All-zero parameters (uniform logits: the forward output is the
    /// barycenter for every input). Useful as a reference point.
    pub fn zeros(arch: MlpArchitecture) -> Self {
        let (weights, biases) = arch
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| (Array2::zeros((fan_in, fan_out)), Array1::zeros(fan_out)))
            .unzip();
        Self {
            arch,
            weights,
            biases,
        }
    }

    /// Zero gradients with this parameter set's shapes.
    pub fn zero_gradients(&self) -> MlpGradients {
        MlpGradients {
            weights: self.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.dim())).collect(),
        }
    }

    fn check_width(&self, d: usize) -> Result<(), TrainerError> {
        if d != self.arch.input_dim {
            return Err(TrainerError::InvalidConfig(format!(
                "input width {d} does not match the network's input dimension {}",
                self.arch.input_dim
            )));
        }
        Ok(())
    }

    /// Forward pass over a batch, keeping the per-layer inputs for
    /// backpropagation.
    pub fn forward_cached(&self, x: &Array2<f64>) -> Result<ForwardCache, TrainerError> {
        self.check_width(x.ncols())?;
        let layers = self.weights.len();
        let mut inputs = Vec::with_capacity(layers);
        let mut a = x.clone();
        for l in 0..layers {
            let mut z = a.dot(&self.weights[l]) + &self.biases[l];
            inputs.push(a);
            if l + 1 < layers {
                z.mapv_inplace(|v| v.max(0.0));
                a = z;
            } else {
                softmax_rows(&mut z);
                return Ok(ForwardCache { inputs, probs: z });
            }
        }
        unreachable!("architectures always have at least the output layer")
    }

    /// Batch forward pass: one simplex-valued row of class probabilities
    /// per input row.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>, TrainerError> {
        Ok(self.forward_cached(x)?.probs)
    }

    /// Single-sample forward pass, validated onto the probability simplex.
    pub fn forward(&self, x: &[f64]) -> Result<SimplexPoint<f64>, TrainerError> {
        self.check_width(x.len())?;
        let batch = Array2::from_shape_vec((1, x.len()), x.to_vec())
            .expect("shape matches the input slice");
        let probs = self.forward_batch(&batch)?;
        Ok(validate_simplex(probs.row(0).to_vec(), 1e-6)?)
    }

    /// Exact gradients of a scalar loss with respect to every parameter,
    /// given the forward cache and the loss gradient with respect to the
    /// softmax outputs (n × m, same layout as `cache.probs()`).
    ///
    /// The softmax and the loss are differentiated jointly through the
    /// identity dz = p ⊙ (dp − ⟨p, dp⟩) applied per row, then standard
    /// reverse accumulation through the rectifier layers.
    pub fn backward(&self, cache: &ForwardCache, dprobs: &Array2<f64>) -> MlpGradients {
        let layers = self.weights.len();
        let p = &cache.probs;
        debug_assert_eq!(p.dim(), dprobs.dim());

        // Softmax Jacobian-vector product per row.
        let inner = (p * dprobs).sum_axis(Axis(1));
        let mut dz = p * &(dprobs - &inner.insert_axis(Axis(1)));

        let mut grads = self.zero_gradients();
        for l in (0..layers).rev() {
            let a = &cache.inputs[l];
            grads.weights[l] = a.t().dot(&dz);
            grads.biases[l] = dz.sum_axis(Axis(0));
            if l > 0 {
                // Rectifier derivative: the stored input of layer l is the
                // rectified output of layer l-1, so positive entries mark
                // active units.
                let da = dz.dot(&self.weights[l].t());
                dz = da * &a.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
            }
        }
        grads
    }
}

/// In-place row-wise softmax with max-subtraction for overflow safety.
fn softmax_rows(z: &mut Array2<f64>) {
    for mut row in z.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}
