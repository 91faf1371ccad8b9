//! Fully-connected feedforward network with scalar output: parameters,
//! forward evaluation, and the squared-error gradient by backpropagation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SurrogateError;

/// Samples per GEMM block when evaluating large batches.
const BATCH_CHUNK: usize = 4096;

/// Scalar activation applied elementwise on hidden layers. The output layer
/// is always identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation value `a = phi(x)`.
    #[inline]
    pub fn derivative_from_value(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, SurrogateError> {
        match name {
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(SurrogateError::Format(format!(
                "unknown activation {other:?}"
            ))),
        }
    }
}

/// Feedforward network mapping `R^d -> R` through `hidden_layers` layers of
/// `width` neurons. `weights[j]` has shape `(out, in)`; the chain is
/// `d -> width -> ... -> width -> 1`. A network with zero hidden layers is a
/// plain affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSurrogate {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub width: usize,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub activation: Activation,
    pub dropout_rate: f64,
}

impl MlpSurrogate {
    /// Zero-initialized network with the declared shape chain.
    pub fn zeros(input_dim: usize, hidden_layers: usize, width: usize) -> Self {
        let mut weights = Vec::with_capacity(hidden_layers + 1);
        let mut biases = Vec::with_capacity(hidden_layers + 1);
        let mut fan_in = input_dim;
        for _ in 0..hidden_layers {
            weights.push(Array2::zeros((width, fan_in)));
            biases.push(Array1::zeros(width));
            fan_in = width;
        }
        weights.push(Array2::zeros((1, fan_in)));
        biases.push(Array1::zeros(1));
        MlpSurrogate {
            input_dim,
            hidden_layers,
            width,
            weights,
            biases,
            activation: Activation::Tanh,
            dropout_rate: 0.0,
        }
    }

    /// Glorot-uniform initialization, `+-sqrt(6 / (fan_in + fan_out))` per
    /// layer, drawn sequentially from a ChaCha12 stream so the same seed
    /// always yields the same parameters.
    pub fn glorot(
        input_dim: usize,
        hidden_layers: usize,
        width: usize,
        activation: Activation,
        seed: u64,
    ) -> Self {
        let mut net = Self::zeros(input_dim, hidden_layers, width);
        net.activation = activation;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for w in &mut net.weights {
            let (fan_out, fan_in) = (w.nrows(), w.ncols());
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    fn check_shapes(&self) -> bool {
        if self.weights.len() != self.hidden_layers + 1
            || self.biases.len() != self.hidden_layers + 1
        {
            return false;
        }
        let mut fan_in = self.input_dim;
        for j in 0..self.hidden_layers {
            if self.weights[j].dim() != (self.width, fan_in)
                || self.biases[j].len() != self.width
            {
                return false;
            }
            fan_in = self.width;
        }
        self.weights[self.hidden_layers].dim() == (1, fan_in)
            && self.biases[self.hidden_layers].len() == 1
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        if !self.check_shapes() {
            return Err(SurrogateError::InvalidHierarchy(
                "parameter shapes do not chain".into(),
            ));
        }
        let finite = self
            .weights
            .iter()
            .all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(SurrogateError::NonFiniteInput);
        }
        Ok(())
    }
}

/// Gradients of the squared error with the same shapes as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl MlpGradient {
    pub fn zeros_like(net: &MlpSurrogate) -> Self {
        MlpGradient {
            weights: net.weights.iter().map(|w| Array2::zeros(w.dim())).collect(),
            biases: net.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    pub fn scaled_add(&mut self, factor: f64, other: &MlpGradient) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.scaled_add(factor, b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.scaled_add(factor, b);
        }
    }
}

/// Activations kept from a forward pass, one entry per layer input plus the
/// output; `masks` holds inverted-dropout multipliers when training.
pub(crate) struct ForwardCache {
    /// activations[0] = input, activations[j+1] = output of layer j.
    pub activations: Vec<Array1<f64>>,
    pub masks: Option<Vec<Array1<f64>>>,
}

pub(crate) fn forward_cached(
    net: &MlpSurrogate,
    z: ArrayView1<f64>,
    dropout: Option<(&mut ChaCha12Rng, f64)>,
) -> ForwardCache {
    let layers = net.layer_count();
    let mut activations = Vec::with_capacity(layers + 1);
    activations.push(z.to_owned());
    let mut masks_store = dropout.as_ref().map(|_| Vec::with_capacity(net.hidden_layers));
    let mut dropout = dropout;

    for j in 0..layers {
        let prev = &activations[j];
        let mut s = net.weights[j].dot(prev);
        s += &net.biases[j];
        if j < net.hidden_layers {
            s.mapv_inplace(|x| net.activation.apply(x));
            if let Some((rng, rate)) = dropout.as_mut() {
                let keep = 1.0 - *rate;
                let mask = Array1::from_shape_fn(s.len(), |_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                s *= &mask;
                masks_store.as_mut().unwrap().push(mask);
            }
        }
        activations.push(s);
    }
    ForwardCache {
        activations,
        masks: masks_store,
    }
}

/// Deterministic forward evaluation with dropout disabled.
pub fn forward(net: &MlpSurrogate, z: &[f64]) -> Result<f64, SurrogateError> {
    if z.len() != net.input_dim {
        return Err(SurrogateError::DimensionMismatch {
            expected: net.input_dim,
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFiniteInput);
    }
    let view = ArrayView1::from(z);
    let cache = forward_cached(net, view, None);
    Ok(cache.activations[net.layer_count()][0])
}

/// Forward evaluation over a whole batch (rows are samples), blocked into
/// fixed-size GEMM chunks that run in parallel; the result does not depend
/// on the worker count.
pub fn forward_batch(
    net: &MlpSurrogate,
    inputs: ArrayView2<f64>,
) -> Result<Array1<f64>, SurrogateError> {
    if inputs.ncols() != net.input_dim {
        return Err(SurrogateError::DimensionMismatch {
            expected: net.input_dim,
            got: inputs.ncols(),
        });
    }
    let rows = inputs.nrows();
    let chunks: Vec<Array1<f64>> = (0..rows.div_ceil(BATCH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * BATCH_CHUNK;
            let hi = ((c + 1) * BATCH_CHUNK).min(rows);
            let block = inputs.slice(ndarray::s![lo..hi, ..]);
            let mut activ = block.to_owned();
            for j in 0..net.layer_count() {
                let mut s = activ.dot(&net.weights[j].t());
                s += &net.biases[j];
                if j < net.hidden_layers {
                    s.mapv_inplace(|x| net.activation.apply(x));
                }
                activ = s;
            }
            activ.index_axis(Axis(1), 0).to_owned()
        })
        .collect();

    let mut out = Array1::zeros(rows);
    let mut offset = 0;
    for chunk in chunks {
        out.slice_mut(ndarray::s![offset..offset + chunk.len()])
            .assign(&chunk);
        offset += chunk.len();
    }
    Ok(out)
}

/// Gradient of the squared error `(f(z) - target)^2` with respect to every
/// parameter, by backpropagation. Dropout is not applied.
pub fn backward(
    net: &MlpSurrogate,
    z: &[f64],
    target: f64,
) -> Result<MlpGradient, SurrogateError> {
    if z.len() != net.input_dim {
        return Err(SurrogateError::DimensionMismatch {
            expected: net.input_dim,
            got: z.len(),
        });
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFiniteInput);
    }
    let cache = forward_cached(net, ArrayView1::from(z), None);
    Ok(backward_from_cache(net, &cache, target))
}

pub(crate) fn backward_from_cache(
    net: &MlpSurrogate,
    cache: &ForwardCache,
    target: f64,
) -> MlpGradient {
    let layers = net.layer_count();
    let output = cache.activations[layers][0];
    let mut grad = MlpGradient::zeros_like(net);

    // delta for the output layer: d/ds (s - t)^2 = 2 (f - t), identity output
    let mut delta = Array1::from_elem(1, 2.0 * (output - target));

    for j in (0..layers).rev() {
        let input = &cache.activations[j];
        // grad_w[j][o][i] = delta[o] * input[i]
        for (o, &d) in delta.iter().enumerate() {
            if d != 0.0 {
                let mut row = grad.weights[j].row_mut(o);
                row.scaled_add(d, input);
            }
        }
        grad.biases[j].assign(&delta);

        if j > 0 {
            // propagate through the linear map, the dropout mask, and the
            // activation; stored activations are post-mask, so recover the
            // pre-mask value where a unit was kept
            let mut upstream = net.weights[j].t().dot(&delta);
            let act = &cache.activations[j];
            match &cache.masks {
                Some(masks) => {
                    let mask = &masks[j - 1];
                    for (i, g) in upstream.iter_mut().enumerate() {
                        if mask[i] == 0.0 {
                            *g = 0.0;
                        } else {
                            let phi = act[i] / mask[i];
                            *g *= mask[i] * net.activation.derivative_from_value(phi);
                        }
                    }
                    delta = upstream;
                }
                None => {
                    let act_grad = act.mapv(|a| net.activation.derivative_from_value(a));
                    delta = upstream * &act_grad;
                }
            }
        }
    }
    grad
}
