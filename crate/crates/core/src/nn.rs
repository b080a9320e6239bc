//! Minimal multilayer-perceptron engine: parameter initialization, forward
//! evaluation, reverse-mode gradients, and the Adam optimizer.
//!
//! Parameters live in one flat vector laid out layer by layer as
//! `[weights row-major, biases]`; bias-free networks simply omit the bias
//! blocks. The batched entry points treat each matrix column as one sample,
//! and the single-sample wrappers are the batch paths with one column, so
//! both produce bitwise-identical numbers.

use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{format_g17, parse_g17, Scalar};

/// Conventional Leaky-ReLU slope used when a spec does not override it.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Per-connection activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation<T> {
    LeakyRelu { slope: T },
    Identity,
}

impl<T: Scalar> Activation<T> {
    pub fn leaky_default() -> Self {
        Activation::LeakyRelu {
            slope: T::of(DEFAULT_LEAKY_SLOPE),
        }
    }

    #[inline]
    fn apply(&self, x: T) -> T {
        match *self {
            Activation::LeakyRelu { slope } => leaky_relu(x, slope),
            Activation::Identity => x,
        }
    }

    #[inline]
    fn derivative(&self, x: T) -> T {
        match *self {
            Activation::LeakyRelu { slope } => leaky_relu_derivative(x, slope),
            Activation::Identity => T::one(),
        }
    }
}

/// `x` for `x ≥ 0`, else `slope · x`.
#[inline]
pub fn leaky_relu<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        x
    } else {
        slope * x
    }
}

/// Subgradient convention: 1 at x = 0 (the positive branch), so replays are
/// bitwise reproducible.
#[inline]
pub fn leaky_relu_derivative<T: Scalar>(x: T, slope: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        slope
    }
}

/// Network architecture: layer widths plus the activation schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec<T> {
    pub layer_dims: Vec<usize>,
    pub hidden_activation: Activation<T>,
    pub output_activation: Activation<T>,
    pub use_bias: bool,
}

impl<T: Scalar> MlpSpec<T> {
    /// Standard dense network: Leaky-ReLU hidden layers, identity output,
    /// biases everywhere.
    pub fn new(layer_dims: Vec<usize>) -> Result<Self> {
        Self::with_activation(layer_dims, Activation::leaky_default(), true)
    }

    pub fn with_activation(
        layer_dims: Vec<usize>,
        hidden_activation: Activation<T>,
        use_bias: bool,
    ) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput(format!(
                "layer dims need at least two positive entries, got {layer_dims:?}"
            )));
        }
        Ok(MlpSpec {
            layer_dims,
            hidden_activation,
            output_activation: Activation::Identity,
            use_bias,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    fn activation_at(&self, layer: usize) -> Activation<T> {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Total number of trainable scalars.
    pub fn param_count(&self) -> usize {
        self.layer_dims
            .windows(2)
            .map(|w| w[0] * w[1] + if self.use_bias { w[1] } else { 0 })
            .sum()
    }
}

/// Flat parameter vector with per-layer `(out, in)` shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    flat: Vec<T>,
    shapes: Vec<(usize, usize)>,
    use_bias: bool,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(spec: &MlpSpec<T>) -> Self {
        let shapes: Vec<(usize, usize)> = spec
            .layer_dims
            .windows(2)
            .map(|w| (w[1], w[0]))
            .collect();
        ModelParams {
            flat: vec![T::zero(); spec.param_count()],
            shapes,
            use_bias: spec.use_bias,
        }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn flat(&self) -> &[T] {
        &self.flat
    }

    pub fn flat_mut(&mut self) -> &mut [T] {
        &mut self.flat
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn is_finite(&self) -> bool {
        self.flat.iter().all(|x| x.is_finite())
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.shapes[..layer]
            .iter()
            .map(|&(o, i)| o * i + if self.use_bias { o } else { 0 })
            .sum()
    }

    /// Row-major weight block of one layer.
    pub fn weights(&self, layer: usize) -> &[T] {
        let (out, inp) = self.shapes[layer];
        let start = self.layer_offset(layer);
        &self.flat[start..start + out * inp]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [T] {
        let (out, inp) = self.shapes[layer];
        let start = self.layer_offset(layer);
        &mut self.flat[start..start + out * inp]
    }

    /// Bias block of one layer; empty for bias-free networks.
    pub fn biases(&self, layer: usize) -> &[T] {
        if !self.use_bias {
            return &[];
        }
        let (out, inp) = self.shapes[layer];
        let start = self.layer_offset(layer) + out * inp;
        &self.flat[start..start + out]
    }

    fn matches(&self, spec: &MlpSpec<T>) -> bool {
        self.use_bias == spec.use_bias
            && self.shapes.len() == spec.num_layers()
            && self
                .shapes
                .iter()
                .zip(spec.layer_dims.windows(2))
                .all(|(&(o, i), w)| o == w[1] && i == w[0])
    }
}

/// Draws weights and biases uniformly from `(-1/√fan_in, +1/√fan_in)`,
/// layer by layer; deterministic for a given generator state.
pub fn init_params<T: Scalar>(spec: &MlpSpec<T>, rng: &mut ChaCha8Rng) -> ModelParams<T> {
    use rand::Rng;
    let mut params = ModelParams::zeros(spec);
    for layer in 0..spec.num_layers() {
        let fan_in = params.shapes[layer].1;
        let bound = 1.0 / (fan_in as f64).sqrt();
        for w in params.weights_mut(layer) {
            *w = T::of(rng.gen_range(-bound..bound));
        }
        if spec.use_bias {
            let (out, inp) = params.shapes[layer];
            let start = params.layer_offset(layer) + out * inp;
            for b in &mut params.flat[start..start + out] {
                *b = T::of(rng.gen_range(-bound..bound));
            }
        }
    }
    params
}

/// Per-layer inputs and pre-activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    inputs: Vec<Matrix<T>>,
    preactivations: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn batch_size(&self) -> usize {
        self.inputs[0].cols()
    }
}

/// Affine-then-activation chain over a batch of column vectors.
pub fn forward_batch<T: Scalar>(
    spec: &MlpSpec<T>,
    params: &ModelParams<T>,
    input: &Matrix<T>,
) -> Result<(Matrix<T>, ForwardCache<T>)> {
    if input.rows() != spec.input_dim() {
        return Err(Error::InvalidInput(format!(
            "input has {} rows, spec expects {}",
            input.rows(),
            spec.input_dim()
        )));
    }
    if !params.matches(spec) {
        return Err(Error::InvalidInput(
            "parameter layout does not match spec".into(),
        ));
    }
    let mut inputs = Vec::with_capacity(spec.num_layers());
    let mut preactivations = Vec::with_capacity(spec.num_layers());
    let mut activation = input.clone();
    for layer in 0..spec.num_layers() {
        let (out, inp) = params.shapes[layer];
        let w = Matrix::from_vec(out, inp, params.weights(layer).to_vec())?;
        let mut z = w.matmul(&activation);
        if spec.use_bias {
            let b = params.biases(layer);
            for i in 0..out {
                let bi = b[i];
                for zv in z.row_mut(i) {
                    *zv += bi;
                }
            }
        }
        let act = spec.activation_at(layer);
        let next = Matrix::from_fn(z.rows(), z.cols(), |i, j| act.apply(z.get(i, j)));
        inputs.push(activation);
        preactivations.push(z);
        activation = next;
    }
    Ok((
        activation,
        ForwardCache {
            inputs,
            preactivations,
        },
    ))
}

/// Single-sample forward pass; the cache feeds [`backward`].
pub fn forward<T: Scalar>(
    spec: &MlpSpec<T>,
    params: &ModelParams<T>,
    input: &[T],
) -> Result<(Vec<T>, ForwardCache<T>)> {
    let column = Matrix::from_vec(input.len(), 1, input.to_vec())?;
    let (out, cache) = forward_batch(spec, params, &column)?;
    Ok((out.col(0), cache))
}

/// Reverse-mode gradients for a batch.
///
/// `output_grad` holds ∂L/∂output per column; the returned flat vector is the
/// sum of per-sample parameter gradients (same layout as the parameters), and
/// the matrix is the gradient with respect to the batch input.
pub fn backward_batch<T: Scalar>(
    spec: &MlpSpec<T>,
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    output_grad: &Matrix<T>,
) -> Result<(Vec<T>, Matrix<T>)> {
    if !params.matches(spec) {
        return Err(Error::ContractViolation(
            "parameter layout does not match spec".into(),
        ));
    }
    let layers = spec.num_layers();
    if cache.inputs.len() != layers
        || cache
            .inputs
            .iter()
            .zip(&params.shapes)
            .any(|(a, &(_, inp))| a.rows() != inp)
        || cache
            .preactivations
            .iter()
            .zip(&params.shapes)
            .any(|(z, &(out, _))| z.rows() != out)
    {
        return Err(Error::ContractViolation(
            "forward cache does not match this spec".into(),
        ));
    }
    if output_grad.rows() != spec.output_dim() || output_grad.cols() != cache.batch_size() {
        return Err(Error::ContractViolation(format!(
            "output grad is {}x{}, cache expects {}x{}",
            output_grad.rows(),
            output_grad.cols(),
            spec.output_dim(),
            cache.batch_size()
        )));
    }

    let mut grad = vec![T::zero(); params.len()];
    let mut delta = {
        let act = spec.activation_at(layers - 1);
        let z = &cache.preactivations[layers - 1];
        Matrix::from_fn(z.rows(), z.cols(), |i, j| {
            output_grad.get(i, j) * act.derivative(z.get(i, j))
        })
    };

    let mut input_grad = None;
    for layer in (0..layers).rev() {
        let (out, inp) = params.shapes[layer];
        let a_t = cache.inputs[layer].transpose();
        let gw = delta.matmul(&a_t);
        let start = params.layer_offset(layer);
        grad[start..start + out * inp].copy_from_slice(gw.data());
        if spec.use_bias {
            for i in 0..out {
                grad[start + out * inp + i] = delta.row(i).iter().copied().sum();
            }
        }

        let w = Matrix::from_vec(out, inp, params.weights(layer).to_vec())?;
        let upstream = w.matmul_transpose_left(&delta);
        if layer == 0 {
            input_grad = Some(upstream);
        } else {
            let act = spec.activation_at(layer - 1);
            let z = &cache.preactivations[layer - 1];
            delta = Matrix::from_fn(z.rows(), z.cols(), |i, j| {
                upstream.get(i, j) * act.derivative(z.get(i, j))
            });
        }
    }
    Ok((grad, input_grad.expect("at least one layer")))
}

/// Single-sample gradient of `outputᵀ · output_grad`.
pub fn backward<T: Scalar>(
    spec: &MlpSpec<T>,
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    output_grad: &[T],
) -> Result<Vec<T>> {
    let g = Matrix::from_vec(output_grad.len(), 1, output_grad.to_vec())?;
    let (grad, _) = backward_batch(spec, params, cache, &g)?;
    Ok(grad)
}

/// Adam moment buffers and hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: usize,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    /// Conventional defaults: lr 1e-3, β₁ 0.9, β₂ 0.999, ε 1e-8.
    pub fn new(len: usize) -> Self {
        Self::with_hyperparameters(len, T::of(1e-3), T::of(0.9), T::of(0.999), T::of(1e-8))
    }

    pub fn with_hyperparameters(len: usize, lr: T, beta1: T, beta2: T, epsilon: T) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
            lr,
            beta1,
            beta2,
            epsilon,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grad: &[T],
    state: &mut AdamState<T>,
) -> Result<()> {
    if params.len() != grad.len() || params.len() != state.m.len() {
        return Err(Error::InvalidInput(format!(
            "adam_step length mismatch: params {}, grad {}, state {}",
            params.len(),
            grad.len(),
            state.m.len()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence("non-finite gradient".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = T::one() - state.beta1.powi(t);
    let bias2 = T::one() - state.beta2.powi(t);
    let one = T::one();
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (one - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (one - state.beta2) * g * g;
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        params[i] = params[i] - state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Writes parameters in the plain-text model format: header
/// `MLPv1 <num_layers>`, one `<out> <in>` line per layer, then the flat
/// vector one value per line at 17 significant digits.
pub fn write_params<T: Scalar, W: Write>(
    params: &ModelParams<T>,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "MLPv1 {}", params.shapes.len())?;
    for &(o, i) in &params.shapes {
        writeln!(out, "{o} {i}")?;
    }
    for &x in params.flat() {
        writeln!(out, "{}", format_g17(x))?;
    }
    Ok(())
}

/// Reads parameters written by [`write_params`]. The format does not record
/// whether bias blocks are present, so the caller supplies `use_bias`.
pub fn read_params<T: Scalar, R: BufRead>(input: &mut R, use_bias: bool) -> Result<ModelParams<T>> {
    let mut lines = input.lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format("unexpected end of model file".into()))?
            .map_err(|e| Error::Format(format!("read failure: {e}")))
    };
    let header = next_line()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("MLPv1") {
        return Err(Error::Format(format!("bad model header: {header:?}")));
    }
    let layers: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("missing layer count".into()))?;
    let mut shapes = Vec::with_capacity(layers);
    for _ in 0..layers {
        let line = next_line()?;
        let mut it = line.split_whitespace();
        let out: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad shape line: {line:?}")))?;
        let inp: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad shape line: {line:?}")))?;
        shapes.push((out, inp));
    }
    let total: usize = shapes
        .iter()
        .map(|&(o, i)| o * i + if use_bias { o } else { 0 })
        .sum();
    let mut flat = Vec::with_capacity(total);
    for _ in 0..total {
        let line = next_line()?;
        let value = parse_g17(&line)
            .ok_or_else(|| Error::Format(format!("bad parameter value: {line:?}")))?;
        flat.push(value);
    }
    Ok(ModelParams {
        flat,
        shapes,
        use_bias,
    })
}
