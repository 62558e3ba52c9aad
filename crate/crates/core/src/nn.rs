//! Dense MLP engine: forward pass, backpropagation, Adam, Polyak updates.
//!
//! Everything is f64 and single-threaded; training determinism follows from
//! seeded initialization plus a fixed operation order. Weight matrices are
//! stored row-major as `(fan_out x fan_in)` flat vectors.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative given the pre-activation `z` and post-activation `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Fully-connected network. `weights[k]` maps activations of layer `k`
/// (length `layer_sizes[k]`) to pre-activations of layer `k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNet {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpNet {
    /// All-zero parameters; useful as a deterministic do-nothing policy.
    pub fn zeros(layer_sizes: &[usize], hidden: Activation, output: Activation) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output layers");
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            hidden_activation: hidden,
            output_activation: output,
        }
    }

    /// Kaiming-uniform initialization: weights of layer `k` drawn from
    /// `U(+-sqrt(6 / fan_in))`, biases zero.
    pub fn init_kaiming(
        layer_sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        let mut net = Self::zeros(layer_sizes, hidden, output);
        for (k, w) in net.weights.iter_mut().enumerate() {
            let bound = (6.0 / layer_sizes[k] as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    /// Re-draws the final layer from `U(+-bound)`; used to start policies
    /// near the zero action and value heads near zero.
    pub fn reinit_final_layer(&mut self, bound: f64, rng: &mut impl Rng) {
        let w = self.weights.last_mut().unwrap();
        for v in w.iter_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        let b = self.biases.last_mut().unwrap();
        for v in b.iter_mut() {
            *v = rng.gen_range(-bound..bound);
        }
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.n_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn same_architecture(&self, other: &Self) -> bool {
        self.layer_sizes == other.layer_sizes
            && self.hidden_activation == other.hidden_activation
            && self.output_activation == other.output_activation
    }
}

/// Intermediate values of one forward pass, needed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[k]` is the input of layer `k`; the last entry is the
    /// network output.
    pub activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

/// Gradients with respect to every parameter, plus the input.
#[derive(Debug, Clone)]
pub struct ParamGrads {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_input: Vec<f64>,
}

impl ParamGrads {
    pub fn zeros_like(net: &MlpNet) -> Self {
        Self {
            d_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            d_input: vec![0.0; net.input_len()],
        }
    }

    /// Scales every gradient in place (used for batch averaging).
    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            for v in w.iter_mut() {
                *v *= factor;
            }
        }
        for b in &mut self.d_biases {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
        for v in &mut self.d_input {
            *v *= factor;
        }
    }
}

/// Dot product with 4-way split accumulators; breaks the add dependency
/// chain so the hot training loops are not latency-bound.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Runs the network on `input`, returning the output and the cache required
/// to backpropagate through this exact pass.
pub fn forward(net: &MlpNet, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    if input.len() != net.input_len() {
        return Err(Error::Shape(format!(
            "input length {} does not match first layer {}",
            input.len(),
            net.input_len()
        )));
    }
    let mut activations = Vec::with_capacity(net.n_layers() + 1);
    let mut pre_activations = Vec::with_capacity(net.n_layers());
    activations.push(input.to_vec());
    for k in 0..net.n_layers() {
        let fan_in = net.layer_sizes[k];
        let fan_out = net.layer_sizes[k + 1];
        let x = activations.last().unwrap();
        let act = net.activation_of(k);
        let mut z = Vec::with_capacity(fan_out);
        for j in 0..fan_out {
            let row = &net.weights[k][j * fan_in..(j + 1) * fan_in];
            z.push(dot(row, x) + net.biases[k][j]);
        }
        let y: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
        pre_activations.push(z);
        activations.push(y);
    }
    let output = activations.last().unwrap().clone();
    Ok((
        output,
        ForwardCache {
            activations,
            pre_activations,
        },
    ))
}

/// Backpropagates `grad_out` (dL/d output) through a cached forward pass,
/// accumulating parameter gradients into `acc` and returning dL/d input.
pub fn backward_accumulate(
    net: &MlpNet,
    cache: &ForwardCache,
    grad_out: &[f64],
    acc: &mut ParamGrads,
) -> Result<Vec<f64>> {
    if grad_out.len() != net.output_len() {
        return Err(Error::Shape(format!(
            "grad_out length {} does not match output layer {}",
            grad_out.len(),
            net.output_len()
        )));
    }
    if cache.activations.len() != net.n_layers() + 1
        || cache.activations[0].len() != net.input_len()
    {
        return Err(Error::Shape("cache does not match this network".into()));
    }

    let mut delta: Vec<f64> = grad_out.to_vec();
    for k in (0..net.n_layers()).rev() {
        let fan_in = net.layer_sizes[k];
        let fan_out = net.layer_sizes[k + 1];
        let act = net.activation_of(k);
        let z = &cache.pre_activations[k];
        let y = &cache.activations[k + 1];
        // delta currently holds dL/dy for layer k; fold in the activation.
        for j in 0..fan_out {
            delta[j] *= act.derivative(z[j], y[j]);
        }
        let x = &cache.activations[k];
        let mut d_prev = vec![0.0; fan_in];
        for j in 0..fan_out {
            let dj = delta[j];
            acc.d_biases[k][j] += dj;
            let w_row = &net.weights[k][j * fan_in..(j + 1) * fan_in];
            let g_row = &mut acc.d_weights[k][j * fan_in..(j + 1) * fan_in];
            for i in 0..fan_in {
                g_row[i] += dj * x[i];
                d_prev[i] += dj * w_row[i];
            }
        }
        delta = d_prev;
    }
    for (a, d) in acc.d_input.iter_mut().zip(&delta) {
        *a += d;
    }
    Ok(delta)
}

/// Single-sample backward pass; returns fresh gradients.
pub fn backward(net: &MlpNet, cache: &ForwardCache, grad_out: &[f64]) -> Result<ParamGrads> {
    let mut acc = ParamGrads::zeros_like(net);
    backward_accumulate(net, cache, grad_out, &mut acc)?;
    Ok(acc)
}

/// dL/d input only, skipping parameter gradients. Used where a network is
/// differentiated through rather than trained.
pub fn backward_input(net: &MlpNet, cache: &ForwardCache, grad_out: &[f64]) -> Result<Vec<f64>> {
    if grad_out.len() != net.output_len() {
        return Err(Error::Shape(format!(
            "grad_out length {} does not match output layer {}",
            grad_out.len(),
            net.output_len()
        )));
    }
    let mut delta: Vec<f64> = grad_out.to_vec();
    for k in (0..net.n_layers()).rev() {
        let fan_in = net.layer_sizes[k];
        let fan_out = net.layer_sizes[k + 1];
        let act = net.activation_of(k);
        let z = &cache.pre_activations[k];
        let y = &cache.activations[k + 1];
        for j in 0..fan_out {
            delta[j] *= act.derivative(z[j], y[j]);
        }
        let mut d_prev = vec![0.0; fan_in];
        for j in 0..fan_out {
            let dj = delta[j];
            let w_row = &net.weights[k][j * fan_in..(j + 1) * fan_in];
            for i in 0..fan_in {
                d_prev[i] += dj * w_row[i];
            }
        }
        delta = d_prev;
    }
    Ok(delta)
}

/// Adam optimizer state mirroring one network's parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_weights: Vec<Vec<f64>>,
    pub v_weights: Vec<Vec<f64>>,
    pub m_biases: Vec<Vec<f64>>,
    pub v_biases: Vec<Vec<f64>>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(net: &MlpNet, lr: f64) -> Self {
        Self {
            m_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Gradients must be finite; a NaN or
/// infinity anywhere aborts with `NumericalError` before touching the net.
pub fn adam_step(net: &mut MlpNet, grads: &ParamGrads, state: &mut AdamState) -> Result<()> {
    if grads.d_weights.len() != net.weights.len()
        || grads
            .d_weights
            .iter()
            .zip(&net.weights)
            .any(|(g, w)| g.len() != w.len())
        || grads
            .d_biases
            .iter()
            .zip(&net.biases)
            .any(|(g, b)| g.len() != b.len())
    {
        return Err(Error::Shape("gradient shapes do not match network".into()));
    }
    for g in grads.d_weights.iter().chain(grads.d_biases.iter()) {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite gradient in adam_step".into()));
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    let update = |param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    };
    for k in 0..net.weights.len() {
        update(
            &mut net.weights[k],
            &grads.d_weights[k],
            &mut state.m_weights[k],
            &mut state.v_weights[k],
        );
        update(
            &mut net.biases[k],
            &grads.d_biases[k],
            &mut state.m_biases[k],
            &mut state.v_biases[k],
        );
    }
    Ok(())
}

/// Polyak update: `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut MlpNet, online: &MlpNet, tau: f64) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::Shape(
            "soft_update requires identical architectures".into(),
        ));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("tau {tau} outside [0, 1]")));
    }
    for (tw, ow) in target.weights.iter_mut().zip(&online.weights) {
        for (t, &o) in tw.iter_mut().zip(ow) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    for (tb, ob) in target.biases.iter_mut().zip(&online.biases) {
        for (t, &o) in tb.iter_mut().zip(ob) {
            *t = tau * o + (1.0 - tau) * *t;
        }
    }
    Ok(())
}
