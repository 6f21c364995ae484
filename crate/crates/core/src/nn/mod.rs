//! Two-hidden-layer feed-forward scorer with batch normalization, ReLU
//! activations and a sigmoid output, plus analytic backpropagation and an
//! Adam optimizer. All arithmetic is f64 so gradient checks can be tight.
//!
//! Layer order is affine -> batch norm -> ReLU for both hidden layers; the
//! output layer is affine -> sigmoid. Train-mode forward normalizes with
//! batch statistics and refreshes the running statistics; eval-mode forward
//! uses the running statistics and never mutates the model.

// Indexed loops are clearer than iterator chains in these small kernels.
#![allow(clippy::needless_range_loop)]

mod checkpoint;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Predictions are clamped this far inside (0, 1) so cross-entropy stays
/// finite even for saturated logits.
pub const PROB_CLAMP: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// out[n x k] = a[n x m] * b[m x k]
fn matmul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows);
    let mut out = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for l in 0..a.cols {
            let av = a.at(i, l);
            if av == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                *out.at_mut(i, j) += av * b.at(l, j);
            }
        }
    }
    out
}

/// out[m x k] = a^T[m x n] * b[n x k]
fn matmul_at_b(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows);
    let mut out = Mat::zeros(a.cols, b.cols);
    for i in 0..a.rows {
        for l in 0..a.cols {
            let av = a.at(i, l);
            if av == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                *out.at_mut(l, j) += av * b.at(i, j);
            }
        }
    }
    out
}

/// out[n x m] = a[n x k] * b^T[k x m]
fn matmul_a_bt(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.cols);
    let mut out = Mat::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        for j in 0..b.rows {
            let mut sum = 0.0;
            for l in 0..a.cols {
                sum += a.at(i, l) * b.at(j, l);
            }
            *out.at_mut(i, j) = sum;
        }
    }
    out
}

fn col_sums(a: &Mat) -> Vec<f64> {
    let mut out = vec![0.0; a.cols];
    for i in 0..a.rows {
        for j in 0..a.cols {
            out[j] += a.at(i, j);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn identity(width: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![0.0; width],
        }
    }

    fn width(&self) -> usize {
        self.gamma.len()
    }
}

/// Weights, biases and batch-norm state of the scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// [d_in, h1, h2, 1]
    pub layer_dims: [usize; 4],
    pub weights: Vec<Mat>,
    pub biases: Vec<Vec<f64>>,
    pub bn: Vec<BatchNorm>,
}

/// Per-layer batch-norm intermediates cached for the backward pass.
#[derive(Debug, Clone)]
struct BnCache {
    input: Mat,
    mean: Vec<f64>,
    inv_std: Vec<f64>,
    x_hat: Mat,
    out: Mat,
}

/// Intermediates of a train-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_dims: [usize; 4],
    x: Mat,
    bn1: BnCache,
    a1: Mat,
    bn2: BnCache,
    a2: Mat,
    /// Output probabilities, strictly inside (0, 1).
    pub probs: Vec<f64>,
}

impl ForwardCache {
    pub fn batch_len(&self) -> usize {
        self.probs.len()
    }
}

/// Parameter gradients in model shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub d_weights: Vec<Mat>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_gamma: Vec<Vec<f64>>,
    pub d_beta: Vec<Vec<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn affine(x: &Mat, w: &Mat, b: &[f64]) -> Mat {
    let mut z = matmul(x, w);
    for i in 0..z.rows {
        for j in 0..z.cols {
            *z.at_mut(i, j) += b[j];
        }
    }
    z
}

fn bn_forward_train(z: Mat, layer: &mut BatchNorm) -> BnCache {
    let (n, d) = (z.rows, z.cols);
    let nf = n as f64;
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    for j in 0..d {
        for i in 0..n {
            mean[j] += z.at(i, j);
        }
        mean[j] /= nf;
    }
    for j in 0..d {
        for i in 0..n {
            let c = z.at(i, j) - mean[j];
            var[j] += c * c;
        }
        var[j] /= nf;
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPSILON).sqrt()).collect();

    let mut x_hat = Mat::zeros(n, d);
    let mut out = Mat::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let xh = (z.at(i, j) - mean[j]) * inv_std[j];
            *x_hat.at_mut(i, j) = xh;
            *out.at_mut(i, j) = layer.gamma[j] * xh + layer.beta[j];
        }
    }
    for j in 0..d {
        layer.running_mean[j] = (1.0 - BN_MOMENTUM) * layer.running_mean[j] + BN_MOMENTUM * mean[j];
        layer.running_var[j] = (1.0 - BN_MOMENTUM) * layer.running_var[j] + BN_MOMENTUM * var[j];
    }
    BnCache {
        input: z,
        mean,
        inv_std,
        x_hat,
        out,
    }
}

fn bn_forward_eval(z: &Mat, layer: &BatchNorm) -> Mat {
    let mut out = Mat::zeros(z.rows, z.cols);
    for j in 0..z.cols {
        let inv_std = 1.0 / (layer.running_var[j] + BN_EPSILON).sqrt();
        for i in 0..z.rows {
            let xh = (z.at(i, j) - layer.running_mean[j]) * inv_std;
            *out.at_mut(i, j) = layer.gamma[j] * xh + layer.beta[j];
        }
    }
    out
}

/// Backward through batch normalization. Returns (d_input, d_gamma, d_beta).
fn bn_backward(cache: &BnCache, gamma: &[f64], d_out: &Mat) -> (Mat, Vec<f64>, Vec<f64>) {
    let (n, d) = (cache.input.rows, cache.input.cols);
    let nf = n as f64;
    let mut d_gamma = vec![0.0; d];
    let mut d_beta = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            d_gamma[j] += d_out.at(i, j) * cache.x_hat.at(i, j);
            d_beta[j] += d_out.at(i, j);
        }
    }

    let mut d_input = Mat::zeros(n, d);
    for j in 0..d {
        let inv_std = cache.inv_std[j];
        let mut d_var = 0.0;
        let mut d_xhat_sum = 0.0;
        let mut centered_sum = 0.0;
        for i in 0..n {
            let d_xhat = d_out.at(i, j) * gamma[j];
            let centered = cache.input.at(i, j) - cache.mean[j];
            d_var += d_xhat * centered * (-0.5) * inv_std.powi(3);
            d_xhat_sum += d_xhat;
            centered_sum += centered;
        }
        let d_mean = -inv_std * d_xhat_sum + d_var * (-2.0 / nf) * centered_sum;
        for i in 0..n {
            let d_xhat = d_out.at(i, j) * gamma[j];
            let centered = cache.input.at(i, j) - cache.mean[j];
            *d_input.at_mut(i, j) = d_xhat * inv_std + d_var * 2.0 * centered / nf + d_mean / nf;
        }
    }
    (d_input, d_gamma, d_beta)
}

fn relu(m: &Mat) -> Mat {
    Mat {
        rows: m.rows,
        cols: m.cols,
        data: m.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// Initialize a model with scaled-uniform weights (`+-sqrt(6 / (fan_in +
/// fan_out))`), zero biases, identity batch norm and zeroed running stats.
/// Deterministic per seed.
pub fn init_model(d_in: usize, h1: usize, h2: usize, seed: u64) -> Result<ModelParams> {
    if d_in == 0 || h1 == 0 || h2 == 0 {
        return Err(Error::Invalid(format!(
            "layer dims must be positive, got ({d_in}, {h1}, {h2})"
        )));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let dims = [d_in, h1, h2, 1usize];
    let mut weights = Vec::with_capacity(3);
    let mut biases = Vec::with_capacity(3);
    for l in 0..3 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        weights.push(Mat::from_rows(fan_in, fan_out, data));
        biases.push(vec![0.0; fan_out]);
    }
    Ok(ModelParams {
        layer_dims: dims,
        weights,
        biases,
        bn: vec![BatchNorm::identity(h1), BatchNorm::identity(h2)],
    })
}

impl ModelParams {
    pub fn d_in(&self) -> usize {
        self.layer_dims[0]
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.cols != self.d_in() {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} input columns, got {}",
                self.d_in(),
                x.cols
            )));
        }
        if x.rows == 0 {
            return Err(Error::Invalid("empty input batch".into()));
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("non-finite value in input batch".into()));
        }
        Ok(())
    }

    fn output_probs(&self, z3: &Mat) -> Vec<f64> {
        z3.data
            .iter()
            .map(|&z| sigmoid(z).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
            .collect()
    }

    /// Train-mode forward: normalizes with batch statistics and updates the
    /// running statistics in place. Returns probabilities and the cache
    /// needed by [`ModelParams::backward`].
    pub fn forward_train(&mut self, x: &Mat) -> Result<(Vec<f64>, ForwardCache)> {
        self.check_input(x)?;
        let z1 = affine(x, &self.weights[0], &self.biases[0]);
        let bn1 = bn_forward_train(z1, &mut self.bn[0]);
        let a1 = relu(&bn1.out);
        let z2 = affine(&a1, &self.weights[1], &self.biases[1]);
        let bn2 = bn_forward_train(z2, &mut self.bn[1]);
        let a2 = relu(&bn2.out);
        let z3 = affine(&a2, &self.weights[2], &self.biases[2]);
        let probs = self.output_probs(&z3);
        let cache = ForwardCache {
            layer_dims: self.layer_dims,
            x: x.clone(),
            bn1,
            a1,
            bn2,
            a2,
            probs: probs.clone(),
        };
        Ok((probs, cache))
    }

    /// Eval-mode forward: normalizes with running statistics; pure.
    pub fn forward_eval(&self, x: &Mat) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let z1 = affine(x, &self.weights[0], &self.biases[0]);
        let a1 = relu(&bn_forward_eval(&z1, &self.bn[0]));
        let z2 = affine(&a1, &self.weights[1], &self.biases[1]);
        let a2 = relu(&bn_forward_eval(&z2, &self.bn[1]));
        let z3 = affine(&a2, &self.weights[2], &self.biases[2]);
        Ok(self.output_probs(&z3))
    }

    /// Backpropagate `d_loss/d_probs` through the cached forward pass.
    pub fn backward(&self, cache: &ForwardCache, dl_dy: &[f64]) -> Result<Gradients> {
        if cache.layer_dims != self.layer_dims {
            return Err(Error::SchemaMismatch(format!(
                "cache built for dims {:?}, model has {:?}",
                cache.layer_dims, self.layer_dims
            )));
        }
        if dl_dy.len() != cache.probs.len() {
            return Err(Error::LengthMismatch(format!(
                "{} output gradients vs batch of {}",
                dl_dy.len(),
                cache.probs.len()
            )));
        }
        let n = cache.probs.len();

        // Sigmoid backward.
        let mut dz3 = Mat::zeros(n, 1);
        for i in 0..n {
            let p = cache.probs[i];
            *dz3.at_mut(i, 0) = dl_dy[i] * p * (1.0 - p);
        }

        let d_w3 = matmul_at_b(&cache.a2, &dz3);
        let d_b3 = col_sums(&dz3);
        let da2 = matmul_a_bt(&dz3, &self.weights[2]);

        let mut d_bn2_out = da2;
        for (v, &o) in d_bn2_out.data.iter_mut().zip(&cache.bn2.out.data) {
            if o <= 0.0 {
                *v = 0.0;
            }
        }
        let (dz2, d_gamma2, d_beta2) = bn_backward(&cache.bn2, &self.bn[1].gamma, &d_bn2_out);

        let d_w2 = matmul_at_b(&cache.a1, &dz2);
        let d_b2 = col_sums(&dz2);
        let da1 = matmul_a_bt(&dz2, &self.weights[1]);

        let mut d_bn1_out = da1;
        for (v, &o) in d_bn1_out.data.iter_mut().zip(&cache.bn1.out.data) {
            if o <= 0.0 {
                *v = 0.0;
            }
        }
        let (dz1, d_gamma1, d_beta1) = bn_backward(&cache.bn1, &self.bn[0].gamma, &d_bn1_out);

        let d_w1 = matmul_at_b(&cache.x, &dz1);
        let d_b1 = col_sums(&dz1);

        Ok(Gradients {
            d_weights: vec![d_w1, d_w2, d_w3],
            d_biases: vec![d_b1, d_b2, d_b3],
            d_gamma: vec![d_gamma1, d_gamma2],
            d_beta: vec![d_beta1, d_beta2],
        })
    }

    /// Canonical parameter walk: w1, b1, gamma1, beta1, w2, b2, gamma2,
    /// beta2, w3, b3. Optimizer slots follow this order.
    pub(crate) fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let ModelParams {
            weights,
            biases,
            bn,
            ..
        } = self;
        let mut out: Vec<&mut Vec<f64>> = Vec::with_capacity(10);
        let mut bn_iter = bn.iter_mut();
        for (i, (w, b)) in weights.iter_mut().zip(biases.iter_mut()).enumerate() {
            out.push(&mut w.data);
            out.push(b);
            if i < 2 {
                let layer = bn_iter.next().expect("two batch-norm layers");
                out.push(&mut layer.gamma);
                out.push(&mut layer.beta);
            }
        }
        out
    }
}

impl Gradients {
    pub(crate) fn params(&self) -> Vec<&Vec<f64>> {
        let mut out: Vec<&Vec<f64>> = Vec::with_capacity(10);
        for i in 0..3 {
            out.push(&self.d_weights[i].data);
            out.push(&self.d_biases[i]);
            if i < 2 {
                out.push(&self.d_gamma[i]);
                out.push(&self.d_beta[i]);
            }
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for mat in &mut self.d_weights {
            for v in &mut mat.data {
                *v *= factor;
            }
        }
        for vecs in [&mut self.d_biases, &mut self.d_gamma, &mut self.d_beta] {
            for vec in vecs.iter_mut() {
                for v in vec.iter_mut() {
                    *v *= factor;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamSlot {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Adam optimizer state: first/second moment estimates per parameter slot
/// plus the step counter and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub slots: Vec<AdamSlot>,
}

impl OptimizerState {
    pub fn new(model: &ModelParams, learning_rate: f64) -> Self {
        let mut sizes = Vec::with_capacity(10);
        for i in 0..3 {
            sizes.push(model.weights[i].data.len());
            sizes.push(model.biases[i].len());
            if i < 2 {
                sizes.push(model.bn[i].width());
                sizes.push(model.bn[i].width());
            }
        }
        OptimizerState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            slots: sizes
                .into_iter()
                .map(|n| AdamSlot {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                })
                .collect(),
        }
    }
}

/// One Adam update with bias correction; increments the step counter.
pub fn adam_step(
    model: &mut ModelParams,
    state: &mut OptimizerState,
    grads: &Gradients,
) -> Result<()> {
    let grad_slots = grads.params();
    for slot in &grad_slots {
        if slot.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("non-finite gradient in Adam step".into()));
        }
    }
    let param_slots = model.params_mut();
    if param_slots.len() != state.slots.len() || param_slots.len() != grad_slots.len() {
        return Err(Error::SchemaMismatch(
            "optimizer state does not match model shape".into(),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - state.beta1.powi(t);
    let bias2 = 1.0 - state.beta2.powi(t);
    for ((params, grads), slot) in param_slots
        .into_iter()
        .zip(grad_slots)
        .zip(state.slots.iter_mut())
    {
        if params.len() != grads.len() || params.len() != slot.m.len() {
            return Err(Error::SchemaMismatch(
                "gradient shape does not match parameter shape".into(),
            ));
        }
        for k in 0..params.len() {
            let g = grads[k];
            slot.m[k] = state.beta1 * slot.m[k] + (1.0 - state.beta1) * g;
            slot.v[k] = state.beta2 * slot.v[k] + (1.0 - state.beta2) * g * g;
            let m_hat = slot.m[k] / bias1;
            let v_hat = slot.v[k] / bias2;
            params[k] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
