//! A small fully connected ReLU network trained with squared error.
//!
//! Hidden layers use ReLU, the output layer is affine. Weights of layer `l`
//! form a `dims[l+1] × dims[l]` matrix, so the ∞-norm of a layer is its
//! largest absolute row sum.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;

pub const DIVERGENCE_LOSS: f64 = 1e6;
pub const FD_STEP: f64 = 1e-5;
const POWER_ITERATIONS: usize = 50;
const POWER_TOL: f64 = 1e-10;
/// Floor of the denominator in the gradient check's relative error.
const GRAD_CHECK_FLOOR: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            hidden: vec![32, 32],
            optimizer: Optimizer::adam(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "epochs, batch size and learning rate must be positive".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(
                "hidden widths must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub final_train_loss: f64,
    pub layer_inf_norms: Vec<f64>,
    pub layer1_spectral_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerNorms {
    /// `‖W^l‖_∞` for every layer.
    pub inf_norms: Vec<f64>,
    /// Largest singular value of the first layer.
    pub layer1_spectral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default)]
    pub train_meta: Option<TrainMeta>,
}

/// Per-layer pre-activations and activations of one forward pass.
struct Trace {
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Zero weights and biases with the given layer widths.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::InvalidArgument(
                "a network needs at least input and output widths, all positive".into(),
            ));
        }
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            weights: layer_dims
                .windows(2)
                .map(|w| vec![vec![0.0; w[0]]; w[1]])
                .collect(),
            biases: layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
            train_meta: None,
        })
    }

    /// He-normal weights, zero biases.
    pub fn he_init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        let mut m = Self::zeros(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (l, w) in m.weights.iter_mut().enumerate() {
            let normal = Normal::new(0.0, (2.0 / layer_dims[l] as f64).sqrt()).unwrap();
            for row in w.iter_mut() {
                for v in row.iter_mut() {
                    *v = normal.sample(&mut rng);
                }
            }
        }
        Ok(m)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let layers = self.layer_dims.len().saturating_sub(1);
        check_dim("weight layers", layers, self.weights.len())?;
        check_dim("bias layers", layers, self.biases.len())?;
        for l in 0..layers {
            check_dim("weight rows", self.layer_dims[l + 1], self.weights[l].len())?;
            check_dim("bias", self.layer_dims[l + 1], self.biases[l].len())?;
            for row in &self.weights[l] {
                check_dim("weight cols", self.layer_dims[l], row.len())?;
            }
        }
        Ok(())
    }

    fn trace(&self, theta: &[f64]) -> Trace {
        let last = self.num_layers() - 1;
        let mut a = vec![theta.to_vec()];
        let mut z = Vec::with_capacity(self.num_layers());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let input = &a[l];
            let zl: Vec<f64> = w
                .iter()
                .zip(b)
                .map(|(row, bi)| row.iter().zip(input).map(|(x, y)| x * y).sum::<f64>() + bi)
                .collect();
            let al = if l == last {
                zl.clone()
            } else {
                zl.iter().map(|v| v.max(0.0)).collect()
            };
            z.push(zl);
            a.push(al);
        }
        Trace { z, a }
    }

    pub fn forward(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim("theta", self.input_dim(), theta.len())?;
        Ok(self.trace(theta).a.pop().unwrap())
    }

    /// Pre-activations of every hidden unit, for activation-pattern checks.
    pub fn hidden_preactivations(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim("theta", self.input_dim(), theta.len())?;
        let mut t = self.trace(theta);
        t.z.pop();
        Ok(t.z.concat())
    }

    fn check_samples(&self, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no training samples".into()));
        }
        for (t, x) in samples {
            check_dim("theta", self.input_dim(), t.len())?;
            check_dim("target", self.output_dim(), x.len())?;
        }
        Ok(())
    }

    /// Mean of `‖h(θ) − x‖²` over the samples.
    pub fn loss(&self, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        self.check_samples(samples)?;
        Ok(self.loss_unchecked(samples.iter()))
    }

    fn loss_unchecked<'a>(
        &self,
        samples: impl ExactSizeIterator<Item = &'a (Vec<f64>, Vec<f64>)>,
    ) -> f64 {
        let count = samples.len() as f64;
        samples
            .map(|(t, x)| {
                let out = self.trace(t).a.pop().unwrap();
                out.iter()
                    .zip(x)
                    .map(|(o, y)| (o - y) * (o - y))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / count
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for row in w {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        check_dim("parameters", self.parameter_count(), params.len())?;
        let mut it = params.iter();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for v in w.iter_mut().flatten().chain(b.iter_mut()) {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Loss and its gradient, flattened like [`parameters`](Self::parameters).
    pub fn loss_gradient(&self, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, Vec<f64>)> {
        self.check_samples(samples)?;
        let refs: Vec<&(Vec<f64>, Vec<f64>)> = samples.iter().collect();
        let (loss, gw, gb) = self.backprop(&refs);
        let mut flat = Vec::with_capacity(self.parameter_count());
        for (w, b) in gw.iter().zip(&gb) {
            for row in w {
                flat.extend_from_slice(row);
            }
            flat.extend_from_slice(b);
        }
        Ok((loss, flat))
    }

    fn backprop(&self, batch: &[&(Vec<f64>, Vec<f64>)]) -> (f64, Vec<Matrix>, Vec<Vec<f64>>) {
        let layers = self.num_layers();
        let mut gw: Vec<Matrix> = self
            .weights
            .iter()
            .map(|w| vec![vec![0.0; w[0].len()]; w.len()])
            .collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (theta, target) in batch {
            let t = self.trace(theta);
            let out = &t.a[layers];
            let mut delta: Vec<f64> = out.iter().zip(target).map(|(o, y)| o - y).collect();
            loss += delta.iter().map(|d| d * d).sum::<f64>();
            delta.iter_mut().for_each(|d| *d *= 2.0 * scale);
            for l in (0..layers).rev() {
                let input = &t.a[l];
                for (i, d) in delta.iter().enumerate() {
                    gb[l][i] += d;
                    for (g, x) in gw[l][i].iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
                if l == 0 {
                    break;
                }
                let mut prev = vec![0.0; self.layer_dims[l]];
                for (i, d) in delta.iter().enumerate() {
                    for (p, w) in prev.iter_mut().zip(&self.weights[l][i]) {
                        *p += d * w;
                    }
                }
                for (p, z) in prev.iter_mut().zip(&t.z[l - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (loss * scale, gw, gb)
    }

    pub fn norms(&self) -> LayerNorms {
        LayerNorms {
            inf_norms: self.weights.iter().map(inf_norm).collect(),
            layer1_spectral: spectral_norm(&self.weights[0]),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: MlpModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

impl crate::policy::Policy for MlpModel {
    fn predict(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.forward(theta)
    }
}

/// Largest absolute row sum.
pub fn inf_norm(w: &Matrix) -> f64 {
    w.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest singular value by power iteration on `WᵀW`.
pub fn spectral_norm(w: &Matrix) -> f64 {
    let cols = w.first().map_or(0, |r| r.len());
    if cols == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut v: Vec<f64> = (0..cols).map(|_| normal.sample(&mut rng)).collect();
    let mut sigma = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let nv = crate::linalg::norm2(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let wv = crate::linalg::mat_vec(w, &v);
        let next = crate::linalg::norm2(&wv);
        v = crate::linalg::mat_t_vec(w, &wv, cols);
        let done = (next - sigma).abs() <= POWER_TOL * next.max(1.0);
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

/// Trains a network on `(θ, x*)` pairs by minibatch gradient descent.
pub fn train(samples: &[(Vec<f64>, Vec<f64>)], cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("no training samples".into()))?;
    let mut dims = vec![first.0.len()];
    dims.extend(&cfg.hidden);
    dims.push(first.1.len());
    let mut model = MlpModel::he_init(&dims, cfg.seed)?;
    model.check_samples(samples)?;

    let mut params = model.parameters();
    let mut m1 = vec![0.0; params.len()];
    let mut m2 = vec![0.0; params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut grad = Vec::with_capacity(params.len());

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&(Vec<f64>, Vec<f64>)> = chunk.iter().map(|&i| &samples[i]).collect();
            let (_, gw, gb) = model.backprop(&batch);
            grad.clear();
            for (w, b) in gw.iter().zip(&gb) {
                for row in w {
                    grad.extend_from_slice(row);
                }
                grad.extend_from_slice(b);
            }
            step += 1;
            match cfg.optimizer {
                Optimizer::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= cfg.learning_rate * g;
                    }
                }
                Optimizer::Adam { beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powi(step);
                    let c2 = 1.0 - beta2.powi(step);
                    for i in 0..params.len() {
                        m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
                        m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
                        params[i] -= cfg.learning_rate * (m1[i] / c1) / ((m2[i] / c2).sqrt() + eps);
                    }
                }
            }
            model.set_parameters(&params)?;
        }
        let loss = model.loss_unchecked(samples.iter());
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Divergence { epoch, loss });
        }
    }

    let final_train_loss = model.loss_unchecked(samples.iter());
    let norms = model.norms();
    model.train_meta = Some(TrainMeta {
        seed: cfg.seed,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        batch_size: cfg.batch_size,
        optimizer: cfg.optimizer,
        final_train_loss,
        layer_inf_norms: norms.inf_norms,
        layer1_spectral_norm: norms.layer1_spectral,
    });
    Ok(model)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Coordinates skipped because a finite-difference step crossed a ReLU kink.
    pub excluded: usize,
    /// `(coordinate, analytic, numeric)` for every mismatch.
    pub failures: Vec<(usize, f64, f64)>,
    pub passed: bool,
}

/// Compares `analytic` against central differences of the loss.
pub fn gradient_check_against(
    model: &MlpModel,
    samples: &[(Vec<f64>, Vec<f64>)],
    analytic: &[f64],
    tolerance: f64,
) -> Result<GradCheckReport> {
    model.check_samples(samples)?;
    check_dim("gradient", model.parameter_count(), analytic.len())?;
    let pattern = |m: &MlpModel| -> Vec<bool> {
        samples
            .iter()
            .flat_map(|(t, _)| {
                let mut tr = m.trace(t);
                tr.z.pop();
                tr.z.concat().into_iter().map(|z| z > 0.0)
            })
            .collect()
    };
    let base_pattern = pattern(model);
    let base = model.parameters();
    let mut probe = model.clone();
    let (mut checked, mut excluded, mut failures) = (0, 0, Vec::new());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + FD_STEP;
        probe.set_parameters(&p)?;
        let (up, up_pattern) = (probe.loss_unchecked(samples.iter()), pattern(&probe));
        p[i] = base[i] - FD_STEP;
        probe.set_parameters(&p)?;
        let (down, down_pattern) = (probe.loss_unchecked(samples.iter()), pattern(&probe));
        if up_pattern != base_pattern || down_pattern != base_pattern {
            excluded += 1;
            continue;
        }
        checked += 1;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let rel = (analytic[i] - numeric).abs()
            / analytic[i].abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        if rel > tolerance {
            failures.push((i, analytic[i], numeric));
        }
    }
    let passed = checked > 0 && failures.len() as f64 <= 0.01 * checked as f64;
    if !passed {
        log::warn!(
            "gradient check failed at {} of {checked} coordinates: {failures:?}",
            failures.len()
        );
    }
    Ok(GradCheckReport {
        checked,
        excluded,
        failures,
        passed,
    })
}

/// Backprop gradient against central differences with step `1e-5`.
pub fn gradient_check(model: &MlpModel, samples: &[(Vec<f64>, Vec<f64>)], tolerance: f64) -> bool {
    model
        .loss_gradient(samples)
        .and_then(|(_, g)| gradient_check_against(model, samples, &g, tolerance))
        .is_ok_and(|r| r.passed)
}
