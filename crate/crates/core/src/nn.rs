//! Dense ReLU networks trained with Adam.
//!
//! The network is `g_{L+1} ∘ relu ∘ g_L ∘ ... ∘ relu ∘ g_1` with affine
//! layers `g(x) = W x + b`. Losses are supplied by the caller as a closure
//! returning the batch loss sum and its gradient with respect to the
//! network output, so the same loop serves quantile and squared-error fits.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

/// Layer widths `(d_0, d_1, ..., d_{L+1})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub layer_widths: Vec<usize>,
}

impl MlpArchitecture {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut layer_widths = Vec::with_capacity(hidden.len() + 2);
        layer_widths.push(input);
        layer_widths.extend_from_slice(hidden);
        layer_widths.push(output);
        Self { layer_widths }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 3 {
            return Err(Error::InvalidArgument(
                "an MLP needs at least one hidden layer".into(),
            ));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be >= 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn num_parameters(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// One affine layer; `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer gradients, aligned with [`Mlp::layers`].
pub type Gradients = Vec<Dense>;

impl Mlp {
    /// He-scaled normal weights, zero biases.
    pub fn he_init(arch: &MlpArchitecture, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let layers = arch
            .layer_widths
            .windows(2)
            .map(|w| {
                let scale = (2.0 / w[0] as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((w[1], w[0]), || {
                    scale * rng.sample::<f64, _>(StandardNormal)
                });
                Dense {
                    weights,
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(arch: &MlpArchitecture) -> Result<Self> {
        arch.validate()?;
        let layers = arch
            .layer_widths
            .windows(2)
            .map(|w| Dense {
                weights: Array2::zeros((w[1], w[0])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidArgument(
                "an MLP needs at least one hidden layer".into(),
            ));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i}: bias/weight rows differ"
                )));
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i}: input width mismatch"
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn architecture(&self) -> MlpArchitecture {
        let mut layer_widths = vec![self.layers[0].weights.ncols()];
        layer_widths.extend(self.layers.iter().map(|l| l.weights.nrows()));
        MlpArchitecture { layer_widths }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.nrows()
    }

    /// Batch forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut a = affine(&self.layers[0], x);
        for layer in &self.layers[1..] {
            a.mapv_inplace(relu);
            a = affine(layer, a.view());
        }
        a
    }

    /// Forward pass keeping every layer input for backpropagation.
    fn forward_cached(&self, x: ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = affine(layer, a.view());
            inputs.push(a);
            a = if i + 1 < self.layers.len() {
                z.mapv(relu)
            } else {
                z
            };
        }
        (inputs, a)
    }

    /// Gradients of a loss whose derivative w.r.t. the output is `grad_out`.
    fn backward(&self, inputs: &[Array2<f64>], grad_out: Array2<f64>) -> Gradients {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad_out;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let gw = delta.t().dot(&inputs[l]);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut next = delta.dot(&layer.weights);
                // relu'(z) is 1 exactly where the stored activation is positive
                Zip::from(&mut next).and(&inputs[l]).for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = next;
            }
            grads.push(Dense {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        grads
    }

    /// Loss value and parameter gradients for one batch.
    pub fn loss_and_gradients<L>(
        &self,
        x: ArrayView2<f64>,
        targets: ArrayView2<f64>,
        loss: &L,
    ) -> (f64, Gradients)
    where
        L: Fn(ArrayView2<f64>, ArrayView2<f64>) -> (f64, Array2<f64>),
    {
        let (inputs, out) = self.forward_cached(x);
        let (value, grad_out) = loss(out.view(), targets);
        (value, self.backward(&inputs, grad_out))
    }

    /// All parameters flattened layer by layer (weights row-major, then bias).
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_flat_parameters(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.architecture().num_parameters();
        if params.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = it.next().unwrap();
            }
            for b in l.bias.iter_mut() {
                *b = it.next().unwrap();
            }
        }
        Ok(())
    }
}

fn affine(layer: &Dense, x: ArrayView2<f64>) -> Array2<f64> {
    let mut z = x.dot(&layer.weights.t());
    z += &layer.bias;
    z
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(mlp: &Mlp, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros: Gradients = mlp
            .layers
            .iter()
            .map(|l| Dense {
                weights: Array2::zeros(l.weights.raw_dim()),
                bias: Array1::zeros(l.bias.raw_dim()),
            })
            .collect();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay: 0.0,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Decoupled weight decay on the weight matrices (biases are exempt).
    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn update(&mut self, mlp: &mut Mlp, grads: &Gradients) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let lr = self.lr;
        for (((layer, g), m), v) in mlp
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            if self.weight_decay > 0.0 {
                layer.weights *= 1.0 - lr * self.weight_decay;
            }
            Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(|p, &g, m, v| adam_step(p, g, m, v, b1, b2, c1, c2, lr, eps));
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|p, &g, m, v| adam_step(p, g, m, v, b1, b2, c1, c2, lr, eps));
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn adam_step(
    p: &mut f64,
    g: f64,
    m: &mut f64,
    v: &mut f64,
    b1: f64,
    b2: f64,
    c1: f64,
    c2: f64,
    lr: f64,
    eps: f64,
) {
    *m = b1 * *m + (1.0 - b1) * g;
    *v = b2 * *v + (1.0 - b2) * g * g;
    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
}

/// Per-column affine standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Column means and standard deviations; near-constant columns keep unit scale.
    pub fn fit(rows: &[&[f64]]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * m.abs().max(1.0) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.std) {
            *o = (v - m) / s;
        }
    }

    /// Stacks standardized rows into a matrix.
    pub fn transform_rows(&self, rows: &[&[f64]]) -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), self.dim()));
        for (mut dst, src) in out.outer_iter_mut().zip(rows) {
            self.transform_into(src, dst.as_slice_mut().unwrap());
        }
        out
    }
}

/// Optimizer settings shared by every network fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Huber threshold, on standardized targets. Unused by squared-error fits.
    pub kappa: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// The step size follows a cosine from `learning_rate` down to this
    /// fraction of it over `epochs`; 1 keeps it constant.
    pub final_lr_fraction: f64,
    /// Decoupled (AdamW-style) weight decay.
    pub weight_decay: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    /// Fraction of pairs held out for early stopping (0 disables it).
    pub holdout_fraction: f64,
    /// Epochs without holdout improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kappa: 0.05,
            epochs: 200,
            batch_size: 256,
            learning_rate: 1e-3,
            final_lr_fraction: 0.01,
            weight_decay: 0.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
            holdout_fraction: 0.1,
            patience: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be > 0, got {}",
                self.kappa
            )));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "final_lr_fraction must lie in (0, 1], got {}",
                self.final_lr_fraction
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch_size must be >= 1".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.holdout_fraction) {
            return Err(Error::InvalidArgument(
                "holdout_fraction must lie in [0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

/// What happened during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    /// Mean per-sample training loss of each epoch, as accumulated during the epoch.
    pub epoch_losses: Vec<f64>,
    /// Mean per-sample holdout loss after each epoch (empty without a holdout).
    pub holdout_losses: Vec<f64>,
    /// Epoch (0-based) whose weights were kept.
    pub best_epoch: usize,
}

impl TrainSummary {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

/// Mini-batch Adam over `(inputs, targets)` rows with optional early stopping.
///
/// `loss(out, targets)` must return the *sum* of per-sample losses and the
/// gradient of that sum w.r.t. `out`; the loop rescales to batch means.
pub fn fit_mlp<L>(
    mlp: &mut Mlp,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    cfg: &TrainConfig,
    loss: L,
) -> Result<TrainSummary>
where
    L: Fn(ArrayView2<f64>, ArrayView2<f64>) -> (f64, Array2<f64>),
{
    cfg.validate()?;
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if targets.nrows() != n {
        return Err(Error::ShapeMismatch(
            "inputs and targets differ in row count".into(),
        ));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_hold = if n >= 20 {
        ((n as f64) * cfg.holdout_fraction).floor() as usize
    } else {
        0
    };
    let (hold_idx, train_idx) = order.split_at(n_hold);
    let mut train_idx = train_idx.to_vec();
    let hold_x = inputs.select(Axis(0), hold_idx);
    let hold_y = targets.select(Axis(0), hold_idx);

    let mut adam = Adam::new(
        mlp,
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_epsilon,
    )
    .with_weight_decay(cfg.weight_decay);
    let mut summary = TrainSummary {
        epoch_losses: Vec::new(),
        holdout_losses: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(f64, Mlp)> = None;
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        let progress = epoch as f64 / cfg.epochs as f64;
        let floor = cfg.final_lr_fraction;
        let factor = floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        adam.set_learning_rate(cfg.learning_rate * factor);
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in train_idx.chunks(cfg.batch_size) {
            let bx = inputs.select(Axis(0), chunk);
            let by = targets.select(Axis(0), chunk);
            let (value, mut grads) = mlp.loss_and_gradients(bx.view(), by.view(), &loss);
            if !value.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite training loss at epoch {epoch}"
                )));
            }
            total += value;
            let scale = 1.0 / chunk.len() as f64;
            for g in &mut grads {
                g.weights *= scale;
                g.bias *= scale;
            }
            adam.update(mlp, &grads);
        }
        summary.epoch_losses.push(total / train_idx.len() as f64);

        if n_hold > 0 {
            let out = mlp.forward(hold_x.view());
            let (value, _) = loss(out.view(), hold_y.view());
            let h = value / n_hold as f64;
            summary.holdout_losses.push(h);
            let improved = best.as_ref().is_none_or(|(b, _)| h < *b);
            if improved {
                best = Some((h, mlp.clone()));
                summary.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        } else {
            summary.best_epoch = epoch;
        }
    }
    if let Some((_, m)) = best {
        *mlp = m;
    }
    Ok(summary)
}

/// Squared-error loss sum and gradient, for regression fits.
pub fn squared_error(out: ArrayView2<f64>, targets: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let diff = &out - &targets;
    let value = diff.iter().map(|d| 0.5 * d * d).sum();
    (value, diff)
}

/// Standardized-input regression network `x -> y` under squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub mlp: Mlp,
    pub input_scaler: Scaler,
    pub target_scaler: Scaler,
}

impl Regressor {
    pub fn fit(
        xs: &[&[f64]],
        ys: &[&[f64]],
        hidden: &[usize],
        cfg: &TrainConfig,
    ) -> Result<(Self, TrainSummary)> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidArgument(
                "regression needs equal, nonempty inputs and targets".into(),
            ));
        }
        let input_scaler = Scaler::fit(xs);
        let target_scaler = Scaler::fit(ys);
        let arch = MlpArchitecture::new(input_scaler.dim(), hidden, target_scaler.dim());
        let mut mlp = Mlp::he_init(&arch, &mut rng_from_seed(cfg.seed ^ 0x5eed))?;
        let x = input_scaler.transform_rows(xs);
        let y = target_scaler.transform_rows(ys);
        let summary = fit_mlp(&mut mlp, &x, &y, cfg, squared_error)?;
        Ok((
            Self {
                mlp,
                input_scaler,
                target_scaler,
            },
            summary,
        ))
    }

    pub fn predict(&self, xs: &[&[f64]]) -> Vec<Vec<f64>> {
        let x = self.input_scaler.transform_rows(xs);
        let out = self.mlp.forward(x.view());
        out.outer_iter()
            .map(|row| {
                row.iter()
                    .zip(&self.target_scaler.mean)
                    .zip(&self.target_scaler.std)
                    .map(|((v, m), s)| m + s * v)
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_rules() {
        assert!(MlpArchitecture {
            layer_widths: vec![3, 4]
        }
        .validate()
        .is_err());
        assert!(MlpArchitecture {
            layer_widths: vec![3, 0, 2]
        }
        .validate()
        .is_err());
        let a = MlpArchitecture::new(3, &[4, 5], 2);
        assert_eq!(a.num_parameters(), 3 * 4 + 4 + 4 * 5 + 5 + 5 * 2 + 2);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::zeros(&MlpArchitecture::new(3, &[4], 2)).unwrap();
        let x = Array2::from_elem((5, 3), 1.7);
        assert!(mlp.forward(x.view()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_parameter_round_trip() {
        let arch = MlpArchitecture::new(2, &[3, 3], 2);
        let mlp = Mlp::he_init(&arch, &mut rng_from_seed(4)).unwrap();
        let mut other = Mlp::zeros(&arch).unwrap();
        other.set_flat_parameters(&mlp.flat_parameters()).unwrap();
        assert_eq!(mlp, other);
    }

    #[test]
    fn squared_error_gradients_match_finite_differences() {
        let arch = MlpArchitecture::new(3, &[5, 4], 2);
        let mlp = Mlp::he_init(&arch, &mut rng_from_seed(9)).unwrap();
        let mut rng = rng_from_seed(10);
        let x = Array2::from_shape_simple_fn((6, 3), || rng.sample::<f64, _>(StandardNormal));
        let y = Array2::from_shape_simple_fn((6, 2), || rng.sample::<f64, _>(StandardNormal));
        let (_, grads) = mlp.loss_and_gradients(x.view(), y.view(), &squared_error);
        let analytic: Vec<f64> = grads
            .iter()
            .flat_map(|g| {
                g.weights
                    .iter()
                    .chain(g.bias.iter())
                    .copied()
                    .collect::<Vec<_>>()
            })
            .collect();
        let base = mlp.flat_parameters();
        let h = 1e-5;
        let mut probe = mlp.clone();
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            probe.set_flat_parameters(&p).unwrap();
            let up = squared_error(probe.forward(x.view()).view(), y.view()).0;
            p[i] -= 2.0 * h;
            probe.set_flat_parameters(&p).unwrap();
            let down = squared_error(probe.forward(x.view()).view(), y.view()).0;
            let numeric = (up - down) / (2.0 * h);
            let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
            assert!(
                (analytic[i] - numeric).abs() / scale < 1e-4,
                "param {i}: {} vs {numeric}",
                analytic[i]
            );
        }
    }

    #[test]
    fn regressor_learns_linear_map() {
        let mut rng = rng_from_seed(2);
        let xs: Vec<Vec<f64>> = (0..2000)
            .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![3.0 * x[0] - x[1] + 0.5]).collect();
        let xr: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let yr: Vec<&[f64]> = ys.iter().map(|v| v.as_slice()).collect();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 64,
            ..Default::default()
        };
        let (reg, summary) = Regressor::fit(&xr, &yr, &[32, 32], &cfg).unwrap();
        assert!(summary.final_loss() < summary.epoch_losses[0]);
        let pred = reg.predict(&[&[0.2, -0.4]]);
        assert!((pred[0][0] - (0.6 + 0.4 + 0.5)).abs() < 0.1, "{pred:?}");
    }
}
