//! Fully connected feed-forward network with up to two hidden layers.
//!
//! Each layer computes `a = f(W a_prev + b)`; weights are stored row-major per
//! layer as `out × (in + 1)` with the bias in the last column. Training
//! minimizes the mean squared error over all `samples × outputs` entries, by
//! full-batch gradient descent or by Levenberg-Marquardt.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::rng;
use crate::survey::Dataset;

/// Weight count above which Levenberg-Marquardt falls back to gradient descent.
pub const LM_MAX_WEIGHTS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation value `a = f(z)`.
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    hidden_activation: Activation,
    output_activation: Activation,
}

/// Same shape as the network's weights.
pub type Gradient = Vec<Vec<f64>>;

impl MlpNetwork {
    /// Zero-initialized network. `layer_sizes` is `[inputs, hidden.., outputs]` with
    /// zero, one or two hidden layers.
    pub fn new(
        layer_sizes: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        if !(2..=4).contains(&layer_sizes.len()) || layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes {layer_sizes:?} must be [n, (p, (q,)) c] with positive entries"
            )));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[1] * (w[0] + 1)])
            .collect();
        Ok(MlpNetwork {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            hidden_activation,
            output_activation,
        })
    }

    pub fn with_weights(mut self, weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: weights.len(),
            });
        }
        for (have, want) in weights.iter().zip(&self.weights) {
            if have.len() != want.len() {
                return Err(Error::DimensionMismatch {
                    expected: want.len(),
                    found: have.len(),
                });
            }
        }
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    /// Draws every weight uniformly from `[-half_width, half_width]`.
    pub fn initialize(&mut self, seed: u64, half_width: f64) {
        let mut rng = rng::seeded(seed);
        for w in self.weights.iter_mut().flatten() {
            *w = if half_width > 0.0 {
                rng.gen_range(-half_width..=half_width)
            } else {
                0.0
            };
        }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_weights(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    pub fn flat_weights(&self) -> Vec<f64> {
        self.weights.iter().flatten().copied().collect()
    }

    pub fn set_flat_weights(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_weights());
        let mut offset = 0;
        for layer in &mut self.weights {
            let len = layer.len();
            layer.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.weights.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layer_sizes.len());
        acts.push(x.to_vec());
        for (l, w) in self.weights.iter().enumerate() {
            let input = acts.last().unwrap();
            let n_in = self.layer_sizes[l];
            let f = self.activation_for(l);
            let out = w
                .chunks_exact(n_in + 1)
                .map(|row| {
                    let z = row[..n_in]
                        .iter()
                        .zip(input)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        + row[n_in];
                    f.apply(z)
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).pop().unwrap())
    }

    /// Backpropagates `d_out` (loss derivative w.r.t. the outputs) through a traced
    /// pass, accumulating `scale * dLoss/dW` into `grad`.
    fn backprop(&self, acts: &[Vec<f64>], d_out: &[f64], scale: f64, grad: &mut Gradient) {
        let last = self.weights.len() - 1;
        let f_out = self.activation_for(last);
        let mut delta: Vec<f64> = d_out
            .iter()
            .zip(&acts[last + 1])
            .map(|(d, a)| d * f_out.slope(*a))
            .collect();
        for l in (0..=last).rev() {
            let n_in = self.layer_sizes[l];
            let input = &acts[l];
            for (j, dj) in delta.iter().enumerate() {
                let g = &mut grad[l][j * (n_in + 1)..(j + 1) * (n_in + 1)];
                for i in 0..n_in {
                    g[i] += scale * dj * input[i];
                }
                g[n_in] += scale * dj;
            }
            if l > 0 {
                let f = self.activation_for(l - 1);
                let w = &self.weights[l];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(j, dj)| w[j * (n_in + 1) + i] * dj)
                            .sum();
                        back * f.slope(input[i])
                    })
                    .collect();
            }
        }
    }

    fn check_batch(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::Empty);
        }
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch(inputs.len(), targets.len()));
        }
        for (x, t) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            if t.len() != self.n_outputs() {
                return Err(Error::DimensionMismatch {
                    expected: self.n_outputs(),
                    found: t.len(),
                });
            }
        }
        Ok(())
    }

    /// Mean of squared errors over every sample and output.
    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
        self.check_batch(inputs, targets)?;
        Ok(self.mse_unchecked(inputs, targets))
    }

    fn mse_unchecked(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        let total: f64 = inputs
            .iter()
            .zip(targets)
            .map(|(x, t)| {
                let out = self.trace(x).pop().unwrap();
                out.iter().zip(t).map(|(o, y)| (o - y).powi(2)).sum::<f64>()
            })
            .sum();
        total / (inputs.len() * self.n_outputs()) as f64
    }

    /// Gradient of [`MlpNetwork::mse`] with respect to every weight.
    pub fn gradient(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Gradient> {
        self.check_batch(inputs, targets)?;
        let mut grad: Gradient = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let scale = 2.0 / (inputs.len() * self.n_outputs()) as f64;
        for (x, t) in inputs.iter().zip(targets) {
            let acts = self.trace(x);
            let d_out: Vec<f64> = acts
                .last()
                .unwrap()
                .iter()
                .zip(t)
                .map(|(o, y)| o - y)
                .collect();
            self.backprop(&acts, &d_out, scale, &mut grad);
        }
        Ok(grad)
    }

    /// Residuals `output - target` (sample-major) and their Jacobian w.r.t. the flat weights.
    fn residual_jacobian(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> (DVector<f64>, DMatrix<f64>) {
        let c = self.n_outputs();
        let rows = inputs.len() * c;
        let p = self.n_weights();
        let mut residuals = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, p);
        let mut unit = vec![0.0; c];
        for (s, (x, t)) in inputs.iter().zip(targets).enumerate() {
            let acts = self.trace(x);
            for k in 0..c {
                let row = s * c + k;
                residuals[row] = acts.last().unwrap()[k] - t[k];
                unit.iter_mut().for_each(|u| *u = 0.0);
                unit[k] = 1.0;
                let mut g: Gradient = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
                self.backprop(&acts, &unit, 1.0, &mut g);
                for (col, v) in g.iter().flatten().enumerate() {
                    jac[(row, col)] = *v;
                }
            }
        }
        (residuals, jac)
    }
}

impl Classifier for MlpNetwork {
    fn n_features(&self) -> usize {
        self.n_inputs()
    }

    fn n_classes(&self) -> usize {
        self.n_outputs()
    }

    fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    GradientDescent,
    #[default]
    LevenbergMarquardt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    /// Step size for gradient descent.
    pub learning_rate: f64,
    /// Initial Levenberg-Marquardt damping.
    pub damping: f64,
    /// Damping is divided by this after an accepted step and multiplied after a rejected one.
    pub damping_factor: f64,
    /// Training stops once damping exceeds this.
    pub max_damping: f64,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub init_seed: u64,
    pub init_half_width: f64,
    /// Consecutive epochs of rising validation error that stop training.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: Optimizer::LevenbergMarquardt,
            learning_rate: 0.1,
            damping: 1e-3,
            damping_factor: 10.0,
            max_damping: 1e10,
            max_epochs: 100,
            target_mse: 0.0,
            init_seed: 0,
            init_half_width: 0.5,
            patience: 6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.damping > 0.0) {
            return bad("damping must be positive");
        }
        if !(self.damping_factor > 1.0) {
            return bad("damping_factor must exceed 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(self.init_half_width >= 0.0) {
            return bad("init_half_width must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    MaxEpochs,
    /// Levenberg-Marquardt damping exceeded its cap without an improving step.
    DampingExhausted,
    ValidationRising,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: MlpNetwork,
    /// Training MSE after each epoch.
    pub history: Vec<f64>,
    pub optimizer: Optimizer,
    pub stop: StopReason,
    /// Set when Levenberg-Marquardt was requested for a network that is too large.
    pub warning: Option<String>,
}

/// Trains from the network's current weights on one-hot targets.
pub fn mlp_train(net: MlpNetwork, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train(net, &data.features, &data.one_hot_targets(), None, cfg)
}

/// Inputs paired with their targets.
pub type Batch<'a> = (&'a [Vec<f64>], &'a [Vec<f64>]);

/// Trains on explicit targets. With `validation`, stops after `cfg.patience` consecutive
/// epochs of rising validation MSE and returns the weights with the lowest validation MSE.
pub fn train(
    mut net: MlpNetwork,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    validation: Option<Batch<'_>>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    net.check_batch(inputs, targets)?;
    if let Some((vx, vt)) = validation {
        if !vx.is_empty() {
            net.check_batch(vx, vt)?;
        }
    }
    let validation = validation.filter(|(vx, _)| !vx.is_empty());

    let mut optimizer = cfg.optimizer;
    let mut warning = None;
    if optimizer == Optimizer::LevenbergMarquardt && net.n_weights() > LM_MAX_WEIGHTS {
        warning = Some(format!(
            "network has {} weights (> {LM_MAX_WEIGHTS}); using gradient descent instead of Levenberg-Marquardt",
            net.n_weights()
        ));
        optimizer = Optimizer::GradientDescent;
    }

    let mut history = Vec::new();
    let mut mse = net.mse_unchecked(inputs, targets);
    let mut damping = cfg.damping;
    let mut best_val = validation.map(|(vx, vt)| (net.mse_unchecked(vx, vt), net.clone()));
    let mut rising = 0;
    let mut last_val = best_val.as_ref().map(|(v, _)| *v);
    let mut stop = StopReason::MaxEpochs;

    for epoch in 0..cfg.max_epochs {
        if mse <= cfg.target_mse {
            stop = StopReason::TargetReached;
            break;
        }
        match optimizer {
            Optimizer::GradientDescent => {
                let grad = net.gradient(inputs, targets)?;
                for (w, g) in net.weights.iter_mut().flatten().zip(grad.iter().flatten()) {
                    *w -= cfg.learning_rate * g;
                }
                mse = net.mse_unchecked(inputs, targets);
            }
            Optimizer::LevenbergMarquardt => {
                match lm_step(&net, inputs, targets, mse, &mut damping, cfg) {
                    Some((flat, new_mse)) => {
                        net.set_flat_weights(&flat);
                        mse = new_mse;
                    }
                    None => {
                        stop = StopReason::DampingExhausted;
                        break;
                    }
                }
            }
        }
        if !mse.is_finite() {
            return Err(Error::NonFiniteLoss(epoch + 1));
        }
        history.push(mse);

        if let Some((vx, vt)) = validation {
            let v = net.mse_unchecked(vx, vt);
            if let Some((best, best_net)) = best_val.as_mut() {
                if v < *best {
                    *best = v;
                    *best_net = net.clone();
                }
            }
            rising = if last_val.is_some_and(|prev| v > prev) {
                rising + 1
            } else {
                0
            };
            last_val = Some(v);
            if cfg.patience > 0 && rising >= cfg.patience {
                stop = StopReason::ValidationRising;
                break;
            }
        }
    }
    if mse <= cfg.target_mse {
        stop = StopReason::TargetReached;
    }
    if stop == StopReason::ValidationRising {
        if let Some((_, best_net)) = best_val {
            net = best_net;
        }
    }
    Ok(TrainOutcome {
        net,
        history,
        optimizer,
        stop,
        warning,
    })
}

/// Damped Gauss-Newton system `(JᵀJ + λI) δ = -Jᵀr` for a fixed Jacobian.
///
/// When `J` has fewer rows than columns the step is computed as
/// `δ = -Jᵀ (JJᵀ + λI)⁻¹ r`, which only needs the smaller Gram matrix.
struct LmSystem {
    jac: DMatrix<f64>,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    wide: bool,
}

impl LmSystem {
    fn new(jac: DMatrix<f64>, r: &DVector<f64>) -> Self {
        let wide = jac.nrows() < jac.ncols();
        let (gram, rhs) = if wide {
            (&jac * jac.transpose(), -r)
        } else {
            (jac.tr_mul(&jac), -jac.tr_mul(r))
        };
        LmSystem {
            jac,
            gram,
            rhs,
            wide,
        }
    }

    fn step(&self, damping: f64) -> Option<DVector<f64>> {
        let mut a = self.gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += damping;
        }
        let solved = a.cholesky()?.solve(&self.rhs);
        Some(if self.wide {
            self.jac.tr_mul(&solved)
        } else {
            solved
        })
    }
}

/// One accepted Levenberg-Marquardt step, raising λ until the MSE does not increase.
/// Returns `None` once λ passes its cap.
fn lm_step(
    net: &MlpNetwork,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    mse: f64,
    damping: &mut f64,
    cfg: &TrainConfig,
) -> Option<(Vec<f64>, f64)> {
    let (r, jac) = net.residual_jacobian(inputs, targets);
    let system = LmSystem::new(jac, &r);
    let base = net.flat_weights();
    let mut trial = net.clone();
    while *damping <= cfg.max_damping {
        if let Some(step) = system.step(*damping) {
            let flat: Vec<f64> = base.iter().zip(step.iter()).map(|(w, d)| w + d).collect();
            trial.set_flat_weights(&flat);
            let new_mse = trial.mse_unchecked(inputs, targets);
            if new_mse.is_finite() && new_mse <= mse {
                *damping /= cfg.damping_factor;
                return Some((flat, new_mse));
            }
        }
        *damping *= cfg.damping_factor;
    }
    None
}

/// Creates a `[n, hidden.., c]` network for `data`, initializes it from `cfg` and trains it.
pub fn fit_classifier(
    data: &Dataset,
    hidden: &[usize],
    hidden_activation: Activation,
    output_activation: Activation,
    validation: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut sizes = vec![data.n_features()];
    sizes.extend_from_slice(hidden);
    sizes.push(data.n_classes());
    let mut net = MlpNetwork::new(&sizes, hidden_activation, output_activation)?;
    net.initialize(cfg.init_seed, cfg.init_half_width);
    let val_targets = validation.map(Dataset::one_hot_targets);
    let val = validation
        .zip(val_targets.as_ref())
        .map(|(d, t)| (d.features.as_slice(), t.as_slice()));
    train(net, &data.features, &data.one_hot_targets(), val, cfg)
}
