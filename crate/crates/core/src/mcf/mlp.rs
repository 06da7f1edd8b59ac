//! Fully connected rectifier network with a scalar output, trained by
//! mini-batch Adam with early stopping on a held-out validation split.
//!
//! Parameters live in one flat vector. Layer `l` with fan-in `a` and fan-out
//! `b` stores its `b x a` weight matrix row-major, followed by `b` biases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Identity,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Mse,
    Bce,
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Network shape: `widths[0]` inputs, hidden widths, one output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    widths: Vec<usize>,
    output: OutputActivation,
}

impl Network {
    pub fn new(input_dim: usize, hidden: &[usize], output: OutputActivation) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input_dim);
        widths.extend_from_slice(hidden);
        widths.push(1);
        Self { widths, output }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output(&self) -> OutputActivation {
        self.output
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// He-normal weights, zero biases.
    pub fn init(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.param_count());
        for w in self.widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let std = (2.0 / fan_in.max(1) as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        params
    }

    /// Pre-activation of the output unit.
    fn forward_into(&self, params: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        let layers = self.widths.len() - 1;
        acts.resize(layers, Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let mut offset = 0;
        let mut out = 0.0;
        for l in 0..layers {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let weights = &params[offset..offset + fan_in * fan_out];
            let biases = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let last = l + 1 == layers;
            let mut next = Vec::with_capacity(fan_out);
            for j in 0..fan_out {
                let row = &weights[j * fan_in..(j + 1) * fan_in];
                let z = biases[j] + row.iter().zip(&acts[l]).map(|(w, a)| w * a).sum::<f64>();
                if last {
                    out = z;
                } else {
                    next.push(z.max(0.0));
                }
            }
            if !last {
                acts[l + 1] = next;
            }
        }
        out
    }

    /// Network output after the output activation.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> f64 {
        let z = self.forward_into(params, x, &mut Vec::new());
        match self.output {
            OutputActivation::Identity => z,
            OutputActivation::Logistic => logistic(z),
        }
    }

    fn sample_loss(&self, z: f64, y: f64, loss: Loss) -> (f64, f64) {
        match (self.output, loss) {
            (OutputActivation::Identity, Loss::Mse) => {
                let r = z - y;
                (r * r, 2.0 * r)
            }
            (OutputActivation::Logistic, Loss::Mse) => {
                let p = logistic(z);
                let r = p - y;
                (r * r, 2.0 * r * p * (1.0 - p))
            }
            (OutputActivation::Logistic, Loss::Bce) => {
                // log(1 + e^z) - y z, evaluated without overflow.
                let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
                (softplus - y * z, logistic(z) - y)
            }
            (OutputActivation::Identity, Loss::Bce) => {
                // Treat the raw output as a logit.
                let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
                (softplus - y * z, logistic(z) - y)
            }
        }
    }

    /// Mean loss over `rows` (row-major `len x input_dim`).
    pub fn loss(&self, params: &[f64], xs: &[f64], ys: &[f64], loss: Loss) -> f64 {
        let dim = self.input_dim();
        let mut acts = Vec::new();
        let total: f64 = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let z = self.forward_into(params, &xs[i * dim..(i + 1) * dim], &mut acts);
                self.sample_loss(z, y, loss).0
            })
            .sum();
        total / ys.len() as f64
    }

    /// Mean loss over the rows `indices`, with its gradient written to `grad`.
    pub fn loss_and_grad(
        &self,
        params: &[f64],
        xs: &[f64],
        ys: &[f64],
        indices: &[usize],
        loss: Loss,
        grad: &mut [f64],
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let dim = self.input_dim();
        let layers = self.widths.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for w in self.widths.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let mut acts = Vec::new();
        let mut total = 0.0;
        let scale = 1.0 / indices.len() as f64;
        let mut delta = Vec::new();
        let mut prev_delta = Vec::new();
        for &i in indices {
            let z = self.forward_into(params, &xs[i * dim..(i + 1) * dim], &mut acts);
            let (l, dl_dz) = self.sample_loss(z, ys[i], loss);
            total += l;
            delta.clear();
            delta.push(dl_dz * scale);
            for layer in (0..layers).rev() {
                let (fan_in, fan_out) = (self.widths[layer], self.widths[layer + 1]);
                let w_off = offsets[layer];
                let b_off = w_off + fan_in * fan_out;
                let input = &acts[layer];
                for j in 0..fan_out {
                    let dj = delta[j];
                    if dj == 0.0 {
                        continue;
                    }
                    let row = &mut grad[w_off + j * fan_in..w_off + (j + 1) * fan_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += dj * a;
                    }
                    grad[b_off + j] += dj;
                }
                if layer == 0 {
                    break;
                }
                prev_delta.clear();
                prev_delta.resize(fan_in, 0.0);
                for j in 0..fan_out {
                    let dj = delta[j];
                    if dj == 0.0 {
                        continue;
                    }
                    let row = &params[w_off + j * fan_in..w_off + (j + 1) * fan_in];
                    for (p, w) in prev_delta.iter_mut().zip(row) {
                        *p += dj * w;
                    }
                }
                // Rectifier derivative: the stored activation is max(z, 0).
                for (p, a) in prev_delta.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut prev_delta);
            }
        }
        total * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub batch_size: usize,
    pub loss: Loss,
    pub seed: u64,
}

/// Per-epoch losses and the selected checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Loss of the returned checkpoint on the validation rows (or on the
    /// training rows when there are none).
    pub best_val_loss: f64,
    pub final_train_loss: f64,
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub validation_rows: Vec<usize>,
}

/// Deterministic train/validation partition of `0..n`.
///
/// The validation part has `floor(n * fraction)` rows, capped so that at
/// least one row is left for training.
pub fn validation_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n_val = ((n as f64 * fraction).floor() as usize).min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_7a11);
    order.shuffle(&mut rng);
    let mut val = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Trains `net` on standardized inputs `xs` (row-major) and targets `ys`.
/// Returns the parameters with the lowest validation loss seen.
pub fn train(net: &Network, xs: &[f64], ys: &[f64], opts: &TrainOptions) -> (Vec<f64>, TrainingLog) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut params = net.init(&mut rng);
    let (mut train_rows, val_rows) = validation_split(ys.len(), opts.validation_fraction, opts.seed);
    let dim = net.input_dim();
    let gather = |rows: &[usize]| -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(rows.len() * dim);
        let mut y = Vec::with_capacity(rows.len());
        for &r in rows {
            x.extend_from_slice(&xs[r * dim..(r + 1) * dim]);
            y.push(ys[r]);
        }
        (x, y)
    };
    let (val_x, val_y) = gather(&val_rows);
    let (train_x, train_y) = gather(&train_rows);
    let monitor = |p: &[f64]| {
        if val_y.is_empty() {
            net.loss(p, &train_x, &train_y, opts.loss)
        } else {
            net.loss(p, &val_x, &val_y, opts.loss)
        }
    };

    let mut adam = Adam::new(params.len());
    let mut grad = vec![0.0; params.len()];
    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut train_losses = Vec::new();
    let mut val_losses = Vec::new();
    let batch = opts.batch_size.max(1);
    let mut since_best = 0;

    for epoch in 0..opts.max_epochs {
        train_rows.shuffle(&mut rng);
        for chunk in train_rows.chunks(batch) {
            net.loss_and_grad(&params, xs, ys, chunk, opts.loss, &mut grad);
            adam.step(&mut params, &grad, opts.learning_rate);
        }
        let train_loss = net.loss(&params, &train_x, &train_y, opts.loss);
        let val_loss = monitor(&params);
        train_losses.push(train_loss);
        val_losses.push(val_loss);
        if val_loss < best_loss {
            best_loss = val_loss;
            best.copy_from_slice(&params);
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= opts.patience {
                break;
            }
        }
    }

    let final_train_loss = train_losses.last().copied().unwrap_or(f64::NAN);
    let log = TrainingLog {
        epochs_run: train_losses.len(),
        best_epoch,
        best_val_loss: best_loss,
        final_train_loss,
        train_losses,
        val_losses,
        validation_rows: val_rows,
    };
    (best, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn max_rel_error(net: &Network, loss: Loss, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..net.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rows = 6;
        let xs: Vec<f64> = (0..rows * net.input_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = match loss {
            Loss::Mse => (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            Loss::Bce => (0..rows).map(|_| f64::from(rng.gen_bool(0.5) as u8)).collect(),
        };
        let idx: Vec<usize> = (0..rows).collect();
        let mut grad = vec![0.0; params.len()];
        net.loss_and_grad(&params, &xs, &ys, &idx, loss, &mut grad);
        let h = 1e-5;
        let mut numeric = vec![0.0; params.len()];
        let mut p = params.clone();
        for i in 0..params.len() {
            p[i] = params[i] + h;
            let up = net.loss(&p, &xs, &ys, loss);
            p[i] = params[i] - h;
            let down = net.loss(&p, &xs, &ys, loss);
            p[i] = params[i];
            numeric[i] = (up - down) / (2.0 * h);
        }
        let diff: f64 = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt()
            + numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        diff / norm.max(1e-12)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cases = [
            (Network::new(3, &[5, 4], OutputActivation::Identity), Loss::Mse),
            (Network::new(2, &[4], OutputActivation::Logistic), Loss::Bce),
            (Network::new(4, &[3, 3, 3], OutputActivation::Logistic), Loss::Mse),
        ];
        for (c, (net, loss)) in cases.iter().enumerate() {
            for s in 0..5 {
                let err = max_rel_error(net, *loss, 100 * c as u64 + s);
                assert!(err < 1e-4, "case {c} seed {s}: {err}");
            }
        }
    }

    #[test]
    fn param_layout() {
        let net = Network::new(3, &[4, 2], OutputActivation::Identity);
        assert_eq!(net.param_count(), 3 * 4 + 4 + 4 * 2 + 2 + 2 + 1);
    }

    #[test]
    fn linear_network_forward() {
        // No hidden layers: z = w.x + b.
        let net = Network::new(2, &[], OutputActivation::Identity);
        assert_eq!(net.forward(&[2.0, -1.0, 0.5], &[3.0, 4.0]), 2.5);
    }

    #[test]
    fn validation_split_partitions() {
        let (train, val) = validation_split(10, 0.2, 3);
        assert_eq!(val.len(), 2);
        let mut all: Vec<_> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(validation_split(1, 0.5, 0).1.len(), 0);
    }

    #[test]
    fn logistic_is_stable() {
        assert!(logistic(-800.0) >= 0.0 && logistic(800.0) <= 1.0);
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
    }
}
