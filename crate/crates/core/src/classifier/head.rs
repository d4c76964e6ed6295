//! Two-logit linear classification head.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::optim::{dot, minimize, sigmoid, softplus, MinimizeOptions};

/// `logits = W·x + b`; the reported probability is the positive component
/// of `softmax(logits)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    pub weights: [Vec<f64>; 2],
    pub bias: [f64; 2],
}

impl SoftmaxHead {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: [vec![0.0; dim], vec![0.0; dim]],
            bias: [0.0; 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn logits(&self, x: &[f64]) -> [f64; 2] {
        [
            dot(&self.weights[0], x) + self.bias[0],
            dot(&self.weights[1], x) + self.bias[1],
        ]
    }

    /// Positive-class margin `z1 - z0`; the probability is its logistic.
    pub fn margin(&self, x: &[f64]) -> f64 {
        let [z0, z1] = self.logits(x);
        z1 - z0
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }

    /// Mean cross-entropy over a labeled set.
    pub fn log_loss(&self, features: &[Vec<f64>], labels: &[bool]) -> f64 {
        let n = features.len().max(1) as f64;
        features
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let m = self.margin(x);
                if y {
                    softplus(-m)
                } else {
                    softplus(m)
                }
            })
            .sum::<f64>()
            / n
    }

    fn to_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(2 * self.dim() + 2);
        p.extend_from_slice(&self.weights[0]);
        p.extend_from_slice(&self.weights[1]);
        p.extend_from_slice(&self.bias);
        p
    }

    fn from_params(params: &[f64], dim: usize) -> Self {
        Self {
            weights: [params[..dim].to_vec(), params[dim..2 * dim].to_vec()],
            bias: [params[2 * dim], params[2 * dim + 1]],
        }
    }

    /// Full-batch fit of mean cross-entropy plus `l2 / 2 · ‖W‖²`.
    pub fn fit(features: &[Vec<f64>], labels: &[bool], dim: usize, l2: f64) -> Self {
        let n = features.len().max(1) as f64;
        let objective = |params: &[f64], grad: &mut [f64]| {
            let head = Self::from_params(params, dim);
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for (x, &y) in features.iter().zip(labels) {
                let m = head.margin(x);
                // d(loss)/d(z1) = p - y and d(loss)/d(z0) = y - p.
                let target = if y { 1.0 } else { 0.0 };
                loss += if y { softplus(-m) } else { softplus(m) };
                let r = sigmoid(m) - target;
                for (k, &xi) in x.iter().enumerate() {
                    grad[k] -= r * xi;
                    grad[dim + k] += r * xi;
                }
                grad[2 * dim] -= r;
                grad[2 * dim + 1] += r;
            }
            grad.iter_mut().for_each(|g| *g /= n);
            for (g, w) in grad[..2 * dim].iter_mut().zip(&params[..2 * dim]) {
                *g += l2 * w;
            }
            let penalty = 0.5 * l2 * params[..2 * dim].iter().map(|w| w * w).sum::<f64>();
            loss / n + penalty
        };
        let options = MinimizeOptions {
            max_iterations: 3_000,
            gradient_tolerance: 1e-7,
        };
        let params = minimize(objective, Self::zeros(dim).to_params(), options);
        Self::from_params(&params, dim)
    }

    /// Mini-batch SGD with early stopping on validation loss. Returns the
    /// best head seen and the number of epochs run.
    pub fn fit_sgd(
        train: (&[Vec<f64>], &[bool]),
        validation: Option<(&[Vec<f64>], &[bool])>,
        dim: usize,
        schedule: SgdSchedule,
    ) -> (Self, usize) {
        const PATIENCE: usize = 3;
        let (features, labels) = train;
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        let mut head = Self::zeros(dim);
        let mut order: Vec<usize> = (0..features.len()).collect();

        let mut best = head.clone();
        let mut best_loss = f64::INFINITY;
        let mut stale = 0;
        let mut epochs_run = 0;
        for _ in 0..schedule.epochs {
            epochs_run += 1;
            order.shuffle(&mut rng);
            for batch in order.chunks(schedule.batch_size.max(1)) {
                let scale = schedule.learning_rate / batch.len() as f64;
                let mut grad_w = vec![0.0; dim];
                let mut grad_b = 0.0;
                for &i in batch {
                    let r = head.probability(&features[i]) - if labels[i] { 1.0 } else { 0.0 };
                    for (g, xi) in grad_w.iter_mut().zip(&features[i]) {
                        *g += r * xi;
                    }
                    grad_b += r;
                }
                let [negative, positive] = &mut head.weights;
                for ((wn, wp), g) in negative.iter_mut().zip(positive.iter_mut()).zip(&grad_w) {
                    *wp -= scale * g;
                    *wn += scale * g;
                }
                head.bias[1] -= scale * grad_b;
                head.bias[0] += scale * grad_b;
            }

            let Some((vx, vy)) = validation else {
                best = head.clone();
                continue;
            };
            let loss = head.log_loss(vx, vy);
            if loss < best_loss {
                best_loss = loss;
                best = head.clone();
                stale = 0;
            } else {
                stale += 1;
                if stale >= PATIENCE {
                    break;
                }
            }
        }
        (best, epochs_run)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SgdSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}
