use serde::{Deserialize, Serialize};

use super::{sigmoid, Hyperparameters};

/// Weights and bias of a linear scorer; the score is the sigmoid of the
/// margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn margin(params: &[f64], x: &[f64]) -> f64 {
    let (w, b) = params.split_at(params.len() - 1);
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[0]
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log loss plus `l2 / 2 * |w|^2`; `params` holds the weights
/// followed by the bias.
pub fn logreg_loss(params: &[f64], rows: &[Vec<f64>], targets: &[bool], l2: f64) -> f64 {
    let n = rows.len() as f64;
    let data: f64 = rows
        .iter()
        .zip(targets)
        .map(|(x, &t)| {
            let z = margin(params, x);
            softplus(z) - if t { z } else { 0.0 }
        })
        .sum::<f64>()
        / n;
    let w = &params[..params.len() - 1];
    data + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

pub fn logreg_gradient(params: &[f64], rows: &[Vec<f64>], targets: &[bool], l2: f64) -> Vec<f64> {
    let d = params.len() - 1;
    let n = rows.len() as f64;
    let mut g = vec![0.0; d + 1];
    for (x, &t) in rows.iter().zip(targets) {
        let e = sigmoid(margin(params, x)) - if t { 1.0 } else { 0.0 };
        for j in 0..d {
            g[j] += e * x[j];
        }
        g[d] += e;
    }
    for j in 0..=d {
        g[j] /= n;
        if j < d {
            g[j] += l2 * params[j];
        }
    }
    g
}

impl LinearModel {
    fn from_params(mut params: Vec<f64>) -> LinearModel {
        let bias = params.pop().unwrap_or(0.0);
        LinearModel { weights: params, bias }
    }

    /// Batch gradient descent from zero weights.
    pub(crate) fn train_logreg(rows: &[Vec<f64>], targets: &[bool], h: &Hyperparameters) -> LinearModel {
        let mut params = vec![0.0; rows[0].len() + 1];
        for _ in 0..h.logreg_epochs {
            let g = logreg_gradient(&params, rows, targets, h.logreg_l2);
            for (p, g) in params.iter_mut().zip(g) {
                *p -= h.logreg_lr * g;
            }
        }
        LinearModel::from_params(params)
    }

    /// Subgradient descent on `lambda / 2 * |w|^2 + mean hinge` with
    /// `lambda = 1 / (C n)` and a step decaying as `lr / sqrt(t)`.
    pub(crate) fn train_svm(rows: &[Vec<f64>], targets: &[bool], h: &Hyperparameters) -> LinearModel {
        let d = rows[0].len();
        let n = rows.len() as f64;
        let lambda = 1.0 / (h.svm_c * n);
        let mut params = vec![0.0; d + 1];
        for epoch in 0..h.svm_epochs {
            let mut g = vec![0.0; d + 1];
            for (x, &t) in rows.iter().zip(targets) {
                let y = if t { 1.0 } else { -1.0 };
                if y * margin(&params, x) < 1.0 {
                    for j in 0..d {
                        g[j] -= y * x[j];
                    }
                    g[d] -= y;
                }
            }
            let step = h.svm_lr / ((epoch + 1) as f64).sqrt();
            for j in 0..=d {
                let reg = if j < d { lambda * params[j] } else { 0.0 };
                params[j] -= step * (g[j] / n + reg);
            }
        }
        LinearModel::from_params(params)
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}
