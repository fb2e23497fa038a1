use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Hyperparameters};

/// Fully connected sigmoid network with one output unit, trained online on
/// squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Units per layer, input first, output (1) last.
    pub sizes: Vec<usize>,
    /// Row-major `sizes[l+1] x sizes[l]` matrices.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(inputs: usize, hidden: &[usize], seed: u64) -> Mlp {
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Mlp { sizes, weights, biases }
    }

    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for l in 0..self.weights.len() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &acts[l];
            let next = (0..n_out)
                .map(|o| {
                    let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                    sigmoid(row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>() + self.biases[l][o])
                })
                .collect();
            acts.push(next);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x).last().expect("output layer")[0]
    }

    /// Gradient of `0.5 * (out - target)^2` for one sample, in parameter
    /// order (per layer: weights then biases).
    fn sample_gradient(&self, x: &[f64], target: f64, out: &mut [f64]) {
        let acts = self.forward(x);
        let layers = self.weights.len();
        let offsets = self.offsets();
        let o = acts[layers][0];
        let mut delta = vec![(o - target) * o * (1.0 - o)];
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let base = offsets[l];
            for j in 0..n_out {
                for i in 0..n_in {
                    out[base + j * n_in + i] += delta[j] * acts[l][i];
                }
                out[base + n_out * n_in + j] += delta[j];
            }
            if l > 0 {
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|j| self.weights[l][j * n_in + i] * delta[j]).sum();
                        let a = acts[l][i];
                        back * a * (1.0 - a)
                    })
                    .collect();
            }
        }
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.weights.len());
        let mut acc = 0;
        for l in 0..self.weights.len() {
            offs.push(acc);
            acc += self.weights[l].len() + self.biases[l].len();
        }
        offs
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for l in 0..self.weights.len() {
            p.extend_from_slice(&self.weights[l]);
            p.extend_from_slice(&self.biases[l]);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in 0..self.weights.len() {
            for w in self.weights[l].iter_mut().chain(self.biases[l].iter_mut()) {
                *w = p[k];
                k += 1;
            }
        }
    }

    /// Summed squared error, halved.
    pub fn loss(&self, rows: &[Vec<f64>], targets: &[bool]) -> f64 {
        rows.iter()
            .zip(targets)
            .map(|(x, &t)| {
                let e = self.predict(x) - if t { 1.0 } else { 0.0 };
                0.5 * e * e
            })
            .sum()
    }

    pub fn gradient(&self, rows: &[Vec<f64>], targets: &[bool]) -> Vec<f64> {
        let mut g = vec![0.0; self.params().len()];
        for (x, &t) in rows.iter().zip(targets) {
            self.sample_gradient(x, if t { 1.0 } else { 0.0 }, &mut g);
        }
        g
    }

    /// Online backpropagation with momentum; instances are visited in a
    /// seeded shuffled order each epoch.
    pub(crate) fn train(rows: &[Vec<f64>], targets: &[bool], h: &Hyperparameters, seed: u64) -> Mlp {
        let mut net = Mlp::new(rows[0].len(), &h.mlp_layers, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let mut params = net.params();
        let mut velocity = vec![0.0; params.len()];
        let mut grad = vec![0.0; params.len()];
        let mut order: Vec<usize> = (0..rows.len()).collect();
        for _ in 0..h.mlp_epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                grad.iter_mut().for_each(|g| *g = 0.0);
                net.sample_gradient(&rows[i], if targets[i] { 1.0 } else { 0.0 }, &mut grad);
                for k in 0..params.len() {
                    velocity[k] = h.mlp_momentum * velocity[k] - h.mlp_lr * grad[k];
                    params[k] += velocity[k];
                }
                net.set_params(&params);
            }
        }
        net
    }
}
