use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Hyperparameters;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        /// Share of defective training instances reaching the leaf.
        p: f64,
        n: usize,
    },
    Split {
        attribute: usize,
        threshold: f64,
        /// Values <= threshold.
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { p, .. } => return *p,
                TreeNode::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                } => node = if x[*attribute] <= *threshold { left } else { right },
            }
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn split_info(left: usize, n: usize) -> f64 {
    entropy(left, n)
}

struct Candidate {
    attribute: usize,
    threshold: f64,
    gain: f64,
    ratio: f64,
}

/// Best information-gain threshold of one attribute.
fn best_threshold(
    rows: &[Vec<f64>],
    targets: &[bool],
    idx: &[usize],
    attribute: usize,
    min_leaf: usize,
) -> Option<Candidate> {
    let n = idx.len();
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| rows[a][attribute].total_cmp(&rows[b][attribute]).then(a.cmp(&b)));
    let total_pos = order.iter().filter(|&&i| targets[i]).count();
    let base = entropy(total_pos, n);
    let mut left_pos = 0;
    let mut best: Option<(f64, usize)> = None;
    for k in 0..n - 1 {
        if targets[order[k]] {
            left_pos += 1;
        }
        let left_n = k + 1;
        let (a, b) = (rows[order[k]][attribute], rows[order[k + 1]][attribute]);
        if a == b || left_n < min_leaf || n - left_n < min_leaf {
            continue;
        }
        let right_n = n - left_n;
        let cond = (left_n as f64 * entropy(left_pos, left_n)
            + right_n as f64 * entropy(total_pos - left_pos, right_n))
            / n as f64;
        let gain = base - cond;
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, k));
        }
    }
    let (gain, k) = best?;
    if gain <= 1e-12 {
        return None;
    }
    let (a, b) = (rows[order[k]][attribute], rows[order[k + 1]][attribute]);
    let mut threshold = a + (b - a) / 2.0;
    if threshold >= b {
        threshold = a;
    }
    let info = split_info(k + 1, n);
    Some(Candidate {
        attribute,
        threshold,
        gain,
        ratio: if info > 0.0 { gain / info } else { 0.0 },
    })
}

/// Among candidates with at least average gain, the highest gain ratio;
/// ties keep the lower attribute index.
fn choose(candidates: Vec<Candidate>) -> Option<Candidate> {
    if candidates.is_empty() {
        return None;
    }
    let avg = candidates.iter().map(|c| c.gain).sum::<f64>() / candidates.len() as f64;
    let mut best: Option<Candidate> = None;
    for c in candidates {
        if c.gain + 1e-12 < avg {
            continue;
        }
        if best.as_ref().is_none_or(|b| c.ratio > b.ratio) {
            best = Some(c);
        }
    }
    best
}

fn grow(
    rows: &[Vec<f64>],
    targets: &[bool],
    idx: Vec<usize>,
    min_leaf: usize,
    pick: &mut dyn FnMut(usize) -> Vec<usize>,
) -> TreeNode {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| targets[i]).count();
    let leaf = TreeNode::Leaf {
        p: if n == 0 { 0.0 } else { pos as f64 / n as f64 },
        n,
    };
    if pos == 0 || pos == n || n < 2 * min_leaf {
        return leaf;
    }
    let d = rows[idx[0]].len();
    let candidates = pick(d)
        .into_iter()
        .filter_map(|a| best_threshold(rows, targets, &idx, a, min_leaf))
        .collect();
    let Some(best) = choose(candidates) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| rows[i][best.attribute] <= best.threshold);
    if left.is_empty() || right.is_empty() {
        return leaf;
    }
    TreeNode::Split {
        attribute: best.attribute,
        threshold: best.threshold,
        left: Box::new(grow(rows, targets, left, min_leaf, pick)),
        right: Box::new(grow(rows, targets, right, min_leaf, pick)),
    }
}

/// Unpruned gain-ratio tree over all attributes.
pub(crate) fn grow_tree(rows: &[Vec<f64>], targets: &[bool], min_leaf: usize) -> TreeNode {
    grow(rows, targets, (0..rows.len()).collect(), min_leaf, &mut |d| {
        (0..d).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<TreeNode>,
}

impl Forest {
    pub(crate) fn train(rows: &[Vec<f64>], targets: &[bool], h: &Hyperparameters, seed: u64) -> Forest {
        let d = rows[0].len();
        let m = if h.forest_attributes == 0 {
            ((d as f64).log2().floor() as usize + 1).min(d)
        } else {
            h.forest_attributes.min(d)
        };
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..h.forest_trees).map(|_| master.next_u64()).collect();
        let trees = seeds
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let n = rows.len();
                let idx: Vec<usize> = if h.forest_bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut pick = |d: usize| {
                    let mut attrs = sample(&mut rng, d, m).into_vec();
                    attrs.sort_unstable();
                    attrs
                };
                grow(rows, targets, idx, h.tree_min_leaf, &mut pick)
            })
            .collect();
        Forest { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}
