use std::cmp::Ordering;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliefConfig {
    pub neighbors: usize,
    /// Instances to sample; `None` uses all of them.
    pub sample: Option<usize>,
    pub seed: u64,
    /// When unset, classes smaller than `neighbors + 1` use fewer
    /// neighbors instead of failing.
    pub strict: bool,
}

impl Default for ReliefConfig {
    fn default() -> Self {
        Self {
            neighbors: 10,
            sample: None,
            seed: 1,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAttribute {
    pub id: String,
    pub index: usize,
    pub weight: f64,
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// ReliefF weights on min-max-scaled attributes, highest first; equal
/// weights are ordered by attribute id.
pub fn relieff_rank(ds: &Dataset, cfg: &ReliefConfig) -> Result<Vec<RankedAttribute>, EvalError> {
    let (d_count, c_count) = ds.class_counts();
    let smallest = d_count.min(c_count);
    if cfg.strict && smallest < cfg.neighbors + 1 {
        return Err(EvalError::TooFewInstances {
            needed: cfg.neighbors + 1,
            found: smallest,
        });
    }
    let width = ds.width();
    let bounds = ds.bounds();
    // canonical instance order keeps the result independent of input order
    let mut rows: Vec<(Vec<f64>, bool)> = ds
        .instances()
        .iter()
        .map(|i| {
            let scaled = i
                .values
                .iter()
                .zip(&bounds)
                .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                .collect();
            (scaled, i.label.is_defective())
        })
        .collect();
    rows.sort_by(|a, b| lexicographic(&a.0, &b.0).then(a.1.cmp(&b.1)));

    let n = rows.len();
    let picked: Vec<usize> = match cfg.sample {
        Some(m) if m < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut v = sample(&mut rng, n, m).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..n).collect(),
    };
    let m = picked.len() as f64;
    let mut weights = vec![0.0; width];
    let diff = |a: &[f64], b: &[f64], j: usize| (a[j] - b[j]).abs();
    for &r in &picked {
        let (x, class) = (&rows[r].0, rows[r].1);
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&o| o != r)
            .map(|o| ((0..width).map(|j| diff(x, &rows[o].0, j)).sum(), o))
            .collect();
        others.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| lexicographic(&rows[a.1].0, &rows[b.1].0))
                .then(a.1.cmp(&b.1))
        });
        let hits: Vec<usize> = others
            .iter()
            .filter(|(_, o)| rows[*o].1 == class)
            .map(|(_, o)| *o)
            .take(cfg.neighbors)
            .collect();
        let misses: Vec<usize> = others
            .iter()
            .filter(|(_, o)| rows[*o].1 != class)
            .map(|(_, o)| *o)
            .take(cfg.neighbors)
            .collect();
        for (j, w) in weights.iter_mut().enumerate() {
            if !hits.is_empty() {
                let h: f64 = hits.iter().map(|&o| diff(x, &rows[o].0, j)).sum();
                *w -= h / (m * hits.len() as f64);
            }
            if !misses.is_empty() {
                let s: f64 = misses.iter().map(|&o| diff(x, &rows[o].0, j)).sum();
                *w += s / (m * misses.len() as f64);
            }
        }
    }

    let mut ranked: Vec<RankedAttribute> = ds
        .attributes()
        .iter()
        .enumerate()
        .map(|(index, a)| RankedAttribute {
            id: a.id.clone(),
            index,
            weight: weights[index],
        })
        .collect();
    ranked.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.id.cmp(&b.id)));
    Ok(ranked)
}

/// Column indices of the top `fraction` of a ranking, rounded to the
/// nearest count, at least one.
pub fn select_top(ranking: &[RankedAttribute], fraction: f64) -> Vec<usize> {
    let k = ((ranking.len() as f64 * fraction).round() as usize).clamp(1, ranking.len().max(1));
    ranking.iter().take(k).map(|r| r.index).collect()
}
