use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassLabel, Dataset, DatasetError, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k: usize,
    pub percent: u32,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k: 5,
            percent: 100,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteReport {
    pub minority: ClassLabel,
    pub minority_before: usize,
    pub minority_after: usize,
    pub majority: usize,
    pub synthetic: usize,
    /// majority / minority, before and after
    pub ratio_before: f64,
    pub ratio_after: f64,
    /// Indices into the input of the two parents of each synthetic instance.
    pub parents: Vec<(usize, usize)>,
}

fn scaled(values: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    values
        .iter()
        .zip(bounds)
        .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `v + gap * (n - v)`, kept inside the parents' range.
fn interpolate(v: &[f64], n: &[f64], gap: f64) -> Vec<f64> {
    v.iter()
        .zip(n)
        .map(|(x, y)| (x + gap * (y - x)).clamp(x.min(*y), x.max(*y)))
        .collect()
}

/// Oversamples the minority class (defective on ties). Neighbors are found
/// on min-max-scaled attributes; synthetic values interpolate raw values.
pub fn smote_balance(train: &Dataset, cfg: SmoteConfig) -> Result<(Dataset, SmoteReport), DatasetError> {
    let (d, c) = train.class_counts();
    let minority = if d <= c {
        ClassLabel::Defective
    } else {
        ClassLabel::Clean
    };
    let origin: Vec<usize> = (0..train.len())
        .filter(|&i| train.instances()[i].label == minority)
        .collect();
    let pool: Vec<&Instance> = origin.iter().map(|&i| &train.instances()[i]).collect();
    let m = pool.len();
    if m < cfg.k + 1 || cfg.k == 0 {
        return Err(DatasetError::TooFewMinority {
            needed: cfg.k + 1,
            found: m,
        });
    }
    let bounds = train.bounds();
    let points: Vec<Vec<f64>> = pool.iter().map(|i| scaled(&i.values, &bounds)).collect();
    let neighbors: Vec<Vec<usize>> = (0..m)
        .map(|a| {
            let mut others: Vec<(f64, usize)> = (0..m)
                .filter(|&b| b != a)
                .map(|b| (sq_dist(&points[a], &points[b]), b))
                .collect();
            others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            others.into_iter().take(cfg.k).map(|(_, b)| b).collect()
        })
        .collect();

    let count = cfg.percent as usize * m / 100;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut instances = train.instances().to_vec();
    let mut parents = Vec::with_capacity(count);
    for s in 0..count {
        let a = s % m;
        let b = neighbors[a][rng.random_range(0..neighbors[a].len())];
        let gap: f64 = rng.sample(Open01);
        let (v, n) = (pool[a], pool[b]);
        parents.push((origin[a], origin[b]));
        let values = interpolate(&v.values, &n.values, gap);
        instances.push(Instance {
            project: v.project.clone(),
            scope: v.scope.clone(),
            scope_index: v.scope_index,
            name: format!("smote#{s}:{}", v.name),
            values,
            label: minority,
        });
    }

    let majority = train.len() - m;
    let ratio = |x: usize| if x == 0 { 0.0 } else { majority as f64 / x as f64 };
    let report = SmoteReport {
        minority,
        minority_before: m,
        minority_after: m + count,
        majority,
        synthetic: count,
        ratio_before: ratio(m),
        ratio_after: ratio(m + count),
        parents,
    };
    Ok((Dataset::new(train.attributes().to_vec(), instances)?, report))
}
