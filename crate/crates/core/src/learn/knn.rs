use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<bool>,
}

impl Knn {
    pub(crate) fn train(rows: &[Vec<f64>], targets: &[bool], k: usize) -> Knn {
        Knn {
            k,
            points: rows.to_vec(),
            targets: targets.to_vec(),
        }
    }

    /// Share of defective instances among the k nearest; equal distances
    /// keep training order.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(d.len());
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let hits = d[..k].iter().filter(|(_, i)| self.targets[*i]).count();
        hits as f64 / k as f64
    }
}
