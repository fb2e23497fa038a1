use serde::{Deserialize, Serialize};

const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes; index 0 is the clean class, 1 defective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

impl GaussianNb {
    pub(crate) fn train(rows: &[Vec<f64>], targets: &[bool]) -> GaussianNb {
        let d = rows[0].len();
        let mut counts = [0usize; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for (r, &t) in rows.iter().zip(targets) {
            let c = t as usize;
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(r) {
                *m += v;
            }
        }
        for c in 0..2 {
            for m in &mut means[c] {
                *m /= counts[c].max(1) as f64;
            }
        }
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        for (r, &t) in rows.iter().zip(targets) {
            let c = t as usize;
            for j in 0..d {
                let e = r[j] - means[c][j];
                variances[c][j] += e * e;
            }
        }
        for c in 0..2 {
            for v in &mut variances[c] {
                *v = (*v / counts[c].max(1) as f64).max(VARIANCE_FLOOR);
            }
        }
        let n = rows.len() as f64;
        GaussianNb {
            priors: [counts[0] as f64 / n, counts[1] as f64 / n],
            means,
            variances,
        }
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut s = self.priors[c].ln();
        for (j, v) in x.iter().enumerate() {
            let var = self.variances[c][j];
            let e = v - self.means[c][j];
            s += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - e * e / (2.0 * var);
        }
        s
    }

    /// Posterior of the defective class.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let l0 = self.log_joint(0, x);
        let l1 = self.log_joint(1, x);
        super::sigmoid(l1 - l0)
    }
}
