//! Confusion matrices, precision/recall/F, ROC analysis and attribute
//! rankings.

mod relief;
mod roc;
mod wrapper;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{format_number, ClassLabel};
use crate::learn::LearnError;

pub use relief::{relieff_rank, select_top, RankedAttribute, ReliefConfig};
pub use roc::{mann_whitney_auc, roc_auc, RocPoint};
pub use wrapper::wrapper_influence;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test labels hold a single class; ROC is undefined")]
    SingleClassTest,
    #[error("truths and scores differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("ReliefF needs {needed} instances per class, found {found}")]
    TooFewInstances { needed: usize, found: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("i/o on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Binary confusion matrix with defective as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_predictions(truths: &[bool], predicted: &[bool]) -> Confusion {
        let mut c = Confusion::default();
        for (&t, &p) in truths.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Instances truly in `class`.
    pub fn support(&self, class: ClassLabel) -> usize {
        match class {
            ClassLabel::Defective => self.tp + self.fn_,
            ClassLabel::Clean => self.fp + self.tn,
        }
    }

    /// The same matrix with the clean class as positive.
    pub fn swapped(&self) -> Confusion {
        Confusion {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total()).0
    }

    pub fn fp_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn).0
    }

    pub fn tp_rate(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_).0
    }
}

/// `num / den`, with 0/0 reported as 0 and flagged.
fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// Set when a score was 0/0 and reported as 0.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undefined: bool,
}

pub fn prf(c: &Confusion, class: ClassLabel) -> Prf {
    let c = match class {
        ClassLabel::Defective => *c,
        ClassLabel::Clean => c.swapped(),
    };
    let (precision, p_undef) = ratio(c.tp, c.tp + c.fp);
    let (recall, r_undef) = ratio(c.tp, c.tp + c.fn_);
    let (f, f_undef) = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Prf {
        precision,
        recall,
        f,
        undefined: p_undef || r_undef || f_undef,
    }
}

/// Support-weighted mean; zero total support gives 0.
pub fn weighted_average(values: &[f64], supports: &[usize]) -> f64 {
    let total: usize = supports.iter().sum();
    if total == 0 {
        return 0.0;
    }
    values.iter().zip(supports).map(|(v, s)| v * *s as f64).sum::<f64>() / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub defective: Prf,
    pub clean: Prf,
    pub weighted: Prf,
    pub roc: Vec<RocPoint>,
    /// Absent when the test labels hold one class.
    pub auc: Option<f64>,
}

/// Evaluates scores at the 0.5 threshold.
pub fn evaluate(truths: &[bool], scores: &[f64]) -> Result<EvalReport, EvalError> {
    if truths.len() != scores.len() {
        return Err(EvalError::LengthMismatch(truths.len(), scores.len()));
    }
    let predicted: Vec<bool> = scores.iter().map(|s| *s >= 0.5).collect();
    let confusion = Confusion::from_predictions(truths, &predicted);
    let defective = prf(&confusion, ClassLabel::Defective);
    let clean = prf(&confusion, ClassLabel::Clean);
    let supports = [
        confusion.support(ClassLabel::Defective),
        confusion.support(ClassLabel::Clean),
    ];
    let weighted = Prf {
        precision: weighted_average(&[defective.precision, clean.precision], &supports),
        recall: weighted_average(&[defective.recall, clean.recall], &supports),
        f: weighted_average(&[defective.f, clean.f], &supports),
        undefined: defective.undefined || clean.undefined,
    };
    let (roc, auc) = match roc_auc(truths, scores) {
        Ok((roc, auc)) => (roc, Some(auc)),
        Err(EvalError::SingleClassTest) => (Vec::new(), None),
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        confusion,
        defective,
        clean,
        weighted,
        roc,
        auc,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for p in &self.roc {
            out.push_str(&format!("{},{}\n", format_number(p.fpr), format_number(p.tpr)));
        }
        out
    }

    pub fn write_roc_csv(&self, path: &Path) -> Result<(), EvalError> {
        fs::write(path, self.roc_csv()).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}
