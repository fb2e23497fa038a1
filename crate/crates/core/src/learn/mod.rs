//! The seven classifiers and their JSON model format.

mod bayes;
mod knn;
mod linear;
mod mlp;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

pub use bayes::GaussianNb;
pub use knn::Knn;
pub use linear::{logreg_gradient, logreg_loss, LinearModel};
pub use mlp::Mlp;
pub use tree::{Forest, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training set holds a single class")]
    SingleClassTraining,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid classifier spec: {0}")]
    InvalidSpec(String),
    #[error("model format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Tree,
    Forest,
    Nb,
    Knn,
    Logreg,
    Svm,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::Tree,
        ClassifierKind::Forest,
        ClassifierKind::Nb,
        ClassifierKind::Knn,
        ClassifierKind::Logreg,
        ClassifierKind::Svm,
        ClassifierKind::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Tree => "tree",
            ClassifierKind::Forest => "forest",
            ClassifierKind::Nb => "nb",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Logreg => "logreg",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Mlp => "mlp",
        }
    }

    /// Learners that see min-max-scaled inputs.
    pub fn uses_scaler(self) -> bool {
        matches!(
            self,
            ClassifierKind::Knn | ClassifierKind::Logreg | ClassifierKind::Svm | ClassifierKind::Mlp
        )
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown classifier `{s}` (expected tree, forest, nb, knn, logreg, svm or mlp)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub tree_min_leaf: usize,
    pub forest_trees: usize,
    pub forest_bootstrap: bool,
    /// Attributes tried per split; 0 selects floor(log2(d)) + 1.
    pub forest_attributes: usize,
    pub knn_k: usize,
    pub logreg_lr: f64,
    pub logreg_epochs: usize,
    pub logreg_l2: f64,
    pub svm_c: f64,
    pub svm_lr: f64,
    pub svm_epochs: usize,
    pub mlp_layers: Vec<usize>,
    pub mlp_lr: f64,
    pub mlp_momentum: f64,
    pub mlp_epochs: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            tree_min_leaf: 2,
            forest_trees: 200,
            forest_bootstrap: true,
            forest_attributes: 0,
            knn_k: 1,
            logreg_lr: 0.1,
            logreg_epochs: 1000,
            logreg_l2: 1e-8,
            svm_c: 1.0,
            svm_lr: 0.1,
            svm_epochs: 1000,
            mlp_layers: vec![13, 13, 13],
            mlp_lr: 0.3,
            mlp_momentum: 0.2,
            mlp_epochs: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            hyperparameters: Hyperparameters::default(),
            seed: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Applies `key=value` overrides such as `forest.trees=50` or
    /// `mlp.layers=8,8`.
    pub fn set(&mut self, assignment: &str) -> Result<(), LearnError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| LearnError::InvalidSpec(format!("`{assignment}` is not key=value")))?;
        let bad = || LearnError::InvalidSpec(format!("bad value for {key}: `{value}`"));
        let h = &mut self.hyperparameters;
        let int = || value.trim().parse::<usize>().map_err(|_| bad());
        let float = || value.trim().parse::<f64>().map_err(|_| bad());
        match key.trim() {
            "seed" => self.seed = value.trim().parse().map_err(|_| bad())?,
            "tree.min_leaf" => h.tree_min_leaf = int()?,
            "forest.trees" => h.forest_trees = int()?,
            "forest.bootstrap" => h.forest_bootstrap = value.trim().parse().map_err(|_| bad())?,
            "forest.attributes" => h.forest_attributes = int()?,
            "knn.k" => h.knn_k = int()?,
            "logreg.lr" => h.logreg_lr = float()?,
            "logreg.epochs" => h.logreg_epochs = int()?,
            "logreg.l2" => h.logreg_l2 = float()?,
            "svm.c" => h.svm_c = float()?,
            "svm.lr" => h.svm_lr = float()?,
            "svm.epochs" => h.svm_epochs = int()?,
            "mlp.layers" => {
                h.mlp_layers = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?
            }
            "mlp.lr" => h.mlp_lr = float()?,
            "mlp.momentum" => h.mlp_momentum = float()?,
            "mlp.epochs" => h.mlp_epochs = int()?,
            other => return Err(LearnError::InvalidSpec(format!("unknown hyperparameter `{other}`"))),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let h = &self.hyperparameters;
        if h.forest_trees == 0 {
            return Err(LearnError::InvalidSpec("forest.trees must be at least 1".into()));
        }
        if h.mlp_layers.contains(&0) {
            return Err(LearnError::InvalidSpec("mlp layers must be at least 1 wide".into()));
        }
        if h.knn_k == 0 || h.tree_min_leaf == 0 {
            return Err(LearnError::InvalidSpec(
                "knn.k and tree.min_leaf must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-attribute min-max scaling fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for (j, v) in r.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        Self { min, max }
    }

    /// Constant attributes map to 0.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    (v - self.min[j]) / range
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Parameters {
    Tree { root: TreeNode },
    Forest(Forest),
    Nb(GaussianNb),
    Knn(Knn),
    Linear(LinearModel),
    Mlp(Mlp),
}

/// A trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub version: u32,
    pub spec: ClassifierSpec,
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    pub parameters: Parameters,
}

pub fn train(spec: &ClassifierSpec, data: &Dataset) -> Result<Model, LearnError> {
    spec.validate()?;
    if data.is_empty() {
        return Err(LearnError::EmptyTraining);
    }
    if !data.has_both_classes() {
        return Err(LearnError::SingleClassTraining);
    }
    let raw = data.rows();
    let targets = data.targets();
    let scaler = spec.kind.uses_scaler().then(|| Scaler::fit(&raw));
    let scaled: Vec<Vec<f64>> = match &scaler {
        Some(s) => raw.iter().map(|r| s.transform(r)).collect(),
        None => raw.iter().map(|r| r.to_vec()).collect(),
    };
    let h = &spec.hyperparameters;
    let parameters = match spec.kind {
        ClassifierKind::Tree => Parameters::Tree {
            root: tree::grow_tree(&scaled, &targets, h.tree_min_leaf),
        },
        ClassifierKind::Forest => Parameters::Forest(Forest::train(&scaled, &targets, h, spec.seed)),
        ClassifierKind::Nb => Parameters::Nb(GaussianNb::train(&scaled, &targets)),
        ClassifierKind::Knn => Parameters::Knn(Knn::train(&scaled, &targets, h.knn_k)),
        ClassifierKind::Logreg => Parameters::Linear(LinearModel::train_logreg(&scaled, &targets, h)),
        ClassifierKind::Svm => Parameters::Linear(LinearModel::train_svm(&scaled, &targets, h)),
        ClassifierKind::Mlp => Parameters::Mlp(Mlp::train(&scaled, &targets, h, spec.seed)),
    };
    Ok(Model {
        version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        attributes: data.attribute_ids().into_iter().map(String::from).collect(),
        scaler,
        parameters,
    })
}

impl Model {
    /// Score for the defective class, in [0, 1].
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64, LearnError> {
        if row.len() != self.attributes.len() {
            return Err(LearnError::SchemaMismatch(format!(
                "model expects {} attributes, got {}",
                self.attributes.len(),
                row.len()
            )));
        }
        let x = match &self.scaler {
            Some(s) => s.transform(row),
            None => row.to_vec(),
        };
        Ok(match &self.parameters {
            Parameters::Tree { root } => root.predict(&x),
            Parameters::Forest(f) => f.predict(&x),
            Parameters::Nb(nb) => nb.predict(&x),
            Parameters::Knn(k) => k.predict(&x),
            Parameters::Linear(l) => l.predict(&x),
            Parameters::Mlp(m) => m.predict(&x),
        })
    }

    pub fn predict_label(&self, row: &[f64]) -> Result<bool, LearnError> {
        Ok(self.predict_proba(row)? >= 0.5)
    }

    /// Scores of every instance; the attribute lists must match.
    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>, LearnError> {
        let ids = data.attribute_ids();
        if ids != self.attributes.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(LearnError::SchemaMismatch(format!(
                "model trained on [{}], data has [{}]",
                self.attributes.join(","),
                ids.join(",")
            )));
        }
        data.rows().into_iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn to_json(&self) -> Result<String, LearnError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Model, LearnError> {
        let model: Model = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(LearnError::UnsupportedVersion(model.version));
        }
        Ok(model)
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
