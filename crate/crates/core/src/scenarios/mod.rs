//! Experiment drivers. Each scenario trains and evaluates a set of cells
//! and writes a directory with `summary.csv`, `cells/*.json` and
//! `roc/*.csv`.

mod compare;
mod cross;
mod grid;
mod incremental;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{feature_file_map, rq3_compare, FeatureFileMap, MappingCounts};
pub use cross::{pair_count, rq5_cross_project};
pub use grid::{rq1_grid, rq2_file_level};
pub use incremental::{check_no_leakage, rq4_incremental, truncated_history};

use crate::dataset::{format_number, smote_balance, Dataset, DatasetError, SmoteConfig, SplitSpec};
use crate::eval::{evaluate, EvalError, EvalReport, ReliefConfig};
use crate::learn::{train, ClassifierKind, ClassifierSpec, Hyperparameters, LearnError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("feature {feature} of {project} scope {scope} has no mapped files")]
    UnmappedFeature {
        project: String,
        scope: usize,
        feature: String,
    },
    #[error("split of {0} puts a test scope before a training scope")]
    UnsoundSplit(String),
    #[error("{scenario} needs at least {needed} projects, found {found}")]
    TooFewProjects {
        scenario: &'static str,
        needed: usize,
        found: usize,
    },
    #[error("i/o on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Knobs shared by all scenarios. Every random choice derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub seed: u64,
    /// Training share of scopes in percent.
    pub target_ratio: f64,
    /// Per-project overrides of `target_ratio`.
    pub ratios: BTreeMap<String, f64>,
    pub smote: SmoteConfig,
    pub hyperparameters: Hyperparameters,
    pub relief: ReliefConfig,
    /// Classifier for the single-classifier scenarios (rq2 to rq5).
    pub classifier: ClassifierKind,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            target_ratio: 75.0,
            ratios: BTreeMap::new(),
            smote: SmoteConfig::default(),
            hyperparameters: Hyperparameters::default(),
            relief: ReliefConfig {
                strict: false,
                ..Default::default()
            },
            classifier: ClassifierKind::Forest,
        }
    }
}

impl ScenarioOptions {
    pub fn spec(&self, kind: ClassifierKind) -> ClassifierSpec {
        ClassifierSpec {
            kind,
            hyperparameters: self.hyperparameters.clone(),
            seed: self.seed,
        }
    }

    fn smote_config(&self) -> SmoteConfig {
        SmoteConfig {
            seed: self.seed,
            ..self.smote
        }
    }
}

pub const FLAG_UNBALANCED: &str = "unbalanced-training";
pub const FLAG_SINGLE_CLASS_TRAINING: &str = "single-class-training";
pub const FLAG_SINGLE_CLASS_TEST: &str = "single-class-test";

/// One trained-and-evaluated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Ordered (dimension, value) pairs identifying the cell.
    pub key: Vec<(String, String)>,
    pub attributes: Vec<String>,
    pub train_instances: usize,
    pub train_defective: usize,
    pub synthetic: usize,
    pub test_instances: usize,
    pub test_defective: usize,
    pub flags: Vec<String>,
    /// Absent when the cell was skipped.
    pub report: Option<EvalReport>,
}

impl Cell {
    fn new(key: &[(&str, String)]) -> Self {
        Cell {
            key: key.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            attributes: Vec::new(),
            train_instances: 0,
            train_defective: 0,
            synthetic: 0,
            test_instances: 0,
            test_defective: 0,
            flags: Vec::new(),
            report: None,
        }
    }

    pub fn value(&self, dimension: &str) -> Option<&str> {
        self.key.iter().find(|(k, _)| k == dimension).map(|(_, v)| v.as_str())
    }

    pub fn auc(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.auc)
    }

    /// File-name-safe identifier built from the key values.
    pub fn slug(&self) -> String {
        self.key
            .iter()
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join("_")
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || "+-._".contains(c) {
                    c
                } else {
                    '-'
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub id: String,
    pub cells: Vec<Cell>,
    pub splits: Vec<SplitSpec>,
    /// Extra CSV tables by file name.
    pub tables: BTreeMap<String, String>,
}

const SUMMARY_COLUMNS: [&str; 13] = [
    "train",
    "train_defective",
    "synthetic",
    "test",
    "test_defective",
    "auc",
    "precision",
    "recall",
    "f",
    "f_defective",
    "f_clean",
    "fp_rate",
    "flags",
];

impl ScenarioResult {
    fn new(id: &str) -> Self {
        Self {
            id: id.into(),
            cells: Vec::new(),
            splits: Vec::new(),
            tables: BTreeMap::new(),
        }
    }

    fn add_split(&mut self, spec: SplitSpec) -> Result<(), ScenarioError> {
        if let Some(bad) = spec.projects.iter().find(|p| !p.is_sound()) {
            return Err(ScenarioError::UnsoundSplit(bad.project.clone()));
        }
        self.splits.push(spec);
        Ok(())
    }

    pub fn summary_csv(&self) -> Result<String, ScenarioError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let dims: Vec<&str> = self
            .cells
            .first()
            .map(|c| c.key.iter().map(|(k, _)| k.as_str()).collect())
            .unwrap_or_default();
        w.write_record(dims.iter().copied().chain(SUMMARY_COLUMNS))?;
        let num = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        for c in &self.cells {
            let r = c.report.as_ref();
            let mut row: Vec<String> = c.key.iter().map(|(_, v)| v.clone()).collect();
            row.extend([
                c.train_instances.to_string(),
                c.train_defective.to_string(),
                c.synthetic.to_string(),
                c.test_instances.to_string(),
                c.test_defective.to_string(),
                num(c.auc()),
                num(r.map(|r| r.weighted.precision)),
                num(r.map(|r| r.weighted.recall)),
                num(r.map(|r| r.weighted.f)),
                num(r.map(|r| r.defective.f)),
                num(r.map(|r| r.clean.f)),
                num(r.map(|r| r.confusion.fp_rate())),
                c.flags.join(";"),
            ]);
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| ScenarioError::Io {
            path: "summary.csv".into(),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes the result under `dir`, replacing earlier cell and ROC files.
    pub fn write_dir(&self, dir: &Path) -> Result<(), ScenarioError> {
        let cells = dir.join("cells");
        let roc = dir.join("roc");
        for d in [&cells, &roc] {
            if d.exists() {
                fs::remove_dir_all(d).map_err(io_err(d))?;
            }
            fs::create_dir_all(d).map_err(io_err(d))?;
        }
        let summary = dir.join("summary.csv");
        fs::write(&summary, self.summary_csv()?).map_err(io_err(&summary))?;
        for c in &self.cells {
            let path = cells.join(format!("{}.json", c.slug()));
            let mut json = serde_json::to_string_pretty(c).expect("cell serializes");
            json.push('\n');
            fs::write(&path, json).map_err(io_err(&path))?;
            if let Some(r) = c.report.as_ref().filter(|r| r.auc.is_some()) {
                let path = roc.join(format!("{}.csv", c.slug()));
                fs::write(&path, r.roc_csv()).map_err(io_err(&path))?;
            }
        }
        for (name, body) in &self.tables {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io_err(&path))?;
        }
        let path = dir.join("splits.json");
        let mut json = serde_json::to_string_pretty(&self.splits).expect("splits serialize");
        json.push('\n');
        fs::write(&path, json).map_err(io_err(&path))?;
        Ok(())
    }
}

/// SMOTE when the minority class is large enough, otherwise the input and
/// a flag.
fn balance(train_ds: &Dataset, opts: &ScenarioOptions, cell: &mut Cell) -> Result<Dataset, ScenarioError> {
    match smote_balance(train_ds, opts.smote_config()) {
        Ok((balanced, report)) => {
            cell.synthetic = report.synthetic;
            Ok(balanced)
        }
        Err(DatasetError::TooFewMinority { .. }) => {
            cell.flags.push(FLAG_UNBALANCED.into());
            Ok(train_ds.clone())
        }
        Err(e) => Err(e.into()),
    }
}

/// Balances `train_ds`, trains `kind` and evaluates on `test`. Returns the
/// test scores, or `None` when training had a single class.
fn run_cell(
    kind: ClassifierKind,
    train_ds: &Dataset,
    test: &Dataset,
    opts: &ScenarioOptions,
    cell: &mut Cell,
) -> Result<Option<Vec<f64>>, ScenarioError> {
    cell.attributes = train_ds.attribute_ids().into_iter().map(String::from).collect();
    cell.train_instances = train_ds.len();
    cell.train_defective = train_ds.class_counts().0;
    cell.test_instances = test.len();
    cell.test_defective = test.class_counts().0;
    let balanced = balance(train_ds, opts, cell)?;
    let model = match train(&opts.spec(kind), &balanced) {
        Ok(m) => m,
        Err(LearnError::SingleClassTraining) => {
            cell.flags.push(FLAG_SINGLE_CLASS_TRAINING.into());
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    let scores = model.scores(test)?;
    let report = evaluate(&test.targets(), &scores)?;
    if report.auc.is_none() {
        cell.flags.push(FLAG_SINGLE_CLASS_TEST.into());
    }
    cell.report = Some(report);
    Ok(Some(scores))
}
