use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use featforge::learn::{ClassifierKind, ClassifierSpec, Hyperparameters};
use serde::Deserialize;

fn default_glob() -> String {
    "*".into()
}

fn default_ratio() -> f64 {
    75.0
}

fn default_cache() -> PathBuf {
    PathBuf::from(".featforge-cache")
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectEntry {
    pub name: String,
    /// Local clone; relative paths are taken from the config file's directory.
    pub repo: PathBuf,
    #[serde(default = "default_glob")]
    pub tag_glob: String,
    /// Training share of releases in percent.
    #[serde(default = "default_ratio")]
    pub target_ratio: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub projects: Vec<ProjectEntry>,
    #[serde(default = "default_cache")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Replaces the built-in bug-fix keywords.
    #[serde(default)]
    pub keywords: Option<Vec<String>>,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<ProjectConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ProjectConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in &mut cfg.projects {
            if p.repo.is_relative() {
                p.repo = base.join(&p.repo);
            }
        }
        if cfg.cache_dir.is_relative() {
            cfg.cache_dir = base.join(&cfg.cache_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.projects.is_empty() {
            bail!("config lists no projects");
        }
        let mut seen = BTreeSet::new();
        for p in &self.projects {
            if !seen.insert(p.name.as_str()) {
                bail!("project name `{}` appears twice", p.name);
            }
            if !(p.target_ratio > 0.0 && p.target_ratio < 100.0) {
                bail!("target_ratio of `{}` must lie strictly between 0 and 100", p.name);
            }
        }
        if let Some(k) = &self.keywords {
            if k.is_empty() {
                bail!("keyword list is empty");
            }
        }
        ClassifierSpec {
            kind: ClassifierKind::Forest,
            hyperparameters: self.hyperparameters.clone(),
            seed: self.seed,
        }
        .validate()?;
        Ok(())
    }

    pub fn ratios(&self) -> BTreeMap<String, f64> {
        self.projects.iter().map(|p| (p.name.clone(), p.target_ratio)).collect()
    }
}
