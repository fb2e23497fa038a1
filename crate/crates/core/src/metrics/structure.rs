use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::mean;
use crate::context::ReleaseContext;
use crate::features::lexer::mask_text;
use crate::features::structure_profile;
use crate::repo::{RepoError, SnapshotSource};

static DECISION_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:if|for|while|case)\b").unwrap());

/// The six feature structure metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StructureMetrics {
    pub fnloc: f64,
    pub fcyco: f64,
    pub lofc: f64,
    pub ndep: f64,
    pub scat: f64,
    pub tanga: f64,
}

pub fn nonblank_loc(text: &str) -> u64 {
    text.lines().filter(|l| !l.trim().is_empty()).count() as u64
}

/// One plus the decision tokens outside comments, literals and
/// preprocessor lines.
pub fn cyclomatic_complexity(text: &str) -> u64 {
    let masked = mask_text(text.lines(), true);
    let mut decisions = 0u64;
    for line in &masked {
        if line.trim_start().starts_with('#') {
            continue;
        }
        decisions += DECISION_WORD.find_iter(line).count() as u64;
        decisions += line.matches("&&").count() as u64;
        decisions += line.matches("||").count() as u64;
        decisions += line.matches('?').count() as u64;
    }
    1 + decisions
}

#[derive(Debug, Clone)]
struct FileSnapshot {
    text: String,
    loc: u64,
    cyclomatic: u64,
}

/// File contents at a scope's snapshot commit, read once and shared by all
/// features of the scope.
#[derive(Debug, Clone, Default)]
pub struct ScopeSnapshots {
    files: BTreeMap<String, Option<FileSnapshot>>,
}

impl ScopeSnapshots {
    /// Reads every file implementing one of the scope's features.
    pub fn load(ctx: &ReleaseContext<'_>, source: &dyn SnapshotSource) -> Result<Self, RepoError> {
        let paths: BTreeSet<String> = ctx.features.iter().flat_map(|f| ctx.files_of(f)).collect();
        let Some(commit) = ctx.snapshot_commit() else {
            return Ok(Self::default());
        };
        let mut out = Self::default();
        for p in paths {
            let text = source.snapshot(&commit.hash, &p)?;
            out.insert(p, text);
        }
        Ok(out)
    }

    pub fn from_texts(texts: impl IntoIterator<Item = (String, Option<String>)>) -> Self {
        let mut out = Self::default();
        for (p, t) in texts {
            out.insert(p, t);
        }
        out
    }

    fn insert(&mut self, path: String, text: Option<String>) {
        let snap = text.map(|text| FileSnapshot {
            loc: nonblank_loc(&text),
            cyclomatic: cyclomatic_complexity(&text),
            text,
        });
        self.files.insert(path, snap);
    }

    pub fn text(&self, path: &str) -> Option<&str> {
        self.files.get(path)?.as_ref().map(|s| s.text.as_str())
    }

    pub fn absent_count(&self) -> usize {
        self.files.values().filter(|s| s.is_none()).count()
    }
}

/// Structure metrics of `feature` over its files at the scope snapshot.
/// Files absent there are left out of the averages.
pub fn feature_structure_metrics(
    feature: &str,
    ctx: &ReleaseContext<'_>,
    snapshots: &ScopeSnapshots,
) -> StructureMetrics {
    let present: Vec<(&String, &FileSnapshot)> = ctx
        .files_of(feature)
        .into_iter()
        .filter_map(|p| snapshots.files.get_key_value(&p))
        .filter_map(|(p, s)| s.as_ref().map(|s| (p, s)))
        .collect();
    if present.is_empty() {
        return StructureMetrics::default();
    }
    let texts: BTreeMap<String, String> = present.iter().map(|(p, s)| ((*p).clone(), s.text.clone())).collect();
    let profile = structure_profile(&texts, &BTreeSet::from([feature.to_string()])).get(feature);
    StructureMetrics {
        fnloc: mean(present.iter().map(|(_, s)| s.loc as f64)),
        fcyco: mean(present.iter().map(|(_, s)| s.cyclomatic as f64)),
        lofc: profile.lofc as f64,
        ndep: profile.ndep as f64,
        scat: profile.scat as f64,
        tanga: profile.tanga as f64,
    }
}
