//! Mined project history and the per-scope views metrics and labels are
//! computed over.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{self, extract_refs_with, is_c_family, Diagnostics, ScanMode};
use crate::repo::{CommitRecord, Release};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("release {0} not in history")]
    UnknownRelease(usize),
    #[error("commit {0} listed in a release but missing from the commit records")]
    MissingCommit(String),
}

/// Granularity of a dataset scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Release,
    Commit,
}

impl std::str::FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "release" => Ok(Level::Release),
            "commit" => Ok(Level::Commit),
            other => Err(format!("unknown level `{other}` (expected release or commit)")),
        }
    }
}

/// All mined commits of one project in chronological order, with the
/// feature references of every diff precomputed.
#[derive(Debug, Clone)]
pub struct ProjectHistory {
    pub name: String,
    pub commits: Vec<CommitRecord>,
    pub releases: Vec<Release>,
    index: HashMap<String, usize>,
    release_of: Vec<usize>,
    /// commit index -> path -> referenced feature names (with repeats)
    diff_refs: Vec<BTreeMap<String, Vec<String>>>,
    pub diagnostics: Diagnostics,
}

impl ProjectHistory {
    /// `commits` may come in any order; they are arranged release by release.
    pub fn new(
        name: impl Into<String>,
        commits: Vec<CommitRecord>,
        releases: Vec<Release>,
    ) -> Result<Self, ContextError> {
        let mut by_hash: HashMap<String, CommitRecord> = commits.into_iter().map(|c| (c.hash.clone(), c)).collect();
        let mut ordered = Vec::new();
        let mut release_of = Vec::new();
        for (ri, r) in releases.iter().enumerate() {
            for h in &r.commits {
                let c = by_hash
                    .remove(h)
                    .ok_or_else(|| ContextError::MissingCommit(h.clone()))?;
                ordered.push(c);
                release_of.push(ri);
            }
        }
        let index = ordered.iter().enumerate().map(|(i, c)| (c.hash.clone(), i)).collect();

        let mut diagnostics = Diagnostics::default();
        let diff_refs = ordered
            .iter()
            .map(|c| {
                let mut per_file = BTreeMap::new();
                for ch in &c.changes {
                    if !is_c_family(&ch.path) {
                        continue;
                    }
                    let refs = extract_refs_with(&ch.path, &ch.diff_text, ScanMode::Diff, &mut diagnostics);
                    let refs = features::filter_header_macros(refs, &mut diagnostics);
                    if !refs.is_empty() {
                        per_file.insert(ch.path.clone(), refs.into_iter().map(|r| r.name).collect());
                    }
                }
                per_file
            })
            .collect();

        Ok(Self {
            name: name.into(),
            commits: ordered,
            releases,
            index,
            release_of,
            diff_refs,
            diagnostics,
        })
    }

    pub fn position(&self, hash: &str) -> Option<usize> {
        self.index.get(hash).copied()
    }

    pub fn release_index_of(&self, commit: usize) -> usize {
        self.release_of[commit]
    }

    /// Feature names referenced by the diff of `path` in commit `i`.
    pub fn refs_in(&self, i: usize, path: &str) -> &[String] {
        self.diff_refs[i].get(path).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn diff_refs(&self, i: usize) -> &BTreeMap<String, Vec<String>> {
        &self.diff_refs[i]
    }

    pub fn commit_references(&self, i: usize, feature: &str) -> bool {
        self.diff_refs[i].values().any(|v| v.iter().any(|f| f == feature))
    }

    fn release_range(&self, idx: usize) -> std::ops::Range<usize> {
        let start = self.release_of.iter().position(|&r| r == idx);
        match start {
            Some(s) => {
                let len = self.releases[idx].commits.len();
                s..s + len
            }
            None => {
                let s = self
                    .release_of
                    .iter()
                    .position(|&r| r > idx)
                    .unwrap_or(self.commits.len());
                s..s
            }
        }
    }

    /// Context for release `idx`: the release is both the metric window
    /// and the labelled scope.
    pub fn release_context(&self, idx: usize) -> Result<ReleaseContext<'_>, ContextError> {
        let release = self.releases.get(idx).ok_or(ContextError::UnknownRelease(idx))?;
        let range = self.release_range(idx);
        let window: Vec<usize> = range.clone().collect();
        let cumulative: Vec<usize> = (0..range.end).collect();
        Ok(ReleaseContext::new(
            self,
            release.clone(),
            idx,
            window.clone(),
            cumulative,
            window,
        ))
    }

    /// Context for the commit at position `i`: metrics cover every commit
    /// up to and including it, instances and labels come from the commit
    /// alone.
    pub fn commit_context(&self, i: usize) -> ReleaseContext<'_> {
        let c = &self.commits[i];
        let window: Vec<usize> = (0..=i).collect();
        let release = Release {
            tag: c.hash.chars().take(12).collect(),
            index: i,
            end_commit: c.hash.clone(),
            commits: window.iter().map(|&k| self.commits[k].hash.clone()).collect(),
        };
        ReleaseContext::new(self, release, i, window.clone(), window, vec![i])
    }

    /// Number of scopes at `level`.
    pub fn scope_count(&self, level: Level) -> usize {
        match level {
            Level::Release => self.releases.len(),
            Level::Commit => self.commits.len(),
        }
    }

    pub fn scope_context(&self, level: Level, idx: usize) -> Result<ReleaseContext<'_>, ContextError> {
        match level {
            Level::Release => self.release_context(idx),
            Level::Commit => Ok(self.commit_context(idx)),
        }
    }
}

/// One scope of a project: the commits metrics are aggregated over (the
/// release R), all commits so far (C), changed files (F), affected
/// features (T) and the files implementing each feature (A).
#[derive(Debug, Clone)]
pub struct ReleaseContext<'h> {
    pub history: &'h ProjectHistory,
    pub release: Release,
    pub scope_index: usize,
    /// Positions of the release commits in `history`.
    pub window: Vec<usize>,
    pub cumulative: Vec<usize>,
    /// Commits whose changes define instances and labels.
    pub label_commits: Vec<usize>,
    pub changed_files: BTreeSet<String>,
    pub features: BTreeSet<String>,
    files_of: BTreeMap<String, BTreeSet<String>>,
    scope_files: BTreeSet<String>,
    scope_files_of: BTreeMap<String, BTreeSet<String>>,
}

impl<'h> ReleaseContext<'h> {
    fn new(
        history: &'h ProjectHistory,
        release: Release,
        scope_index: usize,
        window: Vec<usize>,
        cumulative: Vec<usize>,
        label_commits: Vec<usize>,
    ) -> Self {
        let mut changed_files = BTreeSet::new();
        let mut files_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for &i in &window {
            for ch in &history.commits[i].changes {
                changed_files.insert(ch.path.clone());
            }
            for (path, names) in history.diff_refs(i) {
                for n in names {
                    files_of.entry(n.clone()).or_default().insert(path.clone());
                }
            }
        }
        let mut scope_files = BTreeSet::new();
        let mut scope_files_of: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for &i in &label_commits {
            for ch in &history.commits[i].changes {
                scope_files.insert(ch.path.clone());
            }
            for (path, names) in history.diff_refs(i) {
                for n in names {
                    scope_files_of.entry(n.clone()).or_default().insert(path.clone());
                }
            }
        }
        let features = scope_files_of.keys().cloned().collect();
        Self {
            history,
            release,
            scope_index,
            window,
            cumulative,
            label_commits,
            changed_files,
            features,
            files_of,
            scope_files,
            scope_files_of,
        }
    }

    /// Files implementing `feature` within the window (A).
    pub fn files_of(&self, feature: &str) -> BTreeSet<String> {
        self.files_of.get(feature).cloned().unwrap_or_default()
    }

    /// Files that become instances of this scope.
    pub fn scope_files(&self) -> &BTreeSet<String> {
        &self.scope_files
    }

    /// Files of `feature` changed by the labelled commits.
    pub fn scope_files_of(&self, feature: &str) -> BTreeSet<String> {
        self.scope_files_of.get(feature).cloned().unwrap_or_default()
    }

    /// Features whose files (A) include `path`.
    pub fn features_in_file(&self, path: &str) -> BTreeSet<String> {
        self.features
            .iter()
            .filter(|f| self.files_of.get(*f).is_some_and(|s| s.contains(path)))
            .cloned()
            .collect()
    }

    pub fn commit(&self, i: usize) -> &'h CommitRecord {
        &self.history.commits[i]
    }

    /// Last commit of the window; structure metrics are read there.
    pub fn snapshot_commit(&self) -> Option<&'h CommitRecord> {
        self.window.last().map(|&i| &self.history.commits[i])
    }

    pub fn end_timestamp(&self) -> i64 {
        self.snapshot_commit().map(|c| c.timestamp).unwrap_or(0)
    }
}
