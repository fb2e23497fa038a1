//! Corrective-commit detection, SZZ tracing of bug-introducing commits and
//! defective/clean labels for files and features.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::ReleaseContext;
use crate::features::lexer::is_comment_only;
use crate::repo::{ChangeKind, CommitRecord, RepoError, RepoHandle};

pub const DEFAULT_KEYWORDS: [&str; 8] = ["bug", "bugs", "bugfix", "error", "fail", "fix", "fixed", "fixes"];

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("feature `{0}` has no files in this scope")]
    FeatureWithoutFiles(String),
    #[error(transparent)]
    Repo(#[from] RepoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Defective,
    Clean,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Defective => "defective",
            ClassLabel::Clean => "clean",
        }
    }

    pub fn is_defective(self) -> bool {
        self == ClassLabel::Defective
    }

    pub fn from_flag(defective: bool) -> Self {
        if defective {
            ClassLabel::Defective
        } else {
            ClassLabel::Clean
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ClassLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "defective" => Ok(ClassLabel::Defective),
            "clean" => Ok(ClassLabel::Clean),
            other => Err(format!("unknown class `{other}`")),
        }
    }
}

/// Case-insensitive whole-word matcher over a keyword list.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    pattern: Regex,
    keywords: Vec<String>,
}

impl KeywordMatcher {
    pub fn new<S: AsRef<str>>(keywords: &[S]) -> Self {
        let alternatives: Vec<String> = keywords.iter().map(|k| regex::escape(k.as_ref())).collect();
        let pattern = if alternatives.is_empty() {
            // matches nothing
            Regex::new(r"[^\s\S]").expect("valid regex")
        } else {
            Regex::new(&format!(r"(?i)\b(?:{})\b", alternatives.join("|"))).expect("escaped keywords")
        };
        Self {
            pattern,
            keywords: keywords.iter().map(|k| k.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    /// First keyword occurring in `text`, lowercased.
    pub fn find(&self, text: &str) -> Option<String> {
        self.pattern.find(text).map(|m| m.as_str().to_lowercase())
    }
}

impl Default for KeywordMatcher {
    fn default() -> Self {
        Self::new(&DEFAULT_KEYWORDS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectiveVerdict {
    pub commit: String,
    pub is_corrective: bool,
    pub matched_keyword: Option<String>,
}

impl KeywordMatcher {
    pub fn classify(&self, commit: &CommitRecord) -> CorrectiveVerdict {
        let matched_keyword = self.find(&commit.message_first_line);
        CorrectiveVerdict {
            commit: commit.hash.clone(),
            is_corrective: matched_keyword.is_some(),
            matched_keyword,
        }
    }
}

/// Corrective verdict for a first message line, default keywords.
pub fn classify_corrective(message_first_line: &str) -> CorrectiveVerdict {
    let matched_keyword = KeywordMatcher::default().find(message_first_line);
    CorrectiveVerdict {
        commit: String::new(),
        is_corrective: matched_keyword.is_some(),
        matched_keyword,
    }
}

/// Line-level authorship queries.
pub trait BlameSource {
    fn blame_lines(&self, commit: &str, path: &str, lines: &[u32]) -> Result<Vec<Option<String>>, RepoError>;
}

impl BlameSource for RepoHandle {
    fn blame_lines(&self, commit: &str, path: &str, lines: &[u32]) -> Result<Vec<Option<String>>, RepoError> {
        RepoHandle::blame_lines(self, commit, path, lines)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugTrace {
    pub corrective: String,
    pub introducers: BTreeSet<String>,
    /// introducer -> (path, line) pairs, old-side numbering
    pub blamed_lines: BTreeMap<String, Vec<(String, u32)>>,
}

fn blameable(text: &str) -> bool {
    !text.trim().is_empty() && !is_comment_only(text)
}

/// Blames every deleted, non-blank, non-comment line of `corrective` in
/// its first parent. A root commit yields an empty trace.
pub fn szz_trace(repo: &impl BlameSource, corrective: &CommitRecord) -> Result<BugTrace, LabelError> {
    let mut trace = BugTrace {
        corrective: corrective.hash.clone(),
        introducers: BTreeSet::new(),
        blamed_lines: BTreeMap::new(),
    };
    let Some(parent) = corrective.parent_hashes.first() else {
        return Ok(trace);
    };
    for change in &corrective.changes {
        if change.kind == ChangeKind::Added {
            continue;
        }
        let lines: Vec<u32> = change
            .deleted_lines
            .iter()
            .filter(|(_, text)| blameable(text))
            .map(|(n, _)| *n)
            .collect();
        if lines.is_empty() {
            continue;
        }
        let path = change.parent_path();
        let owners = repo.blame_lines(parent, path, &lines)?;
        for (line, owner) in lines.into_iter().zip(owners) {
            if let Some(owner) = owner {
                trace.introducers.insert(owner.clone());
                trace
                    .blamed_lines
                    .entry(owner)
                    .or_default()
                    .push((path.to_string(), line));
            }
        }
    }
    Ok(trace)
}

/// Verdicts and traces for every commit of a history.
pub fn trace_history(
    repo: &impl BlameSource,
    commits: &[CommitRecord],
    matcher: &KeywordMatcher,
) -> Result<(Vec<CorrectiveVerdict>, Vec<BugTrace>), LabelError> {
    let verdicts: Vec<CorrectiveVerdict> = commits.iter().map(|c| matcher.classify(c)).collect();
    let mut traces = Vec::new();
    for (c, v) in commits.iter().zip(&verdicts) {
        if v.is_corrective {
            traces.push(szz_trace(repo, c)?);
        }
    }
    Ok((verdicts, traces))
}

pub fn introducers(traces: &[BugTrace]) -> BTreeSet<String> {
    traces.iter().flat_map(|t| t.introducers.iter().cloned()).collect()
}

/// A file is defective when a bug-introducing commit among the scope's
/// labelled commits changes it.
pub fn label_files(ctx: &ReleaseContext<'_>, introducers: &BTreeSet<String>) -> BTreeMap<String, ClassLabel> {
    let mut labels: BTreeMap<String, ClassLabel> = ctx
        .scope_files()
        .iter()
        .map(|p| (p.clone(), ClassLabel::Clean))
        .collect();
    for &i in &ctx.label_commits {
        let c = ctx.commit(i);
        if !introducers.contains(&c.hash) {
            continue;
        }
        for ch in &c.changes {
            labels.insert(ch.path.clone(), ClassLabel::Defective);
        }
    }
    labels
}

/// A feature is defective when any of its files is.
pub fn label_features(
    ctx: &ReleaseContext<'_>,
    file_labels: &BTreeMap<String, ClassLabel>,
) -> Result<BTreeMap<String, ClassLabel>, LabelError> {
    ctx.features
        .iter()
        .map(|f| {
            let files = ctx.scope_files_of(f);
            if files.is_empty() {
                return Err(LabelError::FeatureWithoutFiles(f.clone()));
            }
            let defective = files
                .iter()
                .any(|p| file_labels.get(p).is_some_and(|l| l.is_defective()));
            Ok((f.clone(), ClassLabel::from_flag(defective)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "level", content = "id")]
pub enum LabelScope {
    Release(String),
    Commit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub scope: LabelScope,
    pub file_labels: BTreeMap<String, ClassLabel>,
    pub feature_labels: BTreeMap<String, ClassLabel>,
}
