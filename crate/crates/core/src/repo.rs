//! Read-only access to a git repository: release resolution, commit
//! records with per-file diffs, file snapshots and line blame.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use git2::{BlameOptions, Delta, DiffFindOptions, DiffOptions, ErrorCode, Oid, Patch, Repository, Sort};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lines of unchanged context kept around every change.
pub const DIFF_CONTEXT_LINES: u32 = 3;

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("not a git repository: {0}")]
    NotARepository(PathBuf),
    #[error("corrupt repository at {path}: {source}")]
    CorruptRepository { path: PathBuf, source: git2::Error },
    #[error("no tags matched pattern `{0}`")]
    NoTagsMatched(String),
    #[error("missing object {id}: {source}")]
    MissingObject { id: String, source: git2::Error },
    #[error(transparent)]
    Git(#[from] git2::Error),
}

pub type Result<T, E = RepoError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
    Renamed,
}

/// One file touched by a commit, diffed against the first parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    /// Previous path of a renamed file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_path: Option<String>,
    pub kind: ChangeKind,
    /// New-side line numbers.
    pub added_lines: Vec<(u32, String)>,
    /// Old-side line numbers.
    pub deleted_lines: Vec<(u32, String)>,
    pub diff_text: String,
}

impl FileChange {
    pub fn added_count(&self) -> usize {
        self.added_lines.len()
    }

    pub fn deleted_count(&self) -> usize {
        self.deleted_lines.len()
    }

    /// Path of the file in the parent tree.
    pub fn parent_path(&self) -> &str {
        self.old_path.as_deref().unwrap_or(&self.path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub hash: String,
    pub parent_hashes: Vec<String>,
    pub author: String,
    pub timestamp: i64,
    pub message_first_line: String,
    pub message_full: String,
    pub changes: Vec<FileChange>,
}

impl CommitRecord {
    pub fn change(&self, path: &str) -> Option<&FileChange> {
        self.changes.iter().find(|c| c.path == path)
    }

    pub fn touches(&self, path: &str) -> bool {
        self.change(path).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Release {
    pub tag: String,
    pub index: usize,
    pub end_commit: String,
    /// Chronological; excludes commits of earlier releases.
    pub commits: Vec<String>,
}

/// Stable developer identity: lowercase name and email.
pub fn author_id(name: &str, email: &str) -> String {
    format!("{}<{}>", name.to_lowercase(), email.to_lowercase())
}

/// Access to file contents at a given commit.
pub trait SnapshotSource: Sync {
    fn snapshot(&self, commit: &str, path: &str) -> Result<Option<String>>;
}

/// Read-only repository handle, shareable across threads.
pub struct RepoHandle {
    path: PathBuf,
    repo: Mutex<Repository>,
}

impl std::fmt::Debug for RepoHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RepoHandle").field("path", &self.path).finish()
    }
}

pub fn open_repo(path: impl AsRef<Path>) -> Result<RepoHandle> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(RepoError::NotARepository(path.to_path_buf()));
    }
    match Repository::open(path) {
        Ok(repo) => Ok(RepoHandle {
            path: path.to_path_buf(),
            repo: Mutex::new(repo),
        }),
        Err(e) if e.code() == ErrorCode::NotFound => Err(RepoError::NotARepository(path.to_path_buf())),
        Err(source) => Err(RepoError::CorruptRepository {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn parse_oid(id: &str) -> Result<Oid> {
    Oid::from_str(id).map_err(|source| RepoError::MissingObject {
        id: id.to_string(),
        source,
    })
}

fn lossy(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn strip_eol(bytes: &[u8]) -> String {
    let mut s = lossy(bytes);
    while s.ends_with('\n') || s.ends_with('\r') {
        s.pop();
    }
    s
}

impl RepoHandle {
    pub fn path(&self) -> &Path {
        &self.path
    }

    fn with_repo<T>(&self, f: impl FnOnce(&Repository) -> Result<T>) -> Result<T> {
        let repo = self.repo.lock().unwrap_or_else(|p| p.into_inner());
        f(&repo)
    }

    /// Number of commits reachable from any reference.
    pub fn reachable_commit_count(&self) -> Result<usize> {
        self.with_repo(|repo| {
            let mut walk = repo.revwalk()?;
            walk.push_glob("refs/*")?;
            if repo.head().is_ok() {
                walk.push_head()?;
            }
            let mut n = 0;
            for oid in walk {
                oid?;
                n += 1;
            }
            Ok(n)
        })
    }

    /// Releases matching a tag glob, ordered by the timestamp of the tagged
    /// commit. Every commit goes to the first release that contains it.
    pub fn resolve_releases(&self, tag_filter: &str) -> Result<Vec<Release>> {
        self.with_repo(|repo| {
            let names = repo.tag_names(Some(tag_filter))?;
            let mut tagged = Vec::new();
            for name in names.iter() {
                let Some(name) = name? else { continue };
                let reference = repo.find_reference(&format!("refs/tags/{name}"))?;
                let commit = reference.peel_to_commit()?;
                tagged.push((commit.time().seconds(), name.to_string(), commit.id()));
            }
            if tagged.is_empty() {
                return Err(RepoError::NoTagsMatched(tag_filter.to_string()));
            }
            tagged.sort();

            let mut assigned: HashSet<Oid> = HashSet::new();
            let mut releases = Vec::with_capacity(tagged.len());
            for (index, (_, tag, end)) in tagged.iter().enumerate() {
                let mut walk = repo.revwalk()?;
                walk.set_sorting(Sort::TOPOLOGICAL | Sort::TIME | Sort::REVERSE)?;
                walk.push(*end)?;
                for (_, _, earlier) in &tagged[..index] {
                    walk.hide(*earlier)?;
                }
                let mut commits = Vec::new();
                for oid in walk {
                    let oid = oid?;
                    if assigned.insert(oid) {
                        commits.push(oid.to_string());
                    }
                }
                releases.push(Release {
                    tag: tag.clone(),
                    index,
                    end_commit: end.to_string(),
                    commits,
                });
            }
            Ok(releases)
        })
    }

    pub fn walk_commits(&self, release: &Release) -> Result<Vec<CommitRecord>> {
        release.commits.iter().map(|hash| self.commit_record(hash)).collect()
    }

    pub fn commit_record(&self, hash: &str) -> Result<CommitRecord> {
        let oid = parse_oid(hash)?;
        self.with_repo(|repo| {
            let commit = repo.find_commit(oid).map_err(|source| RepoError::MissingObject {
                id: hash.to_string(),
                source,
            })?;
            let author = commit.author();
            let author = author_id(&lossy(author.name_bytes()), &lossy(author.email_bytes()));
            let message_full = lossy(commit.message_bytes()).trim_end().to_string();
            let message_first_line = message_full.lines().next().unwrap_or("").to_string();
            let parent_hashes = commit.parent_ids().map(|p| p.to_string()).collect();

            let tree = commit.tree()?;
            let parent_tree = match commit.parent(0) {
                Ok(p) => Some(p.tree()?),
                Err(_) => None,
            };
            let changes = diff_changes(repo, parent_tree.as_ref(), &tree)?;

            Ok(CommitRecord {
                hash: commit.id().to_string(),
                parent_hashes,
                author,
                timestamp: commit.time().seconds(),
                message_first_line,
                message_full,
                changes,
            })
        })
    }

    pub fn file_snapshot(&self, commit: &str, path: &str) -> Result<Option<String>> {
        let oid = parse_oid(commit)?;
        self.with_repo(|repo| {
            let commit = repo.find_commit(oid).map_err(|source| RepoError::MissingObject {
                id: oid.to_string(),
                source,
            })?;
            let tree = commit.tree()?;
            let entry = match tree.get_path(Path::new(path)) {
                Ok(e) => e,
                Err(e) if e.code() == ErrorCode::NotFound => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            let object = entry.to_object(repo)?;
            match object.as_blob() {
                Some(blob) => Ok(Some(lossy(blob.content()))),
                None => Ok(None),
            }
        })
    }

    /// Commit that last touched each requested line (1-based) of `path` as
    /// of `commit`. Lines outside the file map to `None`.
    pub fn blame_lines(&self, commit: &str, path: &str, lines: &[u32]) -> Result<Vec<Option<String>>> {
        let oid = parse_oid(commit)?;
        self.with_repo(|repo| {
            let mut opts = BlameOptions::new();
            opts.newest_commit(oid);
            let blame = match repo.blame_file(Path::new(path), Some(&mut opts)) {
                Ok(b) => b,
                Err(e) if e.code() == ErrorCode::NotFound => return Ok(vec![None; lines.len()]),
                Err(e) => return Err(e.into()),
            };
            Ok(lines
                .iter()
                .map(|&n| {
                    blame
                        .get_line(n as usize)
                        .map(|hunk| hunk.final_commit_id().to_string())
                })
                .collect())
        })
    }

    /// True when `ancestor` is reachable from `descendant` (or equal to it).
    pub fn is_ancestor(&self, ancestor: &str, descendant: &str) -> Result<bool> {
        let a = parse_oid(ancestor)?;
        let d = parse_oid(descendant)?;
        if a == d {
            return Ok(true);
        }
        self.with_repo(|repo| Ok(repo.graph_descendant_of(d, a)?))
    }
}

impl SnapshotSource for RepoHandle {
    fn snapshot(&self, commit: &str, path: &str) -> Result<Option<String>> {
        self.file_snapshot(commit, path)
    }
}

fn diff_changes(repo: &Repository, parent: Option<&git2::Tree<'_>>, tree: &git2::Tree<'_>) -> Result<Vec<FileChange>> {
    let mut opts = DiffOptions::new();
    opts.context_lines(DIFF_CONTEXT_LINES);
    let mut diff = repo.diff_tree_to_tree(parent, Some(tree), Some(&mut opts))?;
    diff.find_similar(Some(DiffFindOptions::new().renames(true)))?;

    let mut changes = Vec::new();
    for idx in 0..diff.deltas().len() {
        let delta = diff.get_delta(idx).expect("delta index in range");
        let kind = match delta.status() {
            Delta::Added | Delta::Copied | Delta::Untracked => ChangeKind::Added,
            Delta::Deleted => ChangeKind::Deleted,
            Delta::Renamed => ChangeKind::Renamed,
            _ => ChangeKind::Modified,
        };
        let new_path = delta.new_file().path().map(|p| p.to_string_lossy().into_owned());
        let old_path = delta.old_file().path().map(|p| p.to_string_lossy().into_owned());
        let path = match kind {
            ChangeKind::Deleted => old_path.clone(),
            _ => new_path.clone(),
        }
        .unwrap_or_default();
        let old_path = if kind == ChangeKind::Renamed { old_path } else { None };

        let mut change = FileChange {
            path,
            old_path,
            kind,
            added_lines: Vec::new(),
            deleted_lines: Vec::new(),
            diff_text: String::new(),
        };

        let a_path = change.parent_path().to_string();
        let header_old = if kind == ChangeKind::Added {
            "/dev/null".to_string()
        } else {
            format!("a/{a_path}")
        };
        let header_new = if kind == ChangeKind::Deleted {
            "/dev/null".to_string()
        } else {
            format!("b/{}", change.path)
        };
        change
            .diff_text
            .push_str(&format!("--- {header_old}\n+++ {header_new}\n"));

        match Patch::from_diff(&diff, idx)? {
            Some(patch) if !delta.flags().is_binary() => {
                for h in 0..patch.num_hunks() {
                    let (hunk, n_lines) = patch.hunk(h)?;
                    change.diff_text.push_str(&strip_eol(hunk.header()));
                    change.diff_text.push('\n');
                    for l in 0..n_lines {
                        let line = patch.line_in_hunk(h, l)?;
                        let text = strip_eol(line.content());
                        match line.origin() {
                            '+' => {
                                change.added_lines.push((line.new_lineno().unwrap_or(0), text.clone()));
                            }
                            '-' => {
                                change
                                    .deleted_lines
                                    .push((line.old_lineno().unwrap_or(0), text.clone()));
                            }
                            ' ' => {}
                            // end-of-file newline markers
                            _ => continue,
                        }
                        change.diff_text.push(line.origin());
                        change.diff_text.push_str(&text);
                        change.diff_text.push('\n');
                    }
                }
            }
            _ => change.diff_text.push_str("Binary files differ\n"),
        }
        changes.push(change);
    }
    changes.sort_by(|a, b| a.path.cmp(&b.path));
    changes.dedup_by(|a, b| a.path == b.path);
    Ok(changes)
}
