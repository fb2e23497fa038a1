//! Naive recomputation of every feature and file metric straight from the
//! JSONL cache.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use featforge::cache::ProjectCache;
use featforge::context::{Level, ProjectHistory};
use featforge::labels::DEFAULT_KEYWORDS;
use featforge::metrics::{feature_vector, file_process_metrics, MessageMatchers, ScopeSnapshots};
use featforge::pipeline::{load_history, mine_to_cache};
use featforge::repo::{open_repo, RepoHandle, SnapshotSource};
use featforge::testkit::{build_fixture, FixtureSpec};
use serde::Deserialize;

const WEEK: f64 = 7.0 * 24.0 * 3600.0;

#[derive(Deserialize)]
struct Rec {
    hash: String,
    author: String,
    timestamp: i64,
    message_first_line: String,
    changes: Vec<Ch>,
}

#[derive(Deserialize)]
struct Ch {
    path: String,
    old_path: Option<String>,
    kind: String,
    added_lines: Vec<(u32, String)>,
    deleted_lines: Vec<(u32, String)>,
    diff_text: String,
}

#[derive(Deserialize)]
struct RelIndex {
    releases: Vec<Rel>,
}

#[derive(Deserialize)]
struct Rel {
    commits: Vec<String>,
}

struct Oracle {
    commits: Vec<Rec>,
    releases: Vec<Vec<usize>>,
    /// file contents after each commit
    states: Vec<BTreeMap<String, Vec<String>>>,
    /// (path, feature) references of each commit's diffs, repeats kept
    refs: Vec<Vec<(String, String)>>,
}

fn c_family(path: &str) -> bool {
    let ext = path.rsplit('.').next().unwrap_or("").to_lowercase();
    path.contains('.') && ["c", "h", "cpp", "hpp", "cc", "hh"].contains(&ext.as_str())
}

fn header_macro(name: &str) -> bool {
    let l = name.to_lowercase();
    l.ends_with("_h") || l.ends_with("_h_") || l.ends_with("_h__")
}

/// Drops comments, keeping string and char literals intact unless `blank`.
fn strip(line: &str, in_comment: &mut bool, blank: bool) -> String {
    let b: Vec<char> = line.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < b.len() {
        if *in_comment {
            if b[i] == '*' && b.get(i + 1) == Some(&'/') {
                *in_comment = false;
                i += 2;
            } else {
                i += 1;
            }
            out.push(' ');
            continue;
        }
        if b[i] == '/' && b.get(i + 1) == Some(&'*') {
            *in_comment = true;
            i += 2;
            out.push(' ');
            continue;
        }
        if b[i] == '/' && b.get(i + 1) == Some(&'/') {
            break;
        }
        if b[i] == '"' || b[i] == '\'' {
            let q = b[i];
            out.push(q);
            i += 1;
            while i < b.len() {
                if b[i] == '\\' && i + 1 < b.len() {
                    if !blank {
                        out.push(b[i]);
                        out.push(b[i + 1]);
                    }
                    i += 2;
                    continue;
                }
                let c = b[i];
                i += 1;
                if c == q {
                    break;
                }
                if !blank {
                    out.push(c);
                }
            }
            out.push(q);
            continue;
        }
        out.push(b[i]);
        i += 1;
    }
    out
}

/// (keyword, operand) of a conditional directive.
fn directive(code: &str) -> Option<(String, String)> {
    let rest = code.trim_start().strip_prefix('#')?.trim_start();
    let kw: String = rest
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if !["if", "ifdef", "ifndef", "elif", "else", "endif"].contains(&kw.as_str()) {
        return None;
    }
    Some((kw.clone(), rest[kw.len()..].trim().to_string()))
}

fn operand(op: &str) -> Option<String> {
    let cs: Vec<char> = op.chars().collect();
    let mut toks: Vec<String> = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s: String = cs[i..]
                .iter()
                .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                .collect();
            i += s.len();
            toks.push(s);
        } else if (c == '&' || c == '|') && cs.get(i + 1) == Some(&c) {
            toks.push(format!("{c}{c}"));
            i += 2;
        } else if "&|!()".contains(c) {
            toks.push(c.to_string());
            i += 1;
        } else {
            return None;
        }
    }
    let idents = toks
        .iter()
        .filter(|t| t.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_'))
        .count();
    match (idents, toks.len()) {
        (0, _) => None,
        (1, 1) => Some(toks[0].clone()),
        (1, _) => None,
        _ => Some(toks.join(" ")),
    }
}

fn ifdef_name(code: &str) -> Option<String> {
    let (kw, op) = directive(code)?;
    if kw == "ifdef" || kw == "ifndef" {
        operand(&op)
    } else {
        None
    }
}

fn rebuild(base: &[String], ch: &Ch) -> Vec<String> {
    let gone: BTreeSet<u32> = ch.deleted_lines.iter().map(|(n, _)| *n).collect();
    let mut kept = base
        .iter()
        .enumerate()
        .filter(|(i, _)| !gone.contains(&(*i as u32 + 1)))
        .map(|(_, l)| l.clone());
    let added: BTreeMap<u32, &String> = ch.added_lines.iter().map(|(n, l)| (*n, l)).collect();
    let total = base.len() - gone.len() + added.len();
    (1..=total as u32)
        .map(|n| match added.get(&n) {
            Some(l) => (*l).clone(),
            None => kept.next().expect("enough old lines"),
        })
        .collect()
}

fn diff_refs(ch: &Ch) -> Vec<String> {
    let mut out = Vec::new();
    let mut hunk = false;
    let (mut old_c, mut new_c) = (false, false);
    for line in ch.diff_text.lines() {
        if line.starts_with("@@") {
            hunk = true;
            old_c = false;
            new_c = false;
            continue;
        }
        if !hunk || line.is_empty() {
            continue;
        }
        let body = &line[1..];
        let code = match &line[..1] {
            " " => {
                strip(body, &mut old_c, false);
                strip(body, &mut new_c, false)
            }
            "+" => strip(body, &mut new_c, false),
            "-" => strip(body, &mut old_c, false),
            _ => continue,
        };
        if let Some(n) = ifdef_name(&code) {
            if !header_macro(&n) {
                out.push(n);
            }
        }
    }
    out
}

impl Oracle {
    fn load(dir: &Path, project: &str) -> Oracle {
        let text = fs::read_to_string(dir.join(format!("{project}.jsonl"))).unwrap();
        let recs: Vec<Rec> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        let idx: RelIndex =
            serde_json::from_str(&fs::read_to_string(dir.join(format!("{project}.releases.json"))).unwrap()).unwrap();
        let mut by_hash: BTreeMap<String, Rec> = recs.into_iter().map(|r| (r.hash.clone(), r)).collect();
        let mut commits = Vec::new();
        let mut releases = Vec::new();
        for rel in idx.releases {
            let mut pos = Vec::new();
            for h in rel.commits {
                pos.push(commits.len());
                commits.push(by_hash.remove(&h).unwrap());
            }
            releases.push(pos);
        }
        let mut states = Vec::new();
        let mut refs = Vec::new();
        let mut state: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in &commits {
            let mut r = Vec::new();
            for ch in &c.changes {
                let base = match ch.kind.as_str() {
                    "added" => Vec::new(),
                    "renamed" => state.remove(ch.old_path.as_ref().unwrap()).unwrap(),
                    _ => state.get(&ch.path).cloned().unwrap_or_default(),
                };
                if ch.kind == "deleted" {
                    state.remove(&ch.path);
                } else {
                    state.insert(ch.path.clone(), rebuild(&base, ch));
                }
                if c_family(&ch.path) {
                    r.extend(diff_refs(ch).into_iter().map(|n| (ch.path.clone(), n)));
                }
            }
            states.push(state.clone());
            refs.push(r);
        }
        Oracle {
            commits,
            releases,
            states,
            refs,
        }
    }

    /// (window, cumulative, label commits) of a scope.
    fn scope(&self, level: Level, idx: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        match level {
            Level::Release => {
                let w = self.releases[idx].clone();
                let end = *w.last().unwrap();
                (w.clone(), (0..=end).collect(), w)
            }
            Level::Commit => ((0..=idx).collect(), (0..=idx).collect(), vec![idx]),
        }
    }

    fn change<'a>(&'a self, i: usize, path: &str) -> Option<&'a Ch> {
        self.commits[i].changes.iter().find(|c| c.path == path)
    }

    fn churn(&self, i: usize, path: &str) -> (f64, f64) {
        self.change(i, path)
            .map(|c| (c.added_lines.len() as f64, c.deleted_lines.len() as f64))
            .unwrap_or((0.0, 0.0))
    }

    fn experience(&self, dev: &str, window: &[usize], files: &BTreeSet<String>) -> f64 {
        let mut e = 0.0;
        for &i in window {
            if self.commits[i].author != dev {
                continue;
            }
            for f in files {
                let (a, d) = self.churn(i, f);
                e += a + d;
            }
        }
        e
    }

    fn features(&self, label: &[usize]) -> BTreeSet<String> {
        label
            .iter()
            .flat_map(|&i| self.refs[i].iter().map(|(_, n)| n.clone()))
            .collect()
    }

    fn feature_metrics(&self, f: &str, level: Level, idx: usize) -> [f64; 14] {
        let (window, cumulative, _) = self.scope(level, idx);
        let files: BTreeSet<String> = window
            .iter()
            .flat_map(|&i| self.refs[i].iter().filter(|(_, n)| n == f).map(|(p, _)| p.clone()))
            .collect();
        let touching: Vec<usize> = window
            .iter()
            .copied()
            .filter(|&i| self.refs[i].iter().any(|(_, n)| n == f))
            .collect();
        let authors: BTreeSet<&str> = touching.iter().map(|&i| self.commits[i].author.as_str()).collect();
        let all_authors: BTreeSet<&str> = cumulative
            .iter()
            .filter(|&&i| self.refs[i].iter().any(|(_, n)| n == f))
            .map(|&i| self.commits[i].author.as_str())
            .collect();

        let mut product = 1.0;
        for a in &authors {
            product *= self.experience(a, &window, &files) + 1.0;
        }
        let fexp = product.powf(1.0 / authors.len() as f64) - 1.0;

        let mut owner_sum = 0.0;
        for p in &files {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for &i in &touching {
                if self.refs[i].iter().any(|(q, n)| q == p && n == f) {
                    *counts.entry(self.commits[i].author.as_str()).or_default() += 1;
                }
            }
            let best = counts.values().max().copied().unwrap();
            let owner = counts.iter().find(|(_, c)| **c == best).unwrap().0;
            owner_sum += self.experience(owner, &window, &files);
        }
        let foexp = owner_sum / files.len() as f64;

        let mut mods = 0.0;
        for &i in &touching {
            mods += self.refs[i].iter().filter(|(_, n)| n == f).count() as f64;
        }
        let fmodd = mods / touching.len() as f64;

        let (mut addl, mut reml) = (0.0, 0.0);
        for p in &files {
            let (mut a, mut d) = (0.0, 0.0);
            for &i in &window {
                let (x, y) = self.churn(i, p);
                a += x;
                d += y;
            }
            addl += a;
            reml += d;
        }
        let faddl = addl / files.len() as f64;
        let freml = reml / files.len() as f64;

        let snap = &self.states[*window.last().unwrap()];
        let present: Vec<(&String, &Vec<String>)> = files.iter().filter_map(|p| snap.get_key_value(p)).collect();
        let mut s = [0.0; 6];
        if !present.is_empty() {
            let n = present.len() as f64;
            let mut loc = 0.0;
            let mut cyc = 0.0;
            for (_, lines) in &present {
                loc += lines.iter().filter(|l| !l.trim().is_empty()).count() as f64;
                cyc += cyclomatic(lines) as f64;
            }
            let (lofc, ndep, scat, tanga) = structure(f, &present);
            s = [loc / n, cyc / n, lofc as f64, ndep as f64, scat as f64, tanga as f64];
        }
        [
            touching.len() as f64,
            authors.len() as f64,
            all_authors.len() as f64,
            fexp,
            foexp,
            fmodd,
            faddl,
            freml,
            s[0],
            s[1],
            s[2],
            s[3],
            s[4],
            s[5],
        ]
    }

    fn file_metrics(&self, path: &str, level: Level, idx: usize) -> [f64; 17] {
        let (window, cumulative, _) = self.scope(level, idx);
        let revs: Vec<usize> = window
            .iter()
            .copied()
            .filter(|&i| self.change(i, path).is_some())
            .collect();
        let n = revs.len() as f64;
        let avg = |x: f64| if revs.is_empty() { 0.0 } else { x / n };
        let word_hit = |msg: &str, words: &[&str]| {
            msg.split(|c: char| !c.is_alphanumeric() && c != '_')
                .any(|w| words.contains(&w.to_lowercase().as_str()))
        };
        let (mut addl, mut reml, mut addm, mut remm, mut cchm, mut maxc, mut csum) =
            (0.0, 0.0, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0);
        let (mut refa, mut bugf) = (0.0, 0.0);
        let mut authors = BTreeSet::new();
        for &i in &revs {
            let (a, d) = self.churn(i, path);
            addl += a;
            reml += d;
            addm = addm.max(a);
            remm = remm.max(d);
            cchm = cchm.max(a + d);
            let size = self.commits[i].changes.len() as f64;
            maxc = maxc.max(size);
            csum += size;
            authors.insert(self.commits[i].author.clone());
            let msg = &self.commits[i].message_first_line;
            if word_hit(msg, &["refactor", "refactoring", "refactored"]) {
                refa += 1.0;
            }
            if word_hit(msg, &DEFAULT_KEYWORDS) {
                bugf += 1.0;
            }
        }
        let end = self.commits[*window.last().unwrap()].timestamp;
        let weeks = |ts: i64| (end - ts) as f64 / WEEK;
        let touches: Vec<usize> = cumulative
            .iter()
            .copied()
            .filter(|&i| self.change(i, path).is_some())
            .collect();
        let aage = touches
            .iter()
            .map(|&i| self.commits[i].timestamp)
            .min()
            .map_or(0.0, weeks);
        let (mut num, mut den) = (0.0, 0.0);
        for &i in &touches {
            let a = self.churn(i, path).0;
            num += weeks(self.commits[i].timestamp) * a;
            den += a;
        }
        let wage = if den > 0.0 { num / den } else { 0.0 };
        [
            n,
            refa,
            bugf,
            authors.len() as f64,
            addl,
            addm,
            avg(addl),
            reml,
            remm,
            avg(reml),
            addl + reml,
            cchm,
            avg(addl + reml),
            maxc,
            avg(csum),
            aage,
            wage,
        ]
    }
}

fn cyclomatic(lines: &[String]) -> u64 {
    let mut in_c = false;
    let mut d = 1;
    for l in lines {
        let code = strip(l, &mut in_c, true);
        if code.trim_start().starts_with('#') {
            continue;
        }
        let words = code.split(|c: char| !c.is_ascii_alphanumeric() && c != '_');
        d += words.filter(|w| ["if", "for", "while", "case"].contains(w)).count() as u64;
        d += code.matches("&&").count() as u64 + code.matches("||").count() as u64;
        d += code.matches('?').count() as u64;
    }
    d
}

fn idents(name: &str) -> BTreeSet<&str> {
    name.split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .filter(|w| w.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_'))
        .collect()
}

/// (lofc, ndep, scat, tanga) of `f` over files with balanced conditionals.
fn structure(f: &str, files: &[(&String, &Vec<String>)]) -> (u64, u64, u64, u64) {
    let parts = idents(f);
    let (mut lofc, mut ndep, mut scat) = (0, 0, 0);
    let mut co: BTreeSet<String> = BTreeSet::new();
    for (_, lines) in files {
        let mut in_c = false;
        let code: Vec<String> = lines.iter().map(|l| strip(l, &mut in_c, false)).collect();
        // open blocks: (feature, guard, then-branch still open)
        let mut stack: Vec<(Option<String>, bool, bool)> = Vec::new();
        let mut guarded: BTreeSet<usize> = BTreeSet::new();
        let mut depth_hits = Vec::new();
        let (mut opens, mut closes, mut broken) = (0, 0, false);
        let mut file_scat = 0;
        let mut file_co = BTreeSet::new();
        for (i, c) in code.iter().enumerate() {
            if let Some(name) = ifdef_name(c) {
                if name == f {
                    file_scat += 1;
                }
                let names: BTreeSet<&str> = idents(&name).into_iter().filter(|n| !header_macro(n)).collect();
                if !parts.is_empty() && parts.is_subset(&names) {
                    file_co.extend(names.difference(&parts).map(|s| s.to_string()));
                }
            }
            // a code line inside an open then-branch of f
            let is_directive = c.trim_start().starts_with('#');
            if !is_directive
                && !lines[i].trim().is_empty()
                && stack.iter().any(|(n, _, open)| *open && n.as_deref() == Some(f))
            {
                guarded.insert(i);
            }
            let Some((kw, op)) = directive(c) else { continue };
            match kw.as_str() {
                "if" | "ifdef" | "ifndef" => {
                    opens += 1;
                    let name = if kw == "if" { None } else { operand(&op) };
                    let guard = name.as_deref().is_some_and(header_macro);
                    if name.as_deref() == Some(f) {
                        let d = stack.iter().filter(|(_, g, _)| !g).count() + 1;
                        depth_hits.push(d as u64);
                    }
                    stack.push((name, guard, true));
                }
                "elif" | "else" => match stack.last_mut() {
                    Some(top) => top.2 = false,
                    None => broken = true,
                },
                _ => {
                    closes += 1;
                    if stack.pop().is_none() {
                        broken = true;
                    }
                }
            }
        }
        if broken || !stack.is_empty() || opens != closes {
            continue;
        }
        scat += file_scat;
        co.extend(file_co);
        lofc += guarded.len() as u64;
        ndep = ndep.max(depth_hits.into_iter().max().unwrap_or(0));
    }
    (lofc, ndep, scat, co.len() as u64)
}

pub fn check(spec: &FixtureSpec, glob: &str) -> usize {
    let dir = tempfile::tempdir().unwrap();
    build_fixture(spec, &dir.path().join("repo")).unwrap();
    let repo: RepoHandle = open_repo(dir.path().join("repo")).unwrap();
    let cache = ProjectCache::new(dir.path().join("cache"), "p");
    mine_to_cache(&repo, &cache, "p", glob).unwrap();
    let history: ProjectHistory = load_history(&cache, "p").unwrap();
    let oracle = Oracle::load(&dir.path().join("cache"), "p");
    assert_eq!(oracle.commits.len(), history.commits.len());

    // reconstructed snapshots agree with git
    for rel in &oracle.releases {
        let end = *rel.last().unwrap();
        for (path, lines) in &oracle.states[end] {
            let text = repo.snapshot(&oracle.commits[end].hash, path).unwrap().unwrap();
            assert_eq!(text.lines().collect::<Vec<_>>(), *lines, "{path}");
        }
    }

    let matchers = MessageMatchers::default();
    let mut compared = 0;
    for level in [Level::Release, Level::Commit] {
        for idx in 0..history.scope_count(level) {
            let ctx = history.scope_context(level, idx).unwrap();
            let (_, _, label) = oracle.scope(level, idx);
            let features = oracle.features(&label);
            assert_eq!(ctx.features, features, "{level:?} scope {idx}");
            let snaps = ScopeSnapshots::load(&ctx, &repo).unwrap();
            for f in &features {
                let got = feature_vector(f, &ctx, &snaps).unwrap().values();
                let want = oracle.feature_metrics(f, level, idx);
                assert_eq!(got, want, "{f} in {level:?} scope {idx}");
                compared += 1;
            }
            let files: BTreeSet<&str> = label
                .iter()
                .flat_map(|&i| oracle.commits[i].changes.iter().map(|c| c.path.as_str()))
                .filter(|p| c_family(p))
                .collect();
            for p in files {
                let got = file_process_metrics(p, &ctx, &matchers).values();
                let want = oracle.file_metrics(p, level, idx);
                assert_eq!(got, want, "{p} in {level:?} scope {idx}");
                compared += 1;
            }
        }
    }
    compared
}
