//! Scripted git fixtures and synthetic datasets used by the test suites.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use git2::{Repository, Signature, Time};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Attribute, ClassLabel, Dataset, Instance};

pub const WEEK: i64 = 7 * 86_400;
pub const EPOCH: i64 = 1_600_000_000;

#[derive(Debug, Clone)]
pub struct FixtureCommit {
    pub label: String,
    pub author: (String, String),
    pub timestamp: i64,
    pub message: String,
    /// `None` deletes the file.
    pub writes: Vec<(String, Option<String>)>,
    pub renames: Vec<(String, String)>,
}

impl FixtureCommit {
    pub fn new(label: &str, author: &str, timestamp: i64, message: &str) -> Self {
        Self {
            label: label.to_string(),
            author: (author.to_string(), format!("{}@example.com", author.to_lowercase())),
            timestamp,
            message: message.to_string(),
            writes: Vec::new(),
            renames: Vec::new(),
        }
    }

    pub fn write(mut self, path: &str, content: &str) -> Self {
        self.writes.push((path.to_string(), Some(content.to_string())));
        self
    }

    pub fn delete(mut self, path: &str) -> Self {
        self.writes.push((path.to_string(), None));
        self
    }

    pub fn rename(mut self, from: &str, to: &str) -> Self {
        self.renames.push((from.to_string(), to.to_string()));
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct FixtureSpec {
    pub commits: Vec<FixtureCommit>,
    /// (tag name, commit label)
    pub tags: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub path: PathBuf,
    pub hashes: BTreeMap<String, String>,
}

impl Fixture {
    pub fn hash(&self, label: &str) -> &str {
        self.hashes
            .get(label)
            .unwrap_or_else(|| panic!("unknown fixture commit {label}"))
    }

    pub fn label_of(&self, hash: &str) -> Option<&str> {
        self.hashes
            .iter()
            .find(|(_, h)| h.as_str() == hash)
            .map(|(l, _)| l.as_str())
    }
}

/// Materializes `spec` as a non-bare repository at `dir`.
pub fn build_fixture(spec: &FixtureSpec, dir: &Path) -> Result<Fixture, git2::Error> {
    let repo = Repository::init(dir)?;
    let mut state: BTreeMap<String, String> = BTreeMap::new();
    let mut hashes = BTreeMap::new();
    let mut parent: Option<git2::Oid> = None;

    for c in &spec.commits {
        for (from, to) in &c.renames {
            if let Some(content) = state.remove(from) {
                state.insert(to.clone(), content);
            }
        }
        for (path, content) in &c.writes {
            match content {
                Some(text) => {
                    state.insert(path.clone(), text.clone());
                }
                None => {
                    state.remove(path);
                }
            }
        }

        let mut index = repo.index()?;
        index.clear()?;
        for (path, content) in &state {
            let full = dir.join(path);
            if let Some(parent_dir) = full.parent() {
                fs::create_dir_all(parent_dir).map_err(|e| git2::Error::from_str(&e.to_string()))?;
            }
            fs::write(&full, content).map_err(|e| git2::Error::from_str(&e.to_string()))?;
            index.add_path(Path::new(path))?;
        }
        index.write()?;
        let tree_id = index.write_tree()?;
        let tree = repo.find_tree(tree_id)?;
        let sig = Signature::new(&c.author.0, &c.author.1, &Time::new(c.timestamp, 0))?;
        let parents: Vec<git2::Commit<'_>> = match parent {
            Some(p) => vec![repo.find_commit(p)?],
            None => Vec::new(),
        };
        let parent_refs: Vec<&git2::Commit<'_>> = parents.iter().collect();
        let oid = repo.commit(Some("HEAD"), &sig, &sig, &c.message, &tree, &parent_refs)?;
        hashes.insert(c.label.clone(), oid.to_string());
        parent = Some(oid);

        // drop deleted files from the work tree
        for (path, content) in &c.writes {
            if content.is_none() {
                let _ = fs::remove_file(dir.join(path));
            }
        }
        for (from, _) in &c.renames {
            if !state.contains_key(from) {
                let _ = fs::remove_file(dir.join(from));
            }
        }
    }

    for (tag, label) in &spec.tags {
        let oid = git2::Oid::from_str(&hashes[label])?;
        let obj = repo.find_object(oid, None)?;
        repo.tag_lightweight(tag, &obj, false)?;
    }

    Ok(Fixture {
        path: dir.to_path_buf(),
        hashes,
    })
}

fn lines(parts: &[&str]) -> String {
    let mut s = parts.join("\n");
    s.push('\n');
    s
}

const CONFIG_H: &[&str] = &[
    "#ifndef CONFIG_H_",
    "#define CONFIG_H_",
    "",
    "#define BUFFER_SIZE 256",
    "",
    "#endif",
];

const PARSER_HEAD: &[&str] = &[
    "#include <stdio.h>",
    "#include <stdlib.h>",
    "#include <string.h>",
    "#include \"config.h\"",
    "",
    "static char buf[BUFFER_SIZE];",
    "static int len;",
    "static int depth;",
    "",
    "int parse_token(const char *src)",
    "{",
    "    len = 0;",
    "    while (src[len] && len < BUFFER_SIZE - 1) {",
    "        buf[len] = src[len];",
    "        len++;",
    "    }",
    "    return len;",
    "}",
    "",
    "int parse_line(const char *line)",
    "{",
    "    int n = 0;",
    "    if (!line)",
    "        return -1;",
];

const PARSE_COUNT: &[&str] = &[
    "",
    "int parse_count(const char *s)",
    "{",
    "    int c = 0;",
    "    for (; *s; s++)",
    "        c += (*s == ' ');",
    "    return c;",
    "}",
];

fn parser_c(limits: bool, feat_a: Option<&str>, count: bool) -> String {
    let mut out: Vec<&str> = vec!["/* parser.c - token parser */"];
    if limits {
        out.push("/* limits: tokens up to BUFFER_SIZE bytes */");
    }
    out.extend_from_slice(PARSER_HEAD);
    if let Some(extra) = feat_a {
        out.push("#ifdef FEAT_A");
        out.push("    n = parse_token(line);");
        if !extra.is_empty() {
            out.push(extra);
        }
        out.push("    n += 1;");
        out.push("#endif");
    }
    out.push("    return n;");
    out.push("}");
    if count {
        out.extend_from_slice(PARSE_COUNT);
    }
    out.push("/* end of parser.c */");
    lines(&out)
}

fn util_c(flag_b: &str) -> String {
    lines(&[
        "/* util.c - helpers */",
        "#include \"config.h\"",
        "",
        "int util_flags(void)",
        "{",
        "    int f = 0;",
        "#ifdef FEAT_B",
        flag_b,
        "#ifdef FEAT_A",
        "    f |= 2;",
        "#endif",
        "#endif",
        "    return f;",
        "}",
    ])
}

/// Eight commits, releases v1.0 (c1..c5) and v2.0 (c6..c8), features
/// FEAT_A and FEAT_B plus the header macro CONFIG_H_. Commit c3 plants a
/// faulty line in parser.c that c7 repairs.
pub fn fixture_alpha() -> FixtureSpec {
    let at = |i: i64| EPOCH + (i - 1) * WEEK;
    let bug = "    buf[len + 1] = 0;";
    let fixed = "    buf[len] = 0;";
    FixtureSpec {
        commits: vec![
            FixtureCommit::new("c1", "Carol", at(1), "Initial import")
                .write("README.md", "# demo\n")
                .write("config.h", &lines(CONFIG_H))
                .write("parser.c", &parser_c(false, None, false)),
            FixtureCommit::new("c2", "Bob", at(2), "Add optional features A and B")
                .write("parser.c", &parser_c(false, Some(""), false))
                .write("util.c", &util_c("    f |= 1;")),
            FixtureCommit::new("c3", "Alice", at(3), "Terminate token buffer")
                .write("parser.c", &parser_c(false, Some(bug), false)),
            FixtureCommit::new("c4", "Bob", at(4), "Document parser limits")
                .write("README.md", "# demo\n\nTokens are limited by BUFFER_SIZE.\n")
                .write("parser.c", &parser_c(true, Some(bug), false)),
            FixtureCommit::new("c5", "Alice", at(5), "Add tokenizer helpers")
                .write("parser.c", &parser_c(true, Some(bug), true)),
            FixtureCommit::new("c6", "Carol", at(6), "Rework flag handling for B")
                .write("util.c", &util_c("    f |= 4;")),
            FixtureCommit::new(
                "c7",
                "Bob",
                at(7),
                "Fix off-by-one in token buffer\n\nThe terminator was written one past the end.",
            )
            .write("parser.c", &parser_c(true, Some(fixed), true)),
            FixtureCommit::new("c8", "Alice", at(8), "Update readme for 2.0")
                .write("README.md", "# demo 2.0\n\nTokens are limited by BUFFER_SIZE.\n"),
        ],
        tags: vec![("v1.0".into(), "c5".into()), ("v2.0".into(), "c8".into())],
    }
}

/// Three releases exercising compound references, `#ifndef`, `#if`
/// blocks, include guards, commented directives, a rename and a deletion.
pub fn fixture_beta() -> FixtureSpec {
    let at = |i: i64| EPOCH + (i - 1) * WEEK + 3_600 * i;
    let io_v1 = lines(&[
        "#include \"io.h\"",
        "",
        "int io_open(const char *p)",
        "{",
        "#ifdef USE_MMAP",
        "    return map_file(p);",
        "#else",
        "    return read_file(p);",
        "#endif",
        "}",
    ]);
    let io_h = lines(&[
        "#ifndef __IO_H__",
        "#define __IO_H__",
        "#ifdef USE_MMAP",
        "int map_file(const char *p);",
        "#endif",
        "int read_file(const char *p);",
        "#endif",
    ]);
    let io_v2 = lines(&[
        "#include \"io.h\"",
        "",
        "int io_open(const char *p)",
        "{",
        "    int fd = -1;",
        "#ifdef USE_MMAP",
        "    fd = map_file(p);",
        "    if (fd < 0 && p)",
        "        fd = read_file(p);",
        "#else",
        "    fd = read_file(p);",
        "#endif",
        "    return fd;",
        "}",
    ]);
    let net_v1 = lines(&[
        "/* net.c */",
        "#include <string.h>",
        "",
        "int net_send(const char *msg)",
        "{",
        "    int sent = 0;",
        "#ifndef NO_IPV6",
        "    sent = send6(msg);",
        "#endif",
        "#ifdef USE_TLS & USE_MMAP",
        "    sent += tls_send(msg, \"if\");",
        "#endif",
        "    return sent;",
        "}",
    ]);
    let net_v2 = lines(&[
        "/* net.c */",
        "#include <string.h>",
        "",
        "int net_send(const char *msg)",
        "{",
        "    int sent = 0;",
        "#ifndef NO_IPV6",
        "    sent = send6(msg);",
        "    while (sent == 0 || sent < 0)",
        "        sent = send6(msg);",
        "#endif",
        "#ifdef USE_TLS & USE_MMAP",
        "    sent += tls_send(msg, \"if\");",
        "#endif",
        "    return sent;",
        "}",
    ]);
    let net_v3 = lines(&[
        "/* net.c */",
        "#include <string.h>",
        "",
        "int net_send(const char *msg)",
        "{",
        "    int sent = 0;",
        "#ifndef NO_IPV6",
        "    sent = send6(msg);",
        "    while (sent <= 0)",
        "        sent = send6(msg);",
        "#endif",
        "#ifdef USE_TLS & USE_MMAP",
        "    sent += tls_send(msg, \"if\");",
        "#endif",
        "    return sent;",
        "}",
    ]);
    let legacy = lines(&[
        "/* #ifdef USE_LEGACY is handled elsewhere */",
        "#if defined(USE_LEGACY)",
        "int legacy(void) { return 1; }",
        "#endif",
    ]);
    let tools = lines(&[
        "// tools.c",
        "#ifdef USE_TLS",
        "int tls_ready(void)",
        "{",
        "    return tls_state() ? 1 : 0;",
        "}",
        "#ifdef NO_IPV6",
        "int v4_only(void) { return 1; }",
        "#endif",
        "#endif",
    ]);
    let tools_v2 = lines(&[
        "// tools.c",
        "#ifdef USE_TLS",
        "int tls_ready(void)",
        "{",
        "    return tls_state() ? 2 : 0;",
        "}",
        "#ifdef NO_IPV6",
        "int v4_only(void) { return 1; }",
        "#endif",
        "#endif",
    ]);
    FixtureSpec {
        commits: vec![
            FixtureCommit::new("b1", "Dora", at(1), "Initial layout")
                .write("src/io.c", &io_v1)
                .write("src/io.h", &io_h)
                .write("legacy.c", &legacy)
                .write("Makefile", "all:\n\tcc -o app src/*.c\n"),
            FixtureCommit::new("b2", "Eve", at(2), "Add network layer").write("src/net.c", &net_v1),
            FixtureCommit::new("b3", "Dora", at(3), "Retry sends until acknowledged").write("src/net.c", &net_v2),
            FixtureCommit::new("b4", "Frank", at(4), "Add TLS helpers").write("tools.c", &tools),
            FixtureCommit::new("b5", "Eve", at(5), "Fallback when mapping fails").write("src/io.c", &io_v2),
            FixtureCommit::new("b6", "Dora", at(6), "Move tools into src").rename("tools.c", "src/tools.c"),
            FixtureCommit::new("b7", "Frank", at(7), "Fix bugs in retry loop").write("src/net.c", &net_v3),
            FixtureCommit::new("b8", "Eve", at(8), "Drop legacy shim").delete("legacy.c"),
            FixtureCommit::new("b9", "Frank", at(9), "fixes: tls readiness flag").write("src/tools.c", &tools_v2),
            FixtureCommit::new("b10", "Dora", at(10), "Refactor build rules")
                .write("Makefile", "CC ?= cc\nall:\n\t$(CC) -o app src/*.c\n"),
        ],
        tags: vec![
            ("rel-1".into(), "b3".into()),
            ("rel-2".into(), "b6".into()),
            ("rel-3".into(), "b10".into()),
        ],
    }
}

/// Randomized linear history over a handful of C files with feature
/// blocks, several authors and bug-fix commits. Four releases.
pub fn fixture_random(seed: u64, n_commits: usize) -> FixtureSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let authors = ["Ann", "Ben", "Cid", "Dee"];
    let features = ["FEAT_X", "FEAT_Y", "FEAT_Z", "HAVE_W"];
    let files = ["a.c", "b.c", "c.h", "d.c"];
    let mut contents: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut commits = Vec::new();
    let mut counter = 0usize;

    for i in 0..n_commits {
        let author = authors[rng.random_range(0..authors.len())];
        let mut message = if rng.random_bool(0.3) {
            format!("Fix problem number {i}")
        } else if rng.random_bool(0.1) {
            format!("Refactor module {i}")
        } else {
            format!("Change number {i}")
        };
        if i == 0 {
            message = "Initial commit".to_string();
        }
        let mut c = FixtureCommit::new(&format!("r{}", i + 1), author, EPOCH + i as i64 * 3 * 86_400, &message);
        let n_files = if i == 0 { files.len() } else { rng.random_range(1..=2) };
        let mut touched: Vec<&str> = Vec::new();
        while touched.len() < n_files {
            let f = files[rng.random_range(0..files.len())];
            if !touched.contains(&f) {
                touched.push(f);
            }
        }
        touched.sort();
        for f in touched {
            let body = contents.entry(f).or_default();
            let ops = rng.random_range(1..=3);
            for _ in 0..ops {
                counter += 1;
                match rng.random_range(0..4) {
                    0 if body.len() > 4 => {
                        let at = rng.random_range(0..body.len());
                        if !body[at].starts_with('#') {
                            body.remove(at);
                        }
                    }
                    1 => {
                        let feat = features[rng.random_range(0..features.len())];
                        let at = insertion_point(body, &mut rng);
                        let directive = if rng.random_bool(0.2) { "#ifndef" } else { "#ifdef" };
                        let block = vec![
                            format!("{directive} {feat}"),
                            format!("    v{counter} = {counter};"),
                            format!("    if (v{counter} > 1) v{counter}--;"),
                            "#endif".to_string(),
                        ];
                        for (k, l) in block.into_iter().enumerate() {
                            body.insert(at + k, l);
                        }
                    }
                    2 if !body.is_empty() => {
                        let at = rng.random_range(0..body.len());
                        if !body[at].starts_with('#') {
                            body[at] = format!("    w{counter} = w{counter} || {counter};");
                        }
                    }
                    _ => {
                        let at = insertion_point(body, &mut rng);
                        let line = if rng.random_bool(0.2) {
                            String::new()
                        } else {
                            format!("int g{counter} = {counter};")
                        };
                        body.insert(at, line);
                    }
                }
            }
            let mut text = body.join("\n");
            text.push('\n');
            c = c.write(f, &text);
        }
        commits.push(c);
    }

    let q = n_commits / 4;
    let tags = (1..=4)
        .map(|k| {
            let idx = if k == 4 { n_commits } else { k * q };
            (format!("v{k}"), format!("r{idx}"))
        })
        .collect();
    FixtureSpec { commits, tags }
}

// Positions outside existing blocks so nesting stays balanced.
fn insertion_point(body: &[String], rng: &mut ChaCha8Rng) -> usize {
    let mut depth = 0i32;
    let mut candidates = vec![];
    for (i, l) in body.iter().enumerate() {
        if depth == 0 {
            candidates.push(i);
        }
        if l.starts_with("#if") {
            depth += 1;
        } else if l.starts_with("#endif") {
            depth -= 1;
        }
    }
    candidates.push(body.len());
    if rng.random_bool(0.3) {
        // nest into an existing block right after its opener
        let openers: Vec<usize> = body
            .iter()
            .enumerate()
            .filter(|(_, l)| l.starts_with("#ifdef") || l.starts_with("#ifndef"))
            .map(|(i, _)| i + 1)
            .collect();
        if !openers.is_empty() {
            return openers[rng.random_range(0..openers.len())];
        }
    }
    candidates[rng.random_range(0..candidates.len())]
}

/// Two Gaussian classes in `dims` dimensions. Class means sit `separation`
/// apart along every axis; unit variance.
pub fn gaussian_dataset(n: usize, dims: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attributes = (0..dims).map(|d| Attribute::new(format!("x{d}"))).collect();
    let instances = (0..n)
        .map(|i| {
            let defective = i % 2 == 0;
            let shift = if defective { separation } else { 0.0 };
            let values = (0..dims)
                .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
                .collect();
            Instance {
                project: "synthetic".into(),
                scope: format!("s{}", i * 4 / n.max(1)),
                scope_index: i * 4 / n.max(1),
                name: format!("e{i}"),
                values,
                label: if defective {
                    ClassLabel::Defective
                } else {
                    ClassLabel::Clean
                },
            }
        })
        .collect();
    Dataset::new(attributes, instances).expect("finite synthetic values")
}

/// Labelled dataset for `project` with `scopes` ordered scopes; the first
/// attribute carries signal, the rest are noise.
pub fn project_dataset(project: &str, attributes: &[&str], scopes: usize, per_scope: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attrs = attributes.iter().map(|a| Attribute::new(*a)).collect();
    let mut instances = Vec::new();
    for s in 0..scopes {
        for i in 0..per_scope {
            let defective = (i + s) % 3 == 0;
            let values = (0..attributes.len())
                .map(|k| {
                    let noise = rng.sample::<f64, _>(StandardNormal);
                    if k == 0 {
                        (if defective { 3.0 } else { 0.0 }) + noise
                    } else {
                        noise.abs() * 10.0
                    }
                })
                .collect();
            instances.push(Instance {
                project: project.into(),
                scope: format!("{project}-r{s}"),
                scope_index: s,
                name: format!("ent{i}"),
                values,
                label: if defective {
                    ClassLabel::Defective
                } else {
                    ClassLabel::Clean
                },
            });
        }
    }
    Dataset::new(attrs, instances).expect("finite synthetic values")
}
