//! Feature references in C preprocessor conditionals.
//!
//! A feature is a macro name tested by `#ifdef` or `#ifndef`. Operands
//! naming several macros (`#ifdef A & B`) are kept as one compound name.

mod blocks;
pub mod lexer;
mod profile;

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blocks::{build_block_tree, Block, BlockTree, Conditional};
pub use profile::{structure_profile, FeatureStructure, StructureProfile};

use lexer::{mask_line, LexState};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("unbalanced conditionals: {openers} openers, {closers} #endif")]
    UnbalancedConditionals { openers: usize, closers: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Directive {
    Ifdef,
    Ifndef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureRef {
    pub name: String,
    pub file: String,
    pub line: u32,
    pub directive: Directive,
    pub expression: String,
}

impl FeatureRef {
    /// Identifiers making up the (possibly compound) name.
    pub fn constituents(&self) -> Vec<&str> {
        constituents(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Snapshot,
    Diff,
}

/// Counters reported alongside extraction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub files_scanned: usize,
    pub refs_found: usize,
    pub header_macros_filtered: usize,
    pub unbalanced_files: usize,
    #[serde(default)]
    pub unparseable_directives: usize,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.files_scanned += other.files_scanned;
        self.refs_found += other.refs_found;
        self.header_macros_filtered += other.header_macros_filtered;
        self.unbalanced_files += other.unbalanced_files;
        self.unparseable_directives += other.unparseable_directives;
    }
}

static DIRECTIVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*#\s*(ifdef|ifndef|if|elif|else|endif)\b(.*)$").expect("valid regex"));
static IDENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").expect("valid regex"));
static OPERAND_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*|&&|\|\||[&|!()]").expect("valid regex"));
static HEADER_SUFFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)_h_?$").expect("valid regex"));
static INCLUDE_GUARD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^_{0,2}[A-Z0-9_]+_H_{0,2}$").expect("valid regex"));

const C_FAMILY: &[&str] = &["c", "h", "cpp", "hpp", "cc", "hh"];

/// Sources scanned for features.
pub fn is_c_family(path: &str) -> bool {
    path.rsplit_once('.')
        .map(|(_, ext)| C_FAMILY.contains(&ext.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Include-guard style macros that look like features but are not.
pub fn is_header_macro(name: &str) -> bool {
    HEADER_SUFFIX.is_match(name) || INCLUDE_GUARD.is_match(name)
}

/// Splits a compound feature name into its identifiers.
pub fn constituents(name: &str) -> Vec<&str> {
    IDENT.find_iter(name).map(|m| m.as_str()).collect()
}

/// A preprocessor conditional recognized on a masked line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ParsedDirective {
    Open(Option<Directive>, String),
    Elif,
    Else,
    Endif,
}

pub(crate) fn parse_directive(masked: &str) -> Option<ParsedDirective> {
    let caps = DIRECTIVE.captures(masked)?;
    let operand = caps.get(2).map(|m| m.as_str().trim()).unwrap_or("").to_string();
    Some(match &caps[1] {
        "ifdef" => ParsedDirective::Open(Some(Directive::Ifdef), operand),
        "ifndef" => ParsedDirective::Open(Some(Directive::Ifndef), operand),
        "if" => ParsedDirective::Open(None, operand),
        "elif" => ParsedDirective::Elif,
        "else" => ParsedDirective::Else,
        _ => ParsedDirective::Endif,
    })
}

/// Normalized feature name for an `#ifdef`/`#ifndef` operand, or `None`
/// when the operand is not a macro name or a combination of macro names.
pub fn operand_name(operand: &str) -> Option<String> {
    let operand = operand.trim();
    if operand.is_empty() {
        return None;
    }
    let mut tokens = Vec::new();
    let mut consumed = 0;
    for m in OPERAND_TOKEN.find_iter(operand) {
        if !operand[consumed..m.start()].trim().is_empty() {
            return None;
        }
        tokens.push(m.as_str());
        consumed = m.end();
    }
    if !operand[consumed..].trim().is_empty() {
        return None;
    }
    let idents = tokens.iter().filter(|t| IDENT.is_match(t)).count();
    match idents {
        0 => None,
        1 if tokens.len() == 1 => Some(tokens[0].to_string()),
        1 => None,
        _ => Some(tokens.join(" ")),
    }
}

fn directive_ref(masked: &str, file: &str, line: u32, diag: &mut Diagnostics) -> Option<FeatureRef> {
    match parse_directive(masked)? {
        ParsedDirective::Open(Some(directive), operand) => match operand_name(&operand) {
            Some(name) => {
                diag.refs_found += 1;
                Some(FeatureRef {
                    name,
                    file: file.to_string(),
                    line,
                    directive,
                    expression: operand,
                })
            }
            None => {
                diag.unparseable_directives += 1;
                None
            }
        },
        _ => None,
    }
}

/// Feature references in `text`. Directives inside comments are ignored.
/// In diff mode `text` is a unified diff and every hunk line (changed or
/// context) is scanned.
pub fn extract_refs(file: &str, text: &str, mode: ScanMode) -> Vec<FeatureRef> {
    let mut diag = Diagnostics::default();
    extract_refs_with(file, text, mode, &mut diag)
}

pub fn extract_refs_with(file: &str, text: &str, mode: ScanMode, diag: &mut Diagnostics) -> Vec<FeatureRef> {
    diag.files_scanned += 1;
    match mode {
        ScanMode::Snapshot => {
            let mut state = LexState::default();
            text.lines()
                .enumerate()
                .filter_map(|(i, l)| {
                    let masked = mask_line(l, &mut state, false);
                    directive_ref(&masked, file, i as u32 + 1, diag)
                })
                .collect()
        }
        ScanMode::Diff => extract_from_diff(file, text, diag),
    }
}

fn parse_hunk_header(line: &str) -> Option<(u32, u32)> {
    // @@ -a,b +c,d @@
    let mut parts = line.split_whitespace().skip(1);
    let old = parts.next()?.strip_prefix('-')?;
    let new = parts.next()?.strip_prefix('+')?;
    let start = |s: &str| s.split(',').next().and_then(|n| n.parse().ok());
    Some((start(old)?, start(new)?))
}

fn extract_from_diff(file: &str, text: &str, diag: &mut Diagnostics) -> Vec<FeatureRef> {
    let mut refs = Vec::new();
    let mut in_hunk = false;
    let (mut old_no, mut new_no) = (0u32, 0u32);
    // each side of the hunk is lexed on its own
    let mut old_state = LexState::default();
    let mut new_state = LexState::default();
    for line in text.lines() {
        if line.starts_with("@@") {
            if let Some((o, n)) = parse_hunk_header(line) {
                old_no = o;
                new_no = n;
                in_hunk = true;
                old_state = LexState::default();
                new_state = LexState::default();
            }
            continue;
        }
        if !in_hunk {
            continue;
        }
        let Some(origin) = line.chars().next() else {
            continue;
        };
        let body = &line[origin.len_utf8()..];
        match origin {
            ' ' => {
                let _ = mask_line(body, &mut old_state, false);
                let masked = mask_line(body, &mut new_state, false);
                refs.extend(directive_ref(&masked, file, new_no, diag));
                old_no += 1;
                new_no += 1;
            }
            '+' => {
                let masked = mask_line(body, &mut new_state, false);
                refs.extend(directive_ref(&masked, file, new_no, diag));
                new_no += 1;
            }
            '-' => {
                let masked = mask_line(body, &mut old_state, false);
                refs.extend(directive_ref(&masked, file, old_no, diag));
                old_no += 1;
            }
            _ => {}
        }
    }
    refs
}

/// Drops header-macro references, counting them in `diag`.
pub fn filter_header_macros(refs: Vec<FeatureRef>, diag: &mut Diagnostics) -> Vec<FeatureRef> {
    let before = refs.len();
    let kept: Vec<FeatureRef> = refs.into_iter().filter(|r| !is_header_macro(&r.name)).collect();
    diag.header_macros_filtered += before - kept.len();
    kept
}

/// Distinct feature names among `refs`, header macros excluded.
pub fn feature_names(refs: &[FeatureRef]) -> BTreeSet<String> {
    refs.iter()
        .filter(|r| !is_header_macro(&r.name))
        .map(|r| r.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn snapshot_ifdef_is_found() {
        let refs = extract_refs("f.c", "#ifdef FEAT_A\nx;\n#endif\n", ScanMode::Snapshot);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].name, "FEAT_A");
        assert_eq!(refs[0].line, 1);
        assert_eq!(refs[0].directive, Directive::Ifdef);
    }

    #[test]
    fn commented_directives_are_ignored() {
        assert!(extract_refs("f.c", "/* #ifdef FEAT_A */", ScanMode::Snapshot).is_empty());
        assert!(extract_refs("f.c", "// #ifdef FEAT_A", ScanMode::Snapshot).is_empty());
        let text = "/*\n#ifdef HIDDEN\n*/\n#ifndef SHOWN\n#endif\n";
        let refs = extract_refs("f.c", text, ScanMode::Snapshot);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].name, "SHOWN");
        assert_eq!(refs[0].line, 4);
    }

    #[test]
    fn diff_context_line_counts() {
        let diff =
            "--- a/f.c\n+++ b/f.c\n@@ -10,5 +10,6 @@\n int x;\n #ifndef FEAT_B\n     a();\n+    b();\n #endif\n }\n";
        let refs = extract_refs("f.c", diff, ScanMode::Diff);
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].name, "FEAT_B");
        assert_eq!(refs[0].directive, Directive::Ifndef);
        assert_eq!(refs[0].line, 11);
    }

    #[test]
    fn diff_deleted_lines_use_old_numbers() {
        let diff = "@@ -3,2 +3,1 @@\n-#ifdef GONE\n x;\n";
        let refs = extract_refs("f.c", diff, ScanMode::Diff);
        assert_eq!(refs[0].line, 3);
    }

    #[test]
    fn diff_headers_are_not_scanned() {
        let diff = "--- a/#ifdef.c\n+++ b/#ifdef.c\n@@ -1,1 +1,1 @@\n-a\n+b\n";
        assert!(extract_refs("f.c", diff, ScanMode::Diff).is_empty());
    }

    #[test]
    fn compound_operands_are_normalized() {
        assert_eq!(operand_name("A & B").as_deref(), Some("A & B"));
        assert_eq!(operand_name("A&B").as_deref(), Some("A & B"));
        assert_eq!(operand_name("FEAT_A").as_deref(), Some("FEAT_A"));
        assert_eq!(operand_name(""), None);
        assert_eq!(operand_name("123"), None);
        assert_eq!(operand_name("A + B"), None);
        assert_eq!(constituents("A & B"), vec!["A", "B"]);
    }

    #[test]
    fn unparseable_operands_are_tallied() {
        let mut diag = Diagnostics::default();
        let refs = extract_refs_with("f.c", "#ifdef\n#ifdef 1\n#ifdef OK\n", ScanMode::Snapshot, &mut diag);
        assert_eq!(refs.len(), 1);
        assert_eq!(diag.unparseable_directives, 2);
        assert_eq!(diag.refs_found, 1);
    }

    #[test]
    fn trailing_comment_after_operand() {
        let refs = extract_refs(
            "f.c",
            "#ifdef FEAT_A /* why */\n#ifndef FEAT_B // x\n",
            ScanMode::Snapshot,
        );
        let names: Vec<_> = refs.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["FEAT_A", "FEAT_B"]);
    }

    #[test]
    fn header_macros() {
        assert!(is_header_macro("macroname_h_"));
        assert!(is_header_macro("CONFIG_H_"));
        assert!(is_header_macro("__PARSER_H__"));
        assert!(is_header_macro("_IO_H"));
        assert!(!is_header_macro("FEAT_A"));
        assert!(!is_header_macro("USE_SSH"));
        assert!(!is_header_macro("HAVE_HTTP"));
    }

    #[test]
    fn if_defined_contributes_no_feature() {
        assert!(extract_refs("f.c", "#if defined(X)\n#endif\n", ScanMode::Snapshot).is_empty());
    }

    #[test]
    fn c_family_extensions() {
        assert!(is_c_family("src/a.c"));
        assert!(is_c_family("b.HH"));
        assert!(!is_c_family("README.md"));
        assert!(!is_c_family("Makefile"));
    }

    proptest! {
        #[test]
        fn header_filter_is_idempotent(names in proptest::collection::vec("[A-Za-z_]{1,8}(_[hH]_?)?", 0..20)) {
            let refs: Vec<FeatureRef> = names.iter().enumerate().map(|(i, n)| FeatureRef {
                name: n.clone(), file: "f.c".into(), line: i as u32 + 1,
                directive: Directive::Ifdef, expression: n.clone(),
            }).collect();
            let mut d = Diagnostics::default();
            let once = filter_header_macros(refs, &mut d);
            let twice = filter_header_macros(once.clone(), &mut d);
            prop_assert_eq!(once, twice);
        }
    }
}
