//! Patch ingestion: unified diffs from files or version-control history,
//! size/spread filtering, and reconstitution of before/after fragments.
//!
//! Repositories are read through an external version-control process (the
//! executable name is configurable); one record is produced per non-merge
//! commit touching a C file, in reverse-chronological order.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minic::parse_unit;
use crate::udiff::{self, DiffHunk, FileDiff};
use crate::util::short_id;

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRecord {
    /// Stable hash of the diff content.
    pub patch_id: String,
    pub project_id: String,
    pub commit_id: Option<String>,
    pub files: Vec<FileDiff>,
    pub changed_line_count: usize,
    pub hunk_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub hunk_id: String,
    pub patch_id: String,
    pub project_id: String,
    pub commit_id: Option<String>,
    pub file_path: String,
    /// (start line, length) in the old file.
    pub before_range: (usize, usize),
    pub after_range: (usize, usize),
    pub removed_lines: Vec<String>,
    pub added_lines: Vec<String>,
    pub context_lines: Vec<String>,
    pub function_name: Option<String>,
    /// Enclosing function (or wrapped context) before/after the change;
    /// filled in by `reconstitute`.
    pub before_fragment: Option<String>,
    pub after_fragment: Option<String>,
    #[serde(skip)]
    pub raw: Option<DiffHunk>,
}

impl PatchRecord {
    pub fn from_diff_text(text: &str, project_id: &str, commit_id: Option<&str>) -> Result<Self> {
        let files = udiff::parse_diff(text)?;
        let changed_line_count = files
            .iter()
            .flat_map(|f| &f.hunks)
            .map(|h| h.changed_line_count())
            .sum();
        let hunk_count = files.iter().map(|f| f.hunks.len()).sum();
        Ok(PatchRecord {
            patch_id: short_id(text.as_bytes()),
            project_id: project_id.to_string(),
            commit_id: commit_id.map(|s| s.to_string()),
            files,
            changed_line_count,
            hunk_count,
        })
    }

    /// Explode the record into per-hunk units.
    pub fn hunks(&self) -> Vec<Hunk> {
        let mut out = Vec::new();
        for file in &self.files {
            for (i, h) in file.hunks.iter().enumerate() {
                let content = format!("{}:{}:{}:{:?}", self.patch_id, file.path(), i, h);
                out.push(Hunk {
                    hunk_id: short_id(content.as_bytes()),
                    patch_id: self.patch_id.clone(),
                    project_id: self.project_id.clone(),
                    commit_id: self.commit_id.clone(),
                    file_path: file.path().to_string(),
                    before_range: (h.old_start, h.old_len),
                    after_range: (h.new_start, h.new_len),
                    removed_lines: h.removed_lines().iter().map(|s| s.to_string()).collect(),
                    added_lines: h.added_lines().iter().map(|s| s.to_string()).collect(),
                    context_lines: h.context_lines().iter().map(|s| s.to_string()).collect(),
                    function_name: None,
                    before_fragment: None,
                    after_fragment: None,
                    raw: Some(h.clone()),
                });
            }
        }
        out
    }
}

/// Parse unified diff text into a patch record (project/commit left blank).
pub fn parse_unified_diff(text: &str) -> Result<PatchRecord> {
    PatchRecord::from_diff_text(text, "", None)
}

// ---------------------------------------------------------------------------
// Filter
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningFilter {
    pub max_changed_lines: usize,
    pub max_hunks: usize,
}

impl Default for MiningFilter {
    fn default() -> Self {
        MiningFilter {
            max_changed_lines: 50,
            max_hunks: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    /// Dropped, with the violated limit named.
    Drop(DropReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// More changed lines than `max_changed_lines`.
    Size,
    /// More hunks than `max_hunks`.
    Spread,
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DropReason::Size => write!(f, "size"),
            DropReason::Spread => write!(f, "spread"),
        }
    }
}

/// Both limits are inclusive ("at most"), so a 50-line, 3-hunk patch is kept.
pub fn filter_patch(record: &PatchRecord, filter: &MiningFilter) -> FilterDecision {
    if record.changed_line_count > filter.max_changed_lines {
        FilterDecision::Drop(DropReason::Size)
    } else if record.hunk_count > filter.max_hunks {
        FilterDecision::Drop(DropReason::Spread)
    } else {
        FilterDecision::Keep
    }
}

pub fn is_c_file(path: &str) -> bool {
    Path::new(path)
        .extension()
        .map(|e| e == "c" || e == "h")
        .unwrap_or(false)
}

// ---------------------------------------------------------------------------
// Repository mining
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GitRepo {
    pub path: PathBuf,
    pub executable: String,
}

impl GitRepo {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        if !path.is_dir() {
            return Err(Error::Input {
                path,
                msg: "not a directory".into(),
            });
        }
        let repo = GitRepo {
            path,
            executable: "git".into(),
        };
        let out = repo.run(&["rev-parse", "--is-inside-work-tree"])?;
        if out.trim() != "true" {
            return Err(Error::Input {
                path: repo.path,
                msg: "not a version-control working directory".into(),
            });
        }
        Ok(repo)
    }

    pub fn with_executable(mut self, exe: &str) -> Self {
        self.executable = exe.to_string();
        self
    }

    fn run(&self, args: &[&str]) -> Result<String> {
        let out = Command::new(&self.executable)
            .arg("-C")
            .arg(&self.path)
            .args(args)
            .output()
            .map_err(|e| Error::Mining(format!("cannot run {}: {e}", self.executable)))?;
        if !out.status.success() {
            return Err(Error::Mining(format!(
                "{} {} failed: {}",
                self.executable,
                args.first().unwrap_or(&""),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }

    /// Commit hashes, newest first, merges skipped.
    pub fn log(&self) -> Result<Vec<String>> {
        let out = self.run(&["log", "--no-merges", "--pretty=format:%H"])?;
        Ok(out.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()).collect())
    }

    /// Unified diff of one commit restricted to C files ("" when none).
    pub fn show_diff(&self, commit: &str) -> Result<String> {
        self.run(&[
            "show", commit, "--format=", "--unified=3", "--no-color", "--", "*.c", "*.h",
        ])
    }

    /// File content just before `commit` (None for files new in the commit).
    pub fn file_before(&self, commit: &str, path: &str) -> Option<String> {
        self.run(&["show", &format!("{commit}^:{path}")]).ok()
    }

    pub fn project_id(&self) -> String {
        self.path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "repository".into())
    }
}

/// Mine a repository: one record per commit touching a C file, newest first,
/// post-filtered.
pub fn mine_repository(repo: &GitRepo, filter: &MiningFilter) -> Result<Vec<PatchRecord>> {
    let project = repo.project_id();
    let mut records = Vec::new();
    for sha in repo.log()? {
        let diff = repo.show_diff(&sha)?;
        if diff.trim().is_empty() {
            continue;
        }
        let mut record = PatchRecord::from_diff_text(&diff, &project, Some(&sha))?;
        record.files.retain(|f| is_c_file(f.path()));
        if record.files.is_empty() {
            continue;
        }
        record.changed_line_count = record
            .files
            .iter()
            .flat_map(|f| &f.hunks)
            .map(|h| h.changed_line_count())
            .sum();
        record.hunk_count = record.files.iter().map(|f| f.hunks.len()).sum();
        if record.hunk_count == 0 {
            continue;
        }
        if filter_patch(&record, filter) == FilterDecision::Keep {
            records.push(record);
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Reconstitution
// ---------------------------------------------------------------------------

fn line_count(text: &str) -> usize {
    udiff::split_lines(text).0.len()
}

fn slice_lines(text: &str, first: usize, last: usize) -> String {
    let (lines, _) = udiff::split_lines(text);
    let first = first.saturating_sub(1);
    let last = last.min(lines.len());
    let mut out = lines[first..last].join("\n");
    out.push('\n');
    out
}

/// Wrap loose lines in a synthetic function so control flow exists.
fn wrap_fragment(lines: &[String]) -> String {
    let mut out = String::from("void __fragment__(void) {\n");
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Find the function definition whose line span contains `[first, last]`.
fn enclosing_function(source: &str, file: &str, first: usize, last: usize) -> Option<(String, usize, usize)> {
    let unit = parse_unit(source, file);
    for func in unit.functions() {
        let n = unit.node(func);
        let start_line = unit.tokens[n.tok_start].line as usize;
        let end_line = unit.tokens[n.tok_end - 1].line as usize;
        if start_line <= first && last <= end_line {
            return Some((unit.function_name(func).to_string(), start_line, end_line));
        }
    }
    None
}

/// Rebuild the before/after fragments around a hunk. The fragments are the
/// smallest enclosing function when one exists, otherwise the hunk plus its
/// context wrapped in a synthetic function.
pub fn reconstitute(hunk: &Hunk, before_file_text: &str) -> Result<(String, String)> {
    let raw = hunk.raw.clone().unwrap_or_else(|| rebuild_raw(hunk));
    let (before_lines, _) = udiff::split_lines(before_file_text);
    let patched = udiff::apply_hunk(&before_lines, &raw)?;
    let after_file: String = {
        let mut s = patched.join("\n");
        s.push('\n');
        s
    };

    let b_first = raw.old_start.max(1);
    let b_last = if raw.old_len == 0 {
        b_first
    } else {
        raw.old_start + raw.old_len - 1
    };
    match enclosing_function(before_file_text, &hunk.file_path, b_first, b_last) {
        Some((name, start, end)) => {
            let before_frag = slice_lines(before_file_text, start, end);
            // The same function in the patched file: shifted by the hunk's
            // line delta inside it.
            let delta = raw.new_len as isize - raw.old_len as isize;
            let after_end = (end as isize + delta).max(start as isize) as usize;
            let after_frag = slice_lines(&after_file, start, after_end.min(line_count(&after_file)));
            let _ = name;
            Ok((before_frag, after_frag))
        }
        None => {
            let mut before_lines = Vec::new();
            let mut after_lines = Vec::new();
            for l in &raw.lines {
                match l {
                    udiff::DiffLine::Context(s) => {
                        before_lines.push(s.clone());
                        after_lines.push(s.clone());
                    }
                    udiff::DiffLine::Removed(s) => before_lines.push(s.clone()),
                    udiff::DiffLine::Added(s) => after_lines.push(s.clone()),
                }
            }
            Ok((wrap_fragment(&before_lines), wrap_fragment(&after_lines)))
        }
    }
}

/// Hunk name recovery: parse the before fragment and report the function
/// containing the change (None for wrapped fragments).
pub fn enclosing_function_name(hunk: &Hunk, before_file_text: &str) -> Option<String> {
    let raw = hunk.raw.clone().unwrap_or_else(|| rebuild_raw(hunk));
    let first = raw.old_start.max(1);
    let last = if raw.old_len == 0 {
        first
    } else {
        raw.old_start + raw.old_len - 1
    };
    enclosing_function(before_file_text, &hunk.file_path, first, last).map(|(n, _, _)| n)
}

/// Reassemble the structured diff hunk from the stored line lists. Only used
/// for hunks deserialized from storage (the in-memory path keeps `raw`).
fn rebuild_raw(hunk: &Hunk) -> DiffHunk {
    // Interleave: context lines are shared; we conservatively emit removed
    // then added between contexts. Stored hunks round-trip `raw` in practice.
    let mut lines = Vec::new();
    for l in &hunk.removed_lines {
        lines.push(udiff::DiffLine::Removed(l.clone()));
    }
    for l in &hunk.added_lines {
        lines.push(udiff::DiffLine::Added(l.clone()));
    }
    DiffHunk {
        old_start: hunk.before_range.0,
        old_len: hunk.before_range.1,
        new_start: hunk.after_range.0,
        new_len: hunk.after_range.1,
        lines,
    }
}

/// Synthetic-fragment marker function name.
pub const FRAGMENT_WRAPPER: &str = "__fragment__";

/// Projects contributing to a hunk set (for stats).
pub fn distinct_projects(hunks: &[Hunk]) -> BTreeSet<String> {
    hunks.iter().map(|h| h.project_id.clone()).collect()
}
