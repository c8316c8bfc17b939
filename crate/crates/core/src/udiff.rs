//! Unified diff parsing, rendering, computation and application.
//!
//! Parsing accepts plain `---`/`+++` diffs as well as `diff --git` output and
//! validates hunk bodies against their `@@` headers. Application verifies
//! context exactly and reports stale hunks instead of fuzzing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffLine {
    Context(String),
    Removed(String),
    Added(String),
}

impl DiffLine {
    pub fn text(&self) -> &str {
        match self {
            DiffLine::Context(s) | DiffLine::Removed(s) | DiffLine::Added(s) => s,
        }
    }

    fn sigil(&self) -> char {
        match self {
            DiffLine::Context(_) => ' ',
            DiffLine::Removed(_) => '-',
            DiffLine::Added(_) => '+',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffHunk {
    /// 1-based first line of the hunk in the old file (0 for empty ranges).
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<DiffLine>,
}

impl DiffHunk {
    pub fn removed_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                DiffLine::Removed(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn added_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                DiffLine::Added(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn context_lines(&self) -> Vec<&str> {
        self.lines
            .iter()
            .filter_map(|l| match l {
                DiffLine::Context(s) => Some(s.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Total `+` plus `-` lines.
    pub fn changed_line_count(&self) -> usize {
        self.lines
            .iter()
            .filter(|l| !matches!(l, DiffLine::Context(_)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    /// Path from the `---` header, `a/` prefix stripped.
    pub old_path: String,
    /// Path from the `+++` header, `b/` prefix stripped.
    pub new_path: String,
    pub hunks: Vec<DiffHunk>,
}

impl FileDiff {
    /// The path this diff applies to (the new path, except for deletions).
    pub fn path(&self) -> &str {
        if self.new_path == "/dev/null" {
            &self.old_path
        } else {
            &self.new_path
        }
    }
}

fn strip_prefix(path: &str) -> String {
    let path = path.split('\t').next().unwrap_or(path);
    let stripped = path
        .strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path);
    stripped.to_string()
}

fn parse_hunk_header(line: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = line.strip_prefix("@@ -")?;
    let (ranges, _) = rest.split_once(" @@")?;
    let (old, new) = ranges.split_once(" +")?;
    let parse_range = |s: &str| -> Option<(usize, usize)> {
        match s.split_once(',') {
            Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
            None => Some((s.parse().ok()?, 1)),
        }
    };
    let (os, ol) = parse_range(old)?;
    let (ns, nl) = parse_range(new)?;
    Some((os, ol, ns, nl))
}

/// Parse a unified diff, possibly spanning several files.
pub fn parse_diff(text: &str) -> Result<Vec<FileDiff>> {
    let mut files: Vec<FileDiff> = Vec::new();
    let mut lines = text.lines().peekable();
    let mut old_path: Option<String> = None;

    while let Some(line) = lines.next() {
        if let Some(p) = line.strip_prefix("--- ") {
            old_path = Some(strip_prefix(p));
        } else if let Some(p) = line.strip_prefix("+++ ") {
            let old = old_path.take().ok_or_else(|| {
                Error::MalformedDiff("`+++` header without a preceding `---`".into())
            })?;
            files.push(FileDiff {
                old_path: old,
                new_path: strip_prefix(p),
                hunks: Vec::new(),
            });
        } else if line.starts_with("@@ -") {
            let (old_start, old_len, new_start, new_len) = parse_hunk_header(line)
                .ok_or_else(|| Error::MalformedDiff(format!("bad hunk header: {line}")))?;
            let file = files
                .last_mut()
                .ok_or_else(|| Error::MalformedDiff("hunk before file headers".into()))?;
            let hunk_no = file.hunks.len() + 1;
            let mut hunk = DiffHunk {
                old_start,
                old_len,
                new_start,
                new_len,
                lines: Vec::new(),
            };
            let (mut got_old, mut got_new) = (0usize, 0usize);
            while got_old < old_len || got_new < new_len {
                let body = lines.next().ok_or_else(|| {
                    Error::MalformedDiff(format!(
                        "hunk {hunk_no} of {}: body shorter than header claims",
                        file.path()
                    ))
                })?;
                if body.starts_with('\\') {
                    continue; // "No newline at end of file"
                }
                let (sigil, rest) = if body.is_empty() {
                    (' ', "")
                } else {
                    (body.as_bytes()[0] as char, &body[1..])
                };
                match sigil {
                    ' ' => {
                        got_old += 1;
                        got_new += 1;
                        hunk.lines.push(DiffLine::Context(rest.to_string()));
                    }
                    '-' => {
                        got_old += 1;
                        hunk.lines.push(DiffLine::Removed(rest.to_string()));
                    }
                    '+' => {
                        got_new += 1;
                        hunk.lines.push(DiffLine::Added(rest.to_string()));
                    }
                    _ => {
                        return Err(Error::MalformedDiff(format!(
                            "hunk {hunk_no} of {}: unexpected line {body:?}",
                            file.path()
                        )))
                    }
                }
                if got_old > old_len || got_new > new_len {
                    return Err(Error::MalformedDiff(format!(
                        "hunk {hunk_no} of {}: body longer than header claims",
                        file.path()
                    )));
                }
            }
            file.hunks.push(hunk);
        }
        // anything else (diff --git, index, mode lines) is passed over
    }

    if files.is_empty() {
        return Err(Error::MalformedDiff("no file headers found".into()));
    }
    Ok(files)
}

/// Render one or more file diffs back to unified diff text.
pub fn render_diff(files: &[FileDiff]) -> String {
    let mut out = String::new();
    for f in files {
        out.push_str(&format!("--- a/{}\n", f.old_path));
        out.push_str(&format!("+++ b/{}\n", f.new_path));
        for h in &f.hunks {
            out.push_str(&format!(
                "@@ -{},{} +{},{} @@\n",
                h.old_start, h.old_len, h.new_start, h.new_len
            ));
            for l in &h.lines {
                out.push(l.sigil());
                out.push_str(l.text());
                out.push('\n');
            }
        }
    }
    out
}

/// Split text into lines without terminators; the flag records whether the
/// text ended with a newline.
pub fn split_lines(text: &str) -> (Vec<&str>, bool) {
    if text.is_empty() {
        return (Vec::new(), true);
    }
    let ends_nl = text.ends_with('\n');
    (text.lines().collect(), ends_nl)
}

/// Apply a single hunk to a line vector, verifying context and removed lines
/// exactly. Returns the patched lines.
pub fn apply_hunk(lines: &[&str], hunk: &DiffHunk) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::with_capacity(lines.len() + hunk.new_len);
    let start = hunk.old_start.saturating_sub(1);
    if start > lines.len() {
        return Err(Error::StaleHunk(format!(
            "hunk starts at line {} but file has {} lines",
            hunk.old_start,
            lines.len()
        )));
    }
    out.extend(lines[..start].iter().map(|s| s.to_string()));
    let mut cursor = start;
    for l in &hunk.lines {
        match l {
            DiffLine::Context(s) | DiffLine::Removed(s) => {
                let actual = lines.get(cursor).copied().ok_or_else(|| {
                    Error::StaleHunk(format!("file ends before hunk line {:?}", s))
                })?;
                if actual != s {
                    return Err(Error::StaleHunk(format!(
                        "line {}: expected {:?}, found {:?}",
                        cursor + 1,
                        s,
                        actual
                    )));
                }
                cursor += 1;
                if matches!(l, DiffLine::Context(_)) {
                    out.push(s.clone());
                }
            }
            DiffLine::Added(s) => out.push(s.clone()),
        }
    }
    out.extend(lines[cursor..].iter().map(|s| s.to_string()));
    Ok(out)
}

/// Apply every hunk of a file diff to the old file text.
pub fn apply_file_diff(old_text: &str, diff: &FileDiff) -> Result<String> {
    let (lines, ends_nl) = split_lines(old_text);
    let mut current: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    // Later hunks shift as earlier ones change the line count.
    let mut offset: isize = 0;
    for hunk in &diff.hunks {
        let mut shifted = hunk.clone();
        shifted.old_start = (hunk.old_start as isize + offset).max(0) as usize;
        let borrowed: Vec<&str> = current.iter().map(|s| s.as_str()).collect();
        current = apply_hunk(&borrowed, &shifted)?;
        offset += hunk.new_len as isize - hunk.old_len as isize;
    }
    let mut out = current.join("\n");
    if ends_nl && !out.is_empty() {
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Keep,
    Del,
    Ins,
}

/// Line-level LCS edit sequence. Common prefix/suffix are trimmed first so the
/// quadratic table only covers the changed middle.
fn line_ops(old: &[&str], new: &[&str]) -> Vec<Op> {
    let mut prefix = 0;
    while prefix < old.len() && prefix < new.len() && old[prefix] == new[prefix] {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < old.len() - prefix && suffix < new.len() - prefix
        && old[old.len() - 1 - suffix] == new[new.len() - 1 - suffix]
    {
        suffix += 1;
    }
    let o = &old[prefix..old.len() - suffix];
    let n = &new[prefix..new.len() - suffix];

    let mut ops = vec![Op::Keep; prefix];
    if o.len().saturating_mul(n.len()) > 16_000_000 {
        // Degenerate inputs: whole-middle replacement.
        ops.extend(std::iter::repeat(Op::Del).take(o.len()));
        ops.extend(std::iter::repeat(Op::Ins).take(n.len()));
    } else {
        // LCS table, then deterministic backtrack (Keep > Del > Ins).
        let (rows, cols) = (o.len() + 1, n.len() + 1);
        let mut table = vec![0u32; rows * cols];
        for i in (0..o.len()).rev() {
            for j in (0..n.len()).rev() {
                table[i * cols + j] = if o[i] == n[j] {
                    table[(i + 1) * cols + j + 1] + 1
                } else {
                    table[(i + 1) * cols + j].max(table[i * cols + j + 1])
                };
            }
        }
        let (mut i, mut j) = (0, 0);
        let mut mid = Vec::new();
        while i < o.len() && j < n.len() {
            if o[i] == n[j] {
                mid.push(Op::Keep);
                i += 1;
                j += 1;
            } else if table[(i + 1) * cols + j] >= table[i * cols + j + 1] {
                mid.push(Op::Del);
                i += 1;
            } else {
                mid.push(Op::Ins);
                j += 1;
            }
        }
        mid.extend(std::iter::repeat(Op::Del).take(o.len() - i));
        mid.extend(std::iter::repeat(Op::Ins).take(n.len() - j));
        ops.extend(mid);
    }
    ops.extend(std::iter::repeat(Op::Keep).take(suffix));
    ops
}

/// Compute a minimal unified diff between two texts. Returns `None` when the
/// texts are equal.
pub fn diff_texts(
    old_text: &str,
    new_text: &str,
    old_path: &str,
    new_path: &str,
    context: usize,
) -> Option<FileDiff> {
    if old_text == new_text {
        return None;
    }
    let (old, _) = split_lines(old_text);
    let (new, _) = split_lines(new_text);
    let ops = line_ops(&old, &new);

    // Walk ops, grouping changes with `context` lines around them.
    #[derive(Clone)]
    struct Run {
        first_change: usize,
        last_change: usize,
    }
    let mut runs: Vec<Run> = Vec::new();
    for (idx, op) in ops.iter().enumerate() {
        if *op != Op::Keep {
            match runs.last_mut() {
                Some(r) if idx <= r.last_change + 2 * context + 1 => r.last_change = idx,
                _ => runs.push(Run {
                    first_change: idx,
                    last_change: idx,
                }),
            }
        }
    }
    if runs.is_empty() {
        return None;
    }

    // Positions of each op in old/new line space.
    let mut positions = Vec::with_capacity(ops.len());
    let (mut oi, mut ni) = (0usize, 0usize);
    for op in &ops {
        positions.push((oi, ni));
        match op {
            Op::Keep => {
                oi += 1;
                ni += 1;
            }
            Op::Del => oi += 1,
            Op::Ins => ni += 1,
        }
    }

    let mut hunks = Vec::new();
    for run in runs {
        let start = run.first_change.saturating_sub(context);
        let end = (run.last_change + context + 1).min(ops.len());
        let (old_start0, new_start0) = positions[start];
        let mut lines = Vec::new();
        let (mut ol, mut nl) = (0usize, 0usize);
        for idx in start..end {
            match ops[idx] {
                Op::Keep => {
                    lines.push(DiffLine::Context(old[positions[idx].0].to_string()));
                    ol += 1;
                    nl += 1;
                }
                Op::Del => {
                    lines.push(DiffLine::Removed(old[positions[idx].0].to_string()));
                    ol += 1;
                }
                Op::Ins => {
                    lines.push(DiffLine::Added(new[positions[idx].1].to_string()));
                    nl += 1;
                }
            }
        }
        hunks.push(DiffHunk {
            old_start: if ol == 0 { old_start0 } else { old_start0 + 1 },
            old_len: ol,
            new_start: if nl == 0 { new_start0 } else { new_start0 + 1 },
            new_len: nl,
            lines,
        });
    }

    Some(FileDiff {
        old_path: old_path.to_string(),
        new_path: new_path.to_string(),
        hunks,
    })
}

/// Convenience wrapper rendering straight to text ("" when equal).
pub fn unified_diff(old_text: &str, new_text: &str, path: &str, context: usize) -> String {
    match diff_texts(old_text, new_text, path, path, context) {
        Some(d) => render_diff(std::slice::from_ref(&d)),
        None => String::new(),
    }
}
