//! Pattern database: `<root>/patterns/<id>.cocci` plus `<root>/index.jsonl`
//! with one record per patch carrying recall/precision, frequency counts at
//! the five granularities, and provenance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patlang::{
    parse_generic_patch, render_generic_patch, GenericPatch, Provenance, Severity,
};
use crate::util::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub id: String,
    /// Pattern file path relative to the database root.
    pub file: String,
    pub recall: f64,
    pub precision: f64,
    pub freq_hunk: usize,
    pub freq_function: usize,
    pub freq_file: usize,
    pub freq_patch: usize,
    pub freq_project: usize,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone)]
pub struct DbEntry {
    pub row: IndexRow,
    pub patch: GenericPatch,
}

#[derive(Debug, Clone, Default)]
pub struct PatternDb {
    pub root: PathBuf,
    pub entries: BTreeMap<String, DbEntry>,
    /// Rows that failed to load, with the reason.
    pub warnings: Vec<String>,
}

impl PatternDb {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&DbEntry> {
        self.entries.get(id)
    }
}

/// Load and validate a pattern database. Invalid rows are skipped with a
/// warning; a missing index is an error.
pub fn load_pattern_db(root: &Path) -> Result<PatternDb> {
    let index_path = root.join("index.jsonl");
    if !index_path.is_file() {
        return Err(Error::PatternDb(format!(
            "no index: {} does not exist",
            index_path.display()
        )));
    }
    let text = std::fs::read_to_string(&index_path)?;
    let mut db = PatternDb {
        root: root.to_path_buf(),
        ..Default::default()
    };
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: IndexRow = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                db.warnings.push(format!("index line {}: {e}", lineno + 1));
                continue;
            }
        };
        let pattern_path = root.join(&row.file);
        let pattern_text = match std::fs::read_to_string(&pattern_path) {
            Ok(t) => t,
            Err(e) => {
                db.warnings.push(format!(
                    "patch {}: cannot read {}: {e}",
                    row.id,
                    pattern_path.display()
                ));
                continue;
            }
        };
        let mut patch = match parse_generic_patch(&pattern_text) {
            Ok(p) => p,
            Err(e) => {
                db.warnings.push(format!("patch {}: {e}", row.id));
                continue;
            }
        };
        let errors: Vec<String> = crate::patlang::validate(&patch)
            .into_iter()
            .filter(|i| i.severity == Severity::Error)
            .map(|i| i.to_string())
            .collect();
        if !errors.is_empty() {
            db.warnings
                .push(format!("patch {}: {}", row.id, errors.join("; ")));
            continue;
        }
        patch.patch_id = row.id.clone();
        patch.provenance = row.provenance.clone();
        patch.stats.recall = row.recall;
        patch.stats.precision = row.precision;
        patch.stats.freq = crate::patlang::Frequency {
            hunk: row.freq_hunk,
            function: row.freq_function,
            file: row.freq_file,
            patch: row.freq_patch,
            project: row.freq_project,
        };
        if db.entries.contains_key(&row.id) {
            db.warnings.push(format!("duplicate patch id {}", row.id));
            continue;
        }
        db.entries.insert(row.id.clone(), DbEntry { row, patch });
    }
    Ok(db)
}

/// Write patches as a pattern database (atomic per file).
pub fn write_pattern_db(root: &Path, patches: &[GenericPatch]) -> Result<()> {
    std::fs::create_dir_all(root.join("patterns"))?;
    let mut index = String::new();
    for p in patches {
        let file = format!("patterns/{}.cocci", p.patch_id);
        write_atomic(&root.join(&file), &render_generic_patch(p))?;
        let row = IndexRow {
            id: p.patch_id.clone(),
            file,
            recall: p.stats.recall,
            precision: p.stats.precision,
            freq_hunk: p.stats.freq.hunk,
            freq_function: p.stats.freq.function,
            freq_file: p.stats.freq.file,
            freq_patch: p.stats.freq.patch,
            freq_project: p.stats.freq.project,
            provenance: p.provenance.clone(),
        };
        index.push_str(&serde_json::to_string(&row)?);
        index.push('\n');
    }
    write_atomic(&root.join("index.jsonl"), &index)?;
    Ok(())
}
