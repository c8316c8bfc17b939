//! Generate-and-validate repair orchestration.
//!
//! Patterns are ordered by a freqency-based strategy, candidates are
//! generated patch-by-patch over the suspicious files (per match site, each
//! against a pristine project copy) and validated in a sandbox by compiling
//! and running the test suites. The loop stops at the first plausible
//! candidate unless `find_all` is set; NPC counts the candidates consumed
//! before that point.

pub mod db;
pub mod sandbox;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::engine::{apply_rule, match_rule, MatchConfig};
use crate::error::{Error, Result};
use crate::minic::parse_unit;
use crate::patlang::Provenance;
use crate::udiff;

pub use db::{load_pattern_db, write_pattern_db, DbEntry, IndexRow, PatternDb};
pub use sandbox::{copy_tree, run_command, RunResult};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Hunk,
    Function,
    File,
    Patch,
    Project,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hunk" => Strategy::Hunk,
            "function" => Strategy::Function,
            "file" => Strategy::File,
            "patch" => Strategy::Patch,
            "project" => Strategy::Project,
            other => {
                return Err(Error::Config(format!(
                    "unknown strategy {other:?} (expected hunk|function|file|patch|project)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct RepairConfig {
    pub project_dir: PathBuf,
    /// Relative paths; empty means every `.c` file under the project in
    /// path order.
    pub suspicious_files: Vec<PathBuf>,
    pub build_command: String,
    /// Test suite I (the repair suite).
    pub test_command: String,
    /// Held-out test suite II, when available.
    pub test_command_2: Option<String>,
    pub strategy: Strategy,
    pub candidate_budget: usize,
    pub per_test_timeout: Duration,
    /// Continue past the first plausible candidate.
    pub find_all: bool,
}

impl RepairConfig {
    pub fn new(project_dir: impl Into<PathBuf>, build: &str, test: &str) -> Self {
        RepairConfig {
            project_dir: project_dir.into(),
            suspicious_files: Vec::new(),
            build_command: build.to_string(),
            test_command: test.to_string(),
            test_command_2: None,
            strategy: Strategy::Hunk,
            candidate_budget: 10_000,
            per_test_timeout: Duration::from_secs(30),
            find_all: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.candidate_budget == 0 {
            return Err(Error::Config("candidate budget must be at least 1".into()));
        }
        if self.build_command.trim().is_empty() || self.test_command.trim().is_empty() {
            return Err(Error::Config("build and test commands must be non-empty".into()));
        }
        if !self.project_dir.is_dir() {
            return Err(Error::Config(format!(
                "project directory {} does not exist",
                self.project_dir.display()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Prioritization
// ---------------------------------------------------------------------------

/// Order patch ids by the selected frequency, descending; ties break by
/// descending hunk count, then ascending id (a total order).
pub fn prioritize(db: &PatternDb, strategy: Strategy) -> Vec<String> {
    let mut ids: Vec<(&String, &DbEntry)> = db.entries.iter().collect();
    let freq_of = |e: &DbEntry| match strategy {
        Strategy::Hunk => e.row.freq_hunk,
        Strategy::Function => e.row.freq_function,
        Strategy::File => e.row.freq_file,
        Strategy::Patch => e.row.freq_patch,
        Strategy::Project => e.row.freq_project,
    };
    ids.sort_by(|(ida, a), (idb, b)| {
        freq_of(b)
            .cmp(&freq_of(a))
            .then(b.row.freq_hunk.cmp(&a.row.freq_hunk))
            .then(ida.cmp(idb))
    });
    ids.into_iter().map(|(id, _)| id.clone()).collect()
}

// ---------------------------------------------------------------------------
// Candidate generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Candidate {
    /// 1-based serial position in the generation order.
    pub index: usize,
    pub patch_id: String,
    pub rule_name: String,
    pub site_digest: String,
    /// Target file, relative to the project root.
    pub file: PathBuf,
    pub diff: String,
    pub patched_text: String,
}

impl Candidate {
    pub fn digest(&self) -> String {
        crate::util::short_id(format!("{}|{}|{}", self.patch_id, self.file.display(), self.diff).as_bytes())
    }
}

/// All `.c` files under a directory, in sorted relative-path order.
pub fn default_suspicious_files(project_dir: &Path) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let path = e.path();
            if e.file_type()?.is_dir() {
                if e.file_name() != ".git" {
                    walk(&path, root, out)?;
                }
            } else if path.extension().map(|x| x == "c").unwrap_or(false) {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(project_dir, project_dir, &mut out)?;
    Ok(out)
}

/// Deterministic candidate stream: patch order outer, file order middle,
/// site order inner; stops at the budget.
pub fn generate_candidates(
    db: &PatternDb,
    order: &[String],
    files: &[PathBuf],
    project_dir: &Path,
    budget: usize,
) -> Result<Vec<Candidate>> {
    let config = MatchConfig::default();
    let mut out = Vec::new();
    for pid in order {
        let Some(entry) = db.get(pid) else { continue };
        for file in files {
            let full = project_dir.join(file);
            let Ok(text) = std::fs::read_to_string(&full) else {
                continue;
            };
            let unit = parse_unit(&text, &file.to_string_lossy());
            for rule in &entry.patch.rules {
                for site in match_rule(rule, &unit, &config) {
                    let patch = apply_rule(rule, &unit, &site)?;
                    if patch.diff.is_empty() {
                        continue;
                    }
                    out.push(Candidate {
                        index: out.len() + 1,
                        patch_id: pid.clone(),
                        rule_name: rule.name.clone(),
                        site_digest: patch.site_digest.clone(),
                        file: file.clone(),
                        diff: patch.diff,
                        patched_text: patch.patched_text,
                    });
                    if out.len() >= budget {
                        return Ok(out);
                    }
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Nonsensical,
    InPlausible,
    Plausible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub candidate_index: usize,
    pub patch_id: String,
    pub site_digest: String,
    pub file: String,
    pub status: Status,
    /// Meaningful only for plausible candidates when suite II exists.
    pub promoted_correct: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
}

/// Candidate validation backend. The production implementation compiles and
/// tests in a sandbox; tests can script outcome sequences.
pub trait CandidateValidator {
    fn validate(&mut self, candidate: &Candidate) -> Result<Status>;
    /// Suite II check, called only for plausible candidates.
    fn promote(&mut self, _candidate: &Candidate) -> Result<bool> {
        Ok(false)
    }
    fn has_second_suite(&self) -> bool {
        false
    }
}

/// Compile-and-test validation in a temporary project copy.
pub struct SandboxValidator<'a> {
    pub config: &'a RepairConfig,
}

impl<'a> SandboxValidator<'a> {
    fn sandbox_with(&self, candidate: &Candidate) -> Result<tempfile::TempDir> {
        let dir = tempfile::tempdir().map_err(|e| Error::Sandbox(e.to_string()))?;
        copy_tree(&self.config.project_dir, dir.path())?;
        std::fs::write(dir.path().join(&candidate.file), &candidate.patched_text)?;
        Ok(dir)
    }
}

impl<'a> CandidateValidator for SandboxValidator<'a> {
    fn validate(&mut self, candidate: &Candidate) -> Result<Status> {
        let dir = self.sandbox_with(candidate)?;
        let t = self.config.per_test_timeout;
        match run_command(&self.config.build_command, dir.path(), t)? {
            RunResult::Success => {}
            _ => return Ok(Status::Nonsensical),
        }
        match run_command(&self.config.test_command, dir.path(), t)? {
            RunResult::Success => Ok(Status::Plausible),
            _ => Ok(Status::InPlausible),
        }
    }

    fn promote(&mut self, candidate: &Candidate) -> Result<bool> {
        let Some(cmd) = &self.config.test_command_2 else {
            return Ok(false);
        };
        let dir = self.sandbox_with(candidate)?;
        // suite II runs after a fresh build in its own sandbox
        let t = self.config.per_test_timeout;
        if run_command(&self.config.build_command, dir.path(), t)? != RunResult::Success {
            return Ok(false);
        }
        Ok(run_command(cmd, dir.path(), t)? == RunResult::Success)
    }

    fn has_second_suite(&self) -> bool {
        self.config.test_command_2.is_some()
    }
}

// ---------------------------------------------------------------------------
// The repair loop and its report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub strategy: Strategy,
    pub outcomes: Vec<CandidateOutcome>,
    pub first_plausible_index: Option<usize>,
    /// Candidates consumed before the first plausible one.
    pub npc_all: Option<usize>,
    /// Same, counting only candidates that compiled.
    pub npc_sensical: Option<usize>,
    /// Unified diff of the first plausible candidate.
    pub plausible_diff: Option<String>,
    pub candidates_generated: usize,
    pub infrastructure_errors: usize,
    pub wall_seconds: f64,
}

impl RepairReport {
    /// JSON with timing zeroed, for byte-identical comparisons.
    pub fn canonical_json(&self) -> String {
        let mut clone = self.clone();
        clone.wall_seconds = 0.0;
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }
}

/// Compute NPC figures from an outcome sequence.
pub fn npc_of(outcomes: &[CandidateOutcome]) -> (Option<usize>, Option<usize>, Option<usize>) {
    let first = outcomes.iter().position(|o| o.status == Status::Plausible);
    match first {
        None => (None, None, None),
        Some(pos) => {
            let npc_all = pos;
            let nonsensical = outcomes[..pos]
                .iter()
                .filter(|o| o.status == Status::Nonsensical)
                .count();
            (
                Some(outcomes[pos].candidate_index),
                Some(npc_all),
                Some(npc_all - nonsensical),
            )
        }
    }
}

/// Run the generate-and-validate loop with a custom validator.
pub fn repair_with<V: CandidateValidator>(
    config: &RepairConfig,
    db: &PatternDb,
    validator: &mut V,
) -> Result<RepairReport> {
    let order = prioritize(db, config.strategy);
    repair_ordered(config, db, &order, validator)
}

/// Same loop, but with an explicit pattern order (used to compare
/// prioritization strategies against fixed baselines).
pub fn repair_ordered<V: CandidateValidator>(
    config: &RepairConfig,
    db: &PatternDb,
    order: &[String],
    validator: &mut V,
) -> Result<RepairReport> {
    config.validate()?;
    let started = Instant::now();
    let files = if config.suspicious_files.is_empty() {
        default_suspicious_files(&config.project_dir)?
    } else {
        config.suspicious_files.clone()
    };
    let candidates = generate_candidates(db, order, &files, &config.project_dir, config.candidate_budget)?;

    let mut outcomes = Vec::new();
    let mut infrastructure_errors = 0usize;
    let mut plausible_diff = None;
    for candidate in &candidates {
        let status = match validator.validate(candidate) {
            Ok(s) => s,
            Err(_) => {
                infrastructure_errors += 1;
                continue;
            }
        };
        let promoted = if status == Status::Plausible && validator.has_second_suite() {
            validator.promote(candidate).unwrap_or(false)
        } else {
            false
        };
        let provenance = db
            .get(&candidate.patch_id)
            .map(|e| e.row.provenance.clone())
            .unwrap_or_default();
        outcomes.push(CandidateOutcome {
            candidate_index: candidate.index,
            patch_id: candidate.patch_id.clone(),
            site_digest: candidate.site_digest.clone(),
            file: candidate.file.to_string_lossy().into_owned(),
            status,
            promoted_correct: promoted,
            provenance,
        });
        if status == Status::Plausible {
            if plausible_diff.is_none() {
                plausible_diff = Some(candidate.diff.clone());
            }
            if !config.find_all {
                break;
            }
        }
    }

    let (first_plausible_index, npc_all, npc_sensical) = npc_of(&outcomes);
    Ok(RepairReport {
        strategy: config.strategy,
        outcomes,
        first_plausible_index,
        npc_all,
        npc_sensical,
        plausible_diff,
        candidates_generated: candidates.len(),
        infrastructure_errors,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Generate-and-validate repair with the sandbox validator.
pub fn repair(config: &RepairConfig, db: &PatternDb) -> Result<RepairReport> {
    let mut validator = SandboxValidator { config };
    repair_with(config, db, &mut validator)
}

/// Verify a candidate diff applies cleanly to the pristine file (used by
/// integration checks).
pub fn candidate_applies_cleanly(candidate: &Candidate, project_dir: &Path) -> Result<bool> {
    let original = std::fs::read_to_string(project_dir.join(&candidate.file))?;
    let parsed = udiff::parse_diff(&candidate.diff)?;
    let patched = udiff::apply_file_diff(&original, &parsed[0])?;
    Ok(patched == candidate.patched_text)
}

#[cfg(test)]
mod tests;
