//! On-disk artifact layout shared by the pipeline stages.
//!
//! ```text
//! <out>/
//!   hunks.jsonl       one mined hunk per line, with fragments
//!   scripts/<id>.ses  rich edit script per hunk
//!   clusters.jsonl    one cluster per line
//!   stats.json        clustering statistics
//!   db/               pattern database (patterns/*.cocci + index.jsonl)
//!   report.json       repair report
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use genpatch_core::cluster::{ClusterStats, PatchCluster};
use genpatch_core::mining::Hunk;
use genpatch_core::util::write_atomic;

pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn new(root: &Path) -> Self {
        OutDir {
            root: root.to_path_buf(),
        }
    }

    pub fn hunks_path(&self) -> PathBuf {
        self.root.join("hunks.jsonl")
    }

    pub fn scripts_dir(&self) -> PathBuf {
        self.root.join("scripts")
    }

    pub fn script_path(&self, hunk_id: &str) -> PathBuf {
        self.scripts_dir().join(format!("{hunk_id}.ses"))
    }

    pub fn clusters_path(&self) -> PathBuf {
        self.root.join("clusters.jsonl")
    }

    pub fn stats_path(&self) -> PathBuf {
        self.root.join("stats.json")
    }

    pub fn db_dir(&self) -> PathBuf {
        self.root.join("db")
    }

    pub fn report_path(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn write_hunks(&self, hunks: &[Hunk]) -> Result<()> {
        let mut text = String::new();
        for h in hunks {
            text.push_str(&serde_json::to_string(h)?);
            text.push('\n');
        }
        write_atomic(&self.hunks_path(), &text)?;
        Ok(())
    }

    pub fn read_hunks(&self) -> Result<Vec<Hunk>> {
        let path = self.hunks_path();
        if !path.is_file() {
            bail!("missing upstream artifact: {} (run `genpatch mine` first)", path.display());
        }
        let text = std::fs::read_to_string(&path)?;
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            out.push(serde_json::from_str(line).context("bad hunks.jsonl line")?);
        }
        Ok(out)
    }

    pub fn read_script(&self, hunk_id: &str) -> Result<String> {
        let path = self.script_path(hunk_id);
        if !path.is_file() {
            bail!("missing upstream artifact: {}", path.display());
        }
        Ok(std::fs::read_to_string(path)?)
    }

    pub fn write_clusters(&self, clusters: &[PatchCluster], stats: &ClusterStats) -> Result<()> {
        let mut text = String::new();
        for c in clusters {
            text.push_str(&serde_json::to_string(c)?);
            text.push('\n');
        }
        write_atomic(&self.clusters_path(), &text)?;
        write_atomic(&self.stats_path(), &serde_json::to_string_pretty(stats)?)?;
        Ok(())
    }

    pub fn read_clusters(&self) -> Result<Vec<PatchCluster>> {
        let path = self.clusters_path();
        if !path.is_file() {
            bail!("missing upstream artifact: {} (run `genpatch cluster` first)", path.display());
        }
        let text = std::fs::read_to_string(&path)?;
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            out.push(serde_json::from_str(line).context("bad clusters.jsonl line")?);
        }
        Ok(out)
    }

    pub fn read_stats(&self) -> Result<ClusterStats> {
        let path = self.stats_path();
        if !path.is_file() {
            bail!("missing upstream artifact: {}", path.display());
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(&path)?)?)
    }
}
