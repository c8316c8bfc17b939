//! `genpatch` — mine recurrent fixes from patch corpora, infer editable
//! generic patches, and run generate-and-validate repair.
//!
//! The pipeline is file-mediated: every stage reads the previous stage's
//! artifacts from the output directory and writes its own, so each
//! intermediate (hunks, edit scripts, clusters, pattern files) can be
//! inspected and edited between stages.

mod artifacts;
mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use artifacts::OutDir;
use config::{load_config, PipelineConfig};
use genpatch_core::cluster::{cluster, ClusterMember};
use genpatch_core::editscript::{diff_trees, parse_script, serialize_script, shape_key};
use genpatch_core::engine::{apply_patchset, MatchConfig};
use genpatch_core::infer::{infer, split_atomic, ExamplePair};
use genpatch_core::minic::parse_unit;
use genpatch_core::mining::{
    enclosing_function_name, mine_repository, reconstitute, GitRepo, Hunk, MiningFilter,
    PatchRecord,
};
use genpatch_core::patlang::{parse_generic_patch, GenericPatch};
use genpatch_core::repair::{load_pattern_db, repair, write_pattern_db, RepairConfig, Strategy};
use genpatch_core::util::write_atomic;

#[derive(Parser)]
#[command(name = "genpatch", version, about = "Generic-patch mining, inference and program repair")]
struct Cli {
    /// Declarative pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for inference.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Timeout in seconds (per cluster for `infer`, per command for `repair`).
    #[arg(long, global = true)]
    timeout: Option<f64>,
    /// Pattern ordering strategy: hunk|function|file|patch|project.
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Candidate budget for `repair`.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine patches from the configured repositories and diff directories.
    Mine,
    /// Group mined hunks into clusters by their edit-script shape.
    Cluster,
    /// Infer generic patches from the clusters and build the pattern DB.
    Infer,
    /// Apply a pattern file to a source file and print the diff.
    Apply {
        pattern: PathBuf,
        file: PathBuf,
    },
    /// Generate-and-validate repair of the configured buggy project.
    Repair,
    /// Print cluster and pattern distributions.
    Stats,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("genpatch: error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let config = load_config(cli.config.as_deref())?;
    let out = OutDir::new(&cli.out);
    match cli.command {
        Command::Mine => cmd_mine(&config, &out),
        Command::Cluster => cmd_cluster(&out),
        Command::Infer => {
            let timeout = Duration::from_secs_f64(
                cli.timeout.unwrap_or(config.inference.timeout_seconds),
            );
            let jobs = cli.jobs.unwrap_or(config.inference.jobs).max(1);
            cmd_infer(&out, timeout, jobs)
        }
        Command::Apply { pattern, file } => cmd_apply(&pattern, &file),
        Command::Repair => cmd_repair(&config, &out, &cli),
        Command::Stats => cmd_stats(&out),
    }
}

// ---------------------------------------------------------------------------
// mine
// ---------------------------------------------------------------------------

/// Before-file text for a hunk when the real file is unavailable: blank
/// lines up to the hunk start, then the hunk's own view of the old lines.
fn synthesize_before(hunk: &Hunk) -> String {
    let mut lines: Vec<String> = vec![String::new(); hunk.before_range.0.saturating_sub(1)];
    if let Some(raw) = &hunk.raw {
        for l in &raw.lines {
            match l {
                genpatch_core::udiff::DiffLine::Context(s)
                | genpatch_core::udiff::DiffLine::Removed(s) => lines.push(s.clone()),
                genpatch_core::udiff::DiffLine::Added(_) => {}
            }
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

/// Fill fragments and the enclosing-function name, then write the hunk's
/// edit script. Returns false when the hunk produces no script (for example
/// a whitespace-only change).
fn finish_hunk(hunk: &mut Hunk, before_file: &str, out: &OutDir) -> Result<bool> {
    let (before_frag, after_frag) = reconstitute(hunk, before_file)
        .with_context(|| format!("hunk {} of {}", hunk.hunk_id, hunk.file_path))?;
    hunk.function_name = enclosing_function_name(hunk, before_file);
    let before_unit = parse_unit(&before_frag, "before.c");
    let after_unit = parse_unit(&after_frag, "after.c");
    let actions = diff_trees(&before_unit, &after_unit);
    if actions.is_empty() {
        return Ok(false);
    }
    write_atomic(&out.script_path(&hunk.hunk_id), &serialize_script(&actions))?;
    hunk.before_fragment = Some(before_frag);
    hunk.after_fragment = Some(after_frag);
    Ok(true)
}

fn cmd_mine(config: &PipelineConfig, out: &OutDir) -> Result<i32> {
    let filter = MiningFilter {
        max_changed_lines: config.mining.max_changed_lines,
        max_hunks: config.mining.max_hunks,
    };
    std::fs::create_dir_all(out.scripts_dir())?;

    let mut hunks: Vec<Hunk> = Vec::new();
    let mut sources = 0usize;
    let mut failed_sources = 0usize;

    for repo_path in &config.corpus.repos {
        sources += 1;
        let mined = GitRepo::open(repo_path)
            .map(|r| r.with_executable(&config.mining.git_executable))
            .and_then(|repo| {
                let records = mine_repository(&repo, &filter)?;
                Ok((repo, records))
            });
        let (repo, records) = match mined {
            Ok(x) => x,
            Err(e) => {
                eprintln!("genpatch: warning: skipping {}: {e}", repo_path.display());
                failed_sources += 1;
                continue;
            }
        };
        for record in records {
            for mut hunk in record.hunks() {
                let commit = hunk.commit_id.clone().unwrap_or_default();
                let before = repo
                    .file_before(&commit, &hunk.file_path)
                    .unwrap_or_else(|| synthesize_before(&hunk));
                match finish_hunk(&mut hunk, &before, out) {
                    Ok(true) => hunks.push(hunk),
                    Ok(false) => {}
                    Err(e) => eprintln!("genpatch: warning: {e:#}"),
                }
            }
        }
    }

    for dir in &config.corpus.diff_dirs {
        sources += 1;
        let mut entries: Vec<PathBuf> = match std::fs::read_dir(dir) {
            Ok(rd) => rd
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| {
                    p.extension()
                        .map(|x| x == "diff" || x == "patch")
                        .unwrap_or(false)
                })
                .collect(),
            Err(e) => {
                eprintln!("genpatch: warning: skipping {}: {e}", dir.display());
                failed_sources += 1;
                continue;
            }
        };
        entries.sort();
        let project = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".into());
        for path in entries {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("genpatch: warning: skipping {}: {e}", path.display());
                    continue;
                }
            };
            let record = match PatchRecord::from_diff_text(&text, &project, None) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("genpatch: warning: skipping {}: {e}", path.display());
                    continue;
                }
            };
            if genpatch_core::mining::filter_patch(&record, &filter)
                != genpatch_core::mining::FilterDecision::Keep
            {
                continue;
            }
            for mut hunk in record.hunks() {
                if !genpatch_core::mining::is_c_file(&hunk.file_path) {
                    continue;
                }
                let before = synthesize_before(&hunk);
                match finish_hunk(&mut hunk, &before, out) {
                    Ok(true) => hunks.push(hunk),
                    Ok(false) => {}
                    Err(e) => eprintln!("genpatch: warning: {e:#}"),
                }
            }
        }
    }

    if sources == 0 || hunks.is_empty() {
        eprintln!("genpatch: error: empty corpus (no hunks mined)");
        return Ok(2);
    }
    if failed_sources == sources {
        eprintln!("genpatch: error: every corpus source failed");
        return Ok(2);
    }
    out.write_hunks(&hunks)?;
    eprintln!("genpatch: mined {} hunks into {}", hunks.len(), out.root.display());
    Ok(0)
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

fn cmd_cluster(out: &OutDir) -> Result<i32> {
    let hunks = out.read_hunks()?;
    let mut items = Vec::new();
    for h in &hunks {
        let script = out.read_script(&h.hunk_id)?;
        let actions = parse_script(&script)?;
        let key = shape_key(&actions);
        items.push((
            ClusterMember {
                hunk_id: h.hunk_id.clone(),
                patch_id: h.patch_id.clone(),
                project_id: h.project_id.clone(),
                file_path: h.file_path.clone(),
                function_name: h.function_name.clone(),
            },
            key,
        ));
    }
    let (clusters, stats) = cluster(items);
    out.write_clusters(&clusters, &stats)?;
    eprintln!(
        "genpatch: {} hunks -> {} clusters ({} unique hunks)",
        stats.total_hunks, stats.cluster_count, stats.unique_hunks
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

fn cmd_infer(out: &OutDir, timeout: Duration, jobs: usize) -> Result<i32> {
    let clusters = out.read_clusters()?;
    let hunks = out.read_hunks()?;
    let by_id: BTreeMap<&str, &Hunk> = hunks.iter().map(|h| (h.hunk_id.as_str(), h)).collect();

    let work: Vec<(usize, &genpatch_core::cluster::PatchCluster)> =
        clusters.iter().enumerate().collect();
    let run_one = |c: &genpatch_core::cluster::PatchCluster| {
        let examples: Vec<ExamplePair> = c
            .members
            .iter()
            .filter_map(|m| {
                let h = by_id.get(m.hunk_id.as_str())?;
                let before = h.before_fragment.as_deref()?;
                let after = h.after_fragment.as_deref()?;
                Some(ExamplePair::new(&h.hunk_id, before, after))
            })
            .collect();
        infer(c, &examples, timeout)
    };

    let mut results: Vec<(usize, genpatch_core::infer::InferenceResult)> = if jobs <= 1 {
        work.iter().map(|(i, c)| (*i, run_one(c))).collect()
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for chunk in work.chunks(work.len().div_ceil(jobs).max(1)) {
                handles.push(scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|(i, c)| (*i, run_one(c)))
                        .collect::<Vec<_>>()
                }));
            }
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("inference worker"))
                .collect()
        })
    };
    results.sort_by_key(|(i, _)| *i);

    let mut atoms: Vec<GenericPatch> = Vec::new();
    let mut timed_out = 0usize;
    let mut covered_clusters = 0usize;
    let mut uncovered = 0usize;
    for (_, r) in &results {
        if r.timed_out {
            timed_out += 1;
        }
        if !r.patches.is_empty() {
            covered_clusters += 1;
        }
        uncovered += r.uncovered_examples.len();
        for p in &r.patches {
            atoms.extend(split_atomic(p));
        }
    }
    write_pattern_db(&out.db_dir(), &atoms)?;
    eprintln!(
        "genpatch: {} clusters -> {} atomic patches ({} clusters yielded patches, {} timed out, {} examples uncovered)",
        clusters.len(),
        atoms.len(),
        covered_clusters,
        timed_out,
        uncovered
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// apply
// ---------------------------------------------------------------------------

fn cmd_apply(pattern: &Path, file: &Path) -> Result<i32> {
    let pattern_text = std::fs::read_to_string(pattern)
        .with_context(|| format!("cannot read pattern {}", pattern.display()))?;
    let gp = parse_generic_patch(&pattern_text)?;
    let source = std::fs::read_to_string(file)
        .with_context(|| format!("cannot read source {}", file.display()))?;
    let unit = parse_unit(&source, &file.to_string_lossy());
    let outcome = apply_patchset(&gp, &unit, &MatchConfig::default())?;
    for r in &outcome.reports {
        eprintln!("genpatch: rule {}: {} site(s)", r.rule_name, r.site_count);
    }
    for w in &outcome.warnings {
        eprintln!("genpatch: warning: {w}");
    }
    print!("{}", outcome.diff);
    let matched = outcome.reports.iter().any(|r| r.site_count > 0);
    Ok(if matched { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// repair
// ---------------------------------------------------------------------------

fn cmd_repair(config: &PipelineConfig, out: &OutDir, cli: &Cli) -> Result<i32> {
    let Some(section) = &config.repair else {
        bail!("config has no [repair] section");
    };
    let db_dir = out.db_dir();
    if !db_dir.join("index.jsonl").is_file() {
        bail!(
            "missing upstream artifact: {} (run `genpatch infer` first)",
            db_dir.join("index.jsonl").display()
        );
    }
    let db = load_pattern_db(&db_dir)?;
    for w in &db.warnings {
        eprintln!("genpatch: warning: {w}");
    }
    let strategy: Strategy = cli
        .strategy
        .as_deref()
        .unwrap_or(&section.strategy)
        .parse()?;
    let mut repair_config = RepairConfig::new(
        &section.project,
        &section.build_command,
        &section.test_command,
    );
    repair_config.test_command_2 = section.test_command_2.clone();
    repair_config.strategy = strategy;
    repair_config.candidate_budget = cli.budget.unwrap_or(section.budget);
    repair_config.per_test_timeout =
        Duration::from_secs_f64(cli.timeout.unwrap_or(section.per_test_timeout));
    repair_config.suspicious_files = section.suspicious_files.clone();
    repair_config.find_all = section.find_all;

    let report = repair(&repair_config, &db)?;
    write_atomic(&out.report_path(), &serde_json::to_string_pretty(&report)?)?;
    match report.first_plausible_index {
        Some(idx) => {
            eprintln!(
                "genpatch: plausible patch at candidate {idx} (npc-all {}, npc-sensical {})",
                report.npc_all.unwrap_or(0),
                report.npc_sensical.unwrap_or(0)
            );
            if let Some(diff) = &report.plausible_diff {
                print!("{diff}");
            }
            Ok(0)
        }
        None => {
            eprintln!(
                "genpatch: no plausible patch within {} candidates",
                report.outcomes.len()
            );
            Ok(1)
        }
    }
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

fn cmd_stats(out: &OutDir) -> Result<i32> {
    let stats = out.read_stats()?;
    println!("hunks: {} total, {} unique, {} clusterable", stats.total_hunks, stats.unique_hunks, stats.clusterable_hunks);
    println!("clusters: {} ({} vertical, {} horizontal)", stats.cluster_count, stats.vertical_clusters, stats.horizontal_clusters);
    println!("cluster size histogram:");
    for (size, count) in &stats.size_histogram {
        println!("  size {size:>4}: {count}");
    }
    let db_index = out.db_dir().join("index.jsonl");
    if db_index.is_file() {
        let text = std::fs::read_to_string(&db_index)?;
        let rows: Vec<genpatch_core::repair::IndexRow> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .filter_map(|l| serde_json::from_str(l).ok())
            .collect();
        println!("atomic patterns: {}", rows.len());
        println!("top patterns by frequency granularity:");
        for (label, key) in [
            ("hunk", 0usize),
            ("function", 1),
            ("file", 2),
            ("patch", 3),
            ("project", 4),
        ] {
            let mut sorted = rows.clone();
            sorted.sort_by_key(|r| {
                std::cmp::Reverse(match key {
                    0 => r.freq_hunk,
                    1 => r.freq_function,
                    2 => r.freq_file,
                    3 => r.freq_patch,
                    _ => r.freq_project,
                })
            });
            let top: Vec<String> = sorted
                .iter()
                .take(5)
                .map(|r| {
                    let f = match key {
                        0 => r.freq_hunk,
                        1 => r.freq_function,
                        2 => r.freq_file,
                        3 => r.freq_patch,
                        _ => r.freq_project,
                    };
                    format!("{} ({f})", r.id)
                })
                .collect();
            println!("  by {label:<8}: {}", top.join(", "));
        }
    }
    Ok(0)
}
