use super::*;
use crate::patlang::parse_generic_patch;

fn entry(id: &str, freqs: [usize; 5]) -> (String, DbEntry) {
    let mut patch = parse_generic_patch("@r@\nexpression E;\n@@\n- f(E)\n+ g(E)\n").unwrap();
    patch.patch_id = id.to_string();
    let row = IndexRow {
        id: id.to_string(),
        file: format!("patterns/{id}.cocci"),
        recall: 1.0,
        precision: 1.0,
        freq_hunk: freqs[0],
        freq_function: freqs[1],
        freq_file: freqs[2],
        freq_patch: freqs[3],
        freq_project: freqs[4],
        provenance: Vec::new(),
    };
    (id.to_string(), DbEntry { row, patch })
}

fn db_with(entries: Vec<(String, DbEntry)>) -> PatternDb {
    PatternDb {
        root: PathBuf::new(),
        entries: entries.into_iter().collect(),
        warnings: Vec::new(),
    }
}

#[test]
fn prioritize_by_hunk_frequency() {
    let db = db_with(vec![
        entry("A", [202, 0, 0, 0, 0]),
        entry("B", [178, 0, 0, 0, 0]),
        entry("C", [100, 0, 0, 0, 0]),
    ]);
    assert_eq!(prioritize(&db, Strategy::Hunk), vec!["A", "B", "C"]);
}

#[test]
fn prioritize_by_project_with_hunk_tiebreak() {
    let db = db_with(vec![
        entry("A", [202, 0, 0, 0, 1]),
        entry("B", [10, 0, 0, 0, 14]),
        entry("C", [100, 0, 0, 0, 1]),
    ]);
    assert_eq!(prioritize(&db, Strategy::Project), vec!["B", "A", "C"]);
}

#[test]
fn prioritize_all_equal_falls_back_to_id_order() {
    let db = db_with(vec![
        entry("zeta", [5, 5, 5, 5, 5]),
        entry("alpha", [5, 5, 5, 5, 5]),
        entry("mid", [5, 5, 5, 5, 5]),
    ]);
    assert_eq!(prioritize(&db, Strategy::File), vec!["alpha", "mid", "zeta"]);
}

fn outcome(index: usize, status: Status) -> CandidateOutcome {
    CandidateOutcome {
        candidate_index: index,
        patch_id: "p".into(),
        site_digest: "d".into(),
        file: "f.c".into(),
        status,
        promoted_correct: false,
        provenance: Vec::new(),
    }
}

#[test]
fn npc_definitions() {
    let seq = vec![
        outcome(1, Status::Nonsensical),
        outcome(2, Status::InPlausible),
        outcome(3, Status::Plausible),
    ];
    let (first, npc_all, npc_sensical) = npc_of(&seq);
    assert_eq!(first, Some(3));
    assert_eq!(npc_all, Some(2));
    assert_eq!(npc_sensical, Some(1));

    // no plausible: fields absent
    let seq = vec![outcome(1, Status::Nonsensical), outcome(2, Status::InPlausible)];
    assert_eq!(npc_of(&seq), (None, None, None));

    // plausible first: zero everywhere
    let seq = vec![outcome(1, Status::Plausible)];
    assert_eq!(npc_of(&seq), (Some(1), Some(0), Some(0)));
}

fn toy_project() -> (tempfile::TempDir, PatternDb) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("main.c"),
        "void run(void) {\n    f(1);\n    f(2);\n}\n",
    )
    .unwrap();
    let db_dir = dir.path().join("db");
    let mut p1 = parse_generic_patch("@r@\nexpression E;\n@@\n- f(E)\n+ g(E)\n").unwrap();
    p1.patch_id = "p1".into();
    p1.stats.freq.hunk = 10;
    let mut p2 = parse_generic_patch("@r@\n@@\n- never_present();\n").unwrap();
    p2.patch_id = "p2".into();
    p2.stats.freq.hunk = 5;
    write_pattern_db(&db_dir, &[p1, p2]).unwrap();
    let db = load_pattern_db(&db_dir).unwrap();
    (dir, db)
}

#[test]
fn candidate_generation_order_and_budget() {
    let (dir, db) = toy_project();
    let files = vec![PathBuf::from("main.c")];
    let order = prioritize(&db, Strategy::Hunk);
    assert_eq!(order, vec!["p1", "p2"]);

    let cands = generate_candidates(&db, &order, &files, dir.path(), 100).unwrap();
    assert_eq!(cands.len(), 2);
    assert!(cands.iter().all(|c| c.patch_id == "p1"));
    assert_eq!(cands[0].index, 1);
    assert_eq!(cands[1].index, 2);
    assert!(cands[0].patched_text.contains("g(1);"));
    assert!(cands[1].patched_text.contains("g(2);"));
    for c in &cands {
        assert!(candidate_applies_cleanly(c, dir.path()).unwrap());
    }

    let capped = generate_candidates(&db, &order, &files, dir.path(), 1).unwrap();
    assert_eq!(capped.len(), 1);

    // identical runs produce digest-identical streams
    let again = generate_candidates(&db, &order, &files, dir.path(), 100).unwrap();
    let d1: Vec<String> = cands.iter().map(|c| c.digest()).collect();
    let d2: Vec<String> = again.iter().map(|c| c.digest()).collect();
    assert_eq!(d1, d2);
}

#[test]
fn strategy_permutes_order_but_not_candidate_set() {
    let (dir, db) = toy_project();
    let files = vec![PathBuf::from("main.c")];
    let mut sets = Vec::new();
    for strategy in [
        Strategy::Hunk,
        Strategy::Function,
        Strategy::File,
        Strategy::Patch,
        Strategy::Project,
    ] {
        let order = prioritize(&db, strategy);
        let cands = generate_candidates(&db, &order, &files, dir.path(), usize::MAX).unwrap();
        let mut digests: Vec<String> = cands.iter().map(|c| c.digest()).collect();
        digests.sort();
        sets.push(digests);
    }
    for s in &sets[1..] {
        assert_eq!(s, &sets[0]);
    }
}

struct Scripted {
    statuses: Vec<Status>,
    promote: bool,
    second_suite: bool,
}

impl CandidateValidator for Scripted {
    fn validate(&mut self, candidate: &Candidate) -> Result<Status> {
        Ok(self.statuses[(candidate.index - 1) % self.statuses.len()])
    }
    fn promote(&mut self, _c: &Candidate) -> Result<bool> {
        Ok(self.promote)
    }
    fn has_second_suite(&self) -> bool {
        self.second_suite
    }
}

#[test]
fn scripted_repair_stops_at_first_plausible() {
    let (dir, db) = toy_project();
    let config = RepairConfig::new(dir.path(), "true", "true");
    let mut v = Scripted {
        statuses: vec![Status::Nonsensical, Status::Plausible],
        promote: false,
        second_suite: false,
    };
    let report = repair_with(&config, &db, &mut v).unwrap();
    assert_eq!(report.outcomes.len(), 2);
    assert_eq!(report.first_plausible_index, Some(2));
    assert_eq!(report.npc_all, Some(1));
    assert_eq!(report.npc_sensical, Some(0));
    assert!(report.plausible_diff.is_some());
}

#[test]
fn plausible_but_failing_second_suite_is_not_correct() {
    let (dir, db) = toy_project();
    let config = RepairConfig::new(dir.path(), "true", "true");
    let mut v = Scripted {
        statuses: vec![Status::Plausible],
        promote: false,
        second_suite: true,
    };
    let report = repair_with(&config, &db, &mut v).unwrap();
    assert_eq!(report.outcomes[0].status, Status::Plausible);
    assert!(!report.outcomes[0].promoted_correct);

    let mut v = Scripted {
        statuses: vec![Status::Plausible],
        promote: true,
        second_suite: true,
    };
    let report = repair_with(&config, &db, &mut v).unwrap();
    assert!(report.outcomes[0].promoted_correct);
}

#[test]
fn sandbox_validation_observes_patched_file_and_isolates_original() {
    let (dir, db) = toy_project();
    let before: Vec<(PathBuf, String)> = walk_files(dir.path());

    // plausible iff the patched file contains g(1); the second candidate
    // (g(2)) fails the test, so candidate 1 wins immediately
    let mut config = RepairConfig::new(dir.path(), "true", "grep -q 'g(1);' main.c");
    config.per_test_timeout = Duration::from_secs(10);
    let report = repair(&config, &db).unwrap();
    assert_eq!(report.first_plausible_index, Some(1));
    assert_eq!(report.npc_all, Some(0));

    // the original tree is untouched
    let after = walk_files(dir.path());
    assert_eq!(before, after);
}

fn walk_files(root: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<_> = std::fs::read_dir(&d).unwrap().map(|e| e.unwrap()).collect();
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            if e.file_type().unwrap().is_dir() {
                stack.push(e.path());
            } else {
                out.push((
                    e.path(),
                    std::fs::read_to_string(e.path()).unwrap_or_default(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn repair_reports_are_deterministic() {
    let (dir, db) = toy_project();
    let config = RepairConfig::new(dir.path(), "true", "false");
    let r1 = repair(&config, &db).unwrap();
    let r2 = repair(&config, &db).unwrap();
    assert_eq!(r1.canonical_json(), r2.canonical_json());
    assert_eq!(r1.first_plausible_index, None);
    assert_eq!(r1.npc_all, None);
}

#[test]
fn zero_budget_is_a_config_error() {
    let (dir, db) = toy_project();
    let mut config = RepairConfig::new(dir.path(), "true", "true");
    config.candidate_budget = 0;
    assert!(matches!(repair(&config, &db), Err(Error::Config(_))));
}
