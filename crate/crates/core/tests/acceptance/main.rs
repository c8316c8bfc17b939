//! Acceptance suite. Each test implements one acceptance criterion at its
//! stated tolerance and prints one pass/fail line.

mod gen;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use genpatch_core::cluster::{cluster, ClusterMember};
use genpatch_core::editscript::{diff_trees, parse_script, serialize_script, shape_key};
use genpatch_core::engine::{apply_rule, brute_force_match, match_rule, MatchConfig, MatchSite};
use genpatch_core::infer::{infer, ExamplePair};
use genpatch_core::minic::{parse_unit, print_unit};
use genpatch_core::patlang::{parse_generic_patch, render_generic_patch};
use genpatch_core::repair::{
    load_pattern_db, npc_of, prioritize, repair_ordered, RepairConfig, SandboxValidator, Status,
    Strategy,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn testdata() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata")
}

fn read(name: &str) -> String {
    let p = testdata().join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("read {p:?}: {e}"))
}

fn pass(name: &str, detail: &str) {
    println!("ACCEPTANCE {name}: PASS ({detail})");
}

// ---------------------------------------------------------------------------
// 1. Worked-example end to end
// ---------------------------------------------------------------------------

#[test]
fn listing_end_to_end() {
    let started = Instant::now();
    let gp = parse_generic_patch(&read("listing1.cocci")).expect("guard pattern parses");
    let unit = parse_unit(&read("listing2.c"), "listing2.c");
    let config = MatchConfig::default();

    let sites = match_rule(&gp.rules[0], &unit, &config);
    assert_eq!(sites.len(), 1, "expected exactly one match site");
    let s = &sites[0];
    let get = |n: &str| s.binding.get(n).map(|v| v.render()).unwrap_or_default();
    assert_eq!(get("fn"), "get_age");
    assert_eq!(get("param"), "pers");
    assert_eq!(get("fld"), "age");
    assert_eq!(get("T"), "struct person");
    assert!(get("p").starts_with("listing2.c:6:"), "position: {}", get("p"));

    let patch = apply_rule(&gp.rules[0], &unit, s).expect("guard applies");
    let added: Vec<&str> = patch
        .diff
        .lines()
        .filter(|l| l.starts_with('+') && !l.starts_with("+++"))
        .map(|l| l[1..].trim())
        .collect();
    assert_eq!(added, vec!["if (pers == NULL)", "return 0;"], "{}", patch.diff);

    let patched = parse_unit(&patch.patched_text, "listing2.c");
    assert!(match_rule(&gp.rules[0], &patched, &config).is_empty(), "re-application must find no sites");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass("listing-end-to-end", &format!("1 site, guard inserted, fixpoint, {elapsed:?}"));
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence
// ---------------------------------------------------------------------------

fn site_fingerprint(s: &MatchSite) -> (String, Vec<(bool, usize)>, String, Vec<usize>) {
    (
        s.function_name.clone(),
        s.anchor_key(),
        s.binding.render(),
        s.witness_paths.clone(),
    )
}

#[test]
fn oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = MatchConfig::default();
    let mut trials = 0usize;
    let mut redraws = 0usize;
    let mut nonempty = 0usize;
    while trials < 1000 {
        let source = gen::UnitGen::new(&mut rng, 12).unit_source();
        let Some(rule) = gen::random_rule(&mut rng) else {
            redraws += 1;
            continue;
        };
        let unit = parse_unit(&source, "r.c");
        let oracle = match brute_force_match(&rule, &unit, 256) {
            Ok(sites) => sites,
            Err(_) => {
                redraws += 1;
                continue; // outside oracle bounds; not a comparable pair
            }
        };
        let engine = match_rule(&rule, &unit, &config);
        let mut a: Vec<_> = engine.iter().map(site_fingerprint).collect();
        let mut b: Vec<_> = oracle.iter().map(site_fingerprint).collect();
        a.sort();
        b.sort();
        assert_eq!(
            a, b,
            "disagreement on trial {trials}\nsource:\n{source}\nrule: {rule:#?}"
        );
        if !a.is_empty() {
            nonempty += 1;
        }
        trials += 1;
    }
    let elapsed = started.elapsed();
    assert!(redraws < trials / 2, "too many redraws: {redraws}");
    assert!(nonempty > 50, "generator too weak: only {nonempty} matching pairs");
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    pass(
        "oracle-equivalence",
        &format!("1000/1000 agree ({nonempty} with sites), {elapsed:?}"),
    );
}

// ---------------------------------------------------------------------------
// 3. Inference closure
// ---------------------------------------------------------------------------

#[test]
fn inference_closure() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut recovered = 0usize;
    let mut splits = 0usize;
    let total = 100usize;
    for case_no in 0..total {
        let k = rng.gen_range(2..=10);
        let case = gen::random_template(&mut rng, k);
        let examples: Vec<ExamplePair> = case
            .fragments
            .iter()
            .enumerate()
            .map(|(i, (b, a))| ExamplePair::new(&format!("h{i}"), b, a))
            .collect();
        let key = shape_key(&diff_trees(&examples[0].before, &examples[0].after));
        for ex in &examples[1..] {
            let k2 = shape_key(&diff_trees(&ex.before, &ex.after));
            assert_eq!(key, k2, "instantiations must share one shape key");
        }
        let members: Vec<ClusterMember> = examples
            .iter()
            .enumerate()
            .map(|(i, e)| ClusterMember {
                hunk_id: e.hunk_id.clone(),
                patch_id: format!("p{i}"),
                project_id: format!("proj{i}"),
                file_path: format!("f{i}.c"),
                function_name: None,
            })
            .collect();
        let pc = genpatch_core::cluster::PatchCluster {
            cluster_id: key.id(),
            size: members.len(),
            shape_key: key,
            members,
            is_vertical: false,
            is_horizontal: true,
        };
        let result = infer(&pc, &examples, Duration::from_secs(900));
        assert!(!result.timed_out, "case {case_no} timed out");
        if result.patches.len() == 1 && result.patches[0].rules.len() > 1 {
            splits += 1; // documented partition split: allowed failure mode
            continue;
        }
        assert_eq!(result.patches.len(), 1, "case {case_no}: no patch inferred");
        let gp = &result.patches[0];
        let stats = gp.stats;
        assert!(
            (stats.recall - 1.0).abs() < 1e-9 && (stats.precision - 1.0).abs() < 1e-9,
            "case {case_no}: recall {} precision {}\n{}",
            stats.recall,
            stats.precision,
            render_generic_patch(gp)
        );
        let got = gen::canonical_rule_form(&gp.rules[0]);
        let want = gen::canonical_rule_form(&case.rule);
        assert_eq!(
            got, want,
            "case {case_no}: recovered rule differs from the template"
        );
        recovered += 1;
    }
    let elapsed = started.elapsed();
    assert!(recovered >= 95, "only {recovered}/100 recovered ({splits} splits)");
    assert!(elapsed < Duration::from_secs(600), "took {elapsed:?}");
    pass(
        "inference-closure",
        &format!("{recovered}/100 recovered exactly, {splits} partition splits, {elapsed:?}"),
    );
}

// ---------------------------------------------------------------------------
// 4. Round trips
// ---------------------------------------------------------------------------

#[test]
fn round_trips() {
    let started = Instant::now();

    // parse/print byte identity over every corpus source file
    let mut c_files = vec![testdata().join("listing2.c")];
    for i in 1..=10 {
        c_files.push(testdata().join(format!("benchmark/bug{i:02}/main.c")));
    }
    let mut checked_sources = 0;
    for path in &c_files {
        let text = std::fs::read_to_string(path).unwrap();
        let unit = parse_unit(&text, &path.to_string_lossy());
        assert_eq!(print_unit(&unit), text, "byte round trip failed: {path:?}");
        checked_sources += 1;
    }
    // plus randomized units
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let source = gen::UnitGen::new(&mut rng, 12).unit_source();
        let unit = parse_unit(&source, "r.c");
        assert_eq!(print_unit(&unit), source);
        checked_sources += 1;
    }

    // parse/render structural identity for every pattern file
    let mut pattern_files = vec![testdata().join("listing1.cocci")];
    for entry in std::fs::read_dir(testdata().join("benchmark/db/patterns")).unwrap() {
        pattern_files.push(entry.unwrap().path());
    }
    let mut checked_patterns = 0;
    for path in &pattern_files {
        let text = std::fs::read_to_string(path).unwrap();
        let gp = parse_generic_patch(&text).unwrap_or_else(|e| panic!("{path:?}: {e}"));
        let rendered = render_generic_patch(&gp);
        let gp2 = parse_generic_patch(&rendered).unwrap_or_else(|e| panic!("{path:?} rerender: {e}"));
        assert_eq!(gp.rules, gp2.rules, "structural round trip failed: {path:?}");
        assert_eq!(render_generic_patch(&gp2), rendered, "no textual fixpoint: {path:?}");
        checked_patterns += 1;
    }

    // Grammar serialize/parse bijectivity on 1000 random scripts
    for i in 0..1000 {
        let actions = gen::random_script(&mut rng);
        let text = serialize_script(&actions);
        let back = parse_script(&text).unwrap_or_else(|e| panic!("script {i}: {e}\n{text}"));
        assert_eq!(back, actions, "script {i} round trip failed:\n{text}");
    }

    let elapsed = started.elapsed();
    pass(
        "round-trips",
        &format!(
            "{checked_sources} sources byte-identical, {checked_patterns} patterns structural, 1000 scripts bijective, {elapsed:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Clustering definitions on a constructed corpus
// ---------------------------------------------------------------------------

#[test]
fn clustering_ground_truth() {
    // five templates with known multiplicities plus four singletons
    struct Family {
        make: fn(usize) -> (String, String),
        count: usize,
        patches: &'static [&'static str],
        vertical: bool,
        horizontal: bool,
    }
    fn wrap(body: &str) -> String {
        format!("void w(void) {{\n    {body}\n}}\n")
    }
    let families = [
        Family {
            make: |i| (wrap(&format!("alpha(x{i});")), wrap(&format!("alpha(x{i}, 0);"))),
            count: 5,
            patches: &["p1", "p2", "p3", "p4", "p5"],
            vertical: false,
            horizontal: true,
        },
        Family {
            make: |i| (wrap(&format!("beta(y{i});")), wrap(&format!("beta(y{i}, extra);"))),
            count: 4,
            patches: &["pv", "pv", "pv", "pv"],
            vertical: true,
            horizontal: false,
        },
        Family {
            make: |i| {
                (
                    wrap(&format!("if (a{i} < b{i}) r();")),
                    wrap(&format!("if (a{i} <= b{i}) r();")),
                )
            },
            count: 3,
            patches: &["pa", "pa", "pb"],
            vertical: true,
            horizontal: true,
        },
        Family {
            make: |i| {
                (
                    format!("void w(void) {{\n    keep{i}();\n    dump(z{i});\n}}\n"),
                    format!("void w(void) {{\n    keep{i}();\n}}\n"),
                )
            },
            count: 2,
            patches: &["px", "py"],
            vertical: false,
            horizontal: true,
        },
        Family {
            make: |i| (wrap("return 0;").replace("void", "int"), wrap(&format!("return w{i};")).replace("void", "int")),
            count: 2,
            patches: &["pz", "pz"],
            vertical: true,
            horizontal: false,
        },
    ];
    let singletons: [(String, String); 4] = [
        (wrap("s1(); return 9;"), wrap("s1();")),
        (wrap("anchor();"), wrap("anchor();\n    note();")),
        (wrap("k(1);"), wrap("k(2);")),
        (wrap("one(); two();"), wrap("two(); one();")),
    ];

    let mut items = Vec::new();
    let mut hunk_no = 0;
    for f in &families {
        for i in 0..f.count {
            let (b, a) = (f.make)(i);
            let before = parse_unit(&b, "b.c");
            let after = parse_unit(&a, "a.c");
            let key = shape_key(&diff_trees(&before, &after));
            items.push((
                ClusterMember {
                    hunk_id: format!("h{hunk_no}"),
                    patch_id: f.patches[i].to_string(),
                    project_id: "proj".into(),
                    file_path: format!("f{hunk_no}.c"),
                    function_name: Some("w".into()),
                },
                key,
            ));
            hunk_no += 1;
        }
    }
    for (i, (b, a)) in singletons.iter().enumerate() {
        let before = parse_unit(b, "b.c");
        let after = parse_unit(a, "a.c");
        let key = shape_key(&diff_trees(&before, &after));
        items.push((
            ClusterMember {
                hunk_id: format!("s{i}"),
                patch_id: format!("ps{i}"),
                project_id: "proj".into(),
                file_path: format!("s{i}.c"),
                function_name: Some("w".into()),
            },
            key,
        ));
    }

    let (clusters, stats) = cluster(items);
    assert_eq!(stats.total_hunks, 20);
    assert_eq!(stats.unique_hunks, 4);
    assert_eq!(stats.clusterable_hunks, 16);
    assert_eq!(stats.cluster_count, 5);
    let histogram: Vec<(usize, usize)> = stats.size_histogram.iter().map(|(k, v)| (*k, *v)).collect();
    assert_eq!(histogram, vec![(2, 2), (3, 1), (4, 1), (5, 1)]);
    assert_eq!(stats.vertical_clusters, 3);
    assert_eq!(stats.horizontal_clusters, 3);

    // per-family flags
    for f in &families {
        let c = clusters
            .iter()
            .find(|c| c.size == f.count && c.members.iter().any(|m| m.patch_id == f.patches[0]))
            .unwrap_or_else(|| panic!("family of size {} not clustered", f.count));
        assert_eq!((c.is_vertical, c.is_horizontal), (f.vertical, f.horizontal));
    }
    // sorted by size descending
    let sizes: Vec<usize> = clusters.iter().map(|c| c.size).collect();
    assert_eq!(sizes, vec![5, 4, 3, 2, 2]);
    pass(
        "clustering-definitions",
        "counts, histogram and vertical/horizontal flags match ground truth",
    );
}

// ---------------------------------------------------------------------------
// 6. NPC accounting and strategy permutation
// ---------------------------------------------------------------------------

#[test]
fn npc_accounting() {
    use genpatch_core::repair::CandidateOutcome;
    let mk = |index: usize, status: Status| CandidateOutcome {
        candidate_index: index,
        patch_id: "p".into(),
        site_digest: "d".into(),
        file: "f.c".into(),
        status,
        promoted_correct: false,
        provenance: Vec::new(),
    };
    // closed-form checks over scripted outcome sequences
    let cases: Vec<(Vec<Status>, Option<usize>, Option<usize>)> = vec![
        (
            vec![Status::Nonsensical, Status::InPlausible, Status::Plausible],
            Some(2),
            Some(1),
        ),
        (vec![Status::Plausible], Some(0), Some(0)),
        (
            vec![
                Status::InPlausible,
                Status::InPlausible,
                Status::Nonsensical,
                Status::Plausible,
            ],
            Some(3),
            Some(2),
        ),
        (vec![Status::Nonsensical, Status::InPlausible], None, None),
    ];
    for (seq, want_all, want_sensical) in cases {
        let outcomes: Vec<_> = seq.iter().enumerate().map(|(i, s)| mk(i + 1, *s)).collect();
        let (first, all, sensical) = npc_of(&outcomes);
        assert_eq!(all, want_all);
        assert_eq!(sensical, want_sensical);
        if let Some(first) = first {
            // npc-all = first-plausible-index − 1 when every candidate has an outcome
            assert_eq!(all, Some(first - 1));
        }
    }

    // changing strategy permutes candidate order but never the candidate set
    let db = load_pattern_db(&testdata().join("benchmark/db")).expect("benchmark db loads");
    let project = testdata().join("benchmark/bug01");
    let files = vec![PathBuf::from("main.c")];
    let mut sets: Vec<Vec<String>> = Vec::new();
    for strategy in [
        Strategy::Hunk,
        Strategy::Function,
        Strategy::File,
        Strategy::Patch,
        Strategy::Project,
    ] {
        let order = prioritize(&db, strategy);
        let cands =
            genpatch_core::repair::generate_candidates(&db, &order, &files, &project, usize::MAX)
                .unwrap();
        let mut digests: Vec<String> = cands.iter().map(|c| c.digest()).collect();
        digests.sort();
        sets.push(digests);
    }
    for s in &sets[1..] {
        assert_eq!(s, &sets[0], "candidate set changed across strategies");
    }
    pass(
        "npc-accounting",
        &format!(
            "closed forms hold; candidate set stable across 5 strategies ({} candidates)",
            sets[0].len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Toy repair benchmark
// ---------------------------------------------------------------------------

#[test]
fn toy_repair_benchmark() {
    let started = Instant::now();
    let base = testdata().join("benchmark");
    let db = load_pattern_db(&base.join("db")).expect("benchmark db loads");
    assert!(db.warnings.is_empty(), "{:?}", db.warnings);

    let bugs: Vec<String> = (1..=10).map(|i| format!("bug{i:02}")).collect();
    let project_order = prioritize(&db, Strategy::Project);
    let mut random_order = project_order.clone();
    random_order.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    random_order.shuffle(&mut rng);

    let run = |order: &[String]| -> (usize, Vec<usize>) {
        let mut plausible = 0usize;
        let mut npcs = Vec::new();
        for bug in &bugs {
            let mut config = RepairConfig::new(
                base.join(bug),
                "cc -O0 -o prog main.c",
                "sh tests/suite1.sh",
            );
            config.per_test_timeout = Duration::from_secs(2);
            config.candidate_budget = 200;
            if bug == "bug03" {
                config.test_command_2 = Some("sh tests2/suite2.sh".into());
            }
            let mut validator = SandboxValidator { config: &config };
            let report = repair_ordered(&config, &db, order, &mut validator)
                .unwrap_or_else(|e| panic!("{bug}: {e}"));
            if report.first_plausible_index.is_some() {
                plausible += 1;
                npcs.push(report.npc_all.unwrap());
            }
        }
        (plausible, npcs)
    };

    let (plausible_project, npc_project) = run(&project_order);
    assert!(
        plausible_project >= 7,
        "only {plausible_project}/10 plausible repairs"
    );
    let (plausible_random, npc_random) = run(&random_order);
    assert!(plausible_random >= 7);

    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len().max(1) as f64;
    let (mp, mr) = (mean(&npc_project), mean(&npc_random));
    assert!(
        mp <= mr,
        "project-frequency ordering should not lose to random: {mp:.2} vs {mr:.2}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    pass(
        "toy-repair-benchmark",
        &format!(
            "{plausible_project}/10 plausible; mean NPC {mp:.2} (project) <= {mr:.2} (random); {elapsed:?}"
        ),
    );
}
