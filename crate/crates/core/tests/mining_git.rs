//! Repository mining against a synthetic git history.

use std::path::Path;
use std::process::Command;

use genpatch_core::mining::{filter_patch, mine_repository, FilterDecision, GitRepo, MiningFilter};

fn git(repo: &Path, args: &[&str]) {
    let out = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args([
            "-c",
            "user.name=miner",
            "-c",
            "user.email=miner@example.invalid",
        ])
        .args(args)
        .env("GIT_AUTHOR_DATE", "2005-04-07T22:13:13+0000")
        .env("GIT_COMMITTER_DATE", "2005-04-07T22:13:13+0000")
        .output()
        .expect("git runs");
    assert!(
        out.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn commit_file(repo: &Path, file: &str, content: &str, message: &str) {
    std::fs::write(repo.join(file), content).unwrap();
    git(repo, &["add", "."]);
    git(repo, &["commit", "-m", message]);
}

fn setup_repo() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    git(dir.path(), &["init", "-q", "-b", "main"]);
    dir
}

#[test]
fn synthetic_repo_records_match_git_log() {
    let dir = setup_repo();
    let repo_path = dir.path();
    commit_file(repo_path, "m.c", "int a;\n", "seed");
    for i in 1..=10 {
        let body: String = (0..5).map(|j| format!("int v{j}_{i};\n")).collect();
        commit_file(repo_path, "m.c", &body, &format!("change {i}"));
    }

    let repo = GitRepo::open(repo_path).unwrap();
    let records = mine_repository(&repo, &MiningFilter::default()).unwrap();
    // ten changes plus the seeding commit
    assert_eq!(records.len(), 11);
    assert!(records.iter().all(|r| r.hunk_count == 1));

    // ids match the tool's own log, in reverse-chronological order
    let out = Command::new("git")
        .arg("-C")
        .arg(repo_path)
        .args(["log", "--no-merges", "--pretty=format:%H"])
        .output()
        .unwrap();
    let shas: Vec<String> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.to_string())
        .collect();
    let mined: Vec<String> = records.iter().map(|r| r.commit_id.clone().unwrap()).collect();
    assert_eq!(mined, shas);

    // mining twice yields identical record sequences
    let again = mine_repository(&repo, &MiningFilter::default()).unwrap();
    assert_eq!(records, again);
}

#[test]
fn oversized_commits_are_dropped_by_the_filter() {
    let dir = setup_repo();
    let repo_path = dir.path();
    commit_file(repo_path, "big.c", "int x;\n", "seed");
    let big: String = (0..60).map(|i| format!("int big{i};\n")).collect();
    commit_file(repo_path, "big.c", &big, "too big");
    commit_file(repo_path, "big.c", &format!("{big}int one_more;\n"), "small");

    let repo = GitRepo::open(repo_path).unwrap();
    let records = mine_repository(&repo, &MiningFilter::default()).unwrap();
    // seed (1 added line) and the one-line follow-up survive; the 60-line
    // rewrite is dropped for size
    assert_eq!(records.len(), 2);
    for r in &records {
        assert_eq!(filter_patch(r, &MiningFilter::default()), FilterDecision::Keep);
    }
}

#[test]
fn non_c_commits_are_excluded() {
    let dir = setup_repo();
    let repo_path = dir.path();
    commit_file(repo_path, "notes.md", "hello\n", "docs");
    commit_file(repo_path, "code.c", "int x;\n", "code");
    commit_file(repo_path, "notes.md", "hello again\n", "more docs");

    let repo = GitRepo::open(repo_path).unwrap();
    let records = mine_repository(&repo, &MiningFilter::default()).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records[0].files.iter().all(|f| f.path().ends_with(".c")));
}

#[test]
fn merge_commits_are_skipped() {
    let dir = setup_repo();
    let repo_path = dir.path();
    commit_file(repo_path, "m.c", "int a;\n", "base");
    git(repo_path, &["checkout", "-q", "-b", "side"]);
    commit_file(repo_path, "m.c", "int a;\nint side;\n", "side work");
    git(repo_path, &["checkout", "-q", "main"]);
    commit_file(repo_path, "other.c", "int other;\n", "main work");
    git(repo_path, &["merge", "-q", "--no-ff", "-m", "merge side", "side"]);

    let repo = GitRepo::open(repo_path).unwrap();
    let records = mine_repository(&repo, &MiningFilter::default()).unwrap();
    let messages: Vec<_> = records.iter().map(|r| r.commit_id.clone()).collect();
    assert_eq!(messages.len(), 3, "{records:#?}"); // base, side work, main work
}

#[test]
fn non_repository_path_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = GitRepo::open(dir.path()).unwrap_err();
    assert!(matches!(err, genpatch_core::Error::Input { .. } | genpatch_core::Error::Mining(_)));
}

#[test]
fn before_file_retrieval_supports_reconstitution() {
    let dir = setup_repo();
    let repo_path = dir.path();
    let v1 = "int get(int x)\n{\n    int y = 0;\n    y = x;\n    return y;\n}\n";
    let v2 = "int get(int x)\n{\n    int y = 0;\n    y = x + 1;\n    return y;\n}\n";
    commit_file(repo_path, "f.c", v1, "seed");
    commit_file(repo_path, "f.c", v2, "bump");

    let repo = GitRepo::open(repo_path).unwrap();
    let records = mine_repository(&repo, &MiningFilter::default()).unwrap();
    let record = &records[0]; // newest first: the bump commit
    let hunk = &record.hunks()[0];
    let before = repo
        .file_before(record.commit_id.as_deref().unwrap(), "f.c")
        .expect("parent version exists");
    assert_eq!(before, v1);
    let (bf, af) = genpatch_core::mining::reconstitute(hunk, &before).unwrap();
    assert!(bf.contains("y = x;"));
    assert!(af.contains("y = x + 1;"));
}
