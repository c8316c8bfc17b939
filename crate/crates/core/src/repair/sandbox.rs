//! Sandboxed command execution for candidate validation. Each candidate is
//! tried in a temporary copy of the project; the original tree is never
//! touched.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

/// Recursively copy a project tree, skipping version-control internals.
pub fn copy_tree(from: &Path, to: &Path) -> Result<()> {
    std::fs::create_dir_all(to)?;
    for entry in std::fs::read_dir(from)? {
        let entry = entry?;
        let name = entry.file_name();
        if name == ".git" {
            continue;
        }
        let src = entry.path();
        let dst = to.join(&name);
        if entry.file_type()?.is_dir() {
            copy_tree(&src, &dst)?;
        } else {
            std::fs::copy(&src, &dst)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunResult {
    Success,
    Failure,
    TimedOut,
}

/// Run a shell command in `cwd`, killing it after `timeout`. Output is
/// discarded; only the exit status matters.
pub fn run_command(command: &str, cwd: &Path, timeout: Duration) -> Result<RunResult> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .current_dir(cwd)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| Error::Sandbox(format!("cannot spawn {command:?}: {e}")))?;
    let started = Instant::now();
    loop {
        match child.try_wait() {
            Ok(Some(status)) => {
                return Ok(if status.success() {
                    RunResult::Success
                } else {
                    RunResult::Failure
                });
            }
            Ok(None) => {
                if started.elapsed() >= timeout {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Ok(RunResult::TimedOut);
                }
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(Error::Sandbox(format!("wait failed: {e}"))),
        }
    }
}
