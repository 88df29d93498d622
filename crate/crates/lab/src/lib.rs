//! Runner, configuration and artifact formats for the `soliton-lab` CLI.
//!
//! A run reads a [`RunConfig`], executes the selected suites against the
//! soliton field it describes, and writes one artifact set per suite plus a
//! `summary.json` index into `output_dir`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod format;
pub mod parallel;
pub mod schema;
pub mod suite;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{ConfigError, RunConfig};
pub use suite::{Status, Suite};

/// Exit codes of `soliton-lab run`.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const SUITE_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const GUARD: i32 = 3;
}

#[derive(Debug, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub checks: &'static str,
    pub status: Status,
    pub message: Option<String>,
    pub tolerance: f64,
    pub metrics: BTreeMap<String, f64>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub exit_code: i32,
    pub order: usize,
    pub suites: Vec<SuiteSummary>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::Write { .. } => exit::SUITE_FAILED,
        }
    }
}

/// Guards win over failures: a run stopped by a guard exits 3 even if
/// another suite also failed.
pub fn exit_code(statuses: impl IntoIterator<Item = Status>) -> i32 {
    let mut code = exit::PASS;
    for s in statuses {
        code = match (code, s) {
            (_, Status::Guard) | (exit::GUARD, _) => exit::GUARD,
            (_, Status::Fail | Status::Error) => exit::SUITE_FAILED,
            (c, Status::Pass) => c,
        };
    }
    code
}

/// Runs every suite of `config` and writes the artifacts.
pub fn run(config: &RunConfig, parallel: bool) -> Result<Summary, RunError> {
    config.validate()?;
    let params = config.params.build()?;
    let grid = config.grid.build()?;
    let ctx = suite::Context {
        config,
        params: &params,
        n: config.order(&params),
        grid: &grid,
        parallel,
    };
    let outcomes = parallel::map_ordered(&config.suites, parallel, |&s| suite::run(s, &ctx));

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| RunError::Write {
        path: dir.clone(),
        source,
    })?;
    let mut suites = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        for (name, bytes) in &o.files {
            write(&dir.join(name), bytes)?;
        }
        suites.push(SuiteSummary {
            suite: o.suite,
            checks: o.suite.checks(),
            status: o.status,
            message: o.message,
            tolerance: o.tolerance,
            metrics: o.metrics,
            artifacts: o.files.into_iter().map(|(name, _)| name).collect(),
        });
    }
    let summary = Summary {
        schema_version: format::SCHEMA_VERSION,
        exit_code: exit_code(suites.iter().map(|s| s.status)),
        order: ctx.n,
        suites,
    };
    write(&dir.join("summary.json"), &format::json(&summary))?;
    Ok(summary)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|source| RunError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_precedence() {
        assert_eq!(exit_code([]), 0);
        assert_eq!(exit_code([Status::Pass, Status::Pass]), 0);
        assert_eq!(exit_code([Status::Pass, Status::Fail]), 1);
        assert_eq!(exit_code([Status::Error, Status::Pass]), 1);
        assert_eq!(exit_code([Status::Guard, Status::Fail]), 3);
        assert_eq!(exit_code([Status::Fail, Status::Guard, Status::Pass]), 3);
    }
}
