//! Suite execution.

use std::time::Instant;

use rayon::prelude::*;

use crate::checks::{self, Outcome};
use crate::report::{CheckRecord, Report, Series};
use crate::scenario::ScenarioSpec;
use crate::system::System;

/// Environment variable capping the number of worker threads.
pub const MAX_THREADS_VAR: &str = "QBUNDLE_MAX_THREADS";

/// Runs every enabled check. Checks run in parallel; the report follows
/// registry order. A failing or erroring check is recorded and never stops
/// the others.
pub fn run_suite(spec: &ScenarioSpec) -> Report {
    let system = System::build(spec);
    let outcomes: Vec<(Result<Outcome, String>, std::time::Duration)> = spec
        .checks
        .par_iter()
        .map(|name| {
            let start = Instant::now();
            let outcome = match &system {
                Ok(system) => checks::run(name, system).map_err(|e| e.to_string()),
                Err(e) => Err(format!("system setup failed: {e}")),
            };
            (outcome, start.elapsed())
        })
        .collect();
    let tol = spec.tolerance();
    let mut report = Report {
        scenario_digest: spec.digest(),
        seed: spec.seed,
        checks: Vec::new(),
        verdicts: Vec::new(),
        series: None,
    };
    let mut series = Series { times: system.as_ref().map(|s| s.grid.clone()).unwrap_or_default(), columns: Vec::new() };
    for (name, (outcome, wall_time)) in spec.checks.iter().zip(outcomes) {
        let formula = checks::info(name).map_or("", |c| c.formula).to_string();
        let record = match outcome {
            Ok(o) => {
                report.verdicts.extend(o.verdicts);
                series.columns.extend(o.series);
                CheckRecord { name: name.clone(), formula, residual: o.residual, threshold: o.threshold, pass: o.pass, detail: o.detail, wall_time }
            }
            Err(error) => CheckRecord {
                name: name.clone(),
                formula,
                residual: f64::NAN,
                threshold: tol.bound(1.0),
                pass: false,
                detail: Some(error),
                wall_time,
            },
        };
        report.checks.push(record);
    }
    if !series.columns.is_empty() {
        report.series = Some(series);
    }
    report
}

/// Thread pool honoring [`MAX_THREADS_VAR`]; `None` when the variable is unset.
pub fn thread_pool_from_env() -> Result<Option<rayon::ThreadPool>, String> {
    let Ok(value) = std::env::var(MAX_THREADS_VAR) else {
        return Ok(None);
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("{MAX_THREADS_VAR} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map(Some).map_err(|e| e.to_string())
}
