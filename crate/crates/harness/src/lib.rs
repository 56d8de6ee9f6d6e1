//! Declarative scenario runner for the `qbundle` engine.
//!
//! A scenario document describes a finite-dimensional system; the runner
//! evaluates a registry of identity checks on it and emits a deterministic
//! report as json-lines, CSV time series or a human-readable table.

pub mod checks;
pub mod report;
pub mod scenario;
pub mod suite;
pub mod system;

pub use report::{CheckRecord, Format, Report, ReportError, Series, VerdictRecord};
pub use scenario::{parse_scenario, ScenarioError, ScenarioSpec};
pub use suite::run_suite;

/// Writes `report` in the requested format.
pub fn emit_report(report: &Report, format: Format, out: &mut dyn std::io::Write) -> Result<(), ReportError> {
    report.emit(format, out)
}
