//! Reports and their three output formats.
//!
//! json-lines output is a pure function of the scenario: it holds no timing
//! and uses a fixed key order, so equal scenarios give byte-identical files.
//! Wall times appear only in the human summary.

use std::io::{self, Write};
use std::time::Duration;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    JsonLines,
    CsvSeries,
    HumanSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: String,
    /// Identity or equation the check verifies.
    pub formula: String,
    /// `null` in JSON when the residual is not finite.
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// One certification of one observable in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictRecord {
    pub observable: String,
    pub frame: String,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub mean_constancy: f64,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub commutation: f64,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub lax: f64,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub derivation: f64,
    #[serde(serialize_with = "finite_or_null", deserialize_with = "null_as_nan")]
    pub heisenberg_constancy: f64,
    pub is_integral: bool,
    pub unanimous: bool,
}

/// Time series on a shared grid, for plotting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario_digest: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub verdicts: Vec<VerdictRecord>,
    pub series: Option<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    scenario_digest: String,
    seed: u64,
    checks: usize,
    verdicts: usize,
    pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
enum Line {
    Report(Header),
    Check(CheckRecord),
    Verdict(VerdictRecord),
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Report {
    /// Conjunction of all check results; vacuously true.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn emit(&self, format: Format, out: &mut dyn Write) -> Result<(), ReportError> {
        match format {
            Format::JsonLines => self.write_json_lines(out),
            Format::CsvSeries => self.write_csv(out),
            Format::HumanSummary => self.write_summary(out),
        }
    }

    pub fn to_json_lines(&self) -> String {
        let mut buf = Vec::new();
        self.write_json_lines(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    fn write_json_lines(&self, out: &mut dyn Write) -> Result<(), ReportError> {
        let header = Header {
            scenario_digest: self.scenario_digest.clone(),
            seed: self.seed,
            checks: self.checks.len(),
            verdicts: self.verdicts.len(),
            pass: self.pass(),
        };
        let lines = std::iter::once(Line::Report(header))
            .chain(self.checks.iter().cloned().map(Line::Check))
            .chain(self.verdicts.iter().cloned().map(Line::Verdict));
        for line in lines {
            serde_json::to_writer(&mut *out, &line).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Header `t,<series names>`, one row per time, 17 significant digits.
    fn write_csv(&self, out: &mut dyn Write) -> Result<(), ReportError> {
        let empty = Series::default();
        let series = self.series.as_ref().unwrap_or(&empty);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let csv_err = |e: csv::Error| ReportError::Io(io::Error::other(e));
        w.write_record(std::iter::once("t").chain(series.columns.iter().map(|(name, _)| name.as_str()))).map_err(csv_err)?;
        for (i, t) in series.times.iter().enumerate() {
            let row = std::iter::once(*t).chain(series.columns.iter().map(|(_, values)| values[i]));
            w.write_record(row.map(|x| format!("{x:.16e}"))).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_summary(&self, out: &mut dyn Write) -> Result<(), ReportError> {
        writeln!(out, "scenario {}", self.scenario_digest)?;
        writeln!(out, "seed     {}", self.seed)?;
        writeln!(out)?;
        writeln!(out, "{:<28} {:>12} {:>12}  {:<6} {:>10}", "check", "residual", "threshold", "result", "time")?;
        for c in &self.checks {
            writeln!(
                out,
                "{:<28} {:>12.4e} {:>12.4e}  {:<6} {:>8.3} s",
                c.name,
                c.residual,
                c.threshold,
                if c.pass { "PASS" } else { "FAIL" },
                c.wall_time.as_secs_f64()
            )?;
            if let Some(detail) = c.detail.as_ref().filter(|_| !c.pass) {
                writeln!(out, "    {detail}")?;
            }
        }
        if !self.verdicts.is_empty() {
            writeln!(out)?;
            writeln!(
                out,
                "{:<16} {:<10} {:>11} {:>11} {:>11} {:>11} {:>11}  integral",
                "observable", "frame", "mean", "commute", "lax", "derivation", "heisenberg"
            )?;
            for v in &self.verdicts {
                writeln!(
                    out,
                    "{:<16} {:<10} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}  {}",
                    v.observable,
                    v.frame,
                    v.mean_constancy,
                    v.commutation,
                    v.lax,
                    v.derivation,
                    v.heisenberg_constancy,
                    if v.is_integral { "yes" } else { "no" }
                )?;
            }
        }
        writeln!(out)?;
        let passed = self.checks.iter().filter(|c| c.pass).count();
        writeln!(out, "overall  {} ({passed}/{} checks passed)", if self.pass() { "PASS" } else { "FAIL" }, self.checks.len())?;
        Ok(())
    }

    /// Reads back json-lines output. Series and wall times are not part of
    /// that format and come back empty.
    pub fn from_json_lines(text: &str) -> Result<Self, ReportError> {
        let malformed = |line: usize, message: String| ReportError::Malformed { line, message };
        let mut header = None;
        let mut report = Report { scenario_digest: String::new(), seed: 0, checks: Vec::new(), verdicts: Vec::new(), series: None };
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let line: Line = serde_json::from_str(raw).map_err(|e| malformed(n, e.to_string()))?;
            match (line, header.is_some()) {
                (Line::Report(h), false) => {
                    report.scenario_digest = h.scenario_digest.clone();
                    report.seed = h.seed;
                    header = Some(h);
                }
                (Line::Report(_), true) => return Err(malformed(n, "second report header".into())),
                (_, false) => return Err(malformed(n, "record before the report header".into())),
                (Line::Check(c), true) => {
                    if !report.verdicts.is_empty() {
                        return Err(malformed(n, "check record after verdict records".into()));
                    }
                    report.checks.push(c);
                }
                (Line::Verdict(v), true) => report.verdicts.push(v),
            }
        }
        let header = header.ok_or_else(|| malformed(1, "missing report header".into()))?;
        if header.checks != report.checks.len() || header.verdicts != report.verdicts.len() {
            return Err(malformed(
                1,
                format!(
                    "header announces {} checks and {} verdicts, found {} and {}",
                    header.checks,
                    header.verdicts,
                    report.checks.len(),
                    report.verdicts.len()
                ),
            ));
        }
        if header.pass != report.pass() {
            return Err(malformed(1, "header pass flag disagrees with the check records".into()));
        }
        Ok(report)
    }
}
