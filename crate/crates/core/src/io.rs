//! Artifact serialization: CSV time series and JSON metadata/verdicts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! parsed file reproduces the original values bit for bit and repeated runs
//! of the same scenario produce byte-identical artifacts. Headers are fixed
//! strings and are validated on read.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeBound;
use crate::error::{Error, Result};
use crate::evolve::{RunRecord, RunStatus};
use crate::grid::GridKind;
use crate::steady::SteadyState;

pub const TIMESERIES_HEADER: &str = "t,l2_norm,sup_norm,W,Wprime,dt";
pub const EIGENPAIR_HEADER: &str = "node,phi1";
pub const DICHOTOMY_HEADER: &str = "n,p,gnw,p_c,verdict";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeseriesRow {
    pub t: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub w: f64,
    pub wprime: f64,
    pub dt: f64,
}

/// Renders the recorded run as CSV with the pinned header.
pub fn timeseries_csv(record: &RunRecord) -> String {
    let mut out = String::new();
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for i in 0..record.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            record.times[i],
            record.l2[i],
            record.sup[i],
            record.w_proj[i],
            record.wprime_proj[i],
            record.dts[i]
        );
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("line {line}: bad float {field:?}: {e}")))
}

pub fn parse_timeseries(text: &str) -> Result<Vec<TimeseriesRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == TIMESERIES_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header {TIMESERIES_HEADER:?}, found {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Parse(format!(
                "line {}: expected 6 fields, found {}",
                k + 2,
                fields.len()
            )));
        }
        rows.push(TimeseriesRow {
            t: parse_f64(fields[0], k + 2)?,
            l2_norm: parse_f64(fields[1], k + 2)?,
            sup_norm: parse_f64(fields[2], k + 2)?,
            w: parse_f64(fields[3], k + 2)?,
            wprime: parse_f64(fields[4], k + 2)?,
            dt: parse_f64(fields[5], k + 2)?,
        });
    }
    Ok(rows)
}

/// Steady-state CSV; the coordinate column is named after the geometry.
pub fn steady_csv(s: &SteadyState) -> String {
    let coord = match s.grid.kind {
        GridKind::Interval => "x",
        GridKind::Radial => "r",
    };
    let mut out = format!("{coord},v\n");
    for (i, v) in s.values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", s.grid.node(i), v);
    }
    out
}

/// Parses a two-column CSV with either steady-state header back into
/// (coordinates, values).
pub fn parse_steady(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_two_columns(text, &["x,v", "r,v"])
}

/// Eigenfunction CSV on interior nodes.
pub fn eigenpair_csv(nodes: &[f64], phi1: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(EIGENPAIR_HEADER);
    out.push('\n');
    for (x, p) in nodes.iter().zip(phi1) {
        let _ = writeln!(out, "{x},{p}");
    }
    out
}

pub fn parse_eigenpair(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    parse_two_columns(text, &[EIGENPAIR_HEADER])
}

fn parse_two_columns(text: &str, headers: &[&str]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if headers.contains(&h.trim_end()) => {}
        other => {
            return Err(Error::Parse(format!(
                "expected one of {headers:?} as header, found {other:?}"
            )))
        }
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!(
                "line {}: expected 2 fields, found {}",
                k + 2,
                fields.len()
            )));
        }
        xs.push(parse_f64(fields[0], k + 2)?);
        vs.push(parse_f64(fields[1], k + 2)?);
    }
    Ok((xs, vs))
}

/// Envelope curves sampled on the run's time stamps, one column per
/// envelope kind.
pub fn envelopes_csv(times: &[f64], envs: &[&EnvelopeBound]) -> String {
    let mut out = String::from("t");
    for e in envs {
        out.push(',');
        out.push_str(e.kind.label());
    }
    out.push('\n');
    for &t in times {
        let _ = write!(out, "{t}");
        for e in envs {
            let _ = write!(out, ",{}", e.eval(t));
        }
        out.push('\n');
    }
    out
}

/// One row of the supercritical dichotomy sweep.
#[derive(Debug, Clone, Copy)]
pub struct DichotomyRow {
    pub n: usize,
    pub p: f64,
    pub gnw: bool,
    pub p_c: f64,
}

pub fn dichotomy_csv(rows: &[DichotomyRow]) -> String {
    let mut out = String::new();
    out.push_str(DICHOTOMY_HEADER);
    out.push('\n');
    for r in rows {
        let verdict = if r.gnw { "unstable" } else { "stable" };
        let _ = writeln!(out, "{},{},{},{},{verdict}", r.n, r.p, r.gnw, r.p_c);
    }
    out
}

pub fn status_label(status: &RunStatus) -> &'static str {
    match status {
        RunStatus::Completed => "completed",
        RunStatus::Blowup { .. } => "blowup",
        RunStatus::NonfiniteState { .. } => "nonfinite",
        RunStatus::Stalled { .. } => "stalled",
    }
}

/// Everything needed to reproduce and audit a run, stored as JSON next to
/// the series.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunMetadata {
    pub scenario: String,
    pub equation: String,
    pub nodes: usize,
    pub spacing: f64,
    pub lambda1: f64,
    pub sigma_sq: f64,
    pub eigen_residual: f64,
    pub eps: f64,
    pub delta: f64,
    pub concave: bool,
    pub t_max: f64,
    pub cadence: f64,
    pub cfl: f64,
    pub status: String,
    pub blowup_time: Option<f64>,
    pub blowup_bracket: Option<(f64, f64)>,
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    pub fingerprint: String,
}

impl RunMetadata {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Pass/fail certificate for one theorem clause on one scenario.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Verdict {
    pub scenario: String,
    pub theorem_clause: String,
    pub pass: bool,
    /// Named normalized margins (worst over samples or windows).
    pub margins: BTreeMap<String, f64>,
    /// Named growth or blow-up rates observed and predicted.
    pub rates: BTreeMap<String, f64>,
    /// Parameters of every envelope used by the clause.
    pub envelope_params: BTreeMap<String, f64>,
}

pub fn verdicts_to_json(vs: &[Verdict]) -> Result<String> {
    serde_json::to_string_pretty(vs).map_err(|e| Error::Parse(e.to_string()))
}

pub fn verdicts_from_json(text: &str) -> Result<Vec<Verdict>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
