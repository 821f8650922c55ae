//! Output artifacts: NDJSON trajectories, CSV diagnostics and ladder tables.
//!
//! Every artifact carries the SHA-256 of the configuration that produced it.
//! Existing artifacts stamped with a different hash are never overwritten
//! unless the caller forces it. Wall-clock time appears only in a dedicated
//! `timestamp` record so that the remaining bytes are reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::EquationParams;
use crate::error::{Error, Result};
use crate::experiments::{ComparisonReport, LadderResult};
use crate::integrators::{Diagnostics, ResidualReport, RunKind, StepControl, StepStats, Trajectory};
use crate::spectral::LatticeDescriptor;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First record of every NDJSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub record: String,
    pub artifact: String,
    pub code_version: String,
    pub config_hash: String,
    pub lattice: LatticeDescriptor,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<RunKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<EquationParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<StepControl>,
}

impl Manifest {
    pub fn new(artifact: &str, config_hash: &str, lattice: LatticeDescriptor) -> Self {
        Self {
            record: "manifest".into(),
            artifact: artifact.into(),
            code_version: CODE_VERSION.into(),
            config_hash: config_hash.into(),
            lattice,
            kind: None,
            params: None,
            control: None,
        }
    }

    pub fn for_trajectory(traj: &Trajectory, config_hash: &str) -> Self {
        let lattice = traj.checkpoints[0].field.lattice().descriptor();
        Self {
            kind: Some(traj.kind),
            params: Some(traj.params),
            control: Some(traj.control),
            ..Self::new("trajectory", config_hash, lattice)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub record: String,
    pub tau: f64,
    pub diagnostics: Diagnostics,
    pub amps: Vec<[f64; 2]>,
}

fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({ "record": "timestamp", "unix_seconds": secs }).to_string()
}

/// Whether a line is the (non-reproducible) timestamp record.
pub fn is_timestamp_line(line: &str) -> bool {
    line.starts_with("{\"record\":\"timestamp\"")
}

fn stored_hash(text: &str) -> Option<String> {
    let first = text.lines().next()?;
    if let Some(rest) = first.strip_prefix("# config_hash: ") {
        return Some(rest.trim().to_string());
    }
    let value: serde_json::Value = serde_json::from_str(first)
        .or_else(|_| serde_json::from_str(text))
        .ok()?;
    value.get("config_hash")?.as_str().map(str::to_string)
}

/// Refuses to replace an artifact produced by a different configuration.
pub fn check_overwrite(path: &Path, config_hash: &str, force: bool) -> Result<()> {
    if force || !path.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(path).unwrap_or_default();
    match stored_hash(&text) {
        Some(h) if h == config_hash => Ok(()),
        _ => Err(Error::Config(format!(
            "refusing to overwrite {} written by a different configuration (use --force)",
            path.display()
        ))),
    }
}

fn write_atomic(path: &Path, contents: &str, config_hash: &str, force: bool) -> Result<()> {
    check_overwrite(path, config_hash, force)?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes a trajectory: manifest, timestamp, one record per checkpoint,
/// then a status record with step statistics.
pub fn trajectory_ndjson(traj: &Trajectory, config_hash: &str, abort: Option<(f64, &str)>) -> Result<String> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&Manifest::for_trajectory(traj, config_hash))?);
    out.push('\n');
    out.push_str(&timestamp_line());
    out.push('\n');
    for cp in &traj.checkpoints {
        let rec = CheckpointRecord {
            record: "checkpoint".into(),
            tau: cp.tau,
            diagnostics: cp.diagnostics.clone(),
            amps: cp.field.amps().iter().map(|a| [a.re, a.im]).collect(),
        };
        out.push_str(&serde_json::to_string(&rec)?);
        out.push('\n');
    }
    let status = match abort {
        None => json!({ "record": "status", "status": "completed", "stats": traj.stats, "self_check": traj.self_check }),
        Some((tau, reason)) => {
            json!({ "record": "status", "status": "aborted", "tau": tau, "reason": reason, "stats": traj.stats })
        }
    };
    out.push_str(&serde_json::to_string(&status)?);
    out.push('\n');
    Ok(out)
}

pub fn write_trajectory(
    path: &Path,
    traj: &Trajectory,
    config_hash: &str,
    abort: Option<(f64, &str)>,
    force: bool,
) -> Result<()> {
    write_atomic(path, &trajectory_ndjson(traj, config_hash, abort)?, config_hash, force)
}

/// Reads the manifest and checkpoint records of a trajectory artifact.
pub fn read_trajectory(path: &Path) -> Result<(Manifest, Vec<CheckpointRecord>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let manifest: Manifest = serde_json::from_str(lines.next().unwrap_or(""))?;
    let mut checkpoints = Vec::new();
    for line in lines {
        let value: serde_json::Value = serde_json::from_str(line)?;
        if value.get("record").and_then(|r| r.as_str()) == Some("checkpoint") {
            checkpoints.push(serde_json::from_value(value)?);
        }
    }
    Ok((manifest, checkpoints))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Column order: `tau,l2,h1,h2,h_res,energy` followed by one `norm_s=<s>`
/// column per configured index.
pub fn diagnostics_csv(traj: &Trajectory, config_hash: &str) -> String {
    let mut out = format!("# config_hash: {config_hash}\n");
    out.push_str("tau,l2,h1,h2,h_res,energy");
    if let Some(first) = traj.checkpoints.first() {
        for [s, _] in &first.diagnostics.norms {
            let _ = write!(out, ",norm_s={s}");
        }
    }
    out.push('\n');
    for cp in &traj.checkpoints {
        let d = &cp.diagnostics;
        let _ = write!(
            out,
            "{:e},{:e},{:e},{:e},{},{}",
            cp.tau,
            d.l2,
            d.h1,
            d.h2,
            opt(d.h_res),
            opt(d.energy)
        );
        for [_, v] in &d.norms {
            let _ = write!(out, ",{v:e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_diagnostics(path: &Path, traj: &Trajectory, config_hash: &str, force: bool) -> Result<()> {
    write_atomic(path, &diagnostics_csv(traj, config_hash), config_hash, force)
}

/// `eps,sup_error,fitted_exponent`, one row per ladder rung.
pub fn ladder_csv(ladder: &LadderResult, config_hash: &str) -> String {
    let mut out = format!("# config_hash: {config_hash}\neps,sup_error,fitted_exponent\n");
    for (e, s) in ladder.epsilons.iter().zip(&ladder.sups) {
        let _ = writeln!(out, "{e:e},{s:e},{}", opt(ladder.fitted_exponent));
    }
    out
}

/// `log_eps,log_sup_error` for plotting.
pub fn plot_data_csv(ladder: &LadderResult, config_hash: &str) -> String {
    let mut out = format!("# config_hash: {config_hash}\nlog_eps,log_sup_error\n");
    for (e, s) in ladder.epsilons.iter().zip(&ladder.sups) {
        let _ = writeln!(out, "{:e},{:e}", e.ln(), s.ln());
    }
    out
}

/// Manifest, timestamp, one record per comparison, then a summary record.
pub fn compare_ndjson(ladder: &LadderResult, config_hash: &str, lattice: LatticeDescriptor) -> Result<String> {
    #[derive(Serialize)]
    struct Rec<'a> {
        record: &'static str,
        #[serde(flatten)]
        report: &'a ComparisonReport,
        stats: StepStats,
    }
    let mut manifest = Manifest::new("compare", config_hash, lattice);
    manifest.params = Some(ladder.effective.params);
    manifest.control = Some(ladder.effective.control);
    let mut out = serde_json::to_string(&manifest)?;
    out.push('\n');
    out.push_str(&timestamp_line());
    out.push('\n');
    for (report, full) in ladder.reports.iter().zip(&ladder.full) {
        out.push_str(&serde_json::to_string(&Rec {
            record: "comparison",
            report,
            stats: full.stats,
        })?);
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&json!({
        "record": "summary",
        "epsilons": ladder.epsilons,
        "sups": ladder.sups,
        "fitted_exponent": ladder.fitted_exponent,
        "sqrt_ratio_spread": ladder.sqrt_ratio_spread,
        "monotone": ladder.monotone,
        "degenerate": ladder.degenerate,
    }))?);
    out.push('\n');
    Ok(out)
}

/// Manifest, timestamp and a single comparison record.
pub fn comparison_ndjson(
    report: &ComparisonReport,
    full: &Trajectory,
    config_hash: &str,
    lattice: LatticeDescriptor,
) -> Result<String> {
    let mut manifest = Manifest::new("compare", config_hash, lattice);
    manifest.params = Some(report.params);
    manifest.control = Some(full.control);
    let mut out = serde_json::to_string(&manifest)?;
    out.push('\n');
    out.push_str(&timestamp_line());
    out.push('\n');
    let mut rec = serde_json::to_value(report)?;
    rec["record"] = json!("comparison");
    rec["stats"] = serde_json::to_value(full.stats)?;
    out.push_str(&serde_json::to_string(&rec)?);
    out.push('\n');
    Ok(out)
}

/// `tau,residual` with the quadrature reliability flag in a comment line.
pub fn residual_csv(report: &ResidualReport, config_hash: &str) -> String {
    let mut out = format!("# config_hash: {config_hash}\n# resolved: {}\ntau,residual\n", report.reliable);
    for (t, r) in report.taus.iter().zip(&report.norms) {
        let _ = writeln!(out, "{t:e},{r:e}");
    }
    out
}

pub fn write_text(path: &Path, contents: &str, config_hash: &str, force: bool) -> Result<()> {
    write_atomic(path, contents, config_hash, force)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_read_from_each_format() {
        assert_eq!(stored_hash("# config_hash: abc\ntau\n").as_deref(), Some("abc"));
        assert_eq!(stored_hash("{\"record\":\"manifest\",\"config_hash\":\"xyz\"}\n{}").as_deref(), Some("xyz"));
        assert_eq!(stored_hash("{\n  \"config_hash\": \"pretty\"\n}").as_deref(), Some("pretty"));
        assert_eq!(stored_hash("random"), None);
    }

    #[test]
    fn overwrite_guard() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_text(&p, "# config_hash: aaa\n1\n", "aaa", false).unwrap();
        write_text(&p, "# config_hash: aaa\n2\n", "aaa", false).unwrap();
        assert!(matches!(
            write_text(&p, "# config_hash: bbb\n3\n", "bbb", false),
            Err(Error::Config(_))
        ));
        write_text(&p, "# config_hash: bbb\n3\n", "bbb", true).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "# config_hash: bbb\n3\n");
    }

    #[test]
    fn timestamp_lines_are_recognized() {
        assert!(is_timestamp_line(&timestamp_line()));
        assert!(!is_timestamp_line("{\"record\":\"checkpoint\"}"));
    }
}
