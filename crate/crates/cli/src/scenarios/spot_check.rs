//! Re-checks sweep rows from their stored restricted forms.

use std::io::BufRead;

use bary_core::barycenter::{log_ratio, JACOBIAN_SLACK};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use super::{Check, Report};
use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};

/// Relative agreement required between stored and recomputed ratios.
pub const RATIO_TOLERANCE: f64 = 1e-9;

fn matrix(v: &Value) -> Option<DMatrix<f64>> {
    let rows = v.as_array()?;
    let n = rows.len();
    let mut out = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_array()?;
        if r.len() != n {
            return None;
        }
        for (j, x) in r.iter().enumerate() {
            out[(i, j)] = x.as_f64()?;
        }
    }
    Some(out)
}

/// `None` when the row agrees with its stored forms, else the reason.
pub fn recheck(row: &Value) -> Option<String> {
    let k = row["k"].as_u64()? as i32;
    let (q1, q2) = match (matrix(&row["q1_s"]), matrix(&row["q2_s"])) {
        (Some(a), Some(b)) => (a, b),
        _ => return Some("stored forms are malformed".into()),
    };
    let jac = row["jac"].as_f64();
    let stored = row["ratio"].as_f64();
    let claimed_ok = row["ok"].as_bool() == Some(true);
    let recomputed = if q1.nrows() == 0 { Some(0.0) } else { log_ratio(&q1, &q2) }.map(f64::exp);
    match (stored, recomputed) {
        (None, None) => {}
        (Some(s), Some(r)) if ((s - r) / r).abs() <= RATIO_TOLERANCE => {}
        (s, r) => return Some(format!("stored ratio {s:?}, recomputed {r:?}")),
    }
    if claimed_ok {
        let bound = recomputed.map_or(f64::INFINITY, |r| r * 2f64.powi(k));
        match jac {
            Some(j) if j <= bound * (1.0 + JACOBIAN_SLACK) => {}
            j => return Some(format!("jac {j:?} exceeds recomputed bound {bound:e}")),
        }
    }
    None
}

pub fn spot_check(cfg: &ScenarioConfig) -> Result<Report> {
    let path = cfg.input.as_ref().ok_or_else(|| CliError::Config("spot-check needs an input file".into()))?;
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut records = Vec::new();
    let (mut checked, mut skipped, mut bad) = (0usize, 0usize, 0usize);
    for (line_no, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let v: Value = serde_json::from_str(&line)?;
        if v["kind"] != "row" {
            continue;
        }
        if !v["error"].is_null() {
            skipped += 1;
            continue;
        }
        checked += 1;
        if let Some(reason) = recheck(&v) {
            bad += 1;
            records.push(json!({ "kind": "mismatch", "line": line_no + 1, "reason": reason }));
        }
    }
    let checks = vec![Check::gating(
        "spot-check",
        bad == 0 && checked > 0,
        format!("{checked} rows re-checked, {bad} mismatches, {skipped} failed rows skipped"),
    )];
    Ok(Report {
        config: cfg.clone(),
        records,
        tables: Vec::new(),
        checks,
        extra: json!({ "checked": checked, "mismatches": bad, "skipped": skipped }),
    })
}
