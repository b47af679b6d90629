//! Jacobian sweeps over random simplices, and the split-subspace blow-up
//! experiment built on the same rows.

use std::collections::BTreeMap;

use bary_core::barycenter::{cauchy_schwarz_slack, jacobian, SimplexConfig, SphericalPoint};
use bary_core::lie::sl_constants;
use bary_core::spd::{random_point, SpdPoint, SymmetricSpace};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{Check, Report};
use crate::config::{ScenarioConfig, VertexLaw};
use crate::error::Result;
use crate::output::{matrix_rows, num, Table};
use crate::seeds::{cell_rng, cell_seed};
use crate::stats::slope_fit;

/// Smallest Cauchy-Schwarz slack accepted.
pub const CS_TOLERANCE: f64 = -1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub kind: &'static str,
    pub m: usize,
    pub k: usize,
    pub spread: f64,
    pub tuple: usize,
    pub point: usize,
    pub cell: u64,
    pub error: Option<String>,
    pub jac: f64,
    pub bound: f64,
    pub ratio: f64,
    pub ok: bool,
    pub degenerate: bool,
    pub infinite_ratio: bool,
    pub rank: usize,
    pub iterations: usize,
    pub grad_norm: f64,
    pub cs_slack: f64,
    pub q1_s: Vec<Vec<f64>>,
    pub q2_s: Vec<Vec<f64>>,
}

impl SweepRow {
    fn failed(spec: &CellSpec, point: usize, err: String) -> Self {
        SweepRow {
            kind: "row",
            m: spec.m,
            k: spec.k,
            spread: spec.spread,
            tuple: spec.tuple,
            point,
            cell: spec.cell,
            error: Some(err),
            jac: f64::NAN,
            bound: f64::NAN,
            ratio: f64::NAN,
            ok: false,
            degenerate: false,
            infinite_ratio: false,
            rank: 0,
            iterations: 0,
            grad_norm: f64::NAN,
            cs_slack: f64::NAN,
            q1_s: Vec::new(),
            q2_s: Vec::new(),
        }
    }

    pub fn solved(&self) -> bool {
        self.error.is_none()
    }

    /// Solved row with a finite, positive ratio.
    pub fn finite_ratio(&self) -> bool {
        self.solved() && !self.infinite_ratio && self.ratio.is_finite() && self.ratio > 0.0
    }
}

#[derive(Clone, Debug)]
struct CellSpec {
    m: usize,
    k: usize,
    spread: f64,
    tuple: usize,
    cell: u64,
}

fn cells(cfg: &ScenarioConfig) -> Vec<CellSpec> {
    let mut out = Vec::new();
    for &m in &cfg.m {
        for &k in &cfg.degree {
            for &spread in &cfg.spreads {
                for tuple in 0..cfg.tuples {
                    out.push(CellSpec {
                        m,
                        k,
                        spread,
                        tuple,
                        cell: out.len() as u64,
                    });
                }
            }
        }
    }
    out
}

/// A point of `SL(m-1)/SO(m-1) x R` embedded block-diagonally: the first
/// block is a random point of radius one scaled by `e^{s/(m-1)}`, the last
/// entry is `e^{-s}`, with `s` uniform in `[-T, T]`.
pub fn split_vertex(m: usize, spread: f64, rng: &mut ChaCha8Rng) -> Result<SpdPoint> {
    let sub = SymmetricSpace::new(m - 1)?;
    let p = random_point(&sub, rng, 1.0);
    let s = spread * (2.0 * rng.random::<f64>() - 1.0);
    let mut g = DMatrix::zeros(m, m);
    g.view_mut((0, 0), (m - 1, m - 1))
        .copy_from(&(p.matrix() * (s / (m - 1) as f64).exp()));
    g[(m - 1, m - 1)] = (-s).exp();
    Ok(SpdPoint::normalized(&g)?)
}

pub fn vertices(space: &SymmetricSpace, law: VertexLaw, k: usize, spread: f64, rng: &mut ChaCha8Rng) -> Result<Vec<SpdPoint>> {
    (0..=k)
        .map(|_| match law {
            VertexLaw::Geodesic => Ok(random_point(space, rng, spread)),
            VertexLaw::Split => split_vertex(space.m(), spread, rng),
        })
        .collect()
}

/// Interior point with squared coordinates proportional to weights uniform
/// in `[0.1, 1.1]`.
pub fn interior_point(k: usize, rng: &mut ChaCha8Rng) -> SphericalPoint {
    let w: Vec<f64> = (0..=k).map(|_| rng.random::<f64>() + 0.1).collect();
    SphericalPoint::from_weights(&w).expect("weights are positive")
}

fn run_cell(cfg: &ScenarioConfig, spec: &CellSpec) -> Vec<SweepRow> {
    let mut rng = cell_rng(cfg.seed, spec.cell);
    let built = SymmetricSpace::new(spec.m)
        .map_err(Into::into)
        .and_then(|space| vertices(&space, cfg.law, spec.k, spec.spread, &mut rng).map(|v| (space, v)));
    let (space, verts) = match built {
        Ok(x) => x,
        Err(e) => return (0..cfg.grid).map(|p| SweepRow::failed(spec, p, e.to_string())).collect(),
    };
    let simplex = SimplexConfig::new(verts, cfg.atoms, cell_seed(cfg.seed, spec.cell, 0));
    (0..cfg.grid)
        .map(|point| {
            let delta = interior_point(spec.k, &mut rng);
            match jacobian(&space, &simplex, &delta) {
                Err(e) => SweepRow::failed(spec, point, e.to_string()),
                Ok(rec) => {
                    let cs = rec
                        .derivative
                        .as_ref()
                        .map(|d| cauchy_schwarz_slack(d, cfg.cs_samples, &mut rng))
                        .unwrap_or(f64::NAN);
                    SweepRow {
                        kind: "row",
                        m: spec.m,
                        k: spec.k,
                        spread: spec.spread,
                        tuple: spec.tuple,
                        point,
                        cell: spec.cell,
                        error: None,
                        jac: rec.jac,
                        bound: rec.bound,
                        ratio: rec.ratio,
                        ok: rec.ok,
                        degenerate: rec.degenerate,
                        infinite_ratio: rec.infinite_ratio,
                        rank: rec.rank,
                        iterations: rec.iterations,
                        grad_norm: rec.grad_norm,
                        cs_slack: cs,
                        q1_s: matrix_rows(&rec.q1_s),
                        q2_s: matrix_rows(&rec.q2_s),
                    }
                }
            }
        })
        .collect()
}

/// Every row of the sweep in canonical order, computed cell-parallel.
pub fn sweep_rows(cfg: &ScenarioConfig) -> Vec<SweepRow> {
    let specs = cells(cfg);
    let per_cell: Vec<Vec<SweepRow>> = specs.par_iter().map(|s| run_cell(cfg, s)).collect();
    per_cell.into_iter().flatten().collect()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CellSummary {
    pub rows: usize,
    pub failed: usize,
    pub degenerate: usize,
    pub infinite: usize,
    pub violations: usize,
    pub max_jac: f64,
    pub max_ratio: f64,
    pub min_cs_slack: f64,
}

fn summarize(rows: &[SweepRow]) -> BTreeMap<(usize, usize, u64), CellSummary> {
    let mut out: BTreeMap<(usize, usize, u64), CellSummary> = BTreeMap::new();
    for r in rows {
        let s = out.entry((r.m, r.k, r.spread.to_bits())).or_insert_with(|| CellSummary {
            min_cs_slack: f64::INFINITY,
            ..Default::default()
        });
        s.rows += 1;
        if !r.solved() {
            s.failed += 1;
            continue;
        }
        s.degenerate += r.degenerate as usize;
        s.infinite += r.infinite_ratio as usize;
        s.violations += (!r.ok) as usize;
        s.max_jac = s.max_jac.max(r.jac);
        if r.finite_ratio() {
            s.max_ratio = s.max_ratio.max(r.ratio);
        }
        s.min_cs_slack = s.min_cs_slack.min(r.cs_slack);
    }
    out
}

/// Gating checks shared by every sweep: `jac <= 2^k ratio` on all solved
/// nondegenerate rows, and the Cauchy-Schwarz slack.
fn internal_checks(rows: &[SweepRow]) -> Vec<Check> {
    let solved: Vec<&SweepRow> = rows.iter().filter(|r| r.solved()).collect();
    let nondeg: Vec<&&SweepRow> = solved.iter().filter(|r| !r.degenerate).collect();
    let violations = nondeg.iter().filter(|r| !r.ok).count();
    let worst_cs = solved.iter().map(|r| r.cs_slack).fold(f64::INFINITY, f64::min);
    let cs_bad = solved.iter().filter(|r| !(r.cs_slack >= CS_TOLERANCE)).count();
    vec![
        Check::gating(
            "jacobian-bound",
            violations == 0 && !nondeg.is_empty(),
            format!(
                "{violations} violations in {} nondegenerate rows ({} rows, {} solver failures)",
                nondeg.len(),
                rows.len(),
                rows.len() - solved.len()
            ),
        ),
        Check::gating(
            "cauchy-schwarz",
            cs_bad == 0 && !solved.is_empty(),
            format!("worst slack {worst_cs:e} over {} rows, {cs_bad} below {CS_TOLERANCE:e}", solved.len()),
        ),
    ]
}

fn summary_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(
        "summary",
        &[
            "m", "k", "spread", "bounded_regime", "rows", "failed", "degenerate", "infinite", "violations", "max_jac",
            "max_ratio", "min_cs_slack",
        ],
    );
    for ((m, k, spread), s) in summarize(rows) {
        let bounded = k >= sl_constants(m).threshold;
        t.push(vec![
            m.to_string(),
            k.to_string(),
            num(f64::from_bits(spread)),
            bounded.to_string(),
            s.rows.to_string(),
            s.failed.to_string(),
            s.degenerate.to_string(),
            s.infinite.to_string(),
            s.violations.to_string(),
            num(s.max_jac),
            num(s.max_ratio),
            num(s.min_cs_slack),
        ]);
    }
    t
}

fn to_records(rows: &[SweepRow]) -> Vec<serde_json::Value> {
    rows.iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect()
}

pub fn jacobian_sweep(cfg: &ScenarioConfig) -> Result<Report> {
    let rows = sweep_rows(cfg);
    let checks = internal_checks(&rows);
    let table = summary_table(&rows);
    let max_jac: BTreeMap<String, f64> = summarize(&rows)
        .into_iter()
        .map(|((m, k, t), s)| (format!("m={m},k={k},T={}", f64::from_bits(t)), s.max_jac))
        .collect();
    Ok(Report {
        config: cfg.clone(),
        records: to_records(&rows),
        tables: vec![table],
        checks,
        extra: json!({ "rows": rows.len(), "max_jac": max_jac }),
    })
}

/// Log-log trend of the ratio against the spread for one `(m, k)`.
#[derive(Clone, Debug, Serialize)]
pub struct Trend {
    pub m: usize,
    pub k: usize,
    pub regime: &'static str,
    pub rows: usize,
    pub used: usize,
    pub fit: Option<crate::stats::SlopeFit>,
    /// `exp` of the change in mean log ratio from the smallest to the largest
    /// spread.
    pub growth_factor: f64,
}

pub fn trends(rows: &[SweepRow]) -> Vec<Trend> {
    let mut groups: BTreeMap<(usize, usize), Vec<&SweepRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.m, r.k)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((m, k), rs)| {
            let c = sl_constants(m);
            let regime = if k == c.splitting_rank {
                "splitting-rank"
            } else if k >= c.threshold {
                "bounded"
            } else {
                "other"
            };
            let used: Vec<&&SweepRow> = rs.iter().filter(|r| r.finite_ratio()).collect();
            let x: Vec<f64> = used.iter().map(|r| r.spread.ln()).collect();
            let y: Vec<f64> = used.iter().map(|r| r.ratio.ln()).collect();
            let mean_at = |t: f64| {
                let v: Vec<f64> = used.iter().filter(|r| r.spread == t).map(|r| r.ratio.ln()).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            let lo = used.iter().map(|r| r.spread).fold(f64::INFINITY, f64::min);
            let hi = used.iter().map(|r| r.spread).fold(0.0, f64::max);
            let growth_factor = match (mean_at(lo), mean_at(hi)) {
                (Some(a), Some(b)) => (b - a).exp(),
                _ => f64::NAN,
            };
            Trend {
                m,
                k,
                regime,
                rows: rs.len(),
                used: used.len(),
                fit: slope_fit(&x, &y, 0.95),
                growth_factor,
            }
        })
        .collect()
}

pub fn splitrank_blowup(cfg: &ScenarioConfig) -> Result<Report> {
    let rows = sweep_rows(cfg);
    let mut checks = internal_checks(&rows);
    let trends = trends(&rows);
    let mut table = Table::new(
        "trend",
        &["m", "k", "regime", "rows", "used", "slope", "ci_low", "ci_high", "growth_factor", "verdict"],
    );
    for tr in &trends {
        let (slope, lo, hi, verdict) = match &tr.fit {
            Some(f) if f.excludes_zero_above() => (f.slope, f.ci_low, f.ci_high, "growth"),
            Some(f) if f.contains_zero() => (f.slope, f.ci_low, f.ci_high, "flat"),
            Some(f) => (f.slope, f.ci_low, f.ci_high, "decline"),
            None => (f64::NAN, f64::NAN, f64::NAN, "insufficient"),
        };
        table.push(vec![
            tr.m.to_string(),
            tr.k.to_string(),
            tr.regime.to_string(),
            tr.rows.to_string(),
            tr.used.to_string(),
            num(slope),
            num(lo),
            num(hi),
            num(tr.growth_factor),
            verdict.to_string(),
        ]);
        let detail = format!("m={} k={}: slope {slope:.4} CI [{lo:.4}, {hi:.4}], {} of {} rows", tr.m, tr.k, tr.used, tr.rows);
        match tr.regime {
            "splitting-rank" => checks.push(Check::trend(
                &format!("growth-at-splitting-rank-m{}", tr.m),
                verdict == "growth",
                detail,
            )),
            "bounded" => checks.push(Check::trend(&format!("flat-at-k{}-m{}", tr.k, tr.m), verdict == "flat", detail)),
            _ => {}
        }
    }
    Ok(Report {
        config: cfg.clone(),
        records: to_records(&rows),
        tables: vec![summary_table(&rows), table],
        checks,
        extra: json!({ "rows": rows.len(), "trends": trends }),
    })
}
