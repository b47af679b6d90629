//! Closed-form Busemann functions against the ray limit `d(x, ray(t)) - t`
//! and against finite differences.

use bary_core::spd::{
    busemann, busemann_gradient, busemann_hessian, busemann_oracle, exp_at, random_atom, random_point, SymmetricSpace,
};
use bary_core::linalg::random_unit_vector;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{Check, Report};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::cell_rng;

pub const ORACLE_TOLERANCE: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-3;
pub const FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct PairRow {
    pub kind: &'static str,
    pub m: usize,
    pub pair: usize,
    pub closed_form: f64,
    pub oracle: f64,
    pub oracle_error: f64,
    /// `2 o(2t) - o(t)`, which cancels the `1/t` bias of the ray limit.
    pub extrapolated_error: f64,
    pub gradient_rel_error: f64,
    pub hessian_rel_error: f64,
    pub error: Option<String>,
}

fn pair(space: &SymmetricSpace, cfg: &ScenarioConfig, index: usize) -> PairRow {
    let m = space.m();
    let mut rng = cell_rng(cfg.seed, (m as u64) << 32 | index as u64);
    let x = random_point(space, &mut rng, cfg.radius);
    let th = random_atom(m, &mut rng);
    let mut row = PairRow {
        kind: "pair",
        m,
        pair: index,
        closed_form: f64::NAN,
        oracle: f64::NAN,
        oracle_error: f64::NAN,
        extrapolated_error: f64::NAN,
        gradient_rel_error: f64::NAN,
        hessian_rel_error: f64::NAN,
        error: None,
    };
    let t = cfg.far_time;
    let b_at = |u: &DVector<f64>, s: f64| -> bary_core::Result<f64> {
        busemann(space, &exp_at(&x, &(space.frame.matrix(u) * s))?, &th)
    };
    let mut eval = || -> bary_core::Result<()> {
        row.closed_form = busemann(space, &x, &th)?;
        row.oracle = busemann_oracle(space, &x, &th, t);
        row.oracle_error = (row.oracle - row.closed_form).abs();
        let far = busemann_oracle(space, &x, &th, 2.0 * t);
        row.extrapolated_error = (2.0 * far - row.oracle - row.closed_form).abs();

        let n = space.n();
        let g = space.frame.coords(&busemann_gradient(space, &x, &th)?);
        let mut fd = DVector::zeros(n);
        for i in 0..n {
            let e = DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
            fd[i] = (b_at(&e, FD_STEP)? - b_at(&e, -FD_STEP)?) / (2.0 * FD_STEP);
        }
        row.gradient_rel_error = (&fd - &g).norm() / g.norm();

        let hess = busemann_hessian(space, &x, &th)?.matrix;
        let scale = hess.norm();
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let u = random_unit_vector(&mut rng, n);
            let second = (b_at(&u, FD_STEP)? - 2.0 * row.closed_form + b_at(&u, -FD_STEP)?) / (FD_STEP * FD_STEP);
            let exact = u.dot(&(&hess * &u));
            worst = worst.max((second - exact).abs() / scale);
        }
        row.hessian_rel_error = worst;
        Ok(())
    };
    if let Err(e) = eval() {
        row.error = Some(e.to_string());
    }
    row
}

fn max_of(rows: &[&PairRow], f: impl Fn(&PairRow) -> f64) -> f64 {
    rows.iter().map(|r| f(r)).fold(0.0, f64::max)
}

pub fn validate(cfg: &ScenarioConfig) -> Result<Report> {
    let spaces: Vec<SymmetricSpace> = cfg.m.iter().map(|&m| SymmetricSpace::new(m)).collect::<bary_core::Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..spaces.len()).flat_map(|s| (0..cfg.trials).map(move |i| (s, i))).collect();
    let rows: Vec<PairRow> = jobs.par_iter().map(|&(s, i)| pair(&spaces[s], cfg, i)).collect();

    let mut table = Table::new(
        "summary",
        &["m", "pairs", "failed", "max_oracle_error", "max_extrapolated_error", "max_gradient_rel_error", "max_hessian_rel_error"],
    );
    let mut per_m = Vec::new();
    for &m in &cfg.m {
        let mine: Vec<&PairRow> = rows.iter().filter(|r| r.m == m && r.error.is_none()).collect();
        let failed = cfg.trials - mine.len();
        let vals = [
            max_of(&mine, |r| r.oracle_error),
            max_of(&mine, |r| r.extrapolated_error),
            max_of(&mine, |r| r.gradient_rel_error),
            max_of(&mine, |r| r.hessian_rel_error),
        ];
        table.push(
            [m.to_string(), cfg.trials.to_string(), failed.to_string()]
                .into_iter()
                .chain(vals.iter().map(|&v| num(v)))
                .collect(),
        );
        per_m.push(json!({
            "m": m,
            "failed": failed,
            "max_oracle_error": vals[0],
            "max_extrapolated_error": vals[1],
            "max_gradient_rel_error": vals[2],
            "max_hessian_rel_error": vals[3],
        }));
    }
    let ok: Vec<&PairRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let failed = rows.len() - ok.len();
    let oracle = max_of(&ok, |r| r.oracle_error);
    let extrapolated = max_of(&ok, |r| r.extrapolated_error);
    let grad = max_of(&ok, |r| r.gradient_rel_error);
    let hess = max_of(&ok, |r| r.hessian_rel_error);
    let over = ok.iter().filter(|r| r.oracle_error > ORACLE_TOLERANCE).count();
    let checks = vec![
        Check::gating(
            "busemann-oracle",
            failed == 0 && oracle <= ORACLE_TOLERANCE,
            format!(
                "max |closed form - ray limit at t={}| = {oracle:e} ({over} of {} pairs above {ORACLE_TOLERANCE:e}); \
                 extrapolated error {extrapolated:e}",
                cfg.far_time,
                ok.len()
            ),
        ),
        Check::gating(
            "busemann-gradient",
            failed == 0 && grad <= FD_TOLERANCE,
            format!("max relative error {grad:e}"),
        ),
        Check::gating(
            "busemann-hessian",
            failed == 0 && hess <= FD_TOLERANCE,
            format!("max relative error {hess:e}"),
        ),
    ];
    Ok(Report {
        config: cfg.clone(),
        records: rows.iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect(),
        tables: vec![table],
        checks,
        extra: json!({ "per_m": per_m, "failed": failed }),
    })
}
