//! Exhaustive integer checks: rooted-subspace tables, the exclusion
//! inequality, and dimension estimates over singular and generic tuples.

use bary_core::lie::{build_cartan_frame, root_system, ChamberVector, Family, RootSystem};
use bary_core::linalg::gaussian_vector;
use bary_core::matching::{
    dimension_estimate, exclusion_inequality, dimension_floor, hall_matching, pick_with_singular, required_dimension,
    rooted_subspace_table, singular_lines, spanning_tuples, DimensionEstimate, MatchingInstance,
};
use bary_core::Error;
use serde_json::{json, Value};

use super::{Check, Report};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::Table;
use crate::seeds::cell_rng;

pub const TABLE_SYSTEMS: [(Family, usize); 6] = [
    (Family::A, 2),
    (Family::A, 3),
    (Family::A, 4),
    (Family::B, 2),
    (Family::C, 3),
    (Family::D, 4),
];

/// Largest rank of the exclusion matrix.
pub const EXCLUSION_MAX_RANK: usize = 8;

/// Random unit vectors in the Cartan subspace; regular with probability one.
pub fn generic_tuple(rs: &RootSystem, seed: u64) -> Vec<ChamberVector> {
    let mut rng = cell_rng(seed, rs.rank as u64);
    (0..rs.rank)
        .map(|_| {
            let mut v = gaussian_vector(&mut rng, rs.ambient_dim());
            let mean = v.mean();
            v.add_scalar_mut(-mean);
            ChamberVector::new(rs, v.normalize())
        })
        .collect()
}

fn push_estimate(t: &mut Table, records: &mut Vec<Value>, label: &str, kind: &str, tuple: usize, est: &DimensionEstimate) {
    for e in &est.entries {
        let members = e.members.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        t.push(vec![
            label.to_string(),
            kind.to_string(),
            tuple.to_string(),
            members,
            e.members.len().to_string(),
            e.dim.to_string(),
            e.required.to_string(),
            e.floor.to_string(),
            e.pass.to_string(),
            e.floor_ok.to_string(),
        ]);
    }
    records.push(json!({
        "kind": "dimension",
        "system": label,
        "tuple_kind": kind,
        "tuple": tuple,
        "all_pass": est.all_pass,
        "floor_ok": est.floor_ok,
        "entries": est.entries,
    }));
}

pub fn verify(cfg: &ScenarioConfig) -> Result<Report> {
    let mut records = Vec::new();
    let mut checks = Vec::new();

    // Rooted-subspace tables.
    let mut tt = Table::new("t-table", &["system", "i", "t_i", "increment", "claim_ok"]);
    let mut claim_fail = Vec::new();
    for (f, r) in TABLE_SYSTEMS {
        let rs = root_system(f, r)?;
        let table = rooted_subspace_table(&rs)?;
        let label = format!("{f}{r}");
        for i in 0..=r {
            let inc = if i == 0 { 0 } else { table[i] as i64 - table[i - 1] as i64 };
            let ok = i == 0 || i >= r || inc >= i as i64;
            if !ok {
                claim_fail.push(format!("{label} i={i}"));
            }
            tt.push(vec![label.clone(), i.to_string(), table[i].to_string(), inc.to_string(), ok.to_string()]);
        }
        if table[1] != 1 {
            claim_fail.push(format!("{label} t_1={}", table[1]));
        }
        records.push(json!({ "kind": "t-table", "system": label, "t": table }));
    }
    checks.push(Check::gating(
        "t-claim",
        claim_fail.is_empty(),
        if claim_fail.is_empty() {
            format!("t_i - t_(i-1) >= i and t_1 = 1 in all {} tables", TABLE_SYSTEMS.len())
        } else {
            format!("violations: {}", claim_fail.join(", "))
        },
    ));

    // Exclusion matrix.
    let mut ex = Table::new("exclusion", &["r", "k", "floor", "required", "holds"]);
    let mut failing = Vec::new();
    for r in 1..=EXCLUSION_MAX_RANK {
        for k in 1..=r {
            let holds = exclusion_inequality(r, k);
            if !holds {
                failing.push((r, k));
            }
            ex.push(vec![
                r.to_string(),
                k.to_string(),
                dimension_floor(r, k).to_string(),
                required_dimension(r, k).to_string(),
                holds.to_string(),
            ]);
        }
    }
    records.push(json!({ "kind": "exclusion", "max_rank": EXCLUSION_MAX_RANK, "failing": failing }));
    checks.push(Check::gating(
        "exclusion-inequality",
        failing == vec![(2, 2), (3, 3)],
        format!("fails at {failing:?} over 1 <= k <= r <= {EXCLUSION_MAX_RANK}"),
    ));

    // Dimension estimates for type A of each configured m.
    let mut dt = Table::new(
        "dimension",
        &["system", "tuple_kind", "tuple", "members", "k", "dim", "required", "floor", "pass", "floor_ok"],
    );
    let mut floor_ok = true;
    let mut boundary = Vec::new();
    let mut boundary_ok = true;
    for &m in &cfg.m {
        let rs = root_system(Family::A, m - 1)?;
        let r = rs.rank;
        let label = format!("A{r}");
        if r > bary_core::matching::EXHAUSTIVE_MAX_RANK {
            return Err(Error::Capability {
                rank: r,
                max: bary_core::matching::EXHAUSTIVE_MAX_RANK,
            }
            .into());
        }
        let lines = singular_lines(&rs);
        let tuples = spanning_tuples(&rs, &lines);
        let mut singular_pass = true;
        for (ti, idx) in tuples.iter().enumerate() {
            let tuple: Vec<ChamberVector> = idx.iter().map(|&i| lines[i].clone()).collect();
            let est = dimension_estimate(&rs, &tuple)?;
            floor_ok &= est.floor_ok;
            singular_pass &= est.all_pass;
            push_estimate(&mut dt, &mut records, &label, "singular", ti, &est);
        }
        let est = dimension_estimate(&rs, &generic_tuple(&rs, cfg.seed))?;
        floor_ok &= est.floor_ok;
        push_estimate(&mut dt, &mut records, &label, "generic", 0, &est);
        let fails: Vec<(usize, usize, usize)> = est
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| (e.members.len(), e.dim, e.required))
            .collect();
        // Regular tuples fail exactly on the full tuple in ranks two and three.
        let expected: Vec<(usize, usize, usize)> = match r {
            2 => vec![(2, 3, 4)],
            3 => vec![(3, 6, 7)],
            _ => vec![],
        };
        boundary_ok &= fails == expected;
        if r >= 4 {
            boundary_ok &= singular_pass;
        }
        boundary.push(format!(
            "{label}: {} singular tuples all_pass={singular_pass}, generic failures {fails:?}",
            tuples.len()
        ));
    }
    checks.push(Check::gating("dimension-floor", floor_ok, "k(2r-k+1)/2 floor on every tuple".into()));
    checks.push(Check::gating("exclusion-boundary", boundary_ok, boundary.join("; ")));

    // Deficiency witnesses for regression.
    let inst = MatchingInstance::new(3, vec![2, 2], vec![vec![0, 1, 2], vec![0, 1, 2]])?;
    records.push(json!({ "kind": "deficiency", "instance": inst, "selection": hall_matching(&inst) }));
    if cfg.m.contains(&4) {
        let frame = build_cartan_frame(4)?;
        let tuple = generic_tuple(&frame.roots, cfg.seed);
        let outcome = match pick_with_singular(&frame, &tuple) {
            Err(Error::InfeasibleFrame {
                deficient,
                reachable,
                demand,
            }) => json!({ "deficient": deficient, "reachable": reachable, "demand": demand }),
            Err(e) => return Err(e.into()),
            Ok(p) => json!({ "assignment": p.assignment }),
        };
        records.push(json!({ "kind": "deficiency", "system": "A3", "tuple_kind": "generic", "outcome": outcome }));
    }

    Ok(Report {
        config: cfg.clone(),
        records,
        tables: vec![tt, ex, dt],
        checks,
        extra: json!({ "exclusion_failing": failing }),
    })
}
