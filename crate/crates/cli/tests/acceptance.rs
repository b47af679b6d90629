//! One PASS/FAIL line per acceptance criterion. Exits nonzero when a
//! criterion fails that is not listed in `KNOWN_UNATTAINABLE`.

use std::process::ExitCode;
use std::time::Instant;

use bary_cli::checks::{barycenter_centering, discrete_exactness, q1_isotropy};
use bary_cli::{run, Report, Scenario, ScenarioConfig};
use bary_core::lie::sl_constants;

/// Criteria that fail at desk scale for documented reasons.
const KNOWN_UNATTAINABLE: &[&str] = &[];

/// Reported but never gating.
const NON_GATING: &[&str] = &["blow-up-contrast"];

const SEED: u64 = 20240611;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn scenario(s: Scenario, edit: impl FnOnce(&mut ScenarioConfig)) -> Report {
    let mut cfg = ScenarioConfig::defaults(s);
    cfg.seed = SEED;
    edit(&mut cfg);
    cfg.validate().expect("acceptance config is valid");
    run(&cfg).expect("scenario runs")
}

fn gating_details(r: &Report, names: &[&str]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in names {
        let c = r.check(n).unwrap_or_else(|| panic!("missing check {n}"));
        pass &= c.pass;
        parts.push(format!("{n}: {}", c.detail));
    }
    (pass, parts.join("; "))
}

fn dimension_formulas() -> Line {
    let c8 = sl_constants(8);
    let c5 = sl_constants(5);
    let table_ok = (2..=12).all(|m| {
        let c = sl_constants(m);
        c.n == m * (m + 1) / 2 - 1 && c.splitting_rank == m * (m - 1) / 2 && c.r == m - 1
    });
    Line {
        name: "dimension-formulas",
        pass: c8.n == 35 && c5.splitting_rank == 10 && table_ok,
        detail: format!("n(8) = {}, srk(5) = {}, formulas hold for m in 2..=12: {table_ok}", c8.n, c5.splitting_rank),
    }
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let mut timed = |f: &mut dyn FnMut() -> Vec<Line>| {
        let t = Instant::now();
        let mut out = f();
        for l in &mut out {
            l.detail = format!("{} [{:.1}s]", l.detail, t.elapsed().as_secs_f64());
        }
        lines.extend(out);
    };

    timed(&mut || vec![dimension_formulas()]);

    timed(&mut || {
        let r = scenario(Scenario::CombinatoricsVerify, |c| c.m = vec![3, 4, 5]);
        let (bp, bd) = gating_details(&r, &["exclusion-boundary", "exclusion-inequality", "dimension-floor"]);
        let (tp, td) = gating_details(&r, &["t-claim"]);
        vec![
            Line { name: "exclusion-boundary", pass: bp, detail: bd },
            Line { name: "t-claim", pass: tp, detail: td },
        ]
    });

    timed(&mut || {
        let r = scenario(Scenario::BusemannValidate, |c| {
            c.m = vec![3, 4, 5];
            c.trials = 200;
            c.far_time = 1e4;
        });
        let (pass, detail) = gating_details(&r, &["busemann-oracle", "busemann-gradient", "busemann-hessian"]);
        vec![Line { name: "busemann-fidelity", pass, detail }]
    });

    timed(&mut || {
        let e = discrete_exactness(&[(3, 2), (4, 4), (5, 6), (5, 12)], 4, 256, SEED).expect("exactness runs");
        vec![Line {
            name: "discrete-exactness",
            pass: e.pass,
            detail: format!(
                "{} configurations: foc {:e}, derivative {:e}, equivariance {:e}",
                e.cases, e.worst_foc, e.worst_derivative, e.worst_equivariance
            ),
        }]
    });

    timed(&mut || {
        let r = scenario(Scenario::JacobianSweep, |c| {
            c.m = vec![5];
            c.degree = vec![12, 13, 14];
            c.atoms = 256;
            c.spreads = vec![1.0, 2.0, 4.0, 8.0];
            c.tuples = 7;
            c.grid = 12;
        });
        let rows = r.records.len();
        let (jp, jd) = gating_details(&r, &["jacobian-bound"]);
        let (cp, cd) = gating_details(&r, &["cauchy-schwarz"]);
        vec![
            Line { name: "jacobian-inequality", pass: jp && rows >= 1000, detail: format!("{rows} rows; {jd}") },
            Line { name: "cauchy-schwarz", pass: cp, detail: cd },
        ]
    });

    timed(&mut || {
        let mut pass = true;
        let mut parts = Vec::new();
        for m in [3, 4, 5] {
            let iso = q1_isotropy(m, 8192, SEED + m as u64).expect("isotropy runs");
            let cen = barycenter_centering(m, &[1024, 4096, 16384], 4096, 8, SEED).expect("centering runs");
            pass &= iso.pass && cen.pass_distance && cen.pass_decay;
            parts.push(format!(
                "m={m}: |Q1 - I/n| {:.4} <= {:.4} {}, d(bar, o) at 4096 {:.4} {}, rms {:?} decay {:?} {}",
                iso.deviation,
                iso.tolerance,
                iso.pass,
                cen.reference_distance,
                cen.pass_distance,
                cen.rms_distance.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
                cen.decay.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>(),
                cen.pass_decay
            ));
        }
        vec![Line { name: "monte-carlo-symmetry", pass, detail: parts.join("; ") }]
    });

    timed(&mut || {
        let r = scenario(Scenario::LemmaSuite, |c| c.trials = 1000);
        let (pass, detail) = gating_details(&r, &["interlacing", "frame-bound", "gram-schmidt"]);
        vec![Line { name: "lemma-suites", pass, detail }]
    });

    timed(&mut || {
        let r = scenario(Scenario::SplitrankBlowup, |c| c.m = vec![5]);
        let (gp, gd) = gating_details(&r, &["growth-at-splitting-rank-m5", "flat-at-k12-m5"]);
        vec![Line { name: "blow-up-contrast", pass: gp, detail: gd }]
    });

    let mut unexpected = Vec::new();
    for l in &lines {
        let tag = if NON_GATING.contains(&l.name) {
            " (non-gating)"
        } else if !l.pass && KNOWN_UNATTAINABLE.contains(&l.name) {
            " (known unattainable)"
        } else {
            ""
        };
        println!("{} {}{tag}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
        if !l.pass && tag.is_empty() {
            unexpected.push(l.name);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
