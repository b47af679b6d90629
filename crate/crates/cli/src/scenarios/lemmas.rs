//! Seeded batteries for the three quadratic-form lemmas: interlacing, the
//! frame eigenvalue bound, and the perturbed Gram-Schmidt bound.

use bary_core::forms::{frame_eigen_bound, interlacing_check, max_cross_inner, perturbed_gram_schmidt, tau0};
use bary_core::linalg::{gaussian_matrix, gram_schmidt, haar_special_orthogonal};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{Check, Report};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::output::{num, Table};
use crate::seeds::cell_rng;

/// Dimensions drawn for each instance.
pub const DIMS: std::ops::RangeInclusive<usize> = 4..=12;

/// Positive definite form with eigenvalues log-uniform in `[1e-4, 1]`.
pub fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let k = haar_special_orthogonal(rng, n);
    let d = DVector::from_fn(n, |_, _| 10f64.powf(-4.0 * rng.random::<f64>()));
    &k * DMatrix::from_diagonal(&d) * k.transpose()
}

/// Columns sorted by increasing `Q` value.
pub fn sort_by_value(q: &DMatrix<f64>, frame: &DMatrix<f64>) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = frame.column_iter().map(|c| c.into_owned()).collect();
    cols.sort_by(|a, b| a.dot(&(q * a)).total_cmp(&b.dot(&(q * b))));
    DMatrix::from_columns(&cols)
}

/// Unit columns with pairwise inner products of magnitude below `tau`.
pub fn tau_frame(rng: &mut ChaCha8Rng, n: usize, k: usize, tau: f64) -> DMatrix<f64> {
    let base = haar_special_orthogonal(rng, n).columns(0, k).into_owned();
    let mut scale = tau;
    loop {
        let noise = gaussian_matrix(rng, n, k) * (scale / (n as f64).sqrt());
        let mut f = &base + noise;
        for mut c in f.column_iter_mut() {
            c.normalize_mut();
        }
        if max_cross_inner(&f).expect("columns are unit") < tau {
            return f;
        }
        scale *= 0.7;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Interlacing,
    FrameBound,
    GramSchmidt,
}

impl Lemma {
    pub const ALL: [Lemma; 3] = [Lemma::Interlacing, Lemma::FrameBound, Lemma::GramSchmidt];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::Interlacing => "interlacing",
            Lemma::FrameBound => "frame-bound",
            Lemma::GramSchmidt => "gram-schmidt",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Instance {
    pub kind: &'static str,
    pub lemma: Lemma,
    pub index: usize,
    pub n: usize,
    /// Nonnegative when the lemma holds exactly; for Gram-Schmidt,
    /// `2 - worst ratio`.
    pub slack: f64,
    pub pass: bool,
    pub error: Option<String>,
}

/// One random instance of `lemma`; passes when its slack is at least
/// `-tolerance`.
pub fn instance(lemma: Lemma, index: usize, seed: u64, tolerance: f64) -> Instance {
    let stream = index as u64 * 3 + lemma as u64;
    let mut rng = cell_rng(seed, stream);
    let n = rng.random_range(DIMS);
    let q = random_pd(&mut rng, n);
    let outcome = match lemma {
        Lemma::Interlacing => {
            let l = rng.random_range(0..n);
            gram_schmidt(&gaussian_matrix(&mut rng, n, n - l))
                .and_then(|w| interlacing_check(&q, &w))
                .map(|r| r.worst_slack)
        }
        Lemma::FrameBound => {
            let frame = sort_by_value(&q, &haar_special_orthogonal(&mut rng, n));
            frame_eigen_bound(&q, &frame).map(|r| r.worst_slack)
        }
        Lemma::GramSchmidt => {
            let k = rng.random_range(2..=n);
            let f = sort_by_value(&q, &tau_frame(&mut rng, n, k, tau0(n) / 2.0));
            perturbed_gram_schmidt(&q, &f, tau0(n)).map(|r| 2.0 - r.worst_ratio)
        }
    };
    let (slack, error) = match outcome {
        Ok(s) => (s, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    Instance {
        kind: "instance",
        lemma,
        index,
        n,
        slack,
        pass: slack >= -tolerance,
        error,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaSummary {
    pub lemma: Lemma,
    pub instances: usize,
    pub passed: usize,
    pub worst_slack: f64,
    pub worst_index: Option<usize>,
}

pub fn summarize(lemma: Lemma, rows: &[Instance]) -> LemmaSummary {
    let mine: Vec<&Instance> = rows.iter().filter(|r| r.lemma == lemma).collect();
    let worst = mine
        .iter()
        .filter(|r| r.slack.is_finite())
        .min_by(|a, b| a.slack.total_cmp(&b.slack).then(a.index.cmp(&b.index)));
    LemmaSummary {
        lemma,
        instances: mine.len(),
        passed: mine.iter().filter(|r| r.pass).count(),
        worst_slack: worst.map_or(f64::NAN, |r| r.slack),
        worst_index: worst.map(|r| r.index),
    }
}

pub fn suite(cfg: &ScenarioConfig) -> Result<Report> {
    let jobs: Vec<(Lemma, usize)> = Lemma::ALL
        .iter()
        .flat_map(|&l| (0..cfg.trials).map(move |i| (l, i)))
        .collect();
    let rows: Vec<Instance> = jobs
        .par_iter()
        .map(|&(l, i)| instance(l, i, cfg.seed, cfg.lemma_tolerance))
        .collect();
    let mut table = Table::new("summary", &["lemma", "instances", "passed", "worst_slack", "worst_index"]);
    let mut checks = Vec::new();
    let mut summaries = Vec::new();
    for l in Lemma::ALL {
        let s = summarize(l, &rows);
        table.push(vec![
            l.name().to_string(),
            s.instances.to_string(),
            s.passed.to_string(),
            num(s.worst_slack),
            s.worst_index.map_or(String::new(), |i| i.to_string()),
        ]);
        checks.push(Check::gating(
            l.name(),
            s.passed == s.instances,
            format!(
                "{} of {} instances, worst slack {:e}, tolerance {:e}",
                s.passed, s.instances, s.worst_slack, cfg.lemma_tolerance
            ),
        ));
        summaries.push(s);
    }
    Ok(Report {
        config: cfg.clone(),
        records: rows.iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect(),
        tables: vec![table],
        checks,
        extra: json!({ "lemmas": summaries }),
    })
}
