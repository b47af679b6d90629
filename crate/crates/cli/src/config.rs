//! Flat, versioned scenario configuration.
//!
//! Resolution order: per-scenario defaults, then the TOML file, then command
//! line flags. The resolved configuration is written into every output
//! header.

use std::path::{Path, PathBuf};

use bary_core::lie::MAX_M;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    JacobianSweep,
    SplitrankBlowup,
    CombinatoricsVerify,
    LemmaSuite,
    BusemannValidate,
    SpotCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::JacobianSweep => "jacobian-sweep",
            Scenario::SplitrankBlowup => "splitrank-blowup",
            Scenario::CombinatoricsVerify => "combinatorics-verify",
            Scenario::LemmaSuite => "lemma-suite",
            Scenario::BusemannValidate => "busemann-validate",
            Scenario::SpotCheck => "spot-check",
        }
    }
}

/// How simplex vertices are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VertexLaw {
    /// `exp_o(U)` with `|U|` uniform in `[0, T]`.
    Geodesic,
    /// Points of the block-diagonal subspace `SL(m-1)/SO(m-1) x R`, with the
    /// line coordinate uniform in `[-T, T]`.
    Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    /// Matrix sizes.
    pub m: Vec<usize>,
    /// Simplex dimensions `k`.
    pub degree: Vec<usize>,
    /// Atoms per vertex measure.
    pub atoms: usize,
    pub seed: u64,
    /// Interior points per vertex tuple.
    pub grid: usize,
    /// Vertex tuples per `(m, k, T)` cell.
    pub tuples: usize,
    /// Spread scales `T`.
    pub spreads: Vec<f64>,
    pub law: VertexLaw,
    /// Sampled `(u, v)` pairs per row for the Cauchy-Schwarz check.
    pub cs_samples: usize,
    /// Random instances per lemma, or point pairs per `m`.
    pub trials: usize,
    /// Ray time for the Busemann limit oracle.
    pub far_time: f64,
    /// Radius of the random points in the Busemann validation.
    pub radius: f64,
    /// Negative slack tolerated by the lemma checks.
    pub lemma_tolerance: f64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
    /// Output file re-checked by `spot-check`.
    pub input: Option<PathBuf>,
}

/// Keys accepted in a configuration file; all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: Option<u32>,
    scenario: Option<Scenario>,
    m: Option<Vec<usize>>,
    degree: Option<Vec<usize>>,
    atoms: Option<usize>,
    seed: Option<u64>,
    grid: Option<usize>,
    tuples: Option<usize>,
    spreads: Option<Vec<f64>>,
    law: Option<VertexLaw>,
    cs_samples: Option<usize>,
    trials: Option<usize>,
    far_time: Option<f64>,
    radius: Option<f64>,
    lemma_tolerance: Option<f64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    input: Option<PathBuf>,
}

/// Command line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub m: Option<Vec<usize>>,
    pub degree: Option<Vec<usize>>,
    pub atoms: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        let mut c = ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            scenario,
            m: vec![5],
            degree: vec![12],
            atoms: 2048,
            seed: 20240611,
            grid: 50,
            tuples: 20,
            spreads: vec![1.0, 2.0, 4.0, 8.0],
            law: VertexLaw::Geodesic,
            cs_samples: 16,
            trials: 1000,
            far_time: 1e4,
            radius: 1.0,
            lemma_tolerance: bary_core::forms::EIGEN_SLACK,
            workers: 0,
            out: PathBuf::from("out"),
            input: None,
        };
        match scenario {
            Scenario::SplitrankBlowup => {
                c.degree = vec![10, 12];
                c.atoms = 256;
                c.grid = 4;
                c.tuples = 6;
                c.spreads = vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
                c.law = VertexLaw::Split;
            }
            Scenario::BusemannValidate => {
                c.m = vec![3, 4, 5];
                c.trials = 200;
            }
            Scenario::CombinatoricsVerify => {
                c.m = vec![3, 4, 5];
            }
            _ => {}
        }
        c
    }

    /// Defaults, overlaid by the file at `path` (if any) and then by `over`.
    pub fn resolve(scenario: Scenario, path: Option<&Path>, over: &Overrides) -> Result<Self> {
        let mut c = Self::defaults(scenario);
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            c.apply_file(&text)?;
        }
        c.apply_overrides(over);
        c.validate()?;
        Ok(c)
    }

    pub fn from_toml(scenario: Scenario, text: &str) -> Result<Self> {
        let mut c = Self::defaults(scenario);
        c.apply_file(text)?;
        c.validate()?;
        Ok(c)
    }

    fn apply_file(&mut self, text: &str) -> Result<()> {
        let f: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        match f.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::Config(format!(
                    "schema_version {v} is not supported, expected {SCHEMA_VERSION}"
                )))
            }
            None => return Err(CliError::Config("schema_version is required".into())),
        }
        if let Some(s) = f.scenario {
            if s != self.scenario {
                return Err(CliError::Config(format!(
                    "file is for scenario {}, not {}",
                    s.name(),
                    self.scenario.name()
                )));
            }
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { self.$field = v; } )* };
        }
        take!(m, degree, atoms, seed, grid, tuples, spreads, law, cs_samples, trials, far_time, radius, lemma_tolerance, workers, out);
        if f.input.is_some() {
            self.input = f.input;
        }
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = &o.$field { self.$field = v.clone(); } )* };
        }
        take!(m, degree, atoms, seed, grid, workers, out);
        if o.input.is_some() {
            self.input = o.input.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.m.is_empty() || self.m.iter().any(|&m| !(2..=MAX_M).contains(&m)) {
            return bad(format!("m must be a nonempty list in 2..={MAX_M}, got {:?}", self.m));
        }
        if self.degree.is_empty() || self.degree.contains(&0) {
            return bad(format!("degree must be a nonempty list of positive integers, got {:?}", self.degree));
        }
        for (name, v) in [
            ("atoms", self.atoms),
            ("grid", self.grid),
            ("tuples", self.tuples),
            ("cs_samples", self.cs_samples),
            ("trials", self.trials),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.spreads.is_empty() || self.spreads.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad(format!("spreads must be positive and finite, got {:?}", self.spreads));
        }
        if !(self.far_time > 0.0 && self.far_time.is_finite()) || !(self.radius >= 0.0 && self.radius.is_finite()) {
            return bad("far_time must be positive and radius nonnegative".into());
        }
        if !self.lemma_tolerance.is_finite() {
            return bad("lemma_tolerance must be finite".into());
        }
        if self.law == VertexLaw::Split && self.m.iter().any(|&m| m < 3) {
            return bad("the split law needs m >= 3".into());
        }
        if self.scenario == Scenario::SpotCheck && self.input.is_none() {
            return bad("spot-check needs an input file".into());
        }
        Ok(())
    }
}
