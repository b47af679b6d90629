use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::output::{write_outputs, Table};

pub mod busemann;
pub mod combinatorics;
pub mod lemmas;
pub mod spot_check;
pub mod sweep;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Gating checks decide the exit status; the others only report.
    pub gating: bool,
    pub detail: String,
}

impl Check {
    pub fn gating(name: &str, pass: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            pass,
            gating: true,
            detail,
        }
    }

    pub fn trend(name: &str, pass: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            pass,
            gating: false,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub config: ScenarioConfig,
    pub records: Vec<Value>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Scenario-specific summary fields.
    pub extra: Value,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary(&self) -> Value {
        json!({
            "kind": "summary",
            "scenario": self.config.scenario.name(),
            "passed": self.passed(),
            "checks": self.checks,
            "details": self.extra,
        })
    }

    pub fn write(&self) -> Result<Vec<PathBuf>> {
        write_outputs(&self.config, &self.records, &self.summary(), &self.tables)
    }
}

/// Runs a scenario on a pool of `cfg.workers` threads without writing
/// anything.
pub fn run(cfg: &ScenarioConfig) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(|| match cfg.scenario {
        Scenario::JacobianSweep => sweep::jacobian_sweep(cfg),
        Scenario::SplitrankBlowup => sweep::splitrank_blowup(cfg),
        Scenario::CombinatoricsVerify => combinatorics::verify(cfg),
        Scenario::LemmaSuite => lemmas::suite(cfg),
        Scenario::BusemannValidate => busemann::validate(cfg),
        Scenario::SpotCheck => spot_check::spot_check(cfg),
    })
}
