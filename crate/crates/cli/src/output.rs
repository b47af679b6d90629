//! JSON-lines records and CSV summary tables.
//!
//! A JSON-lines file starts with a header carrying the resolved
//! configuration and ends with a summary; records in between are in
//! canonical (cell, row) order. Floats use the shortest round-trip form, so
//! equal runs give byte-identical files. Non-finite floats become `null`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::error::Result;

#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Float cell for CSV output.
pub fn num(x: f64) -> String {
    x.to_string()
}

/// Matrix as nested rows.
pub fn matrix_rows(a: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn header_record(cfg: &ScenarioConfig) -> Value {
    json!({
        "kind": "header",
        "scenario": cfg.scenario.name(),
        "crate_version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    })
}

/// Writes `<out>/<scenario>.jsonl` and one `<out>/<scenario>-<table>.csv` per
/// table; returns the written paths.
pub fn write_outputs(
    cfg: &ScenarioConfig,
    records: &[Value],
    summary: &Value,
    tables: &[Table],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out)?;
    let name = cfg.scenario.name();
    let jsonl = cfg.out.join(format!("{name}.jsonl"));
    let mut f = std::io::BufWriter::new(fs::File::create(&jsonl)?);
    writeln!(f, "{}", serde_json::to_string(&header_record(cfg))?)?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    writeln!(f, "{}", serde_json::to_string(summary)?)?;
    f.flush()?;
    let mut paths = vec![jsonl];
    for t in tables {
        let p = cfg.out.join(format!("{name}-{}.csv", t.name));
        t.write(&p)?;
        paths.push(p);
    }
    Ok(paths)
}
