use std::path::PathBuf;
use std::process::ExitCode;

use bary_cli::config::Overrides;
use bary_cli::error::exit;
use bary_cli::{run, Scenario, ScenarioConfig};
use clap::Parser;

/// Seeded experiments on barycentric straightening in SL(m, R) / SO(m).
#[derive(Parser, Debug)]
#[command(name = "bary", version)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,
    /// TOML file; command line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Simplex degrees, comma separated.
    #[arg(long, value_delimiter = ',')]
    degree: Option<Vec<usize>>,
    /// Boundary atoms per vertex measure.
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Interior points per simplex.
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Rows to recheck, for spot-check.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let over = Overrides {
        m: cli.m,
        degree: cli.degree,
        atoms: cli.atoms,
        seed: cli.seed,
        grid: cli.grid,
        workers: cli.workers,
        out: cli.out,
        input: cli.input,
    };
    let outcome = ScenarioConfig::resolve(cli.scenario, cli.config.as_deref(), &over).and_then(|cfg| {
        let report = run(&cfg)?;
        let files = report.write()?;
        Ok((report, files))
    });
    match outcome {
        Ok((report, files)) => {
            for c in &report.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                let tag = if c.gating { "" } else { " (trend)" };
                println!("{verdict} {}{tag}: {}", c.name, c.detail);
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(if report.passed() { exit::SUCCESS } else { exit::CHECK_FAILED })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
