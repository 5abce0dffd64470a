use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use flatcs::lie::{Algebra, GroupElement};
use flatcs::scenario::{run, run_normalize, Command, Report, RunOptions, Scenario};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    /// Pointwise residuals of every applicable identity
    Verify,
    /// Chern-Simons functional of field A
    Cs,
    /// Degree of field u, with the gauge-change check when A is present
    Degree,
    /// Gradient pairing against a finite difference
    Grad,
    /// Search for a flat connection
    Flatten,
    /// The integral normalization of the inner product
    Normalize,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Verify => Command::Verify,
            Cmd::Cs => Command::Cs,
            Cmd::Degree => Command::Degree,
            Cmd::Grad => Command::Grad,
            Cmd::Flatten => Command::Flatten,
            Cmd::Normalize => Command::Normalize,
        }
    }
}

/// Chern-Simons computations on flat tori. Exits 0 iff every check passes.
#[derive(Debug, Parser)]
#[command(name = "flatcs", version)]
struct Cli {
    command: Cmd,
    /// Scenario file (JSON envelope with expression fields)
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Quadrature grid, overriding the scenario
    #[arg(long)]
    grid: Option<usize>,
    /// Write the report here instead of standard output
    #[arg(long)]
    json: Option<PathBuf>,
    /// Tolerance for every check
    #[arg(long)]
    tol: Option<f64>,
    /// Cross-check the degree by counting preimages
    #[arg(long)]
    oracle: bool,
    /// Regular value for the oracle as w,x,y,z
    #[arg(long, value_name = "W,X,Y,Z")]
    regular_value: Option<String>,
    /// Write the optimizer log of `flatten` as CSV
    #[arg(long)]
    log: Option<PathBuf>,
    /// Fourier bandwidth of `flatten`
    #[arg(long)]
    bandwidth: Option<usize>,
}

fn regular_value(text: &str) -> anyhow::Result<GroupElement> {
    let coords = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .context("--regular-value expects four comma-separated numbers")?;
    if coords.len() != 4 {
        bail!("--regular-value expects four comma-separated numbers, got {}", coords.len());
    }
    Ok(GroupElement::from_coords(Algebra::su2(), &coords)?)
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("FLATCS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("FLATCS_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<Report> {
    configure_threads()?;
    let opts = RunOptions {
        grid: cli.grid,
        tol: cli.tol,
        oracle: cli.oracle,
        regular_value: cli.regular_value.as_deref().map(regular_value).transpose()?,
        bandwidth: cli.bandwidth,
    };
    let command = Command::from(cli.command);
    let Some(path) = &cli.scenario else {
        if matches!(command, Command::Normalize) {
            return Ok(run_normalize(&opts));
        }
        bail!("{command} needs --scenario");
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario = Scenario::parse(&text).with_context(|| format!("in {}", path.display()))?;
    let report = run(command, &scenario, &opts)?;
    if let (Some(log), Some(outcome)) = (&cli.log, &report.finder) {
        let file = fs::File::create(log).with_context(|| format!("creating {}", log.display()))?;
        outcome.write_csv(file)?;
    }
    Ok(report)
}

fn summary(report: &Report) -> String {
    let mut out = String::new();
    for r in &report.records {
        let status = if r.pass { "PASS" } else { "FAIL" };
        out += &format!("{status} {}", r.name);
        if let Some(v) = r.value {
            out += &format!(" value={v:.12e}");
        }
        if let (Some(res), Some(tol)) = (r.residual, r.tolerance) {
            out += &format!(" residual={res:.3e} tol={tol:.0e}");
        }
        if let Some(n) = &r.note {
            out += &format!(" ({n})");
        }
        out.push('\n');
    }
    for w in &report.warnings {
        out += &format!("warning: {w}\n");
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let json = report.to_json();
    match &cli.json {
        Some(path) => {
            if let Err(e) = fs::write(path, &json) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
            print!("{}", summary(&report));
        }
        None => {
            print!("{json}");
            eprint!("{}", summary(&report));
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
