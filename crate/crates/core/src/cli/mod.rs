//! Batch front end: TOML experiment configs in, CSV/JSON report rows out.

mod config;
mod report;
mod run;
mod validate;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    Analysis, Expect, ExperimentConfig, Format, FunctionalConfig, KernelConfig, Levels, ModelConfig, Models,
    Output,
};
pub use report::{write_csv, write_json, Row, CSV_HEADER};
pub use run::{asymmetry, run_all, Check, Context, Outcome};
pub use validate::{has_errors, validate_text, Diagnostic, Severity};

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PXE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "pxe", version, about = "Product sublinear expectations on dyadic lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct OutputArgs {
    /// Report file; defaults to the config's output path, then to
    /// `$PXE_OUT_DIR/<config stem>.<ext>`, then to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every analysis of a config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
        /// Run independent analyses on this many threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Resource guard: levels above this are not computed.
        #[arg(long)]
        max_level: Option<u32>,
    },
    /// Static checks and cost estimate, no computation.
    Validate { config: PathBuf },
    /// Search for a family where independence holds in one direction only.
    DemoAsymmetry {
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = 4)]
        weight_denominator: u32,
        #[arg(long, default_value_t = 0.05)]
        min_gap: f64,
    },
    /// Solve the G-heat equation for a config's functional.
    Pde {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
        /// Also write the terminal solution grid as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

/// Destination files for a report; `None` means standard output.
fn destinations(args: &OutputArgs, config: Option<(&Path, &Output)>) -> (Format, Option<PathBuf>) {
    let format = args.format.or(config.map(|(_, o)| o.format)).unwrap_or_default();
    let ext = if format == Format::Json { "json" } else { "csv" };
    let path = args.out.clone().or_else(|| config.and_then(|(_, o)| o.path.clone())).or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV)?;
        let stem = config
            .and_then(|(p, _)| p.file_stem())
            .map_or("report".into(), |s| s.to_string_lossy().into_owned());
        Some(PathBuf::from(dir).join(format!("{stem}.{ext}")))
    });
    (format, path)
}

pub fn emit(rows: &[Row], format: Format, path: Option<&Path>) -> Result<()> {
    match path {
        None => {
            let stdout = std::io::stdout().lock();
            match format {
                Format::Json => write_json(rows, stdout),
                Format::Csv => write_csv(rows, stdout),
                Format::Both => {
                    write_csv(rows, std::io::stdout().lock())?;
                    write_json(rows, std::io::stdout().lock())
                }
            }
        }
        Some(p) => match format {
            Format::Json => report::write_file(rows, p, true),
            Format::Csv => report::write_file(rows, p, false),
            Format::Both => {
                report::write_file(rows, &p.with_extension("csv"), false)?;
                report::write_file(rows, &p.with_extension("json"), true)
            }
        },
    }
}

fn load(path: &Path, max_level: Option<u32>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let diags = validate_text(&text);
    for d in diags.iter().filter(|d| d.severity != Severity::Note) {
        eprintln!("{d}");
    }
    if has_errors(&diags) {
        return Err(Error::Config(format!("{} is invalid", path.display())));
    }
    let mut config = ExperimentConfig::from_toml(&text)?;
    if let Some(n) = max_level {
        config.numerics.max_level = n;
    }
    Ok(config)
}

/// Runs a config and writes its report. Returns whether every analysis
/// completed and every check passed.
pub fn run_config(path: &Path, output: &OutputArgs, jobs: usize, max_level: Option<u32>) -> Result<bool> {
    let config = load(path, max_level)?;
    let (format, dest) = destinations(output, Some((path, &config.output)));
    let ctx = Context::new(config)?;
    let outcomes = run_all(&ctx, jobs);
    let mut ok = true;
    for (a, o) in ctx.config.analyses.iter().zip(&outcomes) {
        if let Some(e) = &o.error {
            eprintln!("{}: error: {e}", a.name());
        }
        for c in o.checks.iter().filter(|c| !c.passed) {
            eprintln!(
                "{}: check {} failed: observed {:e}, tolerance {:e}",
                a.name(),
                c.name,
                c.observed,
                c.tolerance
            );
        }
        ok &= o.ok();
    }
    let rows: Vec<Row> = outcomes.into_iter().flat_map(|o| o.rows).collect();
    if let Some(r) = rows.iter().find(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!("report row '{}'", r.analysis)));
    }
    emit(&rows, format, dest.as_deref())?;
    Ok(ok)
}

fn pde(path: &Path, output: &OutputArgs, dump: Option<&Path>) -> Result<bool> {
    let config = load(path, None)?;
    let (format, dest) = destinations(output, Some((path, &config.output)));
    let ctx = Context::new(config)?;
    let sol = ctx.solve_pde()?;
    if let Some(p) = dump {
        sol.write_csv(p)?;
    }
    let mut row = Row::new("pde", None, sol.origin)
        .aux(Some(sol.cfl_ratio), Some(if sol.max_principle_ok { 1.0 } else { 0.0 }));
    row.err_est = sol.boundary_influence;
    row.fingerprint = crate::limit::numerics_fingerprint(&ctx.config.numerics);
    emit(&[row], format, dest.as_deref())?;
    Ok(sol.max_principle_ok)
}

fn demo(output: &OutputArgs, weight_denominator: u32, min_gap: f64) -> Result<bool> {
    let mut out = Outcome::default();
    asymmetry(weight_denominator, min_gap, &mut out)?;
    let checks: Vec<Row> = out
        .checks
        .iter()
        .map(|c| {
            Row::new(format!("check:{}", c.name), None, c.observed)
                .err(c.tolerance)
                .aux(c.target, Some(if c.passed { 1.0 } else { 0.0 }))
        })
        .collect();
    let rows: Vec<Row> = out.rows.iter().cloned().chain(checks).collect();
    let (format, dest) = destinations(output, None);
    emit(&rows, format, dest.as_deref())?;
    Ok(out.ok())
}

/// Entry point of the `pxe` binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { config, output, jobs, max_level } => run_config(&config, &output, jobs, max_level),
        Command::Validate { config } => match std::fs::read_to_string(&config) {
            Ok(text) => {
                let diags = validate_text(&text);
                for d in &diags {
                    println!("{d}");
                }
                let ok = !has_errors(&diags);
                if ok {
                    println!("ok");
                }
                Ok(ok)
            }
            Err(e) => Err(e.into()),
        },
        Command::DemoAsymmetry { output, weight_denominator, min_gap } => {
            demo(&output, weight_denominator, min_gap)
        }
        Command::Pde { config, output, dump } => pde(&config, &output, dump.as_deref()),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
