use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rbc_cli::export::{run_export, ExportFlags};
use rbc_cli::{load_problem, plot, read_report, verify, write_json, CliError, Result};

#[derive(Parser)]
#[command(
    name = "rbc",
    version,
    about = "Verify and falsify ReLU neural barrier certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check all three barrier conditions and write a JSON report.
    Verify(VerifyArgs),
    /// Write SMT-LIB 2 queries for the barrier conditions.
    ExportSmt(ExportArgs),
    /// Draw a 2-D problem and its report as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "RBC_THREADS")]
    threads: Option<usize>,
    #[arg(long, env = "RBC_TOL_FEAS")]
    tol_feas: Option<f64>,
    #[arg(long, env = "RBC_TOL_MARGIN")]
    tol_margin: Option<f64>,
    #[arg(long, env = "RBC_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "RBC_MAX_REGIONS")]
    max_regions: Option<usize>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// One disjunctive query per condition instead of one file per region.
    #[arg(long)]
    monolithic: bool,
    /// Also export the initial and unsafe conditions.
    #[arg(long)]
    set_conditions: bool,
    /// Bound every variable by the problem's domain box.
    #[arg(long)]
    assert_domain: bool,
    /// External solver command; `{file}` is replaced by the query path.
    #[arg(long, env = "RBC_SOLVER_CMD")]
    solver_cmd: Option<String>,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 60)]
    solver_timeout: u64,
    #[arg(long, env = "RBC_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Verify(a) => {
            set_threads(a.threads)?;
            let mut problem = load_problem(&a.problem)?;
            let cfg = &mut problem.config;
            if let Some(v) = a.tol_feas {
                cfg.tol_feas = v;
            }
            if let Some(v) = a.tol_margin {
                cfg.tol_margin = v;
            }
            if let Some(v) = a.seed {
                cfg.seed = v;
            }
            if a.max_regions.is_some() {
                cfg.max_regions = a.max_regions;
            }
            let report = verify(&problem)?;
            write_json(&a.out, &report)?;
            print!("{}", report.summary());
            Ok(report.exit_code() as u8)
        }
        Command::ExportSmt(a) => {
            set_threads(a.threads)?;
            let problem = load_problem(&a.problem)?;
            let flags = ExportFlags {
                monolithic: a.monolithic,
                set_conditions: a.set_conditions,
                assert_domain: a.assert_domain,
                solver_cmd: a.solver_cmd,
                solver_timeout: Duration::from_secs(a.solver_timeout),
            };
            let manifest = run_export(&problem, &a.out_dir, &flags)?;
            println!(
                "wrote {} queries to {} (solver: {})",
                manifest.files.len(),
                a.out_dir.display(),
                manifest.bridge.status
            );
            Ok(0)
        }
        Command::Plot(a) => {
            let problem = load_problem(&a.problem)?;
            let report = read_report(&a.report)?;
            let svg = plot::render(&problem, &report)?;
            fs::write(&a.out, svg).map_err(|e| CliError::io(&a.out, e))?;
            println!("wrote {}", a.out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
