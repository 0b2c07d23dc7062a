//! `relax`: batch driver for relaxed variational problems.

mod config;
mod error;
mod experiment;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use relax_core::oracle::{example1_system, example2_system, shoot_example1, shoot_example2};

use config::{ExperimentConfig, Spacing};
use error::CliError;
use experiment::{prepare, run_1d, run_2d, to_json, write_artifacts};
use report::{OracleReport, Run2DReport, RunReport};

#[derive(Parser)]
#[command(
    name = "relax",
    version,
    about = "Minimize relaxed nonconvex energies and reconstruct their Young measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one experiment and write solution, diagnostics, measure and report files.
    Run {
        /// `example1` .. `example6`, or the path of a JSON config.
        target: String,
        #[arg(long)]
        dx: Option<String>,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Final energies over a list of spacings, as CSV.
    Sweep {
        target: String,
        /// Comma-separated spacings, e.g. `2^-5,2^-6`. Defaults to 2^-5 .. 2^-10.
        #[arg(long = "dx-list")]
        dx_list: Option<String>,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semi-analytic minimizer by shooting.
    Oracle {
        which: OracleName,
        /// Also write `oracle.json` and `trajectory.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// JSON schema of an emitted record.
    Schema { which: SchemaName },
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "K", alias = "k")]
    k: Option<usize>,
    #[arg(long)]
    gs_sweeps: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    splitting_a: Option<f64>,
    /// `zero`, `plus`, `minus`, or a CSV file with a `u` column.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleName {
    Example1,
    Example2,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaName {
    Report,
    Report2d,
    Oracle,
}

impl SolverFlags {
    fn apply(self, cfg: &mut ExperimentConfig) {
        macro_rules! over {
            ($($f:ident),*) => {$( if self.$f.is_some() { cfg.$f = self.$f; } )*};
        }
        over!(
            gamma,
            h,
            k,
            gs_sweeps,
            tol,
            max_outer,
            splitting_a,
            init,
            seed
        );
    }
}

/// Errors raised while building a problem are configuration errors.
fn as_config(e: CliError) -> CliError {
    match e {
        CliError::Solver(r) => CliError::config(r.to_string()),
        other => other,
    }
}

fn load(
    target: &str,
    dx: Option<String>,
    solver: SolverFlags,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(target)?;
    if let Some(dx) = dx {
        cfg.dx = Some(Spacing::Text(dx));
    }
    solver.apply(&mut cfg);
    Ok(cfg)
}

fn cmd_run(
    target: String,
    dx: Option<String>,
    solver: SolverFlags,
    out: PathBuf,
) -> Result<(), CliError> {
    let cfg = load(&target, dx, solver)?;
    let files = if cfg.name() == "example6" {
        run_2d(&cfg)?
    } else {
        let prepared = prepare(&cfg).map_err(as_config)?;
        run_1d(&prepared)?.1
    };
    write_artifacts(&out, &files)
}

fn cmd_sweep(
    target: String,
    dx_list: Option<String>,
    solver: SolverFlags,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let base = load(&target, None, solver)?;
    if base.name() == "example6" {
        return Err(CliError::config(
            "sweep runs one-dimensional experiments only",
        ));
    }
    let list: Vec<String> = match dx_list {
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect(),
        None => (5..=10).map(|p| format!("2^-{p}")).collect(),
    };
    let prepared = list
        .iter()
        .map(|dx| {
            let mut cfg = base.clone();
            cfg.dx = Some(Spacing::Text(dx.clone()));
            prepare(&cfg).map_err(as_config)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reports = prepared
        .par_iter()
        .map(|p| run_1d(p).map(|(r, _)| r))
        .collect::<Result<Vec<RunReport>, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record([
        "dx",
        "final_energy",
        "oracle_energy",
        "converged",
        "outer_iterations",
    ])
    .map_err(io)?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &reports {
        w.write_record([
            r.dx.to_string(),
            opt(r.final_energy),
            opt(r.oracle_energy),
            r.converged.to_string(),
            r.outer_iterations.to_string(),
        ])
        .map_err(io)?;
    }
    let table = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    match out {
        Some(path) => {
            let dir = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| ".".into());
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| CliError::config("--out needs a file name"))?;
            // leak is fine: one name per process
            let name: &'static str = Box::leak(name.to_string().into_boxed_str());
            write_artifacts(&dir, &vec![(name, table)])
        }
        None => Ok(std::io::stdout().write_all(&table)?),
    }
}

fn cmd_oracle(which: OracleName, out: Option<PathBuf>) -> Result<(), CliError> {
    let (name, res, sys) = match which {
        OracleName::Example1 => (
            "example1",
            shoot_example1::<f64>()?,
            example1_system::<f64>(),
        ),
        OracleName::Example2 => (
            "example2",
            shoot_example2::<f64>()?,
            example2_system::<f64>(),
        ),
    };
    let report = OracleReport {
        experiment: name.into(),
        x_star: res.x_star,
        energy: res.energy,
        hamiltonian_drift: res.hamiltonian_drift,
        hamiltonian_level: res.level,
    };
    let json = to_json(&report)?;
    if let Some(dir) = out {
        let mut traj = Vec::new();
        res.trajectory.write_csv(&sys, &mut traj)?;
        write_artifacts(
            &dir,
            &vec![("oracle.json", json.clone()), ("trajectory.csv", traj)],
        )?;
    }
    std::io::stdout().write_all(&json)?;
    Ok(())
}

fn cmd_schema(which: SchemaName) -> Result<(), CliError> {
    let schema = match which {
        SchemaName::Report => schemars::schema_for!(RunReport),
        SchemaName::Report2d => schemars::schema_for!(Run2DReport),
        SchemaName::Oracle => schemars::schema_for!(OracleReport),
    };
    std::io::stdout().write_all(&to_json(&schema)?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            target,
            dx,
            solver,
            out,
        } => cmd_run(target, dx, solver, out),
        Command::Sweep {
            target,
            dx_list,
            solver,
            out,
        } => cmd_sweep(target, dx_list, solver, out),
        Command::Oracle { which, out } => cmd_oracle(which, out),
        Command::Schema { which } => cmd_schema(which),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
