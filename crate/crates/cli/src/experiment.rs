//! Turning a config into a solved problem and its artifact files.

use std::path::Path;
use std::time::Instant;

use relax_core::envelope::{build_envelope, SampledFunction, DEFAULT_SAMPLES};
use relax_core::measure::{oscillation_report, MeasureModel};
use relax_core::oracle::{shoot_example1, shoot_example2};
use relax_core::problems::{self, Branch, Example, Setup1D, DEFAULT_SEED};
use relax_core::solver1d::{
    constraint_error, solve, BoundaryCondition, Grid1D, GridFunction1D, PotentialForm, PotentialV,
    Problem1D, SolverConfig,
};
use relax_core::solver2d::{bump_initial, solve_2d, Config2D, Field2D, Grid2D};

use crate::config::{BcSpec, ExperimentConfig, Init, Target, VSpec, WSpec};
use crate::error::CliError;
use crate::report::{
    finite, BcRecord, IntervalRecord, Run2DReport, RunReport, Solver2DRecord, SolverRecord,
};

/// Named output files, fully rendered before anything touches the disk.
pub type Artifacts = Vec<(&'static str, Vec<u8>)>;

/// A configured one-dimensional problem.
pub struct Prepared {
    pub name: String,
    pub setup: Setup1D<f64>,
    pub init: String,
    pub oracle_energy: Option<f64>,
}

fn init_of(cfg: &ExperimentConfig, default: &str) -> Init {
    Init::parse(cfg.init.as_deref().unwrap_or(default))
}

fn init_label(init: &Init) -> String {
    match init {
        Init::Zero => "zero".into(),
        Init::Plus => "plus".into(),
        Init::Minus => "minus".into(),
        Init::File(p) => p.display().to_string(),
    }
}

/// Reads the `u` column of a CSV file with a header row.
fn read_u_column(path: &Path, expected: usize) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::config(format!("init file {}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let col = rdr
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .position(|h| h.trim() == "u")
        .ok_or_else(|| bad("no `u` column".into()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = rec.get(col).unwrap_or("").trim();
        out.push(
            field
                .parse::<f64>()
                .map_err(|_| bad(format!("bad value `{field}`")))?,
        );
    }
    if out.len() != expected {
        return Err(bad(format!(
            "{} values, grid has {expected} nodes",
            out.len()
        )));
    }
    Ok(out)
}

fn bc_of(spec: BcSpec) -> BoundaryCondition<f64> {
    match spec {
        BcSpec::Dirichlet { left, right } => BoundaryCondition::Dirichlet { left, right },
        BcSpec::Natural => BoundaryCondition::Natural,
    }
}

fn builtin_w(name: &str) -> Result<fn(f64) -> f64, CliError> {
    match name {
        "double_well" => Ok(problems::double_well),
        "one_sided_well" => Ok(problems::one_sided_well),
        "triple_well" => Ok(problems::triple_well),
        other => Err(CliError::config(format!(
            "unknown integrand `{other}` (double_well, one_sided_well, triple_well)"
        ))),
    }
}

fn target_fn(t: &Target) -> Result<Box<dyn Fn(f64) -> f64>, CliError> {
    match t {
        Target::Constant(c) => {
            let c = *c;
            Ok(Box::new(move |_| c))
        }
        Target::Named(n) => match n.as_str() {
            "tracking_target" => Ok(Box::new(problems::tracking_target)),
            "random_well_target" => Ok(Box::new(problems::random_well_target)),
            other => Err(CliError::config(format!(
                "unknown target `{other}` (tracking_target, random_well_target)"
            ))),
        },
        Target::Table { x, y } => {
            // reuse the sampled-function checks: sorted, finite, equal lengths
            let table = SampledFunction::new(x.clone(), y.clone())
                .map_err(|e| CliError::config(format!("g table: {e}")))?;
            Ok(Box::new(move |t| {
                let (lo, hi) = table.domain();
                table.interpolate(t.clamp(lo, hi)).unwrap_or(f64::NAN)
            }))
        }
    }
}

fn custom_setup(cfg: &ExperimentConfig, dx: f64) -> Result<Setup1D<f64>, CliError> {
    let need = |what: &str| CliError::config(format!("custom experiment needs `{what}`"));
    let [a, b] = cfg.domain.ok_or_else(|| need("domain"))?;
    let grid = Grid1D::with_spacing(a, b, dx)?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let (samples, used_seed) = match cfg.w.as_ref().ok_or_else(|| need("w"))? {
        WSpec::Builtin {
            name,
            range,
            samples,
        } => (
            SampledFunction::tabulate(
                builtin_w(name)?,
                range[0],
                range[1],
                samples.unwrap_or(DEFAULT_SAMPLES),
            )?,
            None,
        ),
        WSpec::Tabulated { nodes, values } => {
            (SampledFunction::new(nodes.clone(), values.clone())?, None)
        }
        WSpec::Random { range } => (
            problems::random_samples(seed, range[0], range[1])?,
            Some(seed),
        ),
    };
    let a_split = cfg.splitting_a.unwrap_or(4.0);
    let potential = match cfg.v.as_ref().ok_or_else(|| need("v"))? {
        VSpec::Zero => PotentialV::zero(&grid),
        VSpec::QuadraticTracking { g } => PotentialV::quadratic_tracking(&grid, target_fn(g)?)?,
        VSpec::DoubleWell => PotentialV::double_well(&grid, a_split)?,
        VSpec::TrackingWell { g } => PotentialV::tracking_well(&grid, target_fn(g)?, a_split)?,
    };
    let bc = bc_of(cfg.bc.ok_or_else(|| need("bc"))?);
    let envelope = build_envelope(&samples)?;
    Ok(Setup1D {
        example: None,
        config: SolverConfig::for_spacing(dx, bc),
        problem: Problem1D::new(envelope, potential),
        grid,
        samples,
        seed: used_seed,
    })
}

/// Builds the problem described by `cfg`, applying every override.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let name = cfg.name().to_string();
    let named = Example::from_name(&name);
    let dx = match &cfg.dx {
        Some(s) => s.value()?,
        None => named.map_or(2f64.powi(-7), |e| e.default_dx()),
    };
    let has_branches = matches!(
        named,
        Some(Example::DoubleWell | Example::TripleWell | Example::RandomWell)
    );
    let init = init_of(cfg, if has_branches { "plus" } else { "zero" });
    let mut setup = match named {
        Some(ex) => {
            if cfg.domain.is_some() || cfg.w.is_some() || cfg.v.is_some() {
                return Err(CliError::config(format!(
                    "`domain`, `w` and `v` only apply to custom experiments, not {name}"
                )));
            }
            let branch = if init == Init::Minus {
                Branch::Minus
            } else {
                Branch::Plus
            };
            problems::setup(ex, dx, branch, cfg.seed)?
        }
        None => custom_setup(cfg, dx)?,
    };
    let grid = setup.grid;
    let c = &mut setup.config;
    if let Some(g) = cfg.gamma {
        c.gamma = g;
    }
    if let Some(h) = cfg.h {
        c.h = h;
    }
    if let Some(k) = cfg.k {
        c.k_inner = k;
    }
    if let Some(s) = cfg.gs_sweeps {
        c.gs_sweeps = s;
    }
    if let Some(t) = cfg.tol {
        c.tol = t;
    }
    if let Some(m) = cfg.max_outer {
        c.max_outer = m;
    }
    if c.max_outer == 0 {
        return Err(CliError::config("max_outer must be at least 1"));
    }
    let bc_overridden = named.is_some() && cfg.bc.is_some();
    if let (Some(bc), Some(_)) = (cfg.bc, named) {
        c.bc = bc_of(bc);
    }
    c.validate()?;
    if let (Some(a), Some(_)) = (cfg.splitting_a, named) {
        let v = &setup.problem.potential;
        if !matches!(
            v.form(),
            PotentialForm::DoubleWell | PotentialForm::TrackingWell
        ) {
            return Err(CliError::config(format!(
                "{name} has a convex potential; splitting_a does not apply"
            )));
        }
        setup.problem.potential = v.with_splitting(a)?;
    }
    match &init {
        Init::Zero => setup.problem.initial = None,
        Init::Plus | Init::Minus if !has_branches => {
            let s = if init == Init::Plus { 1.0 } else { -1.0 };
            setup.problem.initial = Some(GridFunction1D::from_fn_nodes(&grid, |_| s)?);
        }
        Init::Plus | Init::Minus => {}
        Init::File(p) => {
            let u = read_u_column(p, grid.n_nodes())?;
            setup.problem.initial = Some(GridFunction1D::nodes(&grid, u)?);
        }
    }
    let oracle_energy = match (named, bc_overridden) {
        (Some(Example::OneSidedWell), false) => Some(shoot_example1::<f64>()?.energy),
        (Some(Example::DoubleWell), false) => Some(shoot_example2::<f64>()?.energy),
        _ => None,
    };
    Ok(Prepared {
        name,
        setup,
        init: init_label(&init),
        oracle_energy,
    })
}

fn bc_record(bc: &BoundaryCondition<f64>) -> BcRecord {
    match *bc {
        BoundaryCondition::Dirichlet { left, right } => BcRecord::Dirichlet { left, right },
        BoundaryCondition::Natural => BcRecord::Natural,
    }
}

/// Solves a prepared problem; returns the report and the rendered files.
pub fn run_1d(p: &Prepared) -> Result<(RunReport, Artifacts), CliError> {
    let s = &p.setup;
    let t = Instant::now();
    let rep = solve(&s.problem, &s.config, &s.grid)?;
    eprintln!(
        "{}: dx={} {} outer iterations in {:.2} s",
        p.name,
        s.grid.dx(),
        rep.outer_iterations,
        t.elapsed().as_secs_f64()
    );
    let model = MeasureModel::new(s.problem.envelope.clone(), s.samples.clone());
    let field = model.measure_field(&rep, &s.grid)?;
    let osc = oscillation_report(&field);
    let v = &s.problem.potential;
    let report = RunReport {
        experiment: p.name.clone(),
        dx: s.grid.dx(),
        n_cells: s.grid.n_cells(),
        final_energy: finite(rep.final_energy),
        oracle_energy: p.oracle_energy,
        converged: rep.converged,
        outer_iterations: rep.outer_iterations,
        final_constraint_error: finite(constraint_error(
            rep.u.values(),
            rep.d.values(),
            s.grid.dx(),
        )),
        oscillation_intervals: osc.intervals.iter().map(IntervalRecord::from).collect(),
        seed: s.seed,
        config: SolverRecord {
            gamma: s.config.gamma,
            h: s.config.h,
            k: s.config.k_inner,
            gs_sweeps: s.config.gs_sweeps,
            tol: s.config.tol,
            max_outer: s.config.max_outer,
            splitting_a: matches!(
                v.form(),
                PotentialForm::DoubleWell | PotentialForm::TrackingWell
            )
            .then(|| v.splitting()),
            bc: bc_record(&s.config.bc),
            init: p.init.clone(),
        },
    };
    let mut solution = Vec::new();
    rep.write_solution_csv(&s.grid, &mut solution)?;
    let mut diagnostics = Vec::new();
    rep.write_diagnostics_csv(&mut diagnostics)?;
    let mut measure = Vec::new();
    field.write_json(&mut measure)?;
    let report_json = to_json(&report)?;
    Ok((
        report,
        vec![
            ("solution.csv", solution),
            ("diagnostics.csv", diagnostics),
            ("measure.json", measure),
            ("report.json", report_json),
        ],
    ))
}

/// The two-dimensional experiment.
pub fn run_2d(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    if cfg.domain.is_some()
        || cfg.w.is_some()
        || cfg.v.is_some()
        || cfg.bc.is_some()
        || cfg.seed.is_some()
    {
        return Err(CliError::config(
            "example6 is fixed on [-1,1]² with u = xy on the boundary; only solver settings can be changed",
        ));
    }
    let delta = match &cfg.dx {
        Some(s) => s.value()?,
        None => 0.04,
    };
    let grid = Grid2D::with_spacing(delta)?;
    let mut c = Config2D::<f64>::default();
    if let Some(g) = cfg.gamma {
        c.gamma = g;
    }
    if let Some(h) = cfg.h {
        c.h = h;
    }
    if let Some(k) = cfg.k {
        c.k_inner = k;
    }
    if let Some(s) = cfg.gs_sweeps {
        c.sweeps = s;
    }
    if let Some(t) = cfg.tol {
        c.tol = t;
    }
    if let Some(m) = cfg.max_outer {
        c.max_iter = m;
    }
    if let Some(a) = cfg.splitting_a {
        c.a = a;
    }
    if c.max_iter == 0 {
        return Err(CliError::config("max_outer must be at least 1"));
    }
    c.validate()?;
    let init = init_of(cfg, "plus");
    let u0 = match &init {
        Init::Zero => Field2D::from_fn(&grid, |_, _| 0.0),
        Init::Plus => bump_initial(&grid, 1.0, 0.1),
        Init::Minus => bump_initial(&grid, -1.0, 0.1),
        Init::File(p) => Field2D {
            values: read_u_column(p, (grid.n() + 1).pow(2))?,
        },
    };
    let t = Instant::now();
    let rep = solve_2d(&grid, &u0, &c)?;
    eprintln!(
        "example6: delta={} {} iterations in {:.2} s",
        grid.delta::<f64>(),
        rep.iterations,
        t.elapsed().as_secs_f64()
    );
    let report = Run2DReport {
        experiment: "example6".into(),
        delta: grid.delta(),
        n: grid.n(),
        final_energy: finite(rep.final_energy),
        converged: rep.converged,
        iterations: rep.iterations,
        final_constraint_error: rep.constraint_history.last().copied().and_then(finite),
        config: Solver2DRecord {
            gamma: c.gamma,
            h: c.h,
            k: c.k_inner,
            gs_sweeps: c.sweeps,
            tol: c.tol,
            max_outer: c.max_iter,
            splitting_a: c.a,
            init: init_label(&init),
        },
    };
    let mut field = Vec::new();
    rep.u.write_csv(&grid, &mut field)?;
    let mut grid_json = Vec::new();
    rep.u.write_grid_json(&grid, &mut grid_json)?;
    let mut diag = csv::Writer::from_writer(Vec::new());
    diag.write_record(["n", "energy", "constraint_error"])
        .map_err(csv_err)?;
    for (k, (e, r)) in rep
        .energy_history
        .iter()
        .zip(&rep.constraint_history)
        .enumerate()
    {
        diag.write_record([(k + 1).to_string(), e.to_string(), r.to_string()])
            .map_err(csv_err)?;
    }
    let diagnostics = diag.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(vec![
        ("field.csv", field),
        ("grid.json", grid_json),
        ("diagnostics.csv", diagnostics),
        ("report.json", to_json(&report)?),
    ])
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn to_json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes every artifact under `dir`. Files go to temporary names first and
/// are renamed once all of them are on disk.
pub fn write_artifacts(dir: &Path, files: &Artifacts) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let tmp: Vec<_> = files
        .iter()
        .map(|(name, _)| dir.join(format!(".{name}.partial")))
        .collect();
    let result = (|| {
        for ((_, bytes), path) in files.iter().zip(&tmp) {
            std::fs::write(path, bytes)?;
        }
        for ((name, _), path) in files.iter().zip(&tmp) {
            std::fs::rename(path, dir.join(name))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for path in &tmp {
            let _ = std::fs::remove_file(path);
        }
    }
    result
}
