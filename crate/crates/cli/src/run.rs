//! `run` and `converge` pipelines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use frg_core::assembly::{Discretization, VelocityField};
use frg_core::metrics::{convergence_csv, convergence_table, mean_error_over_time, ConvergenceRow, ErrorEvaluator, ErrorReport};
use frg_core::mesh::{Mesh, MeshSpec};
use frg_core::reference::ReferenceSolution;
use frg_core::scheme::{SchemeKind, Semidiscretization};
use frg_core::time::{integrate, Trajectory};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::plot;
use crate::CliError;

/// RK4 substep (fraction of `1 / u_max`) for numerically traced exact
/// solutions in error evaluation.
pub const ERROR_TRACE_SUBSTEP: f64 = 2e-3;

#[derive(Debug, Clone)]
pub struct Simulation {
    pub disc: Discretization,
    pub trajectory: Trajectory,
    pub errors: Vec<ErrorReport>,
    pub u_max: f64,
    pub elapsed: f64,
}

impl Simulation {
    pub fn failure_text(&self) -> Option<String> {
        self.trajectory.failure.map(|f| f.to_string())
    }
}

pub fn build(cfg: &ExperimentConfig, scheme: SchemeKind, cells: usize) -> Result<Semidiscretization, CliError> {
    let prob = cfg.problem_def()?;
    let mesh = Mesh::new(MeshSpec::new(prob.dim, cells))?;
    let disc = Discretization::new(mesh, cfg.order, cfg.quadrature_points)?;
    let vel = VelocityField::new(&disc, prob.velocity, cfg.velocity)?;
    Ok(Semidiscretization::new(disc, vel, scheme, cfg.flux)?)
}

/// Integrates one scheme on one mesh and evaluates errors at every sample.
pub fn simulate(cfg: &ExperimentConfig, scheme: SchemeKind, cells: usize) -> Result<Simulation, CliError> {
    let prob = cfg.problem_def()?;
    let mut semi = build(cfg, scheme, cells)?;
    let disc = semi.disc().clone();
    let u_max = semi.velocity().u_max;
    let r0 = disc.interpolate(|x| prob.initial.eval(x));
    let start = Instant::now();
    let trajectory = integrate(&mut semi, &r0, &cfg.time_config())?;
    let elapsed = start.elapsed().as_secs_f64();
    let reference = ReferenceSolution::new(prob).with_substep(ERROR_TRACE_SUBSTEP);
    let mut eval = ErrorEvaluator::new(&disc, reference)?;
    let errors = eval.trajectory_errors(&trajectory);
    Ok(Simulation { disc, trajectory, errors, u_max, elapsed })
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,cell,node,coeff\n");
    for sample in &traj.samples {
        let nb = sample.state.n_basis;
        for (k, v) in sample.state.coeffs.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{:e}", sample.t, k / nb, k % nb, v);
        }
    }
    s
}

pub fn errors_csv(errors: &[ErrorReport]) -> String {
    let mut s = format!("{}\n", ErrorReport::CSV_HEADER);
    for e in errors {
        s.push_str(&e.csv_row());
        s.push('\n');
    }
    s
}

fn info_section(cfg: &ExperimentConfig, sim: &Simulation) -> String {
    let traj = &sim.trajectory;
    let mesh = sim.disc.mesh();
    let first = sim.errors.first().map(|e| e.mass).unwrap_or(f64::NAN);
    let last = sim.errors.last().map(|e| e.mass).unwrap_or(f64::NAN);
    let min = sim.errors.iter().map(|e| e.min_density).fold(f64::INFINITY, f64::min);
    let mut s = String::from("[info]\n");
    let _ = writeln!(s, "code_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "dim = {}", mesh.dim());
    let _ = writeln!(s, "h = {:?}", mesh.h());
    let _ = writeln!(s, "n_dofs = {}", sim.disc.n_dofs());
    let _ = writeln!(s, "dt_formula = cfl * h / u_max");
    let _ = writeln!(s, "u_max = {:?}", sim.u_max);
    let _ = writeln!(s, "dt = {:?}", traj.dt);
    let _ = writeln!(s, "quadrature = clenshaw_curtis {} points per axis", cfg.quadrature_points);
    let _ = writeln!(s, "error_rule = clenshaw_curtis {} points per axis", 2 * cfg.quadrature_points + 1);
    let _ = writeln!(s, "error_trace_substep = {ERROR_TRACE_SUBSTEP:?}");
    let limiter = if cfg.scheme == SchemeKind::DgPlus { cfg.limiter.to_string() } else { "inactive".into() };
    let _ = writeln!(s, "limiter_application = {limiter}");
    let _ = writeln!(s, "limiter_epsilon = {:e}", frg_core::scheme::LIMITER_EPS);
    let _ = writeln!(s, "initial_state = nodal interpolant");
    let _ = writeln!(s, "steps = {}", traj.steps);
    let _ = writeln!(s, "final_time = {:?}", traj.final_time);
    let _ = writeln!(s, "status = {}", if traj.completed() { "completed" } else { "positivity_lost" });
    if let Some(f) = traj.failure {
        let _ = writeln!(s, "failure_time = {:?}", f.t.unwrap_or(f64::NAN));
        let _ = writeln!(s, "failure_stage = {}", f.stage.unwrap_or(0));
        let _ = writeln!(s, "failure_cell = {}", f.cell);
        let _ = writeln!(s, "failure_node = {}", f.node);
        let _ = writeln!(s, "failure_value = {:e}", f.value);
    }
    let _ = writeln!(s, "limiter_activations = {}", traj.total_limiter_activations());
    let _ = writeln!(s, "min_density = {min:e}");
    let _ = writeln!(s, "relative_mass_drift = {:e}", (last - first) / first);
    let _ = writeln!(s, "wall_seconds = {:.3}", sim.elapsed);
    s
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub sim: Simulation,
    pub min_density: f64,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs one configuration and writes `trajectory.csv`, `errors.csv`,
/// `meta.txt` and `profile.svg` to the output directory. Loss of
/// positivity still writes every file, then returns an error.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let sim = simulate(cfg, cfg.scheme, cfg.cells)?;
    let dir = &cfg.output;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    write(&dir.join("trajectory.csv"), &trajectory_csv(&sim.trajectory))?;
    write(&dir.join("errors.csv"), &errors_csv(&sim.errors))?;
    write(&dir.join("meta.txt"), &format!("{}{}", cfg.to_text(), info_section(cfg, &sim)))?;
    let samples = &sim.trajectory.samples;
    let mut series = Vec::new();
    for s in [samples.first(), samples.last()].into_iter().flatten() {
        series.push((format!("{} t={}", cfg.scheme, s.t), plot::profile_points(&sim.disc, &s.state)));
    }
    if samples.len() == 1 {
        series.truncate(1);
    }
    write(&dir.join("profile.svg"), &plot::profile_svg(&cfg.name, series, false)?)?;
    let min_density = sim.errors.iter().map(|e| e.min_density).fold(f64::INFINITY, f64::min);
    if let Some(text) = sim.failure_text() {
        return Err(CliError::Positivity(text));
    }
    Ok(RunSummary { sim, min_density })
}

/// Runs every `(scheme, m)` pair of the sweep and writes `table.csv` and
/// `convergence.svg`. Failed runs are recorded in their row.
pub fn cmd_converge(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>, CliError> {
    cfg.validate()?;
    let mut cells = cfg.sweep_cells.clone();
    cells.sort_unstable();
    cells.dedup();
    let jobs: Vec<(SchemeKind, usize)> =
        cfg.sweep_schemes.iter().flat_map(|&s| cells.iter().map(move |&m| (s, m))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(scheme, m)| {
            let row = match simulate(cfg, scheme, m) {
                Ok(sim) => match sim.failure_text() {
                    None => (mean_error_over_time(&sim.errors).ok(), "ok".to_string()),
                    Some(t) => (None, t.replace(',', ";")),
                },
                Err(e) => (None, e.to_string().replace(',', ";")),
            };
            (scheme, m, row.0, row.1)
        })
        .collect();
    let rows = convergence_table(results);
    fs::create_dir_all(&cfg.output)?;
    let csv = convergence_csv(&rows);
    write(&cfg.output.join("table.csv"), &csv)?;
    let meta = format!("{}[info]\ncode_version = {}\nerror_trace_substep = {ERROR_TRACE_SUBSTEP:?}\n", cfg.to_text(), env!("CARGO_PKG_VERSION"));
    write(&cfg.output.join("meta.txt"), &meta)?;
    let table = plot::read_table(&csv)?;
    write(&cfg.output.join("convergence.svg"), &plot::convergence_svg(&table, "L2")?)?;
    Ok(rows)
}
