//! Experiment configuration: a line-oriented `key = value` file with
//! `[section]` headers.
//!
//! ```text
//! [experiment]
//! name = ex1
//! problem = mild_compression
//! [discretization]
//! scheme = dfrg
//! flux = upwind
//! order = 1
//! cells = 256
//! quadrature_points = 5
//! velocity = nodal
//! [time]
//! cfl = 0.1875
//! t_final = 3
//! dt_sample = 0.01
//! limiter = per_stage
//! [convergence]
//! cells = 32, 64, 128, 256
//! schemes = dg, dg_plus, dfrg
//! [output]
//! dir = out/ex1
//! ```
//!
//! Any other section (such as `[info]` in `meta.txt`) is ignored, so a
//! metadata file can be fed back as a configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use frg_core::assembly::{FluxKind, VelocityMode};
use frg_core::basis::default_quadrature_points;
use frg_core::problems::{experiment, problem, ExperimentPreset, Problem};
use frg_core::scheme::SchemeKind;
use frg_core::time::{LimiterMode, TimeConfig};
use ini::Ini;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: String,
    pub scheme: SchemeKind,
    pub flux: FluxKind,
    pub order: usize,
    pub cells: usize,
    pub quadrature_points: usize,
    pub velocity: VelocityMode,
    pub cfl: f64,
    pub t_final: f64,
    pub dt_sample: f64,
    pub limiter: LimiterMode,
    pub sweep_cells: Vec<usize>,
    pub sweep_schemes: Vec<SchemeKind>,
    pub output: PathBuf,
}

pub fn flux_name(f: FluxKind) -> String {
    match f {
        FluxKind::Upwind => "upwind".into(),
        FluxKind::LaxFriedrichs { alpha: None } => "lax_friedrichs".into(),
        FluxKind::LaxFriedrichs { alpha: Some(a) } => format!("lax_friedrichs:{a}"),
        FluxKind::Kinetic => "kinetic".into(),
    }
}

pub fn parse_flux(s: &str) -> Result<FluxKind, CliError> {
    match s {
        "upwind" => Ok(FluxKind::Upwind),
        "kinetic" => Ok(FluxKind::Kinetic),
        "lax_friedrichs" => Ok(FluxKind::LaxFriedrichs { alpha: None }),
        other => match other.strip_prefix("lax_friedrichs:") {
            Some(a) => {
                let alpha: f64 = parse(a, "flux")?;
                Ok(FluxKind::LaxFriedrichs { alpha: Some(alpha) })
            }
            None => Err(CliError::Config(format!("unknown flux '{other}'"))),
        },
    }
}

fn velocity_name(v: VelocityMode) -> &'static str {
    match v {
        VelocityMode::Nodal => "nodal",
        VelocityMode::Analytic => "analytic",
    }
}

fn parse_velocity(s: &str) -> Result<VelocityMode, CliError> {
    match s {
        "nodal" => Ok(VelocityMode::Nodal),
        "analytic" => Ok(VelocityMode::Analytic),
        other => Err(CliError::Config(format!("unknown velocity mode '{other}'"))),
    }
}

fn parse<T: std::str::FromStr>(s: &str, key: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| CliError::Config(format!("invalid value '{s}' for {key}")))
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>, CliError> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| parse(p, key)).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Configuration reproducing a registered experiment with one scheme.
    pub fn from_preset(preset: &ExperimentPreset, scheme: SchemeKind) -> Self {
        Self {
            name: preset.id.to_string(),
            problem: preset.problem.to_string(),
            scheme,
            flux: FluxKind::Upwind,
            order: preset.order,
            cells: preset.cells_per_axis,
            quadrature_points: preset.quadrature_points.unwrap_or_else(|| default_quadrature_points(preset.order)),
            velocity: VelocityMode::Nodal,
            cfl: preset.cfl,
            t_final: preset.t_final,
            dt_sample: preset.dt_sample,
            limiter: LimiterMode::PerStage,
            sweep_cells: vec![32, 64, 128, 256],
            sweep_schemes: SchemeKind::ALL.to_vec(),
            output: PathBuf::from("out").join(preset.id),
        }
    }

    pub fn preset(id: &str, scheme: SchemeKind) -> Result<Self, CliError> {
        Ok(Self::from_preset(&experiment(id)?, scheme))
    }

    pub fn problem_def(&self) -> Result<Problem, CliError> {
        Ok(problem(&self.problem)?)
    }

    pub fn time_config(&self) -> TimeConfig {
        TimeConfig { cfl: self.cfl, t_final: self.t_final, dt_sample: self.dt_sample, limiter: self.limiter }
    }

    /// Checks the configuration against the registry and scheme rules.
    pub fn validate(&self) -> Result<(), CliError> {
        self.problem_def()?;
        for s in std::iter::once(&self.scheme).chain(&self.sweep_schemes) {
            s.check_flux(self.flux)?;
        }
        if self.cells == 0 || self.sweep_cells.contains(&0) {
            return Err(CliError::Config("cell counts must be positive".into()));
        }
        if self.quadrature_points < 2 {
            return Err(CliError::Config("quadrature_points must be at least 2".into()));
        }
        if self.quadrature_points < self.order + 1 {
            return Err(CliError::Config(format!(
                "quadrature_points = {} cannot resolve order {}",
                self.quadrature_points, self.order
            )));
        }
        if self.sweep_schemes.is_empty() {
            return Err(CliError::Config("convergence schemes must not be empty".into()));
        }
        self.time_config().validate()?;
        Ok(())
    }

    /// Parses a configuration file. Keys that are absent fall back to the
    /// preset named by `experiment.name`, or to `ex1` when none is given.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let name = ini.get_from(Some("experiment"), "name").unwrap_or("ex1").to_string();
        let mut cfg = match experiment(&name) {
            Ok(p) => Self::from_preset(&p, SchemeKind::Dfrg),
            Err(_) => {
                let mut c = Self::preset("ex1", SchemeKind::Dfrg)?;
                c.name = name.clone();
                c.output = PathBuf::from("out").join(&name);
                c
            }
        };
        let mut explicit_nq = false;
        let mut explicit_order = false;
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    return Err(CliError::Config("keys must appear inside a section".into()));
                }
                continue;
            };
            for (key, value) in props.iter() {
                let v = value.trim();
                match (section, key) {
                    ("experiment", "name") => {}
                    ("experiment", "problem") => cfg.problem = v.to_string(),
                    ("discretization", "scheme") => cfg.scheme = v.parse()?,
                    ("discretization", "flux") => cfg.flux = parse_flux(v)?,
                    ("discretization", "order") => {
                        cfg.order = parse(v, key)?;
                        explicit_order = true;
                    }
                    ("discretization", "cells") => cfg.cells = parse(v, key)?,
                    ("discretization", "quadrature_points") => {
                        cfg.quadrature_points = parse(v, key)?;
                        explicit_nq = true;
                    }
                    ("discretization", "velocity") => cfg.velocity = parse_velocity(v)?,
                    ("time", "cfl") => cfg.cfl = parse(v, key)?,
                    ("time", "t_final") => cfg.t_final = parse(v, key)?,
                    ("time", "dt_sample") => cfg.dt_sample = parse(v, key)?,
                    ("time", "limiter") => cfg.limiter = v.parse()?,
                    ("convergence", "cells") => cfg.sweep_cells = parse_list(v, key)?,
                    ("convergence", "schemes") => cfg.sweep_schemes = parse_list(v, key)?,
                    ("output", "dir") => cfg.output = PathBuf::from(v),
                    ("experiment" | "discretization" | "time" | "convergence" | "output", _) => {
                        return Err(CliError::Config(format!("unknown key '{key}' in [{section}]")));
                    }
                    _ => {}
                }
            }
        }
        if explicit_order && !explicit_nq {
            cfg.quadrature_points = default_quadrature_points(cfg.order);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Renders the configuration sections; `parse` reads them back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[experiment]\nname = {}\nproblem = {}", self.name, self.problem);
        let _ = writeln!(
            s,
            "[discretization]\nscheme = {}\nflux = {}\norder = {}\ncells = {}\nquadrature_points = {}\nvelocity = {}",
            self.scheme,
            flux_name(self.flux),
            self.order,
            self.cells,
            self.quadrature_points,
            velocity_name(self.velocity)
        );
        let _ = writeln!(
            s,
            "[time]\ncfl = {:?}\nt_final = {:?}\ndt_sample = {:?}\nlimiter = {}",
            self.cfl, self.t_final, self.dt_sample, self.limiter
        );
        let _ = writeln!(s, "[convergence]\ncells = {}\nschemes = {}", join(&self.sweep_cells), join(&self.sweep_schemes));
        let _ = writeln!(s, "[output]\ndir = {}", self.output.display());
        s
    }
}
