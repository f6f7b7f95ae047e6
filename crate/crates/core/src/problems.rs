//! Registered initial densities, velocity fields and experiment presets.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Steady velocity fields on the periodic unit domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Velocity {
    Constant { dim: usize, value: [f64; 2] },
    /// `u(x) = sin(2 pi x) + offset` in 1D.
    Sinusoid { offset: f64 },
    /// `u_x = cos(2 pi x) cos(2 pi (y - 1/4)) + 0.1`,
    /// `u_y = sin(2 pi x) sin(2 pi (y - 1/4)) + 0.1`.
    Swirl,
}

impl Velocity {
    pub fn dim(&self) -> usize {
        match *self {
            Velocity::Constant { dim, .. } => dim,
            Velocity::Sinusoid { .. } => 1,
            Velocity::Swirl => 2,
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            Velocity::Constant { value, .. } => value,
            Velocity::Sinusoid { offset } => [(2.0 * PI * x[0]).sin() + offset, 0.0],
            Velocity::Swirl => {
                let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
                let (sy, cy) = (2.0 * PI * (x[1] - 0.25)).sin_cos();
                [cx * cy + 0.1, sx * sy + 0.1]
            }
        }
    }

    pub fn divergence(&self, x: [f64; 2]) -> f64 {
        match *self {
            Velocity::Constant { .. } => 0.0,
            Velocity::Sinusoid { .. } => 2.0 * PI * (2.0 * PI * x[0]).cos(),
            // d/dx u_x = -2 pi sin(2 pi x) cos(2 pi (y - 1/4)) = -d/dy u_y
            Velocity::Swirl => 0.0,
        }
    }

    /// Upper bound of the largest velocity component over the domain.
    pub fn max_component(&self) -> f64 {
        match *self {
            Velocity::Constant { value, .. } => value[0].abs().max(value[1].abs()),
            Velocity::Sinusoid { offset } => 1.0 + offset.abs(),
            Velocity::Swirl => 1.1,
        }
    }
}

/// Initial densities. All are evaluated on the periodic extension of
/// `[0, 1)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDensity {
    Constant(f64),
    /// Logistic bump with floor `b`, centre parameter `mu` and steepness `k`.
    Bump { b: f64, mu: f64, k: f64 },
    /// `sin(freq * pi * x) + offset`.
    Sine { freq: f64, offset: f64 },
    /// Product of two 1D bumps.
    Bump2d { b: f64, mu: f64, k: f64 },
    /// `sin(pi x) sin(pi y) + offset`.
    SineProduct { offset: f64 },
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn bump(x: f64, b: f64, mu: f64, k: f64) -> f64 {
    if x <= 0.5 {
        (1.0 - b) * logistic(k * (x - mu)) + b
    } else {
        (b - 1.0) * logistic(k * (x + mu - 1.0)) + 1.0
    }
}

impl InitialDensity {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let wx = x[0].rem_euclid(1.0);
        let wy = x[1].rem_euclid(1.0);
        match *self {
            InitialDensity::Constant(c) => c,
            InitialDensity::Bump { b, mu, k } => bump(wx, b, mu, k),
            InitialDensity::Sine { freq, offset } => (freq * PI * wx).sin() + offset,
            InitialDensity::Bump2d { b, mu, k } => bump(wx, b, mu, k) * bump(wy, b, mu, k),
            InitialDensity::SineProduct { offset } => (PI * wx).sin() * (PI * wy).sin() + offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: &'static str,
    pub dim: usize,
    pub initial: InitialDensity,
    pub velocity: Velocity,
    pub description: &'static str,
}

pub fn registered_problems() -> Vec<Problem> {
    let bump = |b, mu, k| InitialDensity::Bump { b, mu, k };
    vec![
        Problem {
            id: "mild_compression",
            dim: 1,
            initial: InitialDensity::Constant(1.0),
            velocity: Velocity::Sinusoid { offset: 2.0 },
            description: "constant density in u = sin(2 pi x) + 2",
        },
        Problem {
            id: "extreme_compression",
            dim: 1,
            initial: InitialDensity::Constant(1.0),
            velocity: Velocity::Sinusoid { offset: 1.01 },
            description: "constant density in u = sin(2 pi x) + 1.01",
        },
        Problem {
            id: "bump",
            dim: 1,
            initial: bump(0.01, 0.5, 100.0),
            velocity: Velocity::Constant { dim: 1, value: [1.0, 0.0] },
            description: "logistic bump b = 0.01, mu = 0.5, k = 100 in u = 1",
        },
        Problem {
            id: "fine_details",
            dim: 1,
            initial: InitialDensity::Sine { freq: 10.0, offset: 1.1 },
            velocity: Velocity::Sinusoid { offset: 1.2 },
            description: "sin(10 pi x) + 1.1 in u = sin(2 pi x) + 1.2",
        },
        Problem {
            id: "bump_2d",
            dim: 2,
            initial: InitialDensity::Bump2d { b: 0.01, mu: 0.5, k: 100.0 },
            velocity: Velocity::Constant { dim: 2, value: [1.0, 0.5] },
            description: "product of 1D bumps in u = (1, 0.5)",
        },
        Problem {
            id: "swirl",
            dim: 2,
            initial: InitialDensity::SineProduct { offset: 0.1 },
            velocity: Velocity::Swirl,
            description: "sin(pi x) sin(pi y) + 0.1 in the swirl field",
        },
        Problem {
            id: "steep_bump",
            dim: 1,
            initial: bump(0.01, 0.25, 200.0),
            velocity: Velocity::Constant { dim: 1, value: [1.0, 0.0] },
            description: "logistic bump b = 0.01, mu = 0.25, k = 200 in u = 1",
        },
        Problem {
            id: "steeper_bump",
            dim: 1,
            initial: bump(0.01, 0.25, 1000.0),
            velocity: Velocity::Constant { dim: 1, value: [1.0, 0.0] },
            description: "logistic bump b = 0.01, mu = 0.25, k = 1000 in u = 1",
        },
    ]
}

pub fn problem(id: &str) -> Result<Problem> {
    registered_problems()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::UnknownProblem(id.to_string()))
}

/// Default parameters of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub id: &'static str,
    pub problem: &'static str,
    pub order: usize,
    pub cells_per_axis: usize,
    pub cfl: f64,
    /// `None` selects the default `2p + 3` points.
    pub quadrature_points: Option<usize>,
    pub t_final: f64,
    pub dt_sample: f64,
    pub notes: &'static str,
}

impl fmt::Display for ExperimentPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} problem={} p={} m={} cfl={} nq={} t_final={} dt_sample={}",
            self.id,
            self.problem,
            self.order,
            self.cells_per_axis,
            self.cfl,
            self.quadrature_points.map_or("default".to_string(), |n| n.to_string()),
            self.t_final,
            self.dt_sample
        )
    }
}

pub fn registered_experiments() -> Vec<ExperimentPreset> {
    vec![
        ExperimentPreset {
            id: "ex1",
            problem: "mild_compression",
            order: 1,
            cells_per_axis: 256,
            cfl: 0.1875,
            quadrature_points: None,
            t_final: 3.0,
            dt_sample: 0.01,
            notes: "mild compression",
        },
        ExperimentPreset {
            id: "ex2_a",
            problem: "extreme_compression",
            order: 1,
            cells_per_axis: 256,
            cfl: 0.125,
            quadrature_points: None,
            t_final: 100.0,
            dt_sample: 0.1,
            notes: "extreme compression; CFL from the density-profile figure (the error figure uses 0.1875, see ex2_b)",
        },
        ExperimentPreset {
            id: "ex2_b",
            problem: "extreme_compression",
            order: 1,
            cells_per_axis: 256,
            cfl: 0.1875,
            quadrature_points: None,
            t_final: 100.0,
            dt_sample: 0.1,
            notes: "extreme compression; CFL from the error-over-time figure (the density figure uses 0.125, see ex2_a)",
        },
        ExperimentPreset {
            id: "ex3",
            problem: "bump",
            order: 1,
            cells_per_axis: 128,
            cfl: 0.0625,
            quadrature_points: None,
            t_final: 50.0,
            dt_sample: 0.1,
            notes: "bump advection; profiles shown up to t = 50, errors sampled every 0.01 up to t = 5 in the convergence study",
        },
        ExperimentPreset {
            id: "ex4_a",
            problem: "fine_details",
            order: 3,
            cells_per_axis: 64,
            cfl: 0.034375,
            quadrature_points: None,
            t_final: 1.5,
            dt_sample: 0.05,
            notes: "fine details, p = 3; CFL from the density figure (the error figure uses 0.1875 and an offset of 1.01, see ex4_b)",
        },
        ExperimentPreset {
            id: "ex4_b",
            problem: "fine_details",
            order: 3,
            cells_per_axis: 256,
            cfl: 0.1875,
            quadrature_points: None,
            t_final: 15.0,
            dt_sample: 0.1,
            notes: "fine details, p = 3; parameters of the error figure (CFL 0.1875 exceeds the SSPRK3 stability bound for p = 3 under the h / u_max step rule)",
        },
        ExperimentPreset {
            id: "ex5",
            problem: "bump_2d",
            order: 1,
            cells_per_axis: 32,
            cfl: 0.0625,
            quadrature_points: None,
            t_final: 3.0,
            dt_sample: 0.01,
            notes: "2D bump; CFL not stated; 0.0625 chosen because DFRG loses positivity at 0.1875 and 0.125",
        },
        ExperimentPreset {
            id: "ex6",
            problem: "swirl",
            order: 1,
            cells_per_axis: 32,
            cfl: 0.1875,
            quadrature_points: None,
            t_final: 3.0,
            dt_sample: 0.5,
            notes: "2D swirl; CFL not stated for this example, 0.1875 chosen",
        },
        ExperimentPreset {
            id: "failure_a",
            problem: "steep_bump",
            order: 3,
            cells_per_axis: 50,
            cfl: 0.0625,
            quadrature_points: Some(5),
            t_final: 1.0,
            dt_sample: 0.01,
            notes: "quadrature failure mode: fails with nq = 5, succeeds with nq = 11; k = 200 from the figure (the text says 0.005); CFL not stated, 0.0625 chosen",
        },
        ExperimentPreset {
            id: "failure_b",
            problem: "steeper_bump",
            order: 1,
            cells_per_axis: 50,
            cfl: 0.0625,
            quadrature_points: Some(5),
            t_final: 1.0,
            dt_sample: 0.01,
            notes: "time-step failure mode: fails with CFL = 0.0625, succeeds with 0.0125; k = 1000 from the figure (the text says 0.001)",
        },
    ]
}

/// Looks up an experiment preset; `ex2` and `ex4` resolve to their `_a`
/// variants.
pub fn experiment(id: &str) -> Result<ExperimentPreset> {
    let id = match id {
        "ex2" => "ex2_a",
        "ex4" => "ex4_a",
        other => other,
    };
    registered_experiments()
        .into_iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownProblem(id.to_string()))
}
