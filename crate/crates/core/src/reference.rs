//! Exact densities by the method of characteristics.
//!
//! `rho(x, t) = rho_init(X0) / J` where `X0` is the foot of the backward
//! characteristic through `x` and `J = dx/dX0`. Constant and 1D sinusoidal
//! velocities use closed forms; anything else integrates the backward
//! characteristic together with `J' = div u(X) J` by classical RK4.

use std::f64::consts::PI;

use crate::problems::{Problem, Velocity};

/// Default RK4 substep, as a fraction of `1 / u_max`.
pub const DEFAULT_SUBSTEP: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    problem: Problem,
    substep: f64,
    force_tracer: bool,
}

impl ReferenceSolution {
    pub fn new(problem: Problem) -> Self {
        Self { problem, substep: DEFAULT_SUBSTEP, force_tracer: false }
    }

    /// RK4 substep as a fraction of `1 / u_max`.
    pub fn with_substep(mut self, substep: f64) -> Self {
        self.substep = substep;
        self
    }

    /// Always integrate characteristics numerically, bypassing closed forms.
    pub fn with_tracer(mut self) -> Self {
        self.force_tracer = true;
        self
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn substep(&self) -> f64 {
        self.substep
    }

    /// Whether [`ReferenceSolution::foot`] integrates characteristics
    /// numerically rather than using a closed form.
    pub fn uses_tracer(&self) -> bool {
        match self.problem.velocity {
            Velocity::Constant { .. } => self.force_tracer,
            Velocity::Sinusoid { offset } => self.force_tracer || offset <= 1.0,
            Velocity::Swirl => true,
        }
    }

    pub fn density(&self, x: [f64; 2], t: f64) -> f64 {
        let (x0, jac) = self.foot(x, t);
        self.problem.initial.eval(x0) / jac
    }

    /// Foot of the backward characteristic through `x` after time `t`,
    /// together with `J = dx/dX0`. `X0` is not wrapped.
    pub fn foot(&self, x: [f64; 2], t: f64) -> ([f64; 2], f64) {
        if t == 0.0 {
            return (x, 1.0);
        }
        match self.problem.velocity {
            Velocity::Constant { value, .. } if !self.force_tracer => {
                ([x[0] - value[0] * t, x[1] - value[1] * t], 1.0)
            }
            Velocity::Sinusoid { offset } if offset > 1.0 && !self.force_tracer => {
                let tt = TravelTime::new(offset);
                let x0 = tt.trace_back(x[0], t);
                let u = |y: f64| (2.0 * PI * y).sin() + offset;
                ([x0, x[1]], u(x[0]) / u(x0))
            }
            _ => trace_rk4(&self.problem.velocity, x, t, self.substep),
        }
    }
}

/// Backward RK4 on `(X, log J)`.
pub fn trace_rk4(v: &Velocity, x: [f64; 2], t: f64, substep: f64) -> ([f64; 2], f64) {
    let mut s = [x[0], x[1], 0.0];
    advance_rk4(v, &mut s, t, substep);
    if v.dim() == 1 {
        s[1] = x[1];
    }
    ([s[0], s[1]], s[2].exp())
}

/// Continues a backward characteristic `(X, log J)` for a further time `t`.
pub fn advance_rk4(v: &Velocity, s: &mut [f64; 3], t: f64, substep: f64) {
    if t <= 0.0 {
        return;
    }
    let umax = v.max_component().max(1e-300);
    let n = (t * umax / substep).ceil().max(1.0) as usize;
    let ds = t / n as f64;
    let f = |s: &[f64; 3]| -> [f64; 3] {
        let p = [s[0], s[1]];
        let u = v.eval(p);
        [-u[0], -u[1], v.divergence(p)]
    };
    for _ in 0..n {
        let k1 = f(s);
        let s2 = std::array::from_fn(|i| s[i] + 0.5 * ds * k1[i]);
        let k2 = f(&s2);
        let s3 = std::array::from_fn(|i| s[i] + 0.5 * ds * k2[i]);
        let k3 = f(&s3);
        let s4 = std::array::from_fn(|i| s[i] + ds * k3[i]);
        let k4 = f(&s4);
        for i in 0..3 {
            s[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// Travel time `tau(x) = int_0^x dy / (a + sin(2 pi y))` for `a > 1`.
#[derive(Debug, Clone, Copy)]
struct TravelTime {
    a: f64,
    s: f64,
    f0: f64,
}

impl TravelTime {
    fn new(a: f64) -> Self {
        let s = (a * a - 1.0).sqrt();
        let mut tt = Self { a, s, f0: 0.0 };
        tt.f0 = tt.antiderivative(0.0);
        tt
    }

    /// Continuous antiderivative of `1 / (a + sin theta)`.
    fn antiderivative(&self, theta: f64) -> f64 {
        let branch = ((theta + PI) / (2.0 * PI)).floor();
        2.0 / self.s * ((self.a * (theta / 2.0).tan() + 1.0) / self.s).atan() + 2.0 * PI / self.s * branch
    }

    fn tau(&self, x: f64) -> f64 {
        (self.antiderivative(2.0 * PI * x) - self.f0) / (2.0 * PI)
    }

    fn period(&self) -> f64 {
        1.0 / self.s
    }

    /// Solves `tau(X0) = tau(x) - t` on the periodic line; `x` in `[0, 1]`.
    fn trace_back(&self, x: f64, t: f64) -> f64 {
        let xw = x.rem_euclid(1.0);
        let shift = x - xw;
        let target = self.tau(xw) - t;
        let p = self.period();
        let laps = (target / p).floor();
        let rem = target - laps * p;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut y = rem / p;
        for _ in 0..200 {
            let g = self.tau(y) - rem;
            if g > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let step = g * ((2.0 * PI * y).sin() + self.a);
            let mut next = y - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 1e-16 || hi - lo <= 1e-16 {
                y = next;
                break;
            }
            y = next;
        }
        y + laps + shift
    }
}
