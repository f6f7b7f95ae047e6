//! SSPRK3 time stepping with exact landing on sample times.

use std::fmt;
use std::str::FromStr;

use crate::assembly::DensityState;
use crate::error::{Error, PositivityLost, Result};
use crate::scheme::{apply_positivity_limiter, SchemeKind, Semidiscretization, LIMITER_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimiterMode {
    Off,
    PerStage,
    PerStep,
}

impl LimiterMode {
    pub fn name(self) -> &'static str {
        match self {
            LimiterMode::Off => "off",
            LimiterMode::PerStage => "per_stage",
            LimiterMode::PerStep => "per_step",
        }
    }
}

impl fmt::Display for LimiterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LimiterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(LimiterMode::Off),
            "per_stage" => Ok(LimiterMode::PerStage),
            "per_step" => Ok(LimiterMode::PerStep),
            other => Err(Error::Config(format!("unknown limiter mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub cfl: f64,
    pub t_final: f64,
    pub dt_sample: f64,
    /// Only consulted for DG(+); DG and DFRG never limit.
    pub limiter: LimiterMode,
}

impl TimeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::Config(format!("cfl must be positive, got {}", self.cfl)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if !(self.dt_sample > 0.0 && self.dt_sample.is_finite()) {
            return Err(Error::Config(format!("dt_sample must be positive, got {}", self.dt_sample)));
        }
        Ok(())
    }

    /// Sample times `s * dt_sample` up to `t_final`, with `t_final` appended
    /// when it is not itself a sample time.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = (self.t_final / self.dt_sample * (1.0 + 1e-12)).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|s| s as f64 * self.dt_sample).collect();
        let last = *times.last().unwrap_or(&0.0);
        if self.t_final - last > 1e-12 * self.t_final.max(1.0) {
            times.push(self.t_final);
        }
        times
    }
}

/// `dt = cfl * h / u_max`.
pub fn stable_dt(cfl: f64, h: f64, u_max: f64) -> f64 {
    cfl * h / u_max
}

/// Buffers for [`ssprk3_step`].
#[derive(Debug, Clone)]
pub struct Ssprk3Work {
    stage: Vec<f64>,
    deriv: Vec<f64>,
}

impl Ssprk3Work {
    pub fn new(n: usize) -> Self {
        Self { stage: vec![0.0; n], deriv: vec![0.0; n] }
    }
}

/// One Shu-Osher SSPRK3 step from `r` into `out`. `post_stage` runs on
/// every stage state (stages 1, 2 and the final combination) and returns
/// a count that is summed into the result. Errors from `rhs` are
/// returned together with the 1-based stage index.
pub fn ssprk3_step<F, P>(
    rhs: &mut F,
    r: &[f64],
    t: f64,
    dt: f64,
    out: &mut [f64],
    work: &mut Ssprk3Work,
    post_stage: &mut P,
) -> std::result::Result<usize, (usize, Error)>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
    P: FnMut(usize, &mut [f64]) -> usize,
{
    let Ssprk3Work { stage, deriv } = work;
    let mut count = 0;
    rhs(r, t, deriv).map_err(|e| (1, e))?;
    for i in 0..r.len() {
        stage[i] = r[i] + dt * deriv[i];
    }
    count += post_stage(1, stage);
    rhs(stage, t + dt, deriv).map_err(|e| (2, e))?;
    for i in 0..r.len() {
        stage[i] = 0.75 * r[i] + 0.25 * (stage[i] + dt * deriv[i]);
    }
    count += post_stage(2, stage);
    rhs(stage, t + 0.5 * dt, deriv).map_err(|e| (3, e))?;
    for i in 0..r.len() {
        out[i] = r[i] / 3.0 + 2.0 / 3.0 * (stage[i] + dt * deriv[i]);
    }
    count += post_stage(3, out);
    Ok(count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: DensityState,
    /// Cells limited since the previous sample (including the initial
    /// limiting for the first sample).
    pub limiter_activations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub steps: usize,
    /// Time reached; equals `t_final` unless the run failed.
    pub final_time: f64,
    pub final_state: DensityState,
    pub failure: Option<PositivityLost>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn total_limiter_activations(&self) -> usize {
        self.samples.iter().map(|s| s.limiter_activations).sum()
    }
}

/// Integrates from `r0` to `t_final`. Loss of positivity in DFRG stops the
/// run and is reported in [`Trajectory::failure`] with the samples taken so
/// far; other errors are returned.
pub fn integrate(semi: &mut Semidiscretization, r0: &DensityState, cfg: &TimeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let disc = semi.disc().clone();
    let limiter = if semi.kind() == SchemeKind::DgPlus { cfg.limiter } else { LimiterMode::Off };
    let u_max = semi.velocity().u_max;
    let dt = if u_max > 0.0 { stable_dt(cfg.cfl, disc.mesh().h(), u_max) } else { cfg.t_final.max(cfg.dt_sample) };

    let mut r = r0.clone();
    let mut pending = 0;
    if limiter != LimiterMode::Off {
        pending += apply_positivity_limiter(&disc, &mut r.coeffs, LIMITER_EPS);
    }
    let times = cfg.sample_times();
    let mut samples = vec![Sample { t: 0.0, state: r.clone(), limiter_activations: pending }];
    pending = 0;

    let mut next = r.clone();
    let mut work = Ssprk3Work::new(r.coeffs.len());
    let mut t = 0.0;
    let mut steps = 0;
    let mut rhs = |x: &[f64], _t: f64, out: &mut [f64]| semi.rhs(x, out);
    let mut post = |stage: usize, x: &mut [f64]| -> usize {
        match limiter {
            LimiterMode::PerStage => apply_positivity_limiter(&disc, x, LIMITER_EPS),
            LimiterMode::PerStep if stage == 3 => apply_positivity_limiter(&disc, x, LIMITER_EPS),
            _ => 0,
        }
    };

    for &target in times.iter().skip(1) {
        while t < target {
            let remaining = target - t;
            let (h, land) = if remaining <= dt * (1.0 + 1e-10) { (remaining, true) } else { (dt, false) };
            match ssprk3_step(&mut rhs, &r.coeffs, t, h, &mut next.coeffs, &mut work, &mut post) {
                Ok(n) => pending += n,
                Err((stage, Error::PositivityLost(p))) => {
                    return Ok(Trajectory {
                        samples,
                        dt,
                        steps,
                        final_time: t,
                        final_state: r,
                        failure: Some(p.at_time(t).in_stage(stage)),
                    });
                }
                Err((_, e)) => return Err(e),
            }
            std::mem::swap(&mut r, &mut next);
            steps += 1;
            t = if land { target } else { t + h };
        }
        samples.push(Sample { t: target, state: r.clone(), limiter_activations: pending });
        pending = 0;
    }
    Ok(Trajectory { samples, dt, steps, final_time: t, final_state: r, failure: None })
}
