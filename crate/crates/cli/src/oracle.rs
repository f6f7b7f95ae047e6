//! Registered oracle runs: MLE consistency of the DFRG right-hand side and
//! the KL-growth identity, on the ex1 geometry.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use frg_core::assembly::{DensityState, Discretization, FluxKind, VelocityField, VelocityMode};
use frg_core::mesh::{Mesh, MeshSpec};
use frg_core::metrics::{kl_growth_diagnostic, kl_time_derivative_fd};
use frg_core::mle::consistency_check;
use frg_core::problems::{problem, Velocity};
use frg_core::reference::ReferenceSolution;
use frg_core::scheme::{SchemeKind, Semidiscretization};
use frg_core::time::{integrate, LimiterMode, TimeConfig};

use crate::CliError;

/// Step lengths close to zero, where the first-order term dominates.
pub const FINE_DTS: [f64; 4] = [1.6e-5, 8e-6, 4e-6, 2e-6];
/// Step lengths for the halving-ratio check.
pub const COARSE_DTS: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
pub const ORACLE_CELLS: [usize; 2] = [1, 6];
pub const KL_FD_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

fn dfrg(m: usize, p: usize, nq: usize, v: Velocity) -> Result<Semidiscretization, CliError> {
    let d = Discretization::new(Mesh::new(MeshSpec::new(1, m))?, p, nq)?;
    let vf = VelocityField::new(&d, v, VelocityMode::Analytic)?;
    Ok(Semidiscretization::new(d, vf, SchemeKind::Dfrg, FluxKind::Upwind)?)
}

fn write(dir: Option<&Path>, file: &str, text: &str) -> Result<(), CliError> {
    if let Some(dir) = dir {
        fs::write(dir.join(file), text).map_err(|e| CliError::Io(format!("{file}: {e}")))?;
    }
    Ok(())
}

/// MLE consistency on ex1 geometry (`m = 8`, `p = 1`) with the exact
/// density at `t = 1/2`, plus the constant-state case.
pub fn mle_checks(out: Option<&Path>) -> Result<Vec<Check>, CliError> {
    let prob = problem("mild_compression")?;
    let exact = ReferenceSolution::new(prob.clone());
    let mut semi = dfrg(8, 1, 21, prob.velocity)?;
    let state = semi.disc().interpolate(|x| exact.density(x, 0.5));
    let mut checks = Vec::new();
    for cell in ORACLE_CELLS {
        let fine = consistency_check(&mut semi, &state, cell, &FINE_DTS)?;
        write(out, &format!("mle_cell{cell}.csv"), &fine.to_csv())?;
        let last = *fine.discrepancies.last().unwrap();
        checks.push(check(
            format!("mle slope, cell {cell}"),
            (0.8..=1.2).contains(&fine.slope),
            format!("slope {:.4} (want [0.8, 1.2])", fine.slope),
        ));
        checks.push(check(
            format!("mle smallest-step discrepancy, cell {cell}"),
            last <= 1e-4 * fine.rdot_norm,
            format!("{last:.3e} vs 1e-4 * |rdot| = {:.3e}", 1e-4 * fine.rdot_norm),
        ));
        let coarse = consistency_check(&mut semi, &state, cell, &COARSE_DTS)?;
        write(out, &format!("mle_cell{cell}_coarse.csv"), &coarse.to_csv())?;
        let ratios: Vec<f64> = coarse.discrepancies.windows(2).map(|w| w[0] / w[1]).collect();
        checks.push(check(
            format!("mle halving ratios, cell {cell}"),
            ratios.iter().all(|r| (1.7..=2.3).contains(r)),
            format!("ratios {ratios:.3?} (want [1.7, 2.3])"),
        ));
    }
    let mut semi = dfrg(8, 1, 9, Velocity::Constant { dim: 1, value: [0.7, 0.0] })?;
    let constant = DensityState::new(vec![2.0; 16], 2);
    let c = consistency_check(&mut semi, &constant, 4, &COARSE_DTS)?;
    write(out, "mle_constant.csv", &c.to_csv())?;
    let worst = c.discrepancies.iter().cloned().fold(0.0, f64::max);
    checks.push(check("mle constant state", worst <= 1e-10, format!("max discrepancy {worst:.3e} (want <= 1e-10)")));
    Ok(checks)
}

/// KL-growth identity on a DFRG state of ex1 evolved to `t = 1/2`.
pub fn kl_checks(out: Option<&Path>) -> Result<Vec<Check>, CliError> {
    let prob = problem("mild_compression")?;
    let reference = ReferenceSolution::new(prob.clone());
    let mut semi = dfrg(16, 1, 17, prob.velocity)?;
    let d = semi.disc().clone();
    let t = 0.5;
    let r0 = d.interpolate(|x| prob.initial.eval(x));
    let cfg = TimeConfig { cfl: 0.05, t_final: t, dt_sample: t, limiter: LimiterMode::Off };
    let r = integrate(&mut semi, &r0, &cfg)?.final_state;
    let probes = [r.clone(), d.interpolate(|_| 1.0), d.interpolate(|x| reference.density(x, t))];
    let g = kl_growth_diagnostic(&mut semi, &r, &reference, t, &probes)?;
    let fd = kl_time_derivative_fd(&mut semi, &r, &reference, t, KL_FD_DELTA, 8, 17)?;
    let v = g.values[0];
    let spread = g.values.iter().map(|w| (w - v).abs()).fold(0.0, f64::max) / v.abs();
    let tol = f64::max(1e-6, 5.0 * KL_FD_DELTA * KL_FD_DELTA);
    let mut csv = String::from("probe,value\n");
    for (k, w) in g.values.iter().enumerate() {
        let _ = writeln!(csv, "{k},{w:e}");
    }
    let _ = writeln!(csv, "finite_difference,{fd:e}");
    write(out, "kl_growth.csv", &csv)?;
    Ok(vec![
        check("kl probe spread", spread <= 1e-8, format!("relative spread {spread:.3e} (want <= 1e-8)")),
        check(
            "kl finite difference",
            (fd - v).abs() <= tol,
            format!("identity {v:.9e}, finite difference {fd:.9e}, gap {:.3e} (want <= {tol:.1e})", (fd - v).abs()),
        ),
    ])
}

/// Runs every oracle, writes CSVs and `summary.txt` when `out` is given,
/// and fails with a tolerance error if any check fails.
pub fn cmd_oracle(out: Option<&Path>) -> Result<Vec<Check>, CliError> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let mut checks = mle_checks(out)?;
    checks.extend(kl_checks(out)?);
    let summary: String = checks.iter().map(|c| format!("{c}\n")).collect();
    write(out, "summary.txt", &summary)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(CliError::Tolerance(format!("{}\n{}", failed.join(", "), summary.trim_end())));
    }
    Ok(checks)
}
