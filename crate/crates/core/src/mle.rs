//! Per-cell maximum-likelihood step used as an independent oracle for the
//! DFRG right-hand side in 1D.
//!
//! For a cell `w = [a, b]` and a step `dt` with `u > 0`, particles starting
//! in `w` either stay (`remain`) or leave (`leave`); particles from the
//! upstream neighbour in `enter` arrive. The new coefficients maximise the
//! log-likelihood of the arriving mass under the candidate density, subject
//! to the flux-balanced cell mass, with one multiplier per cell.
//!
//! Region integrals use their own adaptive Gauss-Kronrod quadrature and the
//! Lagrange basis directly, never the solver's quadrature or assembly.

use crate::assembly::DensityState;
use crate::basis::LagrangeBasis;
use crate::dense::lu_solve;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problems::Velocity;
use crate::scheme::{SchemeKind, Semidiscretization};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const QUAD_TOL: f64 = 1e-14;
const MAX_DEPTH: usize = 30;

/// Adaptive G7-K15 integration of a vector-valued integrand. `f(x, out)`
/// must overwrite `out`. Error is measured in the max norm.
pub fn integrate_gk(f: &mut impl FnMut(f64, &mut [f64]), lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut total = vec![0.0; n];
    if hi <= lo || n == 0 {
        return total;
    }
    let mut buf = vec![0.0; n];
    let mut kron = vec![0.0; n];
    let mut gauss = vec![0.0; n];
    let mut stack = vec![(lo, hi, 0usize)];
    let scale = (hi - lo).max(f64::MIN_POSITIVE);
    while let Some((a, b, depth)) = stack.pop() {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        kron.fill(0.0);
        gauss.fill(0.0);
        for j in 0..8 {
            let nodes: &[f64] = if j == 7 { &[0.0] } else { &[-1.0, 1.0] };
            for &s in nodes {
                f(c + s * r * XGK[j], &mut buf);
                for i in 0..n {
                    kron[i] += WGK[j] * buf[i];
                    if j % 2 == 1 {
                        gauss[i] += WG[j / 2] * buf[i];
                    }
                }
            }
        }
        let err = kron.iter().zip(&gauss).map(|(k, g)| (k - g).abs()).fold(0.0, f64::max) * r;
        let mag = kron.iter().map(|k| k.abs()).fold(0.0, f64::max) * r;
        if err <= QUAD_TOL * mag.max(1e-3 * (b - a) / scale) || depth >= MAX_DEPTH {
            for i in 0..n {
                total[i] += kron[i] * r;
            }
        } else {
            stack.push((a, c, depth + 1));
            stack.push((c, b, depth + 1));
        }
    }
    total
}

/// Closed interval `[lo, hi]`; empty when `hi <= lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Particle regions for one cell and one step. Coordinates are not
/// wrapped, so `enter` may start below zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectedRegions {
    pub cell: usize,
    pub a: f64,
    pub b: f64,
    pub dt: f64,
    pub remain: Interval,
    pub leave: Interval,
    pub enter: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktState {
    pub coeffs: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `x + dt u(x) = target` for `x` in `[lo, hi]`.
fn foot_point(v: &Velocity, dt: f64, target: f64, lo: f64, hi: f64) -> f64 {
    let g = |x: f64| x + dt * v.eval([x, 0.0])[0] - target;
    let (mut lo, mut hi) = (lo, hi);
    let mut x = target - dt * v.eval([target, 0.0])[0];
    x = x.clamp(lo, hi);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dg = 1.0 + dt * v.divergence([x, 0.0]);
        let mut next = x - gx / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs().max(1.0) || hi - lo <= 1e-16 {
            return next;
        }
        x = next;
    }
    x
}

/// Per-cell MLE step solver for a 1D mesh with positive velocity.
#[derive(Debug, Clone)]
pub struct MleOracle {
    mesh: Mesh,
    basis: LagrangeBasis,
    velocity: Velocity,
}

impl MleOracle {
    pub fn new(mesh: Mesh, order: usize, velocity: Velocity) -> Result<Self> {
        if mesh.dim() != 1 || velocity.dim() != 1 {
            return Err(Error::Config("the MLE oracle is one-dimensional".into()));
        }
        Ok(Self { mesh, basis: LagrangeBasis::new(order), velocity })
    }

    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn upstream(&self, cell: usize) -> usize {
        let m = self.mesh.n_cells();
        (cell + m - 1) % m
    }

    fn check_velocity(&self, lo: f64, hi: f64) -> Result<()> {
        let n = 512;
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            if !(self.velocity.eval([x, 0.0])[0] > 0.0) {
                return Err(Error::NonPositiveVelocity);
            }
        }
        Ok(())
    }

    pub fn advected_regions(&self, cell: usize, dt: f64) -> Result<AdvectedRegions> {
        let h = self.mesh.h();
        let a = self.mesh.cell_origin(cell)[0];
        let b = a + h;
        self.check_velocity(a - h, b)?;
        if dt < 0.0 || dt * self.velocity.max_component() >= h {
            return Err(Error::StepTooLarge { dt, h });
        }
        if dt == 0.0 {
            let empty = Interval { lo: a, hi: a };
            return Ok(AdvectedRegions {
                cell,
                a,
                b,
                dt,
                remain: Interval { lo: a, hi: b },
                leave: Interval { lo: b, hi: b },
                enter: empty,
            });
        }
        let xb = foot_point(&self.velocity, dt, b, a, b);
        let xa = foot_point(&self.velocity, dt, a, a - h, a);
        Ok(AdvectedRegions {
            cell,
            a,
            b,
            dt,
            remain: Interval { lo: a, hi: xb },
            leave: Interval { lo: xb, hi: b },
            enter: Interval { lo: xa, hi: a },
        })
    }

    fn poly(&self, coeffs: &[f64], origin: f64, x: f64) -> f64 {
        let xi = (x - origin) / self.mesh.h();
        coeffs.iter().enumerate().map(|(i, c)| c * self.basis.value(i, xi)).sum()
    }

    /// Residual and Jacobian of the KKT system at `(c, lambda)`. Returns
    /// `None` if the candidate density is not positive at an evaluated node.
    fn kkt(&self, reg: &AdvectedRegions, own: &[f64], up: &[f64], c: &[f64], lambda: f64, consts: &KktConsts) -> Option<(Vec<f64>, Vec<f64>)> {
        let nb = self.n_basis();
        let h = self.mesh.h();
        let n = nb + 1;
        let dt = reg.dt;
        let mut bad = false;
        let mut integrand = |data: &dyn Fn(f64) -> f64, x: f64, out: &mut [f64]| {
            let y = x + dt * self.velocity.eval([x, 0.0])[0];
            let xi = (y - reg.a) / h;
            let phi: Vec<f64> = (0..nb).map(|k| self.basis.value(k, xi)).collect();
            let q: f64 = phi.iter().zip(c).map(|(p, ci)| p * ci).sum();
            if !(q > 0.0) {
                bad = true;
                out.fill(0.0);
                return;
            }
            let w = data(x) / q;
            for k in 0..nb {
                out[k] = phi[k] * w;
                for l in 0..nb {
                    out[nb + k * nb + l] = -phi[k] * phi[l] * w / q;
                }
            }
        };
        let own_rho = |x: f64| self.poly(own, reg.a, x);
        let up_rho = |x: f64| self.poly(up, reg.a - h, x);
        let len = nb + nb * nb;
        let mut stay = integrate_gk(&mut |x, out| integrand(&own_rho, x, out), reg.remain.lo, reg.remain.hi, len);
        let enter = integrate_gk(&mut |x, out| integrand(&up_rho, x, out), reg.enter.lo, reg.enter.hi, len);
        if bad {
            return None;
        }
        for (s, e) in stay.iter_mut().zip(&enter) {
            *s += e;
        }
        let mut res = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for k in 0..nb {
            res[k] = stay[k] - lambda * consts.basis_integrals[k];
            for l in 0..nb {
                jac[k * n + l] = stay[nb + k * nb + l];
            }
            jac[k * n + nb] = -consts.basis_integrals[k];
            jac[nb * n + k] = -consts.basis_integrals[k];
        }
        res[nb] = consts.target_mass - c.iter().zip(&consts.basis_integrals).map(|(ci, bi)| ci * bi).sum::<f64>();
        Some((res, jac))
    }

    /// Analytic KKT Jacobian at `(c, lambda)`, row-major `(p+2) x (p+2)`.
    pub fn kkt_jacobian(&self, state: &DensityState, cell: usize, dt: f64, c: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let (reg, own, up, consts) = self.setup(state, cell, dt)?;
        self.kkt(&reg, &own, &up, c, lambda, &consts).map(|(_, j)| j).ok_or(Error::NonPositiveCandidate)
    }

    /// KKT residual at `(c, lambda)`.
    pub fn kkt_residual(&self, state: &DensityState, cell: usize, dt: f64, c: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let (reg, own, up, consts) = self.setup(state, cell, dt)?;
        self.kkt(&reg, &own, &up, c, lambda, &consts).map(|(r, _)| r).ok_or(Error::NonPositiveCandidate)
    }

    /// Log-likelihood of the arriving mass under the candidate `c`.
    pub fn objective(&self, state: &DensityState, cell: usize, dt: f64, c: &[f64]) -> Result<f64> {
        let (reg, own, up, _) = self.setup(state, cell, dt)?;
        let h = self.mesh.h();
        let mut bad = false;
        let mut term = |data: &dyn Fn(f64) -> f64, x: f64, out: &mut [f64]| {
            let y = x + dt * self.velocity.eval([x, 0.0])[0];
            let q = self.poly(c, reg.a, y);
            if !(q > 0.0) {
                bad = true;
                out[0] = 0.0;
            } else {
                out[0] = q.ln() * data(x);
            }
        };
        let own_rho = |x: f64| self.poly(&own, reg.a, x);
        let up_rho = |x: f64| self.poly(&up, reg.a - h, x);
        let s = integrate_gk(&mut |x, o| term(&own_rho, x, o), reg.remain.lo, reg.remain.hi, 1)[0];
        let e = integrate_gk(&mut |x, o| term(&up_rho, x, o), reg.enter.lo, reg.enter.hi, 1)[0];
        if bad {
            return Err(Error::NonPositiveCandidate);
        }
        Ok(s + e)
    }

    /// Cell mass after the step: own mass minus outflow plus inflow.
    pub fn target_mass(&self, state: &DensityState, cell: usize, dt: f64) -> Result<f64> {
        Ok(self.setup(state, cell, dt)?.3.target_mass)
    }

    pub fn cell_mass(&self, coeffs: &[f64]) -> f64 {
        let w = self.basis_integrals();
        coeffs.iter().zip(&w).map(|(c, w)| c * w).sum()
    }

    fn basis_integrals(&self) -> Vec<f64> {
        let nb = self.n_basis();
        let h = self.mesh.h();
        integrate_gk(
            &mut |xi, out| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.basis.value(k, xi);
                }
            },
            0.0,
            1.0,
            nb,
        )
        .into_iter()
        .map(|v| v * h)
        .collect()
    }

    fn setup(&self, state: &DensityState, cell: usize, dt: f64) -> Result<(AdvectedRegions, Vec<f64>, Vec<f64>, KktConsts)> {
        if state.n_basis != self.n_basis() || state.n_cells() != self.mesh.n_cells() {
            return Err(Error::Config("state does not match the oracle discretization".into()));
        }
        let reg = self.advected_regions(cell, dt)?;
        let own = state.cell(cell).to_vec();
        let up = state.cell(self.upstream(cell)).to_vec();
        let h = self.mesh.h();
        let out = integrate_gk(&mut |x, o| o[0] = self.poly(&own, reg.a, x), reg.leave.lo, reg.leave.hi, 1)[0];
        let inn = integrate_gk(&mut |x, o| o[0] = self.poly(&up, reg.a - h, x), reg.enter.lo, reg.enter.hi, 1)[0];
        let basis_integrals = self.basis_integrals();
        let target_mass = self.cell_mass(&own) - out + inn;
        Ok((reg, own, up, KktConsts { basis_integrals, target_mass }))
    }

    /// Damped Newton on the KKT system from `(r, 1)`.
    pub fn mle_step_cell(&self, state: &DensityState, cell: usize, dt: f64) -> Result<KktState> {
        let (reg, own, up, consts) = self.setup(state, cell, dt)?;
        let nb = self.n_basis();
        let n = nb + 1;
        let norm = |r: &[f64]| r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut c = own.clone();
        let mut lambda = 1.0;
        let (mut res, mut jac) = self.kkt(&reg, &own, &up, &c, lambda, &consts).ok_or(Error::NonPositiveCandidate)?;
        let mut rn = norm(&res);
        let mut iterations = 0;
        while rn > 1e-15 && iterations < 50 {
            let mut step: Vec<f64> = res.iter().map(|v| -v).collect();
            if !lu_solve(&mut jac, n, &mut step) {
                return Err(Error::SingularSystem);
            }
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand: Vec<f64> = (0..nb).map(|k| c[k] + alpha * step[k]).collect();
                let lam = lambda + alpha * step[nb];
                if let Some((r2, j2)) = self.kkt(&reg, &own, &up, &cand, lam, &consts) {
                    let n2 = norm(&r2);
                    if n2 < rn {
                        accepted = Some((cand, lam, r2, j2, n2));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            iterations += 1;
            match accepted {
                Some((cand, lam, r2, j2, n2)) => {
                    c = cand;
                    lambda = lam;
                    res = r2;
                    jac = j2;
                    rn = n2;
                }
                None => break,
            }
        }
        if rn > 1e-12 {
            return Err(Error::NewtonDiverged { iterations, residual: rn });
        }
        Ok(KktState { coeffs: c, lambda, iterations, residual: rn })
    }
}

#[derive(Debug, Clone)]
struct KktConsts {
    basis_integrals: Vec<f64>,
    target_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    pub cell: usize,
    pub dts: Vec<f64>,
    pub discrepancies: Vec<f64>,
    /// Least-squares slope of `log discrepancy` against `log dt`.
    pub slope: f64,
    /// `max |rdot|` of the DFRG right-hand side on the cell.
    pub rdot_norm: f64,
}

impl Consistency {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta_t,discrepancy\n");
        for (dt, d) in self.dts.iter().zip(&self.discrepancies) {
            s.push_str(&format!("{dt:e},{d:e}\n"));
        }
        s
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Compares `(r_hat(dt) - r) / dt` with the DFRG right-hand side of `semi`
/// on one cell. `semi` must be a DFRG semidiscretization with upwind flux.
pub fn consistency_check(semi: &mut Semidiscretization, state: &DensityState, cell: usize, dts: &[f64]) -> Result<Consistency> {
    if semi.kind() != SchemeKind::Dfrg {
        return Err(Error::Config("consistency check needs a DFRG semidiscretization".into()));
    }
    if dts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("dt list must be strictly decreasing".into()));
    }
    let disc = semi.disc().clone();
    let oracle = MleOracle::new(disc.mesh().clone(), disc.basis().order(), semi.velocity().analytic)?;
    let rdot = semi.eval(state)?;
    let target = rdot.cell(cell);
    let rdot_norm = target.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let own = state.cell(cell);
    let mut discrepancies = Vec::with_capacity(dts.len());
    for &dt in dts {
        let kkt = oracle.mle_step_cell(state, cell, dt)?;
        let d = kkt.coeffs.iter().zip(own).zip(target).map(|((c, r), t)| ((c - r) / dt - t).abs()).fold(0.0, f64::max);
        discrepancies.push(d);
    }
    let slope = log_log_slope(dts, &discrepancies);
    Ok(Consistency { cell, dts: dts.to_vec(), discrepancies, slope, rdot_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshSpec;

    fn mesh(m: usize) -> Mesh {
        Mesh::new(MeshSpec::new(1, m)).unwrap()
    }

    fn unit() -> Velocity {
        Velocity::Constant { dim: 1, value: [1.0, 0.0] }
    }

    #[test]
    fn gauss_kronrod_integrates_smooth_functions() {
        let v = integrate_gk(&mut |x, o| {
            o[0] = x.exp();
            o[1] = 1.0 / (1.0 + 25.0 * x * x);
        }, -1.0, 1.0, 2);
        assert!((v[0] - (1f64.exp() - (-1f64).exp())).abs() < 1e-14);
        assert!((v[1] - 2.0 * 5f64.atan() / 5.0).abs() < 1e-14);
    }

    #[test]
    fn regions_for_unit_shift() {
        let o = MleOracle::new(mesh(4), 1, unit()).unwrap();
        let r = o.advected_regions(0, 0.1).unwrap();
        assert!((r.remain.hi - 0.15).abs() < 1e-14 && r.remain.lo == 0.0);
        assert!((r.leave.lo - 0.15).abs() < 1e-14 && r.leave.hi == 0.25);
        assert!((r.enter.lo + 0.1).abs() < 1e-14 && r.enter.hi == 0.0);
        let z = o.advected_regions(0, 0.0).unwrap();
        assert_eq!(z.remain, Interval { lo: 0.0, hi: 0.25 });
        assert!(z.leave.is_empty() && z.enter.is_empty());
    }

    #[test]
    fn region_roots_forward_map_to_cell_ends() {
        let v = Velocity::Sinusoid { offset: 2.0 };
        let o = MleOracle::new(mesh(8), 1, v).unwrap();
        for cell in 0..8 {
            let r = o.advected_regions(cell, 1e-3).unwrap();
            let fwd = |x: f64| x + 1e-3 * v.eval([x, 0.0])[0];
            assert!((fwd(r.remain.hi) - r.b).abs() <= 1e-12);
            assert!((fwd(r.enter.lo) - r.a).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_large_steps_and_backward_flow() {
        let o = MleOracle::new(mesh(4), 1, unit()).unwrap();
        assert!(matches!(o.advected_regions(1, 0.3), Err(Error::StepTooLarge { .. })));
        let o = MleOracle::new(mesh(4), 1, Velocity::Sinusoid { offset: 0.5 }).unwrap();
        assert_eq!(o.advected_regions(3, 0.01), Err(Error::NonPositiveVelocity));
    }

    fn smooth_state(m: usize, p: usize) -> DensityState {
        let basis = LagrangeBasis::new(p);
        let mut s = DensityState::new(vec![0.0; m * (p + 1)], p + 1);
        for c in 0..m {
            for i in 0..=p {
                let x = (c as f64 + basis.nodes()[i]) / m as f64;
                s.cell_mut(c)[i] = 1.5 + (2.0 * std::f64::consts::PI * x).sin();
            }
        }
        s
    }

    #[test]
    fn zero_step_returns_input() {
        let o = MleOracle::new(mesh(8), 2, Velocity::Sinusoid { offset: 2.0 }).unwrap();
        let s = smooth_state(8, 2);
        let k = o.mle_step_cell(&s, 3, 0.0).unwrap();
        assert_eq!(k.iterations, 0);
        assert_eq!(k.coeffs, s.cell(3));
        assert_eq!(k.lambda, 1.0);
    }

    #[test]
    fn step_balances_cell_mass() {
        let o = MleOracle::new(mesh(8), 1, Velocity::Sinusoid { offset: 2.0 }).unwrap();
        let s = smooth_state(8, 1);
        for cell in [0, 5] {
            let k = o.mle_step_cell(&s, cell, 5e-3).unwrap();
            let want = o.target_mass(&s, cell, 5e-3).unwrap();
            assert!((o.cell_mass(&k.coeffs) - want).abs() < 1e-11);
            assert!(k.residual <= 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let o = MleOracle::new(mesh(8), 2, Velocity::Sinusoid { offset: 2.0 }).unwrap();
        let s = smooth_state(8, 2);
        let (cell, dt) = (2, 4e-3);
        let c = vec![s.cell(cell)[0] * 1.05, s.cell(cell)[1] * 0.97, s.cell(cell)[2] + 0.02];
        let lam = 1.1;
        let jac = o.kkt_jacobian(&s, cell, dt, &c, lam).unwrap();
        let n = 4;
        let e = 1e-6;
        for l in 0..n {
            let shifted = |sgn: f64| {
                let mut c2 = c.clone();
                let mut lam2 = lam;
                if l < 3 {
                    c2[l] += sgn * e;
                } else {
                    lam2 += sgn * e;
                }
                o.kkt_residual(&s, cell, dt, &c2, lam2).unwrap()
            };
            let (rp, rm) = (shifted(1.0), shifted(-1.0));
            for k in 0..n {
                let fd = (rp[k] - rm[k]) / (2.0 * e);
                let an = jac[k * n + l];
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "({k},{l}) {fd} {an}");
            }
        }
    }

    #[test]
    fn jacobian_at_zero_step_is_bordered_fisher_rao_mass() {
        let o = MleOracle::new(mesh(4), 1, unit()).unwrap();
        let s = smooth_state(4, 1);
        let own = s.cell(1).to_vec();
        let jac = o.kkt_jacobian(&s, 1, 0.0, &own, 1.0).unwrap();
        let h = 0.25;
        let basis = LagrangeBasis::new(1);
        let a = integrate_gk(&mut |xi, out| {
            let rho = own[0] * basis.value(0, xi) + own[1] * basis.value(1, xi);
            for k in 0..2 {
                for l in 0..2 {
                    out[k * 2 + l] = -h * basis.value(k, xi) * basis.value(l, xi) / rho;
                }
            }
        }, 0.0, 1.0, 4);
        for k in 0..2 {
            for l in 0..2 {
                assert!((jac[k * 3 + l] - a[k * 2 + l]).abs() < 1e-14);
            }
            assert!((jac[k * 3 + 2] + h / 2.0).abs() < 1e-14);
            assert!((jac[2 * 3 + k] + h / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn newton_answer_is_a_local_maximum() {
        let o = MleOracle::new(mesh(4), 1, unit()).unwrap();
        let s = smooth_state(4, 1);
        let (cell, dt) = (1, 0.02);
        let k = o.mle_step_cell(&s, cell, dt).unwrap();
        let best = o.objective(&s, cell, dt, &k.coeffs).unwrap();
        let w = o.basis_integrals();
        // scan along the mass-preserving direction and a neighbourhood grid
        let dir = [w[1], -w[0]];
        for i in 1..=20 {
            for sgn in [-1.0, 1.0] {
                let e = sgn * 1e-3 * i as f64;
                let c = [k.coeffs[0] + e * dir[0], k.coeffs[1] + e * dir[1]];
                assert!(o.objective(&s, cell, dt, &c).unwrap() < best);
            }
        }
        let mut refine = 1e-2;
        let mut centre = [k.coeffs[0] - 0.05 * dir[0], k.coeffs[1] - 0.05 * dir[1]];
        for _ in 0..6 {
            let (mut arg, mut val) = (centre, f64::NEG_INFINITY);
            for j in -10..=10 {
                let c = [centre[0] + refine * j as f64 * dir[0], centre[1] + refine * j as f64 * dir[1]];
                let f = o.objective(&s, cell, dt, &c).unwrap();
                if f > val {
                    val = f;
                    arg = c;
                }
            }
            centre = arg;
            refine /= 10.0;
        }
        assert!((centre[0] - k.coeffs[0]).abs() < 1e-6 && (centre[1] - k.coeffs[1]).abs() < 1e-6, "{centre:?} {:?}", k.coeffs);
    }

    fn dfrg(m: usize, p: usize, nq: usize, v: Velocity) -> Semidiscretization {
        use crate::assembly::{Discretization, FluxKind, VelocityField, VelocityMode};
        let d = Discretization::new(mesh(m), p, nq).unwrap();
        let vf = VelocityField::new(&d, v, VelocityMode::Analytic).unwrap();
        Semidiscretization::new(d, vf, SchemeKind::Dfrg, FluxKind::Upwind).unwrap()
    }

    #[test]
    fn constant_state_in_constant_flow_is_consistent() {
        let mut semi = dfrg(8, 1, 9, Velocity::Constant { dim: 1, value: [0.7, 0.0] });
        let s = DensityState::new(vec![2.0; 16], 2);
        let c = consistency_check(&mut semi, &s, 4, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]).unwrap();
        assert!(c.discrepancies.iter().all(|&d| d <= 1e-10), "{:?}", c.discrepancies);
    }

    #[test]
    fn mle_step_converges_to_dfrg_rhs_at_first_order() {
        use crate::problems::problem;
        use crate::reference::ReferenceSolution;
        let p = problem("mild_compression").unwrap();
        let mut semi = dfrg(8, 1, 21, p.velocity);
        let exact = ReferenceSolution::new(p);
        let s = semi.disc().interpolate(|x| exact.density(x, 0.5));
        for cell in [1, 6] {
            let f = consistency_check(&mut semi, &s, cell, &[1.6e-5, 8e-6, 4e-6, 2e-6]).unwrap();
            assert!((0.8..=1.2).contains(&f.slope));
            assert!(f.discrepancies[3] <= 1e-4 * f.rdot_norm);
            let c = consistency_check(&mut semi, &s, cell, &[1e-2, 5e-3, 2.5e-3, 1.25e-3]).unwrap();
            for w in c.discrepancies.windows(2) {
                let ratio = w[0] / w[1];
                assert!((1.7..=2.3).contains(&ratio), "{ratio}");
            }
            assert!((0.8..=1.2).contains(&c.slope));
        }
    }
}
