//! Error norms against the exact solution, convergence orders and the
//! KL-growth diagnostic for DFRG states.

use crate::assembly::{upwind_flux, DensityState, Discretization, Tabulation};
use crate::basis::clenshaw_curtis;
use crate::error::{Error, PositivityLost, Result};
use crate::reference::{advance_rk4, ReferenceSolution};
use crate::scheme::{SchemeKind, Semidiscretization};
use crate::time::{ssprk3_step, Ssprk3Work, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    /// `D_KL(exact || numerical)`, `+inf` when the numerical density is not
    /// positive at some error node.
    pub kl: f64,
    pub mass: f64,
    pub min_density: f64,
    pub limiter_activations: usize,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "t,L1,L2,KL,mass,min_density,limiter_activations";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.t,
            fmt_num(self.l1),
            fmt_num(self.l2),
            fmt_num(self.kl),
            fmt_num(self.mass),
            fmt_num(self.min_density),
            self.limiter_activations
        )
    }
}

/// Locale-free number formatting with `inf` for infinities.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

pub fn parse_num(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

/// Generalized KL divergence of two values' contribution `p log(p/q) - p + q`.
#[inline]
pub fn kl_integrand(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        q
    } else {
        p * (p / q).ln() - p + q
    }
}

/// Evaluates numerical densities on the over-integration rule with
/// `2 n_q + 1` Clenshaw-Curtis points per axis.
#[derive(Debug, Clone)]
pub struct ErrorEvaluator {
    disc: Discretization,
    reference: ReferenceSolution,
    tab: Tabulation,
    weights: Vec<f64>,
    /// Physical error nodes, `cell * n_points + q`.
    points: Vec<[f64; 2]>,
    /// Backward characteristics `(X, Y, log J)` at `traced_t`.
    traced: Vec<[f64; 3]>,
    traced_t: f64,
}

impl ErrorEvaluator {
    pub fn new(disc: &Discretization, reference: ReferenceSolution) -> Result<Self> {
        Self::with_points(disc, reference, 2 * disc.quad().len() + 1)
    }

    pub fn with_points(disc: &Discretization, reference: ReferenceSolution, n: usize) -> Result<Self> {
        let rule = clenshaw_curtis(n)?;
        let dim = disc.mesh().dim();
        let tensor = rule.tensor(dim);
        let local: Vec<[f64; 2]> = tensor.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = tensor.iter().map(|p| p.1).collect();
        let tab = Tabulation::new(disc.basis(), &local);
        let mut points = Vec::with_capacity(disc.mesh().n_cells() * local.len());
        for c in 0..disc.mesh().n_cells() {
            for &x in &local {
                points.push(disc.mesh().to_physical(c, x));
            }
        }
        let traced = points.iter().map(|p| [p[0], p[1], 0.0]).collect();
        Ok(Self { disc: disc.clone(), reference, tab, weights, points, traced, traced_t: 0.0 })
    }

    pub fn n_points_per_cell(&self) -> usize {
        self.tab.n_points
    }

    pub fn reference(&self) -> &ReferenceSolution {
        &self.reference
    }

    /// Exact density at every error node. Numerically traced problems
    /// continue the previous characteristics when `t` increases.
    pub fn exact_values(&mut self, t: f64) -> Vec<f64> {
        if !self.reference.uses_tracer() {
            return self.points.iter().map(|&x| self.reference.density(x, t)).collect();
        }
        if t < self.traced_t {
            for (s, p) in self.traced.iter_mut().zip(&self.points) {
                *s = [p[0], p[1], 0.0];
            }
            self.traced_t = 0.0;
        }
        let dt = t - self.traced_t;
        let problem = self.reference.problem().clone();
        let substep = self.reference.substep();
        for s in self.traced.iter_mut() {
            advance_rk4(&problem.velocity, s, dt, substep);
        }
        self.traced_t = t;
        self.traced.iter().map(|s| problem.initial.eval([s[0], s[1]]) / s[2].exp()).collect()
    }

    fn numerical_values(&self, r: &DensityState) -> Vec<f64> {
        let n = self.tab.n_points;
        let mut out = Vec::with_capacity(self.points.len());
        for c in 0..self.disc.mesh().n_cells() {
            let rc = r.cell(c);
            for q in 0..n {
                out.push(self.tab.eval(q, rc));
            }
        }
        out
    }

    /// Total mass and smallest value at the error nodes.
    pub fn stats(&self, r: &DensityState) -> (f64, f64) {
        let vals = self.numerical_values(r);
        let n = self.tab.n_points;
        let vol = self.disc.mesh().cell_volume();
        let mass = vals.iter().enumerate().map(|(k, v)| vol * self.weights[k % n] * v).sum();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        (mass, min)
    }

    pub fn error_norms(&mut self, r: &DensityState, t: f64) -> ErrorReport {
        let exact = self.exact_values(t);
        self.compare(r, &exact, t)
    }

    fn compare(&self, r: &DensityState, exact: &[f64], t: f64) -> ErrorReport {
        let vals = self.numerical_values(r);
        let n = self.tab.n_points;
        let vol = self.disc.mesh().cell_volume();
        let (mut l1, mut l2, mut kl, mut mass) = (0.0, 0.0, 0.0, 0.0);
        let mut min = f64::INFINITY;
        for (k, (&v, &e)) in vals.iter().zip(exact).enumerate() {
            let w = vol * self.weights[k % n];
            let d = v - e;
            l1 += w * d.abs();
            l2 += w * d * d;
            mass += w * v;
            min = min.min(v);
            if v > 0.0 {
                kl += w * kl_integrand(e, v);
            } else {
                kl = f64::INFINITY;
            }
        }
        ErrorReport { t, l1, l2: l2.sqrt(), kl, mass, min_density: min, limiter_activations: 0 }
    }

    /// Error report for every sample of a trajectory.
    pub fn trajectory_errors(&mut self, traj: &Trajectory) -> Vec<ErrorReport> {
        traj.samples
            .iter()
            .map(|s| {
                let mut rep = self.error_norms(&s.state, s.t);
                rep.limiter_activations = s.limiter_activations;
                rep
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanErrors {
    pub l1: f64,
    pub l2: f64,
    pub kl: f64,
}

/// Arithmetic means over all samples, `t = 0` included.
pub fn mean_error_over_time(reports: &[ErrorReport]) -> Result<MeanErrors> {
    if reports.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let n = reports.len() as f64;
    Ok(MeanErrors {
        l1: reports.iter().map(|r| r.l1).sum::<f64>() / n,
        l2: reports.iter().map(|r| r.l2).sum::<f64>() / n,
        kl: reports.iter().map(|r| r.kl).sum::<f64>() / n,
    })
}

/// `log(e_coarse / e_fine) / log(m_fine / m_coarse)`, or `None` when either
/// error is not a positive finite number.
pub fn observed_order(e_coarse: f64, e_fine: f64, m_coarse: usize, m_fine: usize) -> Option<f64> {
    let ok = |e: f64| e.is_finite() && e > 0.0;
    if !ok(e_coarse) || !ok(e_fine) {
        return None;
    }
    Some((e_coarse / e_fine).ln() / (m_fine as f64 / m_coarse as f64).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: SchemeKind,
    pub m: usize,
    pub h: f64,
    pub means: Option<MeanErrors>,
    pub order_l1: Option<f64>,
    pub order_l2: Option<f64>,
    pub order_kl: Option<f64>,
    /// `ok`, or a description of the failure.
    pub status: String,
}

/// Fills in orders between consecutive rows of the same scheme.
pub fn convergence_table(rows: Vec<(SchemeKind, usize, Option<MeanErrors>, String)>) -> Vec<ConvergenceRow> {
    let mut out: Vec<ConvergenceRow> = Vec::with_capacity(rows.len());
    for (scheme, m, means, status) in rows {
        let prev = out.iter().rev().find(|r| r.scheme == scheme);
        let order = |f: fn(&MeanErrors) -> f64| -> Option<f64> {
            let p = prev?;
            observed_order(f(p.means.as_ref()?), f(means.as_ref()?), p.m, m)
        };
        let row = ConvergenceRow {
            scheme,
            m,
            h: 1.0 / m as f64,
            means,
            order_l1: order(|e| e.l1),
            order_l2: order(|e| e.l2),
            order_kl: order(|e| e.kl),
            status,
        };
        out.push(row);
    }
    out
}

/// CSV rendering; order columns are dropped when each scheme has one row.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let with_orders = rows.iter().any(|r| rows.iter().filter(|s| s.scheme == r.scheme).count() > 1);
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let mut s = String::new();
    if with_orders {
        s.push_str("scheme,m,h,mean_L1,order_L1,mean_L2,order_L2,mean_KL,order_KL,status\n");
    } else {
        s.push_str("scheme,m,h,mean_L1,mean_L2,mean_KL,status\n");
    }
    for r in rows {
        let (l1, l2, kl) = match r.means {
            Some(e) => (fmt_num(e.l1), fmt_num(e.l2), fmt_num(e.kl)),
            None => Default::default(),
        };
        if with_orders {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.scheme,
                r.m,
                fmt_num(r.h),
                l1,
                opt(r.order_l1),
                l2,
                opt(r.order_l2),
                kl,
                opt(r.order_kl),
                r.status
            ));
        } else {
            s.push_str(&format!("{},{},{},{},{},{},{}\n", r.scheme, r.m, fmt_num(r.h), l1, l2, kl, r.status));
        }
    }
    s
}

/// Right-hand side of the KL-growth identity for a DFRG state.
#[derive(Debug, Clone, PartialEq)]
pub struct KlGrowth {
    /// Identity value for each probe.
    pub values: Vec<f64>,
    /// Interface jump terms `rho |u.nu| (log z - z + 1)`, `z` the upstream
    /// over downstream trace ratio; never positive.
    pub interface_term: f64,
    /// The same restricted to faces where `u.nu` keeps one sign.
    pub interface_term_single_sign: f64,
    /// Faces whose normal velocity changes sign along the face.
    pub mixed_faces: usize,
}

/// Evaluates, for every probe `sigma`, with `psi = rho - sigma`,
///
/// `sum_k [ -int psi rho_t / rho_h - int psi div(rho_h u) / rho_h
///         + oint psi (rho_own u.nu - f) / rho_own ] + int rho_h_t
///  + sum_faces int rho |u.nu| (log z - z + 1)`
///
/// which equals `d/dt D_KL(rho || rho_h)` when `rho_h` solves DFRG. The
/// semidiscretization must be DFRG with the upwind flux; integrals use
/// its quadrature.
pub fn kl_growth_diagnostic(
    semi: &mut Semidiscretization,
    r: &DensityState,
    reference: &ReferenceSolution,
    t: f64,
    probes: &[DensityState],
) -> Result<KlGrowth> {
    if semi.kind() != SchemeKind::Dfrg {
        return Err(Error::Config("the KL-growth diagnostic needs a DFRG semidiscretization".into()));
    }
    let rdot = semi.eval(r)?;
    let d = semi.disc();
    let vf = semi.velocity();
    let nb = d.n_basis();
    let nqv = d.n_vol_points();
    let nf = d.n_faces();
    let nqf = d.n_face_points();
    let dim = d.mesh().dim();
    let vol = d.mesh().cell_volume();
    let fm = d.mesh().face_measure();
    let inv_h = 1.0 / d.mesh().h();
    let tab = d.vol_tab();
    let traces = d.traces(r);
    let mut fluxes = vec![0.0; d.mesh().interfaces().len() * nqf];
    d.all_fluxes_into(&traces, vf, semi.flux(), &mut fluxes);

    // probe-independent part: int rho_h_t and the interface terms
    let mut base = 0.0;
    let mut values = vec![0.0; probes.len()];
    for c in 0..d.mesh().n_cells() {
        let rc = r.cell(c);
        let dc = rdot.cell(c);
        for q in 0..nqv {
            let row = tab.row(q);
            let grads = &tab.grad[q * nb..(q + 1) * nb];
            let mut val = 0.0;
            let mut dval = 0.0;
            let mut grad = [0.0; 2];
            for i in 0..nb {
                val += row[i] * rc[i];
                dval += row[i] * dc[i];
                grad[0] += grads[i][0] * rc[i] * inv_h;
                grad[1] += grads[i][1] * rc[i] * inv_h;
            }
            if !(val > 0.0) {
                return Err(PositivityLost { cell: c, node: q, value: val, t: Some(t), stage: None }.into());
            }
            let u = vf.vol_u[c * nqv + q];
            let mut div = val * vf.vol_div[c * nqv + q];
            for a in 0..dim {
                div += grad[a] * u[a];
            }
            let w = vol * d.vol_weights()[q];
            base += w * dval;
            let x = d.mesh().to_physical(c, d.vol_points()[q]);
            let exact = reference.density(x, t);
            for (k, p) in probes.iter().enumerate() {
                let psi = exact - tab.eval(q, p.cell(c));
                values[k] -= w * psi * (dval + div) / val;
            }
        }
        for f in 0..nf {
            let ftab = d.face_tab(f);
            for q in 0..nqf {
                let own = traces[(c * nf + f) * nqf + q];
                if !(own > 0.0) {
                    return Err(PositivityLost { cell: c, node: d.face_node_index(f, q), value: own, t: Some(t), stage: None }.into());
                }
                let un = vf.face_un[(c * nf + f) * nqf + q];
                let fo = d.outward_flux(&fluxes, c, f, q);
                let x = d.mesh().to_physical(c, d.face_points(f)[q]);
                let exact = reference.density(x, t);
                let w = fm * d.face_weights()[q];
                for (k, p) in probes.iter().enumerate() {
                    let psi = exact - ftab.eval(q, p.cell(c));
                    values[k] += w * psi * (own * un - fo) / own;
                }
            }
        }
    }

    let mut interface_term = 0.0;
    let mut single = 0.0;
    let mut mixed = 0;
    for (i, itf) in d.mesh().interfaces().iter().enumerate() {
        let un = &vf.iface_un[i * nqf..(i + 1) * nqf];
        let pos = un.iter().any(|&v| v > 0.0);
        let neg = un.iter().any(|&v| v < 0.0);
        let mut face_sum = 0.0;
        for q in 0..nqf {
            let rm = traces[(itf.minus * nf + 2 * itf.axis + 1) * nqf + q];
            let rp = traces[(itf.plus * nf + 2 * itf.axis) * nqf + q];
            let f = fluxes[i * nqf + q];
            debug_assert_eq!(f, upwind_flux(rm, rp, un[q]));
            let z = if un[q] > 0.0 { rm / rp } else { rp / rm };
            let x = d.mesh().to_physical(itf.minus, d.face_points(2 * itf.axis + 1)[q]);
            let exact = reference.density(x, t);
            face_sum += fm * d.face_weights()[q] * exact * un[q].abs() * (z.ln() - z + 1.0);
        }
        interface_term += face_sum;
        if pos && neg {
            mixed += 1;
        } else {
            single += face_sum;
        }
    }
    for v in values.iter_mut() {
        *v += base + interface_term;
    }
    Ok(KlGrowth { values, interface_term, interface_term_single_sign: single, mixed_faces: mixed })
}

/// Central difference of `D_KL(rho || rho_h)` in time, with `rho_h` carried
/// to `t +- delta` by `substeps` SSPRK3 steps of the semidiscretization.
/// KL integrals use `n_rule` Clenshaw-Curtis points per axis and cell.
pub fn kl_time_derivative_fd(
    semi: &mut Semidiscretization,
    r: &DensityState,
    reference: &ReferenceSolution,
    t: f64,
    delta: f64,
    substeps: usize,
    n_rule: usize,
) -> Result<f64> {
    let disc = semi.disc().clone();
    let mut eval = ErrorEvaluator::with_points(&disc, reference.clone(), n_rule)?;
    let mut kl_at = |dir: f64| -> Result<f64> {
        let mut x = r.coeffs.clone();
        let mut next = x.clone();
        let mut work = Ssprk3Work::new(x.len());
        let h = dir * delta / substeps as f64;
        for k in 0..substeps {
            let mut rhs = |y: &[f64], _t: f64, out: &mut [f64]| semi.rhs(y, out);
            ssprk3_step(&mut rhs, &x, t + k as f64 * h, h, &mut next, &mut work, &mut |_, _| 0).map_err(|e| e.1)?;
            std::mem::swap(&mut x, &mut next);
        }
        let state = DensityState::new(x, r.n_basis);
        Ok(eval.error_norms(&state, t + dir * delta).kl)
    };
    let plus = kl_at(1.0)?;
    let minus = kl_at(-1.0)?;
    Ok((plus - minus) / (2.0 * delta))
}
