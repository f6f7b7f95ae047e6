//! Right-hand sides `r' = RHS(r)` for DG and DFRG, and the Zhang-Shu
//! positivity limiter used by DG(+).

use std::fmt;
use std::str::FromStr;

use crate::assembly::{DensityState, Discretization, FluxKind, VelocityField};
use crate::dense::{cholesky_in_place, cholesky_solve};
use crate::error::{Error, PositivityLost, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Dg,
    /// DG with the positivity limiter.
    DgPlus,
    Dfrg,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Dg, SchemeKind::DgPlus, SchemeKind::Dfrg];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Dg => "dg",
            SchemeKind::DgPlus => "dg_plus",
            SchemeKind::Dfrg => "dfrg",
        }
    }

    pub fn check_flux(self, flux: FluxKind) -> Result<()> {
        if self == SchemeKind::Dfrg && flux != FluxKind::Upwind {
            return Err(Error::Config("dfrg is defined with the upwind flux only".into()));
        }
        Ok(())
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dg" => Ok(SchemeKind::Dg),
            "dg_plus" | "dg+" => Ok(SchemeKind::DgPlus),
            "dfrg" => Ok(SchemeKind::Dfrg),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Spatial discretization of one scheme with its precomputed blocks and
/// scratch buffers.
#[derive(Debug, Clone)]
pub struct Semidiscretization {
    disc: Discretization,
    vel: VelocityField,
    kind: SchemeKind,
    flux: FluxKind,
    /// DG stiffness blocks, `nc * nb * nb`.
    dg_k: Vec<f64>,
    /// Cholesky factor of the physical DG mass block.
    mass_l: Vec<f64>,
    traces: Vec<f64>,
    fluxes: Vec<f64>,
    mat: Vec<f64>,
}

impl Semidiscretization {
    pub fn new(disc: Discretization, vel: VelocityField, kind: SchemeKind, flux: FluxKind) -> Result<Self> {
        kind.check_flux(flux)?;
        let nb = disc.n_basis();
        let nc = disc.mesh().n_cells();
        let mut dg_k = Vec::with_capacity(nc * nb * nb);
        for c in 0..nc {
            dg_k.extend(disc.assemble_dg_stiffness(c, &vel));
        }
        let mut mass_l = disc.assemble_mass(0);
        if !cholesky_in_place(&mut mass_l, nb) {
            return Err(Error::SingularMass(0));
        }
        let traces = vec![0.0; nc * disc.n_faces() * disc.n_face_points()];
        let fluxes = vec![0.0; disc.mesh().interfaces().len() * disc.n_face_points()];
        Ok(Self {
            disc,
            vel,
            kind,
            flux,
            dg_k,
            mass_l,
            traces,
            fluxes,
            mat: vec![0.0; nb * nb],
        })
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn velocity(&self) -> &VelocityField {
        &self.vel
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn flux(&self) -> FluxKind {
        self.flux
    }

    /// Evaluates the scheme's right-hand side into `out`.
    pub fn rhs(&mut self, r: &[f64], out: &mut [f64]) -> Result<()> {
        match self.kind {
            SchemeKind::Dg | SchemeKind::DgPlus => {
                self.dg_rhs(r, out);
                Ok(())
            }
            SchemeKind::Dfrg => self.dfrg_rhs(r, out),
        }
    }

    pub fn eval(&mut self, r: &DensityState) -> Result<DensityState> {
        let mut out = self.disc.zero_state();
        self.rhs(&r.coeffs, &mut out.coeffs)?;
        Ok(out)
    }

    fn update_fluxes(&mut self, r: &[f64]) {
        self.disc.traces_into(r, &mut self.traces);
        self.disc.all_fluxes_into(&self.traces, &self.vel, self.flux, &mut self.fluxes);
    }

    /// Per cell `M r' = -(K r + g)` with plain weights.
    pub fn dg_rhs(&mut self, r: &[f64], out: &mut [f64]) {
        self.update_fluxes(r);
        let d = &self.disc;
        let nb = d.n_basis();
        let nf = d.n_faces();
        let nqf = d.n_face_points();
        let fm = d.mesh().face_measure();
        for c in 0..d.mesh().n_cells() {
            let rc = &r[c * nb..(c + 1) * nb];
            let k = &self.dg_k[c * nb * nb..(c + 1) * nb * nb];
            let b = &mut out[c * nb..(c + 1) * nb];
            for i in 0..nb {
                b[i] = k[i * nb..(i + 1) * nb].iter().zip(rc).map(|(a, x)| a * x).sum();
            }
            for f in 0..nf {
                let tab = d.face_tab(f);
                for q in 0..nqf {
                    let w = fm * d.face_weights()[q] * d.outward_flux(&self.fluxes, c, f, q);
                    for (bi, p) in b.iter_mut().zip(tab.row(q)) {
                        *bi += w * p;
                    }
                }
            }
            cholesky_solve(&self.mass_l, nb, b);
            for v in b.iter_mut() {
                *v = -*v;
            }
        }
    }

    /// Per cell `M^rho r' = -(K^rho r + g^rho)`.
    pub fn dfrg_rhs(&mut self, r: &[f64], out: &mut [f64]) -> Result<()> {
        self.update_fluxes(r);
        let d = &self.disc;
        let nb = d.n_basis();
        let nf = d.n_faces();
        let nqf = d.n_face_points();
        let nqv = d.n_vol_points();
        let dim = d.mesh().dim();
        let vol = d.mesh().cell_volume();
        let fm = d.mesh().face_measure();
        let inv_h = 1.0 / d.mesh().h();
        let tab = d.vol_tab();
        let m = &mut self.mat;
        for c in 0..d.mesh().n_cells() {
            let rc = &r[c * nb..(c + 1) * nb];
            let b = &mut out[c * nb..(c + 1) * nb];
            b.fill(0.0);
            m.fill(0.0);
            for q in 0..nqv {
                let row = tab.row(q);
                let grads = &tab.grad[q * nb..(q + 1) * nb];
                let mut val = 0.0;
                let mut grad = [0.0; 2];
                for i in 0..nb {
                    val += row[i] * rc[i];
                    grad[0] += grads[i][0] * rc[i];
                    grad[1] += grads[i][1] * rc[i];
                }
                if !(val > 0.0) {
                    return Err(PositivityLost { cell: c, node: q, value: val, t: None, stage: None }.into());
                }
                let u = self.vel.vol_u[c * nqv + q];
                let mut adv = 0.0;
                for a in 0..dim {
                    adv += grad[a] * inv_h * u[a];
                }
                let w = vol * d.vol_weights()[q] / val;
                let s = w * (adv + val * self.vel.vol_div[c * nqv + q]);
                for i in 0..nb {
                    b[i] += s * row[i];
                    let wi = w * row[i];
                    for j in i..nb {
                        m[i * nb + j] += wi * row[j];
                    }
                }
            }
            for f in 0..nf {
                let ftab = d.face_tab(f);
                for q in 0..nqf {
                    let own = self.traces[(c * nf + f) * nqf + q];
                    if !(own > 0.0) {
                        return Err(PositivityLost { cell: c, node: d.face_node_index(f, q), value: own, t: None, stage: None }.into());
                    }
                    let un = self.vel.face_un[(c * nf + f) * nqf + q];
                    let fo = d.outward_flux(&self.fluxes, c, f, q);
                    // K face term plus g
                    let s = fm * d.face_weights()[q] * (fo - own * un) / own;
                    for (bi, p) in b.iter_mut().zip(ftab.row(q)) {
                        *bi += s * p;
                    }
                }
            }
            for i in 0..nb {
                for j in 0..i {
                    m[i * nb + j] = m[j * nb + i];
                }
            }
            if !cholesky_in_place(m, nb) {
                return Err(Error::SingularMass(c));
            }
            cholesky_solve(m, nb, b);
            for v in b.iter_mut() {
                *v = -*v;
            }
        }
        Ok(())
    }
}

/// Zhang-Shu limiter. Returns the number of modified cells.
pub fn apply_positivity_limiter(disc: &Discretization, r: &mut [f64], eps: f64) -> usize {
    let nb = disc.n_basis();
    let tab = disc.vol_tab();
    let mut count = 0;
    for c in 0..disc.mesh().n_cells() {
        let rc = &mut r[c * nb..(c + 1) * nb];
        let mut mean = 0.0;
        let mut min = rc.iter().copied().fold(f64::INFINITY, f64::min);
        for q in 0..tab.n_points {
            let v = tab.eval(q, rc);
            mean += disc.vol_weights()[q] * v;
            min = min.min(v);
        }
        if mean <= 0.0 {
            rc.fill(eps);
            count += 1;
        } else if min < eps {
            // the small shrink keeps rounding in `mean + theta (v - mean)`
            // from landing below `eps` when the mean is large
            let theta = ((mean - eps) / (mean - min) * (1.0 - 4.0 * f64::EPSILON)).clamp(0.0, 1.0);
            for v in rc.iter_mut() {
                *v = mean + theta * (*v - mean);
            }
            count += 1;
        }
    }
    count
}

pub const LIMITER_EPS: f64 = 1e-15;
