//! Per-cell assembly of DG and Fisher-Rao blocks and interface fluxes.
//!
//! Sign convention: the semidiscrete system is `M r' + K r + g = 0` with
//! the row index as test function. Blocks are dense row-major `nb x nb`
//! matrices with `nb = (p + 1)^dim`.
//!
//! Quadrature nodes of a cell are numbered volume first (`0..nq^dim`, x
//! fastest), then face by face in face order, `nq^(dim-1)` nodes per face.

use crate::basis::{clenshaw_curtis, QuadRule, TensorBasis};
use crate::error::{Error, PositivityLost, Result};
use crate::mesh::{Face, Mesh, Side};
use crate::problems::Velocity;

/// Basis values and reference gradients tabulated at a point set.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_points: usize,
    pub n_basis: usize,
    /// `phi[q * n_basis + i]`
    pub phi: Vec<f64>,
    /// Gradients on the reference cell.
    pub grad: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(basis: &TensorBasis, points: &[[f64; 2]]) -> Self {
        let nb = basis.len();
        let mut phi = Vec::with_capacity(points.len() * nb);
        let mut grad = Vec::with_capacity(points.len() * nb);
        for &x in points {
            for i in 0..nb {
                phi.push(basis.value(i, x));
                grad.push(basis.gradient(i, x));
            }
        }
        Self { n_points: points.len(), n_basis: nb, phi, grad }
    }

    #[inline]
    pub fn row(&self, q: usize) -> &[f64] {
        &self.phi[q * self.n_basis..(q + 1) * self.n_basis]
    }

    #[inline]
    pub fn eval(&self, q: usize, coeffs: &[f64]) -> f64 {
        self.row(q).iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

/// Coefficient vector of a piecewise polynomial density.
///
/// Layout: `coeffs[cell * n_basis + local_node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub coeffs: Vec<f64>,
    pub n_basis: usize,
}

impl DensityState {
    pub fn new(coeffs: Vec<f64>, n_basis: usize) -> Self {
        debug_assert_eq!(coeffs.len() % n_basis, 0);
        Self { coeffs, n_basis }
    }

    pub fn n_cells(&self) -> usize {
        self.coeffs.len() / self.n_basis
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        &self.coeffs[c * self.n_basis..(c + 1) * self.n_basis]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.coeffs[c * self.n_basis..(c + 1) * self.n_basis]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityMode {
    /// Lagrange interpolant `u = sum_l u_l phi_l` in every cell.
    Nodal,
    /// Exact velocity at every quadrature node.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxKind {
    Upwind,
    /// `alpha = None` uses the largest `|u . nu|` on the face.
    LaxFriedrichs { alpha: Option<f64> },
    Kinetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Plain,
    FisherRao,
}

/// Upwind flux for normal velocity `un` (normal from minus to plus).
pub fn upwind_flux(rho_minus: f64, rho_plus: f64, un: f64) -> f64 {
    if un > 0.0 {
        rho_minus * un
    } else if un < 0.0 {
        rho_plus * un
    } else {
        0.0
    }
}

pub fn lax_friedrichs_flux(rho_minus: f64, rho_plus: f64, un: f64, alpha: f64) -> f64 {
    0.5 * (rho_plus + rho_minus) * un - 0.5 * alpha * (rho_plus - rho_minus)
}

/// Kinetic flux vector splitting with one-sided normal velocities.
pub fn kinetic_flux(rho_minus: f64, rho_plus: f64, un_minus: f64, un_plus: f64) -> f64 {
    rho_minus * un_minus.max(0.0) + rho_plus * un_plus.min(0.0)
}

/// Mesh, basis and solver quadrature with tabulated values.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    basis: TensorBasis,
    quad: QuadRule,
    vol_points: Vec<[f64; 2]>,
    /// Reference weights, summing to one.
    vol_weights: Vec<f64>,
    vol: Tabulation,
    face_points: Vec<Vec<[f64; 2]>>,
    face_weights: Vec<f64>,
    face: Vec<Tabulation>,
    /// `face_iface[cell * n_faces + f]`
    face_iface: Vec<usize>,
    mass_ref: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Mesh, order: usize, n_q: usize) -> Result<Self> {
        let dim = mesh.dim();
        let basis = TensorBasis::new(dim, order);
        let quad = clenshaw_curtis(n_q)?;
        let tensor = quad.tensor(dim);
        let vol_points: Vec<[f64; 2]> = tensor.iter().map(|p| p.0).collect();
        let vol_weights: Vec<f64> = tensor.iter().map(|p| p.1).collect();
        let vol = Tabulation::new(&basis, &vol_points);

        let mut face_points = Vec::new();
        let mut face = Vec::new();
        for f in 0..2 * dim {
            let Face { axis, side } = Face::from_index(f);
            let fixed = if side == Side::Upper { 1.0 } else { 0.0 };
            let pts: Vec<[f64; 2]> = if dim == 1 {
                vec![[fixed, 0.0]]
            } else {
                quad.nodes
                    .iter()
                    .map(|&s| if axis == 0 { [fixed, s] } else { [s, fixed] })
                    .collect()
            };
            face.push(Tabulation::new(&basis, &pts));
            face_points.push(pts);
        }
        let face_weights = if dim == 1 { vec![1.0] } else { quad.weights.clone() };

        let nf = 2 * dim;
        let mut face_iface = Vec::with_capacity(mesh.n_cells() * nf);
        for c in 0..mesh.n_cells() {
            for f in 0..nf {
                face_iface.push(mesh.face_interface(c, Face::from_index(f)));
            }
        }

        let nb = basis.len();
        let mut mass_ref = vec![0.0; nb * nb];
        for q in 0..vol.n_points {
            let row = vol.row(q);
            for i in 0..nb {
                for j in i..nb {
                    mass_ref[i * nb + j] += vol_weights[q] * row[i] * row[j];
                }
            }
        }
        for i in 0..nb {
            for j in 0..i {
                mass_ref[i * nb + j] = mass_ref[j * nb + i];
            }
        }

        Ok(Self {
            mesh,
            basis,
            quad,
            vol_points,
            vol_weights,
            vol,
            face_points,
            face_weights,
            face,
            face_iface,
            mass_ref,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn quad(&self) -> &QuadRule {
        &self.quad
    }

    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.basis.len() * self.mesh.n_cells()
    }

    pub fn n_faces(&self) -> usize {
        2 * self.mesh.dim()
    }

    pub fn vol_points(&self) -> &[[f64; 2]] {
        &self.vol_points
    }

    pub fn vol_weights(&self) -> &[f64] {
        &self.vol_weights
    }

    pub fn vol_tab(&self) -> &Tabulation {
        &self.vol
    }

    pub fn n_vol_points(&self) -> usize {
        self.vol.n_points
    }

    pub fn n_face_points(&self) -> usize {
        self.face_weights.len()
    }

    pub fn face_points(&self, f: usize) -> &[[f64; 2]] {
        &self.face_points[f]
    }

    pub fn face_tab(&self, f: usize) -> &Tabulation {
        &self.face[f]
    }

    /// Reference face weights; multiply by the face measure.
    pub fn face_weights(&self) -> &[f64] {
        &self.face_weights
    }

    pub fn face_interface(&self, cell: usize, f: usize) -> usize {
        self.face_iface[cell * self.n_faces() + f]
    }

    /// Reference mass matrix (unit cell).
    pub fn reference_mass(&self) -> &[f64] {
        &self.mass_ref
    }

    pub fn zero_state(&self) -> DensityState {
        DensityState::new(vec![0.0; self.n_dofs()], self.n_basis())
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> DensityState {
        let nb = self.n_basis();
        let mut coeffs = Vec::with_capacity(self.n_dofs());
        for c in 0..self.mesh.n_cells() {
            for i in 0..nb {
                coeffs.push(f(self.mesh.to_physical(c, self.basis.node(i))));
            }
        }
        DensityState::new(coeffs, nb)
    }

    pub fn eval_local(&self, r: &DensityState, cell: usize, local: [f64; 2]) -> f64 {
        r.cell(cell).iter().enumerate().map(|(i, v)| v * self.basis.value(i, local)).sum()
    }

    pub fn eval_at(&self, r: &DensityState, x: &[f64]) -> Result<f64> {
        let (c, local) = self.mesh.locate(x)?;
        Ok(self.eval_local(r, c, local))
    }

    /// Cell average under the solver rule.
    pub fn cell_mean(&self, coeffs: &[f64]) -> f64 {
        (0..self.vol.n_points).map(|q| self.vol_weights[q] * self.vol.eval(q, coeffs)).sum()
    }

    pub fn total_mass(&self, r: &DensityState) -> f64 {
        let vol = self.mesh.cell_volume();
        (0..self.mesh.n_cells()).map(|c| vol * self.cell_mean(r.cell(c))).sum()
    }

    /// Own-cell traces at all face nodes: `out[(cell * n_faces + f) * nqf + q]`.
    pub fn traces_into(&self, r: &[f64], out: &mut [f64]) {
        let nb = self.n_basis();
        let nf = self.n_faces();
        let nqf = self.n_face_points();
        for c in 0..self.mesh.n_cells() {
            let rc = &r[c * nb..(c + 1) * nb];
            for f in 0..nf {
                let tab = &self.face[f];
                for q in 0..nqf {
                    out[(c * nf + f) * nqf + q] = tab.eval(q, rc);
                }
            }
        }
    }

    pub fn traces(&self, r: &DensityState) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_cells() * self.n_faces() * self.n_face_points()];
        self.traces_into(&r.coeffs, &mut out);
        out
    }

    /// Density values at the volume nodes of a cell, rejecting non-positive
    /// ones.
    fn positive_vol_values(&self, cell: usize, rc: &[f64], out: &mut [f64]) -> Result<(), PositivityLost> {
        for (q, o) in out.iter_mut().enumerate() {
            let v = self.vol.eval(q, rc);
            if !(v > 0.0) {
                return Err(PositivityLost { cell, node: q, value: v, t: None, stage: None });
            }
            *o = v;
        }
        Ok(())
    }

    pub(crate) fn face_node_index(&self, f: usize, q: usize) -> usize {
        self.vol.n_points + f * self.n_face_points() + q
    }

    pub fn assemble_mass(&self, _cell: usize) -> Vec<f64> {
        let vol = self.mesh.cell_volume();
        self.mass_ref.iter().map(|m| m * vol).collect()
    }

    pub fn assemble_fr_mass(&self, cell: usize, r: &DensityState) -> Result<Vec<f64>> {
        let nb = self.n_basis();
        let mut rho = vec![0.0; self.vol.n_points];
        self.positive_vol_values(cell, r.cell(cell), &mut rho)?;
        let vol = self.mesh.cell_volume();
        let mut m = vec![0.0; nb * nb];
        for (q, &rq) in rho.iter().enumerate() {
            let w = vol * self.vol_weights[q] / rq;
            let row = self.vol.row(q);
            for i in 0..nb {
                for j in i..nb {
                    m[i * nb + j] += w * row[i] * row[j];
                }
            }
        }
        for i in 0..nb {
            for j in 0..i {
                m[i * nb + j] = m[j * nb + i];
            }
        }
        Ok(m)
    }

    /// `K_ij = int phi_i Dphi_j . u / rho + int phi_i phi_j div u / rho
    ///        - oint phi_i phi_j u . nu / rho_own`.
    pub fn assemble_fr_stiffness(&self, cell: usize, r: &DensityState, vf: &VelocityField) -> Result<Vec<f64>> {
        let nb = self.n_basis();
        let nqv = self.vol.n_points;
        let mut rho = vec![0.0; nqv];
        self.positive_vol_values(cell, r.cell(cell), &mut rho)?;
        let vol = self.mesh.cell_volume();
        let inv_h = 1.0 / self.mesh.h();
        let dim = self.mesh.dim();
        let mut k = vec![0.0; nb * nb];
        for q in 0..nqv {
            let w = vol * self.vol_weights[q] / rho[q];
            let u = vf.vol_u[cell * nqv + q];
            let div = vf.vol_div[cell * nqv + q];
            let row = self.vol.row(q);
            for i in 0..nb {
                for j in 0..nb {
                    let g = self.vol.grad[q * nb + j];
                    let mut adv = 0.0;
                    for a in 0..dim {
                        adv += g[a] * inv_h * u[a];
                    }
                    k[i * nb + j] += w * row[i] * (adv + row[j] * div);
                }
            }
        }
        let nf = self.n_faces();
        let nqf = self.n_face_points();
        let fm = self.mesh.face_measure();
        let rc = r.cell(cell);
        for f in 0..nf {
            let tab = &self.face[f];
            for q in 0..nqf {
                let own = tab.eval(q, rc);
                if !(own > 0.0) {
                    return Err(PositivityLost { cell, node: self.face_node_index(f, q), value: own, t: None, stage: None }.into());
                }
                let w = fm * self.face_weights[q] * vf.face_un[(cell * nf + f) * nqf + q] / own;
                let row = tab.row(q);
                for i in 0..nb {
                    for j in 0..nb {
                        k[i * nb + j] -= w * row[i] * row[j];
                    }
                }
            }
        }
        Ok(k)
    }

    /// `K_ij = -int Dphi_i . u phi_j`.
    pub fn assemble_dg_stiffness(&self, cell: usize, vf: &VelocityField) -> Vec<f64> {
        let nb = self.n_basis();
        let nqv = self.vol.n_points;
        let vol = self.mesh.cell_volume();
        let inv_h = 1.0 / self.mesh.h();
        let dim = self.mesh.dim();
        let mut k = vec![0.0; nb * nb];
        for q in 0..nqv {
            let w = vol * self.vol_weights[q];
            let u = vf.vol_u[cell * nqv + q];
            let row = self.vol.row(q);
            for i in 0..nb {
                let g = self.vol.grad[q * nb + i];
                let mut adv = 0.0;
                for a in 0..dim {
                    adv += g[a] * inv_h * u[a];
                }
                for j in 0..nb {
                    k[i * nb + j] -= w * adv * row[j];
                }
            }
        }
        k
    }

    /// Numerical flux at the nodes of one interface, normal from minus to
    /// plus. `traces` is the output of [`Discretization::traces`].
    pub fn interface_flux_into(&self, iface: usize, traces: &[f64], vf: &VelocityField, kind: FluxKind, out: &mut [f64]) {
        let itf = self.mesh.interfaces()[iface];
        let nf = self.n_faces();
        let nqf = self.n_face_points();
        let fm = 2 * itf.axis + 1;
        let fp = 2 * itf.axis;
        let tm = &traces[(itf.minus * nf + fm) * nqf..][..nqf];
        let tp = &traces[(itf.plus * nf + fp) * nqf..][..nqf];
        let un = &vf.iface_un[iface * nqf..][..nqf];
        match kind {
            FluxKind::Upwind => {
                for q in 0..nqf {
                    out[q] = upwind_flux(tm[q], tp[q], un[q]);
                }
            }
            FluxKind::LaxFriedrichs { alpha } => {
                let alpha = alpha.unwrap_or_else(|| un.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
                for q in 0..nqf {
                    out[q] = lax_friedrichs_flux(tm[q], tp[q], un[q], alpha);
                }
            }
            FluxKind::Kinetic => {
                let um = &vf.face_un[(itf.minus * nf + fm) * nqf..][..nqf];
                let up = &vf.face_un[(itf.plus * nf + fp) * nqf..][..nqf];
                for q in 0..nqf {
                    // the plus side's outward normal is -nu
                    out[q] = kinetic_flux(tm[q], tp[q], um[q], -up[q]);
                }
            }
        }
    }

    pub fn interface_flux(&self, iface: usize, r: &DensityState, vf: &VelocityField, kind: FluxKind) -> Vec<f64> {
        let traces = self.traces(r);
        let mut out = vec![0.0; self.n_face_points()];
        self.interface_flux_into(iface, &traces, vf, kind, &mut out);
        out
    }

    /// Fluxes on every interface: `out[iface * nqf + q]`.
    pub fn all_fluxes_into(&self, traces: &[f64], vf: &VelocityField, kind: FluxKind, out: &mut [f64]) {
        let nqf = self.n_face_points();
        for i in 0..self.mesh.interfaces().len() {
            self.interface_flux_into(i, traces, vf, kind, &mut out[i * nqf..(i + 1) * nqf]);
        }
    }

    /// Flux leaving `cell` through face `f` at node `q`.
    #[inline]
    pub fn outward_flux(&self, fluxes: &[f64], cell: usize, f: usize, q: usize) -> f64 {
        let v = fluxes[self.face_interface(cell, f) * self.n_face_points() + q];
        if f % 2 == 1 {
            v
        } else {
            -v
        }
    }

    /// `g_i = oint phi_i f_out [/ rho_own]`.
    pub fn assemble_flux_vector(
        &self,
        cell: usize,
        r: &DensityState,
        vf: &VelocityField,
        kind: FluxKind,
        weighting: Weighting,
    ) -> Result<Vec<f64>> {
        let traces = self.traces(r);
        let mut fluxes = vec![0.0; self.mesh.interfaces().len() * self.n_face_points()];
        self.all_fluxes_into(&traces, vf, kind, &mut fluxes);
        let nb = self.n_basis();
        let nf = self.n_faces();
        let nqf = self.n_face_points();
        let fm = self.mesh.face_measure();
        let mut g = vec![0.0; nb];
        for f in 0..nf {
            let tab = &self.face[f];
            for q in 0..nqf {
                let mut w = fm * self.face_weights[q] * self.outward_flux(&fluxes, cell, f, q);
                if weighting == Weighting::FisherRao {
                    let own = traces[(cell * nf + f) * nqf + q];
                    if !(own > 0.0) {
                        return Err(PositivityLost { cell, node: self.face_node_index(f, q), value: own, t: None, stage: None }.into());
                    }
                    w /= own;
                }
                for (gi, p) in g.iter_mut().zip(tab.row(q)) {
                    *gi += w * p;
                }
            }
        }
        Ok(g)
    }
}

/// Steady velocity sampled at the solver's quadrature nodes.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub analytic: Velocity,
    pub mode: VelocityMode,
    /// `nodal[cell * nb + l]`
    pub nodal: Vec<[f64; 2]>,
    /// `vol_u[cell * nqv + q]`
    pub vol_u: Vec<[f64; 2]>,
    pub vol_div: Vec<f64>,
    /// Own-trace `u . nu_out` at `[(cell * n_faces + f) * nqf + q]`.
    pub face_un: Vec<f64>,
    /// Face velocity used by upwind and Lax-Friedrichs fluxes, mean of the
    /// two traces, normal from minus to plus: `[iface * nqf + q]`.
    pub iface_un: Vec<f64>,
    /// Largest `|u|` (1D) or `|u_x| + |u_y|` (2D) over basis nodes.
    pub u_max: f64,
}

impl VelocityField {
    pub fn new(disc: &Discretization, velocity: Velocity, mode: VelocityMode) -> Result<Self> {
        let mesh = disc.mesh();
        let dim = mesh.dim();
        if velocity.dim() != dim {
            return Err(Error::Config(format!("velocity is {}D but mesh is {}D", velocity.dim(), dim)));
        }
        let nb = disc.n_basis();
        let nc = mesh.n_cells();
        let inv_h = 1.0 / mesh.h();
        let mut nodal = Vec::with_capacity(nc * nb);
        for c in 0..nc {
            for i in 0..nb {
                nodal.push(velocity.eval(mesh.to_physical(c, disc.basis().node(i))));
            }
        }
        let u_max = nodal
            .iter()
            .map(|u| if dim == 1 { u[0].abs() } else { u[0].abs() + u[1].abs() })
            .fold(0.0, f64::max);

        let interp = |c: usize, tab: &Tabulation, q: usize| -> [f64; 2] {
            let mut u = [0.0; 2];
            for (l, p) in tab.row(q).iter().enumerate() {
                let ul = nodal[c * nb + l];
                u[0] += p * ul[0];
                u[1] += p * ul[1];
            }
            u
        };

        let nqv = disc.n_vol_points();
        let mut vol_u = Vec::with_capacity(nc * nqv);
        let mut vol_div = Vec::with_capacity(nc * nqv);
        for c in 0..nc {
            for q in 0..nqv {
                match mode {
                    VelocityMode::Nodal => {
                        vol_u.push(interp(c, disc.vol_tab(), q));
                        let mut div = 0.0;
                        for l in 0..nb {
                            let g = disc.vol_tab().grad[q * nb + l];
                            let ul = nodal[c * nb + l];
                            for a in 0..dim {
                                div += g[a] * inv_h * ul[a];
                            }
                        }
                        vol_div.push(div);
                    }
                    VelocityMode::Analytic => {
                        let x = mesh.to_physical(c, disc.vol_points()[q]);
                        vol_u.push(velocity.eval(x));
                        vol_div.push(velocity.divergence(x));
                    }
                }
            }
        }

        let nf = disc.n_faces();
        let nqf = disc.n_face_points();
        let mut face_un = Vec::with_capacity(nc * nf * nqf);
        for c in 0..nc {
            for f in 0..nf {
                let face = Face::from_index(f);
                for q in 0..nqf {
                    let u = match mode {
                        VelocityMode::Nodal => interp(c, disc.face_tab(f), q),
                        VelocityMode::Analytic => velocity.eval(mesh.to_physical(c, disc.face_points(f)[q])),
                    };
                    face_un.push(u[face.axis] * face.side.sign());
                }
            }
        }
        let mut iface_un = Vec::with_capacity(mesh.interfaces().len() * nqf);
        for itf in mesh.interfaces() {
            let fm = 2 * itf.axis + 1;
            let fp = 2 * itf.axis;
            for q in 0..nqf {
                let um = face_un[(itf.minus * nf + fm) * nqf + q];
                let up = -face_un[(itf.plus * nf + fp) * nqf + q];
                iface_un.push(0.5 * (um + up));
            }
        }
        Ok(Self { analytic: velocity, mode, nodal, vol_u, vol_div, face_un, iface_un, u_max })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::cholesky_in_place;
    use crate::mesh::MeshSpec;

    fn disc(dim: usize, m: usize, p: usize) -> Discretization {
        let nq = 2 * p + 3;
        Discretization::new(Mesh::new(MeshSpec::new(dim, m)).unwrap(), p, nq).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn mass_examples() {
        let d = disc(1, 4, 0);
        assert!(close(&d.assemble_mass(0), &[0.25], 1e-15));
        let d = disc(1, 1, 1);
        let m = d.assemble_mass(0);
        assert!(close(&m, &[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0], 1e-15));
        let d = disc(2, 3, 2);
        let m = d.assemble_mass(4);
        let nb = d.n_basis();
        for i in 0..nb {
            for j in 0..nb {
                assert_eq!(m[i * nb + j], m[j * nb + i]);
            }
        }
    }

    #[test]
    fn fr_mass_against_fine_rule() {
        let d = disc(1, 1, 1);
        let r = DensityState::new(vec![1.0, 2.0], 2);
        let m = d.assemble_fr_mass(0, &r).unwrap();
        // midpoint rule with 1e5 points of phi_i phi_j / (1 + x)
        let n = 100_000;
        let mut want = [0.0; 4];
        for k in 0..n {
            let x = (k as f64 + 0.5) / n as f64;
            let phi = [1.0 - x, x];
            for i in 0..2 {
                for j in 0..2 {
                    want[i * 2 + j] += phi[i] * phi[j] / (1.0 + x) / n as f64;
                }
            }
        }
        // the CC rule with 5 points integrates a rational function, so the
        // comparison is at the rule's accuracy
        assert!(close(&m, &want, 2e-4), "{m:?} {want:?}");
    }

    #[test]
    fn fr_mass_checks_only_quadrature_nodes() {
        // p = 3 nodal zero at x = 1/3, which is not a CC node for nq = 9
        let d = disc(1, 1, 3);
        // interpolant of (x - 1/3)^2
        let r = DensityState::new(vec![1.0 / 9.0, 0.0, 1.0 / 9.0, 4.0 / 9.0], 4);
        assert!(d.assemble_fr_mass(0, &r).is_ok());
        let r = DensityState::new(vec![0.0, 1.0, 1.0, 1.0], 4);
        match d.assemble_fr_mass(0, &r) {
            Err(Error::PositivityLost(e)) => assert_eq!((e.cell, e.node), (0, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fr_mass_constant_and_scaling() {
        let d = disc(2, 2, 2);
        let nb = d.n_basis();
        let r = DensityState::new(vec![3.0; d.n_dofs()], nb);
        let m = d.assemble_mass(1);
        let mr = d.assemble_fr_mass(1, &r).unwrap();
        assert!(close(&mr, &m.iter().map(|v| v / 3.0).collect::<Vec<_>>(), 1e-15));

        let r = d.interpolate(|x| 1.0 + 0.5 * (6.0 * x[0]).sin() * x[1]);
        let a = d.assemble_fr_mass(2, &r).unwrap();
        let mut l = a.clone();
        assert!(cholesky_in_place(&mut l, nb));
        let scaled = DensityState::new(r.coeffs.iter().map(|v| v * 7.5).collect(), nb);
        let b = d.assemble_fr_mass(2, &scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x / 7.5 - y).abs() <= 1e-13 * x.abs().max(1e-300) + 1e-18);
        }
    }

    #[test]
    fn dg_stiffness_example() {
        let d = disc(1, 1, 1);
        let vf = VelocityField::new(&d, Velocity::Constant { dim: 1, value: [1.0, 0.0] }, VelocityMode::Nodal).unwrap();
        let k = d.assemble_dg_stiffness(0, &vf);
        assert!(close(&k, &[0.5, 0.5, -0.5, -0.5], 1e-15), "{k:?}");
        let vz = VelocityField::new(&d, Velocity::Constant { dim: 1, value: [0.0, 0.0] }, VelocityMode::Nodal).unwrap();
        assert!(d.assemble_dg_stiffness(0, &vz).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dg_stiffness_product_rule() {
        // K + K^T = -int D(phi_i phi_j) . u = int phi_i phi_j div u - boundary
        let d = disc(1, 3, 2);
        let vf = VelocityField::new(&d, Velocity::Sinusoid { offset: 2.0 }, VelocityMode::Nodal).unwrap();
        let nb = d.n_basis();
        let c = 1;
        let k = d.assemble_dg_stiffness(c, &vf);
        let h = d.mesh().h();
        let nqv = d.n_vol_points();
        for i in 0..nb {
            for j in 0..nb {
                let mut vol = 0.0;
                for q in 0..nqv {
                    let row = d.vol_tab().row(q);
                    vol += h * d.vol_weights()[q] * row[i] * row[j] * vf.vol_div[c * nqv + q];
                }
                let mut bnd = 0.0;
                for f in 0..2 {
                    let row = d.face_tab(f).row(0);
                    bnd += row[i] * row[j] * vf.face_un[c * 2 + f];
                }
                let sym = k[i * nb + j] + k[j * nb + i];
                assert!((sym - (vol - bnd)).abs() < 1e-12, "{i} {j}");
            }
        }
    }

    #[test]
    fn fr_stiffness_reduces_to_dg_form_for_unit_density() {
        // rho = 1, u = 1: integrating by parts turns the block into -int Dphi_i phi_j
        let d = disc(1, 1, 1);
        let vf = VelocityField::new(&d, Velocity::Constant { dim: 1, value: [1.0, 0.0] }, VelocityMode::Nodal).unwrap();
        let r = DensityState::new(vec![1.0, 1.0], 2);
        let k = d.assemble_fr_stiffness(0, &r, &vf).unwrap();
        // int phi_i phi_j' = [[-1/2, 1/2], [-1/2, 1/2]]; face term -diag(0, 1) + diag(1, 0)
        let want = [-0.5 + 1.0, 0.5, -0.5, 0.5 - 1.0];
        assert!(close(&k, &want, 1e-15), "{k:?}");
        let vz = VelocityField::new(&d, Velocity::Constant { dim: 1, value: [0.0, 0.0] }, VelocityMode::Nodal).unwrap();
        assert!(d.assemble_fr_stiffness(0, &r, &vz).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fr_stiffness_integration_by_parts_identity() {
        // for constant rho = c: K r + oint phi_i rho u.nu / c = int phi_i div(rho u) / c
        for dim in [1, 2] {
            let d = disc(dim, 3, 2);
            let v = if dim == 1 { Velocity::Sinusoid { offset: 2.0 } } else { Velocity::Swirl };
            let vf = VelocityField::new(&d, v, VelocityMode::Nodal).unwrap();
            let nb = d.n_basis();
            let c0 = 2.5;
            let r = DensityState::new(vec![c0; d.n_dofs()], nb);
            let cell = 4 % d.mesh().n_cells();
            let k = d.assemble_fr_stiffness(cell, &r, &vf).unwrap();
            let nqv = d.n_vol_points();
            let vol = d.mesh().cell_volume();
            let fm = d.mesh().face_measure();
            let nqf = d.n_face_points();
            for i in 0..nb {
                let kr: f64 = (0..nb).map(|j| k[i * nb + j] * c0).sum();
                let mut bnd = 0.0;
                for f in 0..d.n_faces() {
                    for q in 0..nqf {
                        bnd += fm * d.face_weights()[q] * d.face_tab(f).row(q)[i] * vf.face_un[(cell * d.n_faces() + f) * nqf + q];
                    }
                }
                let mut strong = 0.0;
                for q in 0..nqv {
                    strong += vol * d.vol_weights()[q] * d.vol_tab().row(q)[i] * vf.vol_div[cell * nqv + q];
                }
                assert!((kr + bnd - strong).abs() < 1e-12, "dim {dim} i {i}: {} vs {}", kr + bnd, strong);
            }
        }
    }

    #[test]
    fn flux_formulas() {
        assert_eq!(upwind_flux(2.0, 5.0, 0.5), 1.0);
        assert_eq!(upwind_flux(2.0, 5.0, -0.5), -2.5);
        assert_eq!(upwind_flux(2.0, 5.0, 0.0), 0.0);
        assert_eq!(lax_friedrichs_flux(2.0, 2.0, 0.5, 3.0), 1.0);
        assert_eq!(lax_friedrichs_flux(1.0, 3.0, 0.5, 0.0), 1.0);
        assert_eq!(kinetic_flux(2.0, 5.0, 0.5, 0.5), 1.0);
        assert_eq!(kinetic_flux(2.0, 5.0, 0.5, -0.2), 1.0 - 1.0);
        assert_eq!(kinetic_flux(2.0, 5.0, 0.5, -0.4), 1.0 - 2.0);
        assert_eq!(kinetic_flux(2.0, 5.0, -0.5, 0.5), 0.0);
        let mut s = 0.37_f64;
        for _ in 0..200 {
            s = (s * 997.0 + 0.123).fract();
            let a = 4.0 * s - 2.0;
            let b = (s * 31.0).fract() * 3.0 - 1.0;
            let un = (s * 17.0).fract() * 2.0 - 1.0;
            assert!((lax_friedrichs_flux(a, b, un, un.abs()) - upwind_flux(a, b, un)).abs() < 1e-14);
            assert!((lax_friedrichs_flux(a, a, un, 0.7) - upwind_flux(a, a, un)).abs() < 1e-14);
        }
    }

    #[test]
    fn flux_vector_examples() {
        let d = disc(1, 2, 1);
        let vf = VelocityField::new(&d, Velocity::Constant { dim: 1, value: [1.0, 0.0] }, VelocityMode::Nodal).unwrap();
        let r = DensityState::new(vec![1.0, 1.0, 2.0, 2.0], 2);
        // interface 0 is the upper face of cell 0
        assert_eq!(d.interface_flux(0, &r, &vf, FluxKind::Upwind), vec![1.0]);
        assert_eq!(d.interface_flux(1, &r, &vf, FluxKind::Upwind), vec![2.0]);
        let g = d.assemble_flux_vector(0, &r, &vf, FluxKind::Upwind, Weighting::Plain).unwrap();
        assert!(close(&g, &[-2.0, 1.0], 1e-15));
        let one = DensityState::new(vec![1.0; 4], 2);
        for kind in [FluxKind::Upwind, FluxKind::Kinetic, FluxKind::LaxFriedrichs { alpha: None }] {
            let a = d.assemble_flux_vector(1, &one, &vf, kind, Weighting::Plain).unwrap();
            let b = d.assemble_flux_vector(1, &one, &vf, kind, Weighting::FisherRao).unwrap();
            assert_eq!(a, b);
        }
        let vz = VelocityField::new(&d, Velocity::Constant { dim: 1, value: [0.0, 0.0] }, VelocityMode::Nodal).unwrap();
        assert!(d.assemble_flux_vector(0, &r, &vz, FluxKind::Upwind, Weighting::FisherRao).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flux_antisymmetry_2d() {
        let d = disc(2, 4, 1);
        let vf = VelocityField::new(&d, Velocity::Swirl, VelocityMode::Nodal).unwrap();
        let r = d.interpolate(|x| 1.2 + (7.0 * x[0] + 3.0 * x[1]).sin());
        // make it discontinuous
        let mut r2 = r.clone();
        for (k, v) in r2.coeffs.iter_mut().enumerate() {
            *v += 0.01 * ((k * 37 % 11) as f64);
        }
        let traces = d.traces(&r2);
        let nqf = d.n_face_points();
        let mut fluxes = vec![0.0; d.mesh().interfaces().len() * nqf];
        for kind in [FluxKind::Upwind, FluxKind::Kinetic, FluxKind::LaxFriedrichs { alpha: Some(0.3) }] {
            d.all_fluxes_into(&traces, &vf, kind, &mut fluxes);
            for (i, itf) in d.mesh().interfaces().iter().enumerate() {
                for q in 0..nqf {
                    let from_minus = d.outward_flux(&fluxes, itf.minus, 2 * itf.axis + 1, q);
                    let from_plus = d.outward_flux(&fluxes, itf.plus, 2 * itf.axis, q);
                    assert_eq!(from_minus, -from_plus, "interface {i}");
                }
            }
        }
    }

    #[test]
    fn nodal_velocity_reproduces_nodes() {
        let d = disc(2, 3, 2);
        let v = Velocity::Swirl;
        let vf = VelocityField::new(&d, v, VelocityMode::Nodal).unwrap();
        for c in 0..d.mesh().n_cells() {
            for i in 0..d.n_basis() {
                let x = d.mesh().to_physical(c, d.basis().node(i));
                assert_eq!(vf.nodal[c * d.n_basis() + i], v.eval(x));
            }
        }
        // p >= 1 traces coincide across interfaces
        let nqf = d.n_face_points();
        for (i, itf) in d.mesh().interfaces().iter().enumerate() {
            for q in 0..nqf {
                let um = vf.face_un[(itf.minus * 4 + 2 * itf.axis + 1) * nqf + q];
                assert!((vf.iface_un[i * nqf + q] - um).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn interpolation_and_evaluation() {
        let d = disc(1, 4, 2);
        let r = d.interpolate(|x| 1.0 + x[0] * x[0]);
        for &x in &[0.0, 0.3, 0.61, 1.0] {
            assert!((d.eval_at(&r, &[x]).unwrap() - 1.0 - x * x).abs() < 1e-14);
        }
        assert!((d.total_mass(&r) - 4.0 / 3.0).abs() < 1e-14);
    }
}
