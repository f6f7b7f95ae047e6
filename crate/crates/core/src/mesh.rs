//! Uniform periodic meshes of the unit interval and the unit square.
//!
//! Cells are indexed row-major with the x index running fastest:
//! `cell = ix + m * iy`. Interface `axis * n_cells + c` is the upper face of
//! cell `c` along `axis`; its normal points from that cell (`minus`) to the
//! periodic neighbour above it (`plus`).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshSpec {
    pub dim: usize,
    pub cells_per_axis: usize,
}

impl MeshSpec {
    pub fn new(dim: usize, cells_per_axis: usize) -> Self {
        Self { dim, cells_per_axis }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::InvalidMesh(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.cells_per_axis == 0 {
            return Err(Error::InvalidMesh("cells_per_axis must be positive".into()));
        }
        Ok(())
    }
}

/// Which side of a cell a face sits on along its axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    /// Sign of the outward normal component along the face axis.
    pub fn sign(self) -> f64 {
        match self {
            Side::Lower => -1.0,
            Side::Upper => 1.0,
        }
    }
}

/// A cell face, identified by axis and side. Faces are numbered
/// `2 * axis + side` with `Lower = 0`, `Upper = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    pub fn from_index(index: usize) -> Self {
        let side = if index % 2 == 0 { Side::Lower } else { Side::Upper };
        Self { axis: index / 2, side }
    }

    pub fn index(self) -> usize {
        2 * self.axis + usize::from(self.side == Side::Upper)
    }

    pub fn outward_normal(self) -> [f64; 2] {
        let mut n = [0.0; 2];
        n[self.axis] = self.side.sign();
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub minus: usize,
    pub plus: usize,
    pub axis: usize,
    /// Unit normal pointing from `minus` to `plus`.
    pub normal: [f64; 2],
}

impl Interface {
    /// The same interface seen from the other side.
    pub fn flipped(&self) -> Interface {
        Interface {
            minus: self.plus,
            plus: self.minus,
            axis: self.axis,
            normal: [-self.normal[0], -self.normal[1]],
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    spec: MeshSpec,
    h: f64,
    n_cells: usize,
    interfaces: Vec<Interface>,
}

impl Mesh {
    pub fn new(spec: MeshSpec) -> Result<Self> {
        spec.validate()?;
        let m = spec.cells_per_axis;
        let n_cells = m.pow(spec.dim as u32);
        let mut mesh = Self { spec, h: 1.0 / m as f64, n_cells, interfaces: Vec::new() };
        let mut interfaces = Vec::with_capacity(spec.dim * n_cells);
        for axis in 0..spec.dim {
            for c in 0..n_cells {
                let mut normal = [0.0; 2];
                normal[axis] = 1.0;
                interfaces.push(Interface { minus: c, plus: mesh.neighbor(c, axis, Side::Upper), axis, normal });
            }
        }
        mesh.interfaces = interfaces;
        Ok(mesh)
    }

    pub fn spec(&self) -> MeshSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.spec.cells_per_axis
    }

    /// Cell width, identical on all axes.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.spec.dim as i32)
    }

    /// Measure of a single face (1 for the point faces of a 1D cell).
    pub fn face_measure(&self) -> f64 {
        self.h.powi(self.spec.dim as i32 - 1)
    }

    pub fn n_faces_per_cell(&self) -> usize {
        2 * self.spec.dim
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn cell_multi_index(&self, cell: usize) -> [usize; 2] {
        let m = self.spec.cells_per_axis;
        if self.spec.dim == 1 {
            [cell, 0]
        } else {
            [cell % m, cell / m]
        }
    }

    pub fn cell_index(&self, idx: [usize; 2]) -> usize {
        idx[0] + self.spec.cells_per_axis * idx[1]
    }

    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        let idx = self.cell_multi_index(cell);
        let mut o = [0.0; 2];
        for (a, oa) in o.iter_mut().enumerate().take(self.spec.dim) {
            *oa = idx[a] as f64 * self.h;
        }
        o
    }

    /// Periodic neighbour across the given face.
    pub fn neighbor(&self, cell: usize, axis: usize, side: Side) -> usize {
        let m = self.spec.cells_per_axis;
        let mut idx = self.cell_multi_index(cell);
        idx[axis] = match side {
            Side::Lower => (idx[axis] + m - 1) % m,
            Side::Upper => (idx[axis] + 1) % m,
        };
        self.cell_index(idx)
    }

    /// Interface index of a cell face.
    pub fn face_interface(&self, cell: usize, face: Face) -> usize {
        match face.side {
            Side::Upper => face.axis * self.n_cells + cell,
            Side::Lower => face.axis * self.n_cells + self.neighbor(cell, face.axis, Side::Lower),
        }
    }

    pub fn to_physical(&self, cell: usize, local: [f64; 2]) -> [f64; 2] {
        let o = self.cell_origin(cell);
        let mut x = [0.0; 2];
        for a in 0..self.spec.dim {
            x[a] = o[a] + self.h * local[a];
        }
        x
    }

    /// Cell containing `x` and the local coordinate of `x` in that cell.
    ///
    /// Along each axis the cell is `floor(x / h)`, so a point on a shared
    /// face belongs to the cell whose lower face it is; `x = 1` belongs to
    /// the last cell with local coordinate 1.
    pub fn locate(&self, x: &[f64]) -> Result<(usize, [f64; 2])> {
        if x.len() != self.spec.dim || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        let m = self.spec.cells_per_axis;
        let mut idx = [0usize; 2];
        let mut local = [0.0; 2];
        for a in 0..self.spec.dim {
            let s = x[a] * m as f64;
            let i = (s.floor() as usize).min(m - 1);
            idx[a] = i;
            local[a] = s - i as f64;
        }
        Ok((self.cell_index(idx), local))
    }
}
