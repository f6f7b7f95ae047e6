//! Discontinuous Galerkin (DG) and discontinuous Fisher-Rao Galerkin (DFRG)
//! solvers for the linear transport equation `rho_t + div(rho u) = 0` on
//! periodic unit intervals and squares.

pub mod assembly;
pub mod basis;
pub mod dense;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod mle;
pub mod problems;
pub mod reference;
pub mod scheme;
pub mod time;

pub use error::{Error, PositivityLost, Result};
