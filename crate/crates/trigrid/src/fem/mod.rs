//! Poisson discretization on the octree grid: Lagrange bases, degrees of
//! freedom with hanging-node constraints, extended-basis cut-cell
//! stabilization, Nitsche assembly, and error norms.

pub mod basis;
mod assemble;
mod constraints;
mod dofmap;
mod norms;
mod system;

pub use assemble::{assemble, for_each_element, ElementSystem};
pub use basis::Basis;
pub use constraints::{
    detect_critical, extrapolation_rows, resolve_hanging_chains, ConstraintMap, Criticality,
};
pub use dofmap::DofMap;
pub use norms::{error_norms, ErrorNorms, SolutionField};
pub use system::{CsrMatrix, LinearSystem};

use crate::geom::Vec3;

/// Data of the Poisson problem `-div grad u = f` with Dirichlet data `ubar`
/// enforced weakly (Nitsche, penalty `gamma0 / h`) and optional Neumann data
/// `gbar` on the surface region selected by `neumann_region`.
pub struct PoissonProblem<'a> {
    pub source: &'a dyn Fn(Vec3) -> f64,
    pub dirichlet: &'a dyn Fn(Vec3) -> f64,
    /// Neumann data as a function of the point and the outward unit normal.
    pub neumann: &'a dyn Fn(Vec3, Vec3) -> f64,
    /// Boundary points where this predicate holds get Neumann treatment;
    /// everything else is Dirichlet. `None` means pure Dirichlet.
    pub neumann_region: Option<&'a dyn Fn(Vec3) -> bool>,
    pub gamma0: f64,
}

/// Cut-cell quadrature parameters: `r_q` octree levels inside ordinary cut
/// cells (plus `r_q_extra` for extraordinary ones) and the bisection
/// tolerance for boundary roots.
#[derive(Clone, Copy, Debug)]
pub struct CutQuadParams {
    pub r_q: u32,
    pub r_q_extra: u32,
    pub root_tol: f64,
}
