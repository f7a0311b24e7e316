//! trigrid: an immersed finite element toolkit built on three adaptive grids.
//!
//! - a *geometry grid*: a sparse narrow-band signed distance field sampled
//!   from STL surfaces or analytic/CSG primitives ([`sdf`]),
//! - a *finite element grid*: a 2:1-balanced octree with cut-cell
//!   classification and weighted Z-curve partitioning ([`octree`]),
//! - a *quadrature grid*: per-cut-cell bottom-up octrees tessellated with
//!   marching tetrahedra ([`cutquad`]).
//!
//! On top of the grids sit a Nitsche discretization of the Poisson problem
//! with hanging-node constraints and cut-cell stabilization ([`fem`]), a PCG
//! solver with Jacobi and substructured BDDC preconditioning ([`solver`]),
//! and experiment drivers with a plain-text configuration format
//! ([`harness`]).
//!
//! See the `examples/` directory for runnable entry points per capability,
//! and the `trigrid` binary for the command-line interface.

pub mod cutquad;
pub mod error;
pub mod fem;
pub mod geom;
pub mod harness;
pub mod morton;
pub mod octree;
pub mod sdf;
pub mod solver;
pub mod vtk;

pub use error::{Error, Result};
pub use geom::{Aabb, Vec3};
