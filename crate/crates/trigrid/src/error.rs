//! Crate-wide error type.

use crate::geom::Vec3;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid surface mesh: {0}")]
    InvalidSurface(String),

    #[error("ambiguous inside/outside sign at node ({0:.6}, {1:.6}, {2:.6})")]
    AmbiguousSign(f64, f64, f64),

    #[error("point ({:.6}, {:.6}, {:.6}) outside the embedding domain", .0.x, .0.y, .0.z)]
    OutsideDomain(Vec3),

    #[error("degenerate gradient at ({:.6}, {:.6}, {:.6}); treat as sharp feature", .0.x, .0.y, .0.z)]
    DegenerateGradient(Vec3),

    #[error("edge root bisection requires a sign change; got phi(a) = {0:.3e}, phi(b) = {1:.3e}")]
    NoSignChange(f64, f64),

    #[error("cell {0}: {1}")]
    Cell(usize, String),

    #[error("no stabilization donor cell in the 2-neighborhood of node at ({:.6}, {:.6}, {:.6})", .0.x, .0.y, .0.z)]
    NoDonor(Vec3),

    #[error("constraint cycle while resolving dof {0}")]
    ConstraintCycle(usize),

    #[error("solver: {0}")]
    Solver(String),

    #[error("subdomain {subdomain} component {component}: singular local problem")]
    SingularLocalProblem { subdomain: usize, component: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
