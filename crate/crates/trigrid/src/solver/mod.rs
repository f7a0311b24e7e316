//! Linear solvers: Jacobi-preconditioned CG on the assembled system, and
//! iterative substructuring on the interface Schur complement with a
//! single-level BDDC preconditioner.

mod bddc;
mod ldl;
mod pcg;
mod substructure;

pub use bddc::Bddc;
pub use ldl::SparseLdl;
pub use pcg::{pcg, PcgResult};
pub use substructure::{SubdomainSystem, Substructure};

use crate::error::Result;
use crate::fem::{ElementSystem, LinearSystem};
use crate::geom::Vec3;

/// Monolithic Jacobi-PCG on the reduced system.
pub fn solve_jacobi_pcg(system: &LinearSystem, tol: f64, max_iter: usize) -> Result<PcgResult> {
    let inv_diag: Vec<f64> = system
        .matrix
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    pcg(
        |x, y| system.matrix.mul_vec(x, y),
        |x, y| {
            for i in 0..x.len() {
                y[i] = inv_diag[i] * x[i];
            }
        },
        &system.rhs,
        tol,
        max_iter,
    )
}

/// Outcome of a substructured BDDC solve.
pub struct BddcSolve {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub n_interface: usize,
    pub n_coarse: usize,
}

/// Solves the system assembled from per-unit element streams by PCG on the
/// interface Schur complement with the BDDC preconditioner, then recovers
/// the interiors. With an empty interface this reduces to direct unit solves.
/// `native_dofs[u]` lists the free dofs whose nodes lie on unit `u`'s own
/// cells; dofs a unit references only through constraint tails get pinned as
/// coarse corners so the local saddle problems stay nonsingular.
pub fn solve_bddc(
    unit_elements: &[Vec<ElementSystem>],
    n_global: usize,
    positions: &[Vec3],
    native_dofs: &[Vec<u32>],
    tol: f64,
    max_iter: usize,
) -> Result<BddcSolve> {
    let subs = Substructure::build(unit_elements, n_global)?;
    if subs.n_interface() == 0 {
        let solution = subs.solve_direct()?;
        return Ok(BddcSolve {
            solution,
            iterations: 0,
            residuals: Vec::new(),
            converged: true,
            n_interface: 0,
            n_coarse: 0,
        });
    }
    let preconditioner = Bddc::setup(&subs, positions, native_dofs)?;
    let h = subs.schur_rhs()?;
    let failure: std::cell::RefCell<Option<crate::error::Error>> = Default::default();
    let result = pcg(
        |x, y| {
            if let Err(e) = subs.schur_apply(x, y) {
                failure.borrow_mut().get_or_insert(e);
            }
        },
        |x, y| {
            if let Err(e) = preconditioner.apply(&subs, x, y) {
                failure.borrow_mut().get_or_insert(e);
            }
        },
        &h,
        tol,
        max_iter,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let solution = subs.recover(&result.x)?;
    Ok(BddcSolve {
        solution,
        iterations: result.iterations,
        residuals: result.residuals,
        converged: result.converged,
        n_interface: subs.n_interface(),
        n_coarse: preconditioner.n_coarse,
    })
}
