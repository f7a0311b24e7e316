//! Iterative substructuring with the BDDC preconditioner against monolithic
//! Jacobi-PCG on the internal-layer cube: identical solutions, far fewer
//! iterations on the interface system.
//!
//! ```sh
//! cargo run --example substructured_solve
//! ```

use trigrid::harness::{run_solve, RunConfig};

fn main() -> trigrid::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.geometry = "cube".into();
    cfg.domain_center = [0.03, 0.03, 0.03];
    cfg.domain_edge = 2.0;
    cfg.base_refinements = 4;
    cfg.r_q = 1;
    cfg.p = 1;
    cfg.problem = "internal_layer".into();
    cfg.tol = 1e-6;

    cfg.solver = "jacobi-pcg".into();
    let jacobi = run_solve(cfg.clone())?;
    println!(
        "jacobi-pcg: {} dofs, {} iterations, L2 = {:.4e}",
        jacobi.stats.n_free,
        jacobi.stats.iterations,
        jacobi.norms().l2_rel
    );

    cfg.solver = "bddc".into();
    cfg.n_subdomains = 8;
    let bddc = run_solve(cfg)?;
    println!(
        "bddc (8 subdomains): {} interface dofs, {} coarse dofs, {} iterations, L2 = {:.4e}",
        bddc.stats.n_interface,
        bddc.stats.n_coarse,
        bddc.stats.iterations,
        bddc.norms().l2_rel
    );

    let worst = jacobi
        .u_free
        .iter()
        .zip(&bddc.u_free)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("max coefficient deviation between solvers: {worst:.3e}");
    Ok(())
}
