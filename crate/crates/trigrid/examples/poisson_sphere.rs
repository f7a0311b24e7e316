//! Immersed Poisson-Dirichlet solve on the unit sphere with the prescribed
//! solution u = cos(x3): errors at two grid resolutions show the expected
//! second-order drop for trilinear elements.
//!
//! ```sh
//! cargo run --example poisson_sphere
//! ```

use trigrid::harness::{run_solve, RunConfig};
use trigrid::Vec3;

fn main() -> trigrid::Result<()> {
    let mut previous: Option<f64> = None;
    for base in [3u8, 4] {
        let mut cfg = RunConfig::default();
        cfg.geometry = "sphere".into();
        cfg.base_refinements = base; // h_f = 4 / 2^base
        cfg.r_q = 3;
        cfg.p = 1;
        cfg.problem = "cos_x3".into();
        cfg.tol = 1e-10;
        let solved = run_solve(cfg)?;
        let norms = solved.norms();
        let h = solved.config.h_f();
        println!(
            "h_f = {h:.4}: {} dofs ({} cut cells, {} stabilized), {} PCG iterations, \
             L2 = {:.4e}, H1 = {:.4e}",
            solved.stats.n_free,
            solved.stats.n_cut,
            solved.stats.n_critical,
            solved.stats.iterations,
            norms.l2_rel,
            norms.h1_rel
        );
        let u0 = solved.solution().eval(Vec3::zeros())?;
        println!("         u(0,0,0) = {u0:.6} (exact 1)");
        if let Some(prev) = previous {
            println!("         L2 reduction factor {:.2}", prev / norms.l2_rel);
        }
        previous = Some(norms.l2_rel);
    }
    Ok(())
}
