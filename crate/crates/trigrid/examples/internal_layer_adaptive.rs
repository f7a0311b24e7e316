//! Error-driven adaptive refinement on the internal-layer problem
//! u = arctan(60 (r - pi/3)) in an off-lattice immersed unit cube: refined
//! cells concentrate on the layer and beat uniform refinement per dof.
//!
//! ```sh
//! cargo run --example internal_layer_adaptive
//! ```

use trigrid::harness::{adaptive_study, shell_concentration, RunConfig, LAYER_RADIUS};

fn main() -> trigrid::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.geometry = "cube".into();
    cfg.domain_center = [0.03, 0.03, 0.03];
    cfg.domain_edge = 2.0;
    cfg.base_refinements = 4; // h_f = 1/8
    cfg.r_q = 0;
    cfg.p = 1;
    cfg.problem = "internal_layer".into();
    cfg.tol = 1e-10;
    cfg.adaptive_steps = 2;
    cfg.adaptive_fraction = 0.15;

    let rows = adaptive_study(&cfg)?;
    println!("{:>4} {:>8} {:>12} {:>12} {:>8} {:>10}", "step", "dofs", "L2", "H1", "refined", "on layer");
    for r in &rows {
        let on_layer = shell_concentration(&r.refined_centers, LAYER_RADIUS, 0.1);
        println!(
            "{:>4} {:>8} {:>12.4e} {:>12.4e} {:>8} {:>9.0}%",
            r.step,
            r.dofs,
            r.l2_rel,
            r.h1_rel,
            r.refined,
            100.0 * on_layer
        );
    }
    Ok(())
}
