use trigrid::harness::{adaptive_study, convergence_study, RunConfig};

fn main() {
    let mut cfg = RunConfig::default();
    cfg.geometry = "cube".into();
    cfg.domain_center = [0.53, 0.53, 0.53];
    cfg.domain_edge = 2.0;
    cfg.r_q = 0;
    cfg.p = 1;
    cfg.problem = "internal_layer".into();
    cfg.tol = 1e-9;
    cfg.h_sequence = vec![0.125, 0.0625, 0.03125];
    let uni = convergence_study(&cfg).unwrap();
    for r in &uni.rows {
        println!("uniform h={:.5} dofs={} L2={:.4e} H1={:.4e}", r.h_f, r.dofs, r.l2_rel, r.h1_rel);
    }
    cfg.base_refinements = 4;
    cfg.adaptive_steps = 6;
    cfg.adaptive_fraction = 0.15;
    let rows = adaptive_study(&cfg).unwrap();
    for r in &rows {
        println!("adaptive step {} dofs={} L2={:.4e} H1={:.4e} refined={}", r.step, r.dofs, r.l2_rel, r.h1_rel, r.refined);
    }
}
