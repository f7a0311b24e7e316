//! Constructive solid geometry: builds the handle-block shape from a box and
//! cylinders, samples it, and integrates its volume and surface area.
//!
//! ```sh
//! cargo run --example csg_geometry
//! ```

use trigrid::harness::{integrate_geometry, parse_csg, RunConfig};
use trigrid::Vec3;

fn main() -> trigrid::Result<()> {
    // The same shape the `handle_block` named geometry provides, spelled out
    // as an expression.
    let expr = "union(box(0,0,-0.3,1.0,0.5,0.3),\
                intersection(difference(cylinder(0,0,0,1,0.55,0.4),\
                cylinder(0,0,0,1,0.3,0.5)),halfspace(0,0,-1,0)))";
    let shape = parse_csg(expr)?;
    for (label, x) in [
        ("block interior", Vec3::new(0.0, 0.0, -0.3)),
        ("handle ring", Vec3::new(0.0, 0.0, 0.45)),
        ("ring hole", Vec3::new(0.0, 0.0, 0.1)),
        ("outside", Vec3::new(1.5, 0.0, 0.0)),
    ] {
        println!("{label:>16}: phi = {:+.4}", shape.eval(x));
    }

    let mut cfg = RunConfig::default();
    cfg.geometry = format!("csg:{expr}");
    cfg.domain_center = [0.0, 0.0, 0.1];
    cfg.domain_edge = 2.6;
    cfg.base_refinements = 4;
    cfg.r_q = 2;
    cfg.h_g = 2.6 / 256.0;
    let report = integrate_geometry(&cfg)?;
    println!(
        "\nintegrated at h_f = {:.4}, h_q = {:.4}: volume = {:.5}, surface area = {:.5}",
        report.h_f, report.h_q, report.volume, report.area
    );
    println!("({} cut cells, {} active cells)", report.n_cut, report.n_active);
    Ok(())
}
