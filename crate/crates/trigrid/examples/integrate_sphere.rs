//! Volume and surface reconstruction accuracy of the unit sphere across
//! quadrature and geometry grid resolutions: errors fall quadratically with
//! h_q until the geometry grid resolution takes over.
//!
//! ```sh
//! cargo run --example integrate_sphere
//! ```

use trigrid::harness::{integrate_geometry, RunConfig};

fn main() -> trigrid::Result<()> {
    println!("{:>9} {:>9} {:>13} {:>13}", "h_g", "h_q", "volume err", "surface err");
    for h_g in [0.5, 1.0 / 32.0, 1.0 / 128.0] {
        for r_q in 0..=4u32 {
            let mut cfg = RunConfig::default();
            cfg.geometry = "sphere".into();
            cfg.domain_edge = 2.4;
            cfg.base_refinements = 2; // h_f = 0.6
            cfg.r_q = r_q;
            cfg.h_g = h_g;
            let r = integrate_geometry(&cfg)?;
            println!(
                "{:>9.5} {:>9.5} {:>13.4e} {:>13.4e}",
                h_g,
                r.h_q,
                r.volume_rel_error.unwrap(),
                r.area_rel_error.unwrap()
            );
        }
        println!();
    }
    Ok(())
}
