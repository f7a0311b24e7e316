//! Anatomy of one cut cell: bottom-up merged quadrature boxes, marching
//! tetrahedra tessellation, emitted quadrature points, and the
//! inside/outside complement identity.
//!
//! ```sh
//! cargo run --example cut_cell_quadrature
//! ```

use trigrid::cutquad::{decompose_cell, emit_quadrature};
use trigrid::sdf::{AnalyticSdf, ImplicitField};
use trigrid::vtk;
use trigrid::{Aabb, Vec3};

struct Flip<'a>(&'a AnalyticSdf);

impl ImplicitField for Flip<'_> {
    fn value(&self, x: Vec3) -> f64 {
        -self.0.eval(x)
    }
    fn gradient(&self, x: Vec3) -> Vec3 {
        -self.0.grad(x)
    }
}

fn main() -> trigrid::Result<()> {
    let cell = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
    let field = AnalyticSdf::sphere(Vec3::new(0.4, 0.45, 0.55), 0.42);

    for r_q in [1u32, 2, 3, 4] {
        let dec = decompose_cell(cell, [0; 3], &field, r_q, 1e-10);
        let flipped = decompose_cell(cell, [0; 3], &Flip(&field), r_q, 1e-10);
        let complement = dec.inside_volume() + flipped.inside_volume();
        println!(
            "r_q = {r_q}: {:>3} merged active, {:>4} cut leaves, {:>5} tets, {:>4} triangles; \
             inside volume {:.6}, inside + outside = {:.12}",
            dec.active_cells.len(),
            dec.cut_leaf_count,
            dec.simplices.len(),
            dec.boundary.len(),
            dec.inside_volume(),
            complement,
        );
    }

    let dec = decompose_cell(cell, [0; 3], &field, 3, 1e-10);
    for p in [1usize, 2] {
        let (vol, surf) = emit_quadrature(&dec, p);
        let v: f64 = vol.iter().map(|q| q.w).sum();
        let a: f64 = surf.iter().map(|q| q.w).sum();
        println!(
            "p = {p}: {} volume points (sum w = {v:.6}), {} surface points (area = {a:.6})",
            vol.len(),
            surf.len()
        );
    }

    let out = std::env::temp_dir().join("trigrid_cutcell.vtk");
    vtk::write_decomposition_vtk(&out, &dec)?;
    println!("wrote {}", out.display());
    Ok(())
}
