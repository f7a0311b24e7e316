//! Builds a narrow-band signed distance grid from an STL surface.
//!
//! Generates an icosphere, round-trips it through binary STL, samples exact
//! signed distances in a band of width 2 * delta around the surface, and
//! queries the trilinear field.
//!
//! ```sh
//! cargo run --example build_sdf
//! ```

use trigrid::sdf::{icosphere, read_stl, write_binary_stl, SparseDistanceGrid};
use trigrid::vtk;
use trigrid::Vec3;

fn main() -> trigrid::Result<()> {
    let sphere = icosphere(1.0, 3);
    println!(
        "icosphere: {} vertices, {} triangles",
        sphere.vertices.len(),
        sphere.triangles.len()
    );

    // Round-trip through the STL layer, as a CAD export would arrive.
    let mut stl = Vec::new();
    write_binary_stl(&sphere, &mut stl)?;
    let surface = read_stl(&stl)?;
    println!("read back {} bytes of binary STL", stl.len());

    let h_g = 1.0 / 32.0;
    let grid = SparseDistanceGrid::from_surface(surface, h_g, 3)?;
    println!(
        "band grid: {:?} nodes, {} stored blocks, delta = {}",
        grid.node_dims(),
        grid.stored_block_count(),
        grid.band_half_width()
    );

    for r in [0.0, 0.8, 0.95, 1.0, 1.05] {
        let x = Vec3::new(r, 0.0, 0.0);
        println!("phi({r:.2}, 0, 0) = {:+.5}", grid.eval(x)?);
    }
    let n = grid.normal(Vec3::new(0.93, 0.11, 0.07))?;
    println!("normal near the surface: ({:+.4}, {:+.4}, {:+.4})", n.x, n.y, n.z);

    let out = std::env::temp_dir().join("trigrid_band");
    let blocks = vtk::write_band_blocks(&out, &grid)?;
    println!("wrote {blocks} band block files to {}", out.display());
    Ok(())
}
