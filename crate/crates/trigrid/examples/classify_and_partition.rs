//! Octree classification and weighted Z-curve partitioning of the unit
//! sphere, with a VTK dump of the labeled grid.
//!
//! ```sh
//! cargo run --example classify_and_partition
//! ```

use trigrid::octree::{partition_zcurve, CellClass, ClassifyParams, FeGrid};
use trigrid::sdf::{AnalyticSdf, SparseDistanceGrid};
use trigrid::vtk;
use trigrid::{Aabb, Vec3};

fn main() -> trigrid::Result<()> {
    let field = AnalyticSdf::sphere(Vec3::zeros(), 1.0);
    let h_g = 1.0 / 64.0;
    let grid_sdf = SparseDistanceGrid::from_field(&field, Aabb::cube(Vec3::zeros(), 4.0), h_g, 3);

    let mut grid = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), 3);
    // Two sweeps of boundary refinement: every cut cell splits, balance
    // propagates the 2:1 constraint.
    let params = ClassifyParams { h_sample: h_g, cos_theta: 0.3 };
    let splits = grid.refine_toward_boundary(&grid_sdf, &params, 2, 0.0)?;
    println!("boundary refinement sweeps split {splits:?} cells");

    let mut counts = [0usize; 4];
    for leaf in grid.leaves() {
        match leaf.class {
            CellClass::Active => counts[0] += 1,
            CellClass::Inactive => counts[1] += 1,
            CellClass::CutOrdinary => counts[2] += 1,
            CellClass::CutExtraordinary => counts[3] += 1,
            CellClass::Unclassified => {}
        }
    }
    println!(
        "{} leaves: {} active, {} inactive, {} cut ordinary, {} cut extraordinary",
        grid.leaf_count(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );

    let partition = partition_zcurve(&grid, 8, 100, 1)?;
    let mut loads = vec![0u64; 8];
    for (i, leaf) in grid.leaves().iter().enumerate() {
        loads[partition.subdomain_of[i] as usize] += if leaf.class.is_solid() { 100 } else { 1 };
    }
    println!("weighted loads per subdomain: {loads:?}");
    println!("dual-graph components per subdomain: {:?}", partition.components);

    let out = std::env::temp_dir().join("trigrid_grid.vtk");
    vtk::write_grid_vtk(&out, &grid, Some(&partition))?;
    println!("wrote {}", out.display());
    Ok(())
}
