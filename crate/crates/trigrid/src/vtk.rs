//! Legacy-VTK (ASCII) writers for grids, solutions, quadrature
//! decompositions, and the narrow-band geometry grid.

use crate::cutquad::QuadratureDecomposition;
use crate::error::Result;
use crate::fem::SolutionField;
use crate::geom::Vec3;
use crate::octree::{CellClass, FeGrid, Partition};
use crate::sdf::{SparseDistanceGrid, BLOCK_EDGE};
use std::fmt::Write as _;
use std::path::Path;

fn class_code(class: CellClass) -> i32 {
    match class {
        CellClass::Unclassified => -1,
        CellClass::Active => 0,
        CellClass::Inactive => 1,
        CellClass::CutOrdinary => 2,
        CellClass::CutExtraordinary => 3,
    }
}

/// Writes the leaf cells as unstructured hexahedra with cell data arrays
/// `class` and (when a partition is given) `subdomain`, in Z-curve order.
pub fn write_grid_vtk(
    path: impl AsRef<Path>,
    grid: &FeGrid,
    partition: Option<&Partition>,
) -> Result<()> {
    let n = grid.leaf_count();
    let mut s = String::new();
    let _ = write!(s, "# vtk DataFile Version 3.0\nfe grid\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", 8 * n);
    for i in 0..n {
        let b = grid.cell_box(i);
        for c in 0..8 {
            let p = Vec3::new(
                if c & 1 == 0 { b.min.x } else { b.max.x },
                if c & 2 == 0 { b.min.y } else { b.max.y },
                if c & 4 == 0 { b.min.z } else { b.max.z },
            );
            let _ = writeln!(s, "{:.12e} {:.12e} {:.12e}", p.x, p.y, p.z);
        }
    }
    let _ = writeln!(s, "CELLS {} {}", n, 9 * n);
    for i in 0..n {
        // VTK hexahedron ordering: bottom quad counter-clockwise, then top.
        let b = 8 * i;
        let _ = writeln!(
            s,
            "8 {} {} {} {} {} {} {} {}",
            b,
            b + 1,
            b + 3,
            b + 2,
            b + 4,
            b + 5,
            b + 7,
            b + 6
        );
    }
    let _ = writeln!(s, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(s, "12");
    }
    let _ = writeln!(s, "CELL_DATA {n}\nSCALARS class int 1\nLOOKUP_TABLE default");
    for leaf in grid.leaves() {
        let _ = writeln!(s, "{}", class_code(leaf.class));
    }
    if let Some(p) = partition {
        let _ = writeln!(s, "SCALARS subdomain int 1\nLOOKUP_TABLE default");
        for &sd in &p.subdomain_of {
            let _ = writeln!(s, "{sd}");
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes the solution restricted to the physical domain: active cells as
/// hexahedra with corner values, cut cells through their inside simplex
/// tessellation and merged boxes.
pub fn write_solution_vtk(
    path: impl AsRef<Path>,
    grid: &FeGrid,
    solution: &SolutionField,
    decompositions: &dyn Fn(usize) -> QuadratureDecomposition,
) -> Result<()> {
    let dofs = solution.dofs;
    let mut points: Vec<(Vec3, f64)> = Vec::new();
    let mut cells: Vec<(u8, Vec<usize>)> = Vec::new();
    let push_box = |points: &mut Vec<(Vec3, f64)>,
                        cells: &mut Vec<(u8, Vec<usize>)>,
                        s: usize,
                        min: Vec3,
                        size: Vec3,
                        solution: &SolutionField| {
        let base = points.len();
        for c in 0..8usize {
            let p = min
                + Vec3::new(
                    (c & 1) as f64 * size.x,
                    ((c >> 1) & 1) as f64 * size.y,
                    (c >> 2) as f64 * size.z,
                );
            points.push((p, solution.eval_in_cell(s, p)));
        }
        cells.push((
            12,
            vec![base, base + 1, base + 3, base + 2, base + 4, base + 5, base + 7, base + 6],
        ));
    };
    for s in 0..dofs.solid_cell_count() {
        let leaf_idx = dofs.solid_cells[s] as usize;
        match grid.leaves()[leaf_idx].class {
            CellClass::Active => {
                let b = grid.cell_box(leaf_idx);
                push_box(&mut points, &mut cells, s, b.min, b.extent(), solution);
            }
            CellClass::CutOrdinary | CellClass::CutExtraordinary => {
                let dec = decompositions(s);
                for simplex in &dec.simplices {
                    let base = points.len();
                    for v in simplex.vertices {
                        points.push((v, solution.eval_in_cell(s, v)));
                    }
                    cells.push((10, vec![base, base + 1, base + 2, base + 3]));
                }
                for cell in &dec.active_cells {
                    push_box(&mut points, &mut cells, s, cell.anchor, Vec3::repeat(cell.size), solution);
                }
            }
            _ => {}
        }
    }
    let mut s = String::new();
    let _ = write!(s, "# vtk DataFile Version 3.0\nsolution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for (p, _) in &points {
        let _ = writeln!(s, "{:.12e} {:.12e} {:.12e}", p.x, p.y, p.z);
    }
    let total: usize = cells.iter().map(|(_, v)| v.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", cells.len(), total);
    for (_, v) in &cells {
        let _ = write!(s, "{}", v.len());
        for idx in v {
            let _ = write!(s, " {idx}");
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for (t, _) in &cells {
        let _ = writeln!(s, "{t}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", points.len());
    for (_, u) in &points {
        let _ = writeln!(s, "{u:.12e}");
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes one structured-points file per stored narrow-band block into
/// `dir` (debug output).
pub fn write_band_blocks(dir: impl AsRef<Path>, grid: &SparseDistanceGrid) -> Result<usize> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let h = grid.spacing();
    let mut count = 0;
    for (coords, values) in grid.blocks_sorted() {
        let origin = grid.node_position(
            coords[0] * BLOCK_EDGE,
            coords[1] * BLOCK_EDGE,
            coords[2] * BLOCK_EDGE,
        );
        let mut s = String::new();
        let _ = write!(
            s,
            "# vtk DataFile Version 3.0\nband block\nASCII\nDATASET STRUCTURED_POINTS\n\
             DIMENSIONS {be} {be} {be}\nORIGIN {:.12e} {:.12e} {:.12e}\nSPACING {h:.12e} {h:.12e} {h:.12e}\n\
             POINT_DATA {}\nSCALARS phi double 1\nLOOKUP_TABLE default\n",
            origin.x,
            origin.y,
            origin.z,
            BLOCK_EDGE * BLOCK_EDGE * BLOCK_EDGE,
            be = BLOCK_EDGE,
        );
        for v in values.iter() {
            let _ = writeln!(s, "{v:.12e}");
        }
        std::fs::write(
            dir.join(format!("block_{}_{}_{}.vtk", coords[0], coords[1], coords[2])),
            s,
        )?;
        count += 1;
    }
    Ok(count)
}

/// Dumps the simplices and boundary triangles of one decomposition; the
/// `kind` array separates volume tets (0) from boundary triangles (1).
pub fn write_decomposition_vtk(
    path: impl AsRef<Path>,
    dec: &QuadratureDecomposition,
) -> Result<()> {
    let mut points: Vec<Vec3> = Vec::new();
    let mut cells: Vec<(u8, Vec<usize>, i32)> = Vec::new();
    for simplex in &dec.simplices {
        let base = points.len();
        points.extend_from_slice(&simplex.vertices);
        cells.push((10, vec![base, base + 1, base + 2, base + 3], 0));
    }
    for tri in &dec.boundary {
        let base = points.len();
        points.extend_from_slice(&tri.vertices);
        cells.push((5, vec![base, base + 1, base + 2], 1));
    }
    let mut s = String::new();
    let _ = write!(s, "# vtk DataFile Version 3.0\ncut cell\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{:.12e} {:.12e} {:.12e}", p.x, p.y, p.z);
    }
    let total: usize = cells.iter().map(|(_, v, _)| v.len() + 1).sum();
    let _ = writeln!(s, "CELLS {} {}", cells.len(), total);
    for (_, v, _) in &cells {
        let _ = write!(s, "{}", v.len());
        for idx in v {
            let _ = write!(s, " {idx}");
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cells.len());
    for (t, _, _) in &cells {
        let _ = writeln!(s, "{t}");
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS kind int 1\nLOOKUP_TABLE default", cells.len());
    for (_, _, k) in &cells {
        let _ = writeln!(s, "{k}");
    }
    std::fs::write(path, s)?;
    Ok(())
}
