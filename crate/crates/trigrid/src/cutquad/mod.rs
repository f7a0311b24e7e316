//! Per-cut-cell quadrature: a bottom-up octree of merged box cells plus
//! marching-tetrahedra tessellation of the boundary-cut leaves, and emission
//! of volume and surface quadrature points.

mod rules;
mod tessellate;

pub use rules::{gauss_1d, tet_rule, tri_rule};
pub use tessellate::{
    bisect_edge_root, choose_pattern, marching_tetrahedra, six_tet_split, MarchOutput, N_PATTERNS,
};

use crate::geom::{tet_signed_volume, triangle_area, Aabb, Vec3};
use crate::sdf::ImplicitField;
use std::collections::HashMap;

/// A merged axis-aligned box cell of the quadrature octree.
#[derive(Clone, Copy, Debug)]
pub struct QuadCell {
    pub anchor: Vec3,
    pub size: f64,
    /// Sub-refinement level within the owning cell (0 = the cell itself).
    pub level: u32,
}

impl QuadCell {
    pub fn volume(&self) -> f64 {
        self.size * self.size * self.size
    }
}

/// Positively oriented tetrahedron of the inside tessellation.
#[derive(Clone, Copy, Debug)]
pub struct Simplex {
    pub vertices: [Vec3; 4],
}

impl Simplex {
    pub fn volume(&self) -> f64 {
        tet_signed_volume(self.vertices[0], self.vertices[1], self.vertices[2], self.vertices[3])
    }
}

/// Triangle approximating the boundary inside a cut quadrature cell, with the
/// unit normal pointing out of the domain.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryTriangle {
    pub vertices: [Vec3; 3],
    pub normal: Vec3,
}

impl BoundaryTriangle {
    pub fn area(&self) -> f64 {
        triangle_area(self.vertices[0], self.vertices[1], self.vertices[2])
    }
}

/// Decomposition of one (cut) cell for integration purposes.
#[derive(Clone, Debug, Default)]
pub struct QuadratureDecomposition {
    /// Merged cells fully inside the domain.
    pub active_cells: Vec<QuadCell>,
    /// Merged cells fully outside (kept for complement checks).
    pub inactive_cells: Vec<QuadCell>,
    /// Number of finest-level cells cut by the boundary.
    pub cut_leaf_count: usize,
    pub simplices: Vec<Simplex>,
    pub boundary: Vec<BoundaryTriangle>,
}

impl QuadratureDecomposition {
    /// Measure of the inside part.
    pub fn inside_volume(&self) -> f64 {
        self.active_cells.iter().map(QuadCell::volume).sum::<f64>()
            + self.simplices.iter().map(Simplex::volume).sum::<f64>()
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundary.iter().map(BoundaryTriangle::area).sum()
    }
}

/// Volume quadrature point in physical coordinates.
#[derive(Clone, Copy, Debug)]
pub struct VolPoint {
    pub x: Vec3,
    pub w: f64,
}

/// Surface quadrature point with the stored outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct SurfPoint {
    pub x: Vec3,
    pub w: f64,
    pub n: Vec3,
}

/// Builds the quadrature decomposition of the cell `cell_box`:
///
/// 1. evaluate the field on the `(2^r_q + 1)^3` sub-lattice,
/// 2. classify the `8^r_q` leaf sub-cells by corner signs,
/// 3. merge uniform siblings bottom-up along the Z-curve into maximal boxes,
/// 4. split each cut leaf into six tetrahedra (pattern chosen to minimize
///    mixed-sign tets, face diagonals fixed by global parity) and tessellate
///    with marching tetrahedra; edge roots come from bisection to `root_tol`.
///
/// `cell_coords` are the integer coordinates of the cell at its own level,
/// used for the parity rule.
pub fn decompose_cell(
    cell_box: Aabb,
    cell_coords: [u32; 3],
    field: &dyn ImplicitField,
    r_q: u32,
    root_tol: f64,
) -> QuadratureDecomposition {
    assert!(r_q <= 6, "quadrature refinement limited to 6 levels");
    let n = 1usize << r_q;
    let h_q = cell_box.extent().x / n as f64;
    let anchor = cell_box.min;
    let nn = n + 1;
    // Sub-lattice values.
    let mut values = vec![0.0f64; nn * nn * nn];
    for k in 0..nn {
        for j in 0..nn {
            for i in 0..nn {
                let p = anchor + Vec3::new(i as f64, j as f64, k as f64) * h_q;
                values[i + nn * (j + nn * k)] = field.value(p);
            }
        }
    }
    let node_id = |i: usize, j: usize, k: usize| (i + nn * (j + nn * k)) as u32;

    // Leaf classification: 0 = active, 1 = inactive, 2 = cut.
    let mut status = Vec::with_capacity(r_q as usize + 1);
    let mut leaf_status = vec![0u8; n * n * n];
    for code in 0..(n * n * n) as u64 {
        let (x, y, z) = crate::morton::decode(code);
        let (x, y, z) = (x as usize, y as usize, z as usize);
        let mut has_pos = false;
        let mut has_neg = false;
        for c in 0..8usize {
            let v = values[(x + (c & 1)) + nn * ((y + ((c >> 1) & 1)) + nn * (z + (c >> 2)))];
            if v >= 0.0 {
                has_pos = true;
            } else {
                has_neg = true;
            }
        }
        leaf_status[code as usize] = match (has_pos, has_neg) {
            (true, false) => 0,
            (false, true) => 1,
            _ => 2,
        };
    }
    status.push(leaf_status);
    // Reduce along the Z-curve: eight uniform siblings merge into the parent.
    for _ in 0..r_q {
        let fine = status.last().unwrap();
        let mut coarse = vec![0u8; fine.len() / 8];
        for (p, s) in coarse.iter_mut().enumerate() {
            let first = fine[8 * p];
            *s = if first != 2 && fine[8 * p..8 * p + 8].iter().all(|&c| c == first) {
                first
            } else {
                2
            };
        }
        status.push(coarse);
    }
    status.reverse(); // status[level][morton] with level 0 = whole cell

    let mut dec = QuadratureDecomposition::default();
    let mut roots: HashMap<(u32, u32), Vec3> = HashMap::new();
    let mut stack: Vec<(u32, u64)> = vec![(0, 0)];
    while let Some((level, code)) = stack.pop() {
        let s = status[level as usize][code as usize];
        if s != 2 {
            let (x, y, z) = crate::morton::decode(code);
            let size = h_q * (1u64 << (r_q - level)) as f64;
            let cell = QuadCell {
                anchor: anchor + Vec3::new(x as f64, y as f64, z as f64) * size,
                size,
                level,
            };
            if s == 0 {
                dec.active_cells.push(cell);
            } else {
                dec.inactive_cells.push(cell);
            }
            continue;
        }
        if level < r_q {
            for child in (0..8u64).rev() {
                stack.push((level + 1, 8 * code + child));
            }
            continue;
        }
        // Cut leaf: tessellate.
        dec.cut_leaf_count += 1;
        let (x, y, z) = crate::morton::decode(code);
        let (x, y, z) = (x as usize, y as usize, z as usize);
        let mut corner_pos = [Vec3::zeros(); 8];
        let mut corner_val = [0.0f64; 8];
        let mut corner_ids = [0u32; 8];
        let mut inside = [false; 8];
        for c in 0..8usize {
            let (ci, cj, ck) = (x + (c & 1), y + ((c >> 1) & 1), z + (c >> 2));
            corner_pos[c] = anchor + Vec3::new(ci as f64, cj as f64, ck as f64) * h_q;
            corner_val[c] = values[ci + nn * (cj + nn * ck)];
            corner_ids[c] = node_id(ci, cj, ck);
            inside[c] = corner_val[c] >= 0.0;
        }
        let parity = [
            (cell_coords[0] as u64 * n as u64 + x as u64) & 1 == 1,
            (cell_coords[1] as u64 * n as u64 + y as u64) & 1 == 1,
            (cell_coords[2] as u64 * n as u64 + z as u64) & 1 == 1,
        ];
        // The split pattern is fixed by the parity rule alone: neighboring
        // cells then induce identical diagonals on shared faces, so the
        // union of the per-cell tessellations bounds exactly the surface
        // triangles. Choosing patterns per cell from the corner signs would
        // crack the reconstruction at faces where the field is nonlinear.
        let tets = six_tet_split(0, parity);
        let mut out = MarchOutput::new(1e-12 * h_q * h_q * h_q, 1e-12 * h_q * h_q);
        for tet in &tets {
            let verts = [
                corner_pos[tet[0] as usize],
                corner_pos[tet[1] as usize],
                corner_pos[tet[2] as usize],
                corner_pos[tet[3] as usize],
            ];
            let vals = [
                corner_val[tet[0] as usize],
                corner_val[tet[1] as usize],
                corner_val[tet[2] as usize],
                corner_val[tet[3] as usize],
            ];
            let ids = [
                corner_ids[tet[0] as usize],
                corner_ids[tet[1] as usize],
                corner_ids[tet[2] as usize],
                corner_ids[tet[3] as usize],
            ];
            let mut root_fn = |a: usize, b: usize| {
                let key = if ids[a] < ids[b] { (ids[a], ids[b]) } else { (ids[b], ids[a]) };
                *roots.entry(key).or_insert_with(|| {
                    bisect_edge_root(verts[a], vals[a], verts[b], vals[b], field, root_tol)
                        .expect("marching edge must straddle the boundary")
                })
            };
            marching_tetrahedra(verts, vals, &mut root_fn, &mut out);
        }
        dec.simplices.extend(out.inside.into_iter().map(|vertices| Simplex { vertices }));
        dec.boundary.extend(
            out.boundary.into_iter().map(|(vertices, normal)| BoundaryTriangle { vertices, normal }),
        );
    }
    dec
}

/// Tensor-product Gauss points over an axis-aligned box, exact to degree
/// `2 points - 1` per axis.
pub fn box_gauss(cell: &Aabb, points: usize, out: &mut Vec<VolPoint>) {
    let rule = gauss_1d(points);
    let ext = cell.extent();
    let vol = cell.volume();
    for &(zx, wz) in rule {
        for &(yx, wy) in rule {
            for &(xx, wx) in rule {
                out.push(VolPoint {
                    x: cell.min + Vec3::new(xx * ext.x, yx * ext.y, zx * ext.z),
                    w: wx * wy * wz * vol,
                });
            }
        }
    }
}

/// Emits volume and surface quadrature for a decomposition: tensor Gauss of
/// `(p+1)^3` points on merged boxes, a symmetric rule on each simplex, and a
/// triangle rule with the stored normal on each boundary triangle.
///
/// Rule degrees are chosen so that the residual of a degree-p solution
/// integrates exactly for tensor-product bases: gradients of Q_p shapes have
/// total degree 3p - 1 and their traces reach 3p + 1, so the simplex rule is
/// degree 3p and the triangle rule degree 3p + 2 (rounded up to available
/// rules).
pub fn emit_quadrature(
    dec: &QuadratureDecomposition,
    p: usize,
) -> (Vec<VolPoint>, Vec<SurfPoint>) {
    let (tet_degree, tri_degree) = if p == 1 { (2, 4) } else { (6, 8) };
    let mut vol = Vec::new();
    for cell in &dec.active_cells {
        let b = Aabb::new(cell.anchor, cell.anchor + Vec3::repeat(cell.size));
        box_gauss(&b, p + 1, &mut vol);
    }
    let rule = tet_rule(tet_degree);
    for s in &dec.simplices {
        let v = s.volume();
        for &(l, w) in rule {
            vol.push(VolPoint {
                x: s.vertices[0] * l[0]
                    + s.vertices[1] * l[1]
                    + s.vertices[2] * l[2]
                    + s.vertices[3] * l[3],
                w: w * v,
            });
        }
    }
    let mut surf = Vec::new();
    let trule = tri_rule(tri_degree);
    for t in &dec.boundary {
        let area = t.area();
        for &(l, w) in trule {
            surf.push(SurfPoint {
                x: t.vertices[0] * l[0] + t.vertices[1] * l[1] + t.vertices[2] * l[2],
                w: w * area,
                n: t.normal,
            });
        }
    }
    (vol, surf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SplitMix64;
    use crate::sdf::AnalyticSdf;

    fn unit_cell() -> Aabb {
        Aabb::new(Vec3::zeros(), Vec3::repeat(1.0))
    }

    #[test]
    fn fully_active_cell_merges_to_one() {
        let field = AnalyticSdf::sphere(Vec3::zeros(), 10.0);
        let dec = decompose_cell(unit_cell(), [0; 3], &field, 3, 1e-8);
        assert_eq!(dec.active_cells.len(), 1);
        assert_eq!(dec.active_cells[0].level, 0);
        assert!(dec.simplices.is_empty() && dec.boundary.is_empty());
        assert_eq!(dec.cut_leaf_count, 0);
    }

    #[test]
    fn r0_cut_cell_is_single_cut_leaf() {
        let field = AnalyticSdf::half_space(Vec3::new(1.0, 0.0, 0.0), 0.37);
        let dec = decompose_cell(unit_cell(), [0; 3], &field, 0, 1e-8);
        assert_eq!(dec.cut_leaf_count, 1);
        assert!(dec.active_cells.is_empty() && dec.inactive_cells.is_empty());
        assert!(!dec.simplices.is_empty());
    }

    #[test]
    fn half_space_merge_matches_brute_force_oracle() {
        // Plane x = 0.25 cuts the cell; compare merged active cell count with
        // an exhaustive merge simulation on the leaf lattice.
        let field = AnalyticSdf::half_space(Vec3::new(1.0, 0.0, 0.0), 0.25);
        let r_q = 2u32;
        let n = 1usize << r_q;
        let dec = decompose_cell(unit_cell(), [0; 3], &field, r_q, 1e-9);

        // Oracle: classify leaves by corner signs, then merge uniform octants
        // level by level.
        let h = 1.0 / n as f64;
        let classify = |x: usize, y: usize, z: usize| -> u8 {
            let mut pos = false;
            let mut neg = false;
            for c in 0..8usize {
                let p = Vec3::new(
                    (x + (c & 1)) as f64 * h,
                    (y + ((c >> 1) & 1)) as f64 * h,
                    (z + (c >> 2)) as f64 * h,
                );
                if field.eval(p) >= 0.0 {
                    pos = true;
                } else {
                    neg = true;
                }
            }
            match (pos, neg) {
                (true, false) => 0,
                (false, true) => 1,
                _ => 2,
            }
        };
        let mut grids: Vec<Vec<u8>> = Vec::new();
        let mut cur = vec![0u8; n * n * n];
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    cur[x + n * (y + n * z)] = classify(x, y, z);
                }
            }
        }
        grids.push(cur);
        let mut m = n;
        while m > 1 {
            let fine = grids.last().unwrap().clone();
            m /= 2;
            let mut coarse = vec![0u8; m * m * m];
            for z in 0..m {
                for y in 0..m {
                    for x in 0..m {
                        let mut s = None;
                        let mut uniform = true;
                        for c in 0..8usize {
                            let v = fine[(2 * x + (c & 1))
                                + 2 * m * ((2 * y + ((c >> 1) & 1)) + 2 * m * (2 * z + (c >> 2)))];
                            match s {
                                None => s = Some(v),
                                Some(u) if u == v && v != 2 => {}
                                _ => uniform = false,
                            }
                        }
                        coarse[x + m * (y + m * z)] = if uniform { s.unwrap() } else { 2 };
                    }
                }
            }
            grids.push(coarse);
        }
        // Count maximal uniform-active boxes top-down.
        fn count_active(grids: &[Vec<u8>], level: usize, m: usize, x: usize, y: usize, z: usize) -> usize {
            let s = grids[grids.len() - 1 - level][x + m * (y + m * z)];
            if s == 0 {
                return 1;
            }
            if s == 1 || level == grids.len() - 1 {
                return 0;
            }
            let mut total = 0;
            for c in 0..8usize {
                total += count_active(
                    grids,
                    level + 1,
                    2 * m,
                    2 * x + (c & 1),
                    2 * y + ((c >> 1) & 1),
                    2 * z + (c >> 2),
                );
            }
            total
        }
        let expected = count_active(&grids, 0, 1, 0, 0, 0);
        assert_eq!(dec.active_cells.len(), expected);
        // Plane at x = 1/4 with n = 4 cuts the second column of leaves.
        assert_eq!(dec.cut_leaf_count, n * n);
    }

    #[test]
    fn inside_and_outside_tessellations_complement() {
        struct Flip<'a>(&'a AnalyticSdf);
        impl crate::sdf::ImplicitField for Flip<'_> {
            fn value(&self, x: Vec3) -> f64 {
                -self.0.eval(x)
            }
            fn gradient(&self, x: Vec3) -> Vec3 {
                -self.0.grad(x)
            }
        }
        let shapes = [
            AnalyticSdf::sphere(Vec3::new(0.4, 0.45, 0.55), 0.42),
            AnalyticSdf::half_space(Vec3::new(0.3, -0.8, 0.52).normalize(), 0.2),
            AnalyticSdf::cylinder(Vec3::new(0.5, 0.5, 0.5), 2, 0.3, 2.0),
        ];
        for (i, field) in shapes.iter().enumerate() {
            let dec = decompose_cell(unit_cell(), [0; 3], field, 3, 1e-10);
            let flipped = decompose_cell(unit_cell(), [0; 3], &Flip(field), 3, 1e-10);
            let total = dec.inside_volume() + flipped.inside_volume();
            assert!(
                (total - 1.0).abs() < 1e-10,
                "shape {i}: inside+outside = {total}"
            );
        }
    }

    #[test]
    fn emitted_weights_sum_to_cell_volume_when_active() {
        let field = AnalyticSdf::sphere(Vec3::zeros(), 10.0);
        let cell = Aabb::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.5, 2.5, 3.5));
        let dec = decompose_cell(cell, [0; 3], &field, 2, 1e-8);
        for p in [1usize, 2] {
            let (vol, surf) = emit_quadrature(&dec, p);
            assert_eq!(vol.len(), (p + 1).pow(3));
            assert!(surf.is_empty());
            let w: f64 = vol.iter().map(|q| q.w).sum();
            assert!((w - cell.volume()).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_integrates_polynomials_on_half_space_cut() {
        // For a plane cut the tessellation is exact, so degree-2p integration
        // of monomials over the inside part must match closed forms.
        let field = AnalyticSdf::half_space(Vec3::new(1.0, 0.0, 0.0), 0.5);
        let dec = decompose_cell(unit_cell(), [0; 3], &field, 2, 1e-13);
        for p in [1usize, 2] {
            let (vol, _) = emit_quadrature(&dec, p);
            // Integral of x^a y^b z^c over [0, 1/2] x [0,1] x [0,1].
            for (a, b, c) in [(0, 0, 0), (1, 0, 0), (2, 0, 0), (1, 1, 0), (0, 2, 0)] {
                let exact = (0.5f64.powi(a + 1) / (a + 1) as f64)
                    * (1.0 / (b + 1) as f64)
                    * (1.0 / (c + 1) as f64);
                let q: f64 = vol
                    .iter()
                    .map(|q| q.w * q.x.x.powi(a) * q.x.y.powi(b) * q.x.z.powi(c))
                    .sum();
                assert!(
                    (q - exact).abs() < 1e-12,
                    "p={p} x^{a} y^{b} z^{c}: {q} vs {exact}"
                );
            }
            // Surface: the cut plane has area 1 and normal +x.
            let (_, surf) = emit_quadrature(&dec, p);
            let area: f64 = surf.iter().map(|s| s.w).sum();
            assert!((area - 1.0).abs() < 1e-12);
            for s in &surf {
                assert!((s.n - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sphere_volume_and_area_converge() {
        let field = AnalyticSdf::sphere(Vec3::new(0.5, 0.5, 0.5), 0.45);
        let exact_v = 4.0 / 3.0 * std::f64::consts::PI * 0.45f64.powi(3);
        let exact_a = 4.0 * std::f64::consts::PI * 0.45f64.powi(2);
        let mut verr = Vec::new();
        let mut aerr = Vec::new();
        for r_q in [2u32, 3, 4] {
            let dec = decompose_cell(unit_cell(), [0; 3], &field, r_q, 1e-12);
            verr.push((dec.inside_volume() - exact_v).abs() / exact_v);
            aerr.push((dec.boundary_area() - exact_a).abs() / exact_a);
        }
        // Chord error of the inscribed piecewise-linear sphere is about
        // h^2 / (4 R^2) = 0.48% at r_q = 4.
        assert!(verr[2] < 8e-3, "volume errors {verr:?}");
        assert!(aerr[2] < 2e-2, "area errors {aerr:?}");
        assert!(verr[0] > verr[1] && verr[1] > verr[2], "{verr:?}");
        assert!(aerr[0] > aerr[1] && aerr[1] > aerr[2], "{aerr:?}");
    }

    #[test]
    fn boundary_triangles_are_watertight_within_cell_interior() {
        // Every boundary-triangle edge is either shared by exactly two
        // boundary triangles or lies on a quadrature-cell face.
        let field = AnalyticSdf::sphere(Vec3::new(0.5, 0.5, 0.5), 0.31);
        let r_q = 3u32;
        let dec = decompose_cell(unit_cell(), [0; 3], &field, r_q, 1e-12);
        assert!(!dec.boundary.is_empty());
        let h_q = 1.0 / (1 << r_q) as f64;
        let quant = |v: Vec3| {
            (
                (v.x / h_q * 1e7).round() as i64,
                (v.y / h_q * 1e7).round() as i64,
                (v.z / h_q * 1e7).round() as i64,
            )
        };
        let mut edge_count: HashMap<((i64, i64, i64), (i64, i64, i64)), usize> = HashMap::new();
        for t in &dec.boundary {
            for k in 0..3 {
                let a = quant(t.vertices[k]);
                let b = quant(t.vertices[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let on_lattice_face = |q: (i64, i64, i64)| {
            [q.0, q.1, q.2].iter().any(|&c| (c % 10_000_000).abs() < 10)
        };
        for (&(a, b), &count) in &edge_count {
            if count == 2 {
                continue;
            }
            // Unmatched edges must lie on a shared lattice face plane.
            assert!(
                count == 1 && on_lattice_face(a) && on_lattice_face(b),
                "edge {a:?}-{b:?} counted {count}"
            );
        }
    }

    #[test]
    fn random_quadric_volumes_match_monte_carlo() {
        // Smaller version of the acceptance criterion: 8 random quadrics.
        let mut rng = SplitMix64::new(2024);
        for case in 0..8 {
            let center = Vec3::new(
                rng.range(0.2, 0.8),
                rng.range(0.2, 0.8),
                rng.range(0.2, 0.8),
            );
            let radius = rng.range(0.35, 0.7);
            let field = AnalyticSdf::sphere(center, radius);
            let dec = decompose_cell(unit_cell(), [0; 3], &field, 4, 1e-12);
            let n_mc = 200_000usize;
            let mut hits = 0usize;
            for _ in 0..n_mc {
                let x = Vec3::new(rng.next_f64(), rng.next_f64(), rng.next_f64());
                if field.eval(x) >= 0.0 {
                    hits += 1;
                }
            }
            let p = hits as f64 / n_mc as f64;
            let sigma = (p * (1.0 - p) / n_mc as f64).sqrt();
            let v = dec.inside_volume();
            assert!(
                (v - p).abs() <= 3.5 * sigma + 5e-4,
                "case {case}: {v} vs MC {p} (sigma {sigma:.2e})"
            );
        }
    }
}
