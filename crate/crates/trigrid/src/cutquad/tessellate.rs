//! Hexahedron-to-six-tetrahedra splitting and marching tetrahedra.

use crate::error::{Error, Result};
use crate::geom::{tet_signed_volume, triangle_area, Vec3};
use crate::sdf::ImplicitField;

/// Number of available six-tet splitting patterns.
pub const N_PATTERNS: usize = 3;

/// Main diagonal start corner per pattern, as local corner bits (x | y<<1 | z<<2)
/// in the parity-reflected frame. The diagonal runs to the opposite corner.
const PATTERN_ANCHOR: [u8; N_PATTERNS] = [0b000, 0b001, 0b010];

/// Axis visit orders for the six path tetrahedra of a Kuhn-style split.
const AXIS_PERMS: [[u8; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Six tetrahedra (as local corner ids 0..8, bit layout x | y<<1 | z<<2) that
/// tile the hexahedron. `parity` reflects the frame per axis so that the face
/// diagonals induced on shared faces agree between neighboring cells choosing
/// the same pattern; all index quadruples are positively oriented.
pub fn six_tet_split(pattern: usize, parity: [bool; 3]) -> [[u8; 4]; 6] {
    let reflect = |c: u8| -> u8 {
        let mut r = c;
        for (a, &p) in parity.iter().enumerate() {
            if p {
                r ^= 1 << a;
            }
        }
        r
    };
    let anchor = PATTERN_ANCHOR[pattern];
    let unit = |c: u8| Vec3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64);
    let mut tets = [[0u8; 4]; 6];
    for (t, perm) in AXIS_PERMS.iter().enumerate() {
        let mut c = anchor;
        let mut tet = [reflect(c), 0, 0, 0];
        for (step, &axis) in perm.iter().enumerate() {
            c ^= 1 << axis;
            tet[step + 1] = reflect(c);
        }
        if tet_signed_volume(unit(tet[0]), unit(tet[1]), unit(tet[2]), unit(tet[3])) < 0.0 {
            tet.swap(1, 2);
        }
        tets[t] = tet;
    }
    tets
}

/// Selects the pattern minimizing the number of mixed-sign tets (ties go to
/// the lowest pattern index). `inside` holds the corner signs (phi >= 0).
pub fn choose_pattern(inside: &[bool; 8], parity: [bool; 3]) -> (usize, [[u8; 4]; 6], usize) {
    let mut best: Option<(usize, [[u8; 4]; 6], usize)> = None;
    for pattern in 0..N_PATTERNS {
        let tets = six_tet_split(pattern, parity);
        let mixed = tets
            .iter()
            .filter(|tet| {
                let pos = tet.iter().filter(|&&c| inside[c as usize]).count();
                pos != 0 && pos != 4
            })
            .count();
        if best.map_or(true, |(_, _, m)| mixed < m) {
            best = Some((pattern, tets, mixed));
        }
    }
    best.unwrap()
}

/// Finds the zero of the field along the segment from `a` to `b` by bisection.
/// The endpoints must straddle the zero level set; an endpoint lying exactly
/// on it is returned directly. The returned point is within `tol` of the root
/// along the segment; at most 60 halvings.
pub fn bisect_edge_root(
    a: Vec3,
    fa: f64,
    b: Vec3,
    fb: f64,
    field: &dyn ImplicitField,
    tol: f64,
) -> Result<Vec3> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(Error::NoSignChange(fa, fb));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let len = (b - a).norm();
    let positive_low = fa > 0.0;
    for _ in 0..60 {
        if (hi - lo) * len <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = field.value(a + (b - a) * mid);
        if (fm >= 0.0) == positive_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(a + (b - a) * t)
}

/// Output collector for marching tetrahedra.
pub struct MarchOutput {
    pub inside: Vec<[Vec3; 4]>,
    pub boundary: Vec<([Vec3; 3], Vec3)>,
    pub min_tet_volume: f64,
    pub min_tri_area: f64,
}

impl MarchOutput {
    pub fn new(min_tet_volume: f64, min_tri_area: f64) -> Self {
        Self { inside: Vec::new(), boundary: Vec::new(), min_tet_volume, min_tri_area }
    }

    fn push_tet(&mut self, mut tet: [Vec3; 4]) {
        let v = tet_signed_volume(tet[0], tet[1], tet[2], tet[3]);
        if v.abs() <= self.min_tet_volume {
            return;
        }
        if v < 0.0 {
            tet.swap(2, 3);
        }
        self.inside.push(tet);
    }

    fn push_triangle(&mut self, tri: [Vec3; 3], toward_outside: Vec3) {
        if triangle_area(tri[0], tri[1], tri[2]) <= self.min_tri_area {
            return;
        }
        let centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        if n.dot(&(toward_outside - centroid)) >= 0.0 {
            self.boundary.push(([tri[0], tri[1], tri[2]], n.normalize()));
        } else {
            self.boundary.push(([tri[0], tri[2], tri[1]], -n.normalize()));
        }
    }
}

/// Tessellates the part of a tetrahedron with `phi >= 0` into tetrahedra plus
/// boundary triangles on the zero level set. `phi = 0` at a corner counts as
/// inside. Edge intersections come from the `root` callback, keyed by the
/// local corner pair so shared edges reuse identical points.
pub fn marching_tetrahedra(
    vertices: [Vec3; 4],
    values: [f64; 4],
    root: &mut dyn FnMut(usize, usize) -> Vec3,
    out: &mut MarchOutput,
) {
    let inside: Vec<usize> = (0..4).filter(|&i| values[i] >= 0.0).collect();
    let outside: Vec<usize> = (0..4).filter(|&i| values[i] < 0.0).collect();
    match inside.len() {
        4 => out.push_tet(vertices),
        0 => {}
        1 => {
            let a = inside[0];
            let p: Vec<Vec3> = outside.iter().map(|&o| root(a, o)).collect();
            out.push_tet([vertices[a], p[0], p[1], p[2]]);
            let toward = (vertices[outside[0]] + vertices[outside[1]] + vertices[outside[2]]) / 3.0;
            out.push_triangle([p[0], p[1], p[2]], toward);
        }
        3 => {
            let d = outside[0];
            let (a, b, c) = (inside[0], inside[1], inside[2]);
            let pa = root(a, d);
            let pb = root(b, d);
            let pc = root(c, d);
            // Prism (a, b, c | pa, pb, pc).
            out.push_tet([vertices[a], vertices[b], vertices[c], pa]);
            out.push_tet([vertices[b], vertices[c], pa, pb]);
            out.push_tet([vertices[c], pa, pb, pc]);
            out.push_triangle([pa, pb, pc], vertices[d]);
        }
        2 => {
            let (a, b) = (inside[0], inside[1]);
            let (c, d) = (outside[0], outside[1]);
            let pac = root(a, c);
            let pad = root(a, d);
            let pbc = root(b, c);
            let pbd = root(b, d);
            // Wedge split with the cut quad diagonal pac-pbd; the flipped-sign
            // case maps to the same diagonal, so inside and outside
            // tessellations complement exactly.
            out.push_tet([vertices[a], vertices[b], pbc, pbd]);
            out.push_tet([vertices[a], pbc, pac, pbd]);
            out.push_tet([vertices[a], pac, pad, pbd]);
            let toward = 0.5 * (vertices[c] + vertices[d]);
            out.push_triangle([pac, pad, pbd], toward);
            out.push_triangle([pac, pbd, pbc], toward);
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SplitMix64;

    fn unit_corners() -> [Vec3; 8] {
        let mut c = [Vec3::zeros(); 8];
        for (i, v) in c.iter_mut().enumerate() {
            *v = Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64);
        }
        c
    }

    #[test]
    fn patterns_tile_the_cube() {
        let corners = unit_corners();
        for pattern in 0..N_PATTERNS {
            for p in 0..8u8 {
                let parity = [p & 1 != 0, p & 2 != 0, p & 4 != 0];
                let tets = six_tet_split(pattern, parity);
                let mut vol = 0.0;
                for tet in &tets {
                    let v = tet_signed_volume(
                        corners[tet[0] as usize],
                        corners[tet[1] as usize],
                        corners[tet[2] as usize],
                        corners[tet[3] as usize],
                    );
                    assert!(v > 0.0, "pattern {pattern} parity {parity:?}: negative tet");
                    vol += v;
                }
                assert!((vol - 1.0).abs() < 1e-14);
                // Random points land in exactly one tet (strictly interior).
                let mut rng = SplitMix64::new(pattern as u64 * 8 + p as u64);
                for _ in 0..200 {
                    let x = Vec3::new(rng.next_f64(), rng.next_f64(), rng.next_f64());
                    let mut hits = 0;
                    for tet in &tets {
                        if point_in_tet(
                            x,
                            [
                                corners[tet[0] as usize],
                                corners[tet[1] as usize],
                                corners[tet[2] as usize],
                                corners[tet[3] as usize],
                            ],
                            -1e-12,
                        ) {
                            hits += 1;
                        }
                    }
                    assert!(hits >= 1, "uncovered point {x:?}");
                }
            }
        }
    }

    fn point_in_tet(x: Vec3, t: [Vec3; 4], tol: f64) -> bool {
        let v = tet_signed_volume(t[0], t[1], t[2], t[3]);
        let b0 = tet_signed_volume(x, t[1], t[2], t[3]) / v;
        let b1 = tet_signed_volume(t[0], x, t[2], t[3]) / v;
        let b2 = tet_signed_volume(t[0], t[1], x, t[3]) / v;
        let b3 = tet_signed_volume(t[0], t[1], t[2], x) / v;
        b0 >= tol && b1 >= tol && b2 >= tol && b3 >= tol
    }

    #[test]
    fn shared_faces_agree_between_neighbors() {
        // Two cells adjacent along x with the parity rule and the same
        // pattern produce the same diagonal on the shared face.
        for pattern in 0..N_PATTERNS {
            let left_parity = [false, true, false];
            let right_parity = [true, true, false];
            let left = six_tet_split(pattern, left_parity);
            let right = six_tet_split(pattern, right_parity);
            // Shared face: x=1 of the left cell, x=0 of the right cell.
            // Collect face diagonals as (y,z) bit pairs of connected corners.
            let collect = |tets: &[[u8; 4]; 6], face_bit: u8| {
                let mut diagonals = Vec::new();
                for tet in tets {
                    let on_face: Vec<u8> =
                        tet.iter().copied().filter(|c| c & 1 == face_bit).collect();
                    if on_face.len() == 3 {
                        // A face triangle; its hypotenuse is the diagonal
                        // (the corner pair differing in both y and z).
                        for i in 0..3 {
                            for j in i + 1..3 {
                                let d = (on_face[i] ^ on_face[j]) >> 1;
                                if d == 0b11 {
                                    let mut pair = [on_face[i] >> 1, on_face[j] >> 1];
                                    pair.sort_unstable();
                                    diagonals.push(pair);
                                }
                            }
                        }
                    }
                }
                diagonals.sort_unstable();
                diagonals.dedup();
                diagonals
            };
            let left_diag = collect(&left, 1);
            let right_diag = collect(&right, 0);
            assert_eq!(left_diag.len(), 1);
            assert_eq!(left_diag, right_diag, "pattern {pattern}");
        }
    }

    #[test]
    fn pattern_choice_minimizes_mixed_tets() {
        // Face-parallel plane split: corners {+,+,+,+,-,-,-,-} along z.
        let inside = [true, true, true, true, false, false, false, false];
        let (chosen, _, mixed) = choose_pattern(&inside, [false; 3]);
        // Verify against explicit enumeration.
        let mut counts = Vec::new();
        for pattern in 0..N_PATTERNS {
            let tets = six_tet_split(pattern, [false; 3]);
            counts.push(
                tets.iter()
                    .filter(|tet| {
                        let pos = tet.iter().filter(|&&c| inside[c as usize]).count();
                        pos != 0 && pos != 4
                    })
                    .count(),
            );
        }
        let min = *counts.iter().min().unwrap();
        assert_eq!(mixed, min);
        assert!(mixed <= 6);
        assert_eq!(counts[chosen], min);
        // Ties resolve to the lowest index.
        let first_min = counts.iter().position(|&c| c == min).unwrap();
        assert_eq!(chosen, first_min);
    }

    #[test]
    fn bisection_linear_cases() {
        let field = |x: Vec3| 1.0 - 2.0 * x.x; // root at x = 0.5
        let a = Vec3::zeros();
        let b = Vec3::new(1.0, 0.0, 0.0);
        let tol = 1e-6;
        let r = bisect_edge_root(a, field(a), b, field(b), &field, tol).unwrap();
        assert!((r.x - 0.5).abs() <= tol);

        // phi(a) = 3, phi(b) = -1: root at parameter 0.75.
        let field = |x: Vec3| 3.0 - 4.0 * x.x;
        let r = bisect_edge_root(a, field(a), b, field(b), &field, tol).unwrap();
        assert!((r.x - 0.75).abs() <= tol);

        // Same signs is an error.
        let field = |_x: Vec3| 1.0;
        assert!(bisect_edge_root(a, 1.0, b, 1.0, &field, tol).is_err());
    }

    #[test]
    fn bisection_on_trilinear_sphere_edge() {
        use crate::geom::Aabb;
        use crate::sdf::{AnalyticSdf, SparseDistanceGrid};
        let h = 1.0 / 64.0;
        let grid = SparseDistanceGrid::from_field(
            &AnalyticSdf::sphere(Vec3::zeros(), 1.0),
            Aabb::cube(Vec3::zeros(), 2.4),
            h,
            3,
        );
        let a = Vec3::new(0.95, 0.1, 0.07);
        let b = Vec3::new(1.05, 0.1, 0.07);
        let fa = grid.value(a);
        let fb = grid.value(b);
        let r = bisect_edge_root(a, fa, b, fb, &grid, h / 100.0).unwrap();
        assert!((r.norm() - 1.0).abs() < 4.0 * h * h, "radius {}", r.norm());
    }

    #[test]
    fn marching_full_and_empty() {
        let verts = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let mut out = MarchOutput::new(1e-15, 1e-12);
        marching_tetrahedra(verts, [1.0; 4], &mut |_, _| unreachable!(), &mut out);
        assert_eq!(out.inside.len(), 1);
        assert!(out.boundary.is_empty());

        let mut out = MarchOutput::new(1e-15, 1e-12);
        marching_tetrahedra(verts, [-1.0; 4], &mut |_, _| unreachable!(), &mut out);
        assert!(out.inside.is_empty());
        assert!(out.boundary.is_empty());
    }

    #[test]
    fn marching_one_positive_similar_tet_volume() {
        // Linear phi with roots at edge midpoints: the inside corner tet has
        // (1/2)^3 of the volume.
        let verts = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let values = [1.0, -1.0, -1.0, -1.0];
        let mut out = MarchOutput::new(1e-15, 1e-12);
        marching_tetrahedra(
            verts,
            values,
            &mut |a, b| 0.5 * (verts[a] + verts[b]),
            &mut out,
        );
        assert_eq!(out.inside.len(), 1);
        assert_eq!(out.boundary.len(), 1);
        let t = out.inside[0];
        let v = tet_signed_volume(t[0], t[1], t[2], t[3]);
        assert!((v - (1.0 / 6.0) / 8.0).abs() < 1e-14);
        // Normal points away from the inside corner (vertex 0).
        let (tri, n) = (out.boundary[0].0, out.boundary[0].1);
        let centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
        assert!(n.dot(&(centroid - verts[0])) > 0.0);
        assert!((n.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn marching_cases_complement_exactly() {
        // For every sign pattern, inside(phi) + inside(-phi) tiles the tet.
        let verts = [
            Vec3::new(0.1, 0.0, 0.2),
            Vec3::new(1.3, 0.1, 0.0),
            Vec3::new(0.0, 1.1, 0.1),
            Vec3::new(0.2, 0.1, 0.9),
        ];
        let total = tet_signed_volume(verts[0], verts[1], verts[2], verts[3]).abs();
        let mut rng = SplitMix64::new(3);
        for mask in 0..16u32 {
            let values: [f64; 4] = std::array::from_fn(|i| {
                let mag = 0.3 + rng.next_f64();
                if mask & (1 << i) != 0 {
                    mag
                } else {
                    -mag
                }
            });
            // Shared root cache so both passes use identical points.
            let mut roots: std::collections::HashMap<(usize, usize), Vec3> = Default::default();
            let mut root_fn = |a: usize, b: usize| {
                let key = if a < b { (a, b) } else { (b, a) };
                *roots.entry(key).or_insert_with(|| {
                    let t = values[a] / (values[a] - values[b]);
                    verts[a] + (verts[b] - verts[a]) * t
                })
            };
            let mut inside = MarchOutput::new(1e-15, 1e-12);
            marching_tetrahedra(verts, values, &mut root_fn, &mut inside);
            let flipped: [f64; 4] = std::array::from_fn(|i| -values[i]);
            let mut outside = MarchOutput::new(1e-15, 1e-12);
            marching_tetrahedra(verts, flipped, &mut root_fn, &mut outside);
            let vol = |out: &MarchOutput| -> f64 {
                out.inside
                    .iter()
                    .map(|t| tet_signed_volume(t[0], t[1], t[2], t[3]).abs())
                    .sum()
            };
            let sum = vol(&inside) + vol(&outside);
            assert!(
                (sum - total).abs() < 1e-13,
                "mask {mask:04b}: {sum} vs {total}"
            );
        }
    }
}
