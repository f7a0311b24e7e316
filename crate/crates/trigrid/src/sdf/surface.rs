//! Triangle surfaces and exact signed point-to-mesh distance.

use crate::error::{Error, Result};
use crate::geom::{closest_point_on_triangle, triangle_area, Aabb, TriFeature, Vec3};
use std::collections::HashMap;

/// A watertight, consistently oriented triangle mesh.
#[derive(Clone, Debug)]
pub struct TriangleSurface {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    /// Per-triangle outward unit normals.
    pub normals: Vec<Vec3>,
}

impl TriangleSurface {
    /// Builds a surface and checks the mesh invariants: valid indices,
    /// non-degenerate triangles, and globally consistent orientation (every
    /// interior edge traversed once in each direction).
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let bbox = Aabb::from_points(vertices.iter())
            .ok_or_else(|| Error::InvalidSurface("empty vertex list".into()))?;
        let diag2 = bbox.diagonal().powi(2);
        let mut normals = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= vertices.len() {
                    return Err(Error::InvalidSurface(format!(
                        "triangle {t} references vertex {i} out of {}",
                        vertices.len()
                    )));
                }
            }
            let [a, b, c] = [vertices[tri[0] as usize], vertices[tri[1] as usize], vertices[tri[2] as usize]];
            let area = triangle_area(a, b, c);
            if area <= 1e-12 * diag2 {
                return Err(Error::InvalidSurface(format!("triangle {t} is degenerate (area {area:.3e})")));
            }
            normals.push((b - a).cross(&(c - a)).normalize());
        }
        // Orientation: each directed edge must appear exactly once, and its
        // reverse must exist.
        let mut edges: HashMap<(u32, u32), u32> = HashMap::new();
        for tri in &triangles {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                *edges.entry(e).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edges {
            if count != 1 {
                return Err(Error::InvalidSurface(format!("directed edge ({a}, {b}) used {count} times")));
            }
            if !edges.contains_key(&(b, a)) {
                return Err(Error::InvalidSurface(format!("open or inconsistently oriented edge ({a}, {b})")));
            }
        }
        Ok(Self { vertices, triangles, normals })
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter()).expect("non-empty surface")
    }

    pub fn triangle_vertices(&self, t: usize) -> [Vec3; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0] as usize],
            self.vertices[tri[1] as usize],
            self.vertices[tri[2] as usize],
        ]
    }
}

struct BvhNode {
    bbox: Aabb,
    /// Child index pair for inner nodes, or triangle range for leaves.
    kind: NodeKind,
}

enum NodeKind {
    Inner(u32, u32),
    Leaf(u32, u32),
}

/// BVH-accelerated exact signed distance queries against a triangle surface.
///
/// The sign comes from the angle-weighted pseudonormal of the nearest feature,
/// which is robust for watertight meshes.
pub struct MeshDistance {
    surface: TriangleSurface,
    nodes: Vec<BvhNode>,
    /// Triangle indices, permuted so leaves own contiguous ranges.
    order: Vec<u32>,
    vertex_pseudonormals: Vec<Vec3>,
    edge_pseudonormals: HashMap<(u32, u32), Vec3>,
}

const LEAF_SIZE: usize = 4;

impl MeshDistance {
    pub fn new(surface: TriangleSurface) -> Self {
        let n = surface.triangles.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let tri_boxes: Vec<Aabb> = (0..n)
            .map(|t| {
                let v = surface.triangle_vertices(t);
                Aabb::from_points(v.iter()).unwrap()
            })
            .collect();
        let centroids: Vec<Vec3> = (0..n)
            .map(|t| {
                let v = surface.triangle_vertices(t);
                (v[0] + v[1] + v[2]) / 3.0
            })
            .collect();
        let mut nodes = Vec::new();
        build_node(&mut nodes, &mut order, &tri_boxes, &centroids, 0, n);

        // Angle-weighted vertex pseudonormals and edge pseudonormals.
        let mut vertex_pseudonormals = vec![Vec3::zeros(); surface.vertices.len()];
        let mut edge_pseudonormals: HashMap<(u32, u32), Vec3> = HashMap::new();
        for (t, tri) in surface.triangles.iter().enumerate() {
            let v = surface.triangle_vertices(t);
            let n = surface.normals[t];
            for k in 0..3 {
                let (prev, next) = (v[(k + 2) % 3], v[(k + 1) % 3]);
                let e1 = (next - v[k]).normalize();
                let e2 = (prev - v[k]).normalize();
                let angle = e1.dot(&e2).clamp(-1.0, 1.0).acos();
                vertex_pseudonormals[tri[k] as usize] += angle * n;
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                *edge_pseudonormals.entry(key).or_insert_with(Vec3::zeros) += n;
            }
        }
        Self { surface, nodes, order, vertex_pseudonormals, edge_pseudonormals }
    }

    pub fn surface(&self) -> &TriangleSurface {
        &self.surface
    }

    /// Signed distance from `x` to the surface; positive inside.
    pub fn signed_distance(&self, x: Vec3) -> Result<f64> {
        let (dist2, closest, tri, feature) = self.closest_point(x);
        let pseudonormal = match feature {
            TriFeature::Face => self.surface.normals[tri],
            TriFeature::Vertex(k) => {
                self.vertex_pseudonormals[self.surface.triangles[tri][k as usize] as usize]
            }
            TriFeature::Edge(a, b) => {
                let tri_idx = self.surface.triangles[tri];
                self.edge_pseudonormals[&edge_key(tri_idx[a as usize], tri_idx[b as usize])]
            }
        };
        let diff = x - closest;
        let dist = dist2.sqrt();
        let side = diff.dot(&pseudonormal);
        if dist > 0.0 && side.abs() <= 1e-12 * dist * pseudonormal.norm() {
            return Err(Error::AmbiguousSign(x.x, x.y, x.z));
        }
        // Pseudonormal points outward, so positive side means outside.
        Ok(if side > 0.0 { -dist } else { dist })
    }

    /// Closest point on the mesh: (squared distance, point, triangle, feature).
    pub fn closest_point(&self, x: Vec3) -> (f64, Vec3, usize, TriFeature) {
        let mut best = (f64::INFINITY, Vec3::zeros(), 0usize, TriFeature::Face);
        self.visit(0, x, &mut best);
        best
    }

    fn visit(&self, node: usize, x: Vec3, best: &mut (f64, Vec3, usize, TriFeature)) {
        let n = &self.nodes[node];
        if n.bbox.distance_sq(x) >= best.0 {
            return;
        }
        match n.kind {
            NodeKind::Leaf(start, end) => {
                for &t in &self.order[start as usize..end as usize] {
                    let v = self.surface.triangle_vertices(t as usize);
                    let (q, feature) = closest_point_on_triangle(x, v[0], v[1], v[2]);
                    let d2 = (x - q).norm_squared();
                    // Deterministic tie rule: strictly closer, or equally close
                    // with a lower triangle index.
                    if d2 < best.0 || (d2 == best.0 && (t as usize) < best.2) {
                        *best = (d2, q, t as usize, feature);
                    }
                }
            }
            NodeKind::Inner(left, right) => {
                let dl = self.nodes[left as usize].bbox.distance_sq(x);
                let dr = self.nodes[right as usize].bbox.distance_sq(x);
                let (first, second) = if dl <= dr { (left, right) } else { (right, left) };
                self.visit(first as usize, x, best);
                self.visit(second as usize, x, best);
            }
        }
    }
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn build_node(
    nodes: &mut Vec<BvhNode>,
    order: &mut [u32],
    tri_boxes: &[Aabb],
    centroids: &[Vec3],
    start: usize,
    end: usize,
) -> u32 {
    let mut bbox = tri_boxes[order[start] as usize];
    for &t in &order[start + 1..end] {
        bbox = bbox.union(&tri_boxes[t as usize]);
    }
    let idx = nodes.len() as u32;
    nodes.push(BvhNode { bbox, kind: NodeKind::Leaf(start as u32, end as u32) });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    // Median split along the widest centroid axis.
    let mut cmin = centroids[order[start] as usize];
    let mut cmax = cmin;
    for &t in &order[start..end] {
        cmin = cmin.inf(&centroids[t as usize]);
        cmax = cmax.sup(&centroids[t as usize]);
    }
    let ext = cmax - cmin;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    if ext[axis] <= 0.0 {
        return idx; // all centroids coincide; keep as a fat leaf
    }
    let mid = start + (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a as usize][axis]
            .partial_cmp(&centroids[b as usize][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    let left = build_node(nodes, order, tri_boxes, centroids, start, mid);
    let right = build_node(nodes, order, tri_boxes, centroids, mid, end);
    nodes[idx as usize].kind = NodeKind::Inner(left, right);
    idx
}
