//! Simple watertight primitive meshes for tests, examples and demos.

use super::TriangleSurface;
use crate::geom::Vec3;
use std::collections::HashMap;

/// Icosphere of given radius centered at the origin; `subdivisions` rounds of
/// 4-way triangle refinement with vertex projection onto the sphere.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleSurface {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ];
    for v in &mut vertices {
        *v = v.normalize() * radius;
    }
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mid = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize] + vertices[b as usize]).normalize() * radius;
                    vertices.push(m);
                    (vertices.len() - 1) as u32
                });
            }
            next.push([tri[0], mid[0], mid[2]]);
            next.push([tri[1], mid[1], mid[0]]);
            next.push([tri[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        triangles = next;
    }
    TriangleSurface::new(vertices, triangles).expect("icosphere is watertight")
}

/// Axis-aligned box mesh with two triangles per face, outward orientation.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriangleSurface {
    let corner = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices: Vec<Vec3> = (0..8).map(corner).collect();
    // Each face as (a, b, c, d) counter-clockwise seen from outside.
    let faces: [[u32; 4]; 6] = [
        [0, 4, 6, 2], // x = min
        [1, 3, 7, 5], // x = max
        [0, 1, 5, 4], // y = min
        [2, 6, 7, 3], // y = max
        [0, 2, 3, 1], // z = min
        [4, 5, 7, 6], // z = max
    ];
    let mut triangles = Vec::with_capacity(12);
    for f in &faces {
        triangles.push([f[0], f[1], f[2]]);
        triangles.push([f[0], f[2], f[3]]);
    }
    TriangleSurface::new(vertices, triangles).expect("box mesh is watertight")
}
