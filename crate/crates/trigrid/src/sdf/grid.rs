//! Sparse narrow-band sampled signed distance grid with trilinear evaluation.

use super::{ImplicitField, MeshDistance, TriangleSurface};
use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::morton;
use std::cell::Cell;
use std::collections::HashMap;

/// Nodes per block edge; blocks hold `8^3` node values.
pub const BLOCK_EDGE: usize = 8;
const BLOCK_VOLUME: usize = BLOCK_EDGE * BLOCK_EDGE * BLOCK_EDGE;

/// Signed distance function phi sampled at the nodes of a uniform lattice,
/// stored only in a narrow band `|phi| <= delta` around the zero level set.
/// Nodes outside the band evaluate to `sign * delta`, with the sign obtained
/// by flood fill over blocks. Values inside cells come from trilinear
/// interpolation, so the evaluated field is continuous on the whole domain.
pub struct SparseDistanceGrid {
    origin: Vec3,
    spacing: f64,
    delta: f64,
    /// Number of nodes per axis.
    node_dims: [usize; 3],
    /// Number of blocks per axis.
    block_dims: [usize; 3],
    /// Dense block values for blocks intersecting the band, keyed by the
    /// Morton code of the block coordinates.
    blocks: HashMap<u64, Box<[f64; BLOCK_VOLUME]>>,
    /// Background sign per block (+1 or -1), for blocks without stored values.
    block_signs: Vec<i8>,
}

impl SparseDistanceGrid {
    /// Samples an analytic field over the nodes of a lattice covering
    /// `domain`. The lattice is grown symmetrically so the spacing divides
    /// the extent; band nodes store the field exactly, the rest are clamped
    /// to `±delta` with `delta = band_factor * spacing`.
    ///
    /// Block pruning assumes the field magnitude grows at most like the
    /// distance (Lipschitz constant <= 1), which holds for (CSG of) signed
    /// distance fields.
    pub fn from_field(field: &dyn ImplicitField, domain: Aabb, spacing: f64, band_factor: u32) -> Self {
        assert!(spacing > 0.0 && band_factor >= 2);
        let mut grid = Self::empty(domain, spacing, band_factor);
        let delta = grid.delta;
        let half_diag = 0.5 * 3.0f64.sqrt() * (BLOCK_EDGE as f64) * spacing;
        let reach = delta + half_diag + 2.0 * spacing;
        for bk in grid.block_keys_sorted() {
            let (bx, by, bz) = morton::decode(bk);
            let center = grid.block_center(bx as usize, by as usize, bz as usize);
            if field.value(center).abs() > reach {
                continue;
            }
            grid.fill_block(bk, |x| field.value(x));
        }
        grid.finish_background(|| field.value(domain.center()) >= 0.0);
        grid
    }

    /// Samples exact signed distance to a triangle surface, with the sign
    /// taken from the angle-weighted pseudonormal at the nearest feature.
    /// The lattice covers the surface bounding box grown by the band width.
    pub fn from_surface(surface: TriangleSurface, spacing: f64, band_factor: u32) -> Result<Self> {
        let bbox = surface.bounding_box();
        let delta = band_factor as f64 * spacing;
        let domain = bbox.grow(delta + 2.0 * spacing);
        Self::from_surface_in(surface, domain, spacing, band_factor)
    }

    /// Same as [`from_surface`](Self::from_surface) but over a caller-chosen
    /// embedding domain (which must contain the surface).
    pub fn from_surface_in(
        surface: TriangleSurface,
        domain: Aabb,
        spacing: f64,
        band_factor: u32,
    ) -> Result<Self> {
        assert!(spacing > 0.0 && band_factor >= 2);
        let distance = MeshDistance::new(surface);
        let mut grid = Self::empty(domain, spacing, band_factor);
        let delta = grid.delta;

        // Candidate blocks from inflated triangle bounding boxes.
        let margin = delta + spacing * (1.0 + 3.0f64.sqrt() * BLOCK_EDGE as f64);
        let mut candidates: Vec<u64> = Vec::new();
        let mut seen = vec![false; grid.block_dims[0] * grid.block_dims[1] * grid.block_dims[2]];
        for t in 0..distance.surface().triangles.len() {
            let v = distance.surface().triangle_vertices(t);
            let b = Aabb::from_points(v.iter()).unwrap().grow(margin);
            let lo = grid.block_of_point(b.min);
            let hi = grid.block_of_point(b.max);
            for bz in lo[2]..=hi[2] {
                for by in lo[1]..=hi[1] {
                    for bx in lo[0]..=hi[0] {
                        let flat = grid.block_flat(bx, by, bz);
                        if !seen[flat] {
                            seen[flat] = true;
                            candidates.push(morton::encode(bx as u32, by as u32, bz as u32));
                        }
                    }
                }
            }
        }
        candidates.sort_unstable();
        let mut failure: Option<Error> = None;
        for bk in candidates {
            grid.fill_block(bk, |x| match distance.signed_distance(x) {
                Ok(d) => d,
                Err(e) => {
                    if failure.is_none() {
                        failure = Some(e);
                    }
                    0.0
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
        }
        let center = domain.center();
        grid.finish_background(|| distance.signed_distance(center).map(|d| d >= 0.0).unwrap_or(true));
        Ok(grid)
    }

    fn empty(domain: Aabb, spacing: f64, band_factor: u32) -> Self {
        let extent = domain.extent();
        let mut node_dims = [0usize; 3];
        let mut origin = Vec3::zeros();
        for a in 0..3 {
            let cells = (extent[a] / spacing).ceil().max(1.0) as usize;
            node_dims[a] = cells + 1;
            // Grow symmetrically so the lattice covers the requested domain.
            let span = cells as f64 * spacing;
            origin[a] = domain.center()[a] - 0.5 * span;
        }
        let block_dims = [
            node_dims[0].div_ceil(BLOCK_EDGE),
            node_dims[1].div_ceil(BLOCK_EDGE),
            node_dims[2].div_ceil(BLOCK_EDGE),
        ];
        let n_blocks = block_dims[0] * block_dims[1] * block_dims[2];
        Self {
            origin,
            spacing,
            delta: band_factor as f64 * spacing,
            node_dims,
            block_dims,
            blocks: HashMap::new(),
            block_signs: vec![0; n_blocks],
        }
    }

    /// Evaluates and stores one block; keeps it only if it contains at least
    /// one band node.
    fn fill_block(&mut self, key: u64, mut f: impl FnMut(Vec3) -> f64) {
        let (bx, by, bz) = morton::decode(key);
        let mut values = Box::new([0.0f64; BLOCK_VOLUME]);
        let mut any_band = false;
        for lz in 0..BLOCK_EDGE {
            for ly in 0..BLOCK_EDGE {
                for lx in 0..BLOCK_EDGE {
                    // Padding nodes of partial blocks mirror the nearest
                    // lattice node so face-majority votes stay unbiased.
                    let i = (bx as usize * BLOCK_EDGE + lx).min(self.node_dims[0] - 1);
                    let j = (by as usize * BLOCK_EDGE + ly).min(self.node_dims[1] - 1);
                    let k = (bz as usize * BLOCK_EDGE + lz).min(self.node_dims[2] - 1);
                    let idx = lx + BLOCK_EDGE * (ly + BLOCK_EDGE * lz);
                    let d = f(self.node_position(i, j, k));
                    if d.abs() <= self.delta {
                        any_band = true;
                        values[idx] = d;
                    } else {
                        values[idx] = self.delta.copysign(d);
                    }
                }
            }
        }
        if any_band {
            self.blocks.insert(key, values);
        }
    }

    /// Assigns background signs by flood fill over blocks, seeded from the
    /// face values of stored blocks.
    fn finish_background(&mut self, fallback_positive: impl Fn() -> bool) {
        let dims = self.block_dims;
        let mut votes: Vec<i64> = vec![0; self.block_signs.len()];
        let mut queue: std::collections::VecDeque<usize> = Default::default();
        let mut keys: Vec<u64> = self.blocks.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let (bx, by, bz) = morton::decode(key);
            let (bx, by, bz) = (bx as usize, by as usize, bz as usize);
            let values = &self.blocks[&key];
            // Vote on each face-adjacent unstored neighbor with the sign of
            // the shared face layer.
            let neighbors: [(i64, i64, i64); 6] = [
                (-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1),
            ];
            for (dx, dy, dz) in neighbors {
                let (nx, ny, nz) = (bx as i64 + dx, by as i64 + dy, bz as i64 + dz);
                if nx < 0 || ny < 0 || nz < 0 || nx >= dims[0] as i64 || ny >= dims[1] as i64 || nz >= dims[2] as i64 {
                    continue;
                }
                let nk = morton::encode(nx as u32, ny as u32, nz as u32);
                if self.blocks.contains_key(&nk) {
                    continue;
                }
                let flat = self.block_flat(nx as usize, ny as usize, nz as usize);
                let mut vote = 0i64;
                for u in 0..BLOCK_EDGE {
                    for v in 0..BLOCK_EDGE {
                        let (lx, ly, lz) = match (dx, dy, dz) {
                            (-1, _, _) => (0, u, v),
                            (1, _, _) => (BLOCK_EDGE - 1, u, v),
                            (_, -1, _) => (u, 0, v),
                            (_, 1, _) => (u, BLOCK_EDGE - 1, v),
                            (_, _, -1) => (u, v, 0),
                            _ => (u, v, BLOCK_EDGE - 1),
                        };
                        let val = values[lx + BLOCK_EDGE * (ly + BLOCK_EDGE * lz)];
                        vote += if val >= 0.0 { 1 } else { -1 };
                    }
                }
                votes[flat] += vote;
            }
        }
        for (flat, &v) in votes.iter().enumerate() {
            if v != 0 && self.block_signs[flat] == 0 {
                self.block_signs[flat] = if v > 0 { 1 } else { -1 };
                queue.push_back(flat);
            }
        }
        // Propagate to the remaining background blocks.
        while let Some(flat) = queue.pop_front() {
            let sign = self.block_signs[flat];
            let bz = flat / (dims[0] * dims[1]);
            let by = (flat / dims[0]) % dims[1];
            let bx = flat % dims[0];
            let neighbors: [(i64, i64, i64); 6] = [
                (-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1),
            ];
            for (dx, dy, dz) in neighbors {
                let (nx, ny, nz) = (bx as i64 + dx, by as i64 + dy, bz as i64 + dz);
                if nx < 0 || ny < 0 || nz < 0 || nx >= dims[0] as i64 || ny >= dims[1] as i64 || nz >= dims[2] as i64 {
                    continue;
                }
                let nk = morton::encode(nx as u32, ny as u32, nz as u32);
                if self.blocks.contains_key(&nk) {
                    continue;
                }
                let nflat = self.block_flat(nx as usize, ny as usize, nz as usize);
                if self.block_signs[nflat] == 0 {
                    self.block_signs[nflat] = sign;
                    queue.push_back(nflat);
                }
            }
        }
        let fallback = if fallback_positive() { 1 } else { -1 };
        for s in &mut self.block_signs {
            if *s == 0 {
                *s = fallback;
            }
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn band_half_width(&self) -> f64 {
        self.delta
    }

    pub fn domain(&self) -> Aabb {
        let e = Vec3::new(
            (self.node_dims[0] - 1) as f64,
            (self.node_dims[1] - 1) as f64,
            (self.node_dims[2] - 1) as f64,
        ) * self.spacing;
        Aabb::new(self.origin, self.origin + e)
    }

    pub fn node_dims(&self) -> [usize; 3] {
        self.node_dims
    }

    pub fn stored_block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    /// Stored or background value at a lattice node.
    pub fn node_value(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert!(i < self.node_dims[0] && j < self.node_dims[1] && k < self.node_dims[2]);
        let (bx, by, bz) = (i / BLOCK_EDGE, j / BLOCK_EDGE, k / BLOCK_EDGE);
        let key = morton::encode(bx as u32, by as u32, bz as u32);
        if let Some(values) = self.blocks.get(&key) {
            let idx = (i % BLOCK_EDGE) + BLOCK_EDGE * ((j % BLOCK_EDGE) + BLOCK_EDGE * (k % BLOCK_EDGE));
            values[idx]
        } else {
            self.delta * self.block_signs[self.block_flat(bx, by, bz)] as f64
        }
    }

    /// Trilinear interpolation of the stored field.
    pub fn eval(&self, x: Vec3) -> Result<f64> {
        if !self.domain().grow(1e-12 * self.spacing).contains(x) {
            return Err(Error::OutsideDomain(x));
        }
        Ok(self.accessor().value(x))
    }

    /// Unit normal of the trilinear interpolant (one-sided at cell faces,
    /// resolved toward the lower cell).
    pub fn normal(&self, x: Vec3) -> Result<Vec3> {
        if !self.domain().grow(1e-12 * self.spacing).contains(x) {
            return Err(Error::OutsideDomain(x));
        }
        self.accessor().unit_normal(x).ok_or(Error::DegenerateGradient(x))
    }

    /// Cached-block accessor for tight evaluation loops.
    pub fn accessor(&self) -> SdfAccessor<'_> {
        SdfAccessor { grid: self, cache: Cell::new((u64::MAX, None)) }
    }

    /// Stored blocks in deterministic (Morton) order: (block coords, values).
    pub fn blocks_sorted(&self) -> Vec<([usize; 3], &[f64; BLOCK_VOLUME])> {
        let mut keys: Vec<u64> = self.blocks.keys().copied().collect();
        keys.sort_unstable();
        keys.iter()
            .map(|&k| {
                let (bx, by, bz) = morton::decode(k);
                ([bx as usize, by as usize, bz as usize], self.blocks[&k].as_ref())
            })
            .collect()
    }

    fn block_flat(&self, bx: usize, by: usize, bz: usize) -> usize {
        bx + self.block_dims[0] * (by + self.block_dims[1] * bz)
    }

    fn block_center(&self, bx: usize, by: usize, bz: usize) -> Vec3 {
        let h = self.spacing * BLOCK_EDGE as f64;
        self.origin + Vec3::new((bx as f64 + 0.5) * h, (by as f64 + 0.5) * h, (bz as f64 + 0.5) * h)
    }

    fn block_of_point(&self, p: Vec3) -> [usize; 3] {
        let mut b = [0usize; 3];
        for a in 0..3 {
            let i = ((p[a] - self.origin[a]) / self.spacing).floor();
            let i = (i as i64).clamp(0, self.node_dims[a] as i64 - 1) as usize;
            b[a] = (i / BLOCK_EDGE).min(self.block_dims[a] - 1);
        }
        b
    }

    /// All block keys of the block lattice, Morton-sorted.
    fn block_keys_sorted(&self) -> Vec<u64> {
        let mut keys = Vec::with_capacity(self.block_signs.len());
        for bz in 0..self.block_dims[2] {
            for by in 0..self.block_dims[1] {
                for bx in 0..self.block_dims[0] {
                    keys.push(morton::encode(bx as u32, by as u32, bz as u32));
                }
            }
        }
        keys.sort_unstable();
        keys
    }

    /// Containing cell index with the tie rule "faces belong to the lower
    /// cell", plus local coordinates in [0, 1].
    fn locate(&self, x: Vec3) -> ([usize; 3], Vec3) {
        let mut cell = [0usize; 3];
        let mut local = Vec3::zeros();
        for a in 0..3 {
            let s = (x[a] - self.origin[a]) / self.spacing;
            let max_cell = self.node_dims[a] as f64 - 2.0;
            let c = (s.ceil() - 1.0).clamp(0.0, max_cell.max(0.0));
            cell[a] = c as usize;
            local[a] = (s - c).clamp(0.0, 1.0);
        }
        (cell, local)
    }
}

impl ImplicitField for SparseDistanceGrid {
    fn value(&self, x: Vec3) -> f64 {
        self.accessor().value(x)
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        self.accessor().gradient(x)
    }

    fn band_limit(&self) -> Option<f64> {
        Some(self.delta)
    }
}

/// Read-only accessor with a one-block cache, mirroring the access pattern of
/// VDB accessors. Not shareable across threads; create one per thread.
pub struct SdfAccessor<'a> {
    grid: &'a SparseDistanceGrid,
    cache: Cell<(u64, Option<&'a [f64; BLOCK_VOLUME]>)>,
}

impl<'a> SdfAccessor<'a> {
    fn node_value(&self, i: usize, j: usize, k: usize) -> f64 {
        let g = self.grid;
        let (bx, by, bz) = (i / BLOCK_EDGE, j / BLOCK_EDGE, k / BLOCK_EDGE);
        let key = morton::encode(bx as u32, by as u32, bz as u32);
        let (cached_key, cached) = self.cache.get();
        let block = if cached_key == key {
            cached
        } else {
            let block = g.blocks.get(&key).map(|b| b.as_ref());
            self.cache.set((key, block));
            block
        };
        match block {
            Some(values) => {
                values[(i % BLOCK_EDGE) + BLOCK_EDGE * ((j % BLOCK_EDGE) + BLOCK_EDGE * (k % BLOCK_EDGE))]
            }
            None => g.delta * g.block_signs[g.block_flat(bx, by, bz)] as f64,
        }
    }

    fn corners(&self, cell: [usize; 3]) -> [f64; 8] {
        let mut c = [0.0; 8];
        for (n, value) in c.iter_mut().enumerate() {
            *value = self.node_value(cell[0] + (n & 1), cell[1] + ((n >> 1) & 1), cell[2] + (n >> 2));
        }
        c
    }
}

impl ImplicitField for SdfAccessor<'_> {
    fn band_limit(&self) -> Option<f64> {
        Some(self.grid.delta)
    }

    fn value(&self, x: Vec3) -> f64 {
        let (cell, t) = self.grid.locate(x);
        let c = self.corners(cell);
        let (u, v, w) = (t.x, t.y, t.z);
        let c00 = c[0] * (1.0 - u) + c[1] * u;
        let c10 = c[2] * (1.0 - u) + c[3] * u;
        let c01 = c[4] * (1.0 - u) + c[5] * u;
        let c11 = c[6] * (1.0 - u) + c[7] * u;
        let c0 = c00 * (1.0 - v) + c10 * v;
        let c1 = c01 * (1.0 - v) + c11 * v;
        c0 * (1.0 - w) + c1 * w
    }

    fn gradient(&self, x: Vec3) -> Vec3 {
        let (cell, t) = self.grid.locate(x);
        let c = self.corners(cell);
        let (u, v, w) = (t.x, t.y, t.z);
        let inv_h = 1.0 / self.grid.spacing;
        let gx = ((c[1] - c[0]) * (1.0 - v) + (c[3] - c[2]) * v) * (1.0 - w)
            + ((c[5] - c[4]) * (1.0 - v) + (c[7] - c[6]) * v) * w;
        let gy = ((c[2] - c[0]) * (1.0 - u) + (c[3] - c[1]) * u) * (1.0 - w)
            + ((c[6] - c[4]) * (1.0 - u) + (c[7] - c[5]) * u) * w;
        let gz = ((c[4] - c[0]) * (1.0 - u) + (c[5] - c[1]) * u) * (1.0 - v)
            + ((c[6] - c[2]) * (1.0 - u) + (c[7] - c[3]) * u) * v;
        Vec3::new(gx, gy, gz) * inv_h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SplitMix64;
    use crate::sdf::AnalyticSdf;

    fn unit_sphere_grid(h: f64) -> SparseDistanceGrid {
        let field = AnalyticSdf::sphere(Vec3::zeros(), 1.0);
        SparseDistanceGrid::from_field(&field, Aabb::cube(Vec3::zeros(), 2.4), h, 3)
    }

    #[test]
    fn band_nodes_store_field_exactly() {
        let grid = unit_sphere_grid(1.0 / 128.0);
        let field = AnalyticSdf::sphere(Vec3::zeros(), 1.0);
        let dims = grid.node_dims();
        let mut band_nodes = 0;
        for k in (0..dims[2]).step_by(7) {
            for j in (0..dims[1]).step_by(5) {
                for i in 0..dims[0] {
                    let x = grid.node_position(i, j, k);
                    let exact = field.eval(x);
                    if exact.abs() <= grid.band_half_width() {
                        band_nodes += 1;
                        assert!(
                            (grid.node_value(i, j, k) - exact).abs() <= 1e-14,
                            "node ({i},{j},{k})"
                        );
                    }
                }
            }
        }
        assert!(band_nodes > 1000);
    }

    #[test]
    fn coarse_node_gets_positive_clamp_inside() {
        // h = 1/2: the origin is inside and far from the surface.
        let grid = unit_sphere_grid(0.5);
        let v = grid.eval(Vec3::zeros()).unwrap();
        // delta = 1.5 covers the whole box here, so the origin is a band node
        // storing the exact value 1.0; with a tighter band it would clamp.
        assert!(v > 0.0);
        let tight = SparseDistanceGrid::from_field(
            &AnalyticSdf::sphere(Vec3::zeros(), 1.0),
            Aabb::cube(Vec3::zeros(), 2.4),
            1.0 / 32.0,
            3,
        );
        let clamp = tight.eval(Vec3::zeros()).unwrap();
        assert!((clamp - tight.band_half_width()).abs() < 1e-12);
    }

    #[test]
    fn eval_at_node_returns_stored_value() {
        let grid = unit_sphere_grid(1.0 / 16.0);
        let dims = grid.node_dims();
        for (i, j, k) in [(3, 4, 5), (10, 2, 7), (dims[0] - 1, 0, dims[2] - 1)] {
            let x = grid.node_position(i, j, k);
            assert_eq!(grid.eval(x).unwrap(), grid.node_value(i, j, k));
        }
    }

    #[test]
    fn eval_at_cell_center_is_corner_mean() {
        let grid = unit_sphere_grid(1.0 / 16.0);
        let cell = [14usize, 15, 16];
        let mut mean = 0.0;
        for n in 0..8 {
            mean += grid.node_value(cell[0] + (n & 1), cell[1] + ((n >> 1) & 1), cell[2] + (n >> 2));
        }
        mean /= 8.0;
        let center = grid.node_position(cell[0], cell[1], cell[2]) + Vec3::repeat(0.5 * grid.spacing());
        assert!((grid.eval(center).unwrap() - mean).abs() < 1e-14);
    }

    #[test]
    fn eval_is_continuous_across_blocks() {
        let grid = unit_sphere_grid(1.0 / 32.0);
        // Probe pairs straddling a block boundary along x.
        let h = grid.spacing();
        let boundary = grid.node_position(BLOCK_EDGE, 9, 11).x;
        for dy in 0..10 {
            let y = grid.node_position(0, 9, 11).y + dy as f64 * 0.13 * h;
            let p = Vec3::new(boundary, y, grid.node_position(0, 9, 11).z + 0.4 * h);
            let left = grid.eval(p - Vec3::new(1e-12, 0.0, 0.0)).unwrap();
            let right = grid.eval(p + Vec3::new(1e-12, 0.0, 0.0)).unwrap();
            assert!((left - right).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_crossing_along_ray_near_radius() {
        // Trilinear error shifts the zero crossing by O(h^2).
        let h = 1.0 / 128.0;
        let grid = unit_sphere_grid(h);
        let dir = Vec3::new(0.48, 0.62, 0.35).normalize();
        let (mut a, mut b) = (0.9, 1.1);
        assert!(grid.eval(dir * a).unwrap() > 0.0);
        assert!(grid.eval(dir * b).unwrap() < 0.0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if grid.eval(dir * m).unwrap() >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        // Second derivative of the sphere SDF is ~1/r; C = 2 is generous.
        assert!((r - 1.0).abs() < 2.0 * h * h, "crossing at {r}");
    }

    #[test]
    fn normal_on_sphere_band() {
        // h = 1/8 keeps (0.9, 0, 0) inside the band (delta = 0.375).
        let h = 1.0 / 8.0;
        let grid = unit_sphere_grid(h);
        // Slightly off the lattice planes so finite differences stay inside
        // one cell, where they reproduce the trilinear gradient exactly.
        let x = Vec3::new(0.9, 0.02, 0.03);
        let n = grid.normal(x).unwrap();
        // Gradient points toward increasing phi, i.e. inward; O(h) accuracy.
        assert!((n - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1.1 * h, "{n:?}");
        // Independent oracle: central differences of eval with a step small
        // enough to stay inside one cell (where they are exact).
        let step = h / 20.0;
        let mut fd = Vec3::zeros();
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += step;
            xm[a] -= step;
            fd[a] = (grid.eval(xp).unwrap() - grid.eval(xm).unwrap()) / (2.0 * step);
        }
        assert!((n - fd.normalize()).norm() < 1e-10);
    }

    #[test]
    fn normal_is_exact_for_half_space() {
        let field = AnalyticSdf::half_space(Vec3::new(0.0, 0.0, 1.0), 0.3);
        let grid =
            SparseDistanceGrid::from_field(&field, Aabb::cube(Vec3::zeros(), 2.0), 1.0 / 8.0, 3);
        let n = grid.normal(Vec3::new(0.21, -0.17, 0.29)).unwrap();
        assert!((n - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn normals_straddling_box_edge_disagree() {
        let field = AnalyticSdf::cube(Vec3::zeros(), 1.0);
        let grid =
            SparseDistanceGrid::from_field(&field, Aabb::cube(Vec3::zeros(), 2.0), 1.0 / 32.0, 3);
        // Probes on the two faces meeting at the edge x = y = 0.5.
        let na = grid.normal(Vec3::new(0.52, 0.3, 0.0)).unwrap();
        let nb = grid.normal(Vec3::new(0.3, 0.52, 0.0)).unwrap();
        let tol = 0.05;
        assert!(na.dot(&nb) <= 45f64.to_radians().cos() + tol);
    }

    #[test]
    fn outside_domain_is_an_error() {
        let grid = unit_sphere_grid(0.25);
        assert!(grid.eval(Vec3::new(5.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn sign_convention_against_field_oracle() {
        let grid = unit_sphere_grid(1.0 / 32.0);
        let h = grid.spacing();
        let margin = grid.band_half_width() - h * 3.0f64.sqrt();
        // Within O(h^2) of the surface the trilinear sign may legitimately
        // differ from the exact one.
        let surface_skip = h * h;
        let mut rng = SplitMix64::new(99);
        let mut checked = 0;
        for _ in 0..1000 {
            let x = rng.vec3_in(&Aabb::cube(Vec3::zeros(), 2.2));
            let exact = 1.0 - x.norm();
            if exact.abs() >= margin || exact.abs() <= surface_skip {
                continue;
            }
            let v = grid.eval(x).unwrap();
            assert_eq!(v > 0.0, exact > 0.0, "at {x:?}: {v} vs {exact}");
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn analytic_round_trip_error_shrinks_quadratically() {
        let field = AnalyticSdf::sphere(Vec3::zeros(), 1.0);
        let mut errors = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let grid = SparseDistanceGrid::from_field(&field, Aabb::cube(Vec3::zeros(), 2.4), h, 3);
            let mut rng = SplitMix64::new(5);
            let mut max_err: f64 = 0.0;
            let mut n = 0;
            while n < 400 {
                let x = rng.vec3_in(&Aabb::cube(Vec3::zeros(), 2.2));
                if (1.0 - x.norm()).abs() > 0.5 * grid.band_half_width() {
                    continue;
                }
                max_err = max_err.max((grid.eval(x).unwrap() - field.eval(x)).abs());
                n += 1;
            }
            errors.push(max_err);
        }
        assert!(errors[0] / errors[1] >= 3.5, "ratio {}", errors[0] / errors[1]);
    }

    #[test]
    fn lipschitz_bound_between_band_points() {
        let grid = unit_sphere_grid(1.0 / 32.0);
        let h = grid.spacing();
        let interp_err = 2.0 * (3.0f64.sqrt() / 8.0) * h * h * 2.0;
        let mut rng = SplitMix64::new(17);
        for _ in 0..500 {
            let x = rng.vec3_in(&Aabb::cube(Vec3::zeros(), 2.0));
            let y = x + Vec3::new(rng.range(-0.1, 0.1), rng.range(-0.1, 0.1), rng.range(-0.1, 0.1));
            if (1.0 - x.norm()).abs() > 0.05 || (1.0 - y.norm()).abs() > 0.05 {
                continue;
            }
            let dv = (grid.eval(x).unwrap() - grid.eval(y).unwrap()).abs();
            assert!(dv <= 3.0f64.sqrt() * (x - y).norm() + interp_err);
        }
    }
}
