//! Global node numbering over active/cut cells and hanging-node detection.
//!
//! Nodes are identified by integer coordinates on the `p`-refined lattice of
//! the finest leaf level, so coincident nodes of neighboring cells collapse
//! to one id and constraint coefficients evaluate to exact dyadic rationals.

use super::basis::Basis;
use crate::geom::Vec3;
use crate::morton;
use crate::octree::FeGrid;
use std::collections::HashMap;

pub struct DofMap {
    pub basis: Basis,
    /// Leaf indices of active/cut cells in Z-curve order.
    pub solid_cells: Vec<u32>,
    /// Flattened per-solid-cell node ids, `nodes_per_cell` apiece.
    cell_nodes: Vec<u32>,
    /// Node id -> p-lattice coordinates (Morton key).
    pub node_keys: Vec<u64>,
    index_of: HashMap<u64, u32>,
    /// Lattice scale: node coordinates live on the `p * 2^scale_level` grid.
    scale_level: u8,
}

impl DofMap {
    pub fn build(grid: &FeGrid, basis: Basis) -> Self {
        let scale_level = grid.max_leaf_level();
        let p = basis.p;
        assert!(
            (p as u64) << scale_level < (1u64 << 21),
            "node lattice exceeds the Morton range"
        );
        let mut solid_cells = Vec::new();
        let mut cell_nodes = Vec::new();
        let mut node_keys = Vec::new();
        let mut index_of: HashMap<u64, u32> = HashMap::new();
        let npc = basis.nodes_per_cell();
        for (idx, leaf) in grid.leaves().iter().enumerate() {
            if !leaf.class.is_solid() {
                continue;
            }
            solid_cells.push(idx as u32);
            let step = 1u64 << (scale_level - leaf.level);
            for i in 0..npc {
                let o = basis.node_offset(i);
                let key = morton::encode(
                    ((leaf.coords[0] as u64 * p as u64 + o[0] as u64) * step) as u32,
                    ((leaf.coords[1] as u64 * p as u64 + o[1] as u64) * step) as u32,
                    ((leaf.coords[2] as u64 * p as u64 + o[2] as u64) * step) as u32,
                );
                let next = node_keys.len() as u32;
                let id = *index_of.entry(key).or_insert_with(|| {
                    node_keys.push(key);
                    next
                });
                cell_nodes.push(id);
            }
        }
        Self { basis, solid_cells, cell_nodes, node_keys, index_of, scale_level }
    }

    pub fn node_count(&self) -> usize {
        self.node_keys.len()
    }

    /// Level of the lattice the node keys live on.
    pub fn lattice_scale_level(&self) -> u8 {
        self.scale_level
    }

    pub fn solid_cell_count(&self) -> usize {
        self.solid_cells.len()
    }

    /// Node ids of solid cell `s` (position in `solid_cells`).
    pub fn nodes_of(&self, s: usize) -> &[u32] {
        let npc = self.basis.nodes_per_cell();
        &self.cell_nodes[s * npc..(s + 1) * npc]
    }

    pub fn node_id(&self, key: u64) -> Option<u32> {
        self.index_of.get(&key).copied()
    }

    /// Physical position of a node, computed from its global lattice
    /// coordinates (identical from every incident cell).
    pub fn node_position(&self, grid: &FeGrid, node: u32) -> Vec3 {
        let (x, y, z) = morton::decode(self.node_keys[node as usize]);
        let unit = grid.level_size(self.scale_level) / self.basis.p as f64;
        grid.domain().min + Vec3::new(x as f64, y as f64, z as f64) * unit
    }

    /// p-lattice coordinates of a cell's anchor and its node step.
    fn cell_lattice(&self, grid: &FeGrid, leaf_idx: usize) -> ([u64; 3], u64) {
        let leaf = &grid.leaves()[leaf_idx];
        let step = 1u64 << (self.scale_level - leaf.level);
        let p = self.basis.p as u64;
        (
            [
                leaf.coords[0] as u64 * p * step,
                leaf.coords[1] as u64 * p * step,
                leaf.coords[2] as u64 * p * step,
            ],
            step,
        )
    }

    /// Local reference coordinates of a node inside (or outside) a cell,
    /// exact for lattice-aligned quantities.
    pub fn local_coords(&self, grid: &FeGrid, leaf_idx: usize, node: u32) -> Vec3 {
        let (anchor, step) = self.cell_lattice(grid, leaf_idx);
        let size = (self.basis.p as u64 * step) as f64;
        let (x, y, z) = morton::decode(self.node_keys[node as usize]);
        Vec3::new(
            (x as i64 - anchor[0] as i64) as f64 / size,
            (y as i64 - anchor[1] as i64) as f64 / size,
            (z as i64 - anchor[2] as i64) as f64 / size,
        )
    }

    /// All solid leaves whose closure contains the node.
    pub fn containing_solid_leaves(&self, grid: &FeGrid, node: u32) -> Vec<usize> {
        let (x, y, z) = morton::decode(self.node_keys[node as usize]);
        let u = [x as u64, y as u64, z as u64];
        let p = self.basis.p as u64;
        let n_cells = 1u64 << self.scale_level;
        let mut axis_cells: [Vec<u64>; 3] = Default::default();
        for a in 0..3 {
            let c = u[a] / p;
            if u[a] % p == 0 && c > 0 {
                axis_cells[a].push(c - 1);
            }
            if c < n_cells {
                axis_cells[a].push(c);
            }
        }
        let mut out = Vec::new();
        for &cz in &axis_cells[2] {
            for &cy in &axis_cells[1] {
                for &cx in &axis_cells[0] {
                    if let Some(idx) =
                        grid.leaf_containing(self.scale_level, [cx as u32, cy as u32, cz as u32])
                    {
                        if grid.leaves()[idx].class.is_solid() && !out.contains(&idx) {
                            out.push(idx);
                        }
                    }
                }
            }
        }
        out
    }

    /// Detects hanging nodes: a node lying on a solid leaf's closure without
    /// being one of that leaf's lattice nodes is constrained by the coarsest
    /// such leaf's trace. Returns raw rows over (possibly also constrained)
    /// node ids.
    pub fn hanging_rows(&self, grid: &FeGrid) -> Vec<(u32, Vec<(u32, f64)>)> {
        if grid.min_leaf_level() == grid.max_leaf_level() {
            return Vec::new();
        }
        let mut rows = Vec::new();
        for node in 0..self.node_count() as u32 {
            let mut constrainer: Option<usize> = None;
            for leaf_idx in self.containing_solid_leaves(grid, node) {
                if self.on_cell_lattice(grid, leaf_idx, node) {
                    continue;
                }
                let better = match constrainer {
                    None => true,
                    Some(cur) => {
                        let (cl, nl) = (grid.leaves()[cur].level, grid.leaves()[leaf_idx].level);
                        nl < cl || (nl == cl && grid.leaves()[leaf_idx].key() < grid.leaves()[cur].key())
                    }
                };
                if better {
                    constrainer = Some(leaf_idx);
                }
            }
            if let Some(leaf_idx) = constrainer {
                let xi = self.local_coords(grid, leaf_idx, node);
                let shapes = self.basis.eval(xi);
                let (anchor, step) = self.cell_lattice(grid, leaf_idx);
                let mut row = Vec::new();
                for j in 0..self.basis.nodes_per_cell() {
                    let w = shapes.value[j];
                    if w.abs() <= 1e-14 {
                        continue;
                    }
                    let o = self.basis.node_offset(j);
                    let key = morton::encode(
                        (anchor[0] + o[0] as u64 * step) as u32,
                        (anchor[1] + o[1] as u64 * step) as u32,
                        (anchor[2] + o[2] as u64 * step) as u32,
                    );
                    let id = self.node_id(key).expect("constraining cell nodes exist");
                    row.push((id, w));
                }
                rows.push((node, row));
            }
        }
        rows
    }

    fn on_cell_lattice(&self, grid: &FeGrid, leaf_idx: usize, node: u32) -> bool {
        let (anchor, step) = self.cell_lattice(grid, leaf_idx);
        let (x, y, z) = morton::decode(self.node_keys[node as usize]);
        let u = [x as u64, y as u64, z as u64];
        (0..3).all(|a| (u[a] - anchor[a]) % step == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use crate::octree::ClassifyParams;
    use crate::sdf::AnalyticSdf;

    fn classified_uniform(level: u8) -> FeGrid {
        let field = AnalyticSdf::sphere(Vec3::zeros(), 100.0);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), level);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        g
    }

    #[test]
    fn uniform_grid_node_counts() {
        for (p, expected) in [(1usize, 5usize * 5 * 5), (2, 9 * 9 * 9)] {
            let g = classified_uniform(2);
            let dm = DofMap::build(&g, Basis::new(p));
            assert_eq!(dm.node_count(), expected);
            assert!(dm.hanging_rows(&g).is_empty());
        }
    }

    #[test]
    fn inactive_cells_carry_no_nodes() {
        let field = AnalyticSdf::half_space(Vec3::new(0.0, 0.0, 1.0), 0.0);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), 2);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        let dm = DofMap::build(&g, Basis::new(1));
        // Half the cells are inactive (z > 0 strictly above the cut layer).
        assert!(dm.solid_cell_count() < g.leaf_count());
        // 5 x 5 x layers: active layers z in [-2,-1,0] plus cut layer [0,1].
        assert_eq!(dm.node_count(), 5 * 5 * 4);
    }

    #[test]
    fn node_positions_agree_between_cells() {
        let g = classified_uniform(2);
        let dm = DofMap::build(&g, Basis::new(2));
        // Shared face nodes: position computed from the global key only.
        let a = g.leaf_containing(2, [1, 1, 1]).unwrap();
        let b = g.leaf_containing(2, [2, 1, 1]).unwrap();
        let sa = dm.solid_cells.iter().position(|&c| c == a as u32).unwrap();
        let sb = dm.solid_cells.iter().position(|&c| c == b as u32).unwrap();
        let shared: Vec<u32> = dm
            .nodes_of(sa)
            .iter()
            .filter(|n| dm.nodes_of(sb).contains(n))
            .copied()
            .collect();
        assert_eq!(shared.len(), 9);
        for &n in &shared {
            let pos = dm.node_position(&g, n);
            assert!((pos.x - 0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hanging_edge_midpoint_has_half_coefficients() {
        // One refined cell next to a coarse one: p=1 edge midpoints hang with
        // (1/2, 1/2), face centers with (1/4 x 4).
        let field = AnalyticSdf::sphere(Vec3::zeros(), 100.0);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), 1);
        let target = g.leaf_containing(1, [0, 0, 0]).unwrap();
        let mut marks = vec![false; g.leaf_count()];
        marks[target] = true;
        g.refine(&marks);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        let dm = DofMap::build(&g, Basis::new(1));
        let rows = dm.hanging_rows(&g);
        assert!(!rows.is_empty());
        let mut halves = 0;
        let mut quarters = 0;
        for (node, row) in &rows {
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-14, "row sums to {sum}");
            match row.len() {
                2 => {
                    halves += 1;
                    for &(_, w) in row {
                        assert_eq!(w, 0.5);
                    }
                }
                4 => {
                    quarters += 1;
                    for &(_, w) in row {
                        assert_eq!(w, 0.25);
                    }
                }
                n => panic!("unexpected row size {n} for node {node}"),
            }
        }
        // The refined corner cell exposes 3 hanging faces with 5 hanging
        // nodes each, shared edge midpoints collapse: 9 edge + 3 face nodes.
        assert_eq!(halves, 9);
        assert_eq!(quarters, 3);
    }

    #[test]
    fn quadratic_hanging_nodes_follow_coarse_trace() {
        let field = AnalyticSdf::sphere(Vec3::zeros(), 100.0);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), 1);
        let target = g.leaf_containing(1, [0, 0, 0]).unwrap();
        let mut marks = vec![false; g.leaf_count()];
        marks[target] = true;
        g.refine(&marks);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        let dm = DofMap::build(&g, Basis::new(2));
        let rows = dm.hanging_rows(&g);
        assert!(!rows.is_empty());
        for (_, row) in &rows {
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-13);
            // Quadratic trace coefficients on a face involve at most 9 nodes.
            assert!(row.len() <= 9);
        }
    }

    #[test]
    fn solid_cells_follow_z_order() {
        let g = classified_uniform(3);
        let dm = DofMap::build(&g, Basis::new(1));
        for w in dm.solid_cells.windows(2) {
            assert!(g.leaves()[w[0] as usize].key() < g.leaves()[w[1] as usize].key());
        }
        assert_eq!(dm.solid_cell_count(), g.leaf_count());
    }
}
