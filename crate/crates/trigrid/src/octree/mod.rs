//! 2:1-balanced octree finite element grid over a cubic embedding domain.
//!
//! Leaves are kept sorted along the Z-curve of their anchors at the finest
//! representable level, which makes containment and neighbor queries binary
//! searches over contiguous key ranges.

mod classify;
mod partition;

pub use classify::ClassifyParams;
pub use partition::{partition_zcurve, Partition};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::morton;
use crate::sdf::ImplicitField;

/// Deepest supported refinement level.
pub const MAX_LEVEL: u8 = 20;

/// Classification label of a leaf cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellClass {
    Unclassified,
    /// Fully inside the domain.
    Active,
    /// Fully outside the domain.
    Inactive,
    /// Cut by the boundary, detected from corner signs with benign normals.
    CutOrdinary,
    /// Cut with sharp features, or detected only by supersampling.
    CutExtraordinary,
}

impl CellClass {
    pub fn is_cut(self) -> bool {
        matches!(self, CellClass::CutOrdinary | CellClass::CutExtraordinary)
    }

    /// Cells carrying degrees of freedom: active or cut.
    pub fn is_solid(self) -> bool {
        matches!(self, CellClass::Active | CellClass::CutOrdinary | CellClass::CutExtraordinary)
    }
}

/// One octree leaf: refinement level, integer anchor at that level, label.
#[derive(Clone, Copy, Debug)]
pub struct FeCell {
    pub level: u8,
    pub coords: [u32; 3],
    pub class: CellClass,
}

impl FeCell {
    /// Z-curve key: anchor Morton code lifted to the finest level.
    pub fn key(&self) -> u64 {
        morton::encode(self.coords[0], self.coords[1], self.coords[2])
            << (3 * (MAX_LEVEL - self.level) as u32)
    }

    /// True when this cell contains (or equals) the cell `(level, coords)`.
    pub fn contains(&self, level: u8, coords: [u32; 3]) -> bool {
        if level < self.level {
            return false;
        }
        let shift = (level - self.level) as u32;
        (0..3).all(|a| coords[a] >> shift == self.coords[a])
    }
}

/// Octree finite element grid: sorted leaves tiling a cubic domain.
#[derive(Clone)]
pub struct FeGrid {
    domain: Aabb,
    edge: f64,
    leaves: Vec<FeCell>,
    keys: Vec<u64>,
}

impl FeGrid {
    /// Uniform base grid with `8^base_refinements` leaves.
    pub fn uniform(domain: Aabb, base_refinements: u8) -> Self {
        let ext = domain.extent();
        assert!(
            (ext.x - ext.y).abs() < 1e-12 * ext.x.abs().max(1.0)
                && (ext.x - ext.z).abs() < 1e-12 * ext.x.abs().max(1.0),
            "embedding domain must be a cube"
        );
        assert!(base_refinements <= MAX_LEVEL);
        let level = base_refinements;
        let n: u64 = 1 << level;
        let mut leaves = Vec::with_capacity((n * n * n) as usize);
        for code in 0..n * n * n {
            let (x, y, z) = morton::decode(code);
            leaves.push(FeCell { level, coords: [x, y, z], class: CellClass::Unclassified });
        }
        let keys = leaves.iter().map(FeCell::key).collect();
        Self { domain, edge: ext.x, leaves, keys }
    }

    pub fn domain(&self) -> Aabb {
        self.domain
    }

    pub fn leaves(&self) -> &[FeCell] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Cell edge length at a level.
    pub fn level_size(&self, level: u8) -> f64 {
        self.edge / (1u64 << level) as f64
    }

    pub fn cell_size(&self, idx: usize) -> f64 {
        self.level_size(self.leaves[idx].level)
    }

    pub fn cell_anchor(&self, idx: usize) -> Vec3 {
        let c = &self.leaves[idx];
        let h = self.level_size(c.level);
        self.domain.min + Vec3::new(c.coords[0] as f64, c.coords[1] as f64, c.coords[2] as f64) * h
    }

    pub fn cell_center(&self, idx: usize) -> Vec3 {
        self.cell_anchor(idx) + Vec3::repeat(0.5 * self.cell_size(idx))
    }

    pub fn cell_box(&self, idx: usize) -> Aabb {
        let a = self.cell_anchor(idx);
        Aabb::new(a, a + Vec3::repeat(self.cell_size(idx)))
    }

    pub fn max_leaf_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn min_leaf_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).min().unwrap_or(0)
    }

    pub fn set_class(&mut self, idx: usize, class: CellClass) {
        self.leaves[idx].class = class;
    }

    /// Leaves fully covering the cell `(level, coords)`, as an index range.
    /// Empty when that cell lies strictly inside a coarser leaf.
    pub fn descendants(&self, level: u8, coords: [u32; 3]) -> std::ops::Range<usize> {
        let lo = morton::encode(coords[0], coords[1], coords[2]) << (3 * (MAX_LEVEL - level) as u32);
        let hi = lo + (1u64 << (3 * (MAX_LEVEL - level) as u32));
        let start = self.keys.partition_point(|&k| k < lo);
        let end = self.keys.partition_point(|&k| k < hi);
        start..end
    }

    /// Index of the leaf containing the cell `(level, coords)`.
    pub fn leaf_containing(&self, level: u8, coords: [u32; 3]) -> Option<usize> {
        let range = self.descendants(level, coords);
        if !range.is_empty() {
            let idx = range.start;
            if self.leaves[idx].level <= level {
                return Some(idx);
            }
            return None; // region is subdivided; no single containing leaf
        }
        let key = morton::encode(coords[0], coords[1], coords[2]) << (3 * (MAX_LEVEL - level) as u32);
        let idx = self.keys.partition_point(|&k| k <= key);
        if idx == 0 {
            return None;
        }
        let idx = idx - 1;
        self.leaves[idx].contains(level, coords).then_some(idx)
    }

    /// Leaf containing a point, with ties at faces resolved toward the lower
    /// Morton cell.
    pub fn leaf_at_point(&self, x: Vec3) -> Option<usize> {
        if !self.domain.grow(1e-12 * self.edge).contains(x) {
            return None;
        }
        let n = (1u64 << MAX_LEVEL) as f64;
        let mut coords = [0u32; 3];
        for a in 0..3 {
            let s = (x[a] - self.domain.min[a]) / self.edge * n;
            let c = (s.ceil() - 1.0).clamp(0.0, n - 1.0);
            coords[a] = c as u32;
        }
        self.leaf_containing(MAX_LEVEL, coords)
    }

    /// Face neighbors of a leaf in direction (`axis`, `dir`); up to four with
    /// 2:1 balance, more on unbalanced grids. Empty at the domain boundary.
    pub fn face_neighbors(&self, idx: usize, axis: usize, dir: i32) -> Vec<usize> {
        let cell = self.leaves[idx];
        let n_level = 1u32 << cell.level;
        let mut nc = cell.coords;
        match dir {
            -1 => {
                if nc[axis] == 0 {
                    return Vec::new();
                }
                nc[axis] -= 1;
            }
            _ => {
                if nc[axis] + 1 >= n_level {
                    return Vec::new();
                }
                nc[axis] += 1;
            }
        }
        let range = self.descendants(cell.level, nc);
        if range.is_empty() {
            return self.leaf_containing(cell.level, nc).into_iter().collect();
        }
        // Keep only descendants touching the shared face. An anchor-aligned
        // coarser leaf shares the range start and is the single neighbor.
        let mut out = Vec::new();
        for i in range {
            let leaf = &self.leaves[i];
            if leaf.level <= cell.level {
                return vec![i];
            }
            let shift = (leaf.level - cell.level) as u32;
            let on_face = if dir > 0 {
                leaf.coords[axis] == nc[axis] << shift
            } else {
                leaf.coords[axis] == ((nc[axis] + 1) << shift) - 1
            };
            if on_face {
                out.push(i);
            }
        }
        out
    }

    /// All leaves sharing at least a vertex with leaf `idx`.
    pub fn vertex_neighbors(&self, idx: usize) -> Vec<usize> {
        let cell = self.leaves[idx];
        let n_level = 1i64 << cell.level;
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let nc = [
                        cell.coords[0] as i64 + dx,
                        cell.coords[1] as i64 + dy,
                        cell.coords[2] as i64 + dz,
                    ];
                    if nc.iter().any(|&c| c < 0 || c >= n_level) {
                        continue;
                    }
                    let nc = [nc[0] as u32, nc[1] as u32, nc[2] as u32];
                    let range = self.descendants(cell.level, nc);
                    if range.is_empty() {
                        if let Some(i) = self.leaf_containing(cell.level, nc) {
                            out.push(i);
                        }
                    } else {
                        // Keep descendants touching the shared face/edge/vertex.
                        for i in range {
                            let leaf = &self.leaves[i];
                            if leaf.level <= cell.level {
                                out.push(i);
                                continue;
                            }
                            let shift = (leaf.level - cell.level) as u32;
                            let mut touches = true;
                            for a in 0..3 {
                                let d = [dx, dy, dz][a];
                                if d > 0 && leaf.coords[a] != nc[a] << shift {
                                    touches = false;
                                } else if d < 0 && leaf.coords[a] != ((nc[a] + 1) << shift) - 1 {
                                    touches = false;
                                }
                            }
                            if touches {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Splits every marked leaf into its eight children (children keep the
    /// parent label). Z-curve order is preserved by construction.
    pub fn refine(&mut self, marks: &[bool]) {
        assert_eq!(marks.len(), self.leaves.len());
        let extra = marks.iter().filter(|&&m| m).count() * 7;
        let mut leaves = Vec::with_capacity(self.leaves.len() + extra);
        for (i, cell) in self.leaves.iter().enumerate() {
            if marks[i] {
                assert!(cell.level < MAX_LEVEL, "refinement beyond MAX_LEVEL");
                for child in 0..8u32 {
                    let (dx, dy, dz) = (child & 1, (child >> 1) & 1, child >> 2);
                    leaves.push(FeCell {
                        level: cell.level + 1,
                        coords: [
                            2 * cell.coords[0] + dx,
                            2 * cell.coords[1] + dy,
                            2 * cell.coords[2] + dz,
                        ],
                        class: cell.class,
                    });
                }
            } else {
                leaves.push(*cell);
            }
        }
        self.keys = leaves.iter().map(FeCell::key).collect();
        self.leaves = leaves;
        debug_assert!(self.keys.windows(2).all(|w| w[0] < w[1]));
    }

    /// Restores 2:1 balance across faces by propagating splits; idempotent.
    pub fn balance(&mut self) {
        loop {
            let mut marks = vec![false; self.leaves.len()];
            let mut any = false;
            for idx in 0..self.leaves.len() {
                let level = self.leaves[idx].level;
                if level == 0 {
                    continue;
                }
                for axis in 0..3 {
                    for dir in [-1, 1] {
                        for &n in &self.face_neighbors(idx, axis, dir) {
                            if (self.leaves[n].level + 1) < level && !marks[n] {
                                marks[n] = true;
                                any = true;
                            }
                        }
                    }
                }
            }
            if !any {
                return;
            }
            self.refine(&marks);
        }
    }

    /// Splits cut leaves coarser than `h_min`, rebalances, and reclassifies,
    /// `sweeps` times. Returns the number of cells split per sweep.
    pub fn refine_toward_boundary(
        &mut self,
        field: &dyn ImplicitField,
        params: &ClassifyParams,
        sweeps: u32,
        h_min: f64,
    ) -> Result<Vec<usize>> {
        let mut history = Vec::new();
        self.classify(field, params)?;
        for _ in 0..sweeps {
            let marks: Vec<bool> = (0..self.leaves.len())
                .map(|i| {
                    self.leaves[i].class.is_cut() && self.cell_size(i) > h_min * (1.0 + 1e-12)
                })
                .collect();
            let split = marks.iter().filter(|&&m| m).count();
            history.push(split);
            if split == 0 {
                break;
            }
            self.refine(&marks);
            self.balance();
            self.classify(field, params)?;
        }
        Ok(history)
    }

    /// Sum of leaf volumes; equals the domain volume for a valid tiling.
    pub fn total_volume(&self) -> f64 {
        // Group by level to keep the sum exact for large grids.
        let mut counts = [0u64; MAX_LEVEL as usize + 1];
        for leaf in &self.leaves {
            counts[leaf.level as usize] += 1;
        }
        counts
            .iter()
            .enumerate()
            .map(|(level, &n)| n as f64 * self.level_size(level as u8).powi(3))
            .sum()
    }

    pub(crate) fn check_classified(&self) -> Result<()> {
        if self.leaves.iter().any(|c| c.class == CellClass::Unclassified) {
            return Err(Error::Config("grid must be classified first".into()));
        }
        Ok(())
    }
}
