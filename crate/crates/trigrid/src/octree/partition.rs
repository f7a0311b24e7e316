//! Weighted Z-curve partitioning into subdomains and dual-graph component
//! analysis for fragmentation detection.

use super::{CellClass, FeGrid};
use crate::error::{Error, Result};

/// Assignment of leaves to subdomains, plus the connected components of each
/// subdomain's dual graph over active/cut cells.
#[derive(Clone, Debug)]
pub struct Partition {
    pub n_subdomains: usize,
    /// Subdomain id per leaf.
    pub subdomain_of: Vec<u32>,
    /// Dual-graph component id per leaf within its subdomain;
    /// `u32::MAX` for inactive cells (they carry no degrees of freedom).
    pub component_of: Vec<u32>,
    /// Number of components per subdomain.
    pub components: Vec<u32>,
}

impl Partition {
    /// Global (subdomain, component) pairs in deterministic order.
    pub fn units(&self) -> Vec<(u32, u32)> {
        let mut units = Vec::new();
        for (s, &n) in self.components.iter().enumerate() {
            for c in 0..n {
                units.push((s as u32, c));
            }
        }
        units
    }
}

/// Splits the Z-curve into `n_subdomains` contiguous segments of balanced
/// weighted load. Active and cut cells weigh `weight_solid`, inactive cells
/// `weight_inactive`; each subdomain's load stays within one maximal cell
/// weight of the mean.
pub fn partition_zcurve(
    grid: &FeGrid,
    n_subdomains: usize,
    weight_solid: u64,
    weight_inactive: u64,
) -> Result<Partition> {
    grid.check_classified()?;
    if n_subdomains == 0 || n_subdomains > grid.leaf_count() {
        return Err(Error::Config(format!(
            "cannot split {} leaves into {} subdomains",
            grid.leaf_count(),
            n_subdomains
        )));
    }
    if weight_solid == 0 || weight_inactive == 0 {
        return Err(Error::Config("partition weights must be positive".into()));
    }
    let weight = |class: CellClass| if class.is_solid() { weight_solid } else { weight_inactive };
    let total: u64 = grid.leaves().iter().map(|c| weight(c.class)).sum();
    // Assign by the weighted midpoint of each cell along the curve.
    let mut subdomain_of = Vec::with_capacity(grid.leaf_count());
    let mut prefix: u64 = 0;
    for cell in grid.leaves() {
        let w = weight(cell.class);
        let mid = 2 * prefix + w; // 2x midpoint to stay in integers
        let s = ((mid as u128 * n_subdomains as u128) / (2 * total as u128)) as usize;
        subdomain_of.push(s.min(n_subdomains - 1) as u32);
        prefix += w;
    }

    // Dual graph per subdomain: vertices are active/cut cells, edges join
    // face-adjacent cells (cells sharing at least four lattice nodes). The
    // substructured solver refines this further on resolved free dofs, where
    // stabilization can sever face couplings.
    let mut component_of = vec![u32::MAX; grid.leaf_count()];
    let mut components = vec![0u32; n_subdomains];
    let mut stack = Vec::new();
    for start in 0..grid.leaf_count() {
        if component_of[start] != u32::MAX || !grid.leaves()[start].class.is_solid() {
            continue;
        }
        let s = subdomain_of[start];
        let comp = components[s as usize];
        components[s as usize] += 1;
        component_of[start] = comp;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            for axis in 0..3 {
                for dir in [-1, 1] {
                    for n in grid.face_neighbors(idx, axis, dir) {
                        if component_of[n] == u32::MAX
                            && subdomain_of[n] == s
                            && grid.leaves()[n].class.is_solid()
                        {
                            component_of[n] = comp;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    Ok(Partition { n_subdomains, subdomain_of, component_of, components })
}
