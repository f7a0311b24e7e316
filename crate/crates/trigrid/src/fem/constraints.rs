//! Cut-cell stabilization (extended-basis extrapolation of critical
//! coefficients) and the unified constraint map `u = E u~`.

use super::dofmap::DofMap;
use crate::error::{Error, Result};
use crate::octree::{CellClass, FeGrid};

/// Critical node detection: a coefficient is critical when the active part
/// of its support volume falls below `epsilon` of the total. Returns the
/// per-node active-volume fraction for diagnostics alongside the flags.
pub struct Criticality {
    pub fraction: Vec<f64>,
    pub critical: Vec<bool>,
}

/// Accumulates per-node active and total support volumes cell-wise; cut
/// cells contribute their inside volume from the quadrature decomposition
/// (`inside_volume[s]` for solid cell `s`, ignored for non-cut cells).
pub fn detect_critical(
    grid: &FeGrid,
    dofs: &DofMap,
    inside_volume: &[f64],
    epsilon: f64,
    hanging: &[(u32, Vec<(u32, f64)>)],
) -> Criticality {
    assert!(epsilon > 0.0 && epsilon < 1.0);
    let n = dofs.node_count();
    let mut active = vec![0.0f64; n];
    let mut total = vec![0.0f64; n];
    // Solid cells contribute through the dof map.
    for s in 0..dofs.solid_cell_count() {
        let leaf_idx = dofs.solid_cells[s] as usize;
        let vol = grid.cell_size(leaf_idx).powi(3);
        let a = match grid.leaves()[leaf_idx].class {
            CellClass::Active => vol,
            _ => inside_volume[s],
        };
        for &node in dofs.nodes_of(s) {
            active[node as usize] += a;
            total[node as usize] += vol;
        }
    }
    // Inactive cells widen the supports of nodes they share with solid cells.
    let basis = dofs.basis;
    for (idx, leaf) in grid.leaves().iter().enumerate() {
        if leaf.class != CellClass::Inactive {
            continue;
        }
        let vol = grid.cell_size(idx).powi(3);
        let step = 1u64 << (dofs.lattice_scale_level() - leaf.level);
        let p = basis.p as u64;
        for i in 0..basis.nodes_per_cell() {
            let o = basis.node_offset(i);
            let key = crate::morton::encode(
                ((leaf.coords[0] as u64 * p + o[0] as u64) * step) as u32,
                ((leaf.coords[1] as u64 * p + o[1] as u64) * step) as u32,
                ((leaf.coords[2] as u64 * p + o[2] as u64) * step) as u32,
            );
            if let Some(node) = dofs.node_id(key) {
                total[node as usize] += vol;
            }
        }
    }
    let is_hanging: std::collections::HashSet<u32> = hanging.iter().map(|&(n, _)| n).collect();
    let mut fraction = vec![1.0f64; n];
    let mut critical = vec![false; n];
    for i in 0..n {
        fraction[i] = if total[i] > 0.0 { active[i] / total[i] } else { 0.0 };
        // The hanging constraint takes precedence over extrapolation.
        critical[i] = fraction[i] < epsilon && !is_hanging.contains(&(i as u32));
    }
    Criticality { fraction, critical }
}

/// Substitutes hanging targets of hanging rows until every row references
/// only non-hanging nodes. Chains terminate because a hanging node is always
/// constrained by a strictly coarser cell.
pub fn resolve_hanging_chains(
    hanging: &[(u32, Vec<(u32, f64)>)],
) -> Result<Vec<(u32, Vec<(u32, f64)>)>> {
    let index: std::collections::HashMap<u32, usize> =
        hanging.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
    let mut resolved: Vec<Option<Vec<(u32, f64)>>> = vec![None; hanging.len()];
    fn resolve(
        i: usize,
        hanging: &[(u32, Vec<(u32, f64)>)],
        index: &std::collections::HashMap<u32, usize>,
        resolved: &mut Vec<Option<Vec<(u32, f64)>>>,
        depth: usize,
    ) -> Result<Vec<(u32, f64)>> {
        if let Some(r) = &resolved[i] {
            return Ok(r.clone());
        }
        if depth > 64 {
            return Err(Error::ConstraintCycle(hanging[i].0 as usize));
        }
        let mut acc: Vec<(u32, f64)> = Vec::new();
        for &(t, w) in &hanging[i].1 {
            match index.get(&t) {
                Some(&j) => {
                    for (g, c) in resolve(j, hanging, index, resolved, depth + 1)? {
                        acc.push((g, w * c));
                    }
                }
                None => acc.push((t, w)),
            }
        }
        acc.sort_unstable_by_key(|&(g, _)| g);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(acc.len());
        for (g, c) in acc {
            match merged.last_mut() {
                Some((lg, lc)) if *lg == g => *lc += c,
                _ => merged.push((g, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        resolved[i] = Some(merged.clone());
        Ok(merged)
    }
    let mut out = Vec::with_capacity(hanging.len());
    for i in 0..hanging.len() {
        let row = resolve(i, hanging, &index, &mut resolved, 0)?;
        out.push((hanging[i].0, row));
    }
    Ok(out)
}

/// Finds the stabilization donor cell for each critical node: the active cell
/// with the nearest centroid among the 2-neighborhood (vertex-adjacency
/// distance two from the node's support cells) whose own nodes are all
/// non-critical. Donors whose hanging nodes are themselves constrained by
/// critical coefficients are skipped, which keeps every constraint chain
/// acyclic (critical -> donor -> hanging -> free). Returns extrapolation
/// rows `u_i = sum_j N_j(x_i) u_j`.
pub fn extrapolation_rows(
    grid: &FeGrid,
    dofs: &DofMap,
    criticality: &Criticality,
    hanging: &[(u32, Vec<(u32, f64)>)],
) -> Result<Vec<(u32, u32, Vec<(u32, f64)>)>> {
    let mut solid_pos = vec![u32::MAX; grid.leaf_count()];
    for (s, &leaf) in dofs.solid_cells.iter().enumerate() {
        solid_pos[leaf as usize] = s as u32;
    }
    let hanging_rows: std::collections::HashMap<u32, &Vec<(u32, f64)>> =
        hanging.iter().map(|(n, row)| (*n, row)).collect();
    let donor_ok = |s: usize| -> bool {
        dofs.nodes_of(s).iter().all(|&m| {
            if criticality.critical[m as usize] {
                return false;
            }
            match hanging_rows.get(&m) {
                Some(row) => row.iter().all(|&(t, _)| !criticality.critical[t as usize]),
                None => true,
            }
        })
    };
    let mut rows = Vec::new();
    for node in 0..dofs.node_count() as u32 {
        if !criticality.critical[node as usize] {
            continue;
        }
        // 2-neighborhood of the support cells.
        let support = dofs.containing_solid_leaves(grid, node);
        let mut ring: Vec<usize> = support.clone();
        for &c in &support {
            ring.extend(grid.vertex_neighbors(c));
        }
        ring.sort_unstable();
        ring.dedup();
        let mut ring2 = ring.clone();
        for &c in &ring {
            ring2.extend(grid.vertex_neighbors(c));
        }
        ring2.sort_unstable();
        ring2.dedup();

        let x = dofs.node_position(grid, node);
        let mut donor: Option<(usize, f64, u64)> = None;
        for &cand in &ring2 {
            if grid.leaves()[cand].class != CellClass::Active {
                continue;
            }
            let s = solid_pos[cand];
            debug_assert!(s != u32::MAX);
            if !donor_ok(s as usize) {
                continue;
            }
            let d = (grid.cell_center(cand) - x).norm();
            let key = grid.leaves()[cand].key();
            let better = match donor {
                None => true,
                Some((_, bd, bk)) => d < bd || (d == bd && key < bk),
            };
            if better {
                donor = Some((cand, d, key));
            }
        }
        let (donor_idx, _, _) = donor.ok_or(Error::NoDonor(x))?;
        let xi = dofs.local_coords(grid, donor_idx, node);
        let shapes = dofs.basis.eval(xi);
        let s = solid_pos[donor_idx] as usize;
        let donor_nodes = dofs.nodes_of(s);
        let mut row = Vec::new();
        for (j, &dn) in donor_nodes.iter().enumerate() {
            let w = shapes.value[j];
            if w.abs() > 1e-14 {
                row.push((dn, w));
            }
        }
        rows.push((node, s as u32, row));
    }
    Ok(rows)
}

/// Unified linear map from free coefficients to all coefficients. Rows of
/// free nodes are identity; hanging and critical rows are fully resolved to
/// free nodes (chains terminate or an error is raised on a cycle).
pub struct ConstraintMap {
    pub n_nodes: usize,
    pub n_free: usize,
    /// Node id -> free index, `u32::MAX` when constrained.
    pub free_index: Vec<u32>,
    /// Free index -> node id.
    pub free_nodes: Vec<u32>,
    /// Node id -> resolved row over free indices.
    rows: Vec<Vec<(u32, f64)>>,
}

impl ConstraintMap {
    /// Identity map (no constraints).
    pub fn identity(n_nodes: usize) -> Self {
        Self::build(n_nodes, &[], &[]).expect("identity map cannot cycle")
    }

    pub fn build(
        n_nodes: usize,
        hanging: &[(u32, Vec<(u32, f64)>)],
        extrapolation: &[(u32, Vec<(u32, f64)>)],
    ) -> Result<Self> {
        let mut raw: Vec<Option<&Vec<(u32, f64)>>> = vec![None; n_nodes];
        for (node, row) in hanging.iter().chain(extrapolation) {
            if raw[*node as usize].is_some() {
                return Err(Error::ConstraintCycle(*node as usize));
            }
            raw[*node as usize] = Some(row);
        }
        let mut free_index = vec![u32::MAX; n_nodes];
        let mut free_nodes = Vec::new();
        for i in 0..n_nodes {
            if raw[i].is_none() {
                free_index[i] = free_nodes.len() as u32;
                free_nodes.push(i as u32);
            }
        }
        // Resolve chains with memoized depth-first substitution.
        let mut rows: Vec<Option<Vec<(u32, f64)>>> = vec![None; n_nodes];
        let mut in_progress = vec![false; n_nodes];
        fn resolve(
            i: usize,
            raw: &[Option<&Vec<(u32, f64)>>],
            free_index: &[u32],
            rows: &mut [Option<Vec<(u32, f64)>>],
            in_progress: &mut [bool],
        ) -> Result<Vec<(u32, f64)>> {
            if let Some(r) = &rows[i] {
                return Ok(r.clone());
            }
            if in_progress[i] {
                return Err(Error::ConstraintCycle(i));
            }
            let resolved = match raw[i] {
                None => vec![(free_index[i], 1.0)],
                Some(row) => {
                    in_progress[i] = true;
                    let mut acc: Vec<(u32, f64)> = Vec::new();
                    for &(target, w) in row {
                        let sub = resolve(target as usize, raw, free_index, rows, in_progress)?;
                        for (g, c) in sub {
                            acc.push((g, w * c));
                        }
                    }
                    in_progress[i] = false;
                    acc.sort_unstable_by_key(|&(g, _)| g);
                    let mut merged: Vec<(u32, f64)> = Vec::with_capacity(acc.len());
                    for (g, c) in acc {
                        match merged.last_mut() {
                            Some((lg, lc)) if *lg == g => *lc += c,
                            _ => merged.push((g, c)),
                        }
                    }
                    merged.retain(|&(_, c)| c != 0.0);
                    merged
                }
            };
            rows[i] = Some(resolved.clone());
            Ok(resolved)
        }
        for i in 0..n_nodes {
            resolve(i, &raw, &free_index, &mut rows, &mut in_progress)?;
        }
        Ok(Self {
            n_nodes,
            n_free: free_nodes.len(),
            free_index,
            free_nodes,
            rows: rows.into_iter().map(Option::unwrap).collect(),
        })
    }

    /// Resolved row of a node over free indices.
    pub fn row(&self, node: u32) -> &[(u32, f64)] {
        &self.rows[node as usize]
    }

    pub fn is_free(&self, node: u32) -> bool {
        self.free_index[node as usize] != u32::MAX
    }

    /// Expands free coefficients to all nodal coefficients (`u = E u~`).
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        assert_eq!(free_values.len(), self.n_free);
        (0..self.n_nodes)
            .map(|i| {
                self.rows[i]
                    .iter()
                    .map(|&(g, c)| c * free_values[g as usize])
                    .sum()
            })
            .collect()
    }

    /// Value of one node under the expansion.
    pub fn expand_node(&self, node: u32, free_values: &[f64]) -> f64 {
        self.rows[node as usize]
            .iter()
            .map(|&(g, c)| c * free_values[g as usize])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::basis::Basis;
    use crate::geom::{Aabb, Vec3};
    use crate::octree::ClassifyParams;
    use crate::sdf::AnalyticSdf;

    #[test]
    fn constant_field_reproduction() {
        // Rows of any valid constraint map sum to one, so a constant free
        // vector expands to the same constant everywhere.
        let hanging = vec![(3u32, vec![(0u32, 0.5), (1u32, 0.5)])];
        let extrap = vec![(4u32, vec![(3u32, 0.75), (2u32, 0.25)])]; // chains through hanging
        let cmap = ConstraintMap::build(5, &hanging, &extrap).unwrap();
        assert_eq!(cmap.n_free, 3);
        let expanded = cmap.expand(&[2.5, 2.5, 2.5]);
        for v in expanded {
            assert!((v - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn chains_resolve_through_hanging() {
        let hanging = vec![(2u32, vec![(0u32, 0.5), (1u32, 0.5)])];
        let extrap = vec![(3u32, vec![(2u32, 2.0), (0u32, -1.0)])];
        let cmap = ConstraintMap::build(4, &hanging, &extrap).unwrap();
        // u3 = 2 u2 - u0 = 2(0.5 u0 + 0.5 u1) - u0 = u1... resolved to free.
        let row = cmap.row(3);
        assert_eq!(row.len(), 1);
        assert_eq!(row[0], (1, 1.0));
    }

    #[test]
    fn cycles_are_detected() {
        let hanging = vec![(0u32, vec![(1u32, 1.0)])];
        let extrap = vec![(1u32, vec![(0u32, 1.0)])];
        assert!(matches!(
            ConstraintMap::build(2, &hanging, &extrap),
            Err(Error::ConstraintCycle(_))
        ));
    }

    fn sphere_setup(h_level: u8, radius: f64) -> (FeGrid, DofMap, Vec<f64>) {
        let field = AnalyticSdf::sphere(Vec3::zeros(), radius);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), h_level);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        let dofs = DofMap::build(&g, Basis::new(1));
        let mut inside = vec![0.0f64; dofs.solid_cell_count()];
        for s in 0..dofs.solid_cell_count() {
            let leaf = dofs.solid_cells[s] as usize;
            if g.leaves()[leaf].class.is_cut() {
                let dec = crate::cutquad::decompose_cell(
                    g.cell_box(leaf),
                    g.leaves()[leaf].coords,
                    &field,
                    2,
                    1e-8,
                );
                inside[s] = dec.inside_volume();
            }
        }
        (g, dofs, inside)
    }

    #[test]
    fn interior_nodes_are_never_critical() {
        // h = 0.25: supports of nodes with |x| < 0.5 stay inside the sphere.
        let (g, dofs, inside) = sphere_setup(4, 1.0);
        let crit = detect_critical(&g, &dofs, &inside, 0.125, &[]);
        for node in 0..dofs.node_count() as u32 {
            let x = dofs.node_position(&g, node);
            if x.norm() < 0.5 {
                assert!(!crit.critical[node as usize], "interior node at {x:?}");
                assert!((crit.fraction[node as usize] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sliver_support_node_is_critical_and_gets_donor() {
        // A sphere smaller than one cell, centered on a lattice corner so the
        // corner test sees it: every solid cell is cut, support fractions are
        // tiny, and no active donor exists anywhere.
        let field = AnalyticSdf::sphere(Vec3::zeros(), 0.57);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), 2);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        let dofs = DofMap::build(&g, Basis::new(1));
        let mut inside = vec![0.0f64; dofs.solid_cell_count()];
        for s in 0..dofs.solid_cell_count() {
            let leaf = dofs.solid_cells[s] as usize;
            if g.leaves()[leaf].class.is_cut() {
                let dec = crate::cutquad::decompose_cell(
                    g.cell_box(leaf),
                    g.leaves()[leaf].coords,
                    &field,
                    3,
                    1e-9,
                );
                inside[s] = dec.inside_volume();
            }
        }
        let crit = detect_critical(&g, &dofs, &inside, 0.125, &[]);
        let n_critical = crit.critical.iter().filter(|&&c| c).count();
        assert!(n_critical > 0);
        // Sphere volume 0.0335 in cells of volume 1: every node fraction is
        // far below 1/8, and there is no active cell at all, so donor search
        // must fail. This is the geometry-too-coarse error path.
        assert!(extrapolation_rows(&g, &dofs, &crit, &[]).is_err());
    }

    #[test]
    fn lagrange_at_lattice_node_is_kronecker() {
        // The extrapolation machinery evaluated at a donor's own node yields
        // a single unit coefficient (exact local coordinates from integers).
        let (g, dofs, _) = sphere_setup(3, 1.0);
        let s = (0..dofs.solid_cell_count())
            .find(|&s| g.leaves()[dofs.solid_cells[s] as usize].class == CellClass::Active)
            .unwrap();
        let leaf = dofs.solid_cells[s] as usize;
        for (j, &node) in dofs.nodes_of(s).iter().enumerate() {
            let xi = dofs.local_coords(&g, leaf, node);
            let shapes = dofs.basis.eval(xi);
            for k in 0..dofs.basis.nodes_per_cell() {
                let expect = if k == j { 1.0 } else { 0.0 };
                assert_eq!(shapes.value[k], expect);
            }
        }
    }

    #[test]
    fn realistic_critical_nodes_get_partition_of_unity_donor_rows() {
        // Off-center sphere on a coarse grid: boundary corner nodes have
        // small active fractions while interior active cells provide donors.
        let field = AnalyticSdf::sphere(Vec3::new(0.03, 0.02, 0.01), 1.0);
        let mut g = FeGrid::uniform(Aabb::cube(Vec3::zeros(), 4.0), 3);
        g.classify(&field, &ClassifyParams::default()).unwrap();
        let dofs = DofMap::build(&g, Basis::new(1));
        let mut inside = vec![0.0f64; dofs.solid_cell_count()];
        for s in 0..dofs.solid_cell_count() {
            let leaf = dofs.solid_cells[s] as usize;
            if g.leaves()[leaf].class.is_cut() {
                let dec = crate::cutquad::decompose_cell(
                    g.cell_box(leaf),
                    g.leaves()[leaf].coords,
                    &field,
                    2,
                    1e-8,
                );
                inside[s] = dec.inside_volume();
            }
        }
        let crit = detect_critical(&g, &dofs, &inside, 0.4, &[]);
        let n_critical = crit.critical.iter().filter(|&&c| c).count();
        assert!(n_critical >= 5, "expected critical nodes, got {n_critical}");
        let rows = extrapolation_rows(&g, &dofs, &crit, &[]).unwrap();
        assert_eq!(rows.len(), n_critical);
        for (node, donor, row) in &rows {
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-12, "node {node}: sum {sum}");
            assert!(g.leaves()[dofs.solid_cells[*donor as usize] as usize].class
                == CellClass::Active);
            for &(target, _) in row {
                assert!(!crit.critical[target as usize]);
            }
        }
    }
}
