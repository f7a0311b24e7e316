//! Nitsche assembly of the Poisson system over active and cut cells, with
//! element contributions pushed through the constraint map during scatter.

use super::basis::{Basis, ShapeValues, MAX_NODES};
use super::constraints::ConstraintMap;
use super::dofmap::DofMap;
use super::system::{CsrMatrix, LinearSystem};
use super::{CutQuadParams, PoissonProblem};
use crate::cutquad::{decompose_cell, emit_quadrature, gauss_1d};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::octree::{CellClass, FeGrid};
use crate::sdf::ImplicitField;

/// One element's contribution, already expanded to free dofs.
pub struct ElementSystem {
    /// Sorted free-dof ids coupled by this element.
    pub dofs: Vec<u32>,
    /// Row-major `dofs.len()^2` stiffness block.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// Per-order cached reference data: tensor Gauss points on the unit cell,
/// shape values there, and the unit-cell stiffness (which scales like `h`).
struct ReferenceCell {
    points: Vec<(Vec3, f64)>,
    shapes: Vec<ShapeValues>,
    stiffness: Vec<f64>, // npc x npc row-major, unit cell
    npc: usize,
}

impl ReferenceCell {
    fn new(basis: Basis) -> Self {
        let rule = gauss_1d(basis.p + 1);
        let mut points = Vec::new();
        for &(z, wz) in rule {
            for &(y, wy) in rule {
                for &(x, wx) in rule {
                    points.push((Vec3::new(x, y, z), wx * wy * wz));
                }
            }
        }
        let shapes: Vec<ShapeValues> = points.iter().map(|&(xi, _)| basis.eval(xi)).collect();
        let npc = basis.nodes_per_cell();
        let mut stiffness = vec![0.0; npc * npc];
        for (s, &(_, w)) in shapes.iter().zip(points.iter()) {
            for i in 0..npc {
                for j in i..npc {
                    let dot = s.grad[i][0] * s.grad[j][0]
                        + s.grad[i][1] * s.grad[j][1]
                        + s.grad[i][2] * s.grad[j][2];
                    stiffness[i * npc + j] += w * dot;
                }
            }
        }
        for i in 0..npc {
            for j in 0..i {
                stiffness[i * npc + j] = stiffness[j * npc + i];
            }
        }
        Self { points, shapes, stiffness, npc }
    }
}

/// Raw (unexpanded) element accumulator.
struct RawElement {
    npc: usize,
    k: [f64; MAX_NODES * MAX_NODES],
    f: [f64; MAX_NODES],
}

impl RawElement {
    fn new(npc: usize) -> Self {
        Self { npc, k: [0.0; MAX_NODES * MAX_NODES], f: [0.0; MAX_NODES] }
    }

    #[inline]
    fn add_volume_point(&mut self, shapes: &ShapeValues, inv_h: f64, w: f64, fval: f64) {
        let scale = w * inv_h * inv_h;
        for i in 0..self.npc {
            self.f[i] += w * fval * shapes.value[i];
            for j in i..self.npc {
                let dot = shapes.grad[i][0] * shapes.grad[j][0]
                    + shapes.grad[i][1] * shapes.grad[j][1]
                    + shapes.grad[i][2] * shapes.grad[j][2];
                self.k[i * self.npc + j] += scale * dot;
            }
        }
    }

    /// Symmetric Nitsche terms at a Dirichlet surface point.
    #[inline]
    fn add_dirichlet_point(
        &mut self,
        shapes: &ShapeValues,
        inv_h: f64,
        w: f64,
        n: Vec3,
        gamma: f64,
        ubar: f64,
    ) {
        let mut gn = [0.0f64; MAX_NODES];
        for i in 0..self.npc {
            gn[i] = (shapes.grad[i][0] * n.x + shapes.grad[i][1] * n.y + shapes.grad[i][2] * n.z)
                * inv_h;
        }
        for i in 0..self.npc {
            self.f[i] += w * ubar * (gamma * shapes.value[i] - gn[i]);
            for j in i..self.npc {
                let pen = gamma * shapes.value[i] * shapes.value[j];
                let cons = shapes.value[i] * gn[j] + gn[i] * shapes.value[j];
                self.k[i * self.npc + j] += w * (pen - cons);
            }
        }
    }

    #[inline]
    fn add_neumann_point(&mut self, shapes: &ShapeValues, w: f64, gbar: f64) {
        for i in 0..self.npc {
            self.f[i] += w * gbar * shapes.value[i];
        }
    }

    fn mirror(&mut self) {
        for i in 0..self.npc {
            for j in 0..i {
                self.k[i * self.npc + j] = self.k[j * self.npc + i];
            }
        }
    }
}

/// Drops dofs with no contribution at all (rows of cut cells whose inside
/// part fell below the degeneracy cutoffs); they would otherwise enter local
/// substructure matrices as exactly zero columns.
fn prune_zero_dofs(elem: ElementSystem) -> ElementSystem {
    let m = elem.dofs.len();
    let keep: Vec<usize> = (0..m)
        .filter(|&a| {
            elem.rhs[a] != 0.0
                || (0..m).any(|b| elem.matrix[a * m + b] != 0.0 || elem.matrix[b * m + a] != 0.0)
        })
        .collect();
    if keep.len() == m {
        return elem;
    }
    let dofs: Vec<u32> = keep.iter().map(|&a| elem.dofs[a]).collect();
    let mut matrix = vec![0.0; keep.len() * keep.len()];
    let mut rhs = vec![0.0; keep.len()];
    for (i, &a) in keep.iter().enumerate() {
        rhs[i] = elem.rhs[a];
        for (j, &b) in keep.iter().enumerate() {
            matrix[i * keep.len() + j] = elem.matrix[a * m + b];
        }
    }
    ElementSystem { dofs, matrix, rhs }
}

/// Expands a raw element through the constraint map.
fn expand_element(
    raw: &RawElement,
    nodes: &[u32],
    cmap: &ConstraintMap,
) -> ElementSystem {
    let npc = raw.npc;
    // Fast path: all nodes free.
    if nodes.iter().all(|&n| cmap.is_free(n)) {
        let mut dofs: Vec<u32> = nodes.iter().map(|&n| cmap.free_index[n as usize]).collect();
        // The matrix must follow the sorted dof order for deterministic
        // scatter; permute.
        let mut order: Vec<usize> = (0..npc).collect();
        order.sort_unstable_by_key(|&l| dofs[l]);
        let sorted: Vec<u32> = order.iter().map(|&l| dofs[l]).collect();
        let mut matrix = vec![0.0; npc * npc];
        let mut rhs = vec![0.0; npc];
        for (a, &l) in order.iter().enumerate() {
            rhs[a] = raw.f[l];
            for (b, &m) in order.iter().enumerate() {
                matrix[a * npc + b] = raw.k[l * npc + m];
            }
        }
        dofs = sorted;
        return ElementSystem { dofs, matrix, rhs };
    }
    // Constrained path: union of resolved rows.
    let mut set: Vec<u32> = Vec::new();
    for &n in nodes {
        for &(g, _) in cmap.row(n) {
            set.push(g);
        }
    }
    set.sort_unstable();
    set.dedup();
    let pos = |g: u32| set.binary_search(&g).unwrap();
    let m = set.len();
    let mut matrix = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (l, &nl) in nodes.iter().enumerate() {
        let row_l = cmap.row(nl);
        for &(g, cg) in row_l {
            let a = pos(g);
            rhs[a] += cg * raw.f[l];
            for (mm, &nm) in nodes.iter().enumerate() {
                let klm = raw.k[l * npc + mm];
                if klm == 0.0 {
                    continue;
                }
                for &(h, ch) in cmap.row(nm) {
                    matrix[a * m + pos(h)] += cg * ch * klm;
                }
            }
        }
    }
    ElementSystem { dofs: set, matrix, rhs }
}

/// Computes every solid cell's expanded element system in Z-order and hands
/// it to `sink(solid_index, element)`.
pub fn for_each_element(
    grid: &FeGrid,
    field: &dyn ImplicitField,
    dofs: &DofMap,
    cmap: &ConstraintMap,
    problem: &PoissonProblem,
    qp: &CutQuadParams,
    mut sink: impl FnMut(usize, ElementSystem),
) -> Result<()> {
    let basis = dofs.basis;
    let reference = ReferenceCell::new(basis);
    let npc = reference.npc;
    for s in 0..dofs.solid_cell_count() {
        let leaf_idx = dofs.solid_cells[s] as usize;
        let leaf = grid.leaves()[leaf_idx];
        let h = grid.cell_size(leaf_idx);
        let anchor = grid.cell_anchor(leaf_idx);
        let inv_h = 1.0 / h;
        let mut raw = RawElement::new(npc);
        match leaf.class {
            CellClass::Active => {
                // Stiffness scales like h; load uses the cached points.
                for i in 0..npc * npc {
                    raw.k[i] = h * reference.stiffness[i];
                }
                for ((xi, w), shapes) in reference.points.iter().zip(&reference.shapes) {
                    let x = anchor + xi * h;
                    let fv = (problem.source)(x);
                    let wv = w * h * h * h;
                    for i in 0..npc {
                        raw.f[i] += wv * fv * shapes.value[i];
                    }
                }
            }
            CellClass::CutOrdinary | CellClass::CutExtraordinary => {
                let r_q = if leaf.class == CellClass::CutExtraordinary {
                    qp.r_q + qp.r_q_extra
                } else {
                    qp.r_q
                };
                let dec = decompose_cell(grid.cell_box(leaf_idx), leaf.coords, field, r_q, qp.root_tol);
                let (vol, surf) = emit_quadrature(&dec, basis.p);
                for q in &vol {
                    let xi = (q.x - anchor) * inv_h;
                    let shapes = basis.eval(xi);
                    raw.add_volume_point(&shapes, inv_h, q.w, (problem.source)(q.x));
                }
                let gamma = problem.gamma0 * inv_h;
                for q in &surf {
                    let xi = (q.x - anchor) * inv_h;
                    let shapes = basis.eval(xi);
                    if problem.neumann_region.map_or(false, |t| t(q.x)) {
                        raw.add_neumann_point(&shapes, q.w, (problem.neumann)(q.x, q.n));
                    } else {
                        raw.add_dirichlet_point(
                            &shapes,
                            inv_h,
                            q.w,
                            q.n,
                            gamma,
                            (problem.dirichlet)(q.x),
                        );
                    }
                }
            }
            CellClass::Inactive | CellClass::Unclassified => unreachable!("non-solid cell in dof map"),
        }
        raw.mirror();
        if raw.k[..npc * npc].iter().any(|v| !v.is_finite())
            || raw.f[..npc].iter().any(|v| !v.is_finite())
        {
            return Err(Error::Cell(leaf_idx, "non-finite element contribution".into()));
        }
        sink(s, prune_zero_dofs(expand_element(&raw, dofs.nodes_of(s), cmap)));
    }
    Ok(())
}

/// Assembles the reduced system `A~ u~ = f~` over free coefficients.
pub fn assemble(
    grid: &FeGrid,
    field: &dyn ImplicitField,
    dofs: &DofMap,
    cmap: &ConstraintMap,
    problem: &PoissonProblem,
    qp: &CutQuadParams,
) -> Result<LinearSystem> {
    let n = cmap.n_free;
    // Symbolic pass: per-cell coupled dof sets (no quadrature involved).
    let mut cell_sets: Vec<Vec<u32>> = Vec::with_capacity(dofs.solid_cell_count());
    for s in 0..dofs.solid_cell_count() {
        let mut set = Vec::new();
        for &node in dofs.nodes_of(s) {
            for &(g, _) in cmap.row(node) {
                set.push(g);
            }
        }
        set.sort_unstable();
        set.dedup();
        cell_sets.push(set);
    }
    // Reverse adjacency dof -> cells.
    let mut counts = vec![0usize; n];
    for set in &cell_sets {
        for &g in set {
            counts[g as usize] += 1;
        }
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + counts[i];
    }
    let mut dof_cells = vec![0u32; offsets[n]];
    let mut fill = offsets.clone();
    for (c, set) in cell_sets.iter().enumerate() {
        for &g in set {
            dof_cells[fill[g as usize]] = c as u32;
            fill[g as usize] += 1;
        }
    }
    // Row patterns.
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut buf: Vec<u32> = Vec::new();
    for g in 0..n {
        buf.clear();
        for &c in &dof_cells[offsets[g]..offsets[g + 1]] {
            buf.extend_from_slice(&cell_sets[c as usize]);
        }
        buf.sort_unstable();
        buf.dedup();
        rows.push(buf.clone());
    }
    drop(dof_cells);
    drop(cell_sets);
    let mut matrix = CsrMatrix::from_pattern(rows);
    let mut rhs = vec![0.0f64; n];

    for_each_element(grid, field, dofs, cmap, problem, qp, |_, elem| {
        let m = elem.dofs.len();
        for a in 0..m {
            let g = elem.dofs[a] as usize;
            rhs[g] += elem.rhs[a];
            for b in 0..m {
                matrix.add(g, elem.dofs[b], elem.matrix[a * m + b]);
            }
        }
    })?;
    Ok(LinearSystem { matrix, rhs })
}
