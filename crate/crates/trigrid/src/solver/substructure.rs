//! Iterative substructuring: per-unit blocked systems, Schur complement
//! application without forming it, and interior recovery.
//!
//! A *unit* is one connected component of a subdomain; fragmentation repair
//! happens by treating components as independent substructures.

use super::ldl::SparseLdl;
use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, ElementSystem};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Interior problems below this size use dense Cholesky, above sparse LDL.
const DENSE_INTERIOR_LIMIT: usize = 3000;

enum InteriorFactor {
    Empty,
    Dense(Cholesky<f64, Dyn>),
    Sparse(SparseLdl),
}

/// One substructure unit: local matrix, load, interior/interface split, and
/// a factorization of the interior block.
pub struct SubdomainSystem {
    pub unit_id: usize,
    /// Sorted global dof ids; position = local index.
    pub global_dofs: Vec<u32>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Local index -> true when the dof is shared with another unit.
    pub is_interface: Vec<bool>,
    pub interface_locals: Vec<u32>,
    pub interior_locals: Vec<u32>,
    /// Per interface local: index into the global interface numbering.
    pub interface_index: Vec<u32>,
    /// Interior local -> position in the interior ordering.
    interior_pos: Vec<u32>,
    factor: InteriorFactor,
}

impl SubdomainSystem {
    /// Solves `A_II s = t` for an interior-sized vector.
    fn solve_interior(&self, t: &[f64]) -> Result<Vec<f64>> {
        match &self.factor {
            InteriorFactor::Empty => Ok(Vec::new()),
            InteriorFactor::Dense(chol) => {
                let s = chol.solve(&DVector::from_column_slice(t));
                Ok(s.as_slice().to_vec())
            }
            InteriorFactor::Sparse(ldl) => Ok(ldl.solve(t)),
        }
    }

    /// y_if = A_SS x_if - A_SI (A_II)^-1 A_IS x_if on local interface dofs.
    fn schur_mul(&self, x_if: &[f64]) -> Result<Vec<f64>> {
        let n_i = self.interior_locals.len();
        // t = A_IS x.
        let mut t = vec![0.0; n_i];
        for (pos, &row) in self.interior_locals.iter().enumerate() {
            let (cols, vals) = self.matrix.row(row as usize);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                if self.is_interface[c as usize] {
                    acc += v * x_if[self.local_if_pos(c)];
                }
            }
            t[pos] = acc;
        }
        let s = self.solve_interior(&t)?;
        let mut y = vec![0.0; self.interface_locals.len()];
        for (out, &row) in y.iter_mut().zip(&self.interface_locals) {
            let (cols, vals) = self.matrix.row(row as usize);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                if self.is_interface[c as usize] {
                    acc += v * x_if[self.local_if_pos(c)];
                } else {
                    acc -= v * s[self.interior_pos[c as usize] as usize];
                }
            }
            *out = acc;
        }
        Ok(y)
    }

    /// Position of a local interface dof in `interface_locals`.
    fn local_if_pos(&self, local: u32) -> usize {
        self.interface_locals.binary_search(&local).expect("interface dof") as usize
    }

    /// h_i = f_S - A_SI (A_II)^-1 f_I.
    fn schur_rhs(&self) -> Result<Vec<f64>> {
        let f_i: Vec<f64> =
            self.interior_locals.iter().map(|&l| self.rhs[l as usize]).collect();
        let s = self.solve_interior(&f_i)?;
        let mut h = Vec::with_capacity(self.interface_locals.len());
        for &row in &self.interface_locals {
            let (cols, vals) = self.matrix.row(row as usize);
            let mut acc = self.rhs[row as usize];
            for (&c, &v) in cols.iter().zip(vals) {
                if !self.is_interface[c as usize] {
                    acc -= v * s[self.interior_pos[c as usize] as usize];
                }
            }
            h.push(acc);
        }
        Ok(h)
    }

    /// u_I = (A_II)^-1 (f_I - A_IS u_S), given local interface values.
    fn recover_interior(&self, u_if: &[f64]) -> Result<Vec<f64>> {
        let mut t: Vec<f64> =
            self.interior_locals.iter().map(|&l| self.rhs[l as usize]).collect();
        for (pos, &row) in self.interior_locals.iter().enumerate() {
            let (cols, vals) = self.matrix.row(row as usize);
            for (&c, &v) in cols.iter().zip(vals) {
                if self.is_interface[c as usize] {
                    t[pos] -= v * u_if[self.local_if_pos(c)];
                }
            }
        }
        self.solve_interior(&t)
    }

    pub fn dense_matrix(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }
}

/// The assembled substructure over all units.
pub struct Substructure {
    pub units: Vec<SubdomainSystem>,
    pub n_global: usize,
    /// Sorted global ids of interface dofs.
    pub interface_dofs: Vec<u32>,
    /// Units sharing each interface dof.
    pub multiplicity: Vec<u32>,
}

fn pattern_from_elements(n_local: usize, elements: &[(Vec<u32>, usize)]) -> Vec<Vec<u32>> {
    // elements: (local dof set, original index); build row patterns by
    // merging the sets of incident elements.
    let mut counts = vec![0usize; n_local];
    for (set, _) in elements {
        for &l in set {
            counts[l as usize] += 1;
        }
    }
    let mut offsets = vec![0usize; n_local + 1];
    for i in 0..n_local {
        offsets[i + 1] = offsets[i] + counts[i];
    }
    let mut incident = vec![0u32; offsets[n_local]];
    let mut fill = offsets.clone();
    for (e, (set, _)) in elements.iter().enumerate() {
        for &l in set {
            incident[fill[l as usize]] = e as u32;
            fill[l as usize] += 1;
        }
    }
    let mut rows = Vec::with_capacity(n_local);
    let mut buf: Vec<u32> = Vec::new();
    for l in 0..n_local {
        buf.clear();
        for &e in &incident[offsets[l]..offsets[l + 1]] {
            buf.extend_from_slice(&elements[e as usize].0);
        }
        buf.sort_unstable();
        buf.dedup();
        rows.push(buf.clone());
    }
    rows
}

impl Substructure {
    /// Builds the substructure from per-unit element contributions over
    /// `n_global` free dofs. Units with no dofs are dropped.
    pub fn build(unit_elements: &[Vec<ElementSystem>], n_global: usize) -> Result<Self> {
        // Unit dof sets and global ownership counts.
        let mut owner_count = vec![0u32; n_global];
        let mut unit_dofs: Vec<Vec<u32>> = Vec::new();
        let mut kept_units: Vec<usize> = Vec::new();
        for (uid, elements) in unit_elements.iter().enumerate() {
            let mut dofs: Vec<u32> = elements.iter().flat_map(|e| e.dofs.iter().copied()).collect();
            dofs.sort_unstable();
            dofs.dedup();
            if dofs.is_empty() {
                continue;
            }
            for &g in &dofs {
                owner_count[g as usize] += 1;
            }
            kept_units.push(uid);
            unit_dofs.push(dofs);
        }
        let interface_dofs: Vec<u32> = (0..n_global as u32)
            .filter(|&g| owner_count[g as usize] >= 2)
            .collect();
        let mut interface_pos = vec![u32::MAX; n_global];
        for (k, &g) in interface_dofs.iter().enumerate() {
            interface_pos[g as usize] = k as u32;
        }
        let multiplicity: Vec<u32> =
            interface_dofs.iter().map(|&g| owner_count[g as usize]).collect();

        let mut units = Vec::with_capacity(unit_dofs.len());
        for (k, dofs) in unit_dofs.into_iter().enumerate() {
            let uid = kept_units[k];
            let elements = &unit_elements[uid];
            let n_local = dofs.len();
            let local_of = |g: u32| dofs.binary_search(&g).expect("unit dof") as u32;
            // Local element dof lists.
            let local_sets: Vec<(Vec<u32>, usize)> = elements
                .iter()
                .enumerate()
                .map(|(e, el)| (el.dofs.iter().map(|&g| local_of(g)).collect(), e))
                .collect();
            let rows = pattern_from_elements(n_local, &local_sets);
            let mut matrix = CsrMatrix::from_pattern(rows);
            let mut rhs = vec![0.0; n_local];
            for el in elements {
                let m = el.dofs.len();
                for a in 0..m {
                    let la = local_of(el.dofs[a]);
                    rhs[la as usize] += el.rhs[a];
                    for b in 0..m {
                        matrix.add(la as usize, local_of(el.dofs[b]), el.matrix[a * m + b]);
                    }
                }
            }
            let is_interface: Vec<bool> =
                dofs.iter().map(|&g| interface_pos[g as usize] != u32::MAX).collect();
            let interface_locals: Vec<u32> = (0..n_local as u32)
                .filter(|&l| is_interface[l as usize])
                .collect();
            let interior_locals: Vec<u32> = (0..n_local as u32)
                .filter(|&l| !is_interface[l as usize])
                .collect();
            let interface_index: Vec<u32> = interface_locals
                .iter()
                .map(|&l| interface_pos[dofs[l as usize] as usize])
                .collect();
            let mut interior_pos = vec![u32::MAX; n_local];
            for (p, &l) in interior_locals.iter().enumerate() {
                interior_pos[l as usize] = p as u32;
            }
            // Interior factorization.
            let n_i = interior_locals.len();
            let factor = if n_i == 0 {
                InteriorFactor::Empty
            } else if n_i <= DENSE_INTERIOR_LIMIT {
                let mut a_ii = DMatrix::zeros(n_i, n_i);
                for (pi, &row) in interior_locals.iter().enumerate() {
                    let (cols, vals) = matrix.row(row as usize);
                    for (&c, &v) in cols.iter().zip(vals) {
                        if !is_interface[c as usize] {
                            a_ii[(pi, interior_pos[c as usize] as usize)] = v;
                        }
                    }
                }
                InteriorFactor::Dense(a_ii.cholesky().ok_or_else(|| {
                    Error::Solver(format!("unit {uid}: interior block not positive definite"))
                })?)
            } else {
                let mut rows = Vec::with_capacity(n_i);
                for &row in &interior_locals {
                    let (cols, _) = matrix.row(row as usize);
                    rows.push(
                        cols.iter()
                            .filter(|&&c| !is_interface[c as usize])
                            .map(|&c| interior_pos[c as usize])
                            .collect::<Vec<u32>>(),
                    );
                }
                let mut a_ii = CsrMatrix::from_pattern(rows);
                for (pi, &row) in interior_locals.iter().enumerate() {
                    let (cols, vals) = matrix.row(row as usize);
                    for (&c, &v) in cols.iter().zip(vals) {
                        if !is_interface[c as usize] {
                            a_ii.add(pi, interior_pos[c as usize], v);
                        }
                    }
                }
                InteriorFactor::Sparse(SparseLdl::new(&a_ii).map_err(|e| {
                    Error::Solver(format!("unit {uid}: interior factorization failed: {e}"))
                })?)
            };
            units.push(SubdomainSystem {
                unit_id: uid,
                global_dofs: dofs,
                matrix,
                rhs,
                is_interface,
                interface_locals,
                interior_locals,
                interface_index,
                interior_pos,
                factor,
            });
        }
        Ok(Self { units, n_global, interface_dofs, multiplicity })
    }

    pub fn n_interface(&self) -> usize {
        self.interface_dofs.len()
    }

    /// y = S x on the global interface, accumulated over units in fixed order.
    pub fn schur_apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        assert_eq!(x.len(), self.n_interface());
        y.iter_mut().for_each(|v| *v = 0.0);
        for unit in &self.units {
            if unit.interface_locals.is_empty() {
                continue;
            }
            let x_loc: Vec<f64> =
                unit.interface_index.iter().map(|&k| x[k as usize]).collect();
            let y_loc = unit.schur_mul(&x_loc)?;
            for (v, &k) in y_loc.iter().zip(&unit.interface_index) {
                y[k as usize] += v;
            }
        }
        Ok(())
    }

    /// Assembled Schur right-hand side h.
    pub fn schur_rhs(&self) -> Result<Vec<f64>> {
        let mut h = vec![0.0; self.n_interface()];
        for unit in &self.units {
            let h_loc = unit.schur_rhs()?;
            for (v, &k) in h_loc.iter().zip(&unit.interface_index) {
                h[k as usize] += v;
            }
        }
        Ok(h)
    }

    /// Recovers the full solution from interface values.
    pub fn recover(&self, u_if: &[f64]) -> Result<Vec<f64>> {
        let mut u = vec![0.0; self.n_global];
        for (&g, &v) in self.interface_dofs.iter().zip(u_if) {
            u[g as usize] = v;
        }
        for unit in &self.units {
            let x_loc: Vec<f64> =
                unit.interface_index.iter().map(|&k| u_if[k as usize]).collect();
            let interior = unit.recover_interior(&x_loc)?;
            for (p, &l) in unit.interior_locals.iter().enumerate() {
                u[unit.global_dofs[l as usize] as usize] = interior[p];
            }
        }
        Ok(u)
    }

    /// Direct solve for the degenerate single-unit case (empty interface).
    pub fn solve_direct(&self) -> Result<Vec<f64>> {
        let mut u = vec![0.0; self.n_global];
        for unit in &self.units {
            if !unit.interface_locals.is_empty() {
                return Err(Error::Solver("direct solve requires an empty interface".into()));
            }
            let interior = unit.recover_interior(&[])?;
            for (p, &l) in unit.interior_locals.iter().enumerate() {
                u[unit.global_dofs[l as usize] as usize] = interior[p];
            }
        }
        Ok(u)
    }

    /// Dense global reassembly (test oracle): sum of R_i^T A_i R_i.
    pub fn reassemble_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n_global, self.n_global);
        for unit in &self.units {
            for l in 0..unit.global_dofs.len() {
                let (cols, vals) = unit.matrix.row(l);
                let gi = unit.global_dofs[l] as usize;
                for (&c, &v) in cols.iter().zip(vals) {
                    a[(gi, unit.global_dofs[c as usize] as usize)] += v;
                }
            }
        }
        a
    }
}
