//! Single-level BDDC preconditioner for the interface Schur system, with
//! corner and face/edge-average coarse constraints built per unit
//! (subdomain component), so fragmented subdomains stay solvable.

use super::substructure::Substructure;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use nalgebra::{DMatrix, DVector};

/// An interface entity: the maximal set of interface dofs shared by the same
/// set of units. Two owners make a face, three or more an edge/vertex set.
struct Entity {
    owners: Vec<u32>,
    /// Members as global interface indices; corners listed first.
    corners: Vec<u32>,
    average: Vec<u32>,
}

/// Coarse space data and factorizations for the BDDC application.
pub struct Bddc {
    /// Per interface dof: 1 / multiplicity.
    weights: Vec<f64>,
    /// Per unit: local coarse constraint matrix C (n_c x n_local).
    constraints: Vec<DMatrix<f64>>,
    /// Per unit: global coarse indices of the local coarse dofs.
    coarse_map: Vec<Vec<u32>>,
    /// Per unit: LU factor of the saddle system [[A, C^T], [C, 0]].
    saddle: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Per unit: local coarse basis columns (n_local x n_c).
    basis: Vec<DMatrix<f64>>,
    coarse_factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    pub n_coarse: usize,
}

impl Bddc {
    /// Sets up corners (lexicographically extreme dofs of every interface
    /// entity, plus every dof some unit only borrows through constraint
    /// tails), face/edge averages over the remaining entity members, local
    /// coarse bases from saddle solves, and the assembled coarse matrix.
    /// `positions` maps global free dofs to physical coordinates;
    /// `native_dofs[u]` lists the dofs natively owned by unit `u`.
    pub fn setup(
        subs: &Substructure,
        positions: &[Vec3],
        native_dofs: &[Vec<u32>],
    ) -> Result<Self> {
        let n_if = subs.n_interface();
        let weights: Vec<f64> = subs.multiplicity.iter().map(|&m| 1.0 / m as f64).collect();

        // Group interface dofs by owner sets.
        let mut owners_of: Vec<Vec<u32>> = vec![Vec::new(); n_if];
        let mut forced_corner = vec![false; n_if];
        for (u, unit) in subs.units.iter().enumerate() {
            let native = native_dofs.get(u).map(Vec::as_slice).unwrap_or(&[]);
            for (p, &k) in unit.interface_index.iter().enumerate() {
                owners_of[k as usize].push(u as u32);
                let g = unit.global_dofs[unit.interface_locals[p] as usize];
                if !native_dofs.is_empty() && native.binary_search(&g).is_err() {
                    // Borrowed dof: local coupling may be rank-deficient,
                    // so pin it in the coarse space.
                    forced_corner[k as usize] = true;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<Vec<u32>, Vec<u32>> = Default::default();
        for (k, owners) in owners_of.iter().enumerate() {
            groups.entry(owners.clone()).or_default().push(k as u32);
        }
        let mut entities = Vec::new();
        for (owners, members) in groups {
            // Lexicographic extremes become corner constraints.
            let pos_key = |k: u32| {
                let p = positions[subs.interface_dofs[k as usize] as usize];
                (p.x, p.y, p.z)
            };
            let cmp = |a: &u32, b: &u32| {
                pos_key(*a)
                    .partial_cmp(&pos_key(*b))
                    .unwrap()
                    .then(a.cmp(b))
            };
            let &min = members.iter().min_by(|a, b| cmp(a, b)).unwrap();
            let &max = members.iter().max_by(|a, b| cmp(a, b)).unwrap();
            let mut corners = vec![min];
            if max != min {
                corners.push(max);
            }
            for &m in &members {
                if forced_corner[m as usize] && !corners.contains(&m) {
                    corners.push(m);
                }
            }
            corners.sort_unstable();
            let average: Vec<u32> =
                members.iter().copied().filter(|m| !corners.contains(m)).collect();
            entities.push(Entity { owners, corners, average });
        }

        // Enumerate global coarse dofs: corners then the entity average.
        struct CoarseDof {
            owners: Vec<u32>,
            kind: CoarseKind,
        }
        enum CoarseKind {
            Corner(u32),
            Average(Vec<u32>),
        }
        let mut coarse: Vec<CoarseDof> = Vec::new();
        for e in &entities {
            for &c in &e.corners {
                coarse.push(CoarseDof { owners: e.owners.clone(), kind: CoarseKind::Corner(c) });
            }
            if !e.average.is_empty() {
                coarse.push(CoarseDof {
                    owners: e.owners.clone(),
                    kind: CoarseKind::Average(e.average.clone()),
                });
            }
        }
        let n_coarse = coarse.len();

        // Per unit: constraint rows and the saddle factorization.
        let mut constraints = Vec::with_capacity(subs.units.len());
        let mut coarse_map = Vec::with_capacity(subs.units.len());
        let mut saddle = Vec::with_capacity(subs.units.len());
        let mut basis = Vec::with_capacity(subs.units.len());
        let mut coarse_matrix = DMatrix::zeros(n_coarse, n_coarse);
        for (u, unit) in subs.units.iter().enumerate() {
            let n_local = unit.global_dofs.len();
            // Which coarse dofs involve this unit.
            let mine: Vec<u32> = coarse
                .iter()
                .enumerate()
                .filter(|(_, cd)| cd.owners.contains(&(u as u32)))
                .map(|(i, _)| i as u32)
                .collect();
            let n_c = mine.len();
            let mut c_mat = DMatrix::zeros(n_c, n_local);
            // Interface-global index -> local position.
            let mut local_of_if = std::collections::HashMap::new();
            for (p, &k) in unit.interface_index.iter().enumerate() {
                local_of_if.insert(k, unit.interface_locals[p] as usize);
            }
            for (row, &ci) in mine.iter().enumerate() {
                match &coarse[ci as usize].kind {
                    CoarseKind::Corner(k) => {
                        c_mat[(row, local_of_if[k])] = 1.0;
                    }
                    CoarseKind::Average(members) => {
                        let w = 1.0 / members.len() as f64;
                        for k in members {
                            c_mat[(row, local_of_if[k])] = w;
                        }
                    }
                }
            }
            // Saddle matrix [[A, C^T], [C, 0]].
            let a = unit.dense_matrix();
            let m = n_local + n_c;
            let mut s = DMatrix::zeros(m, m);
            s.view_mut((0, 0), (n_local, n_local)).copy_from(&a);
            s.view_mut((0, n_local), (n_local, n_c)).copy_from(&c_mat.transpose());
            s.view_mut((n_local, 0), (n_c, n_local)).copy_from(&c_mat);
            let lu = s.lu();
            // Coarse basis: solve with [0; I] blocks.
            let mut rhs = DMatrix::zeros(m, n_c);
            for j in 0..n_c {
                rhs[(n_local + j, j)] = 1.0;
            }
            let phi_full = lu.solve(&rhs).ok_or(Error::SingularLocalProblem {
                subdomain: unit.unit_id,
                component: u,
            })?;
            let phi = phi_full.view((0, 0), (n_local, n_c)).into_owned();
            // Local coarse matrix Phi^T A Phi, assembled into the global one.
            let local_coarse = phi.transpose() * &a * &phi;
            for (i, &gi) in mine.iter().enumerate() {
                for (j, &gj) in mine.iter().enumerate() {
                    coarse_matrix[(gi as usize, gj as usize)] += local_coarse[(i, j)];
                }
            }
            constraints.push(c_mat);
            coarse_map.push(mine);
            saddle.push(lu);
            basis.push(phi);
        }
        let coarse_factor = if n_coarse > 0 {
            coarse_matrix
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Solver("singular BDDC coarse problem".into()))?
        } else {
            DMatrix::identity(0, 0).cholesky().unwrap()
        };
        Ok(Self { weights, constraints, coarse_map, saddle, basis, coarse_factor, n_coarse })
    }

    /// Largest deviation of C_i Phi_i from the identity over all units; the
    /// saddle construction makes this a solvability diagnostic.
    pub fn constraint_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (c, phi) in self.constraints.iter().zip(&self.basis) {
            let n_c = c.nrows();
            if n_c == 0 {
                continue;
            }
            let prod = c * phi;
            let err = (&prod - DMatrix::<f64>::identity(n_c, n_c)).amax();
            worst = worst.max(err);
        }
        worst
    }

    /// Applies the preconditioner: z = M^-1 r on the interface.
    pub fn apply(&self, subs: &Substructure, r: &[f64], z: &mut [f64]) -> Result<()> {
        let n_if = subs.n_interface();
        assert_eq!(r.len(), n_if);
        z.iter_mut().for_each(|v| *v = 0.0);
        // Weighted local loads g_u (full unit size, interface slots filled).
        let mut loads: Vec<DVector<f64>> = Vec::with_capacity(subs.units.len());
        let mut coarse_rhs = DVector::zeros(self.n_coarse);
        for (u, unit) in subs.units.iter().enumerate() {
            let n_local = unit.global_dofs.len();
            let mut g = DVector::zeros(n_local);
            for (p, &k) in unit.interface_index.iter().enumerate() {
                g[unit.interface_locals[p] as usize] = self.weights[k as usize] * r[k as usize];
            }
            // Coarse residual: R_C^T Phi^T g.
            let phi_t_g = self.basis[u].transpose() * &g;
            for (j, &cj) in self.coarse_map[u].iter().enumerate() {
                coarse_rhs[cj as usize] += phi_t_g[j];
            }
            loads.push(g);
        }
        let u_c = self.coarse_factor.solve(&coarse_rhs);
        for (u, unit) in subs.units.iter().enumerate() {
            let n_local = unit.global_dofs.len();
            let n_c = self.coarse_map[u].len();
            // Local saddle solve with zero coarse values.
            let mut rhs = DVector::zeros(n_local + n_c);
            rhs.rows_mut(0, n_local).copy_from(&loads[u]);
            let sol = self
                .saddle[u]
                .solve(&rhs)
                .ok_or(Error::SingularLocalProblem { subdomain: unit.unit_id, component: u })?;
            // Add the coarse component.
            let mut v = sol.rows(0, n_local).into_owned();
            if n_c > 0 {
                let mut uc_local = DVector::zeros(n_c);
                for (j, &cj) in self.coarse_map[u].iter().enumerate() {
                    uc_local[j] = u_c[cj as usize];
                }
                v += &self.basis[u] * uc_local;
            }
            for (p, &k) in unit.interface_index.iter().enumerate() {
                z[k as usize] +=
                    self.weights[k as usize] * v[unit.interface_locals[p] as usize];
            }
        }
        Ok(())
    }
}
