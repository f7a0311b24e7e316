//! Solution evaluation and error norms integrated over the physical domain.

use super::basis::Basis;
use super::constraints::ConstraintMap;
use super::dofmap::DofMap;
use super::CutQuadParams;
use crate::cutquad::{decompose_cell, emit_quadrature, gauss_1d};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::octree::{CellClass, FeGrid};
use crate::sdf::ImplicitField;

/// A solved field: free coefficients expanded to nodal values, evaluable at
/// points of the discretized domain.
pub struct SolutionField<'a> {
    pub grid: &'a FeGrid,
    pub dofs: &'a DofMap,
    /// Expanded nodal coefficients (`u = E u~`).
    pub nodal: Vec<f64>,
    solid_pos: Vec<u32>,
}

impl<'a> SolutionField<'a> {
    pub fn new(grid: &'a FeGrid, dofs: &'a DofMap, cmap: &ConstraintMap, free: &[f64]) -> Self {
        let nodal = cmap.expand(free);
        let mut solid_pos = vec![u32::MAX; grid.leaf_count()];
        for (s, &leaf) in dofs.solid_cells.iter().enumerate() {
            solid_pos[leaf as usize] = s as u32;
        }
        Self { grid, dofs, nodal, solid_pos }
    }

    /// Evaluates the discrete solution at `x` by octree descent.
    pub fn eval(&self, x: Vec3) -> Result<f64> {
        let leaf = self.grid.leaf_at_point(x).ok_or(Error::OutsideDomain(x))?;
        let s = self.solid_pos[leaf];
        if s == u32::MAX {
            return Err(Error::Cell(leaf, "point lies in an inactive cell".into()));
        }
        Ok(self.eval_in_cell(s as usize, x))
    }

    /// Evaluates using a specific solid cell's basis (the cell need not
    /// contain `x`; the polynomial is extended).
    pub fn eval_in_cell(&self, s: usize, x: Vec3) -> f64 {
        let leaf_idx = self.dofs.solid_cells[s] as usize;
        let h = self.grid.cell_size(leaf_idx);
        let xi = (x - self.grid.cell_anchor(leaf_idx)) / h;
        let shapes = self.dofs.basis.eval(xi);
        self.dofs
            .nodes_of(s)
            .iter()
            .enumerate()
            .map(|(i, &n)| shapes.value[i] * self.nodal[n as usize])
            .sum()
    }

    pub fn grad_in_cell(&self, s: usize, x: Vec3) -> Vec3 {
        let leaf_idx = self.dofs.solid_cells[s] as usize;
        let h = self.grid.cell_size(leaf_idx);
        let xi = (x - self.grid.cell_anchor(leaf_idx)) / h;
        let shapes = self.dofs.basis.eval(xi);
        let mut g = Vec3::zeros();
        for (i, &n) in self.dofs.nodes_of(s).iter().enumerate() {
            let u = self.nodal[n as usize];
            g += Vec3::new(shapes.grad[i][0], shapes.grad[i][1], shapes.grad[i][2]) * u;
        }
        g / h
    }
}

/// Relative and absolute error norms plus the per-cell H1-seminorm error
/// indicator used for adaptive refinement.
pub struct ErrorNorms {
    pub l2_rel: f64,
    pub h1_rel: f64,
    pub l2_abs: f64,
    pub h1_abs: f64,
    /// Squared H1-seminorm error per solid cell.
    pub cell_h1_sq: Vec<f64>,
}

/// Integrates `|u - u_h|` in the L2 norm and H1 seminorm over the physical
/// domain, using the same quadrature as assembly (full tensor Gauss on
/// active cells, the cut decomposition on cut cells).
pub fn error_norms(
    grid: &FeGrid,
    field: &dyn ImplicitField,
    solution: &SolutionField,
    qp: &CutQuadParams,
    exact: &dyn Fn(Vec3) -> f64,
    exact_grad: &dyn Fn(Vec3) -> Vec3,
) -> ErrorNorms {
    let dofs = solution.dofs;
    let basis: Basis = dofs.basis;
    let rule = gauss_1d(basis.p + 1);
    let mut err_l2 = 0.0;
    let mut base_l2 = 0.0;
    let mut err_h1 = 0.0;
    let mut base_h1 = 0.0;
    let mut cell_h1_sq = vec![0.0f64; dofs.solid_cell_count()];
    let mut accumulate = |s: usize, x: Vec3, w: f64| {
        let uh = solution.eval_in_cell(s, x);
        let gh = solution.grad_in_cell(s, x);
        let du = uh - exact(x);
        let dg = gh - exact_grad(x);
        err_l2 += w * du * du;
        base_l2 += w * uh * uh;
        let gsq = dg.norm_squared();
        err_h1 += w * gsq;
        base_h1 += w * gh.norm_squared();
        cell_h1_sq[s] += w * gsq;
    };
    for s in 0..dofs.solid_cell_count() {
        let leaf_idx = dofs.solid_cells[s] as usize;
        let leaf = grid.leaves()[leaf_idx];
        let h = grid.cell_size(leaf_idx);
        let anchor = grid.cell_anchor(leaf_idx);
        match leaf.class {
            CellClass::Active => {
                for &(z, wz) in rule {
                    for &(y, wy) in rule {
                        for &(x, wx) in rule {
                            let p = anchor + Vec3::new(x, y, z) * h;
                            accumulate(s, p, wx * wy * wz * h * h * h);
                        }
                    }
                }
            }
            _ => {
                let r_q = if leaf.class == CellClass::CutExtraordinary {
                    qp.r_q + qp.r_q_extra
                } else {
                    qp.r_q
                };
                let dec =
                    decompose_cell(grid.cell_box(leaf_idx), leaf.coords, field, r_q, qp.root_tol);
                let (vol, _) = emit_quadrature(&dec, basis.p);
                for q in &vol {
                    accumulate(s, q.x, q.w);
                }
            }
        }
    }
    ErrorNorms {
        l2_rel: (err_l2 / base_l2.max(1e-300)).sqrt(),
        h1_rel: (err_h1 / base_h1.max(1e-300)).sqrt(),
        l2_abs: err_l2.sqrt(),
        h1_abs: err_h1.sqrt(),
        cell_h1_sq,
    }
}
