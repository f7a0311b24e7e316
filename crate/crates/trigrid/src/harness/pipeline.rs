//! End-to-end solve pipeline: geometry, grid, classification, constraints,
//! assembly, solve, and norms.

use super::config::RunConfig;
use super::geometry::{build_geometry, parse_neumann_tag, GeometryField};
use super::problems::{manufactured, Manufactured};
use crate::cutquad::decompose_cell;
use crate::error::{Error, Result};
use crate::fem::{
    assemble, detect_critical, error_norms, extrapolation_rows, for_each_element,
    resolve_hanging_chains, Basis, ConstraintMap, CutQuadParams, DofMap, ErrorNorms,
    PoissonProblem, SolutionField,
};
use crate::geom::{Aabb, Vec3};
use crate::octree::{partition_zcurve, CellClass, ClassifyParams, FeGrid, Partition};
use crate::solver::{solve_bddc, solve_jacobi_pcg};
use std::rc::Rc;
use std::time::Instant;

/// Counters and timings of one solve.
#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub n_leaves: usize,
    pub n_solid: usize,
    pub n_cut: usize,
    pub n_nodes: usize,
    pub n_free: usize,
    pub n_hanging: usize,
    pub n_critical: usize,
    pub n_interface: usize,
    pub n_coarse: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub residuals: Vec<f64>,
    pub assembly_seconds: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

/// A completed solve owning everything needed for evaluation and export.
pub struct Solved {
    pub config: RunConfig,
    pub warnings: Vec<String>,
    pub field: Rc<GeometryField>,
    pub grid: FeGrid,
    pub dofs: DofMap,
    pub cmap: ConstraintMap,
    pub partition: Option<Partition>,
    pub problem: Manufactured,
    pub u_free: Vec<f64>,
    pub stats: SolveStats,
}

impl Solved {
    pub fn solution(&self) -> SolutionField<'_> {
        SolutionField::new(&self.grid, &self.dofs, &self.cmap, &self.u_free)
    }

    pub fn quad_params(&self) -> CutQuadParams {
        quad_params(&self.config)
    }

    pub fn norms(&self) -> ErrorNorms {
        let solution = self.solution();
        error_norms(
            &self.grid,
            &self.field.cached(),
            &solution,
            &self.quad_params(),
            &self.problem.u,
            &self.problem.grad,
        )
    }

    /// Decomposition of one solid (cut) cell, for export.
    pub fn decomposition(&self, s: usize) -> crate::cutquad::QuadratureDecomposition {
        let leaf_idx = self.dofs.solid_cells[s] as usize;
        let leaf = self.grid.leaves()[leaf_idx];
        let qp = self.quad_params();
        let r_q = if leaf.class == CellClass::CutExtraordinary {
            qp.r_q + qp.r_q_extra
        } else {
            qp.r_q
        };
        decompose_cell(self.grid.cell_box(leaf_idx), leaf.coords, &self.field.cached(), r_q, qp.root_tol)
    }
}

pub fn quad_params(cfg: &RunConfig) -> CutQuadParams {
    CutQuadParams {
        r_q: cfg.r_q,
        r_q_extra: cfg.r_q_extra,
        root_tol: cfg.effective_h_g() / 100.0,
    }
}

pub fn domain_box(cfg: &RunConfig) -> Aabb {
    Aabb::cube(
        Vec3::new(cfg.domain_center[0], cfg.domain_center[1], cfg.domain_center[2]),
        cfg.domain_edge,
    )
}

/// Builds the classified FE grid for a configuration.
pub fn build_grid(cfg: &RunConfig, field: &GeometryField) -> Result<FeGrid> {
    let mut grid = FeGrid::uniform(domain_box(cfg), cfg.base_refinements);
    let h_finest = cfg.domain_edge
        / (1u64 << (cfg.base_refinements as u32 + cfg.boundary_refinements)) as f64;
    let params = ClassifyParams {
        h_sample: cfg.effective_h_g().max(h_finest / 16.0).max(cfg.h_sample),
        cos_theta: cfg.cos_theta,
    };
    let view = field.cached();
    if cfg.boundary_refinements > 0 {
        grid.refine_toward_boundary(&view, &params, cfg.boundary_refinements, cfg.h_min)?;
    } else {
        grid.classify(&view, &params)?;
    }
    Ok(grid)
}

/// Classification parameters consistent with the current grid state.
pub fn classify_params(cfg: &RunConfig, grid: &FeGrid) -> ClassifyParams {
    let h_finest = grid.level_size(grid.max_leaf_level());
    ClassifyParams {
        h_sample: cfg.effective_h_g().max(h_finest / 16.0).max(cfg.h_sample),
        cos_theta: cfg.cos_theta,
    }
}

/// Full pipeline from a configuration.
pub fn run_solve(cfg: RunConfig) -> Result<Solved> {
    let warnings = cfg.validate()?;
    let (field, _) = build_geometry(&cfg)?;
    let field = Rc::new(field);
    let grid = build_grid(&cfg, field.as_ref())?;
    solve_on_grid(cfg, warnings, field, grid)
}

/// Solve on an already classified grid (used by the adaptive driver).
pub fn solve_on_grid(
    cfg: RunConfig,
    warnings: Vec<String>,
    field: Rc<GeometryField>,
    grid: FeGrid,
) -> Result<Solved> {
    let problem_data = manufactured(&cfg.problem)?;
    let qp = quad_params(&cfg);
    let setup_start = Instant::now();
    let basis = Basis::new(cfg.p);
    let dofs = DofMap::build(&grid, basis);
    let hanging = resolve_hanging_chains(&dofs.hanging_rows(&grid))?;

    // Inside volumes of cut cells for the criticality accumulation.
    let mut inside = vec![0.0f64; dofs.solid_cell_count()];
    for s in 0..dofs.solid_cell_count() {
        let leaf_idx = dofs.solid_cells[s] as usize;
        let leaf = grid.leaves()[leaf_idx];
        if leaf.class.is_cut() {
            let r_q = if leaf.class == CellClass::CutExtraordinary {
                qp.r_q + qp.r_q_extra
            } else {
                qp.r_q
            };
            let view = field.cached();
            let dec =
                decompose_cell(grid.cell_box(leaf_idx), leaf.coords, &view, r_q, qp.root_tol);
            inside[s] = dec.inside_volume();
        }
    }
    let (extrap, n_critical) = if cfg.stabilize {
        let crit = detect_critical(&grid, &dofs, &inside, cfg.epsilon, &hanging);
        let rows = extrapolation_rows(&grid, &dofs, &crit, &hanging)?;
        let plain: Vec<(u32, Vec<(u32, f64)>)> =
            rows.into_iter().map(|(node, _, row)| (node, row)).collect();
        let n = plain.len();
        (plain, n)
    } else {
        (Vec::new(), 0)
    };
    let cmap = ConstraintMap::build(dofs.node_count(), &hanging, &extrap)?;
    let setup_seconds = setup_start.elapsed().as_secs_f64();

    let exact_u = problem_data.u;
    let exact_grad = problem_data.grad;
    let source = problem_data.f;
    let dirichlet = move |x: Vec3| exact_u(x);
    let neumann = move |x: Vec3, n: Vec3| exact_grad(x).dot(&n);
    let tag = parse_neumann_tag(&cfg.neumann)?;
    let region = tag.map(|(axis, greater, value)| {
        move |x: Vec3| if greater { x[axis] > value } else { x[axis] < value }
    });
    let region_ref: Option<&dyn Fn(Vec3) -> bool> =
        region.as_ref().map(|r| r as &dyn Fn(Vec3) -> bool);
    let problem = PoissonProblem {
        source: &source,
        dirichlet: &dirichlet,
        neumann: &neumann,
        neumann_region: region_ref,
        gamma0: cfg.effective_gamma0(),
    };

    let mut stats = SolveStats {
        n_leaves: grid.leaf_count(),
        n_solid: dofs.solid_cell_count(),
        n_cut: grid.leaves().iter().filter(|c| c.class.is_cut()).count(),
        n_nodes: dofs.node_count(),
        n_free: cmap.n_free,
        n_hanging: hanging.len(),
        n_critical,
        setup_seconds,
        ..Default::default()
    };

    let mut partition = None;
    let u_free = match cfg.solver.as_str() {
        "jacobi-pcg" => {
            let t = Instant::now();
            let view = field.cached();
            let system = assemble(&grid, &view, &dofs, &cmap, &problem, &qp)?;
            stats.assembly_seconds = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let result = solve_jacobi_pcg(&system, cfg.tol, cfg.max_iter)?;
            stats.solve_seconds = t.elapsed().as_secs_f64();
            stats.iterations = result.iterations;
            stats.converged = result.converged;
            stats.final_residual = result.residuals.last().copied().unwrap_or(0.0);
            stats.residuals = result.residuals;
            result.x
        }
        "bddc" => {
            let part = partition_zcurve(&grid, cfg.n_subdomains, cfg.weight_solid, cfg.weight_inactive)?;
            // Unit index per solid cell: components within subdomains.
            let units = part.units();
            let mut unit_index = std::collections::HashMap::new();
            for (k, &(s, c)) in units.iter().enumerate() {
                unit_index.insert((s, c), k);
            }
            let mut unit_of_cell = vec![0usize; dofs.solid_cell_count()];
            for s in 0..dofs.solid_cell_count() {
                let leaf = dofs.solid_cells[s] as usize;
                let key = (part.subdomain_of[leaf], part.component_of[leaf]);
                unit_of_cell[s] = *unit_index
                    .get(&key)
                    .ok_or_else(|| Error::Solver(format!("cell {leaf} missing from partition")))?;
            }
            // Fragmentation repair on resolved dofs: stabilization can
            // decouple face-adjacent sliver cells, so units split further
            // into components of the "share at least four free dofs" graph.
            let n_units = split_units_by_dof_sharing(&dofs, &cmap, &mut unit_of_cell, units.len());
            let t = Instant::now();
            let mut unit_elements: Vec<Vec<crate::fem::ElementSystem>> =
                (0..n_units).map(|_| Vec::new()).collect();
            let view = field.cached();
            for_each_element(&grid, &view, &dofs, &cmap, &problem, &qp, |s, elem| {
                unit_elements[unit_of_cell[s]].push(elem);
            })?;
            stats.assembly_seconds = t.elapsed().as_secs_f64();
            // Native dofs per unit: free dofs whose own node lies on one of
            // the unit's cells. Dofs a unit only borrows through constraint
            // tails become forced coarse corners inside the preconditioner.
            let mut native: Vec<Vec<u32>> = (0..n_units).map(|_| Vec::new()).collect();
            for s in 0..dofs.solid_cell_count() {
                for &node in dofs.nodes_of(s) {
                    let f = cmap.free_index[node as usize];
                    if f != u32::MAX {
                        native[unit_of_cell[s]].push(f);
                    }
                }
            }
            let keep: Vec<bool> = unit_elements.iter().map(|els| !els.is_empty()).collect();
            let mut native = native
                .into_iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(v, _)| v)
                .collect::<Vec<_>>();
            for v in &mut native {
                v.sort_unstable();
                v.dedup();
            }
            unit_elements.retain(|els| !els.is_empty());
            let positions: Vec<Vec3> = cmap
                .free_nodes
                .iter()
                .map(|&n| dofs.node_position(&grid, n))
                .collect();
            let t = Instant::now();
            let result =
                solve_bddc(&unit_elements, cmap.n_free, &positions, &native, cfg.tol, cfg.max_iter)?;
            stats.solve_seconds = t.elapsed().as_secs_f64();
            stats.iterations = result.iterations;
            stats.converged = result.converged;
            stats.final_residual = result.residuals.last().copied().unwrap_or(0.0);
            stats.residuals = result.residuals;
            stats.n_interface = result.n_interface;
            stats.n_coarse = result.n_coarse;
            partition = Some(part);
            result.solution
        }
        other => return Err(Error::Config(format!("unknown solver '{other}'"))),
    };
    Ok(Solved {
        config: cfg,
        warnings,
        field,
        grid,
        dofs,
        cmap,
        partition,
        problem: problem_data,
        u_free,
        stats,
    })
}

/// Splits units into connected components of the graph whose edges join
/// solid cells sharing at least four resolved free dofs. Returns the new
/// unit count; `unit_of_cell` is rewritten in place with deterministic ids.
fn split_units_by_dof_sharing(
    dofs: &DofMap,
    cmap: &ConstraintMap,
    unit_of_cell: &mut [usize],
    n_units: usize,
) -> usize {
    let n_cells = dofs.solid_cell_count();
    // Expanded free-dof set per cell.
    let mut cell_sets: Vec<Vec<u32>> = Vec::with_capacity(n_cells);
    for s in 0..n_cells {
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
    // Union-find over cells, merging pairs in the same unit with >= 4 shared
    // dofs. Pairs come from per-dof incidence lists.
    let mut parent: Vec<u32> = (0..n_cells as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }
    let mut dof_cells: std::collections::HashMap<u32, Vec<u32>> = Default::default();
    for (c, set) in cell_sets.iter().enumerate() {
        for &g in set {
            dof_cells.entry(g).or_default().push(c as u32);
        }
    }
    let mut share_count: std::collections::HashMap<(u32, u32), u32> = Default::default();
    let mut keys: Vec<u32> = dof_cells.keys().copied().collect();
    keys.sort_unstable();
    for g in keys {
        let cells = &dof_cells[&g];
        for (i, &a) in cells.iter().enumerate() {
            for &b in &cells[i + 1..] {
                if unit_of_cell[a as usize] == unit_of_cell[b as usize] {
                    *share_count.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
    }
    let mut pairs: Vec<(u32, u32)> = share_count
        .iter()
        .filter(|&(_, &n)| n >= 4)
        .map(|(&p, _)| p)
        .collect();
    pairs.sort_unstable();
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
    // Deterministic renumbering: (old unit, component root) in cell order.
    let mut next = 0usize;
    let mut ids: std::collections::HashMap<(usize, u32), usize> = Default::default();
    let mut new_units = vec![0usize; n_cells];
    for c in 0..n_cells {
        let key = (unit_of_cell[c], find(&mut parent, c as u32));
        let id = *ids.entry(key).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        new_units[c] = id;
    }
    unit_of_cell.copy_from_slice(&new_units);
    let _ = n_units;
    next
}
