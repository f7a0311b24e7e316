//! Experiment drivers: geometry integration, convergence studies, adaptive
//! refinement, and single solves with reports.

use super::config::RunConfig;
use super::geometry::{build_geometry, ExactMeasures};
use super::pipeline::{
    build_grid, classify_params, quad_params, run_solve, solve_on_grid, Solved,
};
use crate::cutquad::decompose_cell;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::octree::{CellClass, FeGrid};
use std::fmt::Write as _;
use std::rc::Rc;

/// Geometry integration report: reconstructed volume and surface area with
/// errors against closed forms when available.
#[derive(Clone, Debug)]
pub struct GeometryReport {
    pub h_f: f64,
    pub h_q: f64,
    pub h_g: f64,
    pub volume: f64,
    pub area: f64,
    pub exact: Option<ExactMeasures>,
    pub volume_rel_error: Option<f64>,
    pub area_rel_error: Option<f64>,
    pub n_cut: usize,
    pub n_active: usize,
}

/// Integrates 1 over the domain volume and surface using a uniform grid at
/// the configured resolution and the cut-cell decomposition.
pub fn integrate_geometry(cfg: &RunConfig) -> Result<GeometryReport> {
    cfg.validate()?;
    let (field, exact) = build_geometry(cfg)?;
    let grid = build_grid(cfg, &field)?;
    let qp = quad_params(cfg);
    let mut volume = 0.0;
    let mut area = 0.0;
    let mut n_cut = 0;
    let mut n_active = 0;
    for (idx, leaf) in grid.leaves().iter().enumerate() {
        match leaf.class {
            CellClass::Active => {
                n_active += 1;
                volume += grid.cell_size(idx).powi(3);
            }
            CellClass::CutOrdinary | CellClass::CutExtraordinary => {
                n_cut += 1;
                let r_q = if leaf.class == CellClass::CutExtraordinary {
                    qp.r_q + qp.r_q_extra
                } else {
                    qp.r_q
                };
                let dec = decompose_cell(grid.cell_box(idx), leaf.coords, &field as &dyn crate::sdf::ImplicitField, r_q, qp.root_tol);
                volume += dec.inside_volume();
                area += dec.boundary_area();
            }
            _ => {}
        }
    }
    let volume_rel_error = exact.map(|e| (volume - e.volume).abs() / e.volume);
    let area_rel_error = exact.map(|e| (area - e.area).abs() / e.area);
    Ok(GeometryReport {
        h_f: grid.level_size(grid.max_leaf_level()),
        h_q: grid.level_size(grid.max_leaf_level()) / (1u64 << cfg.r_q) as f64,
        h_g: cfg.effective_h_g(),
        volume,
        area,
        exact,
        volume_rel_error,
        area_rel_error,
        n_cut,
        n_active,
    })
}

/// One convergence level.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub h_f: f64,
    pub h_q: f64,
    pub p: usize,
    pub dofs: usize,
    pub l2_rel: f64,
    pub h1_rel: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub l2_slope: f64,
    pub h1_slope: f64,
}

/// Least-squares slope of log(err) against log(h).
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in points {
        let (x, y) = (h.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Runs the full pipeline over the configured `h_sequence` and fits
/// convergence slopes. The sequence entries must subdivide the domain edge
/// by powers of two.
pub fn convergence_study(cfg: &RunConfig) -> Result<ConvergenceStudy> {
    if cfg.h_sequence.len() < 2 {
        return Err(Error::Config("h_sequence needs at least two levels".into()));
    }
    let mut rows = Vec::new();
    for &h in &cfg.h_sequence {
        let ratio = cfg.domain_edge / h;
        let level = ratio.log2().round();
        if (2f64.powf(level) - ratio).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "h_f = {h} does not subdivide the domain edge {} by a power of two",
                cfg.domain_edge
            )));
        }
        let mut level_cfg = cfg.clone();
        level_cfg.base_refinements = level as u8;
        let solved = run_solve(level_cfg)?;
        if !solved.stats.converged {
            return Err(Error::Solver(format!(
                "solver did not converge at h_f = {h} ({} iterations)",
                solved.stats.iterations
            )));
        }
        let norms = solved.norms();
        rows.push(ConvergenceRow {
            h_f: h,
            h_q: h / (1u64 << cfg.r_q) as f64,
            p: cfg.p,
            dofs: solved.stats.n_free,
            l2_rel: norms.l2_rel,
            h1_rel: norms.h1_rel,
            iterations: solved.stats.iterations,
        });
    }
    let l2_slope = fit_slope(&rows.iter().map(|r| (r.h_f, r.l2_rel)).collect::<Vec<_>>());
    let h1_slope = fit_slope(&rows.iter().map(|r| (r.h_f, r.h1_rel)).collect::<Vec<_>>());
    Ok(ConvergenceStudy { rows, l2_slope, h1_slope })
}

/// One adaptive step: counts before refinement and errors of the solve on
/// the current grid.
#[derive(Clone, Debug)]
pub struct AdaptiveRow {
    pub step: u32,
    pub dofs: usize,
    pub l2_rel: f64,
    pub h1_rel: f64,
    pub refined: usize,
    /// Centers of the cells refined after this solve.
    pub refined_centers: Vec<Vec3>,
}

/// Error-driven refinement: solve, refine the top `adaptive_fraction` of
/// leaves by H1-seminorm error, rebalance, repeat.
pub fn adaptive_study(cfg: &RunConfig) -> Result<Vec<AdaptiveRow>> {
    let warnings = cfg.validate()?;
    let (field, _) = build_geometry(cfg)?;
    let field = Rc::new(field);
    let mut grid = build_grid(cfg, field.as_ref())?;
    let mut rows = Vec::new();
    for step in 0..=cfg.adaptive_steps {
        let solved =
            solve_on_grid(cfg.clone(), warnings.clone(), Rc::clone(&field), grid.clone())?;
        if !solved.stats.converged {
            return Err(Error::Solver(format!("solver did not converge at step {step}")));
        }
        let norms = solved.norms();
        let mut row = AdaptiveRow {
            step,
            dofs: solved.stats.n_free,
            l2_rel: norms.l2_rel,
            h1_rel: norms.h1_rel,
            refined: 0,
            refined_centers: Vec::new(),
        };
        if step == cfg.adaptive_steps {
            rows.push(row);
            break;
        }
        // Rank solid cells by the error indicator.
        let k = (cfg.adaptive_fraction * grid.leaf_count() as f64).round() as usize;
        let mut ranked: Vec<(usize, f64)> = norms
            .cell_h1_sq
            .iter()
            .enumerate()
            .filter(|&(_, &e)| e > 0.0)
            .map(|(s, &e)| (s, e))
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        let mut marks = vec![false; grid.leaf_count()];
        for &(s, _) in &ranked {
            let leaf = solved.dofs.solid_cells[s] as usize;
            marks[leaf] = true;
            row.refined_centers.push(grid.cell_center(leaf));
        }
        row.refined = ranked.len();
        rows.push(row);
        if ranked.is_empty() {
            continue;
        }
        grid.refine(&marks);
        grid.balance();
        grid.classify(field.as_ref(), &classify_params(cfg, &grid))?;
    }
    Ok(rows)
}

/// Full single solve with outputs written to the configured directory.
pub struct SolveArtifacts {
    pub solved: Solved,
    pub l2_rel: f64,
    pub h1_rel: f64,
    pub report: String,
}

pub fn solve_once(cfg: &RunConfig) -> Result<SolveArtifacts> {
    let solved = run_solve(cfg.clone())?;
    let norms = solved.norms();
    let report = run_report(&solved, norms.l2_rel, norms.h1_rel);
    Ok(SolveArtifacts { solved, l2_rel: norms.l2_rel, h1_rel: norms.h1_rel, report })
}

/// Self-describing run report: the full configuration, deterministic result
/// numbers, and an informational timing section.
pub fn run_report(solved: &Solved, l2_rel: f64, h1_rel: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# run report");
    let _ = writeln!(s, "\n## configuration\n");
    s.push_str(&solved.config.serialize());
    for w in &solved.warnings {
        let _ = writeln!(s, "# warning: {w}");
    }
    let _ = writeln!(s, "\n## results\n");
    let st = &solved.stats;
    let _ = writeln!(s, "leaves = {}", st.n_leaves);
    let _ = writeln!(s, "solid_cells = {}", st.n_solid);
    let _ = writeln!(s, "cut_cells = {}", st.n_cut);
    let _ = writeln!(s, "nodes = {}", st.n_nodes);
    let _ = writeln!(s, "free_dofs = {}", st.n_free);
    let _ = writeln!(s, "hanging = {}", st.n_hanging);
    let _ = writeln!(s, "critical = {}", st.n_critical);
    let _ = writeln!(s, "interface_dofs = {}", st.n_interface);
    let _ = writeln!(s, "coarse_dofs = {}", st.n_coarse);
    let _ = writeln!(s, "iterations = {}", st.iterations);
    let _ = writeln!(s, "converged = {}", st.converged);
    let _ = writeln!(s, "final_residual = {:.6e}", st.final_residual);
    let _ = writeln!(s, "l2_rel = {l2_rel:.12e}");
    let _ = writeln!(s, "h1_rel = {h1_rel:.12e}");
    let _ = writeln!(s, "\n## timings (informational, not reproducible)\n");
    let _ = writeln!(s, "assembly_seconds = {:.3}", st.assembly_seconds);
    let _ = writeln!(s, "setup_seconds = {:.3}", st.setup_seconds);
    let _ = writeln!(s, "solve_seconds = {:.3}", st.solve_seconds);
    s
}

/// The deterministic part of a report (everything above the timing section).
pub fn deterministic_report_part(report: &str) -> &str {
    match report.find("## timings") {
        Some(pos) => &report[..pos],
        None => report,
    }
}

pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut s = String::from("h_f,h_q,p,dofs,L2rel,H1rel\n");
    for r in &study.rows {
        let _ = writeln!(s, "{},{},{},{},{:.12e},{:.12e}", r.h_f, r.h_q, r.p, r.dofs, r.l2_rel, r.h1_rel);
    }
    s
}

pub fn adaptive_csv(rows: &[AdaptiveRow]) -> String {
    let mut s = String::from("step,dofs,L2rel,H1rel,refined\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:.12e},{:.12e},{}", r.step, r.dofs, r.l2_rel, r.h1_rel, r.refined);
    }
    s
}

pub fn residual_csv(residuals: &[f64]) -> String {
    let mut s = String::from("iteration,relative_residual\n");
    for (i, r) in residuals.iter().enumerate() {
        let _ = writeln!(s, "{},{:.12e}", i + 1, r);
    }
    s
}

/// Returns the fraction of points within `tol` of the sphere `|x| = radius`.
pub fn shell_concentration(centers: &[Vec3], radius: f64, tol: f64) -> f64 {
    if centers.is_empty() {
        return 0.0;
    }
    let hits = centers.iter().filter(|c| (c.norm() - radius).abs() < tol).count();
    hits as f64 / centers.len() as f64
}

/// FE grid dump selector used by the CLI.
pub fn classified_grid(cfg: &RunConfig) -> Result<(FeGrid, Option<crate::octree::Partition>)> {
    cfg.validate()?;
    let (field, _) = build_geometry(cfg)?;
    let grid = build_grid(cfg, &field)?;
    let partition = if cfg.n_subdomains > 1 {
        Some(crate::octree::partition_zcurve(
            &grid,
            cfg.n_subdomains,
            cfg.weight_solid,
            cfg.weight_inactive,
        )?)
    } else {
        None
    };
    Ok((grid, partition))
}

pub fn geometry_report_text(cfg: &RunConfig, r: &GeometryReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# geometry report");
    let _ = writeln!(s, "\n## configuration\n");
    s.push_str(&cfg.serialize());
    let _ = writeln!(s, "\n## results\n");
    let _ = writeln!(s, "h_f = {}", r.h_f);
    let _ = writeln!(s, "h_q = {}", r.h_q);
    let _ = writeln!(s, "h_g = {}", r.h_g);
    let _ = writeln!(s, "active_cells = {}", r.n_active);
    let _ = writeln!(s, "cut_cells = {}", r.n_cut);
    let _ = writeln!(s, "volume = {:.12e}", r.volume);
    let _ = writeln!(s, "surface_area = {:.12e}", r.area);
    if let Some(e) = r.exact {
        let _ = writeln!(s, "exact_volume = {:.12e}", e.volume);
        let _ = writeln!(s, "exact_surface_area = {:.12e}", e.area);
        let _ = writeln!(s, "volume_rel_error = {:.6e}", r.volume_rel_error.unwrap());
        let _ = writeln!(s, "surface_rel_error = {:.6e}", r.area_rel_error.unwrap());
    }
    s
}
