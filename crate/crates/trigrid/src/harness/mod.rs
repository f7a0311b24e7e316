//! Experiment harness: run configuration, manufactured problems, geometry
//! construction, the end-to-end pipeline, and the study drivers behind the
//! command-line interface.

mod config;
mod drivers;
mod geometry;
mod pipeline;
mod problems;

pub use config::RunConfig;
pub use drivers::{
    adaptive_csv, adaptive_study, classified_grid, convergence_csv, convergence_study,
    deterministic_report_part, fit_slope, geometry_report_text, integrate_geometry, residual_csv,
    run_report, shell_concentration, solve_once, AdaptiveRow, ConvergenceRow, ConvergenceStudy,
    GeometryReport, SolveArtifacts,
};
pub use geometry::{
    build_geometry, named_analytic, parse_csg, parse_neumann_tag, CachedField, GeometryField,
};
pub use pipeline::{
    build_grid, classify_params, domain_box, quad_params, run_solve, solve_on_grid, SolveStats,
    Solved,
};
pub use problems::{manufactured, Manufactured, LAYER_RADIUS, LAYER_SLOPE};
