//! Command-line interface: immersed Poisson runs driven by a plain-text
//! configuration with key = value overrides.
//!
//! ```text
//! trigrid <voxelize|classify|integrate|convergence|adaptive|solve> \
//!         [config-file] [key=value ...]
//! ```
//!
//! Exit codes: 0 success, 2 configuration/validation error, 3 solver failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use trigrid::error::Error;
use trigrid::harness::{
    adaptive_csv, adaptive_study, build_geometry, classified_grid, convergence_csv,
    convergence_study, geometry_report_text, integrate_geometry, residual_csv, solve_once,
    RunConfig,
};
use trigrid::vtk;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    let cfg = match load_config(&args[1..]) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(command, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io(_) | Error::InvalidSurface(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

const USAGE: &str = "usage: trigrid <voxelize|classify|integrate|convergence|adaptive|solve> [config-file] [key=value ...]";

fn load_config(rest: &[String]) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    let mut overrides = rest;
    if let Some(first) = rest.first() {
        if !first.contains('=') {
            let text = std::fs::read_to_string(first)?;
            cfg = RunConfig::parse(&text)?;
            overrides = &rest[1..];
        }
    }
    for pair in overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{pair}'")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Error> {
    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dispatch(command: &str, cfg: RunConfig) -> Result<(), Error> {
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    match command {
        "voxelize" => {
            let dir = out_dir(&cfg)?;
            let (field, _) = build_geometry(&cfg)?;
            let grid = field.sampled_grid().ok_or_else(|| {
                Error::Config("voxelize requires sample_geometry = true".into())
            })?;
            let blocks = vtk::write_band_blocks(dir.join("band"), grid)?;
            println!(
                "narrow band: {} nodes ({:?} per axis), {} stored blocks, h_g = {}, delta = {}",
                grid.node_dims().iter().product::<usize>(),
                grid.node_dims(),
                blocks,
                grid.spacing(),
                grid.band_half_width(),
            );
        }
        "classify" => {
            let dir = out_dir(&cfg)?;
            let (grid, partition) = classified_grid(&cfg)?;
            let counts = grid.leaves().iter().fold([0usize; 4], |mut acc, leaf| {
                use trigrid::octree::CellClass::*;
                match leaf.class {
                    Active => acc[0] += 1,
                    Inactive => acc[1] += 1,
                    CutOrdinary => acc[2] += 1,
                    CutExtraordinary => acc[3] += 1,
                    Unclassified => {}
                }
                acc
            });
            println!(
                "leaves: {} (active {}, inactive {}, cut ordinary {}, cut extraordinary {})",
                grid.leaf_count(),
                counts[0],
                counts[1],
                counts[2],
                counts[3]
            );
            vtk::write_grid_vtk(dir.join("grid.vtk"), &grid, partition.as_ref())?;
            println!("wrote {}", dir.join("grid.vtk").display());
        }
        "integrate" => {
            let dir = out_dir(&cfg)?;
            let report = integrate_geometry(&cfg)?;
            let text = geometry_report_text(&cfg, &report);
            print!("{text}");
            write(&dir.join("integrate.txt"), &text)?;
        }
        "convergence" => {
            let dir = out_dir(&cfg)?;
            let study = convergence_study(&cfg)?;
            let csv = convergence_csv(&study);
            print!("{csv}");
            println!("fitted slopes: L2 {:.3}, H1 {:.3}", study.l2_slope, study.h1_slope);
            write(&dir.join("convergence.csv"), &csv)?;
        }
        "adaptive" => {
            let dir = out_dir(&cfg)?;
            let rows = adaptive_study(&cfg)?;
            let csv = adaptive_csv(&rows);
            print!("{csv}");
            write(&dir.join("adaptive.csv"), &csv)?;
        }
        "solve" => {
            let dir = out_dir(&cfg)?;
            let artifacts = solve_once(&cfg)?;
            print!("{}", artifacts.report);
            write(&dir.join("report.txt"), &artifacts.report)?;
            write(
                &dir.join("residuals.csv"),
                &residual_csv(&artifacts.solved.stats.residuals),
            )?;
            let solution = artifacts.solved.solution();
            vtk::write_solution_vtk(dir.join("solution.vtk"), &artifacts.solved.grid, &solution, &|s| {
                artifacts.solved.decomposition(s)
            })?;
            println!("wrote {}", dir.join("solution.vtk").display());
            if !artifacts.solved.stats.converged {
                return Err(Error::Solver(format!(
                    "PCG did not reach tol {} within {} iterations",
                    artifacts.solved.config.tol, artifacts.solved.config.max_iter
                )));
            }
        }
        other => {
            eprintln!("unknown command '{other}'\n{USAGE}");
            return Err(Error::Config(format!("unknown command '{other}'")));
        }
    }
    Ok(())
}
