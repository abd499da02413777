//! End-to-end run: config, precomputation, solve, artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{load_config, LoadedConfig, SolverConfig};
use crate::error::{Error, Result};
use crate::flow::{evaluate_flow_field, DEFAULT_CELLS_PER_DIAMETER};
use crate::plot::{plot_density_histogram, plot_flow, plot_history, plot_layout};
use crate::problem::LayoutProblem;
use crate::solvers::{brute_force_solve, ga_solve, mma_solve, SolveResult, SolverKind, Termination};

pub const DEFAULT_FLOW_DIRECTION: f64 = 270.0;

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Also write the per-direction deficit matrices and neighbour pairs.
    pub dump_tensor: bool,
    pub flow_direction: Option<f64>,
    /// Flow raster spacing [m]; a quarter rotor diameter when absent.
    pub flow_resolution: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[source] Error),
    #[error("solver error: {0}")]
    Solver(#[source] Error),
    #[error("failed to write results: {0}")]
    Output(#[source] Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) | Self::Output(_) => 3,
        }
    }
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub aep_gwh: f64,
    pub turbine_count: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub wall_seconds: f64,
    pub solver: SolverKind,
    pub config_hash: String,
    pub sites: usize,
    pub final_penalty: f64,
    pub repaired: bool,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub result: SolveResult,
    pub record: ResultRecord,
}

/// One row of `layout.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRow {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    pub selected: u8,
}

pub fn run(config_path: &Path, options: &RunOptions) -> std::result::Result<RunOutput, RunError> {
    let loaded = load_config(config_path).map_err(RunError::Config)?;
    run_loaded(&loaded, options)
}

pub fn run_loaded(loaded: &LoadedConfig, options: &RunOptions) -> std::result::Result<RunOutput, RunError> {
    let config = &loaded.config;
    let out_dir = match &options.out_dir {
        Some(dir) => dir.clone(),
        None => loaded.base_dir.join(&config.output_dir),
    };
    let problem = config.build_problem(&loaded.base_dir).map_err(RunError::Config)?;
    info!(
        "{} candidate sites, {} wind directions, {} constraint rows",
        problem.sites(),
        problem.rose.len(),
        problem.constraints.len()
    );
    let result = match &config.solver {
        SolverConfig::Mma { settings } => mma_solve(&problem, &config.interpolation, settings),
        SolverConfig::Ga { settings } => {
            let mut settings = settings.clone();
            if let Some(seed) = options.seed.or(config.seed) {
                settings.seed = seed;
            }
            ga_solve(&problem, &settings)
        }
        SolverConfig::Brute => brute_force_solve(&problem),
    }
    .map_err(RunError::Solver)?;
    if !result.feasible {
        return Err(RunError::Solver(Error::Solver(format!(
            "{:?} produced no feasible layout ({:?})",
            result.solver, result.termination
        ))));
    }
    info!(
        "{:?}: {} turbines, AEP {:.3} GWh, {} iterations, {:.2} s",
        result.solver, result.turbine_count, result.aep_gwh, result.iterations, result.wall_seconds
    );
    let record = ResultRecord {
        aep_gwh: result.aep_gwh,
        turbine_count: result.turbine_count,
        iterations: result.iterations,
        evaluations: result.evaluations,
        termination: result.termination,
        wall_seconds: result.wall_seconds,
        solver: result.solver,
        config_hash: loaded.hash.clone(),
        sites: problem.sites(),
        final_penalty: result.final_penalty,
        repaired: result.repaired,
        feasible: result.feasible,
    };
    write_artifacts(&out_dir, &problem, &result, &record, config.spacing_factor, options)
        .map_err(RunError::Output)?;
    Ok(RunOutput {
        out_dir,
        result,
        record,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Everything is written into a scratch directory next to `out_dir` and
/// only moved into place once all files exist.
fn write_artifacts(
    out_dir: &Path,
    problem: &LayoutProblem,
    result: &SolveResult,
    record: &ResultRecord,
    spacing_factor: f64,
    options: &RunOptions,
) -> Result<()> {
    let parent = match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let scratch = tempfile::Builder::new()
        .prefix(".windtopo-")
        .tempdir_in(&parent)
        .map_err(io_err(&parent))?;
    let tmp = scratch.path();

    write_layout_csv(&tmp.join("layout.csv"), problem, result)?;
    let json = serde_json::to_string_pretty(record).map_err(|e| Error::Solver(e.to_string()))?;
    write_text(&tmp.join("result.json"), &(json + "\n"))?;
    write_history_csv(&tmp.join("history.csv"), result)?;

    let turbine = &problem.turbine;
    write_text(
        &tmp.join("layout.svg"),
        &plot_layout(&problem.grid, &result.layout, turbine, spacing_factor)?,
    )?;
    write_text(&tmp.join("density_histogram.svg"), &plot_density_histogram(&result.densities)?)?;
    if !result.history.is_empty() {
        write_text(&tmp.join("history.svg"), &plot_history(&result.history)?)?;
    }

    let direction = options.flow_direction.unwrap_or(DEFAULT_FLOW_DIRECTION);
    let free_stream = nearest_bin_speed(problem, direction);
    let turbines: Vec<_> = result.selected_sites().iter().map(|&i| problem.grid.points()[i]).collect();
    let resolution = options
        .flow_resolution
        .unwrap_or(turbine.rotor_diameter / DEFAULT_CELLS_PER_DIAMETER);
    let extent = problem.grid.boundary_radius() + 2.0 * turbine.rotor_diameter;
    let field = evaluate_flow_field(&turbines, extent, direction, free_stream, resolution, turbine, &problem.wake)?;
    field.write_csv(&tmp.join("flow.csv"))?;
    write_text(&tmp.join("flow.svg"), &plot_flow(&field)?)?;

    if options.dump_tensor {
        let dir = tmp.join("tensor");
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        problem.tensor.write_csv(&dir)?;
        problem
            .constraints
            .write_pairs_csv(&problem.grid, &tmp.join("neighbor_pairs.csv"))?;
    }

    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(tmp)
        .map_err(io_err(tmp))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(io_err(tmp))?;
    entries.sort();
    for src in entries {
        let dst = out_dir.join(src.file_name().expect("directory entry has a name"));
        if dst.is_dir() {
            std::fs::remove_dir_all(&dst).map_err(io_err(&dst))?;
        }
        std::fs::rename(&src, &dst).map_err(io_err(&dst))?;
    }
    Ok(())
}

fn nearest_bin_speed(problem: &LayoutProblem, direction: f64) -> f64 {
    let gap = |d: f64| {
        let g = (d - direction).rem_euclid(360.0);
        g.min(360.0 - g)
    };
    problem
        .rose
        .bins()
        .iter()
        .min_by(|a, b| gap(a.direction_deg).total_cmp(&gap(b.direction_deg)))
        .map_or(0.0, |b| b.speed)
}

fn write_layout_csv(path: &Path, problem: &LayoutProblem, result: &SolveResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for (i, p) in problem.grid.points().iter().enumerate() {
        w.serialize(LayoutRow {
            index: i,
            x: p.x,
            y: p.y,
            rho: result.densities[i],
            selected: u8::from(result.layout[i]),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_history_csv(path: &Path, result: &SolveResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["iteration", "penalty", "aep_gwh", "max_violation", "step_norm"])
        .map_err(|e| csv_err(path, e))?;
    for h in &result.history {
        w.write_record([
            h.iteration.to_string(),
            h.penalty.to_string(),
            h.aep_gwh.to_string(),
            h.max_violation.to_string(),
            h.step_norm.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn read_layout_csv(path: &Path) -> Result<Vec<LayoutRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub fn read_result_json(path: &Path) -> Result<ResultRecord> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Prints a one-line summary to `out`.
pub fn print_summary(out: &mut impl Write, run: &RunOutput) -> std::io::Result<()> {
    writeln!(
        out,
        "{:?}: {} turbines, AEP {:.3} GWh, {} iterations ({:?}); results in {}",
        run.record.solver,
        run.record.turbine_count,
        run.record.aep_gwh,
        run.record.iterations,
        run.record.termination,
        run.out_dir.display()
    )
}
