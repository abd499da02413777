//! Wind speed sampled on a raster behind a binary layout.

use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::farm::{rotate_to_wind_frame, Point, TurbineSpec};
use crate::wake::{gaussian_deficit, WakeParams, DOWNSTREAM_EPS};

/// Rotor diameters per raster cell when no resolution is given.
pub const DEFAULT_CELLS_PER_DIAMETER: f64 = 4.0;

/// Raster of effective wind speeds. `speeds[iy * xs.len() + ix]` belongs to
/// `(xs[ix], ys[iy])`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub speeds: Vec<f64>,
    pub direction_deg: f64,
    pub free_stream: f64,
}

impl FlowField {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.speeds[iy * self.xs.len() + ix]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "x,y,speed").map_err(io)?;
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                writeln!(out, "{x},{y},{}", self.get(ix, iy)).map_err(io)?;
            }
        }
        out.flush().map_err(io)
    }
}

/// Effective speed at arbitrary points with the given turbines as wake
/// sources, combined by root-sum-square as in the objective.
pub fn sample_speeds(
    points: &[Point],
    turbines: &[Point],
    direction_deg: f64,
    free_stream: f64,
    turbine: &TurbineSpec,
    params: &WakeParams,
) -> Result<Vec<f64>> {
    let samples = rotate_to_wind_frame(points, direction_deg);
    let sources = rotate_to_wind_frame(turbines, direction_deg);
    samples
        .iter()
        .map(|p| {
            let mut sum = 0.0;
            for s in &sources {
                let dx = p.x - s.x;
                if dx > DOWNSTREAM_EPS {
                    let w = gaussian_deficit(dx, p.y - s.y, 0.0, turbine, params)?;
                    sum += w * w;
                }
            }
            Ok(free_stream * (1.0 - sum.sqrt().min(1.0)))
        })
        .collect()
}

/// Samples the field on a square raster with spacing `resolution` covering
/// `[-extent, extent]^2`.
pub fn evaluate_flow_field(
    turbines: &[Point],
    extent: f64,
    direction_deg: f64,
    free_stream: f64,
    resolution: f64,
    turbine: &TurbineSpec,
    params: &WakeParams,
) -> Result<FlowField> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid(format!("flow resolution must be positive, got {resolution}")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(invalid(format!("flow extent must be positive, got {extent}")));
    }
    if resolution > 2.0 * extent {
        return Err(invalid(format!(
            "flow resolution {resolution} m exceeds the farm extent {} m",
            2.0 * extent
        )));
    }
    let count = (2.0 * extent / resolution).floor() as usize + 1;
    let axis: Vec<f64> = (0..count).map(|i| -extent + resolution * i as f64).collect();
    let points: Vec<Point> = axis
        .iter()
        .flat_map(|&y| axis.iter().map(move |&x| Point::new(x, y)))
        .collect();
    let speeds = sample_speeds(&points, turbines, direction_deg, free_stream, turbine, params)?;
    Ok(FlowField {
        xs: axis.clone(),
        ys: axis,
        speeds,
        direction_deg,
        free_stream,
    })
}
