//! Turbines, candidate grids and wind roses.
//!
//! Coordinates are metres in a fixed map frame: +x points east, +y points
//! north. Wind directions follow the meteorological convention (the
//! direction the wind comes *from*, clockwise from north).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Rotor and power-curve description of a single turbine type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbineSpec {
    /// Rotor diameter D [m].
    pub rotor_diameter: f64,
    /// Hub height [m]. All turbines share it, so it never enters the
    /// vertical wake offset; kept for completeness.
    pub hub_height: f64,
    /// Rated power [MW].
    pub rated_power: f64,
    /// Cut-in speed [m/s].
    pub cut_in: f64,
    /// Rated speed [m/s].
    pub rated_speed: f64,
    /// Cut-out speed [m/s].
    pub cut_out: f64,
    /// Thrust coefficient C_T.
    pub thrust_coefficient: f64,
}

impl TurbineSpec {
    /// IEA37 3.4 MW reference turbine.
    pub fn iea37_3_4mw() -> Self {
        Self {
            rotor_diameter: 130.0,
            hub_height: 110.0,
            rated_power: 3.37,
            cut_in: 4.0,
            rated_speed: 9.8,
            cut_out: 25.0,
            thrust_coefficient: 8.0 / 9.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.rotor_diameter,
            self.hub_height,
            self.rated_power,
            self.cut_in,
            self.rated_speed,
            self.cut_out,
            self.thrust_coefficient,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("turbine parameters must be finite"));
        }
        if self.rotor_diameter <= 0.0 {
            return Err(invalid("rotor diameter must be positive"));
        }
        if !(0.0 < self.cut_in && self.cut_in < self.rated_speed && self.rated_speed < self.cut_out)
        {
            return Err(invalid(
                "power curve speeds must satisfy 0 < cut-in < rated < cut-out",
            ));
        }
        if !(0.0 < self.thrust_coefficient && self.thrust_coefficient < 1.0) {
            return Err(invalid("thrust coefficient must lie in (0, 1)"));
        }
        if self.rated_power <= 0.0 {
            return Err(invalid("rated power must be positive"));
        }
        Ok(())
    }
}

impl Default for TurbineSpec {
    fn default() -> Self {
        Self::iea37_3_4mw()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Lattice convention used when generating a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// Lattice points `(i s, j s)`, origin included.
    Centered,
    /// Lattice points `((i + 1/2) s, (j + 1/2) s)`.
    Offset,
    /// Points loaded from a file.
    External,
}

/// Candidate turbine sites inside a circular farm boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    points: Vec<Point>,
    boundary_radius: f64,
    spacing: Option<f64>,
    mode: GridMode,
}

impl CandidateGrid {
    /// Builds a grid from explicit points. The boundary radius is the largest
    /// point norm.
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
        for (idx, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(invalid(format!("grid point {idx} is not finite")));
            }
            // +0.0 so that -0.0 and 0.0 collide
            let key = ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
            if let Some(&first) = seen.get(&key) {
                return Err(Error::DuplicatePoint {
                    x: p.x,
                    y: p.y,
                    first,
                    second: idx,
                });
            }
            seen.insert(key, idx);
        }
        let boundary_radius = points.iter().map(Point::norm).fold(0.0, f64::max);
        Ok(Self {
            points,
            boundary_radius,
            spacing: None,
            mode: GridMode::External,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn boundary_radius(&self) -> f64 {
        self.boundary_radius
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    /// Returns a grid with the same (validated) points in a new order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        crate::error::check_len("permutation", self.len(), order.len())?;
        let mut used = vec![false; self.len()];
        let mut points = Vec::with_capacity(self.len());
        for &i in order {
            if i >= self.len() || used[i] {
                return Err(invalid("order is not a permutation"));
            }
            used[i] = true;
            points.push(self.points[i]);
        }
        Ok(Self {
            points,
            ..self.clone()
        })
    }
}

/// All square-lattice points inside a circle of the given radius, row-major
/// (ascending y, then ascending x).
pub fn generate_circular_grid(radius: f64, spacing: f64, mode: GridMode) -> Result<CandidateGrid> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("grid radius must be positive"));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(invalid("grid spacing must be positive"));
    }
    let offset = match mode {
        GridMode::Centered => 0.0,
        GridMode::Offset => 0.5,
        GridMode::External => return Err(invalid("external grids must be loaded from a file")),
    };
    let reach = (radius / spacing).ceil() as i64 + 1;
    let r2 = radius * radius;
    let mut points = Vec::new();
    for j in -reach..=reach {
        let y = (j as f64 + offset) * spacing;
        for i in -reach..=reach {
            let x = (i as f64 + offset) * spacing;
            if x * x + y * y <= r2 {
                points.push(Point::new(x, y));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(CandidateGrid {
        points,
        boundary_radius: radius,
        spacing: Some(spacing),
        mode,
    })
}

#[derive(Debug, Deserialize)]
struct GridRow {
    x: f64,
    y: f64,
}

/// Loads a grid CSV with header `x,y` (metres).
pub fn load_grid(path: impl AsRef<Path>) -> Result<CandidateGrid> {
    let path = path.as_ref();
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(parse_err(format!(
            "expected header `x,y`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, row) in reader.deserialize::<GridRow>().enumerate() {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", line + 1)))?;
        points.push(Point::new(row.x, row.y));
    }
    CandidateGrid::from_points(points)
}

/// Wind-frame coordinates of each site: `x` is the downwind coordinate
/// (positive along the direction of propagation) and `y` the crosswind one.
pub fn rotate_to_wind_frame(points: &[Point], direction_deg: f64) -> Vec<Point> {
    // Meteorological FROM-direction to the math angle of the propagation
    // vector; 270 deg (westerly) maps to angle 0, i.e. +x.
    let angle = (270.0 - direction_deg).to_radians();
    let (sin, cos) = angle.sin_cos();
    points
        .iter()
        .map(|p| Point::new(p.x * cos + p.y * sin, -p.x * sin + p.y * cos))
        .collect()
}

/// Rotates points counter-clockwise by `angle_deg` about the origin.
pub fn rotate_points(points: &[Point], angle_deg: f64) -> Vec<Point> {
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    points
        .iter()
        .map(|p| Point::new(p.x * cos - p.y * sin, p.x * sin + p.y * cos))
        .collect()
}

/// One direction bin of a wind rose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindBin {
    pub direction_deg: f64,
    pub frequency: f64,
    pub speed: f64,
}

/// Discrete directional distribution of the free-stream wind.
#[derive(Debug, Clone, PartialEq)]
pub struct WindRose {
    bins: Vec<WindBin>,
}

/// Tolerance on the raw frequency sum before renormalization.
pub const FREQUENCY_SUM_TOLERANCE: f64 = 1e-6;

impl WindRose {
    /// Validates the bins and renormalizes the frequencies to sum to one.
    pub fn new(mut bins: Vec<WindBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(invalid("wind rose needs at least one bin"));
        }
        for (i, b) in bins.iter().enumerate() {
            if !(b.direction_deg.is_finite() && (0.0..360.0).contains(&b.direction_deg)) {
                return Err(invalid(format!(
                    "bin {i}: direction {} outside [0, 360)",
                    b.direction_deg
                )));
            }
            if !(b.frequency.is_finite() && b.frequency >= 0.0) {
                return Err(invalid(format!("bin {i}: negative frequency {}", b.frequency)));
            }
            if !(b.speed.is_finite() && b.speed > 0.0) {
                return Err(invalid(format!("bin {i}: speed must be positive")));
            }
        }
        if let Some(i) = bins
            .windows(2)
            .position(|w| w[1].direction_deg <= w[0].direction_deg)
        {
            return Err(invalid(format!(
                "directions must be strictly increasing (bin {})",
                i + 1
            )));
        }
        let sum: f64 = bins.iter().map(|b| b.frequency).sum();
        if (sum - 1.0).abs() > FREQUENCY_SUM_TOLERANCE {
            return Err(Error::FrequencySum { sum });
        }
        for b in &mut bins {
            b.frequency /= sum;
        }
        Ok(Self { bins })
    }

    /// `n` equally likely directions starting at north.
    pub fn uniform(n: usize, speed: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("wind rose needs at least one bin"));
        }
        let bins = (0..n)
            .map(|i| WindBin {
                direction_deg: 360.0 * i as f64 / n as f64,
                frequency: 1.0 / n as f64,
                speed,
            })
            .collect();
        Self::new(bins)
    }

    pub fn bins(&self) -> &[WindBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

#[derive(Debug, Deserialize)]
struct RoseRow {
    direction_deg: f64,
    frequency: f64,
    speed_ms: f64,
}

/// Loads a wind-rose CSV with header `direction_deg,frequency,speed_ms`.
pub fn load_wind_rose(path: impl AsRef<Path>) -> Result<WindRose> {
    let path = path.as_ref();
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["direction_deg", "frequency", "speed_ms"] {
        return Err(parse_err(
            "expected header `direction_deg,frequency,speed_ms`".into(),
        ));
    }
    let mut bins = Vec::new();
    for (line, row) in reader.deserialize::<RoseRow>().enumerate() {
        let row = row.map_err(|e| parse_err(format!("row {}: {e}", line + 1)))?;
        bins.push(WindBin {
            direction_deg: row.direction_deg,
            frequency: row.frequency,
            speed: row.speed_ms,
        });
    }
    WindRose::new(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn brute_lattice_count(radius: f64, spacing: f64, offset: f64) -> usize {
        // independent integer enumeration over a generous square
        let reach = 100i64;
        let mut n = 0;
        for a in -reach..=reach {
            for b in -reach..=reach {
                let x = (a as f64 + offset) * spacing;
                let y = (b as f64 + offset) * spacing;
                if x.hypot(y) <= radius + 1e-9 {
                    n += 1;
                }
            }
        }
        n
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn grid_counts_match_enumeration() {
        let g1 = generate_circular_grid(1300.0, 200.0, GridMode::Offset).unwrap();
        assert_eq!(g1.len(), 124);
        assert_eq!(brute_lattice_count(1300.0, 200.0, 0.5), 124);
        let g2 = generate_circular_grid(3000.0, 200.0, GridMode::Centered).unwrap();
        assert_eq!(g2.len(), 709);
        assert_eq!(brute_lattice_count(3000.0, 200.0, 0.0), 709);
        let g3 = generate_circular_grid(100.0, 200.0, GridMode::Centered).unwrap();
        assert_eq!(g3.points(), &[Point::new(0.0, 0.0)]);
    }

    #[test]
    fn grid_is_row_major_and_inside() {
        let g = generate_circular_grid(1300.0, 200.0, GridMode::Offset).unwrap();
        for w in g.points().windows(2) {
            assert!(w[0].y < w[1].y || (w[0].y == w[1].y && w[0].x < w[1].x));
        }
        assert!(g.points().iter().all(|p| p.x * p.x + p.y * p.y <= 1300.0 * 1300.0));
        assert_eq!(g.spacing(), Some(200.0));
        assert_eq!(g.mode(), GridMode::Offset);
    }

    #[test]
    fn grid_rejects_bad_arguments() {
        assert!(generate_circular_grid(0.0, 200.0, GridMode::Centered).is_err());
        assert!(generate_circular_grid(100.0, -1.0, GridMode::Centered).is_err());
        assert!(generate_circular_grid(100.0, 10.0, GridMode::External).is_err());
        // offset lattice has no point within 141 m of the origin at s = 200
        assert!(matches!(
            generate_circular_grid(100.0, 200.0, GridMode::Offset),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn load_grid_cases() {
        let f = write_tmp("x,y\n0,0\n200,0\n");
        let g = load_grid(f.path()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.mode(), GridMode::External);
        assert_eq!(g.boundary_radius(), 200.0);

        let f = write_tmp("x,y\n0,0\n0,0\n");
        assert!(matches!(
            load_grid(f.path()),
            Err(Error::DuplicatePoint { first: 0, second: 1, .. })
        ));

        let f = write_tmp("x,y\n");
        assert!(matches!(load_grid(f.path()), Err(Error::EmptyGrid)));

        let f = write_tmp("x,y\n1,abc\n");
        assert!(matches!(load_grid(f.path()), Err(Error::Parse { .. })));

        let f = write_tmp("a,b\n1,2\n");
        assert!(matches!(load_grid(f.path()), Err(Error::Parse { .. })));
    }

    #[test]
    fn load_wind_rose_cases() {
        let mut s = String::from("direction_deg,frequency,speed_ms\n");
        for i in 0..16 {
            s.push_str(&format!("{},{},9.8\n", 22.5 * i as f64, 1.0 / 16.0));
        }
        let rose = load_wind_rose(write_tmp(&s).path()).unwrap();
        assert_eq!(rose.len(), 16);
        let sum: f64 = rose.bins().iter().map(|b| b.frequency).sum();
        assert!((sum - 1.0).abs() < 1e-12);

        let bad = "direction_deg,frequency,speed_ms\n0,0.5,9.8\n90,0.4,9.8\n";
        assert!(matches!(
            load_wind_rose(write_tmp(bad).path()),
            Err(Error::FrequencySum { .. })
        ));

        let single = "direction_deg,frequency,speed_ms\n270,1.0,9.8\n";
        let rose = load_wind_rose(write_tmp(single).path()).unwrap();
        assert_eq!(rose.bins()[0].direction_deg, 270.0);

        let neg = "direction_deg,frequency,speed_ms\n0,1.5,9.8\n90,-0.5,9.8\n";
        assert!(load_wind_rose(write_tmp(neg).path()).is_err());

        let unordered = "direction_deg,frequency,speed_ms\n90,0.5,9.8\n0,0.5,9.8\n";
        assert!(load_wind_rose(write_tmp(unordered).path()).is_err());
    }

    #[test]
    fn rose_renormalizes_small_drift() {
        let rose = WindRose::new(vec![
            WindBin { direction_deg: 0.0, frequency: 0.5 + 4e-7, speed: 9.8 },
            WindBin { direction_deg: 180.0, frequency: 0.5, speed: 9.8 },
        ])
        .unwrap();
        let sum: f64 = rose.bins().iter().map(|b| b.frequency).sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shipped_iea37_rose_is_valid() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/iea37_windrose.csv");
        let rose = load_wind_rose(path).unwrap();
        assert_eq!(rose.len(), 16);
        assert!(rose.bins().iter().all(|b| b.speed == 9.8));
    }

    #[test]
    fn wind_frame_orientation() {
        let pts = [Point::new(0.0, 0.0), Point::new(500.0, 0.0)];
        let west = rotate_to_wind_frame(&pts, 270.0);
        assert!((west[1].x - 500.0).abs() < 1e-9 && west[1].y.abs() < 1e-9);
        let east = rotate_to_wind_frame(&pts, 90.0);
        assert!((east[1].x + 500.0).abs() < 1e-9 && east[1].y.abs() < 1e-9);
        // northerly wind propagates south
        let north = rotate_to_wind_frame(&[Point::new(0.0, -500.0)], 0.0);
        assert!((north[0].x - 500.0).abs() < 1e-9);
    }

    #[test]
    fn turbine_validation() {
        assert!(TurbineSpec::iea37_3_4mw().validate().is_ok());
        let mut t = TurbineSpec::iea37_3_4mw();
        t.thrust_coefficient = 1.0;
        assert!(t.validate().is_err());
        let mut t = TurbineSpec::iea37_3_4mw();
        t.rated_speed = 30.0;
        assert!(t.validate().is_err());
    }
}
