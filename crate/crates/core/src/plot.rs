//! SVG figures. Output depends only on the inputs (fixed number formatting,
//! no timestamps), so identical inputs give identical bytes.

use std::fmt::Write;

use crate::error::{invalid, Result};
use crate::farm::{CandidateGrid, TurbineSpec};
use crate::flow::FlowField;
use crate::solvers::IterationRecord;

pub const HISTOGRAM_BINS: usize = 20;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Maps a square world window `[-half, half]^2` to pixels, y up.
struct SquareMap {
    half: f64,
    size: f64,
}

impl SquareMap {
    fn scale(&self) -> f64 {
        (self.size - 2.0 * MARGIN) / (2.0 * self.half)
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let s = self.scale();
        (MARGIN + (x + self.half) * s, MARGIN + (self.half - y) * s)
    }
}

/// Farm boundary, candidate sites as dots, selected turbines as markers
/// with a circle of radius `spacing_factor * D` around each.
pub fn plot_layout(
    grid: &CandidateGrid,
    layout: &[bool],
    turbine: &TurbineSpec,
    spacing_factor: f64,
) -> Result<String> {
    if layout.len() != grid.len() {
        return Err(invalid(format!(
            "layout has {} entries for {} sites",
            layout.len(),
            grid.len()
        )));
    }
    let radius = grid.boundary_radius().max(turbine.rotor_diameter);
    let keep_out = spacing_factor * turbine.rotor_diameter;
    let map = SquareMap {
        half: radius + keep_out,
        size: WIDTH,
    };
    let s = map.scale();
    let mut out = String::new();
    header(&mut out, WIDTH, WIDTH);
    let (cx, cy) = map.px(0.0, 0.0);
    let _ = writeln!(
        out,
        r#"<circle class="boundary" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        grid.boundary_radius() * s
    );
    for (p, &on) in grid.points().iter().zip(layout) {
        let (x, y) = map.px(p.x, p.y);
        if !on {
            let _ = writeln!(out, r#"<circle class="site" cx="{x:.2}" cy="{y:.2}" r="1.5" fill="grey"/>"#);
        }
    }
    for (p, &on) in grid.points().iter().zip(layout) {
        if on {
            let (x, y) = map.px(p.x, p.y);
            let _ = writeln!(
                out,
                r#"<circle class="spacing" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="red" stroke-width="0.8"/>"#,
                keep_out * s
            );
            let _ = writeln!(
                out,
                r#"<circle class="turbine" cx="{x:.2}" cy="{y:.2}" r="4" fill="navy"/>"#
            );
        }
    }
    let count = layout.iter().filter(|&&b| b).count();
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{count} turbines</text>"#,
        WIDTH / 2.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Piecewise-linear colour map from dark blue (slow) to yellow (fast).
fn colour(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heatmap of a sampled flow field.
pub fn plot_flow(field: &FlowField) -> Result<String> {
    if field.xs.is_empty() || field.ys.is_empty() {
        return Err(invalid("flow field has no samples"));
    }
    let (lo, hi) = field
        .speeds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let nx = field.xs.len() as f64;
    let ny = field.ys.len() as f64;
    let cell = ((WIDTH - 2.0 * MARGIN) / nx).min((WIDTH - 2.0 * MARGIN) / ny);
    let mut out = String::new();
    header(&mut out, WIDTH, WIDTH);
    for iy in 0..field.ys.len() {
        for ix in 0..field.xs.len() {
            let x = MARGIN + ix as f64 * cell;
            // north up: last row at the top
            let y = MARGIN + (ny - 1.0 - iy as f64) * cell;
            let c = colour((field.get(ix, iy) - lo) / span);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                cell + 0.05,
                cell + 0.05
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">wind from {:.1} deg, {lo:.2} to {hi:.2} m/s</text>"#,
        WIDTH / 2.0,
        field.direction_deg
    );
    out.push_str("</svg>\n");
    Ok(out)
}

fn axes(out: &mut String, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) {
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<polyline points="{x0:.2},{y1:.2} {x0:.2},{y0:.2} {x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    let text = |out: &mut String, x: f64, y: f64, anchor: &str, s: String| {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{s}</text>"#
        );
    };
    text(out, x0, y0 + 18.0, "middle", format!("{:.3}", x_range.0));
    text(out, x1, y0 + 18.0, "middle", format!("{:.3}", x_range.1));
    text(out, x0 - 6.0, y0, "end", format!("{:.3}", y_range.0));
    text(out, x0 - 6.0, y1 + 4.0, "end", format!("{:.3}", y_range.1));
    text(out, (x0 + x1) / 2.0, HEIGHT - 15.0, "middle", x_label.to_string());
    text(out, 15.0, (y0 + y1) / 2.0, "middle", y_label.to_string());
}

/// AEP against iteration. NaN entries (no feasible point yet) are skipped.
pub fn plot_history(history: &[IterationRecord]) -> Result<String> {
    if history.is_empty() {
        return Err(invalid("history is empty"));
    }
    let pts: Vec<(f64, f64)> = history
        .iter()
        .filter(|h| h.aep_gwh.is_finite())
        .map(|h| (h.iteration as f64, h.aep_gwh))
        .collect();
    let x_range = (
        history.first().map_or(0.0, |h| h.iteration as f64),
        history.last().map_or(1.0, |h| h.iteration as f64),
    );
    let (mut lo, mut hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if pts.is_empty() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 * hi.abs().max(1.0) {
        // a constant history is drawn as a flat line through the middle
        let pad = 0.5 * hi.abs().max(1.0) * 1e-3;
        lo -= pad;
        hi += pad;
    }
    let xspan = (x_range.1 - x_range.0).max(1.0);
    let px = |x: f64| MARGIN + (x - x_range.0) / xspan * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    axes(&mut out, "iteration", "AEP [GWh]", x_range, (lo, hi));
    let mut line = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        let _ = write!(line, "{:.2},{:.2}", px(x), py(y));
    }
    let _ = writeln!(
        out,
        r#"<polyline class="history" points="{line}" fill="none" stroke="navy" stroke-width="1.5"/>"#
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Counts of `rho` in equal-width bins over `[0, 1]`; 1.0 lands in the last
/// bin.
pub fn histogram_counts(rho: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &r in rho {
        let i = ((r.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
}

/// Histogram of final densities over [`HISTOGRAM_BINS`] bins.
pub fn plot_density_histogram(rho: &[f64]) -> Result<String> {
    if rho.is_empty() {
        return Err(invalid("no densities to plot"));
    }
    let counts = histogram_counts(rho, HISTOGRAM_BINS);
    let top = *counts.iter().max().unwrap_or(&1) as f64;
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    axes(&mut out, "density", "sites", (0.0, 1.0), (0.0, top));
    let bar = (WIDTH - 2.0 * MARGIN) / HISTOGRAM_BINS as f64;
    for (i, &c) in counts.iter().enumerate() {
        let h = c as f64 / top * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="steelblue" stroke="white"/>"#,
            MARGIN + i as f64 * bar,
            HEIGHT - MARGIN - h,
            bar
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farm::Point;

    fn grid() -> CandidateGrid {
        CandidateGrid::from_points(vec![Point::new(0.0, 0.0), Point::new(400.0, 0.0), Point::new(0.0, 400.0)])
            .unwrap()
    }

    #[test]
    fn empty_layout_draws_only_sites() {
        let svg = plot_layout(&grid(), &[false; 3], &TurbineSpec::iea37_3_4mw(), 2.0).unwrap();
        assert_eq!(svg.matches(r#"class="site""#).count(), 3);
        assert_eq!(svg.matches(r#"class="boundary""#).count(), 1);
        assert!(!svg.contains(r#"class="turbine""#));
    }

    #[test]
    fn spacing_circle_is_drawn_to_scale() {
        let t = TurbineSpec::iea37_3_4mw();
        let svg = plot_layout(&grid(), &[true, false, false], &t, 2.0).unwrap();
        assert_eq!(svg.matches(r#"class="turbine""#).count(), 1);
        let map = SquareMap { half: 400.0 + 260.0, size: WIDTH };
        let r = format!(r#"r="{:.2}""#, 260.0 * map.scale());
        let line = svg.lines().find(|l| l.contains(r#"class="spacing""#)).unwrap();
        assert!(line.contains(&r), "{line}");
    }

    #[test]
    fn output_is_deterministic() {
        let t = TurbineSpec::iea37_3_4mw();
        let a = plot_layout(&grid(), &[true, false, true], &t, 2.0).unwrap();
        let b = plot_layout(&grid(), &[true, false, true], &t, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binary_histogram_uses_end_bins() {
        let counts = histogram_counts(&[0.0, 1.0, 1.0, 0.0, 0.0], HISTOGRAM_BINS);
        assert_eq!(counts[0], 3);
        assert_eq!(counts[HISTOGRAM_BINS - 1], 2);
        assert_eq!(counts.iter().sum::<usize>(), 5);
        assert!(plot_density_histogram(&[]).is_err());
    }

    #[test]
    fn constant_history_is_flat() {
        let h: Vec<IterationRecord> = (1..=5)
            .map(|i| IterationRecord {
                iteration: i,
                penalty: 0.0,
                aep_gwh: 100.0,
                max_violation: 0.0,
                step_norm: 0.0,
            })
            .collect();
        let svg = plot_history(&h).unwrap();
        let line = svg.lines().find(|l| l.contains(r#"class="history""#)).unwrap();
        let ys: Vec<&str> = line
            .split('"')
            .nth(3)
            .unwrap()
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
        assert!(plot_history(&[]).is_err());
    }
}
