//! Static SVG line plots rendered from table columns. Output depends only
//! on the inputs, so identical data gives byte-identical files.

use std::fmt::Write;

use crate::error::{LabError, Result};
use crate::table::Table;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub column: String,
    pub label: String,
    /// Column holding a standard deviation drawn as a ±1 band.
    pub band: Option<String>,
}

impl Series {
    pub fn new(column: impl Into<String>, label: impl Into<String>) -> Self {
        Series { column: column.into(), label: label.into(), band: None }
    }

    pub fn with_band(mut self, column: impl Into<String>) -> Self {
        self.band = Some(column.into());
        self
    }
}

/// Horizontal dashed guide line.
#[derive(Debug, Clone, PartialEq)]
pub struct RefLine {
    pub value: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_column: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub ref_lines: Vec<RefLine>,
    pub log_y: bool,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>, x_column: impl Into<String>) -> Self {
        let x_column = x_column.into();
        PlotSpec {
            title: title.into(),
            x_label: x_column.clone(),
            x_column,
            y_label: String::new(),
            series: Vec::new(),
            ref_lines: Vec::new(),
            log_y: false,
        }
    }

    pub fn labels(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    pub fn series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn ref_line(mut self, value: f64, label: impl Into<String>) -> Self {
        self.ref_lines.push(RefLine { value, label: label.into() });
        self
    }

    pub fn log_y(mut self, on: bool) -> Self {
        self.log_y = on;
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick positions at 1, 2 or 5 times a power of ten.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= target as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn ty(&self, y: f64) -> f64 {
        if self.log_y {
            y.log10()
        } else {
            y
        }
    }

    fn py(&self, y: f64) -> f64 {
        let (a, b) = (self.ty(self.y0), self.ty(self.y1));
        HEIGHT - BOTTOM - (self.ty(y) - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }

    fn usable(&self, y: f64) -> bool {
        y.is_finite() && (!self.log_y || y > 0.0)
    }
}

fn expand(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - d, hi + d)
    } else {
        (lo, hi)
    }
}

/// Renders the plot; every referenced column must exist in `data`.
pub fn render(spec: &PlotSpec, data: &Table) -> Result<String> {
    let x = data.column(&spec.x_column)?;
    let mut lines = Vec::new();
    for s in &spec.series {
        let y = data.column(&s.column)?;
        let band = match &s.band {
            Some(b) => Some(data.column(b)?),
            None => None,
        };
        lines.push((s, y, band));
    }
    if x.is_empty() {
        return Err(LabError::Data("cannot plot an empty table".into()));
    }

    let finite_x: Vec<f64> = x.iter().copied().filter(|v| v.is_finite()).collect();
    let (x0, x1) = expand(
        finite_x.iter().copied().fold(f64::INFINITY, f64::min),
        finite_x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut ys: Vec<f64> = Vec::new();
    for (_, y, band) in &lines {
        for (i, v) in y.iter().enumerate() {
            let sd = band.as_ref().map_or(0.0, |b| b[i].abs());
            ys.push(v - sd);
            ys.push(v + sd);
            ys.push(*v);
        }
    }
    ys.extend(spec.ref_lines.iter().map(|r| r.value));
    let keep = |v: &f64| v.is_finite() && (!spec.log_y || *v > 0.0);
    let ys: Vec<f64> = ys.into_iter().filter(keep).collect();
    let (mut y0, mut y1) = if ys.is_empty() {
        (0.1, 1.0)
    } else {
        expand(ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    if spec.log_y {
        y0 = 10f64.powf(y0.log10().floor());
        y1 = 10f64.powf(y1.log10().ceil());
        if y0 == y1 {
            y1 *= 10.0;
        }
    } else {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let ax = Axes { x0, x1, y0, y1, log_y: spec.log_y };

    let mut out = String::new();
    let w = &mut out;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, escape(&spec.title)).unwrap();

    // grid and ticks
    let (px0, px1) = (ax.px(x0), ax.px(x1));
    let (py0, py1) = (ax.py(y0), ax.py(y1));
    for t in nice_ticks(x0, x1, 8) {
        let p = ax.px(t);
        writeln!(w, r##"<line x1="{p:.2}" y1="{py1:.2}" x2="{p:.2}" y2="{py0:.2}" stroke="#e5e5e5"/>"##).unwrap();
        writeln!(w, r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, py0 + 16.0, tick_label(t)).unwrap();
    }
    let y_ticks: Vec<f64> = if spec.log_y {
        let (a, b) = (y0.log10().round() as i32, y1.log10().round() as i32);
        let stride = ((b - a) / 8).max(1);
        (a..=b).step_by(stride as usize).map(|e| 10f64.powi(e)).collect()
    } else {
        nice_ticks(y0, y1, 6)
    };
    for t in y_ticks {
        let p = ax.py(t);
        writeln!(w, r##"<line x1="{px0:.2}" y1="{p:.2}" x2="{px1:.2}" y2="{p:.2}" stroke="#e5e5e5"/>"##).unwrap();
        let label = if spec.log_y { format!("{t:.0e}") } else { tick_label(t) };
        writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, px0 - 6.0, p + 4.0).unwrap();
    }
    writeln!(w, r#"<rect x="{px0:.2}" y="{py1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, px1 - px0, py0 - py1).unwrap();
    writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (px0 + px1) / 2.0, HEIGHT - 12.0, escape(&spec.x_label)).unwrap();
    writeln!(w, r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#, (py0 + py1) / 2.0, (py0 + py1) / 2.0, escape(&spec.y_label)).unwrap();

    // bands behind lines
    for (i, (_, y, band)) in lines.iter().enumerate() {
        let Some(sd) = band else { continue };
        let color = PALETTE[i % PALETTE.len()];
        let idx: Vec<usize> = (0..x.len()).filter(|&k| x[k].is_finite() && y[k].is_finite() && sd[k].is_finite()).collect();
        let upper: Vec<String> = idx.iter().filter(|&&k| ax.usable(y[k] + sd[k].abs())).map(|&k| format!("{:.2},{:.2}", ax.px(x[k]), ax.py(y[k] + sd[k].abs()))).collect();
        // on a log axis a lower edge at or below zero sits on the axis floor
        let floor = |v: f64| if ax.log_y && v <= 0.0 { ax.y0 } else { v };
        let lower: Vec<String> = idx
            .iter()
            .rev()
            .filter(|&&k| ax.usable(floor(y[k] - sd[k].abs())))
            .map(|&k| format!("{:.2},{:.2}", ax.px(x[k]), ax.py(floor(y[k] - sd[k].abs()))))
            .collect();
        if !upper.is_empty() {
            writeln!(w, r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, upper.join(" "), lower.join(" ")).unwrap();
        }
    }
    for r in &spec.ref_lines {
        if !ax.usable(r.value) {
            continue;
        }
        let p = ax.py(r.value);
        writeln!(w, r##"<line x1="{px0:.2}" y1="{p:.2}" x2="{px1:.2}" y2="{p:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##).unwrap();
        writeln!(w, r##"<text x="{:.2}" y="{:.2}" fill="#555555">{}</text>"##, px1 + 4.0, p + 4.0, escape(&r.label)).unwrap();
    }
    for (i, (_, y, _)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // break the line at unusable points
        let mut segment: Vec<String> = Vec::new();
        let mut segments = Vec::new();
        for k in 0..x.len() {
            if x[k].is_finite() && ax.usable(y[k]) {
                segment.push(format!("{:.2},{:.2}", ax.px(x[k]), ax.py(y[k])));
            } else if !segment.is_empty() {
                segments.push(std::mem::take(&mut segment));
            }
        }
        if !segment.is_empty() {
            segments.push(segment);
        }
        for seg in segments {
            writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, seg.join(" ")).unwrap();
        }
    }
    // legend
    for (i, (s, _, _)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 14.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 56.0;
        writeln!(w, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, x + 20.0).unwrap();
        writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 26.0, y + 4.0, escape(&s.label)).unwrap();
    }
    writeln!(w, "</svg>").unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Cell;

    fn table() -> Table {
        let mut t = Table::new(["x", "y", "sd"]);
        t.push(vec![Cell::Num(0.0), Cell::Num(0.0), Cell::Num(0.1)]);
        t.push(vec![Cell::Num(1.0), Cell::Num(1.0), Cell::Num(0.1)]);
        t
    }

    #[test]
    fn two_points_make_one_polyline() {
        let svg = render(&PlotSpec::new("t", "x").series(Series::new("y", "y")), &table()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line.split('"').nth(1).unwrap();
        assert_eq!(pts.split(' ').count(), 2);
    }

    #[test]
    fn band_is_drawn_before_the_line() {
        let spec = PlotSpec::new("t", "x").series(Series::new("y", "mean").with_band("sd")).ref_line(0.5, "ref");
        let svg = render(&spec, &table()).unwrap();
        let band = svg.find("<polygon").unwrap();
        let line = svg.find("<polyline").unwrap();
        assert!(band < line);
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(svg, render(&spec, &table()).unwrap());
    }

    #[test]
    fn missing_column_is_named() {
        let e = render(&PlotSpec::new("t", "x").series(Series::new("nope", "n")), &table()).unwrap_err();
        assert!(e.to_string().contains("`nope`"));
    }

    #[test]
    fn ticks_are_round_numbers() {
        assert_eq!(nice_ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(1e6), "1e6");
    }
}
