use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::record::{Grid, ResultRecord, Series};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Trace,
    Map,
    Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub label: String,
    pub unit: String,
}

impl AxisSpec {
    pub fn new(label: &str, unit: &str) -> Self {
        Self {
            label: label.into(),
            unit: unit.into(),
        }
    }

    fn title(&self) -> String {
        format!("{} ({})", self.label, self.unit)
    }
}

/// What to draw and where the data live in a [`ResultRecord`].
///
/// * `trace`: `x_series` against each of `y_series`.
/// * `envelope`: `y_series = [min, max]` or `[min, max, centre]`, filled
///   between min and max.
/// * `map`: the named `grid`, coloured by value with a colour bar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
    pub x: AxisSpec,
    pub y: AxisSpec,
    #[serde(default)]
    pub x_series: Option<String>,
    #[serde(default)]
    pub y_series: Vec<String>,
    #[serde(default)]
    pub grid: Option<String>,
}

impl PlotSpec {
    pub fn trace(title: &str, x: AxisSpec, y: AxisSpec, x_series: &str, y_series: &[&str]) -> Self {
        Self {
            kind: PlotKind::Trace,
            title: title.into(),
            x,
            y,
            x_series: Some(x_series.into()),
            y_series: y_series.iter().map(|s| s.to_string()).collect(),
            grid: None,
        }
    }

    pub fn envelope(title: &str, x: AxisSpec, y: AxisSpec, x_series: &str, y_series: &[&str]) -> Self {
        Self {
            kind: PlotKind::Envelope,
            ..Self::trace(title, x, y, x_series, y_series)
        }
    }

    pub fn map(title: &str, x: AxisSpec, y: AxisSpec, grid: &str) -> Self {
        Self {
            kind: PlotKind::Map,
            title: title.into(),
            x,
            y,
            x_series: None,
            y_series: Vec::new(),
            grid: Some(grid.into()),
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 90.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 380.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn series<'a>(record: &'a ResultRecord, name: &str, axis: &AxisSpec) -> Result<&'a Series> {
    let s = record
        .series
        .get(name)
        .ok_or_else(|| Error::Schema(format!("plot references missing series `{name}`")))?;
    if s.unit != axis.unit {
        return Err(Error::Schema(format!(
            "series `{name}` is in {} but the axis is labelled {}",
            s.unit, axis.unit
        )));
    }
    Ok(s)
}

/// Number formatting shared by every label so output is byte-stable.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        let digits = ((v.abs().log10() - step.log10()).ceil().max(0.0) as usize).min(8);
        return format!("{v:.digits$e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn nice_ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let ticks = (first..=last).map(|k| k as f64 * step).collect();
    (lo, hi, ticks)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    right: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (self.right - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (BOTTOM - TOP)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        num(WIDTH / 2.0),
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, frame: &Frame, spec: &PlotSpec, xt: &[f64], yt: &[f64]) {
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(LEFT),
        num(TOP),
        num(frame.right - LEFT),
        num(BOTTOM - TOP)
    );
    let xstep = if xt.len() > 1 { xt[1] - xt[0] } else { 1.0 };
    let ystep = if yt.len() > 1 { yt[1] - yt[0] } else { 1.0 };
    for &t in xt {
        let x = frame.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b5}" stroke="black"/><text x="{x}" y="{bt}" text-anchor="middle">{l}</text>"#,
            x = num(x),
            b = num(BOTTOM),
            b5 = num(BOTTOM + 5.0),
            bt = num(BOTTOM + 18.0),
            l = tick_label(t, xstep)
        );
    }
    for &t in yt {
        let y = frame.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{l5}" y1="{y}" x2="{l}" y2="{y}" stroke="black"/><text x="{lt}" y="{yt}" text-anchor="end">{lab}</text>"#,
            l5 = num(LEFT - 5.0),
            l = num(LEFT),
            y = num(y),
            lt = num(LEFT - 8.0),
            yt = num(y + 4.0),
            lab = tick_label(t, ystep)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(0.5 * (LEFT + frame.right)),
        num(HEIGHT - 20.0),
        escape(&spec.x.title())
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        escape(&spec.y.title()),
        y = num(0.5 * (TOP + BOTTOM))
    );
}

fn finite_range<'a>(values: impl Iterator<Item = &'a f64>) -> Option<(f64, f64)> {
    let mut r: Option<(f64, f64)> = None;
    for &v in values.filter(|v| v.is_finite()) {
        r = Some(r.map_or((v, v), |(a, b)| (a.min(v), b.max(v))));
    }
    r
}

fn points(frame: &Frame, xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    xs.iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (frame.px(x), frame.py(y)))
        .collect()
}

fn path(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|(x, y)| format!("{},{}", num(*x), num(*y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn line_plot(spec: &PlotSpec, record: &ResultRecord) -> Result<String> {
    let xname = spec
        .x_series
        .as_deref()
        .ok_or_else(|| Error::Schema("trace and envelope plots need `x_series`".into()))?;
    let x = series(record, xname, &spec.x)?;
    let ys = spec
        .y_series
        .iter()
        .map(|n| series(record, n, &spec.y))
        .collect::<Result<Vec<_>>>()?;
    if ys.is_empty() {
        return Err(Error::Schema("plot needs at least one y series".into()));
    }
    if spec.kind == PlotKind::Envelope && !(2..=3).contains(&ys.len()) {
        return Err(Error::Schema(
            "envelope plots take [min, max] or [min, max, centre]".into(),
        ));
    }
    if let Some(bad) = ys.iter().position(|s| s.values.len() != x.values.len()) {
        return Err(Error::Schema(format!(
            "series `{}` has {} values but `{xname}` has {}",
            spec.y_series[bad],
            ys[bad].values.len(),
            x.values.len()
        )));
    }
    let (x0, x1) = finite_range(x.values.iter()).ok_or_else(|| Error::Schema("no finite x values".into()))?;
    let (y0, y1) = finite_range(ys.iter().flat_map(|s| s.values.iter()))
        .ok_or_else(|| Error::Schema("no finite y values".into()))?;
    let (x0, x1, xt) = nice_ticks(x0, x1);
    let (y0, y1, yt) = nice_ticks(y0, y1);
    let frame = Frame {
        x0,
        x1,
        y0,
        y1,
        right: WIDTH - 30.0,
    };
    let mut out = String::new();
    header(&mut out, &spec.title);
    if spec.kind == PlotKind::Envelope {
        let lower = points(&frame, &x.values, &ys[0].values);
        let mut upper = points(&frame, &x.values, &ys[1].values);
        upper.reverse();
        let ring: Vec<(f64, f64)> = lower.into_iter().chain(upper).collect();
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#1f77b4" fill-opacity="0.3" stroke="#1f77b4" stroke-width="0.5"/>"##,
            path(&ring)
        );
        if let Some(c) = ys.get(2) {
            let _ = writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
                path(&points(&frame, &x.values, &c.values))
            );
        }
    } else {
        for (i, s) in ys.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                path(&points(&frame, &x.values, &s.values)),
                PALETTE[i % PALETTE.len()]
            );
        }
    }
    axes(&mut out, &frame, spec, &xt, &yt);
    out.push_str("</svg>\n");
    Ok(out)
}

fn map_plot(spec: &PlotSpec, record: &ResultRecord) -> Result<String> {
    let name = spec
        .grid
        .as_deref()
        .ok_or_else(|| Error::Schema("map plots need `grid`".into()))?;
    let grid: &Grid = record
        .grids
        .get(name)
        .ok_or_else(|| Error::Schema(format!("plot references missing grid `{name}`")))?;
    for (axis, ga) in [(&spec.x, &grid.x), (&spec.y, &grid.y)] {
        if axis.unit != ga.unit {
            return Err(Error::Schema(format!(
                "grid axis `{}` is in {} but the plot axis is labelled {}",
                ga.label, ga.unit, axis.unit
            )));
        }
    }
    let (nx, ny) = (grid.x.values.len(), grid.y.values.len());
    if nx == 0 || ny == 0 {
        return Err(Error::Schema("empty grid".into()));
    }
    let edges = |v: &[f64]| -> (f64, f64) {
        if v.len() == 1 {
            let pad = if v[0] == 0.0 { 0.5 } else { 0.05 * v[0].abs() };
            return (v[0] - pad, v[0] + pad);
        }
        let h0 = 0.5 * (v[1] - v[0]);
        let h1 = 0.5 * (v[v.len() - 1] - v[v.len() - 2]);
        (v[0] - h0, v[v.len() - 1] + h1)
    };
    let (x0, x1) = edges(&grid.x.values);
    let (y0, y1) = edges(&grid.y.values);
    let (_, _, xt) = nice_ticks(x0, x1);
    let (_, _, yt) = nice_ticks(y0, y1);
    let frame = Frame {
        x0,
        x1,
        y0,
        y1,
        right: WIDTH - 120.0,
    };
    let (z0, z1) = match grid.values.iter().flatten().fold(None, |r: Option<(f64, f64)>, &v| {
        Some(r.map_or((v, v), |(a, b)| (a.min(v), b.max(v))))
    }) {
        Some((a, b)) if b > a => (a, b),
        Some((a, _)) => (a - 0.5, a + 0.5),
        None => (0.0, 1.0),
    };

    let mut out = String::new();
    header(&mut out, &spec.title);
    let cell_w = (frame.right - LEFT) / nx as f64;
    let cell_h = (BOTTOM - TOP) / ny as f64;
    for r in 0..ny {
        for c in 0..nx {
            let fill = match grid.at(r, c) {
                Some(v) => colour((v - z0) / (z1 - z0)),
                None => "#cccccc".to_string(),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                num(LEFT + c as f64 * cell_w),
                num(BOTTOM - (r + 1) as f64 * cell_h),
                num(cell_w),
                num(cell_h)
            );
        }
    }
    // Cell centres are the grid coordinates; ticks are placed on them.
    let xt: Vec<f64> = xt.into_iter().filter(|t| *t >= x0 && *t <= x1).collect();
    let yt: Vec<f64> = yt.into_iter().filter(|t| *t >= y0 && *t <= y1).collect();
    axes(&mut out, &frame, spec, &xt, &yt);

    let bar_x = frame.right + 25.0;
    let steps = 64;
    let h = (BOTTOM - TOP) / steps as f64;
    for k in 0..steps {
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="16" height="{}" fill="{}"/>"#,
            num(bar_x),
            num(BOTTOM - (k + 1) as f64 * h),
            num(h + 0.5),
            colour((k as f64 + 0.5) / steps as f64)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="16" height="{}" fill="none" stroke="black"/>"#,
        num(bar_x),
        num(TOP),
        num(BOTTOM - TOP)
    );
    let (_, _, zt) = nice_ticks(z0, z1);
    let zstep = if zt.len() > 1 { zt[1] - zt[0] } else { 1.0 };
    for t in zt.into_iter().filter(|t| *t >= z0 && *t <= z1) {
        let y = BOTTOM - (t - z0) / (z1 - z0) * (BOTTOM - TOP);
        let _ = writeln!(
            out,
            r#"<line x1="{a}" y1="{y}" x2="{b}" y2="{y}" stroke="black"/><text x="{c}" y="{ty}">{l}</text>"#,
            a = num(bar_x + 16.0),
            b = num(bar_x + 20.0),
            c = num(bar_x + 23.0),
            y = num(y),
            ty = num(y + 4.0),
            l = tick_label(t, zstep)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        num(bar_x + 8.0),
        num(TOP - 8.0),
        escape(&grid.unit)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Renders `spec` against `record` as an SVG document. Output depends only
/// on the inputs.
pub fn emit_plot(spec: &PlotSpec, record: &ResultRecord) -> Result<String> {
    match spec.kind {
        PlotKind::Trace | PlotKind::Envelope => line_plot(spec, record),
        PlotKind::Map => map_plot(spec, record),
    }
}
