//! CSV, JSON and SVG output of profiles and jump reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CurvatureProfile, JumpReport};
use crate::curvature::CurvatureTotals;

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("empty profile")]
    EmptyProfile,
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }
}

fn nonempty(profile: &CurvatureProfile) -> Result<(), EmitError> {
    if profile.is_empty() {
        Err(EmitError::EmptyProfile)
    } else {
        Ok(())
    }
}

/// One row per grid value, in the curvature CSV schema.
pub fn profile_csv(profile: &CurvatureProfile) -> Result<String, EmitError> {
    nonempty(profile)?;
    let mut out = CurvatureTotals::csv_header(profile.arity);
    out.push('\n');
    for t in &profile.totals {
        out.push_str(&t.csv_row());
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct Document<'a> {
    profile: &'a CurvatureProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a JumpReport>,
}

pub fn report_json(profile: &CurvatureProfile, report: Option<&JumpReport>) -> Result<String, EmitError> {
    nonempty(profile)?;
    let mut s = serde_json::to_string_pretty(&Document { profile, report })?;
    s.push('\n');
    Ok(s)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

struct Frame {
    t: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (t - self.t.0) / (self.t.1 - self.t.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Line plot of `K`, `|K|` and `|K|(λ)` against `t`, with a dashed vertical
/// line at each reported jump.
pub fn profile_svg(profile: &CurvatureProfile, report: Option<&JumpReport>) -> Result<String, EmitError> {
    nonempty(profile)?;
    let mut series: Vec<(String, Vec<f64>)> = vec![
        ("K".into(), profile.signed_values()),
        ("|K|".into(), profile.abs_values()),
    ];
    for l in 0..profile.arity {
        series.push((format!("|K|(λ={l})"), profile.totals.iter().map(|t| t.k_abs_lambda[l]).collect()));
    }
    let finite = series.iter().flat_map(|s| s.1.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        hi += 1.0;
        lo -= 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (t0, t1) = (profile.grid[0], profile.grid[profile.len() - 1]);
    let frame = Frame { t: if t1 > t0 { (t0, t1) } else { (t0 - 1.0, t0 + 1.0) }, y: (lo - pad, hi + pad) };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (xa, xb, ya, yb) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{xa} {yb} L{xa} {ya} L{xb} {ya}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let t = frame.t.0 + (frame.t.1 - frame.t.0) * i as f64 / 4.0;
        let v = frame.y.0 + (frame.y.1 - frame.y.0) * i as f64 / 4.0;
        let (x, y) = (frame.x(t), frame.y(v));
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.4}</text>"#, ya + 16.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{v:.3}</text>"#, xa - 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#, 0.5 * WIDTH, HEIGHT - 12.0);
    if frame.y.0 < 0.0 && frame.y.1 > 0.0 {
        let y0 = frame.y(0.0);
        let _ = writeln!(s, r##"<line x1="{xa}" y1="{y0:.2}" x2="{xb}" y2="{y0:.2}" stroke="#cccccc"/>"##);
    }
    for (k, (name, values)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for (t, v) in profile.grid.iter().zip(values) {
            if !v.is_finite() {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, frame.x(*t), frame.y(*v));
            pen_down = true;
        }
        let _ = writeln!(s, r#"<path class="series" data-name="{name}" d="{}" stroke="{color}" fill="none"/>"#, d.trim_end());
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{name}</text>"#, xb - 90.0);
    }
    for j in report.map(|r| r.jumps.as_slice()).unwrap_or_default() {
        let x = frame.x(j.c);
        let _ = writeln!(
            s,
            r##"<line class="jump" data-c="{}" x1="{x:.2}" y1="{yb}" x2="{x:.2}" y2="{ya}" stroke="#444444" stroke-dasharray="4 3"/>"##,
            j.c
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, EmitError> {
    std::fs::write(&path, text).map_err(|source| EmitError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Writes `<stem>.<ext>` into `dir` for each format; returns the paths.
pub fn emit(
    profile: &CurvatureProfile,
    report: Option<&JumpReport>,
    formats: &[OutputFormat],
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, EmitError> {
    nonempty(profile)?;
    std::fs::create_dir_all(dir).map_err(|source| EmitError::Io { path: dir.to_path_buf(), source })?;
    formats
        .iter()
        .map(|f| {
            let text = match f {
                OutputFormat::Csv => profile_csv(profile)?,
                OutputFormat::Json => report_json(profile, report)?,
                OutputFormat::Svg => profile_svg(profile, report)?,
            };
            write(dir.join(format!("{stem}.{}", f.extension())), &text)
        })
        .collect()
}
