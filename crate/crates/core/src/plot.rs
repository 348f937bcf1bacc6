//! Minimal standalone SVG line plots of a time series.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::diagnostics::energy_drift;
use crate::dynamics::TimeSeriesRecord;
use crate::error::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `N_ours` and `N_cdms` against time.
    NumberOverlay,
    /// `N_ours - N_cdms` and its leading-order estimate against time.
    NumberDifference,
    /// `Etot` against time, annotated with its drift.
    Energy,
    /// Classical phase portrait `(A, A')`.
    PhaseA,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::NumberOverlay,
        PlotKind::NumberDifference,
        PlotKind::Energy,
        PlotKind::PhaseA,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlotKind::NumberOverlay => "number-overlay",
            PlotKind::NumberDifference => "number-difference",
            PlotKind::Energy => "energy",
            PlotKind::PhaseA => "phase-A",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            Error::usage(format!(
                "unknown plot kind `{s}` (number-overlay, number-difference, energy, phase-A)"
            ))
        })
    }
}

struct Series {
    label: &'static str,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn render(title: &str, x_label: &str, y_label: &str, series: &[Series], note: Option<&str>) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="25" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.4e}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.4e}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="y-label" x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let mut pts = String::new();
        for &(x, y) in &ser.points {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{}"/>"#,
            escape(ser.label),
            pts.trim_end()
        );
        let ly = TOP + 15.0 + 16.0 * i as f64;
        let lx = LEFT + pw - 170.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            escape(ser.label)
        );
    }
    if let Some(note) = note {
        let _ = writeln!(
            s,
            r#"<text class="annotation" x="{:.1}" y="{:.1}">{}</text>"#,
            LEFT + 10.0,
            TOP + ph - 10.0,
            escape(note)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Renders a plot of `records`. Output is byte-deterministic.
pub fn render_plot(records: &[TimeSeriesRecord], kind: PlotKind, title: &str) -> Result<String> {
    if records.is_empty() {
        return Err(Error::usage("cannot plot an empty time series"));
    }
    let pts = |f: fn(&TimeSeriesRecord) -> (f64, f64)| records.iter().map(f).collect::<Vec<_>>();
    let svg = match kind {
        PlotKind::NumberOverlay => render(
            title,
            "t",
            "particle number",
            &[
                Series {
                    label: "N_ours",
                    points: pts(|r| (r.t, r.n_ours)),
                    dashed: false,
                },
                Series {
                    label: "N_cdms",
                    points: pts(|r| (r.t, r.n_cdms)),
                    dashed: true,
                },
            ],
            None,
        ),
        PlotKind::NumberDifference => render(
            title,
            "t",
            "N_ours - N_cdms",
            &[
                Series {
                    label: "N_ours - N_cdms",
                    points: pts(|r| (r.t, r.n_ours - r.n_cdms)),
                    dashed: false,
                },
                Series {
                    label: "leading order",
                    points: pts(|r| (r.t, r.dn_leading)),
                    dashed: true,
                },
            ],
            None,
        ),
        PlotKind::Energy => {
            let (lo, hi) = records.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.etot), hi.max(r.etot))
            });
            let drift = if records.len() >= 2 {
                energy_drift(records).ok()
            } else {
                Some(0.0)
            };
            let note = match drift {
                Some(d) => format!("max-min = {:e}; drift = {d:e}", hi - lo),
                None => format!("max-min = {:e}; drift undefined", hi - lo),
            };
            render(
                title,
                "t",
                "Etot",
                &[Series {
                    label: "Etot",
                    points: pts(|r| (r.t, r.etot)),
                    dashed: false,
                }],
                Some(&note),
            )
        }
        PlotKind::PhaseA => render(
            title,
            "A",
            "Adot",
            &[Series {
                label: "(A, Adot)",
                points: pts(|r| (r.a, r.adot)),
                dashed: false,
            }],
            None,
        ),
    };
    Ok(svg)
}

pub fn write_plot(records: &[TimeSeriesRecord], kind: PlotKind, title: &str, path: &Path) -> Result<()> {
    let svg = render_plot(records, kind, title)?;
    std::fs::write(path, svg).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
