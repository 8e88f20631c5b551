//! Static SVG charts.
//!
//! Output is a pure function of the input data: fixed canvas size, fixed
//! palette, coordinates printed with two decimals.

use std::fmt::Write;

use forage_core::experiments::{AggregateReport, Stat, SweepResult};

use crate::{CliError, CliResult};

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 44.0;
const TICKS: usize = 5;
const KDE_POINTS: usize = 48;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Pta,
    Rmse,
    Idleness,
    Csr,
    Gini,
    Co,
    Sweep,
    Violin,
}

/// One mean line with its CI band; `None` points break the line.
#[derive(Debug, Clone)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, Option<Stat>)>,
}

#[derive(Debug, Clone)]
pub struct LinePanel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone)]
pub struct ViolinPanel {
    pub title: String,
    pub y_label: String,
    pub groups: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub enum Panel {
    Lines(LinePanel),
    Violins(ViolinPanel),
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from data to pixels.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi - lo > 1e-12 {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        Axis { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..TICKS)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (TICKS - 1) as f64)
            .collect()
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn frame(out: &mut String, top: f64, title: &str, x: Option<(&Axis, &str)>, y: (&Axis, &str)) {
    let (ya, ylabel) = y;
    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let bottom = top + PANEL_HEIGHT - MARGIN_BOTTOM;
    let inner_top = top + MARGIN_TOP;
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{inner_top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        right - left,
        bottom - inner_top
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        (left + right) / 2.0,
        top + 20.0,
        escape(title)
    );
    for v in ya.ticks() {
        let py = ya.map(v);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"##,
            left - 4.0,
            left - 6.0,
            py + 3.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        left - 50.0,
        (inner_top + bottom) / 2.0,
        left - 50.0,
        (inner_top + bottom) / 2.0,
        escape(ylabel)
    );
    if let Some((xa, xlabel)) = x {
        for v in xa.ticks() {
            let px = xa.map(v);
            let _ = writeln!(
                out,
                r##"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"##,
                bottom + 4.0,
                bottom + 16.0,
                tick_label(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
            (left + right) / 2.0,
            bottom + 34.0,
            escape(xlabel)
        );
    }
}

fn legend(out: &mut String, top: f64, labels: &[&str]) {
    let x = WIDTH - MARGIN_RIGHT + 12.0;
    for (i, label) in labels.iter().enumerate() {
        let y = top + MARGIN_TOP + 8.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            y - 10.0,
            x + 18.0,
            y,
            escape(label)
        );
    }
}

/// Runs of consecutive defined points.
fn segments(points: &[(f64, Option<Stat>)]) -> Vec<Vec<(f64, Stat)>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for &(x, s) in points {
        match s {
            Some(s) if s.mean.is_finite() && s.ci.is_finite() => cur.push((x, s)),
            _ => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn render_lines(out: &mut String, top: f64, panel: &LinePanel) {
    let defined: Vec<(f64, Stat)> = panel
        .lines
        .iter()
        .flat_map(|l| segments(&l.points).into_iter().flatten())
        .collect();
    let xmin = defined.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let xmax = defined.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = defined.iter().map(|p| p.1.mean - p.1.ci).fold(f64::INFINITY, f64::min);
    let ymax = defined.iter().map(|p| p.1.mean + p.1.ci).fold(f64::NEG_INFINITY, f64::max);
    let xa = Axis::new(xmin, xmax, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let ya = Axis::new(ymin, ymax, top + PANEL_HEIGHT - MARGIN_BOTTOM, top + MARGIN_TOP);
    frame(out, top, &panel.title, Some((&xa, &panel.x_label)), (&ya, &panel.y_label));

    for (i, line) in panel.lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for seg in segments(&line.points) {
            let mut band = String::new();
            for (x, s) in &seg {
                let _ = write!(band, "{:.2},{:.2} ", xa.map(*x), ya.map(s.mean + s.ci));
            }
            for (x, s) in seg.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", xa.map(*x), ya.map(s.mean - s.ci));
            }
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                band.trim_end()
            );
            let mean: Vec<String> = seg
                .iter()
                .map(|(x, s)| format!("{:.2},{:.2}", xa.map(*x), ya.map(s.mean)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                mean.join(" ")
            );
        }
    }
    let labels: Vec<&str> = panel.lines.iter().map(|l| l.label.as_str()).collect();
    legend(out, top, &labels);
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Gaussian kernel density on `KDE_POINTS` evenly spaced points over
/// `[lo, hi]`, bandwidth by Silverman's rule.
fn density(values: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let h = (1.06 * sd * n.powf(-0.2)).max(1e-3 * (hi - lo).max(1e-9));
    (0..KDE_POINTS)
        .map(|i| {
            let y = lo + (hi - lo) * i as f64 / (KDE_POINTS - 1) as f64;
            let d = values
                .iter()
                .map(|v| (-0.5 * ((y - v) / h).powi(2)).exp())
                .sum::<f64>();
            (y, d)
        })
        .collect()
}

fn render_violins(out: &mut String, top: f64, panel: &ViolinPanel) {
    let all: Vec<f64> = panel.groups.iter().flat_map(|g| g.1.iter().copied()).collect();
    let ymin = all.iter().copied().fold(f64::INFINITY, f64::min);
    let ymax = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ya = Axis::new(ymin, ymax, top + PANEL_HEIGHT - MARGIN_BOTTOM, top + MARGIN_TOP);
    frame(out, top, &panel.title, None, (&ya, &panel.y_label));

    let slot = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / panel.groups.len() as f64;
    let half = slot * 0.4;
    for (i, (label, values)) in panel.groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{} (n={})</text>"#,
            top + PANEL_HEIGHT - MARGIN_BOTTOM + 16.0,
            escape(label),
            values.len()
        );
        if values.is_empty() {
            continue;
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let dens = density(&sorted, lo, hi);
        let peak = dens.iter().map(|d| d.1).fold(0.0, f64::max).max(1e-12);
        let mut outline = String::new();
        for (y, d) in &dens {
            let _ = write!(outline, "{:.2},{:.2} ", cx + half * d / peak, ya.map(*y));
        }
        for (y, d) in dens.iter().rev() {
            let _ = write!(outline, "{:.2},{:.2} ", cx - half * d / peak, ya.map(*y));
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.3" stroke="{color}"/>"#,
            outline.trim_end()
        );
        let (q1, q2, q3) = (
            quantile(&sorted, 0.25),
            quantile(&sorted, 0.5),
            quantile(&sorted, 0.75),
        );
        let bw = half * 0.25;
        let _ = writeln!(
            out,
            r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#222"/>"##,
            ya.map(lo),
            ya.map(hi)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#fff" stroke="#222"/>"##,
            cx - bw,
            ya.map(q3),
            2.0 * bw,
            (ya.map(q1) - ya.map(q3)).max(0.0)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#222" stroke-width="2"/>"##,
            cx - bw,
            ya.map(q2),
            cx + bw,
            ya.map(q2)
        );
    }
}

fn has_data(panel: &Panel) -> bool {
    match panel {
        Panel::Lines(p) => p.lines.iter().any(|l| !segments(&l.points).is_empty()),
        Panel::Violins(p) => p.groups.iter().any(|g| !g.1.is_empty()),
    }
}

/// Stacks `panels` vertically. Fails when any panel has nothing to draw.
pub fn render(panels: &[Panel]) -> CliResult<String> {
    if panels.is_empty() {
        return Err(CliError::Config("nothing to plot".into()));
    }
    for p in panels {
        if !has_data(p) {
            let title = match p {
                Panel::Lines(l) => &l.title,
                Panel::Violins(v) => &v.title,
            };
            return Err(CliError::Config(format!("no data to plot for '{title}'")));
        }
    }
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    for (i, p) in panels.iter().enumerate() {
        let top = PANEL_HEIGHT * i as f64;
        match p {
            Panel::Lines(l) => render_lines(&mut out, top, l),
            Panel::Violins(v) => render_violins(&mut out, top, v),
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn series_panel(reports: &[AggregateReport], name: &str, title: &str, y_label: &str) -> Panel {
    let lines = reports
        .iter()
        .map(|r| {
            let values = r.series.get(name).cloned().unwrap_or_default();
            let horizon = f64::from(r.horizon.max(1));
            // irr[t] describes the step t -> t+1
            let shift = if name == "irr" { 1.0 } else { 0.0 };
            Line {
                label: r.label.clone(),
                points: values
                    .into_iter()
                    .enumerate()
                    .map(|(t, s)| ((t as f64 + shift) / horizon, s))
                    .collect(),
            }
        })
        .collect();
    Panel::Lines(LinePanel {
        title: title.into(),
        x_label: "t / T".into(),
        y_label: y_label.into(),
        lines,
    })
}

/// Panels for a time-series or violin kind.
pub fn report_panels(kind: PlotKind, reports: &[AggregateReport]) -> CliResult<Vec<Panel>> {
    use PlotKind::*;
    Ok(match kind {
        Pta => vec![
            series_panel(reports, "pta_d", "Items discovered", "PTA_D (%)"),
            series_panel(reports, "pta_c", "Items collected", "PTA_C (%)"),
        ],
        Rmse => vec![series_panel(reports, "rmse", "Model error", "RMSE")],
        Idleness => vec![
            series_panel(reports, "mi", "Mean idleness", "MI"),
            series_panel(reports, "irr", "Idleness reduction rate", "IRR"),
        ],
        Csr => vec![series_panel(reports, "csr", "Collection success rate", "CSR")],
        Gini => vec![series_panel(reports, "gini", "Forager workload inequality", "Gini")],
        Co => vec![series_panel(reports, "co", "Scout coverage overlap", "CO")],
        Violin => {
            let group = |f: fn(&AggregateReport) -> &Vec<f64>| {
                reports
                    .iter()
                    .map(|r| (r.label.clone(), f(r).clone()))
                    .collect()
            };
            vec![
                Panel::Violins(ViolinPanel {
                    title: "Discovery-to-collection latency".into(),
                    y_label: "DSL".into(),
                    groups: group(|r| &r.dsl_values),
                }),
                Panel::Violins(ViolinPanel {
                    title: "Information transfer lag".into(),
                    y_label: "ITL".into(),
                    groups: group(|r| &r.itl_values),
                }),
            ]
        }
        Sweep => {
            return Err(CliError::Config(
                "kind 'sweep' needs sweep result files".into(),
            ))
        }
    })
}

/// Degradation curves, one line per sweep.
pub fn sweep_panels(sweeps: &[SweepResult]) -> Vec<Panel> {
    let lines = sweeps
        .iter()
        .map(|s| Line {
            label: format!(
                "{} [{}] SS={:.2}",
                s.label,
                s.team.as_str(),
                s.curve.fit.slope
            ),
            points: s
                .curve
                .points
                .iter()
                .map(|p| {
                    (
                        p.epsilon,
                        Some(Stat {
                            mean: p.mean,
                            ci: p.ci,
                            n: p.n,
                        }),
                    )
                })
                .collect(),
        })
        .collect();
    let metric = sweeps.first().map(|s| s.metric.clone()).unwrap_or_default();
    vec![Panel::Lines(LinePanel {
        title: "Performance under corruption".into(),
        x_label: "epsilon".into(),
        y_label: metric,
        lines,
    })]
}
