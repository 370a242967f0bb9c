//! Hand-rolled SVG charts.
//!
//! Output is built entirely in memory and written in one shot, so a failed
//! render never leaves a partial file; everything (tick placement, number
//! formatting, series order) is a pure function of the input data, so
//! identical inputs produce byte-identical SVGs.

use std::path::PathBuf;

use crate::commands::Baselines;
use crate::config::RunConfig;
use crate::io::{write_string, CsvTable, OutputLayout, SweepRecord};
use crate::CliError;

const CHART_W: f64 = 800.0;
const CHART_H: f64 = 420.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 56.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct HLine {
    pub label: String,
    pub color: String,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub hlines: Vec<HLine>,
    /// Show the per-series legend block (off for dense profile fans).
    pub legend: bool,
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

/// Evenly spaced round-number ticks covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = mag
        * if norm <= 1.0 {
            1.0
        } else if norm <= 2.0 {
            2.0
        } else if norm <= 5.0 {
            5.0
        } else {
            10.0
        };
    let mut ticks = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + step * 1e-9 {
        ticks.push(k as f64 * step);
        k += 1;
    }
    (ticks, step)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let v = if v.abs() < step * 1e-6 { 0.0 } else { v };
    if step >= 1e-3 {
        let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
        format!("{v:.decimals$}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data range expanded so every point and guide line sits strictly inside
/// the axes.
fn padded_range(values: impl Iterator<Item = f64>, pad: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    assert!(lo.is_finite() && hi.is_finite(), "chart data must be finite and nonempty");
    if lo == hi {
        let bump = lo.abs().max(1.0) * 0.1;
        lo -= bump;
        hi += bump;
    }
    let span = hi - lo;
    (lo - pad * span, hi + pad * span)
}

impl Chart {
    /// Renders the chart into `out` as a `<g>` assuming an 800x420 local
    /// box whose origin the caller has translated.
    fn render_into(&self, out: &mut String) {
        let (xlo, xhi) = padded_range(
            self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
            0.02,
        );
        let (ylo, yhi) = padded_range(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .chain(self.hlines.iter().map(|h| h.y)),
            0.06,
        );
        let x0 = MARGIN_L;
        let x1 = CHART_W - MARGIN_R;
        let y_top = MARGIN_T;
        let y_bot = CHART_H - MARGIN_B;
        let map_x = |x: f64| x0 + (x - xlo) / (xhi - xlo) * (x1 - x0);
        let map_y = |y: f64| y_bot - (y - ylo) / (yhi - ylo) * (y_bot - y_top);

        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{CHART_W}\" height=\"{CHART_H}\" fill=\"#ffffff\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"15\" fill=\"#202020\">{}</text>\n",
            px(CHART_W / 2.0),
            escape(&self.title)
        ));

        // Gridlines and tick labels.
        let (xticks, xstep) = nice_ticks(xlo, xhi);
        for &t in &xticks {
            let x = px(map_x(t));
            out.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n",
                px(y_top),
                px(y_bot)
            ));
            out.push_str(&format!(
                "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"11\" fill=\"#404040\">{}</text>\n",
                px(y_bot + 16.0),
                fmt_tick(t, xstep)
            ));
        }
        let (yticks, ystep) = nice_ticks(ylo, yhi);
        for &t in &yticks {
            let y = px(map_y(t));
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n",
                px(x0),
                px(x1)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
                 font-size=\"11\" fill=\"#404040\">{}</text>\n",
                px(x0 - 6.0),
                px(map_y(t) + 4.0),
                fmt_tick(t, ystep)
            ));
        }

        // Axes frame.
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1\"/>\n",
            px(x0),
            px(y_top),
            px(x1 - x0),
            px(y_bot - y_top)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\" fill=\"#202020\">{}</text>\n",
            px((x0 + x1) / 2.0),
            px(CHART_H - 14.0),
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\" fill=\"#202020\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            px((y_top + y_bot) / 2.0),
            px((y_top + y_bot) / 2.0),
            escape(&self.y_label)
        ));

        // Horizontal guide lines, dashed, labeled at the right edge.
        for h in &self.hlines {
            let y = px(map_y(h.y));
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" \
                 stroke-width=\"1.4\" stroke-dasharray=\"8 5\"/>\n",
                px(x0),
                px(x1),
                h.color
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" \
                 font-size=\"11\" fill=\"{}\">{}</text>\n",
                px(x1 - 4.0),
                px(map_y(h.y) - 5.0),
                h.color,
                escape(&h.label)
            ));
        }

        // Data series.
        for s in &self.series {
            let mut pts = String::new();
            for &(x, y) in &s.points {
                if !pts.is_empty() {
                    pts.push(' ');
                }
                pts.push_str(&format!("{},{}", px(map_x(x)), px(map_y(y))));
            }
            let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            out.push_str(&format!(
                "<polyline points=\"{pts}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n",
                s.color
            ));
        }

        if self.legend {
            for (k, s) in self.series.iter().enumerate() {
                let y = y_top + 16.0 + 16.0 * k as f64;
                out.push_str(&format!(
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2.2\"/>\n",
                    px(x0 + 10.0),
                    px(y),
                    px(x0 + 34.0),
                    px(y),
                    s.color
                ));
                out.push_str(&format!(
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                     fill=\"#202020\">{}</text>\n",
                    px(x0 + 40.0),
                    px(y + 4.0),
                    escape(&s.label)
                ));
            }
        }
    }
}

/// Stacks charts vertically into one standalone SVG document.
pub fn svg_page(charts: &[Chart]) -> String {
    let total_h = CHART_H * charts.len() as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CHART_W}\" height=\"{total_h}\" \
         viewBox=\"0 0 {CHART_W} {total_h}\">\n"
    );
    for (i, chart) in charts.iter().enumerate() {
        out.push_str(&format!("<g transform=\"translate(0 {})\">\n", px(CHART_H * i as f64)));
        chart.render_into(&mut out);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn lerp_color(frac: f64) -> String {
    // Blue (#2040c0) at the low end of the frequency span, red (#c03020)
    // at the high end.
    let f = frac.clamp(0.0, 1.0);
    let ch = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0x20 as f64, 0xc0 as f64), ch(0x40 as f64, 0x30 as f64), ch(0xc0 as f64, 0x20 as f64))
}

fn sweep_chart(cfg: &RunConfig, layout: &OutputLayout, baselines: &Baselines) -> Result<Chart, CliError> {
    let path = layout.sweep_csv();
    let table = CsvTable::read(&path)?;
    if table.is_empty() {
        return Err(CliError::EmptyInput(path));
    }
    let omega = table.f64_column("omega")?;
    let columns = [
        ("schur_estimate", "Schur estimate", "#2040c0"),
        ("l2_norm_k", "L2 norm", "#208040"),
        ("truncation_norm", "truncation norm", "#c05020"),
    ];
    let mut series = Vec::new();
    for (name, label, color) in columns {
        let ys = table.f64_column(name)?;
        series.push(Series {
            label: label.to_string(),
            color: color.to_string(),
            dashed: false,
            points: omega.iter().copied().zip(ys).collect(),
        });
    }
    let mut hlines = Vec::new();
    if let Some(li) = baselines.lambda_inv {
        hlines.push(HLine { label: "contraction threshold".into(), color: "#707070".into(), y: li });
    }
    hlines.push(HLine { label: "L2 asymptote".into(), color: "#4868a8".into(), y: baselines.l2_kbar });
    hlines.push(HLine {
        label: "mode-compression asymptote".into(),
        color: "#a86848".into(),
        y: baselines.t_kbar_norm,
    });
    let _ = cfg;
    Ok(Chart {
        title: "operator-norm bounds across the frequency line".into(),
        x_label: "omega".into(),
        y_label: "norm".into(),
        series,
        hlines,
        legend: true,
    })
}

fn convergence_charts(cfg: &RunConfig, layout: &OutputLayout) -> Result<Vec<Chart>, CliError> {
    // Use the frequency closest to zero among those with recorded history.
    let mut best: Option<(f64, PathBuf)> = None;
    for &omega in &cfg.omegas() {
        let p = layout.history_file(&cfg.file_key(omega));
        if p.exists() && best.as_ref().map_or(true, |(b, _)| omega.abs() < b.abs()) {
            best = Some((omega, p));
        }
    }
    let (omega, path) = best.ok_or_else(|| CliError::EmptyInput(layout.root().join("history")))?;
    let table = CsvTable::read(&path)?;
    if table.is_empty() {
        return Err(CliError::EmptyInput(path));
    }
    let iters: Vec<f64> = table.u64_column("iteration")?.iter().map(|&i| i as f64).collect();
    let t = table.f64_column("t")?;
    let refs: Vec<f64> = table.u64_column("ref_points")?.iter().map(|&r| r as f64).collect();
    Ok(vec![
        Chart {
            title: format!("level descent at omega {omega:+.3}"),
            x_label: "outer iteration".into(),
            y_label: "level t".into(),
            series: vec![Series {
                label: "level t".into(),
                color: "#2040c0".into(),
                dashed: false,
                points: iters.iter().copied().zip(t).collect(),
            }],
            hlines: Vec::new(),
            legend: false,
        },
        Chart {
            title: format!("reference-set growth at omega {omega:+.3}"),
            x_label: "outer iteration".into(),
            y_label: "reference points".into(),
            series: vec![Series {
                label: "reference points".into(),
                color: "#c05020".into(),
                dashed: false,
                points: iters.iter().copied().zip(refs).collect(),
            }],
            hlines: Vec::new(),
            legend: false,
        },
    ])
}

fn profiles_chart(cfg: &RunConfig, layout: &OutputLayout) -> Result<Chart, CliError> {
    let mut available: Vec<(f64, PathBuf)> = Vec::new();
    for &omega in &cfg.omegas() {
        let p = layout.record_file(&cfg.file_key(omega));
        if p.exists() {
            available.push((omega, p));
        }
    }
    if available.is_empty() {
        return Err(CliError::EmptyInput(layout.root().join("records")));
    }
    // At most nine evenly spaced frequencies keep the fan legible.
    let picks: Vec<usize> = if available.len() <= 9 {
        (0..available.len()).collect()
    } else {
        (0..9).map(|k| k * (available.len() - 1) / 8).collect()
    };
    let lo = available[picks[0]].0;
    let hi = available[*picks.last().expect("picks nonempty")].0;
    let span = hi - lo;
    let (params, _) = cfg.kernel_params();
    let mut series = Vec::new();
    for &idx in &picks {
        let (omega, ref path) = available[idx];
        let record: SweepRecord = crate::io::read_json(path)?;
        let m = record.p_samples.len();
        if m < 2 {
            return Err(CliError::Config(format!(
                "{}: record holds no weight samples",
                path.display()
            )));
        }
        let tau = params.tau;
        let frac = if span > 0.0 { (omega - lo) / span } else { 0.5 };
        let points = record
            .p_samples
            .iter()
            .enumerate()
            .map(|(i, &p)| (-tau * ((m - 1 - i) as f64) / (m - 1) as f64, p))
            .collect();
        series.push(Series {
            label: format!("omega {omega:+.2}"),
            color: lerp_color(frac),
            dashed: false,
            points,
        });
    }
    Ok(Chart {
        title: "optimized left weight profiles (blue: low omega, red: high)".into(),
        x_label: "theta".into(),
        y_label: "weight p".into(),
        series,
        hlines: Vec::new(),
        legend: true,
    })
}

/// Renders all three charts. Each output file is written only after its
/// SVG string has fully materialized.
pub fn render_all(cfg: &RunConfig, layout: &OutputLayout, baselines: &Baselines) -> Result<(), CliError> {
    let sweep = svg_page(&[sweep_chart(cfg, layout, baselines)?]);
    write_string(&layout.plot_file("sweep.svg"), &sweep)?;
    let convergence = svg_page(&convergence_charts(cfg, layout)?);
    write_string(&layout.plot_file("convergence.svg"), &convergence)?;
    let profiles = svg_page(&[profiles_chart(cfg, layout)?]);
    write_string(&layout.plot_file("p_profiles.svg"), &profiles)?;
    println!(
        "wrote {}, convergence.svg, p_profiles.svg in {}",
        "sweep.svg",
        layout.root().display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_interior_round_numbers() {
        let (ticks, step) = nice_ticks(-20.3, 20.3);
        assert!((step - 10.0).abs() < 1e-12);
        assert_eq!(ticks, vec![-20.0, -10.0, 0.0, 10.0, 20.0]);
        let (ticks, step) = nice_ticks(0.61, 0.93);
        assert!((step - 0.1).abs() < 1e-12, "{step}");
        assert!(ticks.iter().any(|t| (t - 0.8).abs() < 1e-12), "{ticks:?}");
    }

    #[test]
    fn tick_labels_stay_tidy() {
        assert_eq!(fmt_tick(0.30000000000000004, 0.05), "0.30");
        assert_eq!(fmt_tick(-1e-18, 0.05), "0.00");
        assert_eq!(fmt_tick(28000.0, 2000.0), "28000");
        assert_eq!(fmt_tick(2.4000000000000003e-4, 8e-5), "2.40e-4");
    }

    #[test]
    fn page_renders_polylines_within_viewbox() {
        let chart = Chart {
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "s".into(),
                color: "#2040c0".into(),
                dashed: false,
                points: vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)],
            }],
            hlines: vec![HLine { label: "guide".into(), color: "#707070".into(), y: 2.5 }],
            legend: true,
        };
        let svg = svg_page(&[chart]);
        assert!(svg.starts_with("<svg "));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("stroke-dasharray=\"8 5\"").count(), 1);
        // Every plotted coordinate stays inside the 800x420 box.
        for caps in svg.split("points=\"").skip(1) {
            let coords = caps.split('"').next().unwrap();
            for pair in coords.split(' ') {
                let (x, y) = pair.split_once(',').unwrap();
                let x: f64 = x.parse().unwrap();
                let y: f64 = y.parse().unwrap();
                assert!((0.0..=800.0).contains(&x), "{x}");
                assert!((0.0..=420.0).contains(&y), "{y}");
            }
        }
    }

    #[test]
    fn color_ramp_endpoints() {
        assert_eq!(lerp_color(0.0), "#2040c0");
        assert_eq!(lerp_color(1.0), "#c03020");
    }
}
