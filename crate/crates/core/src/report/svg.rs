//! Minimal hand-written SVG line charts.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::RunMetrics;

const WIDTH: f64 = 720.0;
const PANEL: f64 = 170.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 26.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn panel(out: &mut String, index: usize, title: &str, xs: &[f64], ys: &[f64]) {
    let top = index as f64 * PANEL;
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (top + PANEL - MARGIN_B, top + MARGIN_T);
    let finite = || ys.iter().copied().filter(|v| v.is_finite());
    let mut lo = finite().fold(f64::INFINITY, f64::min);
    let mut hi = finite().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let xmin = xs.first().copied().unwrap_or(0.0);
    let xmax = xs.last().copied().unwrap_or(1.0).max(xmin + 1.0);
    let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
    let sy = |y: f64| y0 - (y - lo) / (hi - lo) * (y0 - y1);

    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(out, r#"<text x="{x0:.1}" y="{:.1}" font-size="13">{}</text>"#, top + 18.0, escape(title));
    let _ = writeln!(
        out,
        r##"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" fill="none" stroke="#444"/>"##
    );
    for (v, y) in [(hi, y1), (lo, y0)] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.3}</text>"#, x0 - 4.0, y + 3.0);
    }
    let _ = writeln!(out, r#"<text x="{x0:.1}" y="{:.1}" font-size="10">{xmin}</text>"#, y0 + 14.0);
    let _ = writeln!(out, r#"<text x="{x1:.1}" y="{:.1}" font-size="10" text-anchor="end">{xmax}</text>"#, y0 + 14.0);
    let points: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(out, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1.2" points="{}"/>"##, points.join(" "));
    let _ = writeln!(out, "</g>");
}

/// Stacked line charts of every per-episode series, plus the mean selected
/// split per hour of day.
pub fn write_svg<W: Write>(m: &RunMetrics, mut w: W) -> io::Result<()> {
    let xs: Vec<f64> = m.episodes.iter().map(|e| e.episode as f64).collect();
    type Series = (&'static str, fn(&super::EpisodeMetrics) -> f64);
    let series: [Series; 5] = [
        ("normalized power", |e| e.normalized_power),
        ("mean reward", |e| e.mean_reward),
        ("short-term reward", |e| e.short_term_reward),
        ("long-term reward", |e| e.long_term_reward),
        ("negative reward fraction", |e| e.negative_fraction),
    ];
    let height = PANEL * (series.len() + 1) as f64 + 24.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    for (i, (title, f)) in series.iter().enumerate() {
        let ys: Vec<f64> = m.episodes.iter().map(f).collect();
        panel(&mut out, i, &format!("{title} per episode"), &xs, &ys);
    }
    let hours: Vec<f64> = (0..24).map(|h| h as f64).collect();
    let mean_split: Vec<f64> = (0..24).map(|h| m.option_by_hour.mean(h).unwrap_or(f64::NAN)).collect();
    panel(&mut out, series.len(), "mean selected split by hour of day", &hours, &mean_split);
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN_L}" y="{:.1}" font-size="10">power normalized by {:.6} W (max feasible total power at peak load)</text>"#,
        height - 8.0,
        m.normalizer_w
    );
    out.push_str("</svg>\n");
    w.write_all(out.as_bytes())?;
    w.flush()
}
