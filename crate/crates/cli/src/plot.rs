//! Weekly transpiration as an SVG line chart.

use std::fmt::Write;

use canopyflux::sapflow::WeeklyTranspiration;
use canopyflux::{Error, IsoWeek, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Runs of consecutive observed weeks. A gap value or a missing week ends
/// a run.
pub fn segments(series: &WeeklyTranspiration) -> Vec<Vec<(IsoWeek, f64)>> {
    let mut out: Vec<Vec<(IsoWeek, f64)>> = Vec::new();
    let mut prev: Option<IsoWeek> = None;
    for v in &series.values {
        match v.transpiration {
            Some(t) => {
                let extends = prev.is_some_and(|p| p.succ() == v.key);
                match out.last_mut() {
                    Some(run) if extends => run.push((v.key, t)),
                    _ => out.push(vec![(v.key, t)]),
                }
                prev = Some(v.key);
            }
            None => prev = None,
        }
    }
    out
}

pub fn render_svg(series: &WeeklyTranspiration) -> Result<String> {
    let runs = segments(series);
    if runs.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no observed weeks to plot for site `{}`",
            series.site_id
        )));
    }
    let first = series.values.first().expect("non-empty").key;
    let last = series.values.last().expect("non-empty").key;
    let span = last.weeks_since(first).max(1) as f64;
    let y_max = runs
        .iter()
        .flatten()
        .map(|&(_, t)| t)
        .fold(0.0_f64, f64::max);
    let y_top = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |w: IsoWeek| LEFT + plot_w * w.weeks_since(first) as f64 / span;
    let py = |t: f64| TOP + plot_h * (1.0 - t / y_top);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">Canopy transpiration, site {}</text>"#,
        WIDTH / 2.0,
        escape(&series.site_id)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);

    for frac in [0.0, 0.5, 1.0] {
        let t = y_top * frac;
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{t:.2}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    for w in [first, last] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{w}</text>"#,
            px(w),
            y1 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">ISO week</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Transpiration (mm day⁻¹)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for run in &runs {
        let pts: Vec<String> = run
            .iter()
            .map(|&(w, t)| format!("{:.2},{:.2}", px(w), py(t)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
