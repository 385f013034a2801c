//! Opinion-versus-time plots for one-dimensional runs.

use std::fmt::Write as _;
use std::io::Write;

use hkd_core::Trajectory;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub x_color: String,
    pub y_color: String,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 800.0,
            height: 500.0,
            title: String::new(),
            x_color: "#1f77b4".into(),
            y_color: "#d62728".into(),
        }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one polyline per agent: population X solid, Y dashed.
pub fn render_svg(traj: &Trajectory, opts: &SvgOptions) -> Result<String> {
    let layout = traj.layout;
    if layout.dim != 1 {
        return Err(Error::config(format!(
            "SVG plots need one-dimensional opinions, this run has d = {}; export CSV instead",
            layout.dim
        )));
    }
    let (t0, t1) = (traj.times()[0], traj.t_end());
    let (mut lo, mut hi) = traj
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let plot_w = opts.width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = opts.height - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |t: f64| MARGIN_LEFT + (t - t0) / span_t * plot_w;
    let py = |v: f64| MARGIN_TOP + (hi - v) / (hi - lo) * plot_h;

    let mut s = String::new();
    let (w, h) = (opts.width, opts.height);
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    if !opts.title.is_empty() {
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, escape(&opts.title))
            .unwrap();
    }
    let (x0, x1, y0, y1) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_TOP, MARGIN_TOP + plot_h);
    writeln!(s, r#"<g stroke="black" stroke-width="1">"#).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}"/>"#).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#).unwrap();
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<g font-size="12">"#).unwrap();
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let t = t0 + f * span_t;
        let v = lo + f * (hi - lo);
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t:.3}</text>"#, px(t), y1 + 18.0).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, py(v) + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#, (x0 + x1) / 2.0, h - 10.0).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">opinion</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();
    writeln!(s, "</g>").unwrap();

    let mut line = |column: usize, color: &str, dashed: bool, label: String| {
        let dash = if dashed { r#" stroke-dasharray="6 3""# } else { "" };
        write!(s, r#"<polyline class="{label}" fill="none" stroke="{color}" stroke-width="1"{dash} points=""#).unwrap();
        for (i, (t, values)) in traj.nodes().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{:.2},{:.2}", px(t), py(values[column])).unwrap();
        }
        writeln!(s, r#""/>"#).unwrap();
    };
    for i in 0..layout.n_x {
        line(layout.x_range(i).start, &opts.x_color, false, format!("x x{}", i + 1));
    }
    for j in 0..layout.n_y {
        line(layout.y_range(j).start, &opts.y_color, true, format!("y y{}", j + 1));
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}

pub fn write_svg<W: Write>(mut out: W, traj: &Trajectory, opts: &SvgOptions) -> Result<()> {
    out.write_all(render_svg(traj, opts)?.as_bytes())?;
    Ok(())
}
