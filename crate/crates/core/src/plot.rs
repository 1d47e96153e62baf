//! Minimal SVG output: line charts and a stability heat map.

use std::fmt::Write as _;

use crate::dynamics::Metric;
use crate::integrate::Trajectory;
use crate::stability::DomainGrid;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Line chart. With `log_y` non-positive values are dropped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let tr = |v: f64| if log_y { v.log10() } else { v };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, tr(y)))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = header(title);
    axes(&mut s);
    let ylab = if log_y { format!("log10 {y_label}") } else { y_label.to_string() };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(&ylab)
    );
    for (v, anchor, x, y) in [
        (x0, "start", PAD, H - PAD + 16.0),
        (x1, "end", W - PAD, H - PAD + 16.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, num(v));
    }
    for (v, y) in [(y0, H - PAD), (y1, PAD)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, PAD - 4.0, num(v));
    }
    for (i, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            W - PAD - 4.0,
            PAD + 16.0 * (i as f64 + 1.0),
            esc(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Log-metric and spectral radius against `t`, side by side in one document.
pub fn trajectory_svg(traj: &Trajectory) -> String {
    let metrics: Vec<Metric> = traj
        .records
        .first()
        .map(|r| r.phi.keys().copied().collect())
        .unwrap_or_default();
    let series: Vec<Series> = metrics
        .iter()
        .map(|m| Series {
            label: m.name().into(),
            points: traj.series_t(*m),
        })
        .collect();
    let rho = Series {
        label: "rho".into(),
        points: traj.records.iter().map(|r| (r.t, r.rho)).collect(),
    };
    let left = line_chart(&traj.meta.dynamics, "t", "phi", &series, true);
    let right = line_chart("spectral radius", "t", "rho", &[rho], false);
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{H}\">\n{}{}</svg>\n",
        2.0 * W,
        nest(&left, 0.0),
        nest(&right, W)
    )
}

/// `|R(z)|` over the grid, clipped at 2; the unit level set is outlined by the colour change.
pub fn stability_heatmap(name: &str, grid: &DomainGrid) -> String {
    let (nx, ny) = (grid.re.len(), grid.im.len());
    let cw = (W - 2.0 * PAD) / nx.max(1) as f64;
    let ch = (H - 2.0 * PAD) / ny.max(1) as f64;
    let mut s = header(&format!("stability domain: {name}"));
    for (j, row) in grid.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let x = PAD + i as f64 * cw;
            let y = H - PAD - (j as f64 + 1.0) * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cw + 0.05,
                ch + 0.05,
                shade(*v)
            );
        }
    }
    axes(&mut s);
    if let (Some(a), Some(b), Some(c), Some(d)) =
        (grid.re.first(), grid.re.last(), grid.im.first(), grid.im.last())
    {
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}">Re {} .. {}</text>"#, H - PAD + 16.0, num(*a), num(*b));
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}">Im {} .. {}</text>"#, H - PAD + 32.0, num(*c), num(*d));
    }
    s.push_str("</svg>\n");
    s
}

fn shade(v: f64) -> String {
    if v <= 1.0 {
        let g = (255.0 * (0.35 + 0.65 * v)) as u8;
        format!("rgb(40,{g},90)")
    } else {
        let q = ((v.min(2.0) - 1.0) * 200.0) as u8;
        format!("rgb(235,{},{})", 235 - q, 235 - q)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        esc(title)
    )
}

fn axes(s: &mut String) {
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
}

fn nest(svg: &str, dx: f64) -> String {
    let body = svg.replacen("<svg ", &format!("<svg x=\"{dx}\" "), 1);
    body
}

fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
