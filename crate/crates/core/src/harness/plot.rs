//! Static SVG line charts and regime maps.

use std::fmt::Write;

use crate::model::RegimeTag;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

#[derive(Clone, Copy)]
pub struct Axes {
    pub x_log: bool,
    pub y_log: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        let f = if self.hi > self.lo { (v - self.lo) / (self.hi - self.lo) } else { 0.5 };
        self.from + f * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            let step = ((b - a) / 8).max(1);
            (a..=b)
                .step_by(step as usize)
                .filter(|e| (*e as f64) >= self.lo - 1e-9 && (*e as f64) <= self.hi + 1e-9)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect()
        } else {
            (0..=4)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

fn scale(values: impl Iterator<Item = f64>, log: bool, from: f64, to: f64) -> Scale {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        let v = if log { v.log10() } else { v };
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    Scale { lo, hi, log, from, to }
}

fn usable(p: &(f64, f64), axes: Axes) -> bool {
    p.0.is_finite() && p.1.is_finite() && (!axes.x_log || p.0 > 0.0) && (!axes.y_log || p.1 > 0.0)
}

/// Line chart; points that cannot be drawn on a log axis are dropped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], axes: Axes) -> String {
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().copied().filter(|p| usable(p, axes)).collect())
        .collect();
    let xs = scale(pts.iter().flatten().map(|p| p.0), axes.x_log, LEFT, WIDTH - RIGHT);
    let ys = scale(pts.iter().flatten().map(|p| p.1), axes.y_log, HEIGHT - BOTTOM, TOP);

    let mut svg = header(title);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for (v, label) in xs.ticks() {
        let x = xs.map(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"#,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 5.0,
            HEIGHT - BOTTOM + 18.0
        );
    }
    for (v, label) in ys.ticks() {
        let y = ys.map(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    axis_labels(&mut svg, x_label, y_label);
    for (i, (s, p)) in series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if p.len() > 1 {
            let path: Vec<String> = p
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", xs.map(x), ys.map(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        } else if let Some(&(x, y)) = p.first() {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, xs.map(x), ys.map(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn header(title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    svg
}

fn axis_labels(svg: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn tag_color(tag: RegimeTag) -> &'static str {
    match tag {
        RegimeTag::Parabolic => "#9ecae1",
        RegimeTag::Hyperbolic => "#fc9272",
        RegimeTag::NoMansLand => "#d9d9d9",
        RegimeTag::NoTheory => "#ffffff",
    }
}

/// Regime map over a `(gamma, p)` lattice: one cell per lattice point, with
/// the threshold curve `p_gamma` drawn when given.
pub fn regime_map(gammas: &[f64], ps: &[f64], tags: &[Vec<RegimeTag>], threshold: &[(f64, f64)]) -> String {
    let mut svg = header("regime map");
    let xs = scale(gammas.iter().copied(), false, LEFT, WIDTH - RIGHT);
    let ys = scale(ps.iter().copied(), false, HEIGHT - BOTTOM, TOP);
    let half = |v: &[f64], i: usize| -> (f64, f64) {
        let lo = if i == 0 { v[0] } else { 0.5 * (v[i - 1] + v[i]) };
        let hi = if i + 1 == v.len() { v[i] } else { 0.5 * (v[i] + v[i + 1]) };
        (lo, hi)
    };
    for (i, row) in tags.iter().enumerate() {
        let (g0, g1) = half(gammas, i);
        let (x0, x1) = (xs.map(g0), xs.map(g1));
        for (j, tag) in row.iter().enumerate() {
            let (p0, p1) = half(ps, j);
            let (y0, y1) = (ys.map(p1), ys.map(p0));
            let _ = writeln!(
                svg,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="{}" stroke-width="0.3"/>"#,
                (x1 - x0).max(1.0),
                (y1 - y0).max(1.0),
                tag_color(*tag),
                tag_color(*tag)
            );
        }
    }
    let pts: Vec<(f64, f64)> = threshold
        .iter()
        .filter(|(g, p)| g.is_finite() && p.is_finite())
        .copied()
        .collect();
    if pts.len() > 1 {
        let path: Vec<String> = pts
            .iter()
            .map(|&(g, p)| format!("{:.2},{:.2}", xs.map(g), ys.map(p)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="black" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for (v, label) in xs.ticks() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{label}</text>"#,
            xs.map(v),
            HEIGHT - BOTTOM + 18.0
        );
    }
    for (v, label) in ys.ticks() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#,
            LEFT - 8.0,
            ys.map(v) + 4.0
        );
    }
    axis_labels(&mut svg, "gamma", "p");
    for (i, tag) in [
        RegimeTag::Parabolic,
        RegimeTag::NoMansLand,
        RegimeTag::Hyperbolic,
        RegimeTag::NoTheory,
    ]
    .iter()
    .enumerate()
    {
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="10" fill="{}" stroke="black" stroke-width="0.5"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            ly - 6.0,
            tag_color(*tag),
            lx + 20.0,
            ly + 4.0,
            tag.as_str()
        );
    }
    svg.push_str("</svg>\n");
    svg
}
