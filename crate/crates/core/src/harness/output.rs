use std::fmt::Write as _;
use std::path::Path;

use super::sweep::SweepRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "state,channel,backend,p,epsilon,f_damped,f_recovered";

/// Fixed-point rendering with 10 significant digits.
pub fn sig10(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    // exponent after rounding to 10 digits, so 0.99999999999 counts as 1
    let sci = format!("{v:.9e}");
    let magnitude: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if !(-5..=9).contains(&magnitude) {
        return sci;
    }
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV text for `records`, in the order given.
pub fn to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&r.state_label),
            r.channel,
            r.backend,
            sig10(r.p),
            r.epsilon.map(sig10).unwrap_or_default(),
            sig10(r.f_damped),
            r.f_recovered.map(sig10).unwrap_or_default(),
        );
    }
    out
}

pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(records)).map_err(|e| Error::io(path, e))
}

/// Marker shapes for the ε series, in order; the damped curve is a black line.
const SERIES: [(&str, &str); 6] = [
    ("red", "triangle"),
    ("blue", "diamond"),
    ("magenta", "square"),
    ("green", "circle"),
    ("orange", "triangle"),
    ("teal", "diamond"),
];

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 42.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn marker(out: &mut String, shape: &str, color: &str, x: f64, y: f64) {
    let r = 4.0;
    let _ = match shape {
        "triangle" => writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            x,
            y - r,
            x - r,
            y + r * 0.8,
            x + r,
            y + r * 0.8
        ),
        "diamond" => writeln!(
            out,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{color}"/>"#,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        ),
        "square" => writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            x - r * 0.8,
            y - r * 0.8,
            r * 1.6,
            r * 1.6
        ),
        _ => writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{color}"/>"#),
    };
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, width: f64) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        coords.join(" ")
    );
}

/// SVG figure with one panel per input state: F against p, the damped curve
/// as a black line and one marker series per ε.
pub fn to_svg(records: &[SweepRecord]) -> String {
    let mut states: Vec<&str> = Vec::new();
    for r in records {
        if !states.contains(&r.state_label.as_str()) {
            states.push(&r.state_label);
        }
    }
    let mut epsilons: Vec<f64> = records.iter().filter_map(|r| r.epsilon).collect();
    epsilons.sort_by(f64::total_cmp);
    epsilons.dedup();

    let cols = states.len().clamp(1, 4);
    let rows = states.len().div_ceil(cols).max(1);
    let legend_h = 28.0;
    let width = PANEL_W * cols as f64;
    let height = PANEL_H * rows as f64 + legend_h;
    let channel = records.first().map(|r| r.channel.name().to_uppercase()).unwrap_or_default();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);

    for (i, state) in states.iter().enumerate() {
        let ox = PANEL_W * (i % cols) as f64;
        let oy = PANEL_H * (i / cols) as f64;
        let pw = PANEL_W - MARGIN_L - MARGIN_R;
        let ph = PANEL_H - MARGIN_T - MARGIN_B;
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.state_label == *state).collect();
        let lowest = rows
            .iter()
            .flat_map(|r| std::iter::once(r.f_damped).chain(r.f_recovered))
            .fold(1.0f64, f64::min);
        let y_min = ((lowest * 10.0).floor() / 10.0).clamp(0.0, 0.9);
        let sx = |p: f64| ox + MARGIN_L + p * pw;
        let sy = |f: f64| oy + MARGIN_T + (1.0 - (f - y_min) / (1.0 - y_min)) * ph;

        let _ = writeln!(out, r#"<g class="panel" id="panel-{i}">"#);
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#,
            ox + MARGIN_L,
            oy + MARGIN_T
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{} ({channel})</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + MARGIN_T - 10.0,
            escape(state)
        );
        for k in 0..=4 {
            let p = k as f64 / 4.0;
            let f = y_min + (1.0 - y_min) * k as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{p:.2}</text>"#,
                sx(p),
                oy + MARGIN_T + ph + 15.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{f:.2}</text>"#,
                ox + MARGIN_L - 5.0,
                sy(f) + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">p</text>"#,
            ox + MARGIN_L + pw / 2.0,
            oy + PANEL_H - 8.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">F</text>"#,
            ox + 14.0,
            oy + MARGIN_T + ph / 2.0,
            ox + 14.0,
            oy + MARGIN_T + ph / 2.0
        );

        let damped: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.epsilon.is_none())
            .map(|r| (sx(r.p), sy(r.f_damped)))
            .collect();
        polyline(&mut out, &damped, "black", 1.5);
        for (e, eps) in epsilons.iter().enumerate() {
            let (color, shape) = SERIES[e % SERIES.len()];
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.epsilon == Some(*eps))
                .filter_map(|r| r.f_recovered.map(|f| (sx(r.p), sy(f))))
                .collect();
            polyline(&mut out, &pts, color, 0.8);
            for (x, y) in pts {
                marker(&mut out, shape, color, x, y);
            }
        }
        let _ = writeln!(out, "</g>");
    }

    // legend
    let ly = height - legend_h / 2.0;
    let mut lx = 20.0;
    let _ = writeln!(
        out,
        r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="black" stroke-width="1.5"/>"#,
        lx + 20.0
    );
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">damped</text>"#, lx + 25.0, ly + 4.0);
    lx += 90.0;
    for (e, eps) in epsilons.iter().enumerate() {
        let (color, shape) = SERIES[e % SERIES.len()];
        marker(&mut out, shape, color, lx + 6.0, ly);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">recovered, ε = {eps}</text>"#, lx + 16.0, ly + 4.0);
        lx += 140.0;
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_plot(records: &[SweepRecord], path: &Path) -> Result<()> {
    std::fs::write(path, to_svg(records)).map_err(|e| Error::io(path, e))
}
