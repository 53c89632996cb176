//! Self-contained SVG heatmap emitter: one rect per grid cell, a fixed
//! viridis-like 8-stop color ramp over [0, 1], log-scaled axes with decade
//! ticks, and a color legend. No plotting dependency.

use std::fmt::Write;

/// Fixed 8-stop ramp (dark violet to yellow).
const RAMP: [(u8, u8, u8); 8] = [
    (68, 1, 84),
    (70, 50, 126),
    (54, 92, 141),
    (39, 127, 142),
    (31, 161, 135),
    (74, 193, 109),
    (160, 218, 57),
    (253, 231, 37),
];

/// Linear interpolation across the ramp; input clamped to [0, 1].
pub fn ramp_color(v: f64) -> String {
    let t = v.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let mix = |a: u8, b: u8| -> u8 { (a as f64 + (b as f64 - a as f64) * f).round() as u8 };
    let (r0, g0, b0) = RAMP[i];
    let (r1, g1, b1) = RAMP[i + 1];
    format!("#{:02x}{:02x}{:02x}", mix(r0, r1), mix(g0, g1), mix(b0, b1))
}

const PLOT_X: f64 = 80.0;
const PLOT_Y: f64 = 45.0;
const PLOT_W: f64 = 520.0;
const PLOT_H: f64 = 400.0;

/// Renders a heatmap of `value(i, j)` over log-spaced `xs` x `ys` grids.
/// Row j = 0 sits at the bottom; values map through the ramp over [0, 1].
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    value: impl Fn(usize, usize) -> f64,
) -> String {
    let nx = xs.len();
    let ny = ys.len();
    let cw = PLOT_W / nx as f64;
    let ch = PLOT_H / ny as f64;
    let width = PLOT_X + PLOT_W + 120.0;
    let height = PLOT_Y + PLOT_H + 65.0;

    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = write!(
        out,
        r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/><text x="{:.1}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        PLOT_X + PLOT_W / 2.0
    );

    for (i, _) in xs.iter().enumerate() {
        for (j, _) in ys.iter().enumerate() {
            let x = PLOT_X + i as f64 * cw;
            // j = 0 at the bottom of the plot area.
            let y = PLOT_Y + PLOT_H - (j + 1) as f64 * ch;
            let color = ramp_color(value(i, j));
            let _ = write!(
                out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }

    let _ = write!(
        out,
        r#"<rect x="{PLOT_X:.1}" y="{PLOT_Y:.1}" width="{PLOT_W:.1}" height="{PLOT_H:.1}" fill="none" stroke="black" stroke-width="1"/>"#
    );

    // Decade ticks along each axis.
    for (i, &v) in xs.iter().enumerate() {
        if !near_decade(v) {
            continue;
        }
        let x = PLOT_X + (i as f64 + 0.5) * cw;
        let _ = write!(
            out,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            PLOT_Y + PLOT_H,
            PLOT_Y + PLOT_H + 5.0,
            PLOT_Y + PLOT_H + 18.0,
            decade_label(v)
        );
    }
    for (j, &v) in ys.iter().enumerate() {
        if !near_decade(v) {
            continue;
        }
        let y = PLOT_Y + PLOT_H - (j as f64 + 0.5) * ch;
        let _ = write!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{PLOT_X:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            PLOT_X - 5.0,
            PLOT_X - 8.0,
            y + 4.0,
            decade_label(v)
        );
    }
    let _ = write!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{x_label}</text>"#,
        PLOT_X + PLOT_W / 2.0,
        PLOT_Y + PLOT_H + 45.0
    );
    let _ = write!(
        out,
        r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{y_label}</text>"#,
        PLOT_Y + PLOT_H / 2.0,
        PLOT_Y + PLOT_H / 2.0
    );

    // Color legend: stacked ramp segments with 0/1 labels.
    let legend_x = PLOT_X + PLOT_W + 30.0;
    let segments = 64;
    let seg_h = PLOT_H / segments as f64;
    for s in 0..segments {
        let v = (s as f64 + 0.5) / segments as f64;
        let y = PLOT_Y + PLOT_H - (s + 1) as f64 * seg_h;
        let _ = write!(
            out,
            r#"<rect x="{legend_x:.1}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            seg_h + 0.05,
            ramp_color(v)
        );
    }
    let _ = write!(
        out,
        r#"<rect x="{legend_x:.1}" y="{PLOT_Y:.1}" width="18" height="{PLOT_H:.1}" fill="none" stroke="black" stroke-width="0.5"/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">1</text><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">0</text>"#,
        legend_x + 24.0,
        PLOT_Y + 10.0,
        legend_x + 24.0,
        PLOT_Y + PLOT_H
    );

    out.push_str("</svg>\n");
    out
}

fn near_decade(v: f64) -> bool {
    let l = v.log10();
    (l - l.round()).abs() < 1e-9
}

fn decade_label(v: f64) -> String {
    format!("1e{}", v.log10().round() as i32)
}
