//! Plain SVG output. Coordinates are printed with fixed precision so that
//! identical inputs give identical bytes.

use std::fmt::Write as _;

use super::{ResidualGrid, RocCurve, SummaryRow};

const SIZE: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// ROC curves on the unit square with the chance diagonal, one polyline per
/// curve in the given order.
pub fn roc_svg(curves: &[(&str, &RocCurve)]) -> String {
    let mut out = String::new();
    let side = SIZE + 2.0 * PAD;
    header(&mut out, side, side);
    let px = |f: f64| PAD + f * SIZE;
    let py = |t: f64| PAD + (1.0 - t) * SIZE;
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{PAD:.0}" y="{PAD:.0}" width="{SIZE:.0}" height="{SIZE:.0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line class="diagonal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for (k, (label, curve)) in curves.iter().enumerate() {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
            .collect();
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<polyline class="roc" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="{:.0}" font-size="12" fill="{color}">{} (AUC {:.3})</text>"#,
            PAD + SIZE * 0.55,
            PAD + SIZE * 0.75 + 16.0 * k as f64,
            escape(label),
            curve.auc()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.0}" y="{:.0}" font-size="12" text-anchor="middle">false-positive rate</text>"#,
        PAD + SIZE / 2.0,
        side - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.0}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.0})">true-positive rate</text>"#,
        PAD + SIZE / 2.0,
        PAD + SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}

/// White to dark red as `v` goes from 0 to `max`.
fn shade(v: f64, max: f64) -> String {
    let f = if max > 0.0 {
        (v / max).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let g = (255.0 * (1.0 - f)).round() as u8;
    let r = (255.0 - 100.0 * f).round() as u8;
    format!("#{r:02x}{g:02x}{g:02x}")
}

fn legend(out: &mut String, x: f64, y: f64, max: f64) {
    let steps = 5;
    for k in 0..steps {
        let v = max * k as f64 / (steps - 1) as f64;
        let yy = y + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect class="legend" x="{x:.0}" y="{yy:.0}" width="14" height="14" fill="{}" stroke="gray"/>"#,
            shade(v, max)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.0}" y="{:.0}" font-size="11">{v:.3}</text>"#,
            x + 20.0,
            yy + 11.0
        );
    }
}

/// Map of median absolute residual per spatial column, one shaded `cell`
/// rectangle per column of `grid`, north up.
pub fn residual_map_svg(grid: &ResidualGrid, by_location: &[SummaryRow]) -> String {
    let mut out = String::new();
    let cell = (SIZE / grid.nx.max(grid.ny) as f64).floor().max(1.0);
    let (w, h) = (grid.nx as f64 * cell, grid.ny as f64 * cell);
    header(&mut out, w + 2.0 * PAD + 90.0, h + 2.0 * PAD);
    let max = by_location
        .iter()
        .map(|r| r.median_abs)
        .fold(0.0f64, f64::max);
    for row in by_location {
        let Some((ix, iy)) = row
            .key
            .split_once(',')
            .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        else {
            continue;
        };
        let x = PAD + ix as f64 * cell;
        let y = PAD + (grid.ny - 1 - iy) as f64 * cell;
        let _ = writeln!(
            out,
            r#"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}" stroke="white" stroke-width="0.5"><title>{} median |r| {:.4}</title></rect>"#,
            shade(row.median_abs, max),
            row.key,
            row.median_abs
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD:.0}" y="{:.0}" font-size="12">median |residual| per cell</text>"#,
        PAD - 15.0
    );
    legend(&mut out, PAD + w + 20.0, PAD, max);
    out.push_str("</svg>\n");
    out
}

/// Bar chart of median absolute residual by month.
pub fn monthly_svg(by_month: &[SummaryRow]) -> String {
    let mut out = String::new();
    let (w, h) = (SIZE + 2.0 * PAD, 250.0 + 2.0 * PAD);
    header(&mut out, w, h);
    let max = by_month.iter().map(|r| r.median_abs).fold(0.0f64, f64::max);
    let bar = SIZE / 12.0;
    for row in by_month {
        let Ok(m) = row.key.parse::<usize>() else {
            continue;
        };
        let bh = if max > 0.0 {
            250.0 * row.median_abs / max
        } else {
            0.0
        };
        let x = PAD + (m.saturating_sub(1)) as f64 * bar;
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="#1f77b4"/>"##,
            x + 2.0,
            PAD + 250.0 - bh,
            bar - 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.0}" font-size="11" text-anchor="middle">{m}</text>"#,
            x + bar / 2.0,
            PAD + 265.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD:.0}" y="{:.0}" font-size="12">median |residual| by month (max {max:.3})</text>"#,
        PAD - 15.0
    );
    out.push_str("</svg>\n");
    out
}
