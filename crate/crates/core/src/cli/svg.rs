//! Static log-log chart of an error table.

use std::fmt::Write;

use crate::analysis::ErrorTable;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str, dash: bool) {
    let d: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", f.px(*x), f.py(*y))).collect();
    let dash = if dash { " stroke-dasharray=\"6,4\"" } else { "" };
    let _ = writeln!(
        out,
        "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash} points=\"{}\"/>",
        d.join(" ")
    );
}

/// Renders combined, real and imaginary RMS errors against the level on
/// log₂ axes, with the fitted line and its slope.
pub fn render(table: &ErrorTable, predicted: f64, x_label: &str) -> String {
    let xs: Vec<f64> = table.rows.iter().map(|r| r.level.log2()).collect();
    let series: [(&str, &str, Vec<f64>); 3] = [
        ("combined", "#1f4e9c", table.rows.iter().map(|r| r.rms).collect()),
        ("real part", "#c0392b", table.rows.iter().map(|r| r.rms_re).collect()),
        ("imaginary part", "#27864a", table.rows.iter().map(|r| r.rms_im).collect()),
    ];
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.2.iter())
        .filter(|v| **v > 0.0)
        .map(|v| v.log2())
        .collect();
    let (xmin, xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (ymin, ymax) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let f = Frame { x0: xmin.floor() - 0.5, x1: xmax.ceil() + 0.5, y0: ymin.floor() - 0.5, y1: ymax.ceil() + 0.5 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let (bx, by) = (f.px(f.x0), f.py(f.y0));
    let (tx, ty) = (f.px(f.x1), f.py(f.y1));
    let _ = writeln!(
        out,
        "  <rect x=\"{bx:.2}\" y=\"{ty:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        tx - bx,
        by - ty
    );
    for e in (f.x0.ceil() as i32)..=(f.x1.floor() as i32) {
        let x = f.px(e as f64);
        let _ = writeln!(out, "  <line x1=\"{x:.2}\" y1=\"{by:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", by + 5.0);
        let _ = writeln!(out, "  <text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">2^{e}</text>", by + 20.0);
    }
    for e in (f.y0.ceil() as i32)..=(f.y1.floor() as i32) {
        let y = f.py(e as f64);
        let _ = writeln!(out, "  <line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{bx:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>", bx - 5.0);
        let _ = writeln!(out, "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">2^{e}</text>", bx - 8.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>",
        (bx + tx) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        "  <text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">RMS error at T</text>",
        (by + ty) / 2.0,
        (by + ty) / 2.0
    );

    for (i, (name, color, vals)) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = xs.iter().zip(vals).filter(|(_, v)| **v > 0.0).map(|(x, v)| (*x, v.log2())).collect();
        polyline(&mut out, &f, &pts, color, false);
        for (x, y) in &pts {
            let _ = writeln!(out, "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>", f.px(*x), f.py(*y));
        }
        let ly = ty + 18.0 + 16.0 * i as f64;
        let _ = writeln!(out, "  <line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>", tx - 150.0, tx - 125.0);
        let _ = writeln!(out, "  <text x=\"{:.2}\" y=\"{:.2}\">{name}</text>", tx - 120.0, ly + 4.0);
    }
    let fit: Vec<(f64, f64)> = [xmin, xmax].iter().map(|x| (*x, table.intercept + table.slope * x)).collect();
    polyline(&mut out, &f, &fit, "#555555", true);
    let _ = writeln!(
        out,
        "  <text x=\"{:.2}\" y=\"{:.2}\">fitted slope {:.3} ± {:.3} (predicted {})</text>",
        bx + 10.0,
        ty + 18.0,
        table.slope,
        table.slope_ci,
        predicted
    );
    let _ = writeln!(out, "</svg>");
    out
}
