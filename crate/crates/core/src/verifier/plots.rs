//! Static SVG rendering of report figures.

use std::fmt::Write;

use super::report::{Figure, Series};

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub fn render_svg(figure: &Figure) -> String {
    match figure {
        Figure::Lines { name, x_label, y_label, log_log, series } => lines(name, x_label, y_label, *log_log, series),
        Figure::Heatmap { name, x, y, values } => heatmap(name, x, y, values),
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    out.push('\n');
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

fn lines(title: &str, x_label: &str, y_label: &str, log_log: bool, series: &[Series]) -> String {
    let tr = |v: f64| if log_log { v.log10() } else { v };
    let usable = |v: f64| !log_log || v > 0.0;
    let mut out = String::new();
    header(&mut out, title);
    let xs = series.iter().flat_map(|s| s.x.iter().copied()).filter(|&v| usable(v)).map(tr);
    let ys = series.iter().flat_map(|s| s.y.iter().copied()).filter(|&v| usable(v)).map(tr);
    let (Some((x0, x1)), Some((y0, y1))) = (range(xs), range(ys)) else {
        out.push_str("</svg>\n");
        return out;
    };
    let px = |v: f64| PAD + (tr(v) - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (tr(v) - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let scale = if log_log { " (log10)" } else { "" };
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}{scale}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}{scale}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, PAD + (v - x0) / (x1 - x0) * (W - 2.0 * PAD), H - PAD + 16.0);
    }
    for v in [y0, y1] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, PAD - 4.0, H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD));
    }
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .x
            .iter()
            .zip(&s.y)
            .filter(|(&x, &y)| usable(x) && usable(y) && x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD - 150.0,
            PAD + 14.0 * i as f64,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn heatmap(title: &str, x: &[f64], y: &[f64], values: &[f64]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (nx, ny) = (x.len(), y.len());
    if nx == 0 || ny == 0 || values.len() != nx * ny {
        out.push_str("</svg>\n");
        return out;
    }
    let m = values.iter().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs()));
    let cw = (W - 2.0 * PAD) / nx as f64;
    let ch = (H - 2.0 * PAD) / ny as f64;
    for r in 0..ny {
        for c in 0..nx {
            let v = values[r * nx + c];
            let s = if m > 0.0 && v.is_finite() { v / m } else { 0.0 };
            // Diverging map: blue for negative, red for positive.
            let (red, green, blue) = if s >= 0.0 {
                (255.0, 255.0 * (1.0 - s), 255.0 * (1.0 - s))
            } else {
                (255.0 * (1.0 + s), 255.0 * (1.0 + s), 255.0)
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({},{},{})"/>"#,
                PAD + c as f64 * cw,
                H - PAD - (r + 1) as f64 * ch,
                cw + 0.1,
                ch + 0.1,
                red.round(),
                green.round(),
                blue.round()
            );
        }
    }
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}">x: {:.3} … {:.3}</text>"#, H - PAD + 16.0, x[0], x[nx - 1]);
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}">y: {:.3} … {:.3}, |max| = {m:.3e}</text>"#, H - PAD + 32.0, y[0], y[ny - 1]);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_lines_and_heatmaps() {
        let f = Figure::Lines {
            name: "conv <a&b>".into(),
            x_label: "h".into(),
            y_label: "err".into(),
            log_log: true,
            series: vec![Series { label: "max".into(), x: vec![0.1, 0.05, 0.0], y: vec![1e-2, 5e-3, 1e-3] }],
        };
        let s = render_svg(&f);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("&lt;a&amp;b&gt;"));
        assert!(s.contains("<polyline"));
        let h = Figure::Heatmap { name: "r".into(), x: vec![0.0, 1.0], y: vec![0.0], values: vec![-1.0, 2.0] };
        let s = render_svg(&h);
        assert_eq!(s.matches("<rect").count(), 3);
    }
}
