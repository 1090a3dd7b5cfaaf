//! Deterministic text artifacts: JSON, CSV and SVG writers.
//!
//! Every float is formatted with 17 significant digits so repeated runs
//! with the same inputs produce byte-identical files and readers recover
//! the exact binary value.

use std::fmt::Write as _;

/// Decimal representation with 17 significant digits (lossless for f64).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

/// JSON value for a float: non-finite values have no JSON number, so they
/// are emitted as strings.
pub fn json_f64(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        format!("\"{}\"", fmt_f64(x))
    }
}

pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn json_f64_array(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| json_f64(x)).collect();
    format!("[{}]", items.join(","))
}

pub fn json_usize_array(xs: &[usize]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

/// Line plot written as a free-standing SVG: axes, polyline, min/max labels.
pub fn svg_line_plot(title: &str, xs: &[f64], ys: &[f64], x_label: &str, y_label: &str) -> String {
    assert_eq!(xs.len(), ys.len());
    let (w, h) = (800.0, 500.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&x, &y) in xs.iter().zip(ys) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| mt + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut points = String::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let _ = write!(points, "{:.2},{:.2} ", px(x), py(y));
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "  <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"24\" font-family=\"monospace\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        w / 2.0,
        title
    );
    // axes
    let _ = writeln!(
        s,
        "  <line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(s, "  <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>", h - mb);
    // range labels
    let _ = writeln!(
        s,
        "  <text x=\"{ml}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">{}</text>",
        h - mb + 16.0,
        fmt_f64(x0)
    );
    let _ = writeln!(
        s,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        w - mr,
        h - mb + 16.0,
        fmt_f64(x1)
    );
    let _ = writeln!(
        s,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        ml - 4.0,
        h - mb,
        fmt_f64(y0)
    );
    let _ = writeln!(
        s,
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>",
        ml - 4.0,
        mt + 12.0,
        fmt_f64(y1)
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.1}\" y=\"{}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        ml + pw / 2.0,
        h - 12.0,
        x_label
    );
    let _ = writeln!(
        s,
        "  <text x=\"16\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0,
        y_label
    );
    let _ = writeln!(
        s,
        "  <polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>",
        points.trim_end()
    );
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_round_trips_exactly() {
        for &x in &[
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1.0 / 3.0,
            1e-300,
            -2.2250738585072014e-308,
            9.663676416e9,
            f64::MAX,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn escapes_control_characters() {
        assert_eq!(json_escape("a\"b\\c\n"), "\"a\\\"b\\\\c\\n\"");
    }
}
