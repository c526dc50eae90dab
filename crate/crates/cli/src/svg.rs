//! Minimal SVG heatmaps. Output depends only on the inputs, so files are
//! byte-identical across runs.

use std::fmt::Write;

const PLOT: f64 = 600.0;
const MARGIN: f64 = 50.0;

// viridis anchors
const PALETTE: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    /// `values[row][col]` at `(xs[col], ys[row])`.
    pub values: &'a [Vec<f64>],
    /// Closed polygons in data coordinates, drawn on top.
    pub outlines: &'a [Vec<[f64; 2]>],
}

fn color(t: f64) -> (u8, u8, u8) {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let scaled = t * (PALETTE.len() - 1) as f64;
    let k = (scaled.floor() as usize).min(PALETTE.len() - 2);
    let f = scaled - k as f64;
    let (a, b) = (PALETTE[k], PALETTE[k + 1]);
    let mix = |p: u8, q: u8| (p as f64 + f * (q as f64 - p as f64)).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() > 1 {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    } else {
        1.0
    }
}

pub fn render(map: &Heatmap<'_>) -> String {
    let rows = map.ys.len();
    let cols = map.xs.len();
    let (hx, hy) = (spacing(map.xs), spacing(map.ys));
    let x_lo = map.xs.first().copied().unwrap_or(0.0) - hx / 2.0;
    let y_lo = map.ys.first().copied().unwrap_or(0.0) - hy / 2.0;
    let x_span = hx * cols.max(1) as f64;
    let y_span = hy * rows.max(1) as f64;
    let to_px = |x: f64, y: f64| {
        (
            MARGIN + (x - x_lo) / x_span * PLOT,
            MARGIN + PLOT - (y - y_lo) / y_span * PLOT,
        )
    };

    let finite = map
        .values
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    let range = if hi > lo { hi - lo } else { 1.0 };

    let size = PLOT + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" shape-rendering="crispEdges">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="30" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(map.title)
    );

    let cw = PLOT / cols.max(1) as f64;
    let ch = PLOT / rows.max(1) as f64;
    for (r, row) in map.values.iter().enumerate() {
        let y = MARGIN + PLOT - (r + 1) as f64 * ch;
        // merge runs of equal color into one rectangle
        let mut c = 0;
        while c < row.len() {
            let rgb = color((row[c] - lo) / range);
            let mut end = c + 1;
            while end < row.len() && color((row[end] - lo) / range) == rgb {
                end += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="rgb({},{},{})"/>"#,
                MARGIN + c as f64 * cw,
                y,
                (end - c) as f64 * cw,
                ch,
                rgb.0,
                rgb.1,
                rgb.2
            );
            c = end;
        }
    }

    for outline in map.outlines {
        let points: Vec<String> = outline
            .iter()
            .map(|p| {
                let (px, py) = to_px(p[0], p[1]);
                format!("{px:.3},{py:.3}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="none" stroke="white" stroke-width="1.5"/>"#,
            points.join(" ")
        );
    }

    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            s,
            r#"<text x="{x:.3}" y="{y:.3}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{text}</text>"#
        );
    };
    let bottom = MARGIN + PLOT;
    if let (Some(x0), Some(x1)) = (map.xs.first(), map.xs.last()) {
        label(&mut s, MARGIN, bottom + 18.0, "start", format!("{x0:.3}"));
        label(
            &mut s,
            MARGIN + PLOT,
            bottom + 18.0,
            "end",
            format!("{x1:.3}"),
        );
    }
    if let (Some(y0), Some(y1)) = (map.ys.first(), map.ys.last()) {
        label(&mut s, MARGIN - 6.0, bottom, "end", format!("{y0:.3}"));
        label(
            &mut s,
            MARGIN - 6.0,
            MARGIN + 12.0,
            "end",
            format!("{y1:.3}"),
        );
    }
    if lo.is_finite() {
        label(
            &mut s,
            MARGIN + PLOT,
            30.0,
            "end",
            format!("min {lo:.4} (dark) / max {hi:.4} (light)"),
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_ends() {
        assert_eq!(color(0.0), PALETTE[0]);
        assert_eq!(color(1.0), PALETTE[4]);
        assert_eq!(color(f64::NAN), PALETTE[0]);
    }

    #[test]
    fn runs_are_merged_and_output_is_stable() {
        let values = vec![vec![0.0, 0.0, 1.0], vec![2.0, 2.0, 2.0]];
        let map = Heatmap {
            title: "a < b",
            xs: &[0.0, 1.0, 2.0],
            ys: &[0.0, 1.0],
            values: &values,
            outlines: &[vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]],
        };
        let svg = render(&map);
        assert_eq!(svg, render(&map));
        assert!(svg.contains("a &lt; b"));
        // 2 runs + 1 run, plus the background and frame
        assert_eq!(svg.matches("<rect").count(), 5);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }
}
