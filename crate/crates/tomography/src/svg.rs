//! Phase-diagram rendering.

use std::fmt::Write;

use tomography_core::sweep::{SuccessGrid, ThresholdCurve};

const CELL_W: f64 = 28.0;
const CELL_H: f64 = 18.0;
const LEFT: f64 = 72.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grayscale map of `P_s` over `d` (columns) and thresholds (rows, first
/// threshold at the bottom), darker meaning more successes, with the
/// threshold curve overlaid as a polyline broken at unreached thresholds.
pub fn render_phase_svg(grid: &SuccessGrid, curve: &ThresholdCurve) -> String {
    let dims = grid.dims();
    let thresholds = grid.axis(curve.metric).map(|a| a.values.clone()).unwrap_or_default();
    let (nx, ny) = (dims.len(), thresholds.len());
    let width = LEFT + CELL_W * nx as f64 + 16.0;
    let height = TOP + CELL_H * ny as f64 + BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="9">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="16" font-size="11">{} ({}, δ={})</text>"#,
        escape(&curve.label),
        curve.metric.as_str(),
        curve.delta
    );
    let y_of = |row: usize| TOP + CELL_H * (ny - 1 - row) as f64;
    for (ix, &d) in dims.iter().enumerate() {
        for row in 0..ny {
            let p = grid.probability(curve.t, d, curve.metric, row).unwrap_or(0.0);
            let v = (255.0 * (1.0 - p)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL_W}" height="{CELL_H}" fill="rgb({v},{v},{v})"><title>d={d} threshold={} p={p}</title></rect>"#,
                LEFT + CELL_W * ix as f64,
                y_of(row),
                thresholds[row]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{d}</text>"#,
            LEFT + CELL_W * (ix as f64 + 0.5),
            TOP + CELL_H * ny as f64 + 12.0
        );
    }
    for (row, t) in thresholds.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            y_of(row) + CELL_H * 0.5 + 3.0,
            format_threshold(*t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">training dimension d</text>"#,
        LEFT + CELL_W * nx as f64 / 2.0,
        height - 6.0
    );

    let mut segment: Vec<(f64, f64)> = vec![];
    let mut segments = vec![];
    for (row, p) in curve.points.iter().enumerate() {
        match p.d_star.and_then(|d| dims.iter().position(|&x| x == d)) {
            Some(ix) => segment.push((LEFT + CELL_W * (ix as f64 + 0.5), y_of(row) + CELL_H * 0.5)),
            None => segments.push(std::mem::take(&mut segment)),
        }
    }
    segments.push(segment);
    for seg in segments.iter().filter(|s| !s.is_empty()) {
        let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x},{y}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="rgb(220,40,40)" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn format_threshold(t: f64) -> String {
    if t != 0.0 && (t.abs() < 1e-2 || t.abs() >= 1e4) {
        format!("{t:.2e}")
    } else {
        format!("{}", (t * 1000.0).round() / 1000.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tomography_core::sweep::{extract_threshold, MetricKind, RunOutcome, SubspaceKind, ThresholdAxis};

    fn outcome(d: usize, run: usize, loss: f64) -> RunOutcome {
        RunOutcome { kind: SubspaceKind::Random, t: 0, d, run, seed: 0, best_loss: loss, best_accuracy: None }
    }

    #[test]
    fn one_cell_gives_one_rect() {
        let axis = ThresholdAxis { metric: MetricKind::Loss, values: vec![0.5] };
        let grid = SuccessGrid::new(vec![3], vec![0], vec![axis], vec![outcome(3, 0, 0.1)]).unwrap();
        let curve = extract_threshold(&grid, MetricKind::Loss, 0.1, 0).unwrap();
        let svg = render_phase_svg(&grid, &curve);
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains("fill=\"rgb(0,0,0)\""));
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(escape(r#"a<b & "c">"#), "a&lt;b &amp; &quot;c&quot;&gt;");
    }

    #[test]
    fn thresholds_print_compactly() {
        assert_eq!(format_threshold(0.5), "0.5");
        assert_eq!(format_threshold(0.123456), "0.123");
        assert_eq!(format_threshold(0.001), "1.00e-3");
        assert_eq!(format_threshold(0.0), "0");
    }
}
