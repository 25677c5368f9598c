//! Standalone SVG histogram of a measurement distribution.

use std::fmt::Write as _;
use std::path::Path;

use crate::quantum::{bitstring, MeasurementDistribution};
use crate::{Error, Result};

const WIDTH: f64 = 1100.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const LABELED_BINS: usize = 8;

/// Indices of the `k` largest bins, largest first (lower index on ties).
pub fn top_bins(probabilities: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probabilities.len()).collect();
    idx.sort_by(|&a, &b| probabilities[b].total_cmp(&probabilities[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// One bar per basis state, scaled so the largest bar spans the plot height.
/// The eight largest bins are labeled with their bitstring (qubit 8 leftmost).
pub fn render_histogram_svg(dist: &MeasurementDistribution, title: &str) -> Result<String> {
    let p = &dist.probabilities;
    if p.is_empty() || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::NotADistribution(p.iter().sum()));
    }
    let max = p.iter().copied().fold(0.0, f64::max);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let bar_w = plot_w / p.len() as f64;
    let base = MARGIN_TOP + plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="#333"/><line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base}" stroke="#333"/>"##,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{max:.4}</text>"#, MARGIN_LEFT - 4.0, MARGIN_TOP + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">0</text>"#, MARGIN_LEFT - 4.0, base + 4.0);
    let _ = writeln!(s, r#"<g fill="steelblue">"#);
    for (i, &v) in p.iter().enumerate() {
        let h = if max > 0.0 { v / max * plot_h } else { 0.0 };
        let _ = writeln!(
            s,
            r#"<rect class="bar" data-index="{i}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
            MARGIN_LEFT + i as f64 * bar_w,
            base - h,
            bar_w,
            h
        );
    }
    let _ = writeln!(s, "</g>");
    if max > 0.0 {
        for i in top_bins(p, LABELED_BINS).into_iter().filter(|&i| p[i] > 0.0) {
            let x = MARGIN_LEFT + (i as f64 + 0.5) * bar_w;
            let y = base - p[i] / max * plot_h - 4.0;
            let _ = writeln!(
                s,
                r#"<text class="label" x="{x:.3}" y="{y:.3}" font-size="9" text-anchor="middle">{}</text>"#,
                bitstring(i)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">basis state (qubit 8 … qubit 0)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_histogram_svg(dist: &MeasurementDistribution, title: &str, path: &Path) -> Result<()> {
    let svg = render_histogram_svg(dist, title)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::STATES;

    fn bars(svg: &str) -> Vec<f64> {
        let doc = roxmltree::Document::parse(svg).unwrap();
        doc.descendants()
            .filter(|n| n.attribute("class") == Some("bar"))
            .map(|n| n.attribute("height").unwrap().parse().unwrap())
            .collect()
    }

    #[test]
    fn uniform_bars_are_equal() {
        let svg = render_histogram_svg(&MeasurementDistribution::uniform(), "uniform").unwrap();
        let h = bars(&svg);
        assert_eq!(h.len(), STATES);
        assert!(h.iter().all(|&v| (v - h[0]).abs() < 1e-9 && v > 0.0));
    }

    #[test]
    fn single_bin_is_full_height() {
        let mut p = vec![0.0; STATES];
        p[300] = 1.0;
        let svg = render_histogram_svg(&MeasurementDistribution::from_probabilities(p), "spike <&>").unwrap();
        let h = bars(&svg);
        assert_eq!(h.iter().filter(|&&v| v > 0.0).count(), 1);
        assert!((h[300] - (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)).abs() < 1e-9);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let labels: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("label")).collect();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].text(), Some("100101100"));
    }

    #[test]
    fn eight_labels_on_largest_bins() {
        let p: Vec<f64> = (0..STATES).map(|i| (i % 37) as f64 + 1.0).collect();
        let total: f64 = p.iter().sum();
        let dist = MeasurementDistribution::from_probabilities(p.iter().map(|v| v / total).collect());
        let svg = render_histogram_svg(&dist, "t").unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("label")).count(), 8);
        assert_eq!(top_bins(&dist.probabilities, 3), vec![36, 73, 110]);
    }

    #[test]
    fn rejects_negative_probabilities() {
        assert!(render_histogram_svg(&MeasurementDistribution::from_probabilities(vec![-1.0, 2.0]), "x").is_err());
    }
}
