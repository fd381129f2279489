//! SVG 1.1 figures, written as plain text.
//!
//! Coordinates are printed with two decimals so identical inputs produce
//! identical bytes.

use std::fmt::Write as _;

use crate::fisher::ZSummary;
use crate::pplot::PValuePlot;
use crate::tails::{self, GaussianSpec, TailError};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 4] = ["#c0392b", "#2c3e50", "#27ae60", "#8e44ad"];

/// Linear map from data space to the plotting area.
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

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, frame: &Frame, x_ticks: &[f64], y_ticks: &[f64], x_label: &str, y_label: &str) {
    let (bx, by) = (frame.px(frame.x0), frame.py(frame.y0));
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{bx:.2}" y1="{by:.2}" x2="{:.2}" y2="{by:.2}"/><line x1="{bx:.2}" y1="{by:.2}" x2="{bx:.2}" y2="{:.2}"/></g>"#,
        frame.px(frame.x1),
        frame.py(frame.y1)
    );
    for &t in x_ticks {
        let x = frame.px(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{by:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            by + 5.0,
            by + 19.0,
            tick_label(t)
        );
    }
    for &t in y_ticks {
        let y = frame.py(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{bx:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            bx - 5.0,
            bx - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (frame.px(frame.x0) + frame.px(frame.x1)) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let cy = (frame.py(frame.y0) + frame.py(frame.y1)) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 20 {cy:.2})">{}</text>"#,
        escape(y_label)
    );
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn integer_ticks(n: usize) -> Vec<f64> {
    let step = n.div_ceil(10).max(1);
    let mut ticks = vec![1.0];
    let mut t = step;
    while t <= n {
        if t > 1 {
            ticks.push(t as f64);
        }
        t += step;
    }
    ticks
}

/// Rank-ordered p-values with the null reference line and the alpha line.
pub fn render_svg_pplot(plot: &PValuePlot) -> String {
    assert!(!plot.is_empty(), "p-value plot has no points");
    let n = plot.len();
    let nf = n as f64;
    let frame = Frame { x0: 0.0, x1: nf + 1.0, y0: 0.0, y1: 1.0 };
    let d = &plot.diagnostics;
    let mut svg = String::new();
    open(&mut svg, &format!("Rank-ordered p-values: {} (n = {n})", plot.class));
    axes(&mut svg, &frame, &integer_ticks(n), &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0], "Rank", "p-value");

    // uniform expectation: p_(i) = i / (n + 1)
    let _ = writeln!(
        svg,
        r##"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#7f8c8d" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
        frame.px(1.0),
        frame.py(1.0 / (nf + 1.0)),
        frame.px(nf),
        frame.py(nf / (nf + 1.0))
    );
    let alpha = d.alpha.value();
    let _ = writeln!(
        svg,
        r##"<line class="alpha" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1" stroke-dasharray="2 3"/>"##,
        frame.px(0.0),
        frame.py(alpha),
        frame.px(nf + 1.0),
        frame.py(alpha)
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#c0392b">p = {}</text>"##,
        frame.px(nf + 1.0) - 4.0,
        frame.py(alpha) - 4.0,
        tick_label(alpha)
    );

    svg.push_str("<g class=\"points\" fill=\"#2c3e50\">\n");
    for pt in &plot.points {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4"/>"#,
            frame.px(pt.rank as f64),
            frame.py(pt.p.value())
        );
    }
    svg.push_str("</g>\n");

    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="11">KS D = {:.4}, KS p = {:.4}, slope = {:.3}, frac(p &lt; {}) = {:.3}: {}</text>"#,
        LEFT + 6.0,
        TOP + 12.0,
        d.ks_statistic,
        d.ks_p.value(),
        d.slope_fit,
        tick_label(alpha),
        d.frac_below_alpha.value(),
        d.classification.label()
    );
    svg.push_str("</svg>\n");
    svg
}

const CURVE_POINTS: usize = 241;

/// Overlaid Normal densities with a legend.
pub fn render_svg_gaussians(specs: &[GaussianSpec], lo: f64, hi: f64) -> Result<String, TailError> {
    assert!((1..=4).contains(&specs.len()), "between one and four curves");
    let curves =
        specs.iter().map(|s| tails::curve_points(s, lo, hi, CURVE_POINTS)).collect::<Result<Vec<_>, _>>()?;
    let peak = curves.iter().flatten().map(|&(_, d)| d).fold(0.0_f64, f64::max);
    let y1 = (peak * 1.1 * 10.0).ceil() / 10.0;
    let frame = Frame { x0: lo, x1: hi, y0: 0.0, y1 };

    let mut svg = String::new();
    open(&mut svg, "Normal distributions");
    let x_ticks: Vec<f64> = (lo.ceil() as i64..=hi.floor() as i64).map(|t| t as f64).collect();
    let y_ticks: Vec<f64> = (0..=((y1 * 10.0).round() as i64)).map(|t| t as f64 / 10.0).collect();
    axes(&mut svg, &frame, &x_ticks, &y_ticks, "SD relative to reference", "Density");

    for (i, (spec, curve)) in specs.iter().zip(&curves).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for (j, &(x, dens)) in curve.iter().enumerate() {
            let _ =
                write!(path, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, frame.px(x), frame.py(dens));
        }
        let _ = writeln!(
            svg,
            r#"<path class="curve" d="{path}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{} (mu = {}, sigma = {})</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&spec.label),
            spec.mu,
            spec.sigma
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Histogram and box-and-whisker panel per class, stacked vertically.
pub fn render_svg_zpanel(summaries: &[ZSummary]) -> String {
    let rows = summaries.len().max(1) as f64;
    let panel_h = 150.0;
    let height = TOP + rows * panel_h + 20.0;
    let lo = summaries.iter().flat_map(|z| z.histogram.first()).map(|b| b.lo).fold(f64::INFINITY, f64::min);
    let hi =
        summaries.iter().flat_map(|z| z.histogram.last()).map(|b| b.hi).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (-1.0, 1.0) };
    let hist_w = 330.0;
    let sx = |x: f64| LEFT + (x - lo) / (hi - lo) * hist_w;
    let box_x0 = LEFT + hist_w + 40.0;
    let box_w = WIDTH - RIGHT - box_x0;
    let bx = |x: f64| box_x0 + (x - lo) / (hi - lo) * box_w;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height:.0}" viewBox="0 0 {WIDTH} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">Z statistics</text>"#,
        WIDTH / 2.0
    );

    for (row, z) in summaries.iter().enumerate() {
        let base = TOP + (row as f64 + 1.0) * panel_h - 30.0;
        let max_count = z.histogram.iter().map(|b| b.count).max().unwrap_or(1).max(1) as f64;
        let _ = writeln!(svg, r#"<text x="10" y="{:.2}">{}</text>"#, base - panel_h / 2.0 + 20.0, z.class);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black"/>"#,
            sx(lo),
            sx(hi)
        );
        for bin in &z.histogram {
            let h = bin.count as f64 / max_count * (panel_h - 50.0);
            let _ = writeln!(
                svg,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#95a5a6" stroke="#2c3e50"/>"##,
                sx(bin.lo),
                base - h,
                sx(bin.hi) - sx(bin.lo)
            );
        }
        for t in (lo.ceil() as i64..=hi.floor() as i64).map(|t| t as f64) {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                sx(t),
                base + 14.0,
                tick_label(t)
            );
        }
        let mid = base - (panel_h - 50.0) / 2.0;
        let _ = writeln!(
            svg,
            r#"<g stroke="black" fill="none"><line x1="{:.2}" y1="{mid:.2}" x2="{:.2}" y2="{mid:.2}"/><rect x="{:.2}" y="{:.2}" width="{:.2}" height="30"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke-width="2"/></g>"#,
            bx(z.min),
            bx(z.max),
            bx(z.q1),
            mid - 15.0,
            bx(z.q3) - bx(z.q1),
            bx(z.median),
            mid - 15.0,
            bx(z.median),
            mid + 15.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{box_x0:.2}" y="{:.2}" font-size="10">min {:.2}  q1 {:.2}  median {:.2}</text><text x="{box_x0:.2}" y="{:.2}" font-size="10">q3 {:.2}  max {:.2}</text>"#,
            base + 14.0,
            z.min,
            z.q1,
            z.median,
            base + 27.0,
            z.q3,
            z.max
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CorrelationClass;
    use crate::numeric::Probability;
    use crate::pplot::{build_plot, ClassifyRules};
    use crate::tails::SpecPair;

    fn plot() -> PValuePlot {
        let p: Vec<Probability> =
            [0.8, 0.2, 0.6, 0.4].iter().map(|&v| Probability::new(v).unwrap()).collect();
        build_plot(CorrelationClass::Icc, &p, Probability::new(0.05).unwrap(), &ClassifyRules::default())
            .unwrap()
    }

    #[test]
    fn pplot_structure() {
        let svg = render_svg_pplot(&plot());
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains(r#"class="reference""#));
        assert!(svg.contains(r#"class="alpha""#));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg, render_svg_pplot(&plot()));
    }

    #[test]
    fn gaussian_overlay() {
        let g = SpecPair::g();
        let svg = render_svg_gaussians(&[g.other.clone(), g.reference.clone()], -4.0, 4.0).unwrap();
        assert_eq!(svg.matches(r#"class="curve""#).count(), 2);
        assert!(svg.contains("females (mu = -0.262, sigma = 0.916)"));
        assert!(render_svg_gaussians(&[g.other], 1.0, -1.0).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let s = GaussianSpec::new("a<b & c", 0.0, 1.0).unwrap();
        let svg = render_svg_gaussians(&[s], -3.0, 3.0).unwrap();
        assert!(svg.contains("a&lt;b &amp; c"));
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(0.05), "0.05");
        assert_eq!(tick_label(1.0), "1");
        assert_eq!(tick_label(-0.0), "0");
        assert_eq!(integer_ticks(27), vec![1.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0]);
    }
}
