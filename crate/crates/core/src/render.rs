//! Standalone SVG charts.
//!
//! Every renderer is a pure function of its inputs and a [`ChartStyle`];
//! coordinates are printed with two decimals so output is byte-stable.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: f64 = 800.0;
pub const DEFAULT_HEIGHT: f64 = 600.0;
pub const DEFAULT_MARGIN: f64 = 50.0;
pub const DEFAULT_FONT: &str = "Helvetica, Arial, sans-serif";
/// Tableau-10.
pub const DEFAULT_PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];
/// Neutrality line colour in time-series panels.
pub const ZERO_LINE_COLOR: &str = "#ff7f0e";

pub const WORDCLOUD_MIN_FONT: f64 = 12.0;
pub const WORDCLOUD_MAX_FONT: f64 = 48.0;
const WORDCLOUD_PAD: f64 = 0.5;
const SPIRAL_STEP: f64 = 0.05;
const SPIRAL_GROWTH: f64 = 2.0;
const SPIRAL_MAX_STEPS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ChartStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub font_family: String,
    pub palette: Vec<String>,
}

impl Default for ChartStyle {
    fn default() -> Self {
        ChartStyle {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            margin: DEFAULT_MARGIN,
            font_family: DEFAULT_FONT.to_string(),
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl ChartStyle {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.width, self.height, self.margin]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || self.margin < 0.0
            || self.width <= 2.0 * self.margin
            || self.height <= 2.0 * self.margin
        {
            return Err(Error::Argument(
                "chart width and height must exceed twice the margin".into(),
            ));
        }
        if self.palette.is_empty() {
            return Err(Error::Argument("chart palette is empty".into()));
        }
        Ok(())
    }

    fn color(&self, i: usize) -> &str {
        &self.palette[i % self.palette.len()]
    }

    fn plot_width(&self) -> f64 {
        self.width - 2.0 * self.margin
    }

    fn plot_height(&self) -> f64 {
        self.height - 2.0 * self.margin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub label: String,
    pub points: Vec<(i64, f64)>,
}

impl LabeledSeries {
    pub fn new(label: impl Into<String>, points: Vec<(i64, f64)>) -> Result<Self> {
        let s = LabeledSeries {
            label: label.into(),
            points,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Argument(format!(
                "series {:?}: indices must be strictly increasing",
                self.label
            )));
        }
        Ok(())
    }
}

/// Two-decimal rendering without a negative zero.
fn num(v: f64) -> String {
    let r = round2(v);
    if r == 0.0 {
        "0".to_string()
    } else {
        let s = format!("{r:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0 + 0.0
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Comments may not contain `--`.
fn comment_safe(s: &str) -> String {
    let mut out = escape_xml(s);
    while out.contains("--") {
        out = out.replace("--", "- -");
    }
    out
}

fn open_svg(style: &ChartStyle, title: &str) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"{f}\">",
        w = num(style.width),
        h = num(style.height),
        f = escape_xml(&style.font_family)
    );
    let _ = writeln!(s, "<title>{}</title>", escape_xml(title));
    let _ = writeln!(
        s,
        "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        num(style.width),
        num(style.height)
    );
    s
}

fn close_svg(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

fn text(s: &mut String, class: &str, x: f64, y: f64, anchor: &str, size: f64, body: &str) {
    let _ = writeln!(
        s,
        "<text class=\"{class}\" x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"{}\">{}</text>",
        num(x),
        num(y),
        num(size),
        escape_xml(body)
    );
}

fn line(s: &mut String, class: &str, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
    let _ = writeln!(
        s,
        "<line class=\"{class}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>",
        num(x1),
        num(y1),
        num(x2),
        num(y2),
        num(width)
    );
}

/// Linear map of `v` from `[lo, hi]` onto `[a, b]`.
fn lerp(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

/// Radar chart: axis `i` at angle `2πi/N` clockwise from 12 o'clock.
pub fn render_radar(values: &[(String, f64)], style: &ChartStyle) -> Result<String> {
    style.validate()?;
    if values.len() < 3 {
        return Err(Error::Argument(format!(
            "radar chart needs at least 3 labels, got {}",
            values.len()
        )));
    }
    if let Some((label, v)) = values.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Argument(format!(
            "radar value for {label:?} must be finite and >= 0, got {v}"
        )));
    }
    let n = values.len();
    let cx = style.width / 2.0;
    let cy = style.height / 2.0;
    let radius = style.plot_width().min(style.plot_height()) / 2.0;
    let max = values.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let angle = |i: usize| 2.0 * PI * i as f64 / n as f64;
    let at = |i: usize, r: f64| (cx + r * angle(i).sin(), cy - r * angle(i).cos());

    let mut s = open_svg(style, "Radar chart");
    for ring in 1..=4 {
        let r = radius * ring as f64 / 4.0;
        let pts: Vec<String> = (0..n)
            .map(|i| at(i, r))
            .map(|(x, y)| format!("{},{}", num(x), num(y)))
            .collect();
        let _ = writeln!(
            s,
            "<polygon class=\"grid\" points=\"{}\" fill=\"none\" stroke=\"#dddddd\"/>",
            pts.join(" ")
        );
    }
    for (i, (label, _)) in values.iter().enumerate() {
        let (x, y) = at(i, radius);
        line(&mut s, "axis", cx, cy, x, y, "#999999", 1.0);
        let (lx, ly) = at(i, radius + 16.0);
        let sin = angle(i).sin();
        let anchor = if sin > 1e-9 {
            "start"
        } else if sin < -1e-9 {
            "end"
        } else {
            "middle"
        };
        text(&mut s, "axis-label", lx, ly + 4.0, anchor, 12.0, label);
    }
    let vertices: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .map(|(i, (_, v))| at(i, if max > 0.0 { v / max * radius } else { 0.0 }))
        .collect();
    let pts: Vec<String> = vertices
        .iter()
        .map(|(x, y)| format!("{},{}", num(*x), num(*y)))
        .collect();
    let _ = writeln!(
        s,
        "<polygon class=\"radar-area\" points=\"{}\" fill=\"{c}\" fill-opacity=\"0.35\" stroke=\"{c}\" stroke-width=\"2\"/>",
        pts.join(" "),
        c = style.color(0)
    );
    for ((label, v), (x, y)) in values.iter().zip(&vertices) {
        let _ = writeln!(
            s,
            "<circle class=\"vertex\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" data-label=\"{}\" data-value=\"{}\"/>",
            num(*x),
            num(*y),
            style.color(0),
            escape_xml(label),
            v
        );
    }
    Ok(close_svg(s))
}

/// Scatter plot; points outside the ranges are pinned to the border and noted
/// in a comment.
pub fn render_scatter(
    points: &[(f64, f64, String)],
    x_range: (f64, f64),
    y_range: (f64, f64),
    style: &ChartStyle,
) -> Result<String> {
    style.validate()?;
    for (name, (lo, hi)) in [("x", x_range), ("y", y_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Argument(format!(
                "{name} range [{lo}, {hi}] is degenerate"
            )));
        }
    }
    let (x0, x1) = (style.margin, style.width - style.margin);
    let (y0, y1) = (style.height - style.margin, style.margin);
    let px = |v: f64| lerp(v, x_range.0, x_range.1, x0, x1);
    let py = |v: f64| lerp(v, y_range.0, y_range.1, y0, y1);

    let mut s = open_svg(style, "Scatter plot");
    line(&mut s, "axis x-axis", x0, y0, x1, y0, "#333333", 1.0);
    line(&mut s, "axis y-axis", x0, y0, x0, y1, "#333333", 1.0);
    let mut x_ticks = vec![x_range.0];
    if x_range.0 < 0.0 && 0.0 < x_range.1 {
        x_ticks.push(0.0);
    }
    x_ticks.push(x_range.1);
    for t in x_ticks {
        line(
            &mut s,
            "tick x-tick",
            px(t),
            y0,
            px(t),
            y0 + 5.0,
            "#333333",
            1.0,
        );
        text(
            &mut s,
            "tick-label",
            px(t),
            y0 + 18.0,
            "middle",
            11.0,
            &num(t),
        );
    }
    for t in [y_range.0, y_range.1] {
        line(
            &mut s,
            "tick y-tick",
            x0 - 5.0,
            py(t),
            x0,
            py(t),
            "#333333",
            1.0,
        );
        text(
            &mut s,
            "tick-label",
            x0 - 8.0,
            py(t) + 4.0,
            "end",
            11.0,
            &num(t),
        );
    }
    for (i, (x, y, label)) in points.iter().enumerate() {
        let cx = if x.is_nan() {
            x_range.0
        } else {
            x.clamp(x_range.0, x_range.1)
        };
        let cy = if y.is_nan() {
            y_range.0
        } else {
            y.clamp(y_range.0, y_range.1)
        };
        if cx != *x || cy != *y {
            let _ = writeln!(s, "<!-- clamped: {} ({x}, {y}) -->", comment_safe(label));
        }
        let _ = writeln!(
            s,
            "<circle class=\"point\" cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>",
            num(px(cx)),
            num(py(cy)),
            style.color(i)
        );
        text(
            &mut s,
            "point-label",
            px(cx) + 6.0,
            py(cy) - 6.0,
            "start",
            11.0,
            label,
        );
    }
    Ok(close_svg(s))
}

/// Small multiples, one panel per series, y fixed to `[-1, 1]` with an orange
/// neutrality line at zero.
pub fn render_timeseries(series: &[LabeledSeries], style: &ChartStyle) -> Result<String> {
    style.validate()?;
    for ls in series {
        ls.validate()?;
    }
    let mut s = open_svg(style, "Time series");
    if series.is_empty() {
        return Ok(close_svg(s));
    }
    let cols = (series.len() as f64).sqrt().ceil() as usize;
    let rows = series.len().div_ceil(cols);
    let cell_w = style.plot_width() / cols as f64;
    let cell_h = style.plot_height() / rows as f64;
    let (mut lo, mut hi) = (0_i64, 1_i64);
    for (i, _) in series.iter().flat_map(|ls| &ls.points) {
        lo = lo.min(*i);
        hi = hi.max(*i);
    }
    const PAD: f64 = 8.0;
    const TITLE: f64 = 16.0;

    for (k, ls) in series.iter().enumerate() {
        let left = style.margin + (k % cols) as f64 * cell_w + PAD;
        let top = style.margin + (k / cols) as f64 * cell_h + TITLE;
        let right = left + cell_w - 2.0 * PAD;
        let bottom = top + cell_h - TITLE - PAD;
        let px = |i: i64| lerp(i as f64, lo as f64, hi as f64, left, right);
        let py = |v: f64| lerp(v.clamp(-1.0, 1.0), -1.0, 1.0, bottom, top);
        let color = style.color(k);

        let _ = writeln!(
            s,
            "<g class=\"panel\" data-label=\"{}\">",
            escape_xml(&ls.label)
        );
        let _ = writeln!(
            s,
            "<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#cccccc\"/>",
            num(left),
            num(top),
            num(right - left),
            num(bottom - top)
        );
        text(
            &mut s,
            "panel-title",
            (left + right) / 2.0,
            top - 4.0,
            "middle",
            11.0,
            &ls.label,
        );
        line(
            &mut s,
            "zero-line",
            left,
            py(0.0),
            right,
            py(0.0),
            ZERO_LINE_COLOR,
            1.5,
        );
        if ls.points.len() > 1 {
            let pts: Vec<String> = ls
                .points
                .iter()
                .map(|(i, v)| format!("{},{}", num(px(*i)), num(py(*v))))
                .collect();
            let _ = writeln!(
                s,
                "<polyline class=\"series\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
        }
        for (i, v) in &ls.points {
            let _ = writeln!(
                s,
                "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>",
                num(px(*i)),
                num(py(*v))
            );
        }
        s.push_str("</g>\n");
    }
    Ok(close_svg(s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedWord {
    pub term: String,
    pub count: u64,
    pub font_size: f64,
    /// Box centre.
    pub x: f64,
    pub y: f64,
}

impl PlacedWord {
    /// `(left, top, right, bottom)` of the approximate bounding box.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let (w, h) = word_box(&self.term, self.font_size);
        (
            self.x - w / 2.0,
            self.y - h / 2.0,
            self.x + w / 2.0,
            self.y + h / 2.0,
        )
    }
}

/// Approximate `(width, height)` of a word: 0.6 em per character, 1.1 em tall.
pub fn word_box(term: &str, font_size: f64) -> (f64, f64) {
    (
        0.6 * font_size * term.chars().count() as f64,
        1.1 * font_size,
    )
}

/// Whether two boxes share interior area (touching edges do not count).
pub fn boxes_overlap(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> bool {
    a.0 < b.2 && b.0 < a.2 && a.1 < b.3 && b.1 < a.3
}

fn font_size(count: u64, min: u64, max: u64) -> f64 {
    if min == max {
        WORDCLOUD_MAX_FONT
    } else {
        let t = (count - min) as f64 / (max - min) as f64;
        round2(WORDCLOUD_MIN_FONT + t * (WORDCLOUD_MAX_FONT - WORDCLOUD_MIN_FONT))
    }
}

/// Deterministic spiral layout. Terms are placed in descending count order
/// (ties lexicographic); a term that finds no free spot within the spiral
/// budget is left out.
pub fn layout_wordcloud(freqs: &[(String, u64)], style: &ChartStyle) -> Result<Vec<PlacedWord>> {
    style.validate()?;
    if let Some((t, _)) = freqs.iter().find(|(t, c)| *c == 0 || t.is_empty()) {
        return Err(Error::Argument(format!(
            "word cloud entry {t:?} needs a non-empty term and a positive count"
        )));
    }
    let mut order: Vec<&(String, u64)> = freqs.iter().collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let Some(max) = order.first().map(|e| e.1) else {
        return Ok(Vec::new());
    };
    let min = order.last().map_or(max, |e| e.1);
    let (cx, cy) = (style.width / 2.0, style.height / 2.0);

    let mut placed: Vec<PlacedWord> = Vec::with_capacity(order.len());
    for (term, count) in order {
        let fs = font_size(*count, min, max);
        for step in 0..SPIRAL_MAX_STEPS {
            let t = step as f64 * SPIRAL_STEP;
            let candidate = PlacedWord {
                term: term.clone(),
                count: *count,
                font_size: fs,
                x: round2(cx + SPIRAL_GROWTH * t * t.cos()),
                y: round2(cy + SPIRAL_GROWTH * t * t.sin()),
            };
            let (l, tp, r, b) = candidate.bounds();
            let padded = (
                l - WORDCLOUD_PAD,
                tp - WORDCLOUD_PAD,
                r + WORDCLOUD_PAD,
                b + WORDCLOUD_PAD,
            );
            if placed.iter().all(|p| !boxes_overlap(padded, p.bounds())) {
                placed.push(candidate);
                break;
            }
        }
    }
    Ok(placed)
}

pub fn render_wordcloud(freqs: &[(String, u64)], style: &ChartStyle) -> Result<String> {
    let placed = layout_wordcloud(freqs, style)?;
    let mut s = open_svg(style, "Word cloud");
    for (i, w) in placed.iter().enumerate() {
        let _ = writeln!(
            s,
            "<text class=\"word\" x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"{}\" data-count=\"{}\">{}</text>",
            num(w.x),
            num(w.y),
            num(w.font_size),
            style.color(i),
            w.count,
            escape_xml(&w.term)
        );
    }
    Ok(close_svg(s))
}

/// Vertical bars in input order; negative values draw as zero height.
pub fn render_bars(values: &[(String, f64)], style: &ChartStyle) -> Result<String> {
    style.validate()?;
    let (x0, x1) = (style.margin, style.width - style.margin);
    let (y0, y1) = (style.height - style.margin, style.margin);
    let mut s = open_svg(style, "Bar chart");
    line(&mut s, "axis x-axis", x0, y0, x1, y0, "#333333", 1.0);
    line(&mut s, "axis y-axis", x0, y0, x0, y1, "#333333", 1.0);
    if values.is_empty() {
        return Ok(close_svg(s));
    }
    let max = values
        .iter()
        .map(|(_, v)| *v)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let slot = (x1 - x0) / values.len() as f64;
    let bar_w = slot * 0.8;
    for (i, (label, v)) in values.iter().enumerate() {
        let h = if max > 0.0 && v.is_finite() {
            v.max(0.0) / max * (y0 - y1)
        } else {
            0.0
        };
        let left = x0 + i as f64 * slot + (slot - bar_w) / 2.0;
        let _ = writeln!(
            s,
            "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" data-label=\"{}\"/>",
            num(left),
            num(y0 - h),
            num(bar_w),
            num(h),
            style.color(0),
            escape_xml(label)
        );
        text(
            &mut s,
            "bar-label",
            left + bar_w / 2.0,
            y0 + 16.0,
            "middle",
            11.0,
            label,
        );
        text(
            &mut s,
            "bar-value",
            left + bar_w / 2.0,
            y0 - h - 4.0,
            "middle",
            11.0,
            &num(*v),
        );
    }
    Ok(close_svg(s))
}
