//! Deterministic SVG chart emitters.
//!
//! Every figure the analysis stage produces is rendered here: grouped
//! histograms, bar charts with a two-color highlight scheme, ROC and
//! precision–recall curves, and a correlation heatmap with a colorbar.
//! The emitters are dependency-free and fully deterministic: layout is pure
//! arithmetic, element order is fixed, and every number passes through
//! [`fmt6`], so identical inputs yield identical bytes.

use std::io;
use std::path::Path;

use crate::util::{fmt6, write_atomic};

/// Fill for plain (non-highlighted) marks.
pub const PLAIN_COLOR: &str = "#4c78a8";
/// Fill for marks whose threshold flag is set.
pub const HIGHLIGHT_COLOR: &str = "#d1495b";

/// Cycle palette for multi-series plots (class histograms, curve bundles).
const SERIES_COLORS: [&str; 8] = [
    "#4c78a8", "#f58518", "#54a24b", "#b279a2", "#9d755d", "#72b7b2", "#e0b700", "#8085e9",
];

const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 58.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Histogram,
    Bar,
    Roc,
    Pr,
    Heatmap,
}

/// One bar of a categorical bar chart. `value: None` renders as an empty
/// slot: the tick label stays so missing entries remain visible.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: Option<f64>,
    pub highlight: bool,
}

/// One curve of a ROC/PR panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Content {
    Histogram {
        edges: Vec<f64>,
        series: Vec<(String, Vec<u64>)>,
    },
    Bars {
        bars: Vec<Bar>,
        hline: Option<f64>,
    },
    Curves {
        kind: PlotKind,
        curves: Vec<Curve>,
        diagonal: bool,
    },
    Heatmap {
        labels: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    },
}

/// A fully specified figure, ready to render.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    width: f64,
    height: f64,
    content: Content,
}

impl SvgPlot {
    /// Grouped histogram: `edges` has one more entry than each count series.
    pub fn histogram(title: &str, x_label: &str, edges: Vec<f64>, series: Vec<(String, Vec<u64>)>) -> SvgPlot {
        SvgPlot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: "count".to_string(),
            width: 560.0,
            height: 380.0,
            content: Content::Histogram { edges, series },
        }
    }

    /// Categorical bar chart; `hline` draws a dashed reference line.
    pub fn bars(title: &str, y_label: &str, bars: Vec<Bar>, hline: Option<f64>) -> SvgPlot {
        let width = (560.0_f64).max(MARGIN_LEFT + MARGIN_RIGHT + 26.0 * bars.len() as f64);
        SvgPlot {
            title: title.to_string(),
            x_label: String::new(),
            y_label: y_label.to_string(),
            width,
            height: 400.0,
            content: Content::Bars { bars, hline },
        }
    }

    /// ROC panel on the unit square with a chance diagonal.
    pub fn roc(title: &str, curves: Vec<Curve>) -> SvgPlot {
        SvgPlot {
            title: title.to_string(),
            x_label: "false positive rate".to_string(),
            y_label: "true positive rate".to_string(),
            width: 480.0,
            height: 480.0,
            content: Content::Curves { kind: PlotKind::Roc, curves, diagonal: true },
        }
    }

    /// Precision–recall panel on the unit square.
    pub fn pr(title: &str, curves: Vec<Curve>) -> SvgPlot {
        SvgPlot {
            title: title.to_string(),
            x_label: "recall".to_string(),
            y_label: "precision".to_string(),
            width: 480.0,
            height: 480.0,
            content: Content::Curves { kind: PlotKind::Pr, curves, diagonal: false },
        }
    }

    /// Square heatmap of values in [0, 1]; `None` cells render gray.
    pub fn heatmap(title: &str, labels: Vec<String>, values: Vec<Vec<Option<f64>>>) -> SvgPlot {
        let n = labels.len().max(1) as f64;
        let cell = (420.0 / n).clamp(14.0, 36.0);
        let label_band = 110.0;
        SvgPlot {
            title: title.to_string(),
            x_label: String::new(),
            y_label: String::new(),
            width: MARGIN_LEFT + label_band + n * cell + 70.0 + MARGIN_RIGHT,
            height: MARGIN_TOP + n * cell + label_band + 20.0,
            content: Content::Heatmap { labels, values },
        }
    }

    pub fn kind(&self) -> PlotKind {
        match &self.content {
            Content::Histogram { .. } => PlotKind::Histogram,
            Content::Bars { .. } => PlotKind::Bar,
            Content::Curves { kind, .. } => *kind,
            Content::Heatmap { .. } => PlotKind::Heatmap,
        }
    }

    /// Render to an SVG document string.
    pub fn render(&self) -> String {
        let mut s = String::with_capacity(4096);
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"Helvetica, Arial, sans-serif\">\n",
            w = fmt6(self.width),
            h = fmt6(self.height),
        ));
        s.push_str(&format!(
            "<rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
            fmt6(self.width),
            fmt6(self.height)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\" fill=\"#222222\">{}</text>\n",
            fmt6(self.width / 2.0),
            xml_escape(&self.title)
        ));
        match &self.content {
            Content::Histogram { edges, series } => self.render_histogram(&mut s, edges, series),
            Content::Bars { bars, hline } => self.render_bars(&mut s, bars, *hline),
            Content::Curves { curves, diagonal, .. } => self.render_curves(&mut s, curves, *diagonal),
            Content::Heatmap { labels, values } => self.render_heatmap(&mut s, labels, values),
        }
        s.push_str("</svg>\n");
        s
    }

    /// Render and write through the temp-rename protocol.
    pub fn write(&self, path: &Path) -> io::Result<()> {
        write_atomic(path, self.render().as_bytes())
    }

    fn plot_area(&self) -> (f64, f64, f64, f64) {
        (
            MARGIN_LEFT,
            MARGIN_TOP,
            self.width - MARGIN_LEFT - MARGIN_RIGHT,
            self.height - MARGIN_TOP - MARGIN_BOTTOM,
        )
    }

    fn axis_frame(&self, s: &mut String) {
        let (l, t, pw, ph) = self.plot_area();
        s.push_str(&format!(
            "<g class=\"axes\" stroke=\"#333333\" stroke-width=\"1\">\n<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\"/>\n<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\"/>\n</g>\n",
            l = fmt6(l),
            r = fmt6(l + pw),
            t = fmt6(t),
            b = fmt6(t + ph),
        ));
        if !self.x_label.is_empty() {
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#222222\">{}</text>\n",
                fmt6(l + pw / 2.0),
                fmt6(self.height - 12.0),
                xml_escape(&self.x_label)
            ));
        }
        if !self.y_label.is_empty() {
            let x = 16.0;
            let y = t + ph / 2.0;
            s.push_str(&format!(
                "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#222222\" transform=\"rotate(-90 {x} {y})\">{}</text>\n",
                xml_escape(&self.y_label),
                x = fmt6(x),
                y = fmt6(y),
            ));
        }
    }

    fn y_ticks(&self, s: &mut String, ymax: f64) {
        let (l, t, _, ph) = self.plot_area();
        s.push_str("<g class=\"yticks\" font-size=\"11\" fill=\"#222222\">\n");
        for i in 0..=4 {
            let v = ymax * i as f64 / 4.0;
            let y = t + ph * (1.0 - v / ymax);
            s.push_str(&format!(
                "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#333333\"/>\n<text x=\"{tx}\" y=\"{ty}\" text-anchor=\"end\">{v}</text>\n",
                x0 = fmt6(l - 4.0),
                x1 = fmt6(l),
                y = fmt6(y),
                tx = fmt6(l - 7.0),
                ty = fmt6(y + 4.0),
                v = fmt6(v),
            ));
        }
        s.push_str("</g>\n");
    }

    fn legend(&self, s: &mut String, entries: &[(String, &str)]) {
        if entries.is_empty() || entries.len() > 12 {
            return;
        }
        let (l, t, pw, _) = self.plot_area();
        let x = l + pw - 150.0;
        s.push_str("<g class=\"legend\" font-size=\"11\" fill=\"#222222\">\n");
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = t + 8.0 + 16.0 * i as f64;
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"11\" height=\"11\" fill=\"{color}\"/>\n<text x=\"{tx}\" y=\"{ty}\">{label}</text>\n",
                x = fmt6(x),
                y = fmt6(y),
                tx = fmt6(x + 15.0),
                ty = fmt6(y + 10.0),
                label = xml_escape(label),
            ));
        }
        s.push_str("</g>\n");
    }

    fn render_histogram(&self, s: &mut String, edges: &[f64], series: &[(String, Vec<u64>)]) {
        let (l, t, pw, ph) = self.plot_area();
        let bins = edges.len().saturating_sub(1).max(1);
        let ymax = series
            .iter()
            .flat_map(|(_, c)| c.iter().copied())
            .max()
            .unwrap_or(0)
            .max(1) as f64;
        self.axis_frame(s);
        self.y_ticks(s, ymax);

        // x tick labels: six evenly spaced values over the data range
        let (x0, x1) = (edges.first().copied().unwrap_or(0.0), edges.last().copied().unwrap_or(1.0));
        let span = if x1 > x0 { x1 - x0 } else { 1.0 };
        s.push_str("<g class=\"xticks\" font-size=\"11\" fill=\"#222222\">\n");
        for i in 0..=5 {
            let frac = i as f64 / 5.0;
            let x = l + pw * frac;
            s.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" stroke=\"#333333\"/>\n<text x=\"{x}\" y=\"{ty}\" text-anchor=\"middle\">{v}</text>\n",
                x = fmt6(x),
                y0 = fmt6(t + ph),
                y1 = fmt6(t + ph + 4.0),
                ty = fmt6(t + ph + 17.0),
                v = fmt6(x0 + span * frac),
            ));
        }
        s.push_str("</g>\n");

        let k = series.len().max(1) as f64;
        let bin_px = pw / bins as f64;
        let sub = bin_px * 0.9 / k;
        s.push_str("<g class=\"data\">\n");
        for (si, (_, counts)) in series.iter().enumerate() {
            let color = SERIES_COLORS[si % SERIES_COLORS.len()];
            for (bi, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let h = ph * c as f64 / ymax;
                let x = l + bin_px * bi as f64 + bin_px * 0.05 + sub * si as f64;
                s.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"{color}\"/>\n",
                    x = fmt6(x),
                    y = fmt6(t + ph - h),
                    w = fmt6(sub),
                    h = fmt6(h),
                ));
            }
        }
        s.push_str("</g>\n");
        let entries: Vec<(String, &str)> = series
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (name.clone(), SERIES_COLORS[i % SERIES_COLORS.len()]))
            .collect();
        self.legend(s, &entries);
    }

    fn render_bars(&self, s: &mut String, bars: &[Bar], hline: Option<f64>) {
        let (l, t, pw, ph) = self.plot_area();
        let data_max = bars
            .iter()
            .filter_map(|b| b.value)
            .fold(0.0_f64, f64::max)
            .max(hline.unwrap_or(0.0));
        let ymax = if data_max > 0.0 { data_max * 1.05 } else { 1.0 };
        self.axis_frame(s);
        self.y_ticks(s, ymax);

        let slot = pw / bars.len().max(1) as f64;
        s.push_str("<g class=\"data\">\n");
        for (i, bar) in bars.iter().enumerate() {
            if let Some(v) = bar.value {
                let h = (ph * v / ymax).max(0.0);
                let color = if bar.highlight { HIGHLIGHT_COLOR } else { PLAIN_COLOR };
                s.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"{color}\"/>\n",
                    x = fmt6(l + slot * (i as f64 + 0.15)),
                    y = fmt6(t + ph - h),
                    w = fmt6(slot * 0.7),
                    h = fmt6(h),
                ));
            }
        }
        s.push_str("</g>\n");
        s.push_str("<g class=\"xticks\" font-size=\"10\" fill=\"#222222\">\n");
        for (i, bar) in bars.iter().enumerate() {
            let cx = l + slot * (i as f64 + 0.5);
            let cy = t + ph + 12.0;
            let fill = if bar.value.is_some() { "#222222" } else { "#999999" };
            s.push_str(&format!(
                "<text x=\"{cx}\" y=\"{cy}\" text-anchor=\"end\" fill=\"{fill}\" transform=\"rotate(-40 {cx} {cy})\">{label}</text>\n",
                cx = fmt6(cx),
                cy = fmt6(cy),
                label = xml_escape(&bar.label),
            ));
        }
        s.push_str("</g>\n");
        if let Some(hv) = hline {
            let y = t + ph * (1.0 - hv / ymax);
            s.push_str(&format!(
                "<line class=\"hline\" x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#555555\" stroke-dasharray=\"5 3\"/>\n<text x=\"{tx}\" y=\"{ty}\" font-size=\"10\" fill=\"#555555\" text-anchor=\"end\">{v}</text>\n",
                x0 = fmt6(l),
                x1 = fmt6(l + pw),
                y = fmt6(y),
                tx = fmt6(l + pw),
                ty = fmt6(y - 4.0),
                v = fmt6(hv),
            ));
        }
    }

    fn render_curves(&self, s: &mut String, curves: &[Curve], diagonal: bool) {
        let (l, t, pw, ph) = self.plot_area();
        let px = |x: f64| l + pw * x;
        let py = |y: f64| t + ph * (1.0 - y);
        self.axis_frame(s);
        s.push_str("<g class=\"ticks\" font-size=\"11\" fill=\"#222222\">\n");
        for i in 0..=4 {
            let v = i as f64 / 4.0;
            s.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" stroke=\"#333333\"/>\n<text x=\"{x}\" y=\"{ty}\" text-anchor=\"middle\">{v}</text>\n",
                x = fmt6(px(v)),
                y0 = fmt6(t + ph),
                y1 = fmt6(t + ph + 4.0),
                ty = fmt6(t + ph + 17.0),
                v = fmt6(v),
            ));
            s.push_str(&format!(
                "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#333333\"/>\n<text x=\"{tx}\" y=\"{vy}\" text-anchor=\"end\">{v}</text>\n",
                x0 = fmt6(l - 4.0),
                x1 = fmt6(l),
                y = fmt6(py(v)),
                tx = fmt6(l - 7.0),
                vy = fmt6(py(v) + 4.0),
                v = fmt6(v),
            ));
        }
        s.push_str("</g>\n");
        if diagonal {
            s.push_str(&format!(
                "<line class=\"diagonal\" x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"#aaaaaa\" stroke-dasharray=\"5 3\"/>\n",
                x0 = fmt6(px(0.0)),
                y0 = fmt6(py(0.0)),
                x1 = fmt6(px(1.0)),
                y1 = fmt6(py(1.0)),
            ));
        }
        s.push_str("<g class=\"data\" fill=\"none\" stroke-width=\"1.5\">\n");
        let mut entries = Vec::new();
        for (i, curve) in curves.iter().enumerate() {
            let color = if curve.highlight {
                HIGHLIGHT_COLOR
            } else {
                SERIES_COLORS[i % SERIES_COLORS.len()]
            };
            entries.push((curve.label.clone(), color));
            let pts: Vec<String> = curve
                .points
                .iter()
                .map(|&(x, y)| format!("{},{}", fmt6(px(x)), fmt6(py(y))))
                .collect();
            s.push_str(&format!(
                "<polyline stroke=\"{color}\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
        }
        s.push_str("</g>\n");
        self.legend(s, &entries);
    }

    fn render_heatmap(&self, s: &mut String, labels: &[String], values: &[Vec<Option<f64>>]) {
        let n = labels.len();
        let cell = (420.0 / n.max(1) as f64).clamp(14.0, 36.0);
        let l = MARGIN_LEFT + 110.0;
        let t = MARGIN_TOP;
        s.push_str("<g class=\"cells\">\n");
        for (r, row) in values.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let fill = match v {
                    Some(v) => heat_color(*v),
                    None => "#bdbdbd".to_string(),
                };
                s.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{w}\" fill=\"{fill}\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n",
                    x = fmt6(l + cell * c as f64),
                    y = fmt6(t + cell * r as f64),
                    w = fmt6(cell),
                ));
            }
        }
        s.push_str("</g>\n");
        if n <= 8 {
            s.push_str("<g class=\"cell-values\" font-size=\"10\" text-anchor=\"middle\">\n");
            for (r, row) in values.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    if let Some(v) = v {
                        let fill = if *v > 0.6 { "#ffffff" } else { "#222222" };
                        s.push_str(&format!(
                            "<text x=\"{x}\" y=\"{y}\" fill=\"{fill}\">{v}</text>\n",
                            x = fmt6(l + cell * (c as f64 + 0.5)),
                            y = fmt6(t + cell * (r as f64 + 0.5) + 3.5),
                            v = fmt6(*v),
                        ));
                    }
                }
            }
            s.push_str("</g>\n");
        }
        s.push_str("<g class=\"row-labels\" font-size=\"10\" fill=\"#222222\" text-anchor=\"end\">\n");
        for (r, label) in labels.iter().enumerate() {
            s.push_str(&format!(
                "<text x=\"{x}\" y=\"{y}\">{label}</text>\n",
                x = fmt6(l - 6.0),
                y = fmt6(t + cell * (r as f64 + 0.5) + 3.5),
                label = xml_escape(label),
            ));
        }
        s.push_str("</g>\n<g class=\"col-labels\" font-size=\"10\" fill=\"#222222\" text-anchor=\"end\">\n");
        for (c, label) in labels.iter().enumerate() {
            let cx = l + cell * (c as f64 + 0.5) + 3.5;
            let cy = t + cell * n as f64 + 8.0;
            s.push_str(&format!(
                "<text x=\"{cx}\" y=\"{cy}\" transform=\"rotate(-60 {cx} {cy})\">{label}</text>\n",
                cx = fmt6(cx),
                cy = fmt6(cy),
                label = xml_escape(label),
            ));
        }
        s.push_str("</g>\n");

        // colorbar: 32 stacked steps, value 0 at the bottom
        let bar_x = l + cell * n as f64 + 24.0;
        let bar_h = cell * n as f64;
        let steps = 32;
        s.push_str("<g class=\"colorbar\">\n");
        for i in 0..steps {
            let v0 = i as f64 / steps as f64;
            let step_h = bar_h / steps as f64;
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"14\" height=\"{h}\" fill=\"{fill}\"/>\n",
                x = fmt6(bar_x),
                y = fmt6(t + bar_h - step_h * (i + 1) as f64),
                h = fmt6(step_h + 0.5),
                fill = heat_color(v0 + 0.5 / steps as f64),
            ));
        }
        for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
            s.push_str(&format!(
                "<text x=\"{x}\" y=\"{y}\" font-size=\"10\" fill=\"#222222\">{label}</text>\n",
                x = fmt6(bar_x + 18.0),
                y = fmt6(t + bar_h * (1.0 - v) + 3.5),
            ));
        }
        s.push_str("</g>\n");
    }
}

/// Linear white→deep-blue map over [0, 1]; out-of-range values clamp.
fn heat_color(v: f64) -> String {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}
