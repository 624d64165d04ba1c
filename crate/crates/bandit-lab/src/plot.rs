//! Minimal self-contained SVG line plots.
//!
//! The experiment harness needs exactly one kind of figure — metric means
//! versus horizon, with error bars and an optional reference curve, on
//! linear or log-log axes — so this hand-rolls that one figure instead of
//! pulling in a plotting stack. Output is deterministic: the same `Plot`
//! always renders to the same bytes.

/// One polyline: `(x, y)` points with optional symmetric error half-widths.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Per-point half-width of a vertical error bar (same length as
    /// `points` when present).
    pub errors: Option<Vec<f64>>,
    /// Render dashed (used for reference/bound curves).
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            errors: None,
            dashed: false,
        }
    }

    pub fn with_errors(
        label: impl Into<String>,
        points: Vec<(f64, f64)>,
        errors: Vec<f64>,
    ) -> Self {
        assert_eq!(points.len(), errors.len(), "one error bar per point");
        Series {
            label: label.into(),
            points,
            errors: Some(errors),
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

/// A complete figure, rendered with [`Plot::to_svg`].
#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Request log-log axes; silently falls back to linear when any plotted
    /// coordinate (including error-bar ends) is non-positive.
    pub log_log: bool,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 540.0;
const PLOT_TOP: f64 = 46.0;
const PLOT_BOTTOM: f64 = 420.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

impl Plot {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            log_log: false,
        }
    }

    /// True when log-log was requested and every coordinate supports it.
    fn effective_log(&self) -> bool {
        self.log_log
            && self.series.iter().all(|s| {
                s.points.iter().enumerate().all(|(i, &(x, y))| {
                    let low = y - s.errors.as_ref().map_or(0.0, |e| e[i]);
                    x > 0.0 && low > 0.0
                })
            })
    }

    pub fn to_svg(&self) -> String {
        let log = self.effective_log();
        let map = |v: f64| if log { v.log10() } else { v };

        // Data ranges over points and error-bar ends, padded when degenerate.
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for (i, &(x, y)) in s.points.iter().enumerate() {
                xs.push(map(x));
                let e = s.errors.as_ref().map_or(0.0, |e| e[i]);
                ys.push(map(y - e));
                ys.push(map(y + e));
            }
        }
        let (x_min, x_max) = padded_range(&xs);
        let (y_min, y_max) = padded_range(&ys);

        let px = |v: f64| PLOT_LEFT + (v - x_min) / (x_max - x_min) * (PLOT_RIGHT - PLOT_LEFT);
        let py = |v: f64| PLOT_BOTTOM - (v - y_min) / (y_max - y_min) * (PLOT_BOTTOM - PLOT_TOP);

        let mut svg = String::with_capacity(8 * 1024);
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            (PLOT_LEFT + PLOT_RIGHT) / 2.0,
            escape(&self.title)
        ));

        // Axes, ticks, grid.
        for tick in ticks(x_min, x_max, log) {
            let x = px(tick);
            svg.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{PLOT_TOP}\" x2=\"{x:.1}\" y2=\"{PLOT_BOTTOM}\" \
                 stroke=\"#dddddd\"/>\n"
            ));
            svg.push_str(&format!(
                "<text class=\"tick-label\" x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
                PLOT_BOTTOM + 16.0,
                fmt_tick(if log { 10f64.powf(tick) } else { tick })
            ));
        }
        for tick in ticks(y_min, y_max, log) {
            let y = py(tick);
            svg.push_str(&format!(
                "<line x1=\"{PLOT_LEFT}\" y1=\"{y:.1}\" x2=\"{PLOT_RIGHT}\" y2=\"{y:.1}\" \
                 stroke=\"#dddddd\"/>\n"
            ));
            svg.push_str(&format!(
                "<text class=\"tick-label\" x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
                PLOT_LEFT - 6.0,
                y + 4.0,
                fmt_tick(if log { 10f64.powf(tick) } else { tick })
            ));
        }
        svg.push_str(&format!(
            "<rect x=\"{PLOT_LEFT}\" y=\"{PLOT_TOP}\" width=\"{:.1}\" height=\"{:.1}\" \
             fill=\"none\" stroke=\"black\"/>\n",
            PLOT_RIGHT - PLOT_LEFT,
            PLOT_BOTTOM - PLOT_TOP
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            (PLOT_LEFT + PLOT_RIGHT) / 2.0,
            PLOT_BOTTOM + 38.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (PLOT_TOP + PLOT_BOTTOM) / 2.0,
            (PLOT_TOP + PLOT_BOTTOM) / 2.0,
            escape(&self.y_label)
        ));

        // Series: error bars underneath, then lines and markers.
        for (index, series) in self.series.iter().enumerate() {
            let color = PALETTE[index % PALETTE.len()];
            if let Some(errors) = &series.errors {
                for (&(x, y), &e) in series.points.iter().zip(errors) {
                    if e <= 0.0 {
                        continue;
                    }
                    let cx = px(map(x));
                    let (top, bottom) = (py(map(y + e)), py(map(y - e)));
                    svg.push_str(&format!(
                        "<line class=\"error-bar\" x1=\"{cx:.1}\" y1=\"{top:.1}\" \
                         x2=\"{cx:.1}\" y2=\"{bottom:.1}\" stroke=\"{color}\"/>\n"
                    ));
                    for y_end in [top, bottom] {
                        svg.push_str(&format!(
                            "<line x1=\"{:.1}\" y1=\"{y_end:.1}\" x2=\"{:.1}\" y2=\"{y_end:.1}\" \
                             stroke=\"{color}\"/>\n",
                            cx - 4.0,
                            cx + 4.0
                        ));
                    }
                }
            }
            let coords: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.1},{:.1}", px(map(x)), py(map(y))))
                .collect();
            let dash = if series.dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            svg.push_str(&format!(
                "<polyline class=\"series-line\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"{dash} points=\"{}\"/>\n",
                coords.join(" ")
            ));
            for coord in &coords {
                let (x, y) = coord.split_once(',').expect("formatted above");
                svg.push_str(&format!(
                    "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>\n"
                ));
            }
        }

        // Legend, right of the plot area.
        for (index, series) in self.series.iter().enumerate() {
            let color = PALETTE[index % PALETTE.len()];
            let y = PLOT_TOP + 14.0 + 18.0 * index as f64;
            let dash = if series.dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            svg.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
                 stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>\n",
                PLOT_RIGHT + 12.0,
                PLOT_RIGHT + 34.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
                PLOT_RIGHT + 40.0,
                y + 4.0,
                escape(&series.label)
            ));
        }

        svg.push_str("</svg>\n");
        svg
    }
}

/// Range of `values` widened so max > min, with a small margin.
fn padded_range(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.1 };
        return (min - pad, max + pad);
    }
    let pad = (max - min) * 0.05;
    (min - pad, max + pad)
}

/// Tick positions in axis coordinates. In log mode the axis coordinate is
/// log10(value) and ticks sit on decades (with 3×10^a half-steps when the
/// range spans few decades).
fn ticks(min: f64, max: f64, log: bool) -> Vec<f64> {
    if log {
        let mut out = Vec::new();
        let lo = min.floor() as i32;
        let hi = max.ceil() as i32;
        for decade in lo..=hi {
            for mantissa in [1.0f64, 3.0] {
                let t = decade as f64 + mantissa.log10();
                if t >= min && t <= max {
                    out.push(t);
                }
            }
        }
        if out.len() >= 2 {
            return out;
        }
        // Degenerate sub-decade range: fall through to linear spacing.
    }
    let span = max - min;
    let raw = span / 5.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let normalized = raw / magnitude;
    // Nearest "nice" step (1, 2, 5, 10 times a power of ten).
    let step = magnitude
        * if normalized < 1.5 {
            1.0
        } else if normalized < 3.5 {
            2.0
        } else if normalized < 7.5 {
            5.0
        } else {
            10.0
        };
    let mut out = Vec::new();
    let mut tick = (min / step).ceil() * step;
    while tick <= max + step * 1e-9 {
        out.push(tick);
        tick += step;
    }
    out
}

/// Compact tick label: plain decimal for moderate magnitudes, exponent
/// notation outside them, trailing zeros trimmed.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs();
    if !(1e-3..1e6).contains(&magnitude) {
        return format!("{v:e}");
    }
    let mut s = format!("{v:.4}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
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

    fn sample_plot(log_log: bool) -> Plot {
        let mut plot = Plot::new("policy regret vs horizon", "T", "regret");
        plot.log_log = log_log;
        plot.series.push(Series::with_errors(
            "measured",
            vec![(1e4, 800.0), (4e4, 2100.0), (1.6e5, 5400.0)],
            vec![40.0, 90.0, 200.0],
        ));
        plot.series.push(
            Series::new(
                "bound",
                vec![(1e4, 3000.0), (4e4, 8000.0), (1.6e5, 20000.0)],
            )
            .dashed(),
        );
        plot
    }

    #[test]
    fn renders_series_error_bars_and_legend() {
        let svg = sample_plot(false).to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("class=\"series-line\"").count(), 2);
        assert_eq!(svg.matches("class=\"error-bar\"").count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2); // line + legend
        assert!(svg.contains("measured"));
        assert!(svg.contains("bound"));
        assert!(svg.contains("policy regret vs horizon"));
    }

    #[test]
    fn log_axes_use_decade_ticks() {
        let svg = sample_plot(true).to_svg();
        assert!(svg.contains(">10000<")); // 10^4 on the x axis
        assert!(svg.contains(">100000<")); // 10^5
    }

    #[test]
    fn log_request_falls_back_to_linear_on_nonpositive_values() {
        let mut plot = Plot::new("regret", "T", "value");
        plot.log_log = true;
        plot.series
            .push(Series::new("measured", vec![(10.0, -5.0), (20.0, 3.0)]));
        assert!(!plot.effective_log());
        let svg = plot.to_svg();
        assert!(svg.contains(">-5<") || svg.contains(">-4<")); // negative tick labels exist
    }

    #[test]
    fn error_bars_count_toward_log_feasibility() {
        let mut plot = Plot::new("regret", "T", "value");
        plot.log_log = true;
        // y − e dips below zero, so log axes must be refused.
        plot.series.push(Series::with_errors(
            "measured",
            vec![(10.0, 1.0), (20.0, 5.0)],
            vec![2.0, 1.0],
        ));
        assert!(!plot.effective_log());
    }

    #[test]
    fn output_is_deterministic() {
        assert_eq!(sample_plot(true).to_svg(), sample_plot(true).to_svg());
    }

    #[test]
    fn single_point_series_renders_without_panicking() {
        let mut plot = Plot::new("one", "x", "y");
        plot.series.push(Series::new("p", vec![(5.0, 5.0)]));
        let svg = plot.to_svg();
        assert!(svg.contains("circle"));
    }

    #[test]
    fn linear_ticks_are_round_numbers() {
        let t = ticks(0.0, 103.0, false);
        assert_eq!(t, vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
    }

    #[test]
    fn tick_labels_trim_zeros_and_switch_to_exponent_form() {
        assert_eq!(fmt_tick(0.0), "0");
        assert_eq!(fmt_tick(20.0), "20");
        assert_eq!(fmt_tick(0.25), "0.25");
        assert_eq!(fmt_tick(160000.0), "160000");
        assert_eq!(fmt_tick(1e7), "1e7");
        assert_eq!(fmt_tick(-5.0), "-5");
    }
}
