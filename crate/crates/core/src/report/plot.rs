//! Static SVG figures, each with the table it was drawn from.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 72.0;

/// An SVG figure and the TSV of the plotted values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotDocument {
    pub svg: String,
    pub tsv: String,
}

impl PlotDocument {
    /// Record `key=value` as an SVG comment and a leading TSV comment line.
    pub fn annotate(&mut self, key: &str, value: &str) {
        let comment = format!("<!-- {key}={value} -->\n");
        let at = self.svg.find('\n').map_or(self.svg.len(), |i| i + 1);
        self.svg.insert_str(at, &comment);
        self.tsv.insert_str(0, &format!("# {key}={value}\n"));
    }

    /// Write `<stem>.svg` and `<stem>.tsv`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("svg", &self.svg), ("tsv", &self.tsv)] {
            let path = dir.join(format!("{stem}.{ext}"));
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Axis range covering `values`, widened to whole tick steps.
fn axis_range(values: &[f64], from_zero: bool) -> (f64, f64, f64) {
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if values.is_empty() {
        (lo, hi) = (0.0, 1.0);
    }
    if from_zero {
        lo = lo.min(0.0);
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    }
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

struct Frame {
    x: (f64, f64, f64),
    y: (f64, f64, f64),
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    s
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{v:.decimals$}")
}

fn y_axis(s: &mut String, frame: &Frame, label: &str) {
    let (lo, hi, step) = frame.y;
    let x0 = LEFT;
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="{:.2}" x2="{x0}" y2="{:.2}" stroke="black"/>"#,
        frame.py(lo),
        frame.py(hi)
    );
    let n = ((hi - lo) / step).round() as usize;
    for i in 0..=n {
        let v = lo + i as f64 * step;
        let y = frame.py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(v, step)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(label)
    );
}

fn x_axis(s: &mut String, frame: &Frame, label: &str, ticks: bool) {
    let (lo, hi, step) = frame.x;
    let y0 = HEIGHT - BOTTOM;
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{y0}" x2="{:.2}" y2="{y0}" stroke="black"/>"#,
        frame.px(lo),
        frame.px(hi)
    );
    if ticks {
        let n = ((hi - lo) / step).round() as usize;
        for i in 0..=n {
            let v = lo + i as f64 * step;
            let x = frame.px(v);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
                y0 + 4.0
            );
            let _ = writeln!(
                s,
                r#"<text class="tick" x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 16.0,
                fmt_tick(v, step)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(label)
    );
}

fn check_lengths(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            what: what.into(),
            left: a,
            right: b,
        });
    }
    Ok(())
}

/// Labeled scatter plot of `ys` against `xs`.
pub fn render_scatter<S: AsRef<str>>(
    xs: &[f64],
    ys: &[f64],
    labels: &[S],
    x_label: &str,
    y_label: &str,
) -> Result<PlotDocument> {
    check_lengths("scatter x vs y", xs.len(), ys.len())?;
    check_lengths("scatter points vs labels", xs.len(), labels.len())?;
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("scatter values must be finite".into()));
    }
    let frame = Frame {
        x: axis_range(xs, false),
        y: axis_range(ys, false),
    };
    let mut svg = header(&format!("{y_label} vs {x_label}"));
    x_axis(&mut svg, &frame, x_label, true);
    y_axis(&mut svg, &frame, y_label);
    let mut tsv = format!("label\t{x_label}\t{y_label}\n");
    for ((&x, &y), label) in xs.iter().zip(ys).zip(labels) {
        let (cx, cy) = (frame.px(x), frame.py(y));
        let label = label.as_ref();
        let _ = writeln!(
            svg,
            r##"<circle class="point" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="#1f5fbf"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text class="point-label" x="{:.2}" y="{:.2}">{}</text>"#,
            cx + 6.0,
            cy - 6.0,
            escape(label)
        );
        let _ = writeln!(tsv, "{label}\t{x}\t{y}");
    }
    svg.push_str("</svg>\n");
    Ok(PlotDocument { svg, tsv })
}

/// Stacked bars: `h_mt` at the bottom, `xmi` on top, totalling `h_lm`.
pub fn render_stack<S: AsRef<str>>(h_mt: &[f64], xmi: &[f64], labels: &[S]) -> Result<PlotDocument> {
    check_lengths("stack H_MT vs XMI", h_mt.len(), xmi.len())?;
    check_lengths("stack bars vs labels", h_mt.len(), labels.len())?;
    for (i, (&m, &x)) in h_mt.iter().zip(xmi).enumerate() {
        if !(m.is_finite() && x.is_finite()) || m < 0.0 || x < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bar {} has a negative or non-finite segment ({m}, {x})",
                labels[i].as_ref()
            )));
        }
    }
    let totals: Vec<f64> = h_mt.iter().zip(xmi).map(|(m, x)| m + x).collect();
    let n = h_mt.len();
    let frame = Frame {
        x: (0.0, n.max(1) as f64, 1.0),
        y: axis_range(&totals, true),
    };
    let mut svg = header("H_MT and XMI per direction");
    x_axis(&mut svg, &frame, "direction", false);
    y_axis(&mut svg, &frame, "bits per sentence");
    let slot = frame.px(1.0) - frame.px(0.0);
    let bar = slot * 0.7;
    let mut tsv = String::from("direction\th_mt\txmi\th_lm\n");
    for i in 0..n {
        let x = frame.px(i as f64) + (slot - bar) / 2.0;
        let base = frame.py(0.0);
        let mid = frame.py(h_mt[i]);
        let top = frame.py(totals[i]);
        let label = labels[i].as_ref();
        let _ = writeln!(
            svg,
            r##"<rect class="h-mt" x="{x:.2}" y="{mid:.2}" width="{bar:.2}" height="{:.2}" fill="#9aa5b1"/>"##,
            base - mid
        );
        let _ = writeln!(
            svg,
            r##"<rect class="xmi" x="{x:.2}" y="{top:.2}" width="{bar:.2}" height="{:.2}" fill="#d9822b"/>"##,
            mid - top
        );
        let _ = writeln!(
            svg,
            r#"<text class="bar-label" transform="translate({:.2} {:.2}) rotate(45)">{}</text>"#,
            x + bar / 2.0,
            base + 10.0,
            escape(label)
        );
        let _ = writeln!(tsv, "{label}\t{}\t{}\t{}", h_mt[i], xmi[i], totals[i]);
    }
    for (j, (class, fill, name)) in [("h-mt", "#9aa5b1", "H_MT"), ("xmi", "#d9822b", "XMI")]
        .iter()
        .enumerate()
    {
        let y = TOP + 14.0 * j as f64;
        let x = WIDTH - RIGHT - 80.0;
        let _ = writeln!(
            svg,
            r#"<rect class="legend {class}" x="{x:.2}" y="{:.2}" width="10" height="10" fill="{fill}"/>"#,
            y - 9.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{y:.2}">{name}</text>"#, x + 14.0);
    }
    svg.push_str("</svg>\n");
    Ok(PlotDocument { svg, tsv })
}
