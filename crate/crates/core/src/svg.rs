//! Minimal standalone SVG renderings of charts.

use std::fmt::Write;

use crate::charts::{ControlLimits, Method, SensitivityRow};

const W: f64 = 720.0;
const H: f64 = 360.0;
const PAD_L: f64 = 80.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 30.0;
const PAD_B: f64 = 40.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, mut y0: f64, mut y1: f64) -> Self {
        if y1 - y0 <= 0.0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.08 * (y1 - y0);
        let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn x(&self, v: f64) -> f64 {
        PAD_L + (v - self.x0) / (self.x1 - self.x0) * (W - PAD_L - PAD_R)
    }

    fn y(&self, v: f64) -> f64 {
        H - PAD_B - (v - self.y0) / (self.y1 - self.y0) * (H - PAD_T - PAD_B)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" width=\"{W}\" height=\"{H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str) {
    let _ = writeln!(
        out,
        "<rect x=\"{PAD_L}\" y=\"{PAD_T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        W - PAD_L - PAD_R,
        H - PAD_T - PAD_B
    );
    for i in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            PAD_L - 6.0,
            f.y(v) + 4.0,
            tick(v, f.y1 - f.y0)
        );
    }
    for i in 0..=4 {
        let v = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            f.x(v),
            H - PAD_B + 16.0,
            tick(v, f.x1 - f.x0)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        PAD_L + (W - PAD_L - PAD_R) / 2.0,
        H - 6.0,
        escape(x_label)
    );
}

fn tick(v: f64, span: f64) -> String {
    let digits = if span > 0.0 { (2.0 - span.log10().floor()).clamp(0.0, 8.0) as usize } else { 3 };
    format!("{v:.digits$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn hline(out: &mut String, f: &Frame, y: f64, color: &str, dash: bool, label: &str) {
    let dash = if dash { " stroke-dasharray=\"6 4\"" } else { "" };
    let _ = writeln!(
        out,
        "<line x1=\"{PAD_L}\" x2=\"{}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"{dash}/>\
         <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"{color}\">{label}</text>",
        W - PAD_R,
        f.y(y),
        f.y(y),
        W - PAD_R - 4.0,
        f.y(y) - 4.0
    );
}

/// X̄ chart of subgroup means against fixed limits; out-of-limit points are red.
pub fn xbar_chart(means: &[f64], limits: &ControlLimits, title: &str) -> String {
    let lo = means.iter().copied().fold(limits.lcl, f64::min);
    let hi = means.iter().copied().fold(limits.ucl, f64::max);
    let f = Frame::new(1.0, means.len().max(2) as f64, lo, hi);
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, "subgroup");
    hline(&mut out, &f, limits.ucl, "#c0392b", true, "UCL");
    hline(&mut out, &f, limits.cl, "#2c3e50", false, "CL");
    hline(&mut out, &f, limits.lcl, "#c0392b", true, "LCL");
    if !means.is_empty() {
        let pts: Vec<String> = means
            .iter()
            .enumerate()
            .map(|(i, &m)| format!("{:.2},{:.2}", f.x(i as f64 + 1.0), f.y(m)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#2980b9\"/>",
            pts.join(" ")
        );
    }
    for (i, &m) in means.iter().enumerate() {
        let color = if limits.contains(m) { "#2980b9" } else { "#c0392b" };
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"><title>{}: {m}</title></circle>",
            f.x(i as f64 + 1.0),
            f.y(m),
            i + 1
        );
    }
    out.push_str("</svg>\n");
    out
}

fn method_color(m: Method) -> &'static str {
    match m {
        Method::I => "#c0392b",
        Method::II => "#27ae60",
        Method::III => "#2980b9",
    }
}

/// LCL, CL and UCL against the contaminating value δ, one colour per method.
pub fn sensitivity_chart(rows: &[SensitivityRow], title: &str) -> String {
    let mut out = String::new();
    open(&mut out, title);
    if rows.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for r in rows {
        x0 = x0.min(r.delta);
        x1 = x1.max(r.delta);
        y0 = y0.min(r.limits.lcl);
        y1 = y1.max(r.limits.ucl);
    }
    let f = Frame::new(x0, x1, y0, y1);
    axes(&mut out, &f, "contaminating value");
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    for (k, &m) in methods.iter().enumerate() {
        let mine: Vec<&SensitivityRow> = rows.iter().filter(|r| r.method == m).collect();
        let color = method_color(m);
        let series: [(fn(&ControlLimits) -> f64, bool); 3] =
            [(|l| l.lcl, true), (|l| l.cl, false), (|l| l.ucl, true)];
        for (get, dash) in series {
            let pts: Vec<String> = mine
                .iter()
                .map(|r| format!("{:.2},{:.2}", f.x(r.delta), f.y(get(&r.limits))))
                .collect();
            let dash = if dash { " stroke-dasharray=\"6 4\"" } else { "" };
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\"{dash}/>",
                pts.join(" ")
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">Method {m}</text>",
            PAD_L + 8.0,
            PAD_T + 16.0 + 14.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Histogram of run lengths on `bins` equal-width bins.
pub fn run_length_histogram(run_lengths: &[u64], bins: usize, title: &str) -> String {
    let mut out = String::new();
    open(&mut out, title);
    if run_lengths.is_empty() || bins == 0 {
        out.push_str("</svg>\n");
        return out;
    }
    let max = *run_lengths.iter().max().expect("non-empty") as f64;
    let width = (max / bins as f64).max(1.0);
    let mut counts = vec![0u64; bins];
    for &r in run_lengths {
        let b = (((r as f64 - 1.0) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let top = *counts.iter().max().expect("bins > 0") as f64;
    let f = Frame::new(0.0, width * bins as f64, 0.0, top);
    axes(&mut out, &f, "run length");
    for (i, &c) in counts.iter().enumerate() {
        let (xa, xb) = (f.x(i as f64 * width), f.x((i + 1) as f64 * width));
        let _ = writeln!(
            out,
            "<rect x=\"{xa:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#7f8c8d\"/>",
            f.y(c as f64),
            (xb - xa - 1.0).max(0.5),
            f.y(0.0) - f.y(c as f64)
        );
    }
    out.push_str("</svg>\n");
    out
}
