//! Run artifacts: atomic files, CSV, run manifests and SVG line charts.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use chanpred_core::tensor::checkpoint::write_atomic;
use chanpred_core::{Error, Result};
use serde::Serialize;

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Internal(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Internal(format!("csv: {e}")))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn git_revision() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_owned())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub git_revision: Option<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub artifacts: Vec<PathBuf>,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub wall_time_s: f64,
    pub extra: serde_json::Value,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, seeds: Vec<u64>, threads: Option<usize>) -> Self {
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            git_revision: git_revision(),
            config,
            seeds,
            threads,
            artifacts: Vec::new(),
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            wall_time_s: 0.0,
            extra: serde_json::Value::Null,
        }
    }

    pub fn finish(mut self, path: &Path) -> Result<()> {
        self.finished_unix_s = unix_now();
        self.wall_time_s = self.finished_unix_s - self.started_unix_s;
        self.artifacts.push(path.to_path_buf());
        write_atomic(path, serde_json::to_string_pretty(&self)?.as_bytes())
    }
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Two-column text: one block per series, blank-line separated.
pub fn plot_data(y_label: &str, series: &[Series]) -> String {
    let mut out = String::new();
    for s in series {
        out.push_str(&format!("# {}\n# eb_n0_db {y_label}\n", s.label));
        for (x, y) in &s.points {
            out.push_str(&format!("{x} {y}\n"));
        }
        out.push('\n');
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Static line chart; `log_y` plots positive values on a decade scale.
pub fn svg_chart(title: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 440.0, 80.0, 180.0, 40.0, 50.0);
    let tf = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(_, y)| y.is_finite() && (!log_y || *y > 0.0))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(tf(y));
        y1 = y1.max(tf(y));
    }
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    } else if y1 - y0 < 1e-12 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (tf(y) - y0) / (y1 - y0) * (h - mt - mb);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    s.push_str("<!-- data\n");
    s.push_str(&plot_data(y_label, series).replace("--", "- -"));
    s.push_str("-->\n");
    s.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        (ml + w - mr) / 2.0
    ));
    let (bx0, bx1, by0, by1) = (ml, w - mr, mt, h - mb);
    s.push_str(&format!(
        "<rect x=\"{bx0}\" y=\"{by0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        bx1 - bx0,
        by1 - by0
    ));
    for t in nice_ticks(x0, x1) {
        let x = px(t);
        s.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{by0}\" x2=\"{x:.1}\" y2=\"{by1}\" stroke=\"#ddd\"/>\n<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\">{t}</text>\n",
            by1 + 16.0
        ));
    }
    let yt: Vec<f64> = if log_y {
        (y0 as i64..=y1 as i64).map(|e| 10f64.powi(e as i32)).collect()
    } else {
        nice_ticks(y0, y1)
    };
    for t in yt {
        let y = py(t);
        let label = if log_y { format!("1e{}", t.log10().round()) } else { format!("{t}") };
        s.push_str(&format!(
            "<line x1=\"{bx0}\" y1=\"{y:.1}\" x2=\"{bx1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>\n",
            bx0 - 6.0,
            y + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">Eb/N0 [dB]</text>\n",
        (bx0 + bx1) / 2.0,
        h - 10.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        (by0 + by1) / 2.0,
        (by0 + by1) / 2.0
    ));
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|(_, y)| y.is_finite() && (!log_y || *y > 0.0))
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        s.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        let ly = mt + 14.0 + 18.0 * i as f64;
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n<text x=\"{}\" y=\"{}\">{}</text>\n",
            bx1 + 10.0,
            bx1 + 30.0,
            bx1 + 36.0,
            ly + 4.0,
            ser.label.replace('&', "&amp;").replace('<', "&lt;")
        ));
    }
    s.push_str("</svg>\n");
    s
}
