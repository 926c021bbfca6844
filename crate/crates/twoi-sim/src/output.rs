//! Artifact files: CSV data, a JSON metrics block, and a JSON metadata file
//! with a completeness sentinel.
//!
//! Metadata is written first (with `complete = false`) so an interrupted
//! run is recognizable; it is rewritten with metrics and timing once all
//! data files are on disk. Numeric formatting is fixed, so identical runs
//! produce byte-identical data files.

use crate::config::RunConfig;
use crate::scenarios::Trace;
use crate::stats::Histogram;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const METADATA_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub complete: bool,
    pub tool_version: String,
    pub preset: Option<String>,
    pub seed: u64,
    pub workers: usize,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl Metadata {
    pub fn new(config: &RunConfig, preset: Option<&str>, workers: usize) -> Self {
        Metadata {
            schema_version: METADATA_SCHEMA_VERSION,
            complete: false,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            preset: preset.map(str::to_string),
            seed: config.run.seed,
            workers,
            config: config.clone(),
            counts: None,
            metrics: None,
            wall_seconds: None,
            warnings: Vec::new(),
        }
    }
}

pub fn write_metadata(dir: &Path, meta: &Metadata) -> std::io::Result<PathBuf> {
    let path = dir.join("metadata.json");
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    Ok(path)
}

pub fn write_metrics_json(dir: &Path, metrics: &serde_json::Value) -> std::io::Result<PathBuf> {
    let path = dir.join("metrics.json");
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, metrics)?;
    f.write_all(b"\n")?;
    Ok(path)
}

fn fmt_value(v: f64) -> String {
    format!("{v:.9e}")
}

/// Screen-histogram CSV: bin_center, count, reference, scaled_reference.
pub fn write_screen_csv(
    path: &Path,
    hist: &Histogram,
    reference: &[f64],
    scaled_reference: &[f64],
) -> std::io::Result<()> {
    let mut out = String::from("bin_center,count,reference,scaled_reference\n");
    for i in 0..hist.bins() {
        out.push_str(&format!(
            "{:.6},{},{},{}\n",
            hist.bin_center(i),
            hist.counts()[i],
            fmt_value(reference[i]),
            fmt_value(scaled_reference[i]),
        ));
    }
    fs::write(path, out)
}

/// Plain histogram CSV: bin_center, count.
pub fn write_histogram_csv(path: &Path, hist: &Histogram) -> std::io::Result<()> {
    let mut out = String::from("bin_center,count\n");
    for i in 0..hist.bins() {
        out.push_str(&format!("{:.6},{}\n", hist.bin_center(i), hist.counts()[i]));
    }
    fs::write(path, out)
}

/// Variant-generator CSV: bin_center, count, scaled_F.
pub fn write_variant_csv(path: &Path, hist: &Histogram, scaled_f: &[f64]) -> std::io::Result<()> {
    let mut out = String::from("bin_center,count,scaled_F\n");
    for i in 0..hist.bins() {
        out.push_str(&format!(
            "{:.6},{},{}\n",
            hist.bin_center(i),
            hist.counts()[i],
            fmt_value(scaled_f[i]),
        ));
    }
    fs::write(path, out)
}

/// Reference curve CSV: position, intensity.
pub fn write_curve_csv(path: &Path, ys: &[f64], values: &[f64]) -> std::io::Result<()> {
    let mut out = String::from("y,intensity\n");
    for (y, v) in ys.iter().zip(values) {
        out.push_str(&format!("{:.6},{}\n", y, fmt_value(*v)));
    }
    fs::write(path, out)
}

/// Trace CSV: trace_id, label, t, y, z, vel_mismatch (accepted steps).
pub fn write_traces_csv(path: &Path, traces: &[Trace]) -> std::io::Result<()> {
    let mut out = String::from("trace_id,label,t,y,z,vel_mismatch\n");
    for (i, tr) in traces.iter().enumerate() {
        for p in &tr.points {
            out.push_str(&format!(
                "{},{:.6},{:.9},{:.9},{:.9},{}\n",
                i,
                tr.label,
                p.t,
                p.pos.y,
                p.pos.z,
                fmt_value(p.vel_mismatch),
            ));
        }
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn metadata_sentinel_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = preset("fig1").unwrap();
        let mut meta = Metadata::new(&cfg, Some("fig1"), 2);
        write_metadata(dir.path(), &meta).unwrap();
        let text = fs::read_to_string(dir.path().join("metadata.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["complete"], false);
        meta.complete = true;
        meta.wall_seconds = Some(1.25);
        write_metadata(dir.path(), &meta).unwrap();
        let text = fs::read_to_string(dir.path().join("metadata.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["complete"], true);
        assert_eq!(v["seed"], 42);
    }

    #[test]
    fn csv_is_deterministic() {
        let mut h = Histogram::new(-1.0, 1.0, 4);
        for x in [-0.5, 0.1, 0.1, 0.7] {
            h.add(x);
        }
        let refc = vec![0.1, 0.2, 0.3, 0.4];
        let scaled = vec![0.2, 0.4, 0.6, 0.8];
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        write_screen_csv(&p1, &h, &refc, &scaled).unwrap();
        write_screen_csv(&p2, &h, &refc, &scaled).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let text = fs::read_to_string(&p1).unwrap();
        assert!(text.starts_with("bin_center,count,reference,scaled_reference\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
