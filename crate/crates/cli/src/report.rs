//! Plot-ready tables from an analyzed directory.

use std::path::Path;

use anyhow::Context;
use biloc_core::pipeline::Summary;
use serde::{Deserialize, Serialize};

use crate::oracle::region_rows;
use crate::write_csv;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[allow(non_snake_case)]
struct SweepIn {
    window_ns: f64,
    n_fourfolds: usize,
    B: Option<f64>,
    std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct WindowPlotRow {
    pub window_ns: f64,
    pub B: f64,
    pub B_low: f64,
    pub B_high: f64,
    pub n_fourfolds: usize,
    pub bilocal_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct MeasuredPoint {
    pub I1: f64,
    pub I2: f64,
    pub B: f64,
    pub std_error: f64,
}

/// B against window with ±1 standard-error band; windows without an
/// estimate are skipped.
pub fn window_plot(dir: &Path) -> anyhow::Result<Vec<WindowPlotRow>> {
    let path = dir.join("sweep.csv");
    let mut r =
        csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let s: SweepIn = rec?;
        if let (Some(b), Some(e)) = (s.B, s.std_error) {
            rows.push(WindowPlotRow {
                window_ns: s.window_ns,
                B: b,
                B_low: b - e,
                B_high: b + e,
                n_fourfolds: s.n_fourfolds,
                bilocal_bound: 1.0,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_report(dir: &Path, resolution: usize) -> anyhow::Result<()> {
    let rows = window_plot(dir)?;
    write_csv(&dir.join("plot_b_vs_window.csv"), &rows)?;
    write_csv(&dir.join("plot_region.csv"), &region_rows(resolution)?)?;
    let path = dir.join("summary.json");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let s: Summary =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let point = MeasuredPoint {
        I1: s.I1,
        I2: s.I2,
        B: s.B,
        std_error: s.B_std_error,
    };
    write_csv(&dir.join("plot_measured_point.csv"), &[point])?;
    println!(
        "wrote plot_b_vs_window.csv ({} rows), plot_region.csv, plot_measured_point.csv",
        rows.len()
    );
    Ok(())
}
