//! Analysis of a run directory.

use std::path::{Path, PathBuf};

use anyhow::Context;
use biloc_core::coincidence::{fourfold_filter, CountsTable};
use biloc_core::io::{has_references, load_references, load_streams};
use biloc_core::pipeline::{analyze, analyze_aligned, Analysis, AnalysisParams};
use biloc_core::quantum::{settings_bits, ArmBehavior, Convention};
use biloc_core::ExperimentConfig;
use serde::Serialize;

use crate::simulate::CONFIG_FILE;
use crate::{write_csv, write_json};

#[derive(Debug, Clone, Default)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    pub config: Option<PathBuf>,
    pub windows_ns: Option<Vec<f64>>,
    pub blocks: Option<usize>,
    pub convention: Option<Convention>,
    pub force: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct SweepRow {
    pub window_ns: f64,
    pub n_fourfolds: usize,
    pub B: Option<f64>,
    pub std_error: Option<f64>,
    pub sigma_distance: Option<f64>,
    pub I1: Option<f64>,
    pub I2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshRow {
    pub link: &'static str,
    pub n_twofolds: usize,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct CountsRow {
    pub xA: usize,
    pub xB: usize,
    pub xC: usize,
    pub a: usize,
    pub bA: usize,
    pub bC: usize,
    pub c: usize,
    pub count: u64,
}

pub fn load_config(args: &AnalyzeArgs) -> anyhow::Result<ExperimentConfig> {
    let path = args
        .config
        .clone()
        .unwrap_or_else(|| args.input.join(CONFIG_FILE));
    let mut cfg = ExperimentConfig::load(&path)?;
    if let Some(w) = &args.windows_ns {
        cfg.analysis.fourfold_windows_ns = w.clone();
    }
    if let Some(n) = args.blocks {
        cfg.analysis.n_blocks = n;
    }
    if let Some(c) = args.convention {
        cfg.analysis.convention = c;
    }
    cfg.analysis.validate()?;
    Ok(cfg)
}

/// Window length in ns, rounded to 1e-6 ns so CSVs carry no float noise.
fn ticks_to_ns(ticks: u64, tick_s: f64) -> f64 {
    (ticks as f64 * tick_s * 1e15).round() / 1e6
}

pub fn sweep_rows(a: &Analysis, tick_s: f64) -> Vec<SweepRow> {
    a.sweep
        .iter()
        .map(|p| SweepRow {
            window_ns: ticks_to_ns(p.window_ticks, tick_s),
            n_fourfolds: p.n_fourfolds,
            B: p.estimate.map(|e| e.value),
            std_error: p.estimate.map(|e| e.std_error),
            sigma_distance: p.sigma_distance(),
            I1: p.pooled.map(|f| f.i1),
            I2: p.pooled.map(|f| f.i2),
        })
        .collect()
}

pub fn counts_rows(table: &CountsTable) -> Vec<CountsRow> {
    let mut rows = Vec::with_capacity(128);
    for s in 0..8 {
        let (xa, xb, xc) = settings_bits(s);
        for o in 0..16 {
            let (a, ba, bc, c) = ArmBehavior::outcome_bits(o);
            rows.push(CountsRow {
                xA: xa,
                xB: xb,
                xC: xc,
                a,
                bA: ba,
                bC: bc,
                c,
                count: table.get(xa, xb, xc, a, ba, bc, c),
            });
        }
    }
    rows
}

/// Analyze `args.input` and write every artifact; returns the analysis.
pub fn analyze_dir(args: &AnalyzeArgs) -> anyhow::Result<Analysis> {
    let cfg = load_config(args)?;
    let mut params = AnalysisParams::from_config(&cfg);
    params.force = args.force;
    let streams = load_streams(&args.input)?;
    let analysis = if has_references(&args.input) {
        let refs = load_references(&args.input)?;
        analyze(streams, &refs, &params)?
    } else {
        analyze_aligned(&streams, &params)?
    };

    let out = args.out.clone().unwrap_or_else(|| args.input.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_outputs(&out, &analysis, &params)?;
    Ok(analysis)
}

fn write_outputs(out: &Path, a: &Analysis, p: &AnalysisParams) -> anyhow::Result<()> {
    write_csv(&out.join("sweep.csv"), &sweep_rows(a, p.tick_s))?;
    let chsh = [("AB", &a.ab, a.chsh_ab), ("BC", &a.bc, a.chsh_bc)].map(|(link, ev, e)| ChshRow {
        link,
        n_twofolds: ev.len(),
        s: e.map(|e| e.value),
        std_error: e.map(|e| e.std_error),
    });
    write_csv(&out.join("chsh.csv"), &chsh)?;
    let best = fourfold_filter(&a.ab, &a.bc, a.sweep[a.optimal].window_ticks);
    write_csv(
        &out.join("counts.csv"),
        &counts_rows(&CountsTable::from_fourfolds(&best)),
    )?;
    write_json(&out.join("summary.json"), &a.summary)?;
    if let Some(sync) = &a.sync {
        write_json(&out.join("sync.json"), sync)?;
        std::fs::write(
            out.join("sync_hist_AB.csv"),
            sync.ab.fine.histogram.to_csv(),
        )?;
        std::fs::write(
            out.join("sync_hist_BC.csv"),
            sync.bc.fine.histogram.to_csv(),
        )?;
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let a = analyze_dir(args)?;
    let s = &a.summary;
    if let Some(sync) = &a.sync {
        for (name, l) in [("AB", &sync.ab), ("BC", &sync.bc)] {
            println!(
                "offset {name} {:.2} ticks (peak/background {:.1}, residual {:.1})",
                l.fine.offset_refined, l.fine.peak_to_background, l.fine.residual_ticks
            );
        }
    }
    println!(
        "B = {:.4} ± {:.4} ({:.1} σ above 1)",
        s.B, s.B_std_error, s.sigma_distance
    );
    println!(
        "I1 = {:.4}, I2 = {:.4}, {} convention",
        s.I1, s.I2, s.convention
    );
    if let (Some(v), Some(e)) = (s.S_AB, s.S_AB_std_error) {
        println!("S_AB = {v:.4} ± {e:.4}");
    }
    if let (Some(v), Some(e)) = (s.S_BC, s.S_BC_std_error) {
        println!("S_BC = {v:.4} ± {e:.4}");
    }
    println!(
        "window {:.1} ns, {} four-folds, space-like: {}",
        s.optimal_window_ns, s.n_fourfolds, s.spacelike
    );
    Ok(())
}
