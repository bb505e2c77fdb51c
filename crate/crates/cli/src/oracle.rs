//! Hidden-variable bounds and the (I1, I2) region.

use std::path::Path;

use anyhow::Context;
use biloc_core::oracle::{
    max_biloc_bilocal, max_i1_plus_i2_local, region_scan, OptBudget, RegionPoint,
};
use biloc_core::Result;
use serde::Serialize;

use crate::{write_csv, write_json};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub card: usize,
    pub bilocal_max_b: f64,
    /// False when the optimizer ran out of sweeps; the maximum is then a
    /// lower bound on the true one.
    pub bilocal_converged: bool,
    pub tables_examined: u64,
    pub witness_p1: Vec<f64>,
    pub witness_p2: Vec<f64>,
    pub local_max_abs_sum: f64,
    pub local_vertices: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct RegionRow {
    pub I1: f64,
    pub I2: f64,
    pub bilocal: bool,
    pub local: bool,
}

impl From<&RegionPoint> for RegionRow {
    fn from(p: &RegionPoint) -> Self {
        Self {
            I1: p.i1,
            I2: p.i2,
            bilocal: p.bilocal,
            local: p.local,
        }
    }
}

pub fn oracle_report(card: usize) -> Result<OracleReport> {
    let bil = max_biloc_bilocal(card, card, OptBudget::default())?;
    let loc = max_i1_plus_i2_local(card)?;
    Ok(OracleReport {
        card,
        bilocal_max_b: bil.max_b,
        bilocal_converged: bil.converged,
        tables_examined: bil.tables_examined,
        witness_p1: bil.witness_dist.p1().to_vec(),
        witness_p2: bil.witness_dist.p2().to_vec(),
        local_max_abs_sum: loc.max_abs_sum,
        local_vertices: loc.vertices.len(),
    })
}

pub fn region_rows(resolution: usize) -> Result<Vec<RegionRow>> {
    Ok(region_scan(resolution)?
        .iter()
        .map(RegionRow::from)
        .collect())
}

pub fn cmd_oracle(card: usize, resolution: usize, out: &Path) -> anyhow::Result<()> {
    let rows = region_rows(resolution)?;
    let report = oracle_report(card)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_csv(&out.join("region.csv"), &rows)?;
    write_json(&out.join("oracle.json"), &report)?;
    println!("card {card}");
    println!("bilocal max B        {:.6}", report.bilocal_max_b);
    if !report.bilocal_converged {
        println!("  (partial: sweep budget exhausted, value is a lower bound)");
    }
    println!("local max |I1|+|I2|  {:.6}", report.local_max_abs_sum);
    println!("region rows          {}", rows.len());
    Ok(())
}
