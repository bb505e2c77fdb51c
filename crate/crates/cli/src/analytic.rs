//! Closed-form predictions for a configuration.

use std::fmt;
use std::path::Path;

use biloc_core::quantum::{
    biloc_functional, born_behavior, born_bipartite, chsh, Convention, FunctionalResult,
};
use biloc_core::{ExperimentConfig, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct AnalyticReport {
    pub peripheral: FunctionalResult,
    pub literal: FunctionalResult,
    pub S_AB: f64,
    pub S_BC: f64,
}

pub fn analytic(cfg: &ExperimentConfig) -> Result<AnalyticReport> {
    let n = &cfg.network;
    let rho1 = n.source1.state.build()?;
    let rho2 = n.source2.state.build()?;
    let plan = n.plan.build()?;
    let beh = born_behavior(&rho1, &rho2, &plan);
    Ok(AnalyticReport {
        peripheral: biloc_functional(&beh, Convention::Peripheral),
        literal: biloc_functional(&beh, Convention::Literal),
        S_AB: chsh(&born_bipartite(&rho1, &plan.a, &plan.b_arm_a)),
        S_BC: chsh(&born_bipartite(&rho2, &plan.b_arm_c, &plan.c)),
    })
}

impl fmt::Display for AnalyticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>10} {:>10} {:>10}",
            "convention", "I1", "I2", "B"
        )?;
        for (name, r) in [("peripheral", &self.peripheral), ("literal", &self.literal)] {
            writeln!(f, "{name:<12} {:>10.6} {:>10.6} {:>10.6}", r.i1, r.i2, r.b)?;
        }
        writeln!(f, "S_AB {:.6}", self.S_AB)?;
        write!(f, "S_BC {:.6}", self.S_BC)
    }
}

pub fn cmd_analytic(config: &Path, json: bool) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let report = analytic(&cfg)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{report}");
    }
    Ok(())
}
