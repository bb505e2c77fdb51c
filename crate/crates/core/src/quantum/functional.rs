use serde::{Deserialize, Serialize};

use super::behavior::{Behavior, BipartiteBehavior};

/// Which index is held fixed when summing the tripartite correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Sum over (xA, xC) with the central input fixed per term.
    #[default]
    #[serde(alias = "peripheral-sum")]
    Peripheral,
    /// Sum over (xA, xB) with C's input fixed per term.
    Literal,
}

impl std::str::FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "peripheral" | "peripheral-sum" => Ok(Convention::Peripheral),
            "literal" => Ok(Convention::Literal),
            other => Err(format!("unknown convention `{other}`")),
        }
    }
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Convention::Peripheral => "peripheral",
            Convention::Literal => "literal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub i1: f64,
    pub i2: f64,
    pub b: f64,
}

impl FunctionalResult {
    pub fn from_correlations(i1: f64, i2: f64) -> Self {
        Self {
            i1,
            i2,
            b: i1.abs().sqrt() + i2.abs().sqrt(),
        }
    }
}

/// I1, I2 and B = √|I1| + √|I2|.
pub fn biloc_functional(beh: &Behavior, convention: Convention) -> FunctionalResult {
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    for u in 0..2 {
        for v in 0..2 {
            let sgn = if (u + v) % 2 == 0 { 1.0 } else { -1.0 };
            match convention {
                Convention::Peripheral => {
                    i1 += beh.correlator(u, 0, v);
                    i2 += sgn * beh.correlator(u, 1, v);
                }
                Convention::Literal => {
                    i1 += beh.correlator(u, v, 0);
                    i2 += sgn * beh.correlator(u, v, 1);
                }
            }
        }
    }
    FunctionalResult::from_correlations(i1 / 4.0, i2 / 4.0)
}

/// |Σ (−1)^{x·y} ⟨A^x B^y⟩|
pub fn chsh(beh: &BipartiteBehavior) -> f64 {
    (beh.correlator(0, 0) + beh.correlator(0, 1) + beh.correlator(1, 0) - beh.correlator(1, 1))
        .abs()
}
