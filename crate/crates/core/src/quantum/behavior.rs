//! Conditional outcome distributions.
//!
//! Settings triples (xA, xB, xC) are packed as `xA << 2 | xB << 1 | xC`.
//! Outcomes use the same packing: (a, b, c) → `a << 2 | b << 1 | c` for the
//! parity-level [`Behavior`] and (a, bA, bC, c) → `a << 3 | bA << 2 | bC << 1 | c`
//! for the arm-resolved [`ArmBehavior`].

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

#[inline]
pub fn settings_index(xa: usize, xb: usize, xc: usize) -> usize {
    debug_assert!(xa < 2 && xb < 2 && xc < 2);
    (xa << 2) | (xb << 1) | xc
}

#[inline]
pub fn settings_bits(index: usize) -> (usize, usize, usize) {
    ((index >> 2) & 1, (index >> 1) & 1, index & 1)
}

#[inline]
fn sign(bits: usize) -> f64 {
    if bits.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_rows<const N: usize>(table: &[[f64; N]]) -> Result<()> {
    for (s, row) in table.iter().enumerate() {
        let mut total = 0.0;
        for (o, &p) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!(
                    "entry ({s}, {o}) = {p} outside [0, 1]"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "settings {s} sums to {total}"
            )));
        }
    }
    Ok(())
}

/// p(a, b, c | xA, xB, xC) with b the central node's single (parity) bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    table: [[f64; 8]; 8],
}

impl Behavior {
    pub fn new(table: [[f64; 8]; 8]) -> Result<Self> {
        check_rows(&table)?;
        Ok(Self { table })
    }

    pub fn uniform() -> Self {
        Self {
            table: [[0.125; 8]; 8],
        }
    }

    /// Every setting produces the fixed outcome (a, b, c).
    pub fn deterministic(a: usize, b: usize, c: usize) -> Self {
        let mut table = [[0.0; 8]; 8];
        for row in table.iter_mut() {
            row[settings_index(a, b, c)] = 1.0;
        }
        Self { table }
    }

    pub fn table(&self) -> &[[f64; 8]; 8] {
        &self.table
    }

    pub fn prob(&self, xa: usize, xb: usize, xc: usize, a: usize, b: usize, c: usize) -> f64 {
        self.table[settings_index(xa, xb, xc)][settings_index(a, b, c)]
    }

    /// ⟨A^xA B^xB C^xC⟩ = Σ (−1)^{a+b+c} p(a,b,c|x)
    pub fn correlator(&self, xa: usize, xb: usize, xc: usize) -> f64 {
        self.table[settings_index(xa, xb, xc)]
            .iter()
            .enumerate()
            .map(|(o, p)| sign(o) * p)
            .sum()
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        self.table
            .iter()
            .flatten()
            .zip(other.table.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Flip the outcome of `party` (0 = A, 1 = B, 2 = C) whenever its setting
    /// equals `setting`.
    pub fn relabel(&self, party: usize, setting: usize) -> Self {
        let shift = 2 - party;
        let mut table = [[0.0; 8]; 8];
        for (s, row) in self.table.iter().enumerate() {
            let flip = ((s >> shift) & 1) == setting;
            for (o, &p) in row.iter().enumerate() {
                let o2 = if flip { o ^ (1 << shift) } else { o };
                table[s][o2] = p;
            }
        }
        Self { table }
    }
}

/// p(a, bA, bC, c | xA, xB, xC), keeping both central-arm outcome bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmBehavior {
    table: [[f64; 16]; 8],
}

impl ArmBehavior {
    pub fn new(table: [[f64; 16]; 8]) -> Result<Self> {
        check_rows(&table)?;
        Ok(Self { table })
    }

    pub fn table(&self) -> &[[f64; 16]; 8] {
        &self.table
    }

    #[inline]
    pub fn outcome_index(a: usize, ba: usize, bc: usize, c: usize) -> usize {
        (a << 3) | (ba << 2) | (bc << 1) | c
    }

    #[inline]
    pub fn outcome_bits(index: usize) -> (usize, usize, usize, usize) {
        (
            (index >> 3) & 1,
            (index >> 2) & 1,
            (index >> 1) & 1,
            index & 1,
        )
    }

    /// Marginal with the central outcome reduced to b = bA ⊕ bC.
    pub fn parity_marginal(&self) -> Behavior {
        let mut table = [[0.0; 8]; 8];
        for (s, row) in self.table.iter().enumerate() {
            for (o, &p) in row.iter().enumerate() {
                let (a, ba, bc, c) = Self::outcome_bits(o);
                table[s][settings_index(a, ba ^ bc, c)] += p;
            }
        }
        Behavior { table }
    }

    /// Lift a parity-level behavior by drawing bA uniformly and setting
    /// bC = b ⊕ bA.
    pub fn from_parity(beh: &Behavior) -> Self {
        let mut table = [[0.0; 16]; 8];
        for (s, row) in beh.table.iter().enumerate() {
            for (o, &p) in row.iter().enumerate() {
                let (a, b, c) = settings_bits(o);
                for ba in 0..2 {
                    table[s][Self::outcome_index(a, ba, b ^ ba, c)] += 0.5 * p;
                }
            }
        }
        Self { table }
    }

    /// p(a, bA | xA, xB), read at xC = 0.
    pub fn ab_marginal(&self) -> BipartiteBehavior {
        let mut table = [[0.0; 4]; 4];
        for xa in 0..2 {
            for xb in 0..2 {
                let row = &self.table[settings_index(xa, xb, 0)];
                for (o, &p) in row.iter().enumerate() {
                    let (a, ba, _, _) = Self::outcome_bits(o);
                    table[(xa << 1) | xb][(a << 1) | ba] += p;
                }
            }
        }
        BipartiteBehavior { table }
    }

    /// p(bC, c | xB, xC), read at xA = 0.
    pub fn bc_marginal(&self) -> BipartiteBehavior {
        let mut table = [[0.0; 4]; 4];
        for xb in 0..2 {
            for xc in 0..2 {
                let row = &self.table[settings_index(0, xb, xc)];
                for (o, &p) in row.iter().enumerate() {
                    let (_, _, bc, c) = Self::outcome_bits(o);
                    table[(xb << 1) | xc][(bc << 1) | c] += p;
                }
            }
        }
        BipartiteBehavior { table }
    }
}

/// p(a, b | x, y) for a two-party experiment; index packing `x << 1 | y`,
/// `a << 1 | b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteBehavior {
    table: [[f64; 4]; 4],
}

impl BipartiteBehavior {
    pub fn new(table: [[f64; 4]; 4]) -> Result<Self> {
        check_rows(&table)?;
        Ok(Self { table })
    }

    pub fn table(&self) -> &[[f64; 4]; 4] {
        &self.table
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[(x << 1) | y][(a << 1) | b]
    }

    pub fn correlator(&self, x: usize, y: usize) -> f64 {
        self.table[(x << 1) | y]
            .iter()
            .enumerate()
            .map(|(o, p)| sign(o) * p)
            .sum()
    }

    /// Swap the first party's outcome labels for every setting.
    pub fn relabel_first(&self) -> Self {
        let mut table = self.table;
        for (s, row) in self.table.iter().enumerate() {
            for (o, p) in row.iter().enumerate() {
                table[s][o ^ 2] = *p;
            }
        }
        Self { table }
    }
}
