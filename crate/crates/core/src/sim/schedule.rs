use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::settings_bits;

/// Settings held fixed for `block_duration_s`, cycling through `order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSchedule {
    pub block_duration_s: f64,
    /// (xA, xB, xC) per block
    #[serde(default = "all_triples")]
    pub order: Vec<[u8; 3]>,
}

fn all_triples() -> Vec<[u8; 3]> {
    (0..8)
        .map(|s| {
            let (a, b, c) = settings_bits(s);
            [a as u8, b as u8, c as u8]
        })
        .collect()
}

impl Default for SettingsSchedule {
    fn default() -> Self {
        Self {
            block_duration_s: 1.0,
            order: all_triples(),
        }
    }
}

impl SettingsSchedule {
    pub fn new(block_duration_s: f64, order: Vec<[u8; 3]>) -> Result<Self> {
        let s = Self {
            block_duration_s,
            order,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if !(self.block_duration_s > 0.0) || !self.block_duration_s.is_finite() {
            return Err(Error::config(
                "schedule.block_duration_s",
                "must be positive",
            ));
        }
        if self.order.iter().flatten().any(|&b| b > 1) {
            return Err(Error::config("schedule.order", "settings are bits"));
        }
        let mut seen = [false; 8];
        for t in &self.order {
            seen[((t[0] as usize) << 2) | ((t[1] as usize) << 1) | t[2] as usize] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::config(
                "schedule.order",
                "each cycle must visit all eight setting triples",
            ));
        }
        Ok(())
    }

    pub fn block_index(&self, t_true_s: f64) -> u32 {
        (t_true_s.max(0.0) / self.block_duration_s).floor() as u32
    }

    pub fn triple(&self, block_index: u32) -> [u8; 3] {
        self.order[block_index as usize % self.order.len()]
    }

    pub fn triple_at(&self, t_true_s: f64) -> [u8; 3] {
        self.triple(self.block_index(t_true_s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cycles_all_triples() {
        let s = SettingsSchedule::default();
        assert!(s.validate().is_ok());
        assert_eq!(s.triple_at(0.5), [0, 0, 0]);
        assert_eq!(s.triple_at(7.2), [1, 1, 1]);
        assert_eq!(s.triple_at(8.0), [0, 0, 0]);
        assert_eq!(s.block_index(2.999), 2);
    }

    #[test]
    fn rejects_empty_or_partial_orders() {
        assert_eq!(
            SettingsSchedule::new(1.0, vec![]),
            Err(Error::EmptySchedule)
        );
        assert!(SettingsSchedule::new(1.0, vec![[0, 0, 0]]).is_err());
        assert!(SettingsSchedule::new(0.0, all_triples()).is_err());
    }
}
