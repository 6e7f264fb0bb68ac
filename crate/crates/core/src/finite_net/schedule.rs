use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    /// Width-dependent rates that give a non-trivial infinite-width limit.
    Scaled,
    /// The same rate for every group regardless of width.
    Constant,
}

/// Per-group multipliers, or per-group learning rates once resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub c: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
}

impl GroupRates {
    pub const ONES: GroupRates = GroupRates { c: 1.0, w1: 1.0, w2: 1.0, w3: 1.0 };
}

impl Default for GroupRates {
    fn default() -> Self {
        Self::ONES
    }
}

/// Resolved `α` values. `w3` is zero for depth 2.
pub type LearningRates = GroupRates;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRateSchedule {
    pub mode: ScheduleMode,
    pub depth: usize,
    /// Multiplies each group's rate; a zero freezes the group.
    pub base: GroupRates,
    /// The common rate in constant mode.
    pub constant: f64,
}

impl LearningRateSchedule {
    pub fn scaled(depth: usize) -> Self {
        LearningRateSchedule {
            mode: ScheduleMode::Scaled,
            depth,
            base: GroupRates::ONES,
            constant: 1.0,
        }
    }

    pub fn constant(depth: usize, alpha: f64) -> Self {
        LearningRateSchedule {
            mode: ScheduleMode::Constant,
            depth,
            base: GroupRates::ONES,
            constant: alpha,
        }
    }

    pub fn with_base(mut self, base: GroupRates) -> Self {
        self.base = base;
        self
    }

    /// Resolves the per-group `α` for the given widths.
    ///
    /// Scaled, depth 2: `α_C = N₂/N₁`, `α_{W,1} = 1`, `α_{W,2} = N₂`.
    /// Scaled, depth 3: `α_C = N₃/N₁`, `α_{W,1} = 1`, `α_{W,2} = N₂`, `α_{W,3} = N₂N₃/N₁`.
    pub fn learning_rates(&self, widths: &[usize]) -> Result<LearningRates> {
        if widths.len() != self.depth || !(2..=3).contains(&self.depth) {
            return Err(Error::config(format!(
                "schedule of depth {} given widths {widths:?}",
                self.depth
            )));
        }
        if widths.contains(&0) {
            return Err(Error::config("widths must be positive"));
        }
        let b = self.base;
        let raw = match self.mode {
            ScheduleMode::Constant => {
                let a = self.constant;
                GroupRates { c: a, w1: a, w2: a, w3: if self.depth == 3 { a } else { 0.0 } }
            }
            ScheduleMode::Scaled => {
                let r = scaled_rates_for_depth(widths);
                match self.depth {
                    2 => GroupRates { c: r[0], w1: r[1], w2: r[2], w3: 0.0 },
                    _ => GroupRates { c: r[0], w1: r[1], w2: r[2], w3: r[3] },
                }
            }
        };
        Ok(GroupRates {
            c: b.c * raw.c,
            w1: b.w1 * raw.w1,
            w2: b.w2 * raw.w2,
            w3: b.w3 * raw.w3,
        })
    }
}

/// Scaled rates for an `L`-layer network with widths `N₁..N_L`, returned as
/// `[α_C, α_{W,1}, α_{W,2}, ..., α_{W,L}]` where `α_C = N_L/N₁`, `α_{W,1} = 1`
/// and `α_{W,ℓ} = N_{ℓ-1} N_ℓ / N₁` for `ℓ ≥ 2` (so `α_{W,2} = N₂`).
pub fn scaled_rates_for_depth(widths: &[usize]) -> Vec<f64> {
    let n: Vec<f64> = widths.iter().map(|&w| w as f64).collect();
    let l = n.len();
    let mut out = Vec::with_capacity(l + 1);
    out.push(n[l - 1] / n[0]);
    out.push(1.0);
    for ell in 1..l {
        out.push(n[ell - 1] * n[ell] / n[0]);
    }
    out
}
