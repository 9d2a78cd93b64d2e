use serde::{Deserialize, Serialize};

use super::AdaptiveMode;
use crate::{Error, Result};

/// Split of N copies into a cube first stage and K adaptive steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSchedule {
    pub n_total: u64,
    /// First-stage copies, including the rounding remainder.
    pub n_stage1: u64,
    pub k_steps: u64,
    pub n_per_step: u64,
}

// floor() of values that are integers in exact arithmetic must not drop by one
// because log10 rounded down.
fn floor_robust(x: f64) -> f64 {
    (x + 1e-9).floor()
}

/// RAQST1: N₁ = N/(1.3 + 0.1 log₁₀N), K = ⌊log₁₀N − 1⌋.
/// RAQST2: N₁ = N(0.8 − 0.01 log₁₀N), K = ⌊1.5 log₁₀N − 2⌋.
///
/// N₂ = ⌊(N − N₁)/K⌋ and the remainder goes back to the first stage. K ≤ 0
/// (very small N) degrades to a single adaptive step.
pub fn resource_schedule(n_total: u64, mode: AdaptiveMode) -> Result<ResourceSchedule> {
    if n_total < 10 {
        return Err(Error::InvalidArgument(format!("too few copies for a two-stage schedule: {n_total}")));
    }
    let n = n_total as f64;
    let lg = n.log10();
    let (n1, k) = match mode {
        AdaptiveMode::Raqst1 => (floor_robust(n / (1.3 + 0.1 * lg)), floor_robust(lg - 1.0)),
        AdaptiveMode::Raqst2 => (floor_robust(n * (0.8 - 0.01 * lg)), floor_robust(1.5 * lg - 2.0)),
    };
    let mut n1 = (n1.max(1.0) as u64).min(n_total - 1);
    let k = if k < 1.0 {
        log::warn!("schedule for N={n_total} gives K={k}; using a single adaptive step");
        1
    } else {
        k as u64
    };
    let k = k.min(n_total - n1);
    let n2 = (n_total - n1) / k;
    n1 += (n_total - n1) - k * n2;
    Ok(ResourceSchedule {
        n_total,
        n_stage1: n1,
        k_steps: k,
        n_per_step: n2,
    })
}
