use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{sample_counts, SimRng};
use crate::adaptive::{build_candidate_set, resource_schedule, select_next_setting, AdaptiveMode};
use crate::estimator::{batch_lre, current_estimate, records_from_counts, EstimatorState, RegressionRecord, DEFAULT_RIDGE};
use crate::measurements::{cube_settings, mub_settings, rotate_mub_to_basis, MeasurementCatalog, Povm};
use crate::quantum::{build_pauli_basis, infidelity, DensityMatrix, HermitianBasis};
use crate::{Error, Result};

/// Smallest copy budget accepted by [`run_protocol`].
pub const MIN_COPIES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Cube,
    Mub,
    MubHalfHalf,
    KnownBasis,
    Raqst1,
    Raqst2,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::Cube,
        ProtocolKind::Mub,
        ProtocolKind::MubHalfHalf,
        ProtocolKind::KnownBasis,
        ProtocolKind::Raqst1,
        ProtocolKind::Raqst2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::Cube => "cube",
            ProtocolKind::Mub => "mub",
            ProtocolKind::MubHalfHalf => "mub_half_half",
            ProtocolKind::KnownBasis => "known_basis",
            ProtocolKind::Raqst1 => "raqst1",
            ProtocolKind::Raqst2 => "raqst2",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.label() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub protocol: ProtocolKind,
    pub n_copies: u64,
    pub seed: u64,
    pub true_state: DensityMatrix,
}

/// One adaptive step as decided by the selection rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveDecision {
    pub step: u64,
    pub setting: String,
    pub effect: usize,
    pub gain: f64,
    /// Unclamped linear prediction for the chosen effect.
    pub predicted_prob: f64,
    pub copies: u64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub infidelity: f64,
    pub estimate: DensityMatrix,
    /// Labels of the settings performed, in order.
    pub settings_used: Vec<String>,
    pub copies_consumed: u64,
    pub decisions: Vec<AdaptiveDecision>,
}

/// Splits `n` over `k` bins as evenly as possible; the first bins take the remainder.
pub fn split_evenly(n: u64, k: usize) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    let k64 = k as u64;
    let (q, r) = (n / k64, n % k64);
    (0..k64).map(|i| q + u64::from(i < r)).collect()
}

/// Holds the two-qubit basis and the fixed catalogs so repeated trials do
/// not rebuild them.
#[derive(Debug, Clone)]
pub struct ProtocolRunner {
    basis: HermitianBasis,
    cube: MeasurementCatalog,
    mub: MeasurementCatalog,
}

struct Ledger {
    settings_used: Vec<String>,
    copies: u64,
}

impl Ledger {
    fn new() -> Self {
        Ledger {
            settings_used: Vec::new(),
            copies: 0,
        }
    }

    /// Measures `povm` on `n` copies and returns the resulting records.
    fn measure(&mut self, rho: &DensityMatrix, povm: &Povm, n: u64, rng: &mut SimRng) -> Result<Vec<RegressionRecord>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let counts = sample_counts(rho, povm, n, rng)?;
        self.settings_used.push(povm.label().to_string());
        self.copies += n;
        records_from_counts(povm, &counts)
    }

    fn measure_split(&mut self, rho: &DensityMatrix, povms: &[Povm], n: u64, rng: &mut SimRng) -> Result<Vec<RegressionRecord>> {
        let mut out = Vec::new();
        for (povm, share) in povms.iter().zip(split_evenly(n, povms.len())) {
            out.extend(self.measure(rho, povm, share, rng)?);
        }
        Ok(out)
    }
}

impl ProtocolRunner {
    pub fn new() -> Result<Self> {
        let basis = build_pauli_basis(2)?;
        let cube = cube_settings(&basis)?;
        let mub = mub_settings(&basis)?;
        Ok(ProtocolRunner { basis, cube, mub })
    }

    pub fn basis(&self) -> &HermitianBasis {
        &self.basis
    }

    pub fn run(&self, cfg: &TrialConfig) -> Result<TrialResult> {
        if cfg.n_copies < MIN_COPIES {
            return Err(Error::InvalidArgument(format!("n_copies must be at least {MIN_COPIES}, got {}", cfg.n_copies)));
        }
        if cfg.true_state.dim() != self.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.dim(),
                got: cfg.true_state.dim(),
            });
        }
        let rho = &cfg.true_state;
        let n = cfg.n_copies;
        let dim = self.basis.dim();
        let mut rng = SimRng::seed_from_u64(cfg.seed);
        let mut ledger = Ledger::new();
        let mut decisions = Vec::new();

        let state = match cfg.protocol {
            ProtocolKind::Cube | ProtocolKind::Mub => {
                let catalog = if cfg.protocol == ProtocolKind::Cube { &self.cube } else { &self.mub };
                let records = ledger.measure_split(rho, catalog.settings(), n, &mut rng)?;
                batch_lre(&records, dim, Some(DEFAULT_RIDGE))?
            }
            ProtocolKind::MubHalfHalf | ProtocolKind::KnownBasis => {
                let n1 = n / 2;
                let records = ledger.measure_split(rho, self.cube.settings(), n1, &mut rng)?;
                let mut state = batch_lre(&records, dim, Some(DEFAULT_RIDGE))?;
                let reference = if cfg.protocol == ProtocolKind::KnownBasis {
                    rho.clone()
                } else {
                    current_estimate(&state, &self.basis)?
                };
                let rotated = rotate_mub_to_basis(&reference, &self.basis)?;
                let records = ledger.measure_split(rho, rotated.settings(), n - n1, &mut rng)?;
                state.absorb_all(&records)?;
                state
            }
            ProtocolKind::Raqst1 | ProtocolKind::Raqst2 => {
                let mode = if cfg.protocol == ProtocolKind::Raqst1 {
                    AdaptiveMode::Raqst1
                } else {
                    AdaptiveMode::Raqst2
                };
                let sched = resource_schedule(n, mode)?;
                let records = ledger.measure_split(rho, self.cube.settings(), sched.n_stage1, &mut rng)?;
                let mut state = batch_lre(&records, dim, Some(DEFAULT_RIDGE))?;
                for step in 0..sched.k_steps {
                    let decision = self.adaptive_step(&mut state, mode, sched.n_per_step, rho, &mut ledger, &mut rng)?;
                    log::debug!(
                        "adaptive step={step} protocol={} seed={} setting={} effect={} gain={:e} p_pred={:e}",
                        cfg.protocol,
                        cfg.seed,
                        decision.setting,
                        decision.effect,
                        decision.gain,
                        decision.predicted_prob
                    );
                    decisions.push(AdaptiveDecision { step, ..decision });
                }
                state
            }
        };

        assert_eq!(ledger.copies, n, "copy accounting violated for {}", cfg.protocol);
        let estimate = current_estimate(&state, &self.basis)?;
        let infidelity = infidelity(&estimate, rho)?;
        Ok(TrialResult {
            infidelity,
            estimate,
            settings_used: ledger.settings_used,
            copies_consumed: ledger.copies,
            decisions,
        })
    }

    fn adaptive_step(
        &self,
        state: &mut EstimatorState,
        mode: AdaptiveMode,
        n_per_step: u64,
        rho: &DensityMatrix,
        ledger: &mut Ledger,
        rng: &mut SimRng,
    ) -> Result<AdaptiveDecision> {
        let candidates = build_candidate_set(state.theta_hat(), mode, &self.basis)?;
        let sel = select_next_setting(state.q(), state.theta_hat(), candidates.settings(), n_per_step, self.basis.dim())?;
        let povm = &candidates.settings()[sel.setting];
        let records = ledger.measure(rho, povm, n_per_step, rng)?;
        state.absorb_all(&records)?;
        Ok(AdaptiveDecision {
            step: 0,
            setting: povm.label().to_string(),
            effect: sel.effect,
            gain: sel.gain,
            predicted_prob: sel.predicted.raw,
            copies: n_per_step,
        })
    }
}

/// Runs one trial. Builds a fresh [`ProtocolRunner`]; reuse a runner when
/// running many trials.
pub fn run_protocol(cfg: &TrialConfig) -> Result<TrialResult> {
    ProtocolRunner::new()?.run(cfg)
}
