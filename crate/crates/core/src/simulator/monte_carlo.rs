use rayon::prelude::*;

use super::{ProtocolKind, ProtocolRunner, TrialConfig};
use crate::quantum::{purity, DensityMatrix};
use crate::reporting::{aggregate, SweepRow, TrialRecord};
use crate::{Error, Result};

/// Seed of repetition `rep`: base_seed + rep (wrapping). Repetition r of every
/// protocol and copy budget shares a seed, so protocol comparisons are paired.
pub fn trial_seed(base_seed: u64, rep: u64) -> u64 {
    base_seed.wrapping_add(rep)
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub rows: Vec<SweepRow>,
    /// Per-trial records ordered by (protocol, N, repetition) as requested.
    pub trials: Vec<TrialRecord>,
}

/// Runs `reps` repetitions of every protocol at every copy budget on
/// `true_state`. `workers = 0` uses the rayon default thread count.
///
/// Results do not depend on `workers`: each trial owns its RNG stream and the
/// records are reduced in a fixed order.
pub fn monte_carlo(
    protocols: &[ProtocolKind],
    true_state: &DensityMatrix,
    n_list: &[u64],
    reps: u64,
    base_seed: u64,
    workers: usize,
) -> Result<MonteCarloResult> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if protocols.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidArgument("need at least one protocol and one copy budget".into()));
    }
    let runner = ProtocolRunner::new()?;
    let purity_true = purity(true_state);
    let jobs: Vec<(ProtocolKind, u64, u64)> = protocols
        .iter()
        .flat_map(|&p| n_list.iter().flat_map(move |&n| (0..reps).map(move |r| (p, n, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    let trials: Result<Vec<TrialRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(protocol, n, rep)| {
                let seed = trial_seed(base_seed, rep);
                let res = runner.run(&TrialConfig {
                    protocol,
                    n_copies: n,
                    seed,
                    true_state: true_state.clone(),
                })?;
                Ok(TrialRecord {
                    protocol,
                    seed,
                    n,
                    infidelity: res.infidelity,
                    settings_used: res.settings_used,
                    purity_true,
                    state_index: None,
                })
            })
            .collect()
    });
    let trials = trials?;
    let rows = aggregate(&trials)?;
    Ok(MonteCarloResult { rows, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::singlet;

    #[test]
    fn single_rep_has_zero_sd() {
        let mc = monte_carlo(&[ProtocolKind::Cube], &singlet(), &[500], 1, 3, 1).unwrap();
        assert_eq!(mc.rows.len(), 1);
        assert_eq!(mc.rows[0].sd_of_mean, 0.0);
        assert_eq!(mc.rows[0].mean_infidelity, mc.trials[0].infidelity);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let ps = [ProtocolKind::Mub, ProtocolKind::Raqst1];
        let a = monte_carlo(&ps, &singlet(), &[300, 1000], 6, 17, 1).unwrap();
        let b = monte_carlo(&ps, &singlet(), &[300, 1000], 6, 17, 4).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.trials, b.trials);
    }

    #[test]
    fn zero_reps_rejected() {
        assert!(monte_carlo(&[ProtocolKind::Cube], &singlet(), &[500], 0, 0, 1).is_err());
    }
}
