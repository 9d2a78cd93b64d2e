use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::measurements::Povm;
use crate::quantum::DensityMatrix;
use crate::{Error, Result};

const NEGATIVE_TOL: f64 = 1e-12;

/// One multinomial draw of `n` outcomes of `povm` on `rho`, realized as a
/// chain of conditional binomials in outcome order.
pub fn sample_counts<R: Rng + ?Sized>(rho: &DensityMatrix, povm: &Povm, n: u64, rng: &mut R) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let mut probs = povm.probabilities(rho);
    for (m, p) in probs.iter_mut().enumerate() {
        if *p < -NEGATIVE_TOL {
            return Err(Error::Model(format!("outcome {m} of {} has probability {p:e}", povm.label())));
        }
        *p = p.max(0.0);
    }
    // suffix[m] = Σ_{j ≥ m} p_j
    let mut suffix = vec![0.0; probs.len() + 1];
    for m in (0..probs.len()).rev() {
        suffix[m] = suffix[m + 1] + probs[m];
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    for m in 0..probs.len() {
        if remaining == 0 {
            break;
        }
        if suffix[m + 1] <= 0.0 {
            counts[m] = remaining;
            remaining = 0;
            break;
        }
        let q = (probs[m] / suffix[m]).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .map_err(|e| Error::Numeric(format!("binomial({remaining}, {q}): {e}")))?
            .sample(rng);
        counts[m] = k;
        remaining -= k;
    }
    if remaining > 0 {
        return Err(Error::Model(format!("probabilities of {} sum to zero", povm.label())));
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::cube_settings;
    use crate::quantum::build_pauli_basis;
    use crate::simulator::{singlet, SimRng};
    use rand::SeedableRng;

    #[test]
    fn singlet_zz_never_gives_parallel_outcomes() {
        let b = build_pauli_basis(2).unwrap();
        let cube = cube_settings(&b).unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..50 {
            let counts = sample_counts(&singlet(), cube.get("ZZ").unwrap(), 1000, &mut rng).unwrap();
            assert_eq!(counts[0], 0);
            assert_eq!(counts[3], 0);
            assert_eq!(counts.iter().sum::<u64>(), 1000);
        }
    }

    #[test]
    fn maximally_mixed_frequencies_within_five_sigma() {
        let b = build_pauli_basis(2).unwrap();
        let cube = cube_settings(&b).unwrap();
        let mut rng = SimRng::seed_from_u64(11);
        let n = 4000u64;
        let bound = 5.0 * (0.25f64 * 0.75 / n as f64).sqrt();
        for setting in cube.settings() {
            for _ in 0..20 {
                let counts = sample_counts(&DensityMatrix::maximally_mixed(4), setting, n, &mut rng).unwrap();
                for k in counts {
                    assert!((k as f64 / n as f64 - 0.25).abs() < bound);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let b = build_pauli_basis(2).unwrap();
        let cube = cube_settings(&b).unwrap();
        let draw = |seed| {
            let mut rng = SimRng::seed_from_u64(seed);
            sample_counts(&DensityMatrix::maximally_mixed(4), &cube.settings()[1], 777, &mut rng).unwrap()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn zero_sample_size_rejected() {
        let b = build_pauli_basis(2).unwrap();
        let cube = cube_settings(&b).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        assert!(sample_counts(&singlet(), &cube.settings()[0], 0, &mut rng).is_err());
    }
}
