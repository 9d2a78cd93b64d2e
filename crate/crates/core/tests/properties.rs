use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use raqst::adaptive::{descend_from, gain, theta_to_p_matrix};
use raqst::estimator::{batch_lre, recursive_update, EstimatorState, RegressionRecord, DEFAULT_RIDGE};
use raqst::measurements::parameterize_effect;
use raqst::quantum::linalg::{c, CMatrix};
use raqst::quantum::{
    bloch_to_matrix, bures_distance_sq, build_pauli_basis, fidelity, infidelity, project_to_physical, state_to_bloch, BlochVector, DensityMatrix,
};
use raqst::reporting::improvement_index;

fn ginibre(entries: &[f64]) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| c(entries[2 * (4 * i + j)], entries[2 * (4 * i + j) + 1]))
}

/// ρ = GG†/Tr(GG†), full rank almost surely.
fn density(entries: &[f64]) -> DensityMatrix {
    let g = ginibre(entries);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / c(tr, 0.0)).unwrap()
}

/// Hermitian with unit trace, generally indefinite.
fn hermitian_unit_trace(entries: &[f64]) -> CMatrix {
    let g = ginibre(entries);
    let mut h = (&g + g.adjoint()) * c(0.5, 0.0);
    let shift = (h.trace().re - 1.0) / 4.0;
    for i in 0..4 {
        h[(i, i)] -= c(shift, 0.0);
    }
    h
}

fn density_strategy() -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0f64..1.0, 32)
        .prop_filter("non-degenerate", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| density(&v))
}

fn spd(entries: &[f64], n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloch_round_trip(rho in density_strategy()) {
        let basis = build_pauli_basis(2).unwrap();
        let theta = state_to_bloch(&rho, &basis).unwrap();
        let back = bloch_to_matrix(&theta, &basis).unwrap();
        prop_assert!((back - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_physical(v in prop::collection::vec(-1.0f64..1.0, 32)) {
        let h = hermitian_unit_trace(&v);
        let p = project_to_physical(&h).unwrap();
        let eig = nalgebra::SymmetricEigen::new(p.matrix().clone());
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12));
        prop_assert!((p.matrix().trace().re - 1.0).abs() < 1e-12);
        let pp = project_to_physical(p.matrix()).unwrap();
        prop_assert!((pp.matrix() - p.matrix()).norm() < 1e-10);
    }

    #[test]
    fn fidelity_symmetric_and_bounded(a in density_strategy(), b in density_strategy()) {
        let fab = fidelity(&a, &b).unwrap();
        let fba = fidelity(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&fab));
        prop_assert!((fab - fba).abs() < 1e-9);
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
    }

    // D_B² = 2(1 − √F) = 2(1 − F)/(1 + √F), so 1 − F ≤ D_B² ≤ 2(1 − F).
    #[test]
    fn bures_brackets_infidelity(a in density_strategy(), b in density_strategy()) {
        let d2 = bures_distance_sq(&a, &b).unwrap();
        let inf = infidelity(&a, &b).unwrap();
        prop_assert!(d2 >= inf - 1e-12);
        prop_assert!(d2 <= 2.0 * inf + 1e-12);
    }

    #[test]
    fn gain_equals_trace_decrease(
        a in prop::collection::vec(-1.0f64..1.0, 225),
        g in prop::collection::vec(-0.5f64..0.5, 15),
        inv_w in 1e-4f64..1.0,
    ) {
        let q = spd(&a, 15);
        let gamma = DVector::from_vec(g);
        let state = EstimatorState::from_parts(4, BlochVector(DVector::zeros(15)), q.clone(), 0).unwrap();
        let record = RegressionRecord { gamma0: 1.0, gamma: gamma.clone(), p_hat: 0.3, n_trials: 10, weight: 1.0 / inv_w };
        let after = recursive_update(&state, &record).unwrap();
        let decrease = q.trace() - after.q().trace();
        let g = gain(&q, &gamma, 1.0 / inv_w);
        prop_assert!((g - decrease).abs() <= 1e-9 * q.trace());
    }

    #[test]
    fn recursive_matches_batch(
        raw in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 32), 0.0f64..1.0, 10u64..2000), 10..60),
    ) {
        let basis = build_pauli_basis(2).unwrap();
        let records: Vec<RegressionRecord> = raw.iter().map(|(v, p, n)| {
            // a random rank-one effect |u⟩⟨u| scaled into [0, I]
            let u = DVector::from_fn(4, |i, _| Complex64::new(v[2 * i], v[2 * i + 1]));
            let u = &u / c(u.norm().max(1e-3), 0.0);
            let e = parameterize_effect(&(&u * u.adjoint()), &basis).unwrap();
            let count = (p * *n as f64).round() as u64;
            RegressionRecord {
                gamma0: e.gamma0,
                gamma: e.gamma,
                p_hat: count as f64 / *n as f64,
                n_trials: *n,
                weight: raqst::estimator::compute_weight(*n, count),
            }
        }).collect();
        let batch = batch_lre(&records, 4, Some(DEFAULT_RIDGE)).unwrap();
        let mut rec = EstimatorState::prior(4, DEFAULT_RIDGE).unwrap();
        rec.absorb_all(&records).unwrap();
        // extreme weights can push |Θ̂| to O(50); agreement is relative to that
        let scale = batch.theta_hat().0.amax().max(1.0);
        let dev = (&batch.theta_hat().0 - &rec.theta_hat().0).amax();
        prop_assert!(dev < 1e-9 * scale, "deviation {dev:e} at scale {scale}");
    }

    #[test]
    fn search_objective_never_increases(
        v in prop::collection::vec(-1.0f64..1.0, 32),
        x0 in prop::collection::vec(-1.0f64..1.0, 3),
        y0 in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let basis = build_pauli_basis(2).unwrap();
        let theta = state_to_bloch(&density(&v), &basis).unwrap();
        let p = theta_to_p_matrix(&theta).unwrap();
        let norm = |w: &[f64]| {
            let w = nalgebra::Vector3::from_column_slice(w);
            let n = w.norm();
            if n < 1e-6 { nalgebra::Vector3::new(0.0, 0.0, std::f64::consts::FRAC_1_SQRT_2) } else { w * (std::f64::consts::FRAC_1_SQRT_2 / n) }
        };
        let run = descend_from(&p, norm(&x0), norm(&y0));
        for pair in run.history.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-14, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn upsilon_invariant_under_common_rescaling(
        c_ in -6.0f64..0.0, a in -6.0f64..0.0, g in -6.0f64..0.0, k in -3i32..3,
    ) {
        prop_assume!((c_ - g).abs() > 1e-3);
        let base = improvement_index(c_, a, g).unwrap();
        let shifted = improvement_index(c_ + k as f64, a + k as f64, g + k as f64).unwrap();
        prop_assert!((base - shifted).abs() < 1e-9 * base.abs().max(1.0));
    }
}
