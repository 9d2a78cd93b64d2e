//! Minimum-probability product projector for two qubits.
//!
//! A product projector Π¹⊗Π² has single-qubit coordinates Π = (1/√2, x) in
//! the basis {I/√2, σ/√2}, with ‖x‖² = 1/2. Writing the two-qubit state as a
//! 4×4 real matrix P with vec(P) = (θ₀, …, θ₁₅) and θ₀ = 1/2, the predicted
//! probability is
//!
//! L(x, y) = 1/4 + (1/√2) P_aᵀx + (1/√2) yᵀP_b + yᵀP_D x,
//!
//! where P = [[1/2, P_aᵀ], [P_b, P_D]]. L is linear in each block, so
//! minimizing over one sphere with the other fixed has the closed form
//! x = −c/(√2‖c‖). Alternating these exact block minimizations never
//! increases L.

use nalgebra::{DVector, Matrix3, Matrix4, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::quantum::BlochVector;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 1000;
pub const STOP_TOLERANCE: f64 = 1e-10;
/// Random restarts in addition to the x₀ = y₀ = 0 start.
pub const EXTRA_RESTARTS: usize = 5;
const RESTART_SEED: u64 = 0x5_EED0_FA11;
const HALF_SQRT: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Current iterate of the alternating minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSearchState {
    pub p_mat: Matrix4<f64>,
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub l_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchRun {
    pub state: ProjectorSearchState,
    /// L before the first sweep followed by L after every sweep.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductProjector {
    pub psi1: DVector<Complex64>,
    pub psi2: DVector<Complex64>,
    pub p_min: f64,
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
}

/// Builds P from a two-qubit Bloch vector in lexicographic Pauli order:
/// P[j][k] is the coefficient of Ω_k⊗Ω_j, and P[0][0] = 1/2.
pub fn theta_to_p_matrix(theta: &BlochVector) -> Result<Matrix4<f64>> {
    if theta.len() != 15 {
        return Err(Error::DimensionMismatch {
            expected: 15,
            got: theta.len(),
        });
    }
    let mut p = Matrix4::zeros();
    p[(0, 0)] = 0.5;
    for k in 0..4 {
        for j in 0..4 {
            if k == 0 && j == 0 {
                continue;
            }
            p[(j, k)] = theta.0[4 * k + j - 1];
        }
    }
    Ok(p)
}

struct Blocks {
    a: Vector3<f64>,
    b: Vector3<f64>,
    d: Matrix3<f64>,
}

impl Blocks {
    fn new(p: &Matrix4<f64>) -> Self {
        Blocks {
            a: Vector3::new(p[(0, 1)], p[(0, 2)], p[(0, 3)]),
            b: Vector3::new(p[(1, 0)], p[(2, 0)], p[(3, 0)]),
            d: p.fixed_view::<3, 3>(1, 1).into_owned(),
        }
    }

    fn objective(&self, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
        0.25 + HALF_SQRT * self.a.dot(x) + HALF_SQRT * y.dot(&self.b) + y.dot(&(self.d * x))
    }
}

/// L(x, y) for a given P.
pub fn product_probability(p: &Matrix4<f64>, x: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    Blocks::new(p).objective(x, y)
}

/// −c scaled onto the sphere ‖·‖² = 1/2; keeps `previous` when c vanishes.
fn sphere_minimizer(c: Vector3<f64>, previous: &Vector3<f64>) -> Vector3<f64> {
    let n = c.norm();
    if n > 1e-14 {
        -c * (HALF_SQRT / n)
    } else if previous.norm() > 1e-14 {
        previous * (HALF_SQRT / previous.norm())
    } else {
        Vector3::new(0.0, 0.0, HALF_SQRT)
    }
}

/// Alternating exact block minimization from (x₀, y₀).
pub fn descend_from(p: &Matrix4<f64>, x0: Vector3<f64>, y0: Vector3<f64>) -> SearchRun {
    let blocks = Blocks::new(p);
    let (mut x, mut y) = (x0, y0);
    let mut l = blocks.objective(&x, &y);
    let mut history = vec![l];
    for _ in 0..MAX_ITERATIONS {
        x = sphere_minimizer(blocks.a * HALF_SQRT + blocks.d.transpose() * y, &x);
        y = sphere_minimizer(blocks.b * HALF_SQRT + blocks.d * x, &y);
        let next = blocks.objective(&x, &y);
        debug_assert!(next <= l + 1e-12, "objective increased: {l} -> {next}");
        history.push(next);
        let done = (l - next).abs() < STOP_TOLERANCE;
        l = next;
        if done {
            break;
        }
    }
    SearchRun {
        state: ProjectorSearchState { p_mat: *p, x, y, l_value: l },
        history,
    }
}

fn random_sphere_point<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n: f64 = v.norm();
        if n > 1e-8 {
            return v * (HALF_SQRT / n);
        }
    }
}

/// Qubit ket with Bloch vector along `r` (normalized internally).
pub fn qubit_state_from_bloch(r: &Vector3<f64>) -> DVector<Complex64> {
    let r = r / r.norm();
    if r.z < -1.0 + 1e-12 {
        return DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    }
    let a = Complex64::new(1.0 + r.z, 0.0);
    let b = Complex64::new(r.x, r.y);
    let n = (2.0 * (1.0 + r.z)).sqrt();
    DVector::from_vec(vec![a / n, b / n])
}

/// Product projector |ψ₁ψ₂⟩⟨ψ₁ψ₂| minimizing the predicted probability under
/// `theta`. Starts from x₀ = y₀ = 0 plus a fixed set of pseudo-random restarts
/// and keeps the lowest objective (first wins on ties).
pub fn min_prob_product_projector(theta: &BlochVector) -> Result<ProductProjector> {
    let p = theta_to_p_matrix(theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut best = descend_from(&p, Vector3::zeros(), Vector3::zeros()).state;
    for _ in 0..EXTRA_RESTARTS {
        let x0 = random_sphere_point(&mut rng);
        let y0 = random_sphere_point(&mut rng);
        let run = descend_from(&p, x0, y0).state;
        if run.l_value < best.l_value {
            best = run;
        }
    }
    Ok(ProductProjector {
        psi1: qubit_state_from_bloch(&best.x),
        psi2: qubit_state_from_bloch(&best.y),
        p_min: best.l_value,
        x: best.x,
        y: best.y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::complete_product_povm;
    use crate::quantum::{build_pauli_basis, state_to_bloch, DensityMatrix};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn maximally_mixed_is_flat() {
        let proj = min_prob_product_projector(&BlochVector::zeros(15)).unwrap();
        assert!((proj.p_min - 0.25).abs() < 1e-15);
    }

    #[test]
    fn singlet_minimum_at_equal_bloch_vectors() {
        let b = build_pauli_basis(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::from_ket(&DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)])).unwrap();
        let proj = min_prob_product_projector(&state_to_bloch(&rho, &b).unwrap()).unwrap();
        assert!(proj.p_min <= 1e-6);
        assert!((proj.x - proj.y).norm() < 1e-6);
    }

    #[test]
    fn zero_zero_state_picks_one_on_first_qubit() {
        let b = build_pauli_basis(2).unwrap();
        let rho = DensityMatrix::from_ket(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).unwrap();
        let proj = min_prob_product_projector(&state_to_bloch(&rho, &b).unwrap()).unwrap();
        assert!(proj.p_min <= 1e-6);
        assert!(proj.psi1[1].norm() > 1.0 - 1e-6);
    }

    #[test]
    fn objective_matches_born_rule() {
        let b = build_pauli_basis(2).unwrap();
        let psi = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0)]);
        let rho = DensityMatrix::from_ket(&psi).unwrap();
        let theta = state_to_bloch(&rho, &b).unwrap();
        let p = theta_to_p_matrix(&theta).unwrap();
        let x = Vector3::new(0.3, -0.2, 0.5);
        let y = Vector3::new(-0.1, 0.4, 0.2);
        let x = x * (HALF_SQRT / x.norm());
        let y = y * (HALF_SQRT / y.norm());
        let povm = complete_product_povm("P", &qubit_state_from_bloch(&x), &qubit_state_from_bloch(&y), &b).unwrap();
        let born = rho.expectation(&povm.effects()[0].effect);
        assert!((product_probability(&p, &x, &y) - born).abs() < 1e-12);
    }

    #[test]
    fn bloch_to_ket_round_trip() {
        for r in [Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.3, -0.4, 0.1)] {
            let psi = qubit_state_from_bloch(&r);
            let rx = 2.0 * (psi[0].conj() * psi[1]).re;
            let ry = 2.0 * (psi[0].conj() * psi[1]).im;
            let rz = psi[0].norm_sqr() - psi[1].norm_sqr();
            assert!((Vector3::new(rx, ry, rz) - r / r.norm()).norm() < 1e-12);
        }
    }

    #[test]
    fn iterates_stay_on_spheres() {
        let theta = BlochVector::from((0..15).map(|k| 0.05 * ((k * 7 % 11) as f64 - 5.0)).collect::<Vec<_>>());
        let p = theta_to_p_matrix(&theta).unwrap();
        let run = descend_from(&p, Vector3::zeros(), Vector3::zeros());
        assert!((run.state.x.norm_squared() - 0.5).abs() < 1e-12);
        assert!((run.state.y.norm_squared() - 0.5).abs() < 1e-12);
        for w in run.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(min_prob_product_projector(&BlochVector::zeros(3)).is_err());
    }
}
