use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::quantum::linalg::{c, gram_schmidt, kron, CMatrix};
use crate::quantum::DensityMatrix;
use crate::{Error, Result};

use super::SimRng;

/// Generator for drawing random true states from a run seed. Uses ChaCha
/// stream 1, so it never overlaps the trial streams (stream 0, seeds
/// base_seed + r).
pub fn state_rng(seed: u64) -> SimRng {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// |Ψ⁻⟩ = (|01⟩ − |10⟩)/√2.
pub fn singlet_ket() -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)])
}

pub fn singlet() -> DensityMatrix {
    DensityMatrix::from_ket(&singlet_ket()).expect("singlet is a valid state")
}

/// Haar-random pure state of dimension `dim`: a normalized complex Gaussian vector.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    loop {
        let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
        if let Ok(rho) = DensityMatrix::from_ket(&v) {
            return rho;
        }
    }
}

/// Haar-random unitary: Gram-Schmidt (QR with positive R diagonal) of a
/// complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
        if let Ok(q) = gram_schmidt(&g) {
            return q;
        }
    }
}

/// (U₁⊗U₂)|Ψ⁻⟩ with independent Haar single-qubit unitaries.
pub fn random_mes<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let u1 = haar_unitary(2, rng);
    let u2 = haar_unitary(2, rng);
    let ket = kron(&u1, &u2) * singlet_ket();
    DensityMatrix::from_ket(&ket).expect("unitary image of a unit ket")
}

/// p·Ψ⁻ + (1 − p)·I/4.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("Werner weight {p} outside [0, 1]")));
    }
    let m = singlet().matrix() * c(p, 0.0) + DensityMatrix::maximally_mixed(4).matrix() * c(1.0 - p, 0.0);
    DensityMatrix::new(m)
}

/// Purity of the Werner state with weight p, (1 + 3p²)/4.
pub fn werner_purity(p: f64) -> f64 {
    (1.0 + 3.0 * p * p) / 4.0
}
