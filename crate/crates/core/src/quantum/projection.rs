use num_complex::Complex64;

use super::linalg::{ensure_square, hermitian_deviation, symmetrize, trace, CMatrix, HermitianEigen};
use super::state::DensityMatrix;
use super::HERMITIAN_TOL;
use crate::{Error, Result};

/// Euclidean projection of `v` onto the probability simplex {x ≥ 0, Σx = 1}
/// by the sort-and-threshold method.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Frobenius-closest density matrix to a Hermitian unit-trace `mu`.
///
/// Keeps the eigenvectors of `mu` and replaces its spectrum by the simplex
/// projection of the eigenvalues; O(d³).
pub fn project_to_physical(mu: &CMatrix) -> Result<DensityMatrix> {
    ensure_square(mu)?;
    let dev = hermitian_deviation(mu);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let herm = symmetrize(mu);
    let tr = trace(&herm).re;
    if (tr - 1.0).abs() > HERMITIAN_TOL {
        return Err(Error::InvalidTrace(tr));
    }
    let eig = HermitianEigen::new(&herm);
    let projected = project_to_simplex(&eig.values);
    let n = projected.len();
    let mut scaled = eig.vectors.clone();
    for (k, &lam) in projected.iter().enumerate() {
        for i in 0..n {
            scaled[(i, k)] *= Complex64::new(lam, 0.0);
        }
    }
    let rho = symmetrize(&(scaled * eig.vectors.adjoint()));
    Ok(DensityMatrix::from_trusted(rho))
}
