use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::HermitianBasis;
use super::linalg::{c, ensure_square, hermitian_deviation, min_eigenvalue, outer, symmetrize, trace, CMatrix};
use crate::{Error, Result};

const HERMITIAN_EXACT: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// A d×d Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        ensure_square(&mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_EXACT {
            return Err(Error::NotHermitian(dev));
        }
        let tr = trace(&mat);
        if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let mat = symmetrize(&mat);
        let min = min_eigenvalue(&mat);
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(DensityMatrix { mat })
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) nonzero ket.
    pub fn from_ket(ket: &DVector<Complex64>) -> Result<Self> {
        let norm = ket.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("ket must be a nonzero finite vector".into()));
        }
        let v = ket / c(norm, 0.0);
        DensityMatrix::new(outer(&v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            mat: CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    pub(crate) fn from_trusted(mat: CMatrix) -> Self {
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Born-rule probability Tr(Eρ), real part.
    pub fn expectation(&self, effect: &CMatrix) -> f64 {
        super::linalg::trace_product(&self.mat, effect).re
    }
}

/// Real coordinates Θ of a state in a traceless orthonormal basis.
/// Serialized as a flat array in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector(pub DVector<f64>);

impl Serialize for BlochVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BlochVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("Bloch vector entries must be finite"));
        }
        Ok(BlochVector::from(v))
    }
}

impl BlochVector {
    pub fn zeros(len: usize) -> Self {
        BlochVector(DVector::zeros(len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl From<Vec<f64>> for BlochVector {
    fn from(v: Vec<f64>) -> Self {
        BlochVector(DVector::from_vec(v))
    }
}

/// θ_i = Re Tr(ρ Ω_i).
pub fn state_to_bloch(rho: &DensityMatrix, basis: &HermitianBasis) -> Result<BlochVector> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: rho.dim(),
        });
    }
    let coords = basis.coordinates(rho.matrix());
    let residue = coords.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > 1e-10 {
        return Err(Error::Numeric(format!("imaginary Bloch residue {residue:e}")));
    }
    Ok(BlochVector(DVector::from_iterator(
        coords.len(),
        coords.iter().map(|z| z.re),
    )))
}

/// μ = I/d + Σ θ_i Ω_i. Hermitian with unit trace but not necessarily PSD.
pub fn bloch_to_matrix(theta: &BlochVector, basis: &HermitianBasis) -> Result<CMatrix> {
    if theta.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: theta.len(),
        });
    }
    let d = basis.dim();
    let mut mu = CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0);
    for (t, op) in theta.0.iter().zip(basis.ops()) {
        mu += op * c(*t, 0.0);
    }
    Ok(mu)
}

/// JSON shape `{dim, re[][], im[][]}` shared by every serialized matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..dim)
                .map(|i| (0..dim).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixJson {
            dim,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<CMatrix> {
        let ok_rows = |rows: &Vec<Vec<f64>>| rows.len() == j.dim && rows.iter().all(|r| r.len() == j.dim);
        if !ok_rows(&j.re) || !ok_rows(&j.im) {
            return Err(Error::InvalidArgument(format!(
                "matrix JSON rows do not match dim {}",
                j.dim
            )));
        }
        Ok(CMatrix::from_fn(j.dim, j.dim, |r, col| c(j.re[r][col], j.im[r][col])))
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(&self.mat).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        let mat = CMatrix::try_from(json).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(mat).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::build_pauli_basis;

    fn singlet() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ket = DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]);
        DensityMatrix::from_ket(&ket).unwrap()
    }

    #[test]
    fn maximally_mixed_has_zero_bloch() {
        let b = build_pauli_basis(2).unwrap();
        let theta = state_to_bloch(&DensityMatrix::maximally_mixed(4), &b).unwrap();
        assert!(theta.norm() < 1e-15);
    }

    #[test]
    fn singlet_bloch_coordinates() {
        // oracle: explicit trace against each basis operator
        let b = build_pauli_basis(2).unwrap();
        let rho = singlet();
        let theta = state_to_bloch(&rho, &b).unwrap();
        for (k, label) in b.labels().iter().enumerate() {
            let direct = (rho.matrix() * b.op(k)).trace().re;
            let expected = if ["XX", "YY", "ZZ"].contains(&label.as_str()) { -0.5 } else { 0.0 };
            assert!((direct - expected).abs() < 1e-12, "{label}");
            assert!((theta.0[k] - expected).abs() < 1e-12, "{label}");
        }
    }

    #[test]
    fn bloch_to_matrix_builds_singlet_projector() {
        let b = build_pauli_basis(2).unwrap();
        let mut theta = BlochVector::zeros(15);
        for l in ["XX", "YY", "ZZ"] {
            theta.0[b.index_of(l).unwrap()] = -0.5;
        }
        let mu = bloch_to_matrix(&theta, &b).unwrap();
        // (I - XX - YY - ZZ)/4 built explicitly
        let x = crate::quantum::basis::single_pauli;
        let xx = x(1).kronecker(&x(1));
        let yy = x(2).kronecker(&x(2));
        let zz = x(3).kronecker(&x(3));
        let explicit = (CMatrix::identity(4, 4) - xx - yy - zz) * c(0.25, 0.0);
        assert!((&mu - &explicit).norm() < 1e-12);
        assert!((&mu - singlet().matrix()).norm() < 1e-12);
    }

    #[test]
    fn any_theta_gives_unit_trace() {
        let b = build_pauli_basis(2).unwrap();
        let theta = BlochVector::from((0..15).map(|k| (k as f64 * 0.37).sin()).collect::<Vec<_>>());
        let mu = bloch_to_matrix(&theta, &b).unwrap();
        assert!((trace(&mu) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let b = build_pauli_basis(1).unwrap();
        assert!(matches!(
            state_to_bloch(&DensityMatrix::maximally_mixed(4), &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(bloch_to_matrix(&BlochVector::zeros(15), &b).is_err());
    }

    #[test]
    fn invalid_density_matrices_rejected() {
        let mut m = CMatrix::identity(2, 2) * c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        let m = CMatrix::identity(2, 2) * c(0.6, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidTrace(_))));
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2, 0.0), c(-0.2, 0.0)]));
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn json_shape() {
        let rho = DensityMatrix::maximally_mixed(2);
        let s = serde_json::to_value(&rho).unwrap();
        assert_eq!(s["dim"], 2);
        assert_eq!(s["re"][0][0], 0.5);
        assert_eq!(s["im"][1][0], 0.0);
        let back: DensityMatrix = serde_json::from_value(s).unwrap();
        assert_eq!(back, rho);
    }
}
