use std::fmt;

use num_complex::Complex64;

use super::linalg::{c, hermitian_deviation, kron, trace, trace_product, CMatrix};
use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-12;

/// A tensor product of single-qubit Paulis, one letter per qubit
/// (0 = I, 1 = X, 2 = Y, 3 = Z), first qubit leftmost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliLabel(pub Vec<u8>);

impl PauliLabel {
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|ch| match ch {
                'I' => Some(0),
                'X' => Some(1),
                'Y' => Some(2),
                'Z' => Some(3),
                _ => None,
            })
            .collect::<Option<Vec<u8>>>()
            .map(PauliLabel)
    }

    fn matrix(&self) -> CMatrix {
        self.0
            .iter()
            .map(|&p| single_pauli(p))
            .reduce(|acc, m| kron(&acc, &m))
            .unwrap_or_else(|| CMatrix::identity(1, 1))
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.0 {
            f.write_str(["I", "X", "Y", "Z"][p as usize])?;
        }
        Ok(())
    }
}

pub(crate) fn single_pauli(p: u8) -> CMatrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        0 => CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        1 => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => unreachable!("Pauli index out of range"),
    }
}

/// Traceless, trace-orthonormal Hermitian operators {Ω_i}, i = 1..d²-1.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    dim: usize,
    ops: Vec<CMatrix>,
    labels: Vec<String>,
}

impl HermitianBasis {
    /// Validates and wraps an arbitrary operator set.
    pub fn new(dim: usize, ops: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("basis dimension {dim} < 2")));
        }
        if ops.len() != dim * dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: dim * dim - 1,
                got: ops.len(),
            });
        }
        if labels.len() != ops.len() {
            return Err(Error::InvalidArgument("one label per operator required".into()));
        }
        for (i, op) in ops.iter().enumerate() {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.nrows(),
                });
            }
            let dev = hermitian_deviation(op);
            if dev > ORTHO_TOL {
                return Err(Error::NotHermitian(dev));
            }
            if trace(op).norm() > ORTHO_TOL {
                return Err(Error::InvalidArgument(format!("operator {} is not traceless", labels[i])));
            }
            for (j, other) in ops.iter().enumerate().skip(i) {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (trace_product(op, other) - c(expected, 0.0)).norm() > ORTHO_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "operators {} and {} are not trace-orthonormal",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(HermitianBasis { dim, ops, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of operators, d² - 1.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn op(&self, i: usize) -> &CMatrix {
        &self.ops[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Real coordinates Re Tr(M Ω_k) of an operator.
    pub fn coordinates(&self, m: &CMatrix) -> Vec<Complex64> {
        self.ops.iter().map(|op| trace_product(m, op)).collect()
    }
}

/// The 4ⁿ-1 normalized Pauli products σ_{a₁}⊗…⊗σ_{aₙ} / 2^{n/2}, all-identity excluded,
/// enumerated lexicographically over {I,X,Y,Z}ⁿ with the first qubit most significant.
pub fn build_pauli_basis(n_qubits: usize) -> Result<HermitianBasis> {
    if n_qubits < 1 {
        return Err(Error::InvalidArgument("n_qubits must be at least 1".into()));
    }
    if n_qubits > 6 {
        return Err(Error::UnsupportedDimension(1 << n_qubits));
    }
    let dim = 1usize << n_qubits;
    let norm = c((dim as f64).sqrt().recip(), 0.0);
    let count = 1usize << (2 * n_qubits);
    let mut ops = Vec::with_capacity(count - 1);
    let mut labels = Vec::with_capacity(count - 1);
    for idx in 1..count {
        let digits: Vec<u8> = (0..n_qubits)
            .rev()
            .map(|q| ((idx >> (2 * q)) & 3) as u8)
            .collect();
        let label = PauliLabel(digits);
        ops.push(label.matrix() * norm);
        labels.push(label.to_string());
    }
    HermitianBasis::new(dim, ops, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_basis() {
        let b = build_pauli_basis(1).unwrap();
        assert_eq!(b.labels(), &["X", "Y", "Z"]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.op(0)[(0, 1)] - c(s, 0.0)).norm() < 1e-15);
        assert!((b.op(1)[(1, 0)] - c(0.0, s)).norm() < 1e-15);
        assert!((b.op(2)[(1, 1)] - c(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_qubit_labels_are_lexicographic() {
        let b = build_pauli_basis(2).unwrap();
        assert_eq!(b.len(), 15);
        assert_eq!(b.labels()[0], "IX");
        assert_eq!(b.labels()[2], "IZ");
        assert_eq!(b.labels()[3], "XI");
        assert_eq!(b.labels()[14], "ZZ");
        assert_eq!(b.index_of("ZZ"), Some(14));
        for op in b.ops() {
            assert!(trace(op).norm() < 1e-15);
        }
    }

    #[test]
    fn two_qubit_gram_matrix_is_identity() {
        // direct double loop over explicit matrix products
        let b = build_pauli_basis(2).unwrap();
        for i in 0..15 {
            for j in 0..15 {
                let prod = b.op(i) * b.op(j);
                let tr: Complex64 = (0..4).map(|k| prod[(k, k)]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((tr - c(expected, 0.0)).norm() < 1e-12, "({i},{j}) -> {tr}");
            }
        }
    }

    #[test]
    fn zero_qubits_rejected() {
        assert!(matches!(build_pauli_basis(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn label_parse_round_trip() {
        let l = PauliLabel::parse("XYZ").unwrap();
        assert_eq!(l.to_string(), "XYZ");
        assert!(PauliLabel::parse("XQ").is_none());
    }

    #[test]
    fn rejects_non_orthonormal_set() {
        let b = build_pauli_basis(1).unwrap();
        let mut ops = b.ops().to_vec();
        ops[1] = ops[0].clone();
        assert!(HermitianBasis::new(2, ops, b.labels().to_vec()).is_err());
    }
}
