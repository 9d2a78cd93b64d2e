//! Small dense helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

/// Tr(AB) without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entrywise deviation |m - m†|.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

pub fn outer(v: &DVector<Complex64>) -> CMatrix {
    v * v.adjoint()
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is not square: {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    Ok(m.nrows())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending (stable for ties). Each eigenvector has
/// its global phase fixed so that its largest-magnitude component is real and
/// positive; among components of equal magnitude (to 1e-9) the first wins.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let sym = symmetrize(m);
        let n = sym.nrows();
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let mut vectors = CMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (col, &idx) in order.iter().enumerate() {
            values.push(eig.eigenvalues[idx]);
            let v = canonical_phase(eig.eigenvectors.column(idx).into_owned());
            vectors.set_column(col, &v);
        }
        HermitianEigen { values, vectors }
    }

    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }

    /// Rebuilds V diag(f(λ)) V† for a real function of the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = Complex64::new(f(lam), 0.0);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Normalizes `v` and rotates its global phase so the dominant entry is real positive.
pub fn canonical_phase(mut v: DVector<Complex64>) -> DVector<Complex64> {
    let norm = v.norm();
    if norm > 0.0 {
        v /= Complex64::new(norm, 0.0);
    }
    let max = v.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if let Some(pivot) = v.iter().find(|z| z.norm() >= max - 1e-9) {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    v
}

/// Principal square root of a PSD Hermitian matrix; negative eigenvalues are clipped.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    HermitianEigen::new(m).map_spectrum(|x| x.max(0.0).sqrt())
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let eig = HermitianEigen::new(m);
    eig.values.last().copied().unwrap_or(0.0)
}

/// Gram-Schmidt orthonormalization of the columns of `m`.
pub fn gram_schmidt(m: &CMatrix) -> Result<CMatrix> {
    let (rows, cols) = m.shape();
    let mut q = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        let mut v: DVector<Complex64> = m.column(j).into_owned();
        for k in 0..j {
            let qk = q.column(k);
            let proj = qk.dotc(&v);
            v -= qk * proj;
        }
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::Numeric("linearly dependent columns".into()));
        }
        q.set_column(j, &(v / Complex64::new(norm, 0.0)));
    }
    Ok(q)
}
