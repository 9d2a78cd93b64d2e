//! Weighted linear-regression state estimation.
//!
//! Every observed outcome frequency gives one regression equation
//! p̂ = γ₀/d + ΘᵀΓ + e with weight W ≈ 1/Var(e). The estimate minimizes the
//! weighted squared residuals; [`batch_lre`] solves the normal equations
//! directly and [`recursive_update`] absorbs one equation at a time with a
//! rank-one update of Q = (Σ W Γ Γᵀ)⁻¹.
//!
//! The recursion carries a factor S with Q = SSᵀ and updates it in Potter's
//! square-root form. This is the same update of Q in exact arithmetic, but it
//! avoids the cancellation of Q − aQΓΓᵀQ when Q starts at I/ε with ε = 1e-8.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::measurements::Povm;
use crate::quantum::{bloch_to_matrix, project_to_physical, BlochVector, DensityMatrix, HermitianBasis};
use crate::{Error, Result};

/// Ridge term εI added to the information matrix, and 1/ε the prior scale of
/// Q when recursion starts from scratch.
pub const DEFAULT_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRecord {
    pub gamma0: f64,
    pub gamma: DVector<f64>,
    /// Observed frequency count / n_trials.
    pub p_hat: f64,
    pub n_trials: u64,
    pub weight: f64,
}

/// W = n / (p̂(1 − p̂)) with p̂ clamped to [1/(2n), 1 − 1/(2n)] so that
/// zero-count and all-count outcomes keep a finite weight.
pub fn compute_weight(n_trials: u64, count: u64) -> f64 {
    let n = n_trials.max(1) as f64;
    let eps = 0.5 / n;
    let p = (count as f64 / n).clamp(eps, 1.0 - eps);
    n / (p * (1.0 - p))
}

/// One regression record per outcome of `povm`.
pub fn records_from_counts(povm: &Povm, counts: &[u64]) -> Result<Vec<RegressionRecord>> {
    if counts.len() != povm.len() {
        return Err(Error::DimensionMismatch {
            expected: povm.len(),
            got: counts.len(),
        });
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::InvalidArgument(format!("no trials recorded for {}", povm.label())));
    }
    Ok(povm
        .effects()
        .iter()
        .zip(counts)
        .map(|(e, &k)| RegressionRecord {
            gamma0: e.gamma0,
            gamma: e.gamma.clone(),
            p_hat: k as f64 / n as f64,
            n_trials: n,
            weight: compute_weight(n, k),
        })
        .collect())
}

/// The pair (Θ̂, Q) evolved by recursive updates.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    dim: usize,
    theta_hat: BlochVector,
    q: DMatrix<f64>,
    /// Any S with SSᵀ = Q.
    q_factor: DMatrix<f64>,
    records_absorbed: u64,
}

/// Two states are equal when Θ̂, Q and the record count agree; the factor of
/// Q is not unique and is ignored.
impl PartialEq for EstimatorState {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.theta_hat == other.theta_hat && self.q == other.q && self.records_absorbed == other.records_absorbed
    }
}

impl EstimatorState {
    /// Θ̂ = 0 and Q = I/ε: the starting point of a recursion with no data.
    pub fn prior(dim: usize, ridge: f64) -> Result<Self> {
        if !(ridge > 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidArgument(format!("ridge must be positive, got {ridge}")));
        }
        if dim < 2 {
            return Err(Error::InvalidArgument(format!("Hilbert dimension {dim} < 2")));
        }
        let p = dim * dim - 1;
        Ok(EstimatorState {
            dim,
            theta_hat: BlochVector::zeros(p),
            q: DMatrix::identity(p, p) / ridge,
            q_factor: DMatrix::identity(p, p) / ridge.sqrt(),
            records_absorbed: 0,
        })
    }

    pub fn from_parts(dim: usize, theta_hat: BlochVector, q: DMatrix<f64>, records_absorbed: u64) -> Result<Self> {
        let p = dim * dim - 1;
        if theta_hat.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: theta_hat.len(),
            });
        }
        if q.shape() != (p, p) {
            return Err(Error::DimensionMismatch { expected: p, got: q.nrows() });
        }
        if theta_hat.as_slice().iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("estimator state has non-finite entries".into()));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-9 * q.amax().max(1.0) {
            return Err(Error::InvalidArgument("Q is not symmetric".into()));
        }
        let min = SymmetricEigen::new(q.clone()).eigenvalues.min();
        if !(min > 0.0) {
            return Err(Error::InvalidArgument(format!("Q is not positive definite (min eigenvalue {min:e})")));
        }
        let q = (&q + q.transpose()) * 0.5;
        let q_factor = q
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("Q is not positive definite".into()))?
            .unpack();
        Ok(EstimatorState {
            dim,
            theta_hat,
            q,
            q_factor,
            records_absorbed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta_hat(&self) -> &BlochVector {
        &self.theta_hat
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn records_absorbed(&self) -> u64 {
        self.records_absorbed
    }

    /// Absorbs one regression record:
    ///
    /// a = (1/W + ΓᵀQΓ)⁻¹,
    /// Q ← Q − a QΓΓᵀQ,
    /// Θ̂ ← Θ̂ + a QΓ (p̂ − γ₀/d − ΓᵀΘ̂).
    pub fn absorb(&mut self, record: &RegressionRecord) -> Result<()> {
        if record.gamma.len() != self.theta_hat.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta_hat.len(),
                got: record.gamma.len(),
            });
        }
        if !(record.weight > 0.0) || !record.weight.is_finite() {
            return Err(Error::Numeric(format!("weight must be finite and positive, got {}", record.weight)));
        }
        if record.gamma.iter().all(|&g| g == 0.0) {
            self.records_absorbed += 1;
            return Ok(());
        }
        // f = SᵀΓ, so ΓᵀQΓ = fᵀf and QΓ = Sf.
        let f = self.q_factor.tr_mul(&record.gamma);
        let inv_w = 1.0 / record.weight;
        let a = 1.0 / (inv_w + f.norm_squared());
        let gain = &self.q_factor * &f * a;
        let residual = record.p_hat - record.gamma0 / self.dim as f64 - record.gamma.dot(&self.theta_hat.0);
        let theta = &self.theta_hat.0 + &gain * residual;
        // S ← S − β (aSf) fᵀ with β = 1/(1 + √(a/W)) gives SSᵀ = Q − aQΓΓᵀQ.
        let beta = 1.0 / (1.0 + (a * inv_w).sqrt());
        let mut factor = self.q_factor.clone();
        factor.ger(-beta, &gain, &f, 1.0);
        let q = &factor * factor.transpose();
        let q = (&q + q.transpose()) * 0.5;
        if !a.is_finite() || theta.iter().chain(factor.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite value in recursive update".into()));
        }
        self.theta_hat = BlochVector(theta);
        self.q = q;
        self.q_factor = factor;
        self.records_absorbed += 1;
        Ok(())
    }

    pub fn absorb_all<'a>(&mut self, records: impl IntoIterator<Item = &'a RegressionRecord>) -> Result<()> {
        for r in records {
            self.absorb(r)?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> EstimatorSnapshot {
        EstimatorSnapshot {
            dim: self.dim,
            theta_hat: self.theta_hat.clone(),
            q: self.q.row_iter().map(|r| r.iter().copied().collect()).collect(),
            records_absorbed: self.records_absorbed,
        }
    }
}

/// Functional form of [`EstimatorState::absorb`].
pub fn recursive_update(state: &EstimatorState, record: &RegressionRecord) -> Result<EstimatorState> {
    let mut next = state.clone();
    next.absorb(record)?;
    Ok(next)
}

/// JSON checkpoint of an [`EstimatorState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSnapshot {
    pub dim: usize,
    pub theta_hat: BlochVector,
    pub q: Vec<Vec<f64>>,
    pub records_absorbed: u64,
}

impl TryFrom<EstimatorSnapshot> for EstimatorState {
    type Error = Error;

    fn try_from(s: EstimatorSnapshot) -> Result<Self> {
        let p = s.q.len();
        if s.q.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidArgument("Q rows have unequal length".into()));
        }
        let q = DMatrix::from_fn(p, p, |i, j| s.q[i][j]);
        EstimatorState::from_parts(s.dim, s.theta_hat, q, s.records_absorbed)
    }
}

/// Information eigenvalues below this fraction of the largest are at the
/// level of rounding error and are treated as exactly zero.
const NULL_EIGEN_TOL: f64 = 1e-12;

/// Weighted least-squares solve Θ̂ = (XᵀWX + εI)⁻¹ XᵀWY with Q = (XᵀWX + εI)⁻¹.
///
/// The solve goes through the SVD of W^{1/2}X. In directions the
/// data never probed, XᵀWY has no component, so Θ̂ is left at zero there
/// rather than dividing rounding noise by ε.
///
/// With `ridge = None` the information matrix must have full rank.
pub fn batch_lre(records: &[RegressionRecord], dim: usize, ridge: Option<f64>) -> Result<EstimatorState> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("Hilbert dimension {dim} < 2")));
    }
    let p = dim * dim - 1;
    // rows √W Γᵀ, padded with zero rows so the SVD returns a full right basis
    let rows = records.len().max(p);
    let mut design = DMatrix::<f64>::zeros(rows, p);
    let mut target = DVector::<f64>::zeros(rows);
    for (i, r) in records.iter().enumerate() {
        if r.gamma.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: r.gamma.len(),
            });
        }
        if !(r.weight > 0.0) || !r.weight.is_finite() {
            return Err(Error::Numeric(format!("weight must be finite and positive, got {}", r.weight)));
        }
        let sw = r.weight.sqrt();
        design.row_mut(i).copy_from(&(r.gamma.transpose() * sw));
        target[i] = sw * (r.p_hat - r.gamma0 / dim as f64);
    }
    let eps = match ridge {
        Some(eps) if eps > 0.0 && eps.is_finite() => eps,
        Some(eps) => return Err(Error::InvalidArgument(format!("ridge must be positive, got {eps}"))),
        None => 0.0,
    };
    // Eigenvalues of the information matrix are the squared singular values;
    // working on the design avoids squaring its condition number.
    let svd = design.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Numeric("SVD of the design failed".into())),
    };
    let lambdas = svd.singular_values.map(|s| s * s);
    let max = lambdas.amax();
    if ridge.is_none() {
        let rank = lambdas.iter().filter(|&&l| l > 1e-10 * max.max(f64::MIN_POSITIVE)).count();
        if rank < p {
            return Err(Error::SingularDesign { rank, dim: p });
        }
    }
    let proj = u.tr_mul(&target);
    let mut coef = DVector::<f64>::zeros(p);
    let mut inv_sqrt = DVector::<f64>::zeros(p);
    for i in 0..p {
        let lambda = lambdas[i];
        let null = !(lambda > NULL_EIGEN_TOL * max);
        let mu = if null { eps } else { lambda + eps };
        if !(mu > 0.0) {
            return Err(Error::Numeric("information matrix is not positive definite".into()));
        }
        coef[i] = if null { 0.0 } else { svd.singular_values[i] * proj[i] / mu };
        inv_sqrt[i] = 1.0 / mu.sqrt();
    }
    let v = v_t.transpose();
    let theta = &v * coef;
    let factor = &v * DMatrix::from_diagonal(&inv_sqrt);
    let q = &factor * factor.transpose();
    let q = (&q + q.transpose()) * 0.5;
    if theta.iter().chain(q.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite batch solution".into()));
    }
    Ok(EstimatorState {
        dim,
        theta_hat: BlochVector(theta),
        q,
        q_factor: factor,
        records_absorbed: records.len() as u64,
    })
}

/// Physical estimate: the projection of I/d + Σ θ̂_i Ω_i onto density matrices.
pub fn current_estimate(state: &EstimatorState, basis: &HermitianBasis) -> Result<DensityMatrix> {
    if basis.dim() != state.dim {
        return Err(Error::DimensionMismatch {
            expected: state.dim,
            got: basis.dim(),
        });
    }
    project_to_physical(&bloch_to_matrix(&state.theta_hat, basis)?)
}
