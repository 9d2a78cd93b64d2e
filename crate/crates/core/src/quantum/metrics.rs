use super::linalg::{sqrt_psd, HermitianEigen};
use super::state::DensityMatrix;
use crate::{Error, Result};

fn same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity in the squared convention, F = (Tr √(√ρ σ √ρ))², clamped to [0, 1].
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let root = sqrt_psd(rho.matrix());
    let inner = &root * sigma.matrix() * &root;
    let eig = HermitianEigen::new(&inner);
    let tr: f64 = eig.values.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

pub fn infidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).clamp(0.0, 1.0))
}

/// Tr(ρ²).
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Squared Bures distance D_B² = 2(1 - √F).
pub fn bures_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((2.0 * (1.0 - f.sqrt())).max(0.0))
}
