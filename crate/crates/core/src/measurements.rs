//! Measurement settings: parameterized effects, POVMs and the catalogs the
//! protocols draw from.
//!
//! Outcome order inside every two-qubit product POVM is (++, +−, −+, −−) with
//! the first qubit most significant. For eigenvector-based POVMs the order
//! follows descending eigenvalue.

use std::collections::HashSet;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::quantum::linalg::{c, canonical_phase, ensure_square, hermitian_deviation, kron, min_eigenvalue, outer, CMatrix, HermitianEigen};
use crate::quantum::{DensityMatrix, HermitianBasis, MatrixJson, PauliLabel};
use crate::{Error, Result};

const EFFECT_TOL: f64 = 1e-10;

/// A measurement effect E together with its coordinates γ₀ = Tr E and Γ_k = Tr(E Ω_k).
#[derive(Debug, Clone)]
pub struct ParameterizedEffect {
    pub effect: CMatrix,
    pub gamma0: f64,
    pub gamma: DVector<f64>,
}

impl ParameterizedEffect {
    /// Born-rule probability from the linear model, γ₀/d + ΘᵀΓ.
    pub fn linear_probability(&self, theta: &DVector<f64>) -> f64 {
        self.gamma0 / self.effect.nrows() as f64 + self.gamma.dot(theta)
    }
}

pub fn parameterize_effect(effect: &CMatrix, basis: &HermitianBasis) -> Result<ParameterizedEffect> {
    let d = ensure_square(effect)?;
    if d != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: d,
        });
    }
    let dev = hermitian_deviation(effect);
    if dev > EFFECT_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let min = min_eigenvalue(effect);
    if min < -EFFECT_TOL {
        return Err(Error::NotPsd(min));
    }
    let gamma0 = effect.trace().re;
    let coords = basis.coordinates(effect);
    Ok(ParameterizedEffect {
        effect: effect.clone(),
        gamma0,
        gamma: DVector::from_iterator(coords.len(), coords.iter().map(|z| z.re)),
    })
}

#[derive(Debug, Clone)]
pub struct Povm {
    label: String,
    effects: Vec<ParameterizedEffect>,
}

impl Povm {
    /// Parameterizes `effects` and checks completeness Σ E = I.
    pub fn new(label: impl Into<String>, effects: &[CMatrix], basis: &HermitianBasis) -> Result<Self> {
        let label = label.into();
        if effects.is_empty() {
            return Err(Error::InvalidArgument(format!("POVM {label} has no effects")));
        }
        let parameterized = effects
            .iter()
            .map(|e| parameterize_effect(e, basis))
            .collect::<Result<Vec<_>>>()?;
        let d = basis.dim();
        let total: CMatrix = effects.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
        let residual = (total - CMatrix::identity(d, d)).norm();
        if residual > EFFECT_TOL {
            return Err(Error::InvalidArgument(format!(
                "POVM {label} effects do not sum to identity (residual {residual:e})"
            )));
        }
        Ok(Povm {
            label,
            effects: parameterized,
        })
    }

    /// Projective measurement onto the columns of a unitary.
    pub fn from_orthonormal_kets(label: impl Into<String>, kets: &[DVector<Complex64>], basis: &HermitianBasis) -> Result<Self> {
        let effects: Vec<CMatrix> = kets.iter().map(outer).collect();
        Povm::new(label, &effects, basis)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn effects(&self) -> &[ParameterizedEffect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Outcome probabilities Tr(E_m ρ).
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| rho.expectation(&e.effect)).collect()
    }
}

#[derive(Serialize)]
struct PovmJson<'a> {
    label: &'a str,
    effects: Vec<MatrixJson>,
}

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PovmJson {
            label: &self.label,
            effects: self.effects.iter().map(|e| MatrixJson::from(&e.effect)).collect(),
        }
        .serialize(s)
    }
}

/// Ordered, non-empty list of POVMs with unique labels.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurementCatalog {
    settings: Vec<Povm>,
}

impl MeasurementCatalog {
    pub fn new(settings: Vec<Povm>) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::InvalidArgument("measurement catalog is empty".into()));
        }
        let mut seen = HashSet::new();
        for p in &settings {
            if !seen.insert(p.label.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate setting label {}", p.label)));
            }
        }
        Ok(MeasurementCatalog { settings })
    }

    pub fn settings(&self) -> &[Povm] {
        &self.settings
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&Povm> {
        self.settings.iter().find(|p| p.label == label)
    }

    pub fn push(&mut self, povm: Povm) -> Result<()> {
        if self.get(&povm.label).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate setting label {}", povm.label)));
        }
        self.settings.push(povm);
        Ok(())
    }

    pub fn into_settings(self) -> Vec<Povm> {
        self.settings
    }
}

fn qubit_ket(a: Complex64, b: Complex64) -> DVector<Complex64> {
    DVector::from_vec(vec![a, b])
}

/// (+1, −1) eigenkets of X, Y or Z.
fn pauli_eigenkets(axis: char) -> [DVector<Complex64>; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        'X' => [qubit_ket(c(s, 0.0), c(s, 0.0)), qubit_ket(c(s, 0.0), c(-s, 0.0))],
        'Y' => [qubit_ket(c(s, 0.0), c(0.0, s)), qubit_ket(c(s, 0.0), c(0.0, -s))],
        _ => [qubit_ket(c(1.0, 0.0), c(0.0, 0.0)), qubit_ket(c(0.0, 0.0), c(1.0, 0.0))],
    }
}

/// Ket orthogonal to a single-qubit ket (a, b): (−b*, a*).
pub fn orthogonal_qubit(psi: &DVector<Complex64>) -> DVector<Complex64> {
    qubit_ket(-psi[1].conj(), psi[0].conj())
}

fn require_dim(basis: &HermitianBasis, d: usize) -> Result<()> {
    if basis.dim() != d {
        return Err(Error::UnsupportedDimension(basis.dim()));
    }
    Ok(())
}

fn product_povm(label: String, first: &[DVector<Complex64>; 2], second: &[DVector<Complex64>; 2], basis: &HermitianBasis) -> Result<Povm> {
    let mut effects = Vec::with_capacity(4);
    for a in first {
        for b in second {
            effects.push(kron(&outer(a), &outer(b)));
        }
    }
    Povm::new(label, &effects, basis)
}

/// The 9 two-qubit product Pauli settings A⊗B, A, B ∈ {X, Y, Z}, labelled "XX", "XY", …, "ZZ".
pub fn cube_settings(basis: &HermitianBasis) -> Result<MeasurementCatalog> {
    require_dim(basis, 4)?;
    let mut settings = Vec::with_capacity(9);
    for a in ['X', 'Y', 'Z'] {
        for b in ['X', 'Y', 'Z'] {
            settings.push(product_povm(format!("{a}{b}"), &pauli_eigenkets(a), &pauli_eigenkets(b), basis)?);
        }
    }
    MeasurementCatalog::new(settings)
}

/// Joint eigenkets of commuting Paulis, ordered by sign pattern (+…, …, −…).
fn joint_eigenkets(generators: &[&str]) -> Vec<DVector<Complex64>> {
    let mats: Vec<CMatrix> = generators
        .iter()
        .map(|g| {
            let label = PauliLabel::parse(g).expect("static Pauli label");
            label
                .0
                .iter()
                .map(|&p| crate::quantum::basis::single_pauli(p))
                .reduce(|acc, m| kron(&acc, &m))
                .expect("non-empty label")
        })
        .collect();
    let d = mats[0].nrows();
    let count = 1usize << generators.len();
    (0..count)
        .map(|pattern| {
            let mut proj = CMatrix::identity(d, d);
            for (k, m) in mats.iter().enumerate() {
                let sign = if pattern >> (generators.len() - 1 - k) & 1 == 0 { 1.0 } else { -1.0 };
                proj *= (CMatrix::identity(d, d) + m * c(sign, 0.0)) * c(0.5, 0.0);
            }
            let col = (0..d)
                .max_by(|&i, &j| proj.column(i).norm().total_cmp(&proj.column(j).norm()))
                .expect("non-empty");
            canonical_phase(proj.column(col).into_owned())
        })
        .collect()
}

/// Pauli generator pairs whose joint eigenbases form a complete set of
/// mutually unbiased bases for two qubits.
const TWO_QUBIT_MUB_CLASSES: [[&str; 2]; 5] = [["ZI", "IZ"], ["XI", "IX"], ["YI", "IY"], ["XY", "YZ"], ["YX", "ZY"]];

/// Orthonormal kets of the standard MUB set, basis by basis.
pub fn mub_kets(dim: usize) -> Result<Vec<Vec<DVector<Complex64>>>> {
    match dim {
        2 => Ok(["Z", "X", "Y"].iter().map(|g| joint_eigenkets(&[g])).collect()),
        4 => Ok(TWO_QUBIT_MUB_CLASSES.iter().map(|gens| joint_eigenkets(gens)).collect()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn catalog_from_kets(prefix: &str, bases: &[Vec<DVector<Complex64>>], basis: &HermitianBasis) -> Result<MeasurementCatalog> {
    let settings = bases
        .iter()
        .enumerate()
        .map(|(k, kets)| Povm::from_orthonormal_kets(format!("{prefix}{k}"), kets, basis))
        .collect::<Result<Vec<_>>>()?;
    MeasurementCatalog::new(settings)
}

/// Complete set of mutually unbiased bases (5 for d = 4, 3 for d = 2),
/// labelled "MUB0".. with MUB0 the computational basis.
pub fn mub_settings(basis: &HermitianBasis) -> Result<MeasurementCatalog> {
    catalog_from_kets("MUB", &mub_kets(basis.dim())?, basis)
}

/// Product POVM {ψ₁, ψ₁⊥} ⊗ {ψ₂, ψ₂⊥} in (++, +−, −+, −−) order.
pub fn complete_product_povm(
    label: impl Into<String>,
    psi1: &DVector<Complex64>,
    psi2: &DVector<Complex64>,
    basis: &HermitianBasis,
) -> Result<Povm> {
    require_dim(basis, 4)?;
    let normalize = |psi: &DVector<Complex64>| -> Result<DVector<Complex64>> {
        if psi.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: psi.len(),
            });
        }
        let n = psi.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::InvalidArgument("qubit state must be nonzero".into()));
        }
        Ok(psi / c(n, 0.0))
    };
    let a = normalize(psi1)?;
    let b = normalize(psi2)?;
    let first = [a.clone(), orthogonal_qubit(&a)];
    let second = [b.clone(), orthogonal_qubit(&b)];
    product_povm(label.into(), &first, &second, basis)
}

/// The standard MUB with every ket mapped v → Uv, where U holds the
/// eigenvectors of `rho_hat`; the first rotated basis diagonalizes `rho_hat`.
/// Labels are "RMUB0"…
pub fn rotate_mub_to_basis(rho_hat: &DensityMatrix, basis: &HermitianBasis) -> Result<MeasurementCatalog> {
    require_dim(basis, 4)?;
    if rho_hat.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho_hat.dim(),
        });
    }
    let u = HermitianEigen::new(rho_hat.matrix()).vectors;
    let defect = (u.adjoint() * &u - CMatrix::identity(4, 4)).norm();
    if defect > 1e-10 {
        return Err(Error::Numeric(format!("eigenvector matrix not unitary (defect {defect:e})")));
    }
    let rotated: Vec<Vec<DVector<Complex64>>> = mub_kets(4)?
        .into_iter()
        .map(|kets| kets.into_iter().map(|v| &u * v).collect())
        .collect();
    catalog_from_kets("RMUB", &rotated, basis)
}

/// Rank-one projectors onto the eigenvectors of `rho_hat`, eigenvalues descending.
pub fn eigenbasis_povm(label: impl Into<String>, rho_hat: &DensityMatrix, basis: &HermitianBasis) -> Result<Povm> {
    if rho_hat.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: rho_hat.dim(),
        });
    }
    let eig = HermitianEigen::new(rho_hat.matrix());
    let kets: Vec<_> = (0..rho_hat.dim()).map(|k| eig.vector(k)).collect();
    Povm::from_orthonormal_kets(label, &kets, basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::build_pauli_basis;

    fn basis() -> HermitianBasis {
        build_pauli_basis(2).unwrap()
    }

    fn singlet() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_ket(&DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)])).unwrap()
    }

    fn same_effects(a: &Povm, b: &Povm) -> bool {
        a.effects().iter().all(|e| b.effects().iter().any(|f| (&e.effect - &f.effect).norm() < 1e-12))
    }

    #[test]
    fn identity_effect_coordinates() {
        let e = parameterize_effect(&CMatrix::identity(4, 4), &basis()).unwrap();
        assert!((e.gamma0 - 4.0).abs() < 1e-15);
        assert!(e.gamma.norm() < 1e-15);
    }

    #[test]
    fn computational_projector_coordinates() {
        let b = basis();
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        let e = parameterize_effect(&m, &b).unwrap();
        assert!((e.gamma0 - 1.0).abs() < 1e-15);
        for (k, label) in b.labels().iter().enumerate() {
            let expected = if ["ZI", "IZ", "ZZ"].contains(&label.as_str()) { 0.5 } else { 0.0 };
            assert!((e.gamma[k] - expected).abs() < 1e-12, "{label}");
        }
        // reconstruction E = γ₀ I/d + Σ γ_k Ω_k
        let mut rebuilt = CMatrix::identity(4, 4) * c(e.gamma0 / 4.0, 0.0);
        for (g, op) in e.gamma.iter().zip(b.ops()) {
            rebuilt += op * c(*g, 0.0);
        }
        assert!((rebuilt - m).norm() < 1e-12);
    }

    #[test]
    fn non_psd_effect_rejected() {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(-0.1, 0.0);
        assert!(matches!(parameterize_effect(&m, &basis()), Err(Error::NotPsd(_))));
    }

    #[test]
    fn cube_catalog_shape() {
        let cube = cube_settings(&basis()).unwrap();
        assert_eq!(cube.len(), 9);
        assert_eq!(cube.settings().iter().map(Povm::len).sum::<usize>(), 36);
        assert_eq!(cube.settings()[0].label(), "XX");
        assert_eq!(cube.settings()[8].label(), "ZZ");
    }

    #[test]
    fn singlet_under_zz() {
        let cube = cube_settings(&basis()).unwrap();
        let p = cube.get("ZZ").unwrap().probabilities(&singlet());
        let expected = [0.0, 0.5, 0.5, 0.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_requires_two_qubits() {
        assert!(matches!(
            cube_settings(&build_pauli_basis(1).unwrap()),
            Err(Error::UnsupportedDimension(2))
        ));
        assert!(mub_settings(&build_pauli_basis(3).unwrap()).is_err());
    }

    #[test]
    fn mub_pairwise_unbiased() {
        let bases = mub_kets(4).unwrap();
        assert_eq!(bases.len(), 5);
        for (i, bi) in bases.iter().enumerate() {
            for (j, bj) in bases.iter().enumerate().skip(i + 1) {
                for e in bi {
                    for f in bj {
                        let ov = e.dotc(f).norm_sqr();
                        assert!((ov - 0.25).abs() < 1e-12, "bases {i},{j}: {ov}");
                    }
                }
            }
        }
    }

    #[test]
    fn mub_entries_are_quarter_phases() {
        for kets in mub_kets(4).unwrap().iter().skip(1) {
            for v in kets {
                for z in v.iter() {
                    assert!((z.norm() - 0.5).abs() < 1e-12);
                    assert!(z.re.abs() < 1e-12 || z.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn maximally_mixed_is_flat_under_mub() {
        let mubs = mub_settings(&basis()).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4);
        for p in mubs.settings() {
            for prob in p.probabilities(&mixed) {
                assert!((prob - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_qubit_mub() {
        let b = build_pauli_basis(1).unwrap();
        let mubs = mub_settings(&b).unwrap();
        assert_eq!(mubs.len(), 3);
    }

    #[test]
    fn product_completion_reproduces_cube_settings() {
        let b = basis();
        let cube = cube_settings(&b).unwrap();
        let zero = qubit_ket(c(1.0, 0.0), c(0.0, 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = qubit_ket(c(s, 0.0), c(s, 0.0));
        let zz = complete_product_povm("P", &zero, &zero, &b).unwrap();
        assert!(same_effects(&zz, cube.get("ZZ").unwrap()));
        let xz = complete_product_povm("P", &plus, &zero, &b).unwrap();
        assert!(same_effects(&xz, cube.get("XZ").unwrap()));
        // outcome order: (++, +−, −+, −−)
        assert!((xz.effects()[0].effect.clone() - cube.get("XZ").unwrap().effects()[0].effect.clone()).norm() < 1e-12);
    }

    #[test]
    fn product_completion_rejects_zero() {
        let zero = qubit_ket(c(0.0, 0.0), c(0.0, 0.0));
        let one = qubit_ket(c(0.0, 0.0), c(1.0, 0.0));
        assert!(complete_product_povm("P", &zero, &one, &basis()).is_err());
    }

    #[test]
    fn rotated_mub_diagonal_state() {
        let b = basis();
        let mut m = CMatrix::zeros(4, 4);
        for (k, v) in [0.1, 0.4, 0.3, 0.2].iter().enumerate() {
            m[(k, k)] = c(*v, 0.0);
        }
        let rho = DensityMatrix::new(m).unwrap();
        let rot = rotate_mub_to_basis(&rho, &b).unwrap();
        assert_eq!(rot.settings()[0].label(), "RMUB0");
        let computational = mub_settings(&b).unwrap();
        assert!(same_effects(&rot.settings()[0], &computational.settings()[0]));
    }

    #[test]
    fn rotated_mub_of_maximally_mixed_still_unbiased() {
        let b = basis();
        let rot = rotate_mub_to_basis(&DensityMatrix::maximally_mixed(4), &b).unwrap();
        for (i, pi) in rot.settings().iter().enumerate() {
            for pj in rot.settings().iter().skip(i + 1) {
                for e in pi.effects() {
                    for f in pj.effects() {
                        let ov = (&e.effect * &f.effect).trace().re;
                        assert!((ov - 0.25).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn eigenbasis_of_werner_contains_singlet() {
        let b = basis();
        let werner = DensityMatrix::new(
            singlet().matrix() * c(0.9, 0.0) + DensityMatrix::maximally_mixed(4).matrix() * c(0.1, 0.0),
        )
        .unwrap();
        let povm = eigenbasis_povm("EIG", &werner, &b).unwrap();
        assert!((&povm.effects()[0].effect - singlet().matrix()).norm() < 1e-8);
    }

    #[test]
    fn eigenbasis_of_diagonal_state_is_computational() {
        let b = basis();
        let mut m = CMatrix::zeros(4, 4);
        for (k, v) in [0.4, 0.3, 0.2, 0.1].iter().enumerate() {
            m[(k, k)] = c(*v, 0.0);
        }
        let povm = eigenbasis_povm("EIG", &DensityMatrix::new(m).unwrap(), &b).unwrap();
        for (k, e) in povm.effects().iter().enumerate() {
            assert!((e.effect[(k, k)] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn catalog_rejects_duplicates_and_empty() {
        let cube = cube_settings(&basis()).unwrap();
        let first = cube.settings()[0].clone();
        assert!(MeasurementCatalog::new(vec![first.clone(), first]).is_err());
        assert!(MeasurementCatalog::new(vec![]).is_err());
    }

    #[test]
    fn catalog_json_has_labels() {
        let cube = cube_settings(&basis()).unwrap();
        let v = serde_json::to_value(&cube).unwrap();
        assert_eq!(v["settings"][4]["label"], "YY");
        assert_eq!(v["settings"][4]["effects"].as_array().unwrap().len(), 4);
    }
}
