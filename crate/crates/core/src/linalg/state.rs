use super::eig::herm_eig;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance for the Hermitian, unit-trace and positivity checks on states.
pub const STATE_TOL: f64 = 1e-10;

/// Positive semidefinite, unit-trace complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::InvalidState(format!(
                "{}x{} is not a square matrix",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermitian_residual();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("asymmetry {herm:.3e}")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = herm_eig(&matrix)?.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix })
    }

    /// |ψ⟩⟨ψ| for a unit vector ψ.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(ComplexMatrix::outer(psi))
    }

    /// Computational basis state |k⟩⟨k| in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(k, k)] = ONE;
        Self { matrix: m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        self.matrix.inner(&self.matrix).re
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }
}

/// Tensor product A⊗B (left factor most significant).
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Reduced state of subsystem `keep` of a state on `dims[0] ⊗ dims[1] ⊗ …`.
pub fn partial_trace(rho: &DensityMatrix, keep: usize, dims: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if total != rho.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            found: total,
        });
    }
    if keep >= dims.len() {
        return Err(Error::DimMismatch {
            expected: dims.len(),
            found: keep,
        });
    }
    let m = reduce(rho.matrix(), keep, dims);
    DensityMatrix::new(m)
}

/// Partial trace on a raw operator; no state validation.
pub fn reduce(m: &ComplexMatrix, keep: usize, dims: &[usize]) -> ComplexMatrix {
    let dk = dims[keep];
    let left: usize = dims[..keep].iter().product();
    let right: usize = dims[keep + 1..].iter().product();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    let row = (l * dk + i) * right + r;
                    let col = (l * dk + j) * right + r;
                    acc += m[(row, col)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    Ok(())
}

fn dominant_vector_if_pure(rho: &DensityMatrix) -> Option<Vec<C64>> {
    if rho.purity() < 1.0 - 1e-12 {
        return None;
    }
    let eig = herm_eig(rho.matrix()).ok()?;
    Some(eig.eigenvectors.col(rho.dim() - 1))
}

fn expectation(psi: &[C64], m: &ComplexMatrix) -> f64 {
    let n = psi.len();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += psi[i].conj() * m[(i, j)] * psi[j];
        }
    }
    acc.re
}

/// Uhlmann–Jozsa fidelity F(ρ, σ) = [Tr √(√σ ρ √σ)]².
///
/// When either argument is pure this reduces to ⟨ψ|ρ|ψ⟩, which is evaluated
/// directly to avoid square roots of round-off eigenvalues.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    if let Some(psi) = dominant_vector_if_pure(sigma) {
        return Ok(expectation(&psi, rho.matrix()).clamp(0.0, 1.0));
    }
    if let Some(psi) = dominant_vector_if_pure(rho) {
        return Ok(expectation(&psi, sigma.matrix()).clamp(0.0, 1.0));
    }
    let root = super::eig::psd_sqrt(sigma.matrix())?;
    let inner = (&(&root * rho.matrix()) * &root).hermitian_part();
    let eig = herm_eig(&inner)?;
    let cutoff = 1e-15 * eig.max_eigenvalue().max(1.0);
    let tr: f64 = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|l| l.sqrt())
        .sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// Quantum relative entropy D(ρ‖σ) = Tr ρ ln ρ − Tr ρ ln σ in nats.
///
/// Returns `f64::INFINITY` when the support of ρ is not contained in that of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let er = herm_eig(rho.matrix())?;
    let es = herm_eig(sigma.matrix())?;
    let neg_entropy: f64 = er
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum();
    let null_cut = 1e-12 * es.max_eigenvalue();
    let mut cross = 0.0;
    for (k, &mu) in es.eigenvalues.iter().enumerate() {
        let v = es.eigenvectors.col(k);
        let weight = expectation(&v, rho.matrix());
        if mu <= null_cut {
            if weight > 1e-12 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * mu.ln();
    }
    Ok(neg_entropy - cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_pure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn rejects_invalid_states() {
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.5, 0.4])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_rows(&[[0.5, 0.1], [0.0, 0.5]])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let zz = DensityMatrix::basis(4, 0);
        let a = partial_trace(&zz, 0, &[2, 2]).unwrap();
        assert!(a.matrix().approx_eq(DensityMatrix::basis(2, 0).matrix(), 0.0));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[r(h), r(0.0), r(0.0), r(h)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        for keep in 0..2 {
            let red = partial_trace(&bell, keep, &[2, 2]).unwrap();
            assert!(red.matrix().approx_eq(mixed.matrix(), 1e-15));
        }
        assert!(matches!(
            partial_trace(&bell, 0, &[2, 3]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_density(&mut rng, 2);
            let b = random_density(&mut rng, 4);
            let c = random_density(&mut rng, 2);
            let abc = a.tensor(&b).tensor(&c);
            let dims = [2, 4, 2];
            assert!(partial_trace(&abc, 0, &dims).unwrap().matrix().approx_eq(a.matrix(), 1e-12));
            assert!(partial_trace(&abc, 1, &dims).unwrap().matrix().approx_eq(b.matrix(), 1e-12));
            assert!(partial_trace(&abc, 2, &dims).unwrap().matrix().approx_eq(c.matrix(), 1e-12));
        }
    }

    #[test]
    fn fidelity_examples() {
        let zero = DensityMatrix::basis(2, 0);
        let one = DensityMatrix::basis(2, 1);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-15);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-15);
        assert!((fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &DensityMatrix::basis(4, 0)).is_err());
    }

    #[test]
    fn fidelity_pure_target_is_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let rho = random_density(&mut rng, 2);
            let psi = random_pure(&mut rng, 2);
            let f = fidelity(&rho, &psi).unwrap();
            let direct = rho.matrix().inner(psi.matrix()).re;
            assert!((f - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_symmetric_on_mixed_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 4, 8] {
            for _ in 0..20 {
                let a = random_density(&mut rng, n);
                let b = random_density(&mut rng, n);
                let f1 = fidelity(&a, &b).unwrap();
                let f2 = fidelity(&b, &a).unwrap();
                assert!((f1 - f2).abs() < 1e-9);
                assert!((0.0..=1.0).contains(&f1));
            }
        }
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&mut rng, 2);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-12);
        let d = relative_entropy(&DensityMatrix::basis(2, 0), &DensityMatrix::basis(2, 1)).unwrap();
        assert!(d.is_infinite() && d > 0.0);

        let a = DensityMatrix::new(ComplexMatrix::diag_real(&[0.8, 0.2])).unwrap();
        let b = DensityMatrix::maximally_mixed(2);
        let oracle = 0.8 * (0.8f64 / 0.5).ln() + 0.2 * (0.2f64 / 0.5).ln();
        assert!((relative_entropy(&a, &b).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn klein_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 4] {
            for _ in 0..50 {
                let a = random_density(&mut rng, n);
                let b = random_density(&mut rng, n);
                assert!(relative_entropy(&a, &b).unwrap() >= -1e-10);
            }
        }
    }
}
