//! Hermitian eigendecomposition and the spectral matrix functions built on it.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Asymmetry allowed before `herm_eig` refuses its input.
pub const HERMITIAN_TOL: f64 = 1e-8;
/// Eigenvalues in `[-PSD_CLAMP, 0)` are treated as round-off and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;
/// Relative threshold separating the support from the null space.
pub const RANK_TOL: f64 = 1e-10;

/// Spectral decomposition A = U·diag(λ)·U† with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors stored as columns, in the same order as `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigDecomposition {
    /// U·f(D)·U† for a spectral function f.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = u[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += a * u[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot A_pq with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation that zeroes it.
pub fn herm_eig(a: &ComplexMatrix) -> Result<EigDecomposition> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let asymmetry = a.hermitian_residual();
    if asymmetry > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry });
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Ok(EigDecomposition {
            eigenvalues: vec![0.0; n],
            eigenvectors: v,
        });
    }

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = m[(p, q)];
                let gabs = g.norm();
                if gabs <= 1e-300 {
                    continue;
                }
                let phase = g / gabs;
                let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
                let theta = (aqq - app) / (2.0 * gabs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J restricted to (p, q): [[c, s], [-s·e^{-iφ}, c·e^{-iφ}]]
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // m <- m·J
                for r in 0..n {
                    let (x, y) = (m[(r, p)], m[(r, q)]);
                    m[(r, p)] = x * jpp + y * jqp;
                    m[(r, q)] = x * jpq + y * jqq;
                }
                // m <- J†·m
                for r in 0..n {
                    let (x, y) = (m[(p, r)], m[(q, r)]);
                    m[(p, r)] = jpp.conj() * x + jqp.conj() * y;
                    m[(q, r)] = jpq.conj() * x + jqq.conj() * y;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for r in 0..n {
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = x * jpp + y * jqp;
                    v[(r, q)] = x * jpq + y * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_col(dst, &v.col(src));
    }
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn psd_eig(a: &ComplexMatrix) -> Result<EigDecomposition> {
    let mut eig = herm_eig(a)?;
    let min = eig.min_eigenvalue();
    if min < -PSD_CLAMP {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    for lam in &mut eig.eigenvalues {
        if *lam < 0.0 {
            *lam = 0.0;
        }
    }
    Ok(eig)
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(psd_eig(a)?.reconstruct_with(f64::sqrt))
}

/// Moore–Penrose inverse square root: eigenvalues above `rank_tol·λ_max`
/// map to λ^{-1/2}, the rest to zero.
pub fn psd_inv_sqrt(a: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let (m, _) = psd_inv_sqrt_with_rank(a, rank_tol)?;
    Ok(m)
}

/// As [`psd_inv_sqrt`], also returning the rank of the retained support.
pub fn psd_inv_sqrt_with_rank(a: &ComplexMatrix, rank_tol: f64) -> Result<(ComplexMatrix, usize)> {
    let eig = psd_eig(a)?;
    let cutoff = rank_tol * eig.max_eigenvalue();
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > cutoff && l > 0.0)
        .count();
    if rank == 0 {
        return Err(Error::ZeroMatrix);
    }
    let m = eig.reconstruct_with(|l| if l > cutoff && l > 0.0 { l.powf(-0.5) } else { 0.0 });
    Ok((m, rank))
}

/// Completes a unit vector to a unitary whose column 0 is that vector,
/// filling the other columns by Gram–Schmidt over the standard basis.
pub fn complete_unitary(first_column: &[C64]) -> Result<ComplexMatrix> {
    let n = first_column.len();
    let norm = first_column.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0 || (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let mut basis: Vec<Vec<C64>> = vec![first_column.to_vec()];
    while basis.len() < n {
        // the standard basis vector with the largest residual after
        // projecting out the current basis (two MGS passes)
        let best = (0..n)
            .map(|k| {
                let mut cand = vec![ZERO; n];
                cand[k] = ONE;
                for _ in 0..2 {
                    for b in &basis {
                        let proj: C64 = b.iter().zip(&cand).map(|(x, y)| x.conj() * y).sum();
                        for (c, x) in cand.iter_mut().zip(b) {
                            *c -= proj * x;
                        }
                    }
                }
                let cn = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (cn, cand)
            })
            .reduce(|best, next| if next.0 > best.0 { next } else { best })
            .expect("n > 0");
        let (cn, cand) = best;
        basis.push(cand.into_iter().map(|z| z / cn).collect());
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, b) in basis.iter().enumerate() {
        u.set_col(j, b);
    }
    Ok(u)
}
