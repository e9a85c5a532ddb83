//! Seeded random matrices and states for property checks.

use rand::Rng;

use super::matrix::{ComplexMatrix, C64};
use super::state::DensityMatrix;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("shape is consistent")
}

/// B + B† for a Gaussian B.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let b = random_matrix(rng, n, n);
    &b + &b.dagger()
}

/// B·B†, positive semidefinite and almost surely full rank.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let b = random_matrix(rng, n, n);
    &b * &b.dagger()
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Haar-distributed unitary via Gram–Schmidt of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.col(j);
        for _ in 0..2 {
            for b in &cols {
                let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (c, x) in v.iter_mut().zip(b) {
                    *c -= proj * x;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let mut u = ComplexMatrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        u.set_col(j, c);
    }
    u
}

/// Full-rank mixed state ρ = BB†/Tr(BB†).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    let p = random_psd(rng, n);
    let t = p.trace().re;
    DensityMatrix::new(p.scale_real(1.0 / t)).expect("normalized PSD matrix is a state")
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    DensityMatrix::pure(&random_unit_vector(rng, n)).expect("unit vector")
}
