#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use relaymux::matrix::ComplexMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();
    ComplexMatrix::from_row_major(rows, cols, data).unwrap()
}

pub fn to_nalgebra(h: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(h.rows(), h.cols(), |r, c| h.get(r, c))
}

/// Σ log2(1 + η λ_i) over the eigenvalues of H Hᴴ, computed by a Hermitian
/// eigendecomposition of the row-side Gram regardless of shape.
pub fn eigen_mutual_information(h: &ComplexMatrix, eta: f64) -> f64 {
    let m = to_nalgebra(h);
    let gram = &m * m.adjoint();
    let eig = SymmetricEigen::new(gram);
    eig.eigenvalues
        .iter()
        .map(|&lambda| (1.0 + eta * lambda.max(0.0)).log2())
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
