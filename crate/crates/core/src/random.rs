//! Seeded random test-data generators.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matcore::{symmetrize, Mat, SpdMat, SymMat};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-scale, scale]`.
pub fn random_mat(rng: &mut impl Rng, n: usize, scale: f64) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.random_range(-scale..=scale))
}

pub fn random_sym(rng: &mut impl Rng, n: usize, scale: f64) -> SymMat {
    SymMat::from_symmetrized(&random_mat(rng, n, scale)).expect("finite square matrix")
}

/// Random orthogonal matrix from the QR factorization of a random matrix.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Mat {
    random_mat(rng, n, 1.0).qr().q()
}

/// SPD matrix with eigenvalues log-uniform in `[min_eig, max_eig]`.
pub fn random_spd(rng: &mut impl Rng, n: usize, min_eig: f64, max_eig: f64) -> SpdMat {
    let q = random_orthogonal(rng, n);
    let (lo, hi) = (min_eig.ln(), max_eig.ln());
    let d = DVector::from_fn(n, |_, _| rng.random_range(lo..=hi).exp());
    let m = symmetrize(&(&q * Mat::from_diagonal(&d) * q.transpose()));
    SpdMat::new(m).expect("positive spectrum")
}

/// Symmetric matrix with prescribed eigenvalues in a random basis.
pub fn random_sym_with_spectrum(rng: &mut impl Rng, eigs: &[f64]) -> SymMat {
    let n = eigs.len();
    let q = random_orthogonal(rng, n);
    let d = Mat::from_diagonal(&DVector::from_column_slice(eigs));
    SymMat::from_symmetrized(&(&q * d * q.transpose())).expect("finite")
}
