//! Seeded generators for test data, competitors and synthetic systems.
//!
//! Everything here draws from [`ChaCha8Rng`], so a seed (and, where
//! relevant, a stream index) fully determines the output on every platform.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMatrix;
use crate::tensor::{Tensor3, C64};

pub type TubalRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TubalRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for item `stream` of a seeded family.
pub fn stream_rng(seed: u64, stream: u64) -> TubalRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian(r: &mut impl Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn complex_gaussian(r: &mut impl Rng) -> C64 {
    C64::new(gaussian(r), gaussian(r))
}

/// Real spatial tensor with i.i.d. standard normal entries.
pub fn random_real_tensor(m: usize, p: usize, n: usize, r: &mut impl Rng) -> Tensor3 {
    let values: Vec<f64> = (0..m * p * n).map(|_| gaussian(r)).collect();
    Tensor3::from_real(m, p, n, &values).expect("length matches dims")
}

pub fn random_complex_tensor(m: usize, p: usize, n: usize, r: &mut impl Rng) -> Tensor3 {
    Tensor3::from_fn(m, p, n, |_, _, _| complex_gaussian(r))
}

pub fn random_real_matrix(rows: usize, cols: usize, r: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(r), 0.0))
}

pub fn random_complex_matrix(rows: usize, cols: usize, r: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(r))
}

/// Real `n × n` orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal(n: usize, r: &mut impl Rng) -> nalgebra::DMatrix<f64> {
    let g = nalgebra::DMatrix::from_fn(n, n, |_, _| gaussian(r));
    let qr = g.qr();
    let (q, rr) = (qr.q(), qr.r());
    // fix column signs so the distribution does not depend on QR conventions
    let mut q = q;
    for j in 0..n {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Uniform draw from `[lo, hi)`.
pub fn uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

pub fn permutation(n: usize, r: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    p
}
