//! Seeded random objects. Every randomized routine in the crate threads a
//! `u64` seed through here, so runs are reproducible bit for bit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::op::C64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box–Muller; `rand_distr` is not pulled in for this.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    Complex::new(gaussian(rng), gaussian(rng))
}

pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    DVector::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

/// Haar-distributed pure state vector.
pub fn state_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let v = gaussian_vector(n, rng);
    let norm = v.norm();
    v / Complex::new(norm, 0.0)
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the R diagonal
/// phase-fixed to be positive.
pub fn unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / Complex::new(d.norm(), 0.0)
        } else {
            Complex::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn hermitian(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = gaussian_matrix(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Hermitian with spectrum in [−1, 1]: a valid dichotomic-observable seed.
pub fn hermitian_contraction(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let h = hermitian(n, rng);
    let norm = crate::Operator::from_matrix(h.clone()).norm_operator();
    if norm > 0.0 {
        h / Complex::new(norm, 0.0)
    } else {
        h
    }
}

/// Full-rank random density matrix G G† / tr.
pub fn density(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let g = gaussian_matrix(n, n, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}
