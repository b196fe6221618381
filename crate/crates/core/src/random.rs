//! Seeded sampling of states, unitaries and Hermitian operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::Operator;
use crate::scalar::Real;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex::new(T::lit(a), T::lit(b))
}

pub fn ginibre<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector.
pub fn pure_vector<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<Complex<T>> {
    let v = DVector::from_fn(dim, |_, _| gaussian::<T, R>(rng));
    let n = v.norm();
    v.map(|z| z / n)
}

pub fn pure_state<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator<T> {
    Operator::projector(&pure_vector(rng, dim))
}

/// Full-rank density matrix from the Hilbert–Schmidt ensemble.
pub fn mixed_state<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator<T> {
    let g = ginibre::<T, R>(rng, dim, dim);
    let p = &g * g.adjoint();
    let tr = p.trace().re;
    Operator::wrap(p.map(|z| z / tr))
}

/// Pure or mixed state chosen by a fair coin.
pub fn state<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator<T> {
    if rng.random_bool(0.5) {
        pure_state(rng, dim)
    } else {
        mixed_state(rng, dim)
    }
}

/// Hermitian operator with independent Gaussian coordinates.
pub fn hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator<T> {
    let g = Operator::wrap(ginibre::<T, R>(rng, dim, dim));
    g.hermitian_part()
}

/// Positive operator B*B.
pub fn positive<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator<T> {
    let g = ginibre::<T, R>(rng, dim, dim);
    Operator::wrap(g.adjoint() * g)
}

/// Haar-random unitary via QR with phase correction.
pub fn unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator<T> {
    let qr = ginibre::<T, R>(rng, dim, dim).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm_sqr().sqrt();
        if n > T::zero() {
            let phase = d / n;
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    Operator::wrap(q)
}
