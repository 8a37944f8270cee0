//! Seeded random inputs for property checks and experiments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::bracket::{act, BracketTensor};
use crate::catalog;
use crate::scalar::Real;

fn uniform<T: Real, R: Rng>(rng: &mut R) -> T {
    T::of(rng.gen_range(-1.0..1.0))
}

/// Matrix with independent entries uniform in `[-1, 1)`.
pub fn random_matrix<T: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| uniform(rng))
}

pub fn random_vector<T: Real, R: Rng>(rng: &mut R, n: usize) -> DVector<T> {
    DVector::from_fn(n, |_, _| uniform(rng))
}

pub fn random_symmetric<T: Real, R: Rng>(rng: &mut R, n: usize) -> DMatrix<T> {
    let a = random_matrix::<T, R>(rng, n, n);
    (&a + a.transpose()) * T::of(0.5)
}

/// Orthogonal matrix from the QR factor of a random matrix.
pub fn random_orthogonal<T: Real, R: Rng>(rng: &mut R, n: usize) -> DMatrix<T> {
    let a = random_matrix::<T, R>(rng, n, n);
    a.qr().q()
}

/// Well-conditioned invertible matrix `Id + A / 2`, redrawn until
/// `|det| >= 0.2`.
pub fn random_gl<T: Real, R: Rng>(rng: &mut R, n: usize) -> DMatrix<T> {
    loop {
        let h = DMatrix::identity(n, n) + random_matrix::<T, R>(rng, n, n) * T::of(0.5);
        if h.determinant().abs() >= T::of(0.2) {
            return h;
        }
    }
}

/// Antisymmetric tensor with random coefficients (not a Lie bracket in
/// general).
pub fn random_bracket<T: Real, R: Rng>(rng: &mut R, n: usize) -> BracketTensor<T> {
    let coeffs = (0..n * n * n).map(|_| uniform(rng)).collect();
    BracketTensor::from_coeffs(n, coeffs).expect("valid dimension")
}

/// Semidirect product `R^r x_D n` with `n` abelian or Heisenberg and
/// `D_1..D_r` commuting derivations.
fn semidirect<T: Real, R: Rng>(rng: &mut R, n: usize) -> BracketTensor<T> {
    let rank = if n >= 4 && rng.gen_bool(0.3) { 2 } else { 1 };
    let m = n - rank;
    let heis = m >= 3 && m % 2 == 1 && rank == 1 && rng.gen_bool(0.5);
    let mut mu = BracketTensor::zeros(n).expect("valid dimension");
    if heis {
        // pairs (x_{2i}, x_{2i+1}) with eigenvalues a_i, s - a_i, centre s
        let s: f64 = rng.gen_range(0.5..1.5);
        let mut diag = Vec::with_capacity(m);
        for _ in 0..m / 2 {
            let a: f64 = rng.gen_range(-0.5..1.5);
            diag.push(a);
            diag.push(s - a);
        }
        diag.push(s);
        for i in 0..m / 2 {
            mu.set(1 + 2 * i, 2 + 2 * i, n - 1, T::one());
        }
        for (j, d) in diag.iter().enumerate() {
            mu.set(0, 1 + j, 1 + j, T::of(*d));
        }
        return mu;
    }
    let p = random_gl::<T, R>(rng, m);
    let p_inv = p.clone().try_inverse().expect("random_gl is invertible");
    for r in 0..rank {
        let d = if rank == 1 && rng.gen_bool(0.5) {
            random_matrix::<T, R>(rng, m, m)
        } else {
            let diag = DVector::from_fn(m, |_, _| uniform::<T, R>(rng));
            &p * DMatrix::from_diagonal(&diag) * &p_inv
        };
        for j in 0..m {
            for i in 0..m {
                mu.set(r, rank + j, rank + i, d[(i, j)]);
            }
        }
    }
    mu
}

/// Random solvable Lie bracket: a semidirect product or a nilpotent
/// catalog bracket, moved by a random change of basis.
pub fn random_solvable<T: Real, R: Rng>(rng: &mut R, n: usize) -> BracketTensor<T> {
    let base = match rng.gen_range(0..5) {
        0 if n >= 3 && n % 2 == 1 => catalog::heisenberg(n).expect("odd dimension"),
        1 if n >= 4 => {
            // filiform n4 plus an abelian factor
            let mut mu = BracketTensor::zeros(n).expect("valid dimension");
            mu.set(0, 1, 2, T::one());
            mu.set(0, 2, 3, T::one());
            mu
        }
        _ => semidirect(rng, n),
    };
    act(&random_gl::<T, R>(rng, n), &base).expect("random_gl is invertible")
}
