//! Seeded random test systems.

use nalgebra::DMatrix;
use rand::Rng;

use crate::linalg::spectral_norm;
use crate::lti::LtiSystem;

/// Entries uniform in `[-1, 1]`.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

/// `M - (‖M‖₂ + 1) I` for a random `M`: every eigenvalue has real part ≤ -1.
pub fn random_stable_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    random_stable_matrix_with_margin(rng, n, 1.0)
}

/// `M - (‖M‖₂ + margin) I`, so the spectral abscissa is at most `-margin`.
pub fn random_stable_matrix_with_margin<R: Rng + ?Sized>(rng: &mut R, n: usize, margin: f64) -> DMatrix<f64> {
    let m = random_matrix(rng, n, n);
    let shift = spectral_norm(&m).unwrap_or(0.0) + margin;
    m - DMatrix::identity(n, n) * shift
}

/// Random stable system with `n` states, `m` inputs, `p` outputs and `q` initial directions.
///
/// The state matrix has spectral abscissa at most `-0.5`; `D` is random as well.
pub fn random_system<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, p: usize, q: usize) -> LtiSystem {
    let margin = rng.random_range(0.5..1.5);
    let a = random_stable_matrix_with_margin(rng, n, margin);
    let b = random_matrix(rng, n, m);
    let c = random_matrix(rng, p, n);
    let d = random_matrix(rng, p, m);
    let x0 = random_matrix(rng, n, q);
    LtiSystem::new(a, b, c, d, x0).expect("conforming random dimensions")
}
