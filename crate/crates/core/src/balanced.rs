//! Gramian factors, square-root balanced truncation and full balancing.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{default_psd_tolerance, psd_factor_with, solve_lyapunov, sorted_svd};
use crate::lti::{ensure_stable, LtiSystem, StateSpace};

/// Eigenvalues of a computed Gramian down to `-GRAMIAN_NEGATIVE_TOL·λ_max` are treated as
/// round-off and clamped; the Lyapunov solution itself is only that accurate.
const GRAMIAN_NEGATIVE_TOL: f64 = 1e-8;

/// Factors `P = R Rᵀ`, `P̂ = R̂ R̂ᵀ`, `Q = L Lᵀ` of the controllability,
/// initial-value and observability Gramians.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianFactors {
    pub r: DMatrix<f64>,
    pub rhat: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

/// Projection matrices and the full list of Hankel singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct BtResult {
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// `σ₁ ≥ … ≥ σ_n ≥ 0`, zero padded to the full order.
    pub hsv: Vec<f64>,
    /// Numerical rank of `Lᵀ R`.
    pub rank: usize,
    /// Set when `σ_r` and `σ_{r+1}` coincide numerically; the ROM may then lose stability.
    pub gap_warning: bool,
}

impl BtResult {
    pub fn order(&self) -> usize {
        self.v.ncols()
    }
}

/// Fully balanced realization `(A_b, G_b, C_b)` with both Gramians equal to `diag(hsv)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedRealization {
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub hsv: Vec<f64>,
    /// `false` if the realization was not numerically minimal and only its minimal
    /// part has been balanced.
    pub minimal: bool,
}

/// Factor of the solution of `A X + X Aᵀ + G Gᵀ = 0`.
pub fn lyapunov_factor(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = solve_lyapunov(a, g)?;
    let tol = default_psd_tolerance(a.nrows());
    Ok(psd_factor_with(&x, tol, GRAMIAN_NEGATIVE_TOL.max(tol))?.factor)
}

/// Factors of the three Gramians of `sys`.
pub fn gramian_factors(sys: &LtiSystem) -> Result<GramianFactors> {
    ensure_stable(&sys.a)?;
    Ok(GramianFactors {
        r: lyapunov_factor(&sys.a, &sys.b)?,
        rhat: lyapunov_factor(&sys.a, &sys.x0)?,
        l: lyapunov_factor(&sys.a.transpose(), &sys.c.transpose())?,
    })
}

/// Square-root balanced truncation of `(A, B, C)` to order `r`.
pub fn bt(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, r: usize) -> Result<BtResult> {
    ensure_stable(a)?;
    if b.nrows() != a.nrows() || c.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, C is {}x{} for A of order {}",
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols(),
            a.nrows()
        )));
    }
    let controllability = lyapunov_factor(a, b)?;
    let observability = lyapunov_factor(&a.transpose(), &c.transpose())?;
    bt_from_factors(&controllability, &observability, r)
}

/// Square-root balanced truncation from given Gramian factors `P = R Rᵀ`, `Q = L Lᵀ`.
///
/// `V = R Z₁ Σ₁^{-1/2}`, `W = L U₁ Σ₁^{-1/2}` from the SVD `Lᵀ R = U Σ Zᵀ`.
pub fn bt_from_factors(r_factor: &DMatrix<f64>, l_factor: &DMatrix<f64>, r: usize) -> Result<BtResult> {
    let n = r_factor.nrows();
    if l_factor.nrows() != n {
        return Err(Error::DimensionMismatch(format!("factors have {} and {} rows", n, l_factor.nrows())));
    }
    let product = l_factor.transpose() * r_factor;
    let svd = sorted_svd(&product)?;
    let s = &svd.singular_values;
    let threshold =
        product.nrows().max(product.ncols()) as f64 * f64::EPSILON * s.iter().copied().next().unwrap_or(0.0);
    let rank = s.iter().take_while(|&&x| x > threshold && x > 0.0).count();
    if r > rank {
        return Err(Error::RankDeficient { requested: r, rank });
    }

    let mut hsv: Vec<f64> = s.iter().copied().collect();
    hsv.resize(n.max(hsv.len()), 0.0);
    hsv.truncate(n);

    let gap_warning = r > 0 && r < hsv.len() && hsv[r - 1] - hsv[r] <= 1e-12 * hsv[0];
    if gap_warning {
        warn!("sigma_{r} and sigma_{} coincide; the reduced model may be unstable", r + 1);
    }

    let inv_sqrt = DVector::from_iterator(r, s.iter().take(r).map(|x| 1.0 / x.sqrt()));
    let scale = DMatrix::from_diagonal(&inv_sqrt);
    let v = r_factor * svd.v.columns(0, r) * &scale;
    let w = l_factor * svd.u.columns(0, r) * &scale;
    Ok(BtResult { v, w, hsv, rank, gap_warning })
}

/// Petrov–Galerkin projection `(WᵀAV, WᵀB, CV, D)`.
pub fn project(sys: &LtiSystem, v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<StateSpace> {
    project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, v, w)
}

pub(crate) fn project_matrices(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<StateSpace> {
    let n = a.nrows();
    if v.nrows() != n || w.nrows() != n || v.ncols() != w.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "V is {}x{}, W is {}x{} for order {n}",
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let r = v.ncols();
    let wt = w.transpose();
    let defect = (&wt * v - DMatrix::<f64>::identity(r, r)).norm();
    if !(defect <= 1e-6) {
        return Err(Error::NotBiorthogonal { defect });
    }
    StateSpace::new(&wt * a * v, &wt * b, c * v, d.clone())
}

/// Balances `(A, G, C)` so that both Gramians equal `diag(hsv)`.
///
/// A realization that is not numerically minimal is reduced to its minimal part
/// and flagged via [`BalancedRealization::minimal`].
pub fn balance_full(a: &DMatrix<f64>, g: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<BalancedRealization> {
    let n = a.nrows();
    ensure_stable(a)?;
    let controllability = lyapunov_factor(a, g)?;
    let observability = lyapunov_factor(&a.transpose(), &c.transpose())?;
    let product = observability.transpose() * &controllability;
    let svd = sorted_svd(&product)?;
    let s = &svd.singular_values;
    let threshold =
        product.nrows().max(product.ncols()) as f64 * f64::EPSILON * s.iter().copied().next().unwrap_or(0.0);
    let rank = s.iter().take_while(|&&x| x > threshold && x > 0.0).count();
    let minimal = rank == n;
    if !minimal {
        warn!("realization is not minimal (numerical order {rank} of {n}); balancing its minimal part");
    }

    let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(rank, s.iter().take(rank).map(|x| 1.0 / x.sqrt())));
    let v = &controllability * svd.v.columns(0, rank) * &inv_sqrt;
    let w = &observability * svd.u.columns(0, rank) * &inv_sqrt;
    let wt = w.transpose();
    Ok(BalancedRealization {
        a: &wt * a * &v,
        g: &wt * g,
        c: c * &v,
        hsv: s.iter().take(rank).copied().collect(),
        minimal,
    })
}
