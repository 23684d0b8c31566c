//! A priori and a posteriori output-error bounds `‖y - yᵣ‖ ≤ c_u‖u‖ + c_x₀‖z₀‖`.

use log::warn;
use nalgebra::DMatrix;

use crate::balanced::{balance_full, bt};
use crate::error::{Error, Result};
use crate::linalg::{solve_sylvester, spectral_norm};
use crate::lti::{h2_norm, LtiSystem};
use crate::rom::{Method, ReducedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orders {
    Joint(usize),
    Separate { k: usize, l: usize },
}

impl std::fmt::Display for Orders {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orders::Joint(r) => write!(f, "{r}"),
            Orders::Separate { k, l } => write!(f, "{k},{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c_u: f64,
    pub c_x0: f64,
    pub method: Method,
    pub orders: Orders,
}

impl BoundConstants {
    pub fn evaluate(&self, u_norm: f64, z0_norm: f64) -> f64 {
        self.c_u * u_norm + self.c_x0 * z0_norm
    }
}

/// `Σ_{i>r} sᵢ`.
pub fn tail_sum(values: &[f64], r: usize) -> f64 {
    values.iter().skip(r).sum()
}

/// `2(σ_{r+1} + … + σ_n)`.
pub fn bt_bound(sigma: &[f64], r: usize) -> f64 {
    2.0 * tail_sum(sigma, r)
}

/// Joint decaying-shift bound: `c_u = 2Σ_{i>r}ηᵢ`, `c_x₀ = βc_u`.
pub fn jshift_bound(eta: &[f64], r: usize, beta: f64) -> BoundConstants {
    let c_u = bt_bound(eta, r);
    BoundConstants { c_u, c_x0: beta * c_u, method: Method::JShiftBt, orders: Orders::Joint(r) }
}

/// Separate decaying-shift bound: `c_u = 2Σ_{i>k}σᵢ`, `c_x₀ = 2Σ_{i>ℓ}θᵢ`.
pub fn sshift_bound(sigma: &[f64], theta: &[f64], k: usize, l: usize) -> BoundConstants {
    BoundConstants {
        c_u: bt_bound(sigma, k),
        c_x0: bt_bound(theta, l),
        method: Method::SShiftBt,
        orders: Orders::Separate { k, l },
    }
}

/// A posteriori bound of the augmented method,
/// `c_x₀ = 3·2^{-1/3}(Σ_{i>r}ηᵢ)^{2/3}(‖LᵀAX₀‖₂ + ‖Σᵣ^{1/2}AᵣX₀ᵣ‖₂)^{1/3}` (spectral norms).
pub fn augbt_posteriori_bound(
    eta: &[f64],
    r: usize,
    l_factor: &DMatrix<f64>,
    a: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    ar: &DMatrix<f64>,
    x0r: &DMatrix<f64>,
) -> Result<BoundConstants> {
    if ar.nrows() != r || x0r.nrows() != r || eta.len() < r {
        return Err(Error::DimensionMismatch(format!(
            "reduced matrices are {}x{} and {}x{} for order {r}",
            ar.nrows(),
            ar.ncols(),
            x0r.nrows(),
            x0r.ncols()
        )));
    }
    let tail = tail_sum(eta, r);
    let full_term = spectral_norm(&(l_factor.transpose() * a * x0))?;
    let mut scaled = ar * x0r;
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= eta[i].sqrt();
    }
    let reduced_term = spectral_norm(&scaled)?;
    let c_x0 = 3.0 * 2f64.powf(-1.0 / 3.0) * tail.powf(2.0 / 3.0) * (full_term + reduced_term).cbrt();
    Ok(BoundConstants { c_u: 2.0 * tail, c_x0, method: Method::AugBt, orders: Orders::Joint(r) })
}

/// Result of the separate-BT a posteriori bound with the raw radicand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtBtBound {
    pub constants: BoundConstants,
    /// `Σ_{i>ℓ} t_{ii}θᵢ` before the square root.
    pub radicand: f64,
    /// `false` if `[A, X₀, C]` was not minimal and only its minimal part was balanced.
    pub minimal: bool,
}

/// Hankel singular values of `(A, B, C)` padded to the state dimension.
pub fn hankel_singular_values(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(bt(a, b, c, 0)?.hsv)
}

/// A posteriori bound of separate BT: balance `[A, X₀, C]`, solve
/// `A_bᵀY + Y A_b,₁₁ + C_bᵀC_b,₁ = 0`, set `T = X₀_bX₀_bᵀ + 2Y[I 0]A_b` and
/// `c_x₀ = (Σ_{i>ℓ} t_{ii}θᵢ)^{1/2}`.
pub fn btbt_posteriori_bound(sys: &LtiSystem, k: usize, l: usize) -> Result<BtBtBound> {
    let sigma = hankel_singular_values(&sys.a, &sys.b, &sys.c)?;
    let bal = balance_full(&sys.a, &sys.x0, &sys.c)?;
    let radicand = btbt_radicand(&bal.a, &bal.g, &bal.c, &bal.hsv, l)?;
    let c_x0 = if radicand < 0.0 {
        warn!("negative radicand {radicand:e} in the separate-BT bound; clamping to zero");
        0.0
    } else {
        radicand.sqrt()
    };
    Ok(BtBtBound {
        constants: BoundConstants {
            c_u: bt_bound(&sigma, k),
            c_x0,
            method: Method::BtBt,
            orders: Orders::Separate { k, l },
        },
        radicand,
        minimal: bal.minimal,
    })
}

/// `Σ_{i>ℓ} t_{ii}θᵢ` for a balanced realization `(A_b, X₀_b, C_b)` with Hankel values `θ`.
pub fn btbt_radicand(ab: &DMatrix<f64>, x0b: &DMatrix<f64>, cb: &DMatrix<f64>, theta: &[f64], l: usize) -> Result<f64> {
    let n = ab.nrows();
    if l >= n {
        return Ok(0.0);
    }
    let y = if l == 0 {
        DMatrix::zeros(n, 0)
    } else {
        let a11 = ab.view((0, 0), (l, l)).clone_owned();
        let rhs = cb.transpose() * cb.columns(0, l);
        solve_sylvester(&ab.transpose(), &a11, &rhs)?
    };
    let t = x0b * x0b.transpose() + (y * ab.rows(0, l)) * 2.0;
    Ok((l..n).map(|i| t[(i, i)] * theta[i]).sum())
}

/// `‖Ce^{A·}X₀ - Cᵣe^{Aᵣ·}X₀ᵣ‖_{L₂}` as the H₂ norm of
/// `[[A 0; 0 Aᵣ], [X₀; X₀ᵣ], [C -Cᵣ]]`.
pub fn bt_initial_value_error_term(
    a: &DMatrix<f64>,
    ar: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    x0r: &DMatrix<f64>,
    c: &DMatrix<f64>,
    cr: &DMatrix<f64>,
) -> Result<f64> {
    let (n, r) = (a.nrows(), ar.nrows());
    if x0.nrows() != n || x0r.nrows() != r || x0.ncols() != x0r.ncols() || c.nrows() != cr.nrows() {
        return Err(Error::DimensionMismatch("error system blocks do not conform".into()));
    }
    let q = x0.ncols();
    let mut big_a = DMatrix::zeros(n + r, n + r);
    big_a.view_mut((0, 0), (n, n)).copy_from(a);
    big_a.view_mut((n, n), (r, r)).copy_from(ar);
    let mut g = DMatrix::zeros(n + r, q);
    g.view_mut((0, 0), (n, q)).copy_from(x0);
    g.view_mut((n, 0), (r, q)).copy_from(x0r);
    let mut big_c = DMatrix::zeros(c.nrows(), n + r);
    big_c.view_mut((0, 0), c.shape()).copy_from(c);
    big_c.view_mut((0, n), cr.shape()).copy_from(&(-cr));
    h2_norm(&big_a, &g, &big_c)
}

/// Bound constants for a reduced model of `sys`, or `None` for translation BT
/// (its auxiliary input is not square integrable).
pub fn bound_for(sys: &LtiSystem, model: &ReducedModel) -> Option<Result<BoundConstants>> {
    match model {
        ReducedModel::Joint(rom) => {
            let r = rom.order();
            match rom.method {
                Method::TrlBt => None,
                Method::Bt => Some((|| {
                    let c_x0 = if sys.initial_dim() == 0 {
                        0.0
                    } else {
                        bt_initial_value_error_term(&sys.a, &rom.a, &sys.x0, &rom.x0, &sys.c, &rom.c)?
                    };
                    Ok(BoundConstants {
                        c_u: bt_bound(&rom.hsv, r),
                        c_x0,
                        method: Method::Bt,
                        orders: Orders::Joint(r),
                    })
                })()),
                Method::AugBt => Some((|| {
                    let l = crate::balanced::lyapunov_factor(&sys.a.transpose(), &sys.c.transpose())?;
                    augbt_posteriori_bound(&rom.hsv, r, &l, &sys.a, &sys.x0, &rom.a, &rom.x0)
                })()),
                Method::JShiftBt => Some(Ok(jshift_bound(&rom.hsv, r, rom.beta.unwrap_or(1.0)))),
                Method::BtBt | Method::SShiftBt => {
                    Some(Err(Error::InvalidArgument(format!("{} is a separate-projection method", rom.method))))
                }
            }
        }
        ReducedModel::Separate(srom) => {
            let (k, l) = srom.orders();
            match srom.method {
                Method::SShiftBt => Some(Ok(sshift_bound(&srom.sigma, &srom.theta, k, l))),
                Method::BtBt => Some(btbt_posteriori_bound(sys, k, l).map(|b| b.constants)),
                other => Some(Err(Error::InvalidArgument(format!("{other} is a joint-projection method")))),
            }
        }
    }
}
