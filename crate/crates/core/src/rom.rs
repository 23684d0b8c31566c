//! The six reduction methods and reduced-model evaluation.
//!
//! Every reduced model is stored in the form
//! `ẋᵣ = Aᵣxᵣ + Bᵣu`, `xᵣ(0) = X₀ᵣz₀`, `yᵣ = Cᵣxᵣ + Dᵣu + Fᵣz₀e^{-αt}`.

use std::fmt;
use std::str::FromStr;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::balanced::{bt_from_factors, gramian_factors, lyapunov_factor, project_matrices, BtResult, GramianFactors};
use crate::error::{Error, Result};
use crate::linalg::{singular_values, sorted_svd};
use crate::lti::{
    ensure_stable, simulate_state_space, LtiSystem, PiecewiseConstantInput, StateSpace, TimeGrid, Trajectory,
};

/// Retries allowed when `-α` is numerically an eigenvalue of the reduced state matrix.
const RESONANCE_RETRIES: usize = 5;
const RESONANCE_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Bt,
    TrlBt,
    AugBt,
    BtBt,
    JShiftBt,
    SShiftBt,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Bt, Method::TrlBt, Method::AugBt, Method::BtBt, Method::JShiftBt, Method::SShiftBt];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bt => "bt",
            Method::TrlBt => "trlbt",
            Method::AugBt => "augbt",
            Method::BtBt => "btbt",
            Method::JShiftBt => "jshift",
            Method::SShiftBt => "sshift",
        }
    }

    /// Separate-projection methods take two orders `(k, ℓ)`.
    pub fn is_separate(self) -> bool {
        matches!(self, Method::BtBt | Method::SShiftBt)
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Method::JShiftBt | Method::SShiftBt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower || format!("{m:?}").to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

/// Joint-projection reduced model.
#[derive(Debug, Clone, PartialEq)]
pub struct Rom {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub x0: DMatrix<f64>,
    /// Output correction; zero for methods without one.
    pub f: DMatrix<f64>,
    /// Decay rate of the correction term. `Some(0.0)` is a constant offset.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub method: Method,
    /// Hankel singular values of the (possibly expanded) system that was truncated.
    pub hsv: Vec<f64>,
}

/// Initial-value half of a separate-projection model (zero input matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPart {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub x0: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub alpha: Option<f64>,
}

/// Two decoupled reduced models: one for the input, one for the initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparateRom {
    pub input: StateSpace,
    pub initial: InitialPart,
    pub sigma: Vec<f64>,
    pub theta: Vec<f64>,
    pub method: Method,
}

/// Either kind of reduced model.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducedModel {
    Joint(Rom),
    Separate(SeparateRom),
}

fn correction(f: &DMatrix<f64>, alpha: Option<f64>, z0: &DVector<f64>, grid: &TimeGrid) -> Option<DMatrix<f64>> {
    let alpha = alpha?;
    let fz = f * z0;
    if fz.iter().all(|&v| v == 0.0) {
        return None;
    }
    let mut out = DMatrix::zeros(fz.len(), grid.len());
    for (k, t) in grid.times().enumerate() {
        out.set_column(k, &(&fz * (-alpha * t).exp()));
    }
    Some(out)
}

fn check_z0(z0: &DVector<f64>, q: usize) -> Result<()> {
    if z0.len() != q {
        return Err(Error::DimensionMismatch(format!("z0 has length {}, expected {q}", z0.len())));
    }
    Ok(())
}

impl Rom {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace { a: self.a.clone(), b: self.b.clone(), c: self.c.clone(), d: self.d.clone() }
    }

    /// `yᵣ(0) = CᵣX₀ᵣz₀ + Dᵣu(0) + Fᵣz₀`.
    pub fn initial_output(&self, u0: &DVector<f64>, z0: &DVector<f64>) -> DVector<f64> {
        let mut y = &self.c * (&self.x0 * z0) + &self.d * u0;
        if self.alpha.is_some() {
            y += &self.f * z0;
        }
        y
    }

    pub fn output(&self, u: &PiecewiseConstantInput, z0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
        rom_output(self, u, z0, grid)
    }
}

/// Simulates the reduced dynamics from `X₀ᵣz₀` and adds `Fᵣz₀e^{-αt}` at the grid points.
pub fn rom_output(rom: &Rom, u: &PiecewiseConstantInput, z0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
    check_z0(z0, rom.x0.ncols())?;
    let traj = simulate_state_space(&rom.a, &rom.b, &rom.c, &rom.d, u, &(&rom.x0 * z0), grid)?;
    match correction(&rom.f, rom.alpha, z0, grid) {
        Some(extra) => Trajectory::new(*grid, traj.into_samples() + extra),
        None => Ok(traj),
    }
}

impl InitialPart {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn output(&self, z0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
        check_z0(z0, self.x0.ncols())?;
        let p = self.c.nrows();
        let n = self.a.nrows();
        let traj = simulate_state_space(
            &self.a,
            &DMatrix::zeros(n, 0),
            &self.c,
            &DMatrix::zeros(p, 0),
            &PiecewiseConstantInput::zero(0),
            &(&self.x0 * z0),
            grid,
        )?;
        match correction(&self.f, self.alpha, z0, grid) {
            Some(extra) => Trajectory::new(*grid, traj.into_samples() + extra),
            None => Ok(traj),
        }
    }
}

impl SeparateRom {
    pub fn orders(&self) -> (usize, usize) {
        (self.input.order(), self.initial.order())
    }

    /// Block-diagonal joint form of order `k + ℓ`.
    pub fn composite(&self) -> Rom {
        let (k, l) = self.orders();
        let m = self.input.b.ncols();
        let p = self.input.c.nrows();
        let q = self.initial.x0.ncols();
        let mut a = DMatrix::zeros(k + l, k + l);
        a.view_mut((0, 0), (k, k)).copy_from(&self.input.a);
        a.view_mut((k, k), (l, l)).copy_from(&self.initial.a);
        let mut b = DMatrix::zeros(k + l, m);
        b.view_mut((0, 0), (k, m)).copy_from(&self.input.b);
        let mut c = DMatrix::zeros(p, k + l);
        c.view_mut((0, 0), (p, k)).copy_from(&self.input.c);
        c.view_mut((0, k), (p, l)).copy_from(&self.initial.c);
        let mut x0 = DMatrix::zeros(k + l, q);
        x0.view_mut((k, 0), (l, q)).copy_from(&self.initial.x0);
        Rom {
            a,
            b,
            c,
            d: self.input.d.clone(),
            x0,
            f: self.initial.f.clone(),
            alpha: self.initial.alpha,
            beta: None,
            method: self.method,
            hsv: self.theta.clone(),
        }
    }

    /// Sum of the two decoupled outputs.
    pub fn output(&self, u: &PiecewiseConstantInput, z0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
        let input = self.input.simulate(u, &DVector::zeros(self.input.order()), grid)?;
        input.add(&self.initial.output(z0, grid)?)
    }
}

impl ReducedModel {
    pub fn method(&self) -> Method {
        match self {
            ReducedModel::Joint(r) => r.method,
            ReducedModel::Separate(s) => s.method,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            ReducedModel::Joint(r) => r.order(),
            ReducedModel::Separate(s) => s.input.order() + s.initial.order(),
        }
    }

    pub fn output(&self, u: &PiecewiseConstantInput, z0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
        match self {
            ReducedModel::Joint(r) => r.output(u, z0, grid),
            ReducedModel::Separate(s) => s.output(u, z0, grid),
        }
    }

    /// Joint form (block-diagonal for separate models).
    pub fn to_rom(&self) -> Rom {
        match self {
            ReducedModel::Joint(r) => r.clone(),
            ReducedModel::Separate(s) => s.composite(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn controllability_factor(sys: &LtiSystem, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    lyapunov_factor(&sys.a, g)
}

fn observability_factor(sys: &LtiSystem) -> Result<DMatrix<f64>> {
    lyapunov_factor(&sys.a.transpose(), &sys.c.transpose())
}

fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

fn shifted(a: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    a + DMatrix::identity(a.nrows(), a.ncols()) * alpha
}

fn plain_rom(sys: &LtiSystem, bt: &BtResult, method: Method) -> Result<Rom> {
    let ss = project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, &bt.v, &bt.w)?;
    let x0 = bt.w.transpose() * &sys.x0;
    Ok(Rom {
        f: DMatrix::zeros(sys.outputs(), sys.initial_dim()),
        a: ss.a,
        b: ss.b,
        c: ss.c,
        d: ss.d,
        x0,
        alpha: None,
        beta: None,
        method,
        hsv: bt.hsv.clone(),
    })
}

/// Standard balanced truncation; `X₀ᵣ = WᵀX₀`, no correction term.
pub fn reduce_bt(sys: &LtiSystem, r: usize) -> Result<Rom> {
    ensure_stable(&sys.a)?;
    let bt = bt_from_factors(&controllability_factor(sys, &sys.b)?, &observability_factor(sys)?, r)?;
    plain_rom(sys, &bt, Method::Bt)
}

pub fn reduce_bt_with_factors(sys: &LtiSystem, factors: &GramianFactors, r: usize) -> Result<Rom> {
    let bt = bt_from_factors(&factors.r, &factors.l, r)?;
    plain_rom(sys, &bt, Method::Bt)
}

/// Reduced initial state and output correction for a shift `x̃ = x - x₀e^{-αt}`:
/// `X₀ᵣ = (Aᵣ+αI)⁻¹Wᵀ(A+αI)X₀`, `Fᵣ = CX₀ - CᵣX₀ᵣ`.
fn shifted_initial_data(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    ar: &DMatrix<f64>,
    cr: &DMatrix<f64>,
    w: &DMatrix<f64>,
    alpha: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let shifted_r = shifted(ar, alpha);
    let rhs = w.transpose() * shifted(a, alpha) * x0;
    let x0r = if ar.nrows() == 0 {
        DMatrix::zeros(0, x0.ncols())
    } else {
        let s = singular_values(&shifted_r)?;
        let (smax, smin) = (s[0], s[s.len() - 1]);
        if !(smin > RESONANCE_RCOND * smax) {
            return Err(Error::AlphaResonance { alpha });
        }
        shifted_r.lu().solve(&rhs).ok_or(Error::AlphaResonance { alpha })?
    };
    let f = c * x0 - cr * &x0r;
    Ok((x0r, f))
}

/// Translation BT for the fixed initial state `x₀ = X₀z₀`.
///
/// BT of `[A, [B  Ax₀], C]`; the constant shift is undone in the reduced model, which
/// leaves a constant correction (`α = 0`). The returned `X₀ᵣ` and `Fᵣ` are only meaningful
/// for this `z₀`: they are rank one with `X₀ᵣz₀ = Aᵣ⁻¹WᵀAx₀`.
pub fn reduce_trlbt(sys: &LtiSystem, z0: &DVector<f64>, r: usize) -> Result<Rom> {
    check_z0(z0, sys.initial_dim())?;
    ensure_stable(&sys.a)?;
    let x0 = &sys.x0 * z0;
    let x0_col = DMatrix::from_column_slice(x0.len(), 1, x0.as_slice());
    let expanded = hcat(&sys.b, &(&sys.a * &x0_col));
    let bt = bt_from_factors(&controllability_factor(sys, &expanded)?, &observability_factor(sys)?, r)?;
    let ss = project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, &bt.v, &bt.w)?;
    let (xr0, fr0) = shifted_initial_data(&sys.a, &sys.c, &x0_col, &ss.a, &ss.c, &bt.w, 0.0)?;
    let zz = z0.norm_squared();
    let (x0r, f) = if zz > 0.0 {
        let zt = z0.transpose() / zz;
        (&xr0 * &zt, &fr0 * &zt)
    } else {
        (DMatrix::zeros(r, sys.initial_dim()), DMatrix::zeros(sys.outputs(), sys.initial_dim()))
    };
    Ok(Rom {
        a: ss.a,
        b: ss.b,
        c: ss.c,
        d: ss.d,
        x0: x0r,
        f,
        alpha: Some(0.0),
        beta: None,
        method: Method::TrlBt,
        hsv: bt.hsv,
    })
}

/// BT of the augmented system `[A, [B  X₀], C]`; `X₀ᵣ = WᵀX₀`.
pub fn reduce_augbt(sys: &LtiSystem, r: usize) -> Result<Rom> {
    ensure_stable(&sys.a)?;
    let expanded = hcat(&sys.b, &sys.x0);
    let bt = bt_from_factors(&controllability_factor(sys, &expanded)?, &observability_factor(sys)?, r)?;
    plain_rom(sys, &bt, Method::AugBt)
}

pub fn reduce_augbt_with_factors(sys: &LtiSystem, factors: &GramianFactors, r: usize) -> Result<Rom> {
    let bt = bt_from_factors(&hcat(&factors.r, &factors.rhat), &factors.l, r)?;
    plain_rom(sys, &bt, Method::AugBt)
}

fn btbt_from(sys: &LtiSystem, input: &BtResult, init: &BtResult) -> Result<SeparateRom> {
    let input_part = project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, &input.v, &input.w)?;
    let init_ss = project_matrices(
        &sys.a,
        &DMatrix::zeros(sys.order(), 0),
        &sys.c,
        &DMatrix::zeros(sys.outputs(), 0),
        &init.v,
        &init.w,
    )?;
    Ok(SeparateRom {
        input: input_part,
        initial: InitialPart {
            a: init_ss.a,
            c: init_ss.c,
            x0: init.w.transpose() * &sys.x0,
            f: DMatrix::zeros(sys.outputs(), sys.initial_dim()),
            alpha: None,
        },
        sigma: input.hsv.clone(),
        theta: init.hsv.clone(),
        method: Method::BtBt,
    })
}

/// Separate BT of `[A, B, C]` (order `k`) and `[A, X₀, C]` (order `ℓ`).
pub fn reduce_btbt(sys: &LtiSystem, k: usize, l: usize) -> Result<SeparateRom> {
    reduce_btbt_with_factors(sys, &gramian_factors(sys)?, k, l)
}

pub fn reduce_btbt_with_factors(sys: &LtiSystem, factors: &GramianFactors, k: usize, l: usize) -> Result<SeparateRom> {
    let input = bt_from_factors(&factors.r, &factors.l, k)?;
    let init = bt_from_factors(&factors.rhat, &factors.l, l)?;
    btbt_from(sys, &input, &init)
}

/// Scale of the decaying-shift input block: `1/(β√(2α))`.
pub fn shift_scale(alpha: f64, beta: f64) -> f64 {
    1.0 / (beta * (2.0 * alpha).sqrt())
}

/// Expanded input matrix `[B  (A+αI)X₀/(β√(2α))]`.
pub fn expanded_input(sys: &LtiSystem, alpha: f64, beta: f64) -> DMatrix<f64> {
    hcat(&sys.b, &(shifted(&sys.a, alpha) * &sys.x0 * shift_scale(alpha, beta)))
}

/// Runs `attempt(α)`, nudging `α` upward when it hits a reduced eigenvalue.
fn with_resonance_retry<T>(alpha: f64, mut attempt: impl FnMut(f64) -> Result<T>) -> Result<T> {
    let mut a = alpha;
    for _ in 0..=RESONANCE_RETRIES {
        match attempt(a) {
            Err(Error::AlphaResonance { .. }) => {
                warn!("-{a} is numerically an eigenvalue of the reduced state matrix; perturbing alpha");
                a *= 1.0 + 1e-6;
            }
            other => return other,
        }
    }
    Err(Error::AlphaResonance { alpha })
}

fn jshift_from(sys: &LtiSystem, bt: &BtResult, alpha: f64, beta: f64) -> Result<Rom> {
    let ss = project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, &bt.v, &bt.w)?;
    let (x0, f) = shifted_initial_data(&sys.a, &sys.c, &sys.x0, &ss.a, &ss.c, &bt.w, alpha)?;
    Ok(Rom {
        a: ss.a,
        b: ss.b,
        c: ss.c,
        d: ss.d,
        x0,
        f,
        alpha: Some(alpha),
        beta: Some(beta),
        method: Method::JShiftBt,
        hsv: bt.hsv.clone(),
    })
}

/// Joint decaying-shift BT: BT of `[A, [B  (A+αI)X₀/(β√(2α))], C]` computed directly
/// from the expanded system's Lyapunov equation.
pub fn reduce_jshift(sys: &LtiSystem, r: usize, alpha: f64, beta: f64) -> Result<Rom> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    ensure_stable(&sys.a)?;
    let l = observability_factor(sys)?;
    with_resonance_retry(alpha, |a| {
        let bt = bt_from_factors(&controllability_factor(sys, &expanded_input(sys, a, beta))?, &l, r)?;
        jshift_from(sys, &bt, a, beta)
    })
}

/// Joint decaying-shift BT from precomputed Gramian factors, using
/// `𝓡(α,β) = [R  (A+αI)R̂/(β√(2α))]`.
pub fn reduce_jshift_with_factors(
    sys: &LtiSystem,
    factors: &GramianFactors,
    r: usize,
    alpha: f64,
    beta: f64,
) -> Result<Rom> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    with_resonance_retry(alpha, |a| {
        let extra = shifted(&sys.a, a) * &factors.rhat * shift_scale(a, beta);
        let bt = bt_from_factors(&hcat(&factors.r, &extra), &factors.l, r)?;
        jshift_from(sys, &bt, a, beta)
    })
}

fn sshift_initial(sys: &LtiSystem, init: &BtResult, alpha: f64) -> Result<InitialPart> {
    let n = sys.order();
    let p = sys.outputs();
    let ss = project_matrices(&sys.a, &DMatrix::zeros(n, 0), &sys.c, &DMatrix::zeros(p, 0), &init.v, &init.w)?;
    let (x0, f) = shifted_initial_data(&sys.a, &sys.c, &sys.x0, &ss.a, &ss.c, &init.w, alpha)?;
    Ok(InitialPart { a: ss.a, c: ss.c, x0, f, alpha: Some(alpha) })
}

/// Separate decaying-shift BT: input part `BT(A,B,C,k)`, initial part from
/// `BT(A, (A+αI)X₀/√(2α), C, ℓ)`.
pub fn reduce_sshift(sys: &LtiSystem, k: usize, l: usize, alpha: f64) -> Result<SeparateRom> {
    positive("alpha", alpha)?;
    ensure_stable(&sys.a)?;
    let lf = observability_factor(sys)?;
    let input = bt_from_factors(&controllability_factor(sys, &sys.b)?, &lf, k)?;
    let input_part = project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, &input.v, &input.w)?;
    with_resonance_retry(alpha, |a| {
        let g = shifted(&sys.a, a) * &sys.x0 * shift_scale(a, 1.0);
        let init = bt_from_factors(&controllability_factor(sys, &g)?, &lf, l)?;
        Ok(SeparateRom {
            input: input_part.clone(),
            initial: sshift_initial(sys, &init, a)?,
            sigma: input.hsv.clone(),
            theta: init.hsv.clone(),
            method: Method::SShiftBt,
        })
    })
}

pub fn reduce_sshift_with_factors(
    sys: &LtiSystem,
    factors: &GramianFactors,
    k: usize,
    l: usize,
    alpha: f64,
) -> Result<SeparateRom> {
    positive("alpha", alpha)?;
    let input = bt_from_factors(&factors.r, &factors.l, k)?;
    let input_part = project_matrices(&sys.a, &sys.b, &sys.c, &sys.d, &input.v, &input.w)?;
    with_resonance_retry(alpha, |a| {
        let g = shifted(&sys.a, a) * &factors.rhat * shift_scale(a, 1.0);
        let init = bt_from_factors(&g, &factors.l, l)?;
        Ok(SeparateRom {
            input: input_part.clone(),
            initial: sshift_initial(sys, &init, a)?,
            sigma: input.hsv.clone(),
            theta: init.hsv.clone(),
            method: Method::SShiftBt,
        })
    })
}

fn block_diag_append(a: &DMatrix<f64>, tail: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, k) = (a.nrows(), tail.nrows());
    let mut out = DMatrix::zeros(r + k, r + k);
    out.view_mut((0, 0), (r, r)).copy_from(a);
    out.view_mut((r, r), (k, k)).copy_from(tail);
    out
}

fn vcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Standard-form model of order `r+1` for one fixed `z₀`: the correction becomes the
/// extra state `φ(t) = e^{-αt}` with output column `Fᵣz₀`.
///
/// `φ(0) = 1` is encoded linearly in `z₀` as the row `z₀ᵀ/‖z₀‖²`, so the result is only
/// valid for this `z₀` (for `z₀ = 0` the correction vanishes anyway). Models without a
/// correction get a decoupled `φ` with unit decay.
pub fn expand_rom_phi(rom: &Rom, z0: &DVector<f64>) -> Result<Rom> {
    check_z0(z0, rom.x0.ncols())?;
    let alpha = rom.alpha.unwrap_or(1.0);
    let fz = if rom.alpha.is_some() { &rom.f * z0 } else { DVector::zeros(rom.c.nrows()) };
    let a = block_diag_append(&rom.a, &DMatrix::from_element(1, 1, -alpha));
    let b = vcat(&rom.b, &DMatrix::zeros(1, rom.b.ncols()));
    let c = hcat(&rom.c, &DMatrix::from_column_slice(fz.len(), 1, fz.as_slice()));
    let zz = z0.norm_squared();
    let phi_row =
        if zz > 0.0 { DMatrix::from_row_slice(1, z0.len(), (z0 / zz).as_slice()) } else { DMatrix::zeros(1, z0.len()) };
    let x0 = vcat(&rom.x0, &phi_row);
    Ok(Rom {
        a,
        b,
        c,
        d: rom.d.clone(),
        x0,
        f: DMatrix::zeros(rom.f.nrows(), rom.f.ncols()),
        alpha: None,
        beta: rom.beta,
        method: rom.method,
        hsv: rom.hsv.clone(),
    })
}

/// Standard-form model of order `r + rank(Fᵣ)`: with `Fᵣ = LᵣRᵣ` the correction becomes
/// `ψ(t) = Rᵣz₀e^{-αt}`, `ψ(0) = Rᵣz₀`.
pub fn expand_rom_psi(rom: &Rom) -> Result<Rom> {
    let (p, q) = rom.f.shape();
    let (lr, rr) = match rom.alpha {
        Some(_) if p > 0 && q > 0 => {
            let svd = sorted_svd(&rom.f)?;
            let s = &svd.singular_values;
            let threshold = p.max(q) as f64 * f64::EPSILON * s[0];
            let k = s.iter().take_while(|&&x| x > threshold && x > 0.0).count();
            let scale = DMatrix::from_diagonal(&DVector::from_iterator(k, s.iter().take(k).copied()));
            (svd.u.columns(0, k) * scale, svd.v.columns(0, k).transpose())
        }
        _ => (DMatrix::zeros(p, 0), DMatrix::zeros(0, q)),
    };
    let k = rr.nrows();
    let alpha = rom.alpha.unwrap_or(1.0);
    Ok(Rom {
        a: block_diag_append(&rom.a, &(DMatrix::identity(k, k) * -alpha)),
        b: vcat(&rom.b, &DMatrix::zeros(k, rom.b.ncols())),
        c: hcat(&rom.c, &lr),
        d: rom.d.clone(),
        x0: vcat(&rom.x0, &rr),
        f: DMatrix::zeros(p, q),
        alpha: None,
        beta: rom.beta,
        method: rom.method,
        hsv: rom.hsv.clone(),
    })
}

/// Initial-value responses of `srom` for each column of `basis` (directions in `z₀`
/// coordinates), correction term included. Any `z₀ = basis·ζ` response is `Σ ζᵢ yᵢ`.
pub fn precompute_initial_responses(
    srom: &SeparateRom,
    basis: &DMatrix<f64>,
    grid: &TimeGrid,
) -> Result<Vec<Trajectory>> {
    if basis.nrows() != srom.initial.x0.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, expected {}",
            basis.nrows(),
            srom.initial.x0.ncols()
        )));
    }
    basis.column_iter().map(|col| srom.initial.output(&col.clone_owned(), grid)).collect()
}

/// `Σ ζᵢ yᵢ` over precomputed responses.
pub fn superpose(responses: &[Trajectory], zeta: &DVector<f64>, grid: &TimeGrid, p: usize) -> Result<Trajectory> {
    if responses.len() != zeta.len() {
        return Err(Error::DimensionMismatch(format!("{} coefficients for {} responses", zeta.len(), responses.len())));
    }
    let mut acc = DMatrix::zeros(p, grid.len());
    for (traj, &z) in responses.iter().zip(zeta.iter()) {
        if traj.samples().shape() != acc.shape() {
            return Err(Error::DimensionMismatch("response shapes differ".into()));
        }
        acc += traj.samples() * z;
    }
    Trajectory::new(*grid, acc)
}
