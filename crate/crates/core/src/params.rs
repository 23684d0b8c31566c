//! Cheap Hankel singular values for many shift parameters, heuristics for α and β,
//! and a derivative-based optimizer for α.
//!
//! With `P = RRᵀ`, `P̂ = R̂R̂ᵀ`, `Q = LLᵀ` the expanded-system Hankel singular values are the
//! singular values of `M(α,β) = [LᵀR  (LᵀAR̂)/(β√(2α)) + √α(LᵀR̂)/(√2β)]`.

use log::warn;
use nalgebra::DMatrix;

use crate::balanced::GramianFactors;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, sorted_svd, spectral_abscissa};

/// Default decade range for [`sample_alpha`].
pub const DEFAULT_JMIN: i32 = -6;
pub const DEFAULT_JMAX: i32 = 6;

const GAP_TOL: f64 = 1e-8;
const FD_STEP: f64 = 1e-6;
const MAX_ITERATIONS: usize = 200;
const STATIONARY_TOL: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;
const LOG_ALPHA_RANGE: f64 = 12.0;
const FINE_POINTS: usize = 61;
const REFINE_STARTS: usize = 3;

/// `LᵀR`, `LᵀAR̂`, `LᵀR̂`; independent of α and β.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedBlocks {
    pub lt_r: DMatrix<f64>,
    pub lt_a_rhat: DMatrix<f64>,
    pub lt_rhat: DMatrix<f64>,
}

impl PrecomputedBlocks {
    /// Drops the input block, leaving `N(α) = M(α, 1)` for the initial-value part alone.
    pub fn without_input(&self) -> Self {
        Self {
            lt_r: DMatrix::zeros(self.lt_r.nrows(), 0),
            lt_a_rhat: self.lt_a_rhat.clone(),
            lt_rhat: self.lt_rhat.clone(),
        }
    }

    fn has_initial_block(&self) -> bool {
        self.lt_rhat.ncols() > 0 && (self.lt_rhat.norm() > 0.0 || self.lt_a_rhat.norm() > 0.0)
    }
}

pub fn precompute_blocks(factors: &GramianFactors, a: &DMatrix<f64>) -> Result<PrecomputedBlocks> {
    let n = a.nrows();
    if a.ncols() != n || factors.r.nrows() != n || factors.rhat.nrows() != n || factors.l.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "factors with {}, {}, {} rows for A of size {}x{}",
            factors.r.nrows(),
            factors.rhat.nrows(),
            factors.l.nrows(),
            n,
            a.ncols()
        )));
    }
    let lt = factors.l.transpose();
    Ok(PrecomputedBlocks { lt_r: &lt * &factors.r, lt_a_rhat: &lt * a * &factors.rhat, lt_rhat: lt * &factors.rhat })
}

fn check_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha and beta must be positive, got {alpha}, {beta}")));
    }
    Ok(())
}

fn second_block(blocks: &PrecomputedBlocks, c1: f64, c2: f64) -> DMatrix<f64> {
    &blocks.lt_a_rhat * c1 + &blocks.lt_rhat * c2
}

fn with_input_block(blocks: &PrecomputedBlocks, second: DMatrix<f64>) -> DMatrix<f64> {
    let (rows, k_b) = blocks.lt_r.shape();
    let mut m = DMatrix::zeros(rows, k_b + second.ncols());
    m.view_mut((0, 0), (rows, k_b)).copy_from(&blocks.lt_r);
    m.view_mut((0, k_b), second.shape()).copy_from(&second);
    m
}

/// `M(α, β)`.
pub fn m_matrix(blocks: &PrecomputedBlocks, alpha: f64, beta: f64) -> Result<DMatrix<f64>> {
    check_params(alpha, beta)?;
    let s = (2.0 * alpha).sqrt();
    Ok(with_input_block(blocks, second_block(blocks, 1.0 / (beta * s), alpha.sqrt() / (2f64.sqrt() * beta))))
}

/// `N(α) = (LᵀAR̂)/√(2α) + √α(LᵀR̂)/√2`.
pub fn n_matrix(blocks: &PrecomputedBlocks, alpha: f64) -> Result<DMatrix<f64>> {
    check_params(alpha, 1.0)?;
    Ok(second_block(blocks, 1.0 / (2.0 * alpha).sqrt(), (alpha / 2.0).sqrt()))
}

/// `dM/dα = [0  -(LᵀAR̂)/(2βα√(2α)) + (LᵀR̂)/(2β√(2α))]`.
pub fn m_matrix_derivative(blocks: &PrecomputedBlocks, alpha: f64, beta: f64) -> Result<DMatrix<f64>> {
    check_params(alpha, beta)?;
    let s = (2.0 * alpha).sqrt();
    let mut d = with_input_block(blocks, second_block(blocks, -1.0 / (2.0 * beta * alpha * s), 1.0 / (2.0 * beta * s)));
    d.columns_mut(0, blocks.lt_r.ncols()).fill(0.0);
    Ok(d)
}

/// Expanded-system Hankel singular values `η₁ ≥ η₂ ≥ …` (nonzero part plus numerical zeros).
pub fn eta(blocks: &PrecomputedBlocks, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    singular_values(&m_matrix(blocks, alpha, beta)?)
}

/// `c_u(α) = 2Σ_{i>r} ηᵢ(α)`.
pub fn c_u_of_alpha(blocks: &PrecomputedBlocks, r: usize, beta: f64, alpha: f64) -> Result<f64> {
    Ok(2.0 * eta(blocks, alpha, beta)?.iter().skip(r).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub value: f64,
    /// `η_r` and `η_{r+1}` coincide numerically; `value` is a one-sided difference quotient.
    pub singular: bool,
}

/// `dc_u/dα = 2Σ_{j>r} u_jᵀ (dM/dα) v_j` with left/right singular vectors `u_j`, `v_j`.
pub fn c_u_gradient(blocks: &PrecomputedBlocks, r: usize, beta: f64, alpha: f64) -> Result<Gradient> {
    check_params(alpha, beta)?;
    if !blocks.has_initial_block() {
        return Ok(Gradient { value: 0.0, singular: false });
    }
    let m = m_matrix(blocks, alpha, beta)?;
    let svd = sorted_svd(&m)?;
    let s = &svd.singular_values;
    if r >= s.len() {
        return Ok(Gradient { value: 0.0, singular: false });
    }
    if r > 0 && s[r - 1] - s[r] < GAP_TOL * s[0] {
        warn!("eta_{r} and eta_{} coincide at alpha = {alpha:e}; using a one-sided difference", r + 1);
        let h = FD_STEP * alpha;
        let forward = c_u_of_alpha(blocks, r, beta, alpha + h)?;
        let here = c_u_of_alpha(blocks, r, beta, alpha)?;
        return Ok(Gradient { value: (forward - here) / h, singular: true });
    }
    let dm = m_matrix_derivative(blocks, alpha, beta)?;
    let mut value = 0.0;
    for j in r..s.len() {
        value += (svd.u.column(j).transpose() * &dm * svd.v.column(j))[(0, 0)];
    }
    Ok(Gradient { value: 2.0 * value, singular: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    /// `‖AX₀‖_F / ‖X₀‖_F`.
    FroRatio,
    /// Negative spectral abscissa of `A`.
    Spectral,
}

pub fn heuristic_alpha(kind: HeuristicKind, a: &DMatrix<f64>, x0: &DMatrix<f64>) -> Result<f64> {
    match kind {
        HeuristicKind::FroRatio => {
            let denom = x0.norm();
            if denom == 0.0 {
                return Err(Error::ZeroX0);
            }
            Ok((a * x0).norm() / denom)
        }
        HeuristicKind::Spectral => {
            let abscissa = spectral_abscissa(a)?;
            if abscissa >= 0.0 {
                return Err(Error::NotStable { abscissa });
            }
            Ok(-abscissa)
        }
    }
}

/// `β = ‖u‖_{L₂}/‖z₀‖₂`, balancing the two bound terms.
pub fn heuristic_beta(u_norm: f64, z0_norm: f64) -> Result<f64> {
    if !(z0_norm > 0.0) {
        return Err(Error::ZeroZ0);
    }
    if u_norm == 0.0 {
        warn!("zero input norm gives beta = 0");
    }
    Ok(u_norm / z0_norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub alpha_star: f64,
    pub c_u_at_star: f64,
    /// Evaluated `(α, c_u)` pairs in evaluation order.
    pub trace: Vec<(f64, f64)>,
    pub converged: bool,
    pub iterations: usize,
}

/// Evaluates `c_u` at `α = 10^j`, `j = jmin..=jmax`, and keeps the best (smallest α on ties).
pub fn sample_alpha(blocks: &PrecomputedBlocks, r: usize, beta: f64, jmin: i32, jmax: i32) -> Result<OptResult> {
    if jmin > jmax {
        return Err(Error::InvalidArgument(format!("empty decade range {jmin}..={jmax}")));
    }
    let mut trace = Vec::with_capacity((jmax - jmin + 1) as usize);
    for j in jmin..=jmax {
        let alpha = 10f64.powi(j);
        trace.push((alpha, c_u_of_alpha(blocks, r, beta, alpha)?));
    }
    let (alpha_star, c_u_at_star) =
        trace.iter().copied().fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(OptResult { alpha_star, c_u_at_star, iterations: trace.len(), trace, converged: true })
}

/// Local descent on `g(s) = c_u(10ˢ)` from `alpha0` with Barzilai–Borwein steps and Armijo
/// backtracking. Never returns a value worse than `c_u(alpha0)`.
pub fn optimize_alpha(blocks: &PrecomputedBlocks, r: usize, beta: f64, alpha0: f64) -> Result<OptResult> {
    check_params(alpha0, beta)?;
    let ln10 = std::f64::consts::LN_10;
    let mut s = alpha0.log10();
    let mut g = c_u_of_alpha(blocks, r, beta, alpha0)?;
    let mut trace = vec![(alpha0, g)];
    let mut prev: Option<(f64, f64)> = None; // (s, dg/ds)
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        let alpha = 10f64.powf(s);
        let grad = c_u_gradient(blocks, r, beta, alpha)?;
        if g == 0.0 || (grad.value * alpha).abs() <= STATIONARY_TOL * g {
            converged = true;
            break;
        }
        iterations += 1;
        let dg = grad.value * alpha * ln10;
        let mut t = match prev {
            Some((ps, pdg)) if (dg - pdg) * (s - ps) > 0.0 => (s - ps) / (dg - pdg),
            _ => 0.25 / dg.abs(),
        };
        // at most two decades per step
        t = t.min(2.0 / dg.abs());
        let mut accepted = None;
        for _ in 0..60 {
            let trial = (s - t * dg).clamp(-LOG_ALPHA_RANGE, LOG_ALPHA_RANGE);
            let value = c_u_of_alpha(blocks, r, beta, 10f64.powf(trial))?;
            if value <= g - ARMIJO * (s - trial) * dg && value < g {
                accepted = Some((trial, value));
                break;
            }
            t *= 0.5;
        }
        let Some((next, value)) = accepted else {
            // kink or round-off floor: no descent along the gradient
            break;
        };
        prev = Some((s, dg));
        let improvement = g - value;
        s = next;
        g = value;
        trace.push((10f64.powf(s), g));
        if improvement <= 1e-15 * g {
            converged = true;
            break;
        }
    }
    Ok(OptResult { alpha_star: 10f64.powf(s), c_u_at_star: g, trace, converged, iterations })
}

/// Decade sampling, then a finer sweep over the two decades around the best sample, then
/// local refinement from the most promising local minima of the fine sweep.
///
/// `c_u` typically has several local minima between HSV crossings, so a single local
/// descent from the best decade can stall in a shallower one.
pub fn sample_and_optimize(blocks: &PrecomputedBlocks, r: usize, beta: f64, jmin: i32, jmax: i32) -> Result<OptResult> {
    let sampled = sample_alpha(blocks, r, beta, jmin, jmax)?;
    let centre = sampled.alpha_star;
    let fine = alpha_sweep(blocks, r, beta, &log_space(centre / 10.0, centre * 10.0, FINE_POINTS))?;
    let mut starts: Vec<(f64, f64)> = fine
        .iter()
        .enumerate()
        .filter(|&(i, &(_, c))| (i == 0 || fine[i - 1].1 >= c) && (i + 1 == fine.len() || fine[i + 1].1 >= c))
        .map(|(_, &p)| p)
        .collect();
    starts.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    starts.truncate(REFINE_STARTS);

    let mut trace = sampled.trace;
    trace.extend(fine.iter().copied());
    let mut best: Option<OptResult> = None;
    let mut iterations = sampled.iterations + fine.len();
    for (alpha0, _) in starts {
        let run = optimize_alpha(blocks, r, beta, alpha0)?;
        iterations += run.iterations;
        trace.extend(run.trace.iter().skip(1).copied());
        if best.as_ref().is_none_or(|b| run.c_u_at_star < b.c_u_at_star) {
            best = Some(run);
        }
    }
    let best = best.expect("a finite sweep has at least one local minimum");
    Ok(OptResult {
        alpha_star: best.alpha_star,
        c_u_at_star: best.c_u_at_star,
        trace,
        converged: best.converged,
        iterations,
    })
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

/// `(α, c_u(α))` over the given parameters.
pub fn alpha_sweep(blocks: &PrecomputedBlocks, r: usize, beta: f64, alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
    alphas.iter().map(|&a| Ok((a, c_u_of_alpha(blocks, r, beta, a)?))).collect()
}
