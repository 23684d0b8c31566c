//! Browser demo: decaying-shift balanced truncation on a small random system.
//!
//! Three operations are exposed to the page: the `c_u(α)` curve with its
//! optimum, the Hankel singular values next to the shifted values `η(α, β)`,
//! and simulated error curves of plain BT versus the joint decaying-shift ROM.

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::SeedableRng;
use shiftbt::balanced::{gramian_factors, GramianFactors};
use shiftbt::bounds::{bound_for, hankel_singular_values};
use shiftbt::harness::error_trajectory;
use shiftbt::lti::default_horizon;
use shiftbt::params::{
    alpha_sweep, eta, heuristic_alpha, log_space, precompute_blocks, sample_and_optimize, HeuristicKind,
    PrecomputedBlocks, DEFAULT_JMAX, DEFAULT_JMIN,
};
use shiftbt::rom::{reduce_bt_with_factors, reduce_jshift_with_factors, ReducedModel};
use shiftbt::synthetic::random_system;
use shiftbt::{LtiSystem, PiecewiseConstantInput, TimeGrid};
use wasm_bindgen::prelude::*;

const MAX_ORDER: usize = 60;
const MAX_SAMPLES: usize = 4000;

fn msg(e: shiftbt::Error) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct Demo {
    sys: LtiSystem,
    factors: GramianFactors,
    blocks: PrecomputedBlocks,
    sigma: Vec<f64>,
}

/// Optimized shift and the two closed-form heuristics.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub c_u: f64,
    pub heuristic_fro: f64,
    pub heuristic_spectral: f64,
}

/// Sampled output errors of both reduced models.
#[wasm_bindgen(getter_with_clone)]
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurves {
    pub times: Vec<f64>,
    pub bt: Vec<f64>,
    pub jshift: Vec<f64>,
    /// `c_u‖u‖ + c_x₀‖z₀‖` for each model.
    pub bt_bound: f64,
    pub jshift_bound: f64,
    pub bt_l2: f64,
    pub jshift_l2: f64,
}

#[wasm_bindgen]
impl Demo {
    /// Random stable system with `n` states, one input, two outputs and one initial direction.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64, n: usize) -> Result<Demo, String> {
        if !(2..=MAX_ORDER).contains(&n) {
            return Err(format!("order must lie in 2..={MAX_ORDER}"));
        }
        let sys = random_system(&mut StdRng::seed_from_u64(seed), n, 1, 2, 1);
        let factors = gramian_factors(&sys).map_err(msg)?;
        let blocks = precompute_blocks(&factors, &sys.a).map_err(msg)?;
        let sigma = hankel_singular_values(&sys.a, &sys.b, &sys.c).map_err(msg)?;
        Ok(Demo { sys, factors, blocks, sigma })
    }

    pub fn order(&self) -> usize {
        self.sys.order()
    }

    /// `c_u` at `points` log-spaced shifts in `[10^jmin, 10^jmax]`, interleaved as `α₀, c₀, α₁, c₁, …`.
    pub fn alpha_sweep(&self, r: usize, beta: f64, jmin: i32, jmax: i32, points: usize) -> Result<Vec<f64>, String> {
        self.check_order(r)?;
        let alphas = log_space(10f64.powi(jmin), 10f64.powi(jmax), points);
        let sweep = alpha_sweep(&self.blocks, r, beta, &alphas).map_err(msg)?;
        Ok(sweep.into_iter().flat_map(|(a, c)| [a, c]).collect())
    }

    pub fn choose_alpha(&self, r: usize, beta: f64) -> Result<AlphaChoice, String> {
        self.check_order(r)?;
        let opt = sample_and_optimize(&self.blocks, r, beta, DEFAULT_JMIN, DEFAULT_JMAX).map_err(msg)?;
        Ok(AlphaChoice {
            alpha: opt.alpha_star,
            c_u: opt.c_u_at_star,
            heuristic_fro: heuristic_alpha(HeuristicKind::FroRatio, &self.sys.a, &self.sys.x0).map_err(msg)?,
            heuristic_spectral: heuristic_alpha(HeuristicKind::Spectral, &self.sys.a, &self.sys.x0).map_err(msg)?,
        })
    }

    /// Hankel singular values of `(A, B, C)`.
    pub fn sigma(&self) -> Vec<f64> {
        self.sigma.clone()
    }

    /// Singular values of the shifted, weighted realization.
    pub fn eta(&self, alpha: f64, beta: f64) -> Result<Vec<f64>, String> {
        eta(&self.blocks, alpha, beta).map_err(msg)
    }

    /// Errors for the pulse `u = 1` on `[0, pulse_end)` and initial value `X₀z₀`.
    pub fn error_curves(
        &self,
        r: usize,
        alpha: f64,
        beta: f64,
        z0: f64,
        pulse_end: f64,
    ) -> Result<ErrorCurves, String> {
        self.check_order(r)?;
        let u = if pulse_end > 0.0 {
            PiecewiseConstantInput::pulse(DVector::from_element(1, 1.0), 0.0, pulse_end).map_err(msg)?
        } else {
            PiecewiseConstantInput::zero(1)
        };
        let z0 = DVector::from_element(1, z0);
        let bt = ReducedModel::Joint(reduce_bt_with_factors(&self.sys, &self.factors, r).map_err(msg)?);
        let js =
            ReducedModel::Joint(reduce_jshift_with_factors(&self.sys, &self.factors, r, alpha, beta).map_err(msg)?);

        let abscissa = self.sys.spectral_abscissa().map_err(msg)?.max(-alpha);
        let horizon = default_horizon(abscissa, u.last_breakpoint(), 1e4);
        let mut step = horizon / MAX_SAMPLES as f64;
        if pulse_end > 0.0 {
            // the switching time has to be a grid point
            step = pulse_end / (pulse_end / step).ceil();
        }
        let grid = TimeGrid::covering(horizon, step).map_err(msg)?;
        let e_bt = error_trajectory(&self.sys, &bt, &u, &z0, &grid).map_err(msg)?;
        let e_js = error_trajectory(&self.sys, &js, &u, &z0, &grid).map_err(msg)?;

        let u_norm = u.l2_norm().map_err(msg)?;
        let z_norm = z0.norm();
        let bound = |m: &ReducedModel| -> Result<f64, String> {
            match bound_for(&self.sys, m) {
                Some(b) => Ok(b.map_err(msg)?.evaluate(u_norm, z_norm)),
                None => Ok(f64::NAN),
            }
        };
        Ok(ErrorCurves {
            times: grid.times().collect(),
            bt: e_bt.samples().row(0).iter().copied().collect(),
            jshift: e_js.samples().row(0).iter().copied().collect(),
            bt_bound: bound(&bt)?,
            jshift_bound: bound(&js)?,
            bt_l2: e_bt.l2_norm(),
            jshift_l2: e_js.l2_norm(),
        })
    }

    fn check_order(&self, r: usize) -> Result<(), String> {
        if r == 0 || r > self.sys.order() {
            return Err(format!("reduced order must lie in 1..={}", self.sys.order()));
        }
        Ok(())
    }
}
