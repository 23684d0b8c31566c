//! End-to-end experiments: reduce with several methods, evaluate bounds, simulate errors.

use std::time::Instant;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};

use crate::balanced::{bt, gramian_factors, GramianFactors};
use crate::bounds::{bound_for, BoundConstants, Orders};
use crate::error::{Error, Result};
use crate::linalg::{spectral_abscissa, spectral_norm};
use crate::lti::{default_horizon, LtiSystem, PiecewiseConstantInput, TimeGrid, Trajectory};
use crate::params::{
    heuristic_alpha, heuristic_beta, precompute_blocks, sample_alpha, sample_and_optimize, HeuristicKind,
    PrecomputedBlocks, DEFAULT_JMAX, DEFAULT_JMIN,
};
use crate::rom::{
    reduce_augbt_with_factors, reduce_bt_with_factors, reduce_btbt_with_factors, reduce_jshift_with_factors,
    reduce_sshift_with_factors, reduce_trlbt, Method, ReducedModel,
};

/// Absolute slack (relative for bounds above one) when comparing measured errors to bounds.
pub const BOUND_SLACK: f64 = 1e-6;

/// Reduced order used to build the initial-value subspace of the CD-player example.
pub const CDPLAYER_ORDER: usize = 50;

/// Pointwise `‖y(t) - yᵣ(t)‖₂` as a scalar trajectory.
pub fn error_trajectory(
    fom: &LtiSystem,
    model: &ReducedModel,
    u: &PiecewiseConstantInput,
    z0: &DVector<f64>,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let y = fom.simulate_z0(u, z0, grid)?;
    let yr = model.output(u, z0, grid)?;
    let norms = y.difference(&yr)?.pointwise_norms();
    Trajectory::new(*grid, DMatrix::from_row_slice(1, norms.len(), &norms))
}

/// Centered moving average; the window shrinks symmetrically at the edges.
pub fn smooth(traj: &Trajectory, window: usize) -> Result<Trajectory> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("window must be odd and positive, got {window}")));
    }
    let half = window / 2;
    let samples = traj.samples();
    let n = samples.ncols();
    let mut out = DMatrix::zeros(samples.nrows(), n);
    for k in 0..n {
        let h = half.min(k).min(n - 1 - k);
        let cols = samples.columns(k - h, 2 * h + 1);
        for i in 0..samples.nrows() {
            out[(i, k)] = cols.row(i).sum() / (2 * h + 1) as f64;
        }
    }
    Trajectory::new(*traj.grid(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleKind {
    /// Two sparse initial directions: `X₀[4,0] = 1`, `X₀[100,1] = 100`.
    BeamX0,
    /// Two orthonormal directions invisible to the order-50 BT projection.
    CdPlayerX0,
}

/// Attaches the initial-value basis of one of the two benchmark experiments.
pub fn construct_example(which: ExampleKind, sys: &LtiSystem) -> Result<LtiSystem> {
    let n = sys.order();
    match which {
        ExampleKind::BeamX0 => {
            if n < 101 {
                return Err(Error::DimensionTooSmall { required: 101, actual: n });
            }
            let mut x0 = DMatrix::zeros(n, 2);
            x0[(4, 0)] = 1.0;
            x0[(100, 1)] = 100.0;
            sys.clone().with_x0(x0)
        }
        ExampleKind::CdPlayerX0 => sys.clone().with_x0(kernel_initial_basis(sys, CDPLAYER_ORDER, 2)?),
    }
}

/// `q` orthonormal vectors `X₀` with `WᵣᵀX₀ = 0` for the order-`r` BT projection of `sys`.
pub fn kernel_initial_basis(sys: &LtiSystem, r: usize, q: usize) -> Result<DMatrix<f64>> {
    let n = sys.order();
    if r + q > n {
        return Err(Error::DimensionTooSmall { required: r + q, actual: n });
    }
    let w = bt(&sys.a, &sys.b, &sys.c, r)?.w;
    let mut basis: Vec<DVector<f64>> = w.clone().qr().q().column_iter().map(|c| c.clone_owned()).collect();
    let orthogonalize = |v: &mut DVector<f64>, basis: &[DVector<f64>]| {
        // twice is enough
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(v);
                v.axpy(-c, b, 1.0);
            }
        }
    };
    let mut out = DMatrix::zeros(n, q);
    for j in 0..q {
        // the unit vector with the largest component outside the current span
        let mut best: Option<DVector<f64>> = None;
        for i in 0..n {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            orthogonalize(&mut v, &basis);
            if best.as_ref().is_none_or(|b| v.norm() > b.norm() * (1.0 + 1e-12)) {
                best = Some(v);
            }
        }
        let v = best.expect("n > 0");
        let v = &v / v.norm();
        out.set_column(j, &v);
        basis.push(v);
    }
    Ok(out)
}

/// How α is chosen for the decaying-shift methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    HeuristicFro,
    HeuristicSpectral,
    /// Best decade `10ʲ`, `j ∈ [jmin, jmax]`.
    Sample {
        jmin: i32,
        jmax: i32,
    },
    /// Decade sampling plus local refinement.
    Optimize {
        jmin: i32,
        jmax: i32,
    },
    Fixed(f64),
}

impl Default for AlphaMode {
    fn default() -> Self {
        AlphaMode::Optimize { jmin: DEFAULT_JMIN, jmax: DEFAULT_JMAX }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSpec {
    Value(f64),
    /// `‖u‖_{L₂}/‖z₀‖₂` from the experiment's input and initial value.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSpec {
    pub method: Method,
    pub orders: Orders,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<MethodSpec>,
    /// Only used by the joint decaying-shift method, which is run once per entry.
    pub betas: Vec<BetaSpec>,
    pub alpha: AlphaMode,
    pub input: PiecewiseConstantInput,
    pub z0: DVector<f64>,
    pub step: f64,
    /// Simulation end; derived from the slowest decay rate when absent.
    pub horizon: Option<f64>,
    pub horizon_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub orders: Orders,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub bound: Option<BoundConstants>,
    /// `c_u‖u‖ + c_x₀‖z₀‖`.
    pub bound_value: Option<f64>,
    pub l2_error: Option<f64>,
    pub linf_error: Option<f64>,
    pub violation: bool,
    pub error: Option<String>,
    pub trajectory: Option<Trajectory>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub grid: Option<TimeGrid>,
    pub u_norm: f64,
    pub z0_norm: f64,
}

/// Chooses α for the joint (`initial_only = false`) or separate decaying-shift reduction.
/// Also returns the `(α, c_u)` pairs evaluated on the way (empty for heuristics).
pub fn resolve_alpha(
    mode: AlphaMode,
    sys: &LtiSystem,
    blocks: &PrecomputedBlocks,
    r: usize,
    beta: f64,
    initial_only: bool,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let (blocks, beta) = if initial_only { (blocks.without_input(), 1.0) } else { (blocks.clone(), beta) };
    let opt = match mode {
        AlphaMode::HeuristicFro => return Ok((heuristic_alpha(HeuristicKind::FroRatio, &sys.a, &sys.x0)?, vec![])),
        AlphaMode::HeuristicSpectral => {
            return Ok((heuristic_alpha(HeuristicKind::Spectral, &sys.a, &sys.x0)?, vec![]))
        }
        AlphaMode::Fixed(a) => return Ok((a, vec![])),
        AlphaMode::Sample { jmin, jmax } => sample_alpha(&blocks, r, beta, jmin, jmax)?,
        AlphaMode::Optimize { jmin, jmax } => sample_and_optimize(&blocks, r, beta, jmin, jmax)?,
    };
    Ok((opt.alpha_star, opt.trace))
}

/// A reduced model together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub model: ReducedModel,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// `(α, c_u)` pairs evaluated while choosing α.
    pub alpha_trace: Vec<(f64, f64)>,
}

/// Reduces `sys` with one method. `z0` is only used by translation BT; `beta` only by the
/// joint decaying-shift method (default 1).
pub fn reduce_method(
    sys: &LtiSystem,
    factors: &GramianFactors,
    blocks: &PrecomputedBlocks,
    spec: &MethodSpec,
    beta: Option<f64>,
    alpha_mode: AlphaMode,
    z0: &DVector<f64>,
) -> Result<Reduction> {
    let joint = |orders: Orders| match orders {
        Orders::Joint(r) => Ok(r),
        Orders::Separate { .. } => Err(Error::InvalidArgument(format!("{} takes a single order", spec.method))),
    };
    let separate = |orders: Orders| match orders {
        Orders::Separate { k, l } => Ok((k, l)),
        Orders::Joint(_) => Err(Error::InvalidArgument(format!("{} takes two orders k,l", spec.method))),
    };
    let plain = |model| Reduction { model, alpha: None, beta: None, alpha_trace: vec![] };
    Ok(match spec.method {
        Method::Bt => plain(ReducedModel::Joint(reduce_bt_with_factors(sys, factors, joint(spec.orders)?)?)),
        Method::TrlBt => plain(ReducedModel::Joint(reduce_trlbt(sys, z0, joint(spec.orders)?)?)),
        Method::AugBt => plain(ReducedModel::Joint(reduce_augbt_with_factors(sys, factors, joint(spec.orders)?)?)),
        Method::BtBt => {
            let (k, l) = separate(spec.orders)?;
            plain(ReducedModel::Separate(reduce_btbt_with_factors(sys, factors, k, l)?))
        }
        Method::JShiftBt => {
            let r = joint(spec.orders)?;
            let beta = beta.unwrap_or(1.0);
            let (alpha, alpha_trace) = resolve_alpha(alpha_mode, sys, blocks, r, beta, false)?;
            let rom = reduce_jshift_with_factors(sys, factors, r, alpha, beta)?;
            Reduction { alpha: rom.alpha, model: ReducedModel::Joint(rom), beta: Some(beta), alpha_trace }
        }
        Method::SShiftBt => {
            let (k, l) = separate(spec.orders)?;
            let (alpha, alpha_trace) = resolve_alpha(alpha_mode, sys, blocks, l, 1.0, true)?;
            let srom = reduce_sshift_with_factors(sys, factors, k, l, alpha)?;
            Reduction { alpha: srom.initial.alpha, model: ReducedModel::Separate(srom), beta: None, alpha_trace }
        }
    })
}

fn decay_rate(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() == 0 {
        return None;
    }
    spectral_abscissa(a).ok().map(|x| -x)
}

/// Reduces `sys` with every configured method, evaluates bounds, simulates the error and
/// assembles the report (rows sorted by method, then β). Failures of single methods are
/// recorded in their rows.
pub fn run_comparison(sys: &LtiSystem, cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    let u_norm = cfg.input.l2_norm()?;
    let z0_norm = cfg.z0.norm();
    if cfg.z0.len() != sys.initial_dim() {
        return Err(Error::DimensionMismatch(format!(
            "z0 has length {}, expected {}",
            cfg.z0.len(),
            sys.initial_dim()
        )));
    }
    if cfg.methods.is_empty() {
        return Ok(ComparisonReport { rows: vec![], grid: None, u_norm, z0_norm });
    }
    let factors = gramian_factors(sys)?;
    let blocks = precompute_blocks(&factors, &sys.a)?;
    let fastest = spectral_norm(&sys.a)?;
    if cfg.step * fastest > 1.0 {
        // quadrature of the error norms may then overshoot tight bounds
        warn!("step {} does not resolve the fastest time scale 1/{fastest:.3e}", cfg.step);
    }

    let mut betas = Vec::new();
    for b in if cfg.betas.is_empty() { &[BetaSpec::Value(1.0)][..] } else { &cfg.betas[..] } {
        betas.push(match b {
            BetaSpec::Value(v) => *v,
            BetaSpec::Heuristic => heuristic_beta(u_norm, z0_norm)?,
        });
    }

    struct Pending {
        spec: MethodSpec,
        beta: Option<f64>,
        outcome: Result<(Reduction, Option<Result<BoundConstants>>)>,
        seconds: f64,
    }
    let mut pending = Vec::new();
    for spec in &cfg.methods {
        let beta_list: Vec<Option<f64>> =
            if spec.method == Method::JShiftBt { betas.iter().map(|&b| Some(b)).collect() } else { vec![None] };
        for beta in beta_list {
            let start = Instant::now();
            let outcome = reduce_method(sys, &factors, &blocks, spec, beta, cfg.alpha, &cfg.z0).map(|red| {
                let bound = bound_for(sys, &red.model);
                (red, bound)
            });
            if let Err(e) = &outcome {
                warn!("{} failed: {e}", spec.method);
            }
            pending.push(Pending { spec: *spec, beta, outcome, seconds: start.elapsed().as_secs_f64() });
        }
    }

    let grid = match cfg.horizon {
        Some(h) => TimeGrid::covering(h, cfg.step)?,
        None => {
            let mut rate = decay_rate(&sys.a).unwrap_or(1.0);
            for p in &pending {
                if let Ok((red, _)) = &p.outcome {
                    let rom = red.model.to_rom();
                    if let Some(r) = decay_rate(&rom.a) {
                        rate = rate.min(r);
                    }
                    if let Some(a) = red.alpha.filter(|a| *a > 0.0) {
                        rate = rate.min(a);
                    }
                }
            }
            let horizon = default_horizon(-rate, cfg.input.last_breakpoint(), cfg.horizon_cap);
            TimeGrid::covering(horizon, cfg.step)?
        }
    };
    info!("simulating on [0, {}] with {} points", grid.horizon(), grid.len());
    let y = sys.simulate_z0(&cfg.input, &cfg.z0, &grid)?;

    let mut rows = Vec::with_capacity(pending.len());
    for p in pending {
        let mut row = ReportRow {
            method: p.spec.method,
            orders: p.spec.orders,
            alpha: None,
            beta: p.beta,
            bound: None,
            bound_value: None,
            l2_error: None,
            linf_error: None,
            violation: false,
            error: None,
            trajectory: None,
            seconds: p.seconds,
        };
        match p.outcome {
            Err(e) => row.error = Some(e.to_string()),
            Ok((red, bound)) => {
                row.alpha = red.alpha;
                row.beta = red.beta;
                match bound {
                    Some(Ok(b)) => {
                        row.bound_value = Some(b.evaluate(u_norm, z0_norm));
                        row.bound = Some(b);
                    }
                    Some(Err(e)) => row.error = Some(format!("bound: {e}")),
                    None => {}
                }
                let start = Instant::now();
                match red.model.output(&cfg.input, &cfg.z0, &grid).and_then(|yr| y.difference(&yr)) {
                    Ok(diff) => {
                        let norms = diff.pointwise_norms();
                        let l2 = diff.l2_norm();
                        row.l2_error = Some(l2);
                        row.linf_error = Some(diff.linf_norm());
                        if let Some(bv) = row.bound_value {
                            row.violation = l2 > bv + BOUND_SLACK * bv.max(1.0);
                            if row.violation {
                                warn!("{} violates its bound: {l2:e} > {bv:e}", row.method);
                            }
                        }
                        row.trajectory = Trajectory::new(grid, DMatrix::from_row_slice(1, norms.len(), &norms)).ok();
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                row.seconds += start.elapsed().as_secs_f64();
            }
        }
        rows.push(row);
    }
    rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.beta.unwrap_or(0.0).total_cmp(&b.beta.unwrap_or(0.0))));
    Ok(ComparisonReport { rows, grid: Some(grid), u_norm, z0_norm })
}
