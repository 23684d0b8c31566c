//! State-space model, piecewise-constant inputs, exact time stepping and signal norms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, matrix_exponential, solve_lyapunov, spectral_abscissa};

/// `ẋ = A x + B u`, `y = C x + D u`, `x(0) = X₀ z₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Basis of admissible initial states, `n × q` (`q = 0` for zero initial state).
    pub x0: DMatrix<f64>,
}

pub(crate) fn check_state_space(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
    }
    if b.nrows() != n {
        return Err(Error::DimensionMismatch(format!("B has {} rows, expected {n}", b.nrows())));
    }
    if c.ncols() != n {
        return Err(Error::DimensionMismatch(format!("C has {} columns, expected {n}", c.ncols())));
    }
    if d.shape() != (c.nrows(), b.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{}, expected {}x{}",
            d.nrows(),
            d.ncols(),
            c.nrows(),
            b.ncols()
        )));
    }
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(c, "C")?;
    ensure_finite(d, "D")
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>, x0: DMatrix<f64>) -> Result<Self> {
        check_state_space(&a, &b, &c, &d)?;
        if x0.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!("X0 has {} rows, expected {}", x0.nrows(), a.nrows())));
        }
        ensure_finite(&x0, "X0")?;
        Ok(Self { a, b, c, d, x0 })
    }

    /// System without initial-value basis (`q = 0`).
    pub fn homogeneous(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, b, c, d, DMatrix::zeros(n, 0))
    }

    pub fn with_x0(mut self, x0: DMatrix<f64>) -> Result<Self> {
        if x0.nrows() != self.order() {
            return Err(Error::DimensionMismatch(format!("X0 has {} rows, expected {}", x0.nrows(), self.order())));
        }
        ensure_finite(&x0, "X0")?;
        self.x0 = x0;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn initial_dim(&self) -> usize {
        self.x0.ncols()
    }

    pub fn spectral_abscissa(&self) -> Result<f64> {
        spectral_abscissa(&self.a)
    }

    /// `true` iff every eigenvalue of `A` has negative real part.
    pub fn is_asymptotically_stable(&self) -> bool {
        matches!(self.spectral_abscissa(), Ok(a) if a < 0.0)
    }

    /// Simulates with initial state `x(0) = X₀ z₀`.
    pub fn simulate_z0(&self, u: &PiecewiseConstantInput, z0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
        if z0.len() != self.initial_dim() {
            return Err(Error::DimensionMismatch(format!(
                "z0 has length {}, expected {}",
                z0.len(),
                self.initial_dim()
            )));
        }
        simulate(self, u, &(&self.x0 * z0), grid)
    }
}

pub(crate) fn ensure_stable(a: &DMatrix<f64>) -> Result<()> {
    let abscissa = spectral_abscissa(a)?;
    if abscissa < 0.0 {
        Ok(())
    } else {
        Err(Error::NotStable { abscissa })
    }
}

/// Piecewise-constant signal: `values[i]` holds on `[breakpoints[i], breakpoints[i+1])`,
/// the last value is held forever.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantInput {
    breakpoints: Vec<f64>,
    values: Vec<DVector<f64>>,
}

impl PiecewiseConstantInput {
    pub fn new(breakpoints: Vec<f64>, values: Vec<DVector<f64>>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be finite and strictly increasing".into()));
        }
        let m = values[0].len();
        if values.iter().any(|v| v.len() != m) {
            return Err(Error::DimensionMismatch("input values differ in length".into()));
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("input values"));
        }
        Ok(Self { breakpoints, values })
    }

    /// `u ≡ 0` with `m` channels.
    pub fn zero(m: usize) -> Self {
        Self { breakpoints: vec![0.0], values: vec![DVector::zeros(m)] }
    }

    /// `value` on `[start, end)`, zero elsewhere.
    pub fn pulse(value: DVector<f64>, start: f64, end: f64) -> Result<Self> {
        let zero = DVector::zeros(value.len());
        if start == 0.0 {
            Self::new(vec![0.0, end], vec![value, zero])
        } else {
            Self::new(vec![0.0, start, end], vec![zero.clone(), value, zero])
        }
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Right-continuous evaluation.
    pub fn value_at(&self, t: f64) -> &DVector<f64> {
        let idx = self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1);
        &self.values[idx]
    }

    pub fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }

    pub fn is_square_integrable(&self) -> bool {
        self.values.last().is_some_and(|v| v.iter().all(|&x| x == 0.0))
    }

    /// Exact `‖u‖_{L₂} = (Σ ‖uᵢ‖² Δtᵢ)^{1/2}`.
    pub fn l2_norm(&self) -> Result<f64> {
        if !self.is_square_integrable() {
            return Err(Error::Unbounded);
        }
        let sum: f64 =
            self.breakpoints.windows(2).zip(&self.values).map(|(w, v)| v.norm_squared() * (w[1] - w[0])).sum();
        Ok(sum.sqrt())
    }
}

/// Free-function form of [`PiecewiseConstantInput::l2_norm`].
pub fn l2_norm_input(u: &PiecewiseConstantInput) -> Result<f64> {
    u.l2_norm()
}

/// Uniform grid `t_k = k·step`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(step: f64, steps: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { step, steps })
    }

    /// Smallest grid with the given step that reaches `horizon`.
    pub fn covering(horizon: f64, step: f64) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be nonnegative, got {horizon}")));
        }
        let steps = (horizon / step - 1e-9).ceil().max(0.0) as usize;
        Self::new(step, steps)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    /// Grid index of `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = t / self.step;
        let rounded = k.round();
        if (k - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            Some(rounded as usize)
        } else {
            None
        }
    }
}

/// Horizon after which a mode decaying with rate `-abscissa` has dropped below `1e-8`.
pub fn default_horizon(abscissa: f64, start: f64, cap: f64) -> f64 {
    let decay = (-abscissa).max(f64::MIN_POSITIVE);
    (start + 1e8f64.ln() / decay).min(cap)
}

/// Sampled vector signal on a [`TimeGrid`]; column `k` is the sample at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    samples: DMatrix<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, samples: DMatrix<f64>) -> Result<Self> {
        if samples.ncols() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples on a grid of {} points",
                samples.ncols(),
                grid.len()
            )));
        }
        Ok(Self { grid, samples })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> DMatrix<f64> {
        self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    pub fn sample(&self, k: usize) -> DVector<f64> {
        self.samples.column(k).clone_owned()
    }

    /// `‖y(t_k)‖₂` for every grid point.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.samples.column_iter().map(|c| c.norm()).collect()
    }

    /// Composite Simpson approximation of `(∫ ‖y(t)‖² dt)^{1/2}` over the grid.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.samples.column_iter().map(|c| c.norm_squared()).collect();
        integrate_samples(&sq, self.grid.step).max(0.0).sqrt()
    }

    /// Maximum pointwise 2-norm over the grid.
    pub fn linf_norm(&self) -> f64 {
        self.pointwise_norms().into_iter().fold(0.0, f64::max)
    }

    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("trajectories live on different grids".into()));
        }
        Trajectory::new(self.grid, &self.samples - &other.samples)
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("trajectories live on different grids".into()));
        }
        Trajectory::new(self.grid, &self.samples + &other.samples)
    }
}

/// Free-function form of [`Trajectory::l2_norm`].
pub fn l2_norm_trajectory(traj: &Trajectory) -> f64 {
    traj.l2_norm()
}

/// Simpson's rule on equally spaced samples; a 3/8 panel closes odd interval counts.
pub fn integrate_samples(f: &[f64], h: f64) -> f64 {
    let intervals = f.len().saturating_sub(1);
    match intervals {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        2 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let simpson_end = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
            let mut sum = 0.0;
            let mut i = 0;
            while i < simpson_end {
                sum += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
                i += 2;
            }
            if simpson_end < intervals {
                let j = simpson_end;
                sum += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
            }
            sum
        }
    }
}

/// Zero-order-hold propagators `(e^{Ah}, ∫₀ʰ e^{Aτ}dτ·B)` from one augmented exponential.
pub(crate) fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, m)));
    }
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, m)).copy_from(b);
    let e = matrix_exponential(&aug, h)?;
    Ok((e.view((0, 0), (n, n)).clone_owned(), e.view((0, n), (n, m)).clone_owned()))
}

/// Exact simulation of a state-space model under piecewise-constant input.
pub(crate) fn simulate_state_space(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    u: &PiecewiseConstantInput,
    x0: &DVector<f64>,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let n = a.nrows();
    let m = b.ncols();
    if u.dim() != m {
        return Err(Error::DimensionMismatch(format!("input has {} channels, expected {m}", u.dim())));
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("x0 has length {}, expected {n}", x0.len())));
    }
    // grid index at which each input segment starts
    let mut segment_start = Vec::with_capacity(u.breakpoints().len());
    for &t in u.breakpoints() {
        if t > grid.horizon() + 1e-12 * grid.horizon().max(1.0) {
            break;
        }
        let k = grid.index_of(t).ok_or(Error::GridMisaligned { breakpoint: t, step: grid.step() })?;
        segment_start.push(k);
    }

    let (phi, gamma) = discretize(a, b, grid.step())?;
    let p = c.nrows();
    let mut samples = DMatrix::zeros(p, grid.len());
    let mut x = x0.clone();
    let mut next = DVector::zeros(n);
    let mut y = DVector::zeros(p);
    let mut segment = 0;
    for k in 0..grid.len() {
        while segment + 1 < segment_start.len() && segment_start[segment + 1] <= k {
            segment += 1;
        }
        let uk = &u.values()[segment];
        y.gemv(1.0, c, &x, 0.0);
        y.gemv(1.0, d, uk, 1.0);
        samples.set_column(k, &y);
        if k + 1 < grid.len() {
            next.gemv(1.0, &phi, &x, 0.0);
            next.gemv(1.0, &gamma, uk, 1.0);
            std::mem::swap(&mut x, &mut next);
        }
    }
    Trajectory::new(*grid, samples)
}

/// Plain `(A, B, C, D)` quadruple, e.g. a projected model.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        check_state_space(&a, &b, &c, &d)?;
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn simulate(&self, u: &PiecewiseConstantInput, x0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
        simulate_state_space(&self.a, &self.b, &self.c, &self.d, u, x0, grid)
    }
}

/// Output of `sys` on `grid` from state `x0` under input `u`.
pub fn simulate(sys: &LtiSystem, u: &PiecewiseConstantInput, x0: &DVector<f64>, grid: &TimeGrid) -> Result<Trajectory> {
    simulate_state_space(&sys.a, &sys.b, &sys.c, &sys.d, u, x0, grid)
}

/// `‖C (sI - A)⁻¹ B‖_{H₂} = trace(C P Cᵀ)^{1/2}` with `A P + P Aᵀ + B Bᵀ = 0`.
pub fn h2_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    if c.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("C has {} columns, A is {}x{}", c.ncols(), a.nrows(), a.ncols())));
    }
    let p = solve_lyapunov(a, b)?;
    Ok((c * p * c.transpose()).trace().max(0.0).sqrt())
}
