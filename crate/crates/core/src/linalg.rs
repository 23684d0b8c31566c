//! Dense linear-algebra kernels: Lyapunov and Sylvester solvers (Bartels–Stewart),
//! PSD factorization, matrix exponential and spectral abscissa.
//!
//! Everything here works on `nalgebra::DMatrix<f64>` and is meant for dense
//! problems of a few hundred states.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Low-rank factor `R` of a positive semidefinite matrix `P ≈ R Rᵀ`.
///
/// Columns are ordered by decreasing eigenvalue of `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFactor {
    pub factor: DMatrix<f64>,
    pub tolerance: f64,
}

impl PsdFactor {
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

/// Thin SVD with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    /// Right singular vectors as columns (`M = U Σ Vᵀ`).
    pub v: DMatrix<f64>,
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

fn ensure_square(m: &DMatrix<f64>, name: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{name} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Real Schur decomposition `A = Q T Qᵀ`, returning `(Q, T)`.
pub(crate) fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::NoConvergence("real Schur decomposition"))?;
    Ok(schur.unpack())
}

/// Diagonal blocks `(start, size)` of a quasi upper triangular matrix.
fn schur_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Solves `S Y + Y Rᵀ = F` for the small block sizes (≤ 2) of a Schur sweep.
fn solve_block(
    s: &DMatrix<f64>,
    r: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    singular_threshold: f64,
) -> Result<DMatrix<f64>> {
    let a = s.nrows();
    let b = r.nrows();
    let dim = a * b;
    // vec(S Y + Y Rᵀ) = (I_b ⊗ S + R ⊗ I_a) vec(Y), column-major vec.
    let mut k = [[0.0_f64; 4]; 4];
    for c in 0..b {
        for i in 0..a {
            let row = i + a * c;
            for i2 in 0..a {
                k[row][i2 + a * c] += s[(i, i2)];
            }
            for c2 in 0..b {
                k[row][i + a * c2] += r[(c, c2)];
            }
        }
    }
    let mut x = [0.0_f64; 4];
    for c in 0..b {
        for i in 0..a {
            x[i + a * c] = rhs[(i, c)];
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&p, &q| k[p][col].abs().total_cmp(&k[q][col].abs())).unwrap_or(col);
        if k[pivot][col].abs() <= singular_threshold {
            return Err(Error::SingularPencil);
        }
        k.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..dim {
            let factor = k[row][col] / k[col][col];
            if factor != 0.0 {
                let (upper, lower) = k.split_at_mut(row);
                for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *dst -= factor * src;
                }
                x[row] -= factor * x[col];
            }
        }
    }
    for col in (0..dim).rev() {
        let mut acc = x[col];
        for j in col + 1..dim {
            acc -= k[col][j] * x[j];
        }
        x[col] = acc / k[col][col];
    }
    Ok(DMatrix::from_fn(a, b, |i, c| x[i + a * c]))
}

/// Back substitution for `S Z + Z Rᵀ = F` with `S`, `R` upper quasi-triangular.
fn solve_quasi_triangular(s: &DMatrix<f64>, r: &DMatrix<f64>, mut z: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let m = r.nrows();
    let s_blocks = schur_blocks(s);
    let r_blocks = schur_blocks(r);
    let scale = max_abs(s).max(max_abs(r)).max(f64::MIN_POSITIVE);
    let threshold = 100.0 * f64::EPSILON * scale;

    for &(j0, jb) in r_blocks.iter().rev() {
        let r_jj = r.view((j0, j0), (jb, jb)).clone_owned();
        let right_tail = m - j0 - jb;
        for &(k0, kb) in s_blocks.iter().rev() {
            let mut rhs = z.view((k0, j0), (kb, jb)).clone_owned();
            let lower_tail = n - k0 - kb;
            if lower_tail > 0 {
                rhs -= s.view((k0, k0 + kb), (kb, lower_tail)) * z.view((k0 + kb, j0), (lower_tail, jb));
            }
            if right_tail > 0 {
                rhs -= z.view((k0, j0 + jb), (kb, right_tail)) * r.view((j0, j0 + jb), (jb, right_tail)).transpose();
            }
            let s_kk = s.view((k0, k0), (kb, kb)).clone_owned();
            let block = solve_block(&s_kk, &r_jj, &rhs, threshold)?;
            z.view_mut((k0, j0), (kb, jb)).copy_from(&block);
        }
    }
    Ok(z)
}

/// Solves `A X + X Aᵀ + G Gᵀ = 0` for a stable `A`.
///
/// The result is symmetrized before it is returned.
pub fn solve_lyapunov(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = ensure_square(a, "A")?;
    if g.nrows() != n {
        return Err(Error::DimensionMismatch(format!("G has {} rows, A is {n}x{n}", g.nrows())));
    }
    ensure_finite(a, "A")?;
    ensure_finite(g, "G")?;
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let (q, t) = real_schur(a)?;
    let abscissa = abscissa_from_schur(&t);
    if abscissa >= 0.0 {
        return Err(Error::NotStable { abscissa });
    }
    let qtg = q.transpose() * g;
    let rhs = -(&qtg * qtg.transpose());
    let y = solve_quasi_triangular(&t, &t, rhs)?;
    let x = &q * y * q.transpose();
    Ok((&x + x.transpose()) * 0.5)
}

/// Solves the Sylvester equation `A Y + Y B + C = 0`.
pub fn solve_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = ensure_square(a, "A")?;
    let m = ensure_square(b, "B")?;
    if c.shape() != (n, m) {
        return Err(Error::DimensionMismatch(format!("C must be {n}x{m}, got {}x{}", c.nrows(), c.ncols())));
    }
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(c, "C")?;
    if n == 0 || m == 0 {
        return Ok(DMatrix::zeros(n, m));
    }

    let (u, s) = real_schur(a)?;
    let (v, r) = real_schur(&b.transpose())?;
    let rhs = -(u.transpose() * c * &v);
    let z = solve_quasi_triangular(&s, &r, rhs)?;
    Ok(u * z * v.transpose())
}

/// Default rank tolerance for [`psd_factor`]: `n · ε`.
pub fn default_psd_tolerance(n: usize) -> f64 {
    n.max(1) as f64 * f64::EPSILON
}

/// Factors a symmetric PSD matrix as `P ≈ R Rᵀ` via a symmetric eigendecomposition.
///
/// Eigenvalues in `[-tol·λ_max, tol·λ_max]` are dropped; anything more negative is
/// rejected with [`Error::NotPsd`].
pub fn psd_factor(p: &DMatrix<f64>, tol: f64) -> Result<PsdFactor> {
    psd_factor_with(p, tol, tol)
}

/// [`psd_factor`] with separate rank and negativity thresholds (both relative to `λ_max`).
pub(crate) fn psd_factor_with(p: &DMatrix<f64>, rank_tol: f64, negative_tol: f64) -> Result<PsdFactor> {
    let n = ensure_square(p, "P")?;
    ensure_finite(p, "P")?;
    if !(rank_tol >= 0.0) || !(negative_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {rank_tol}")));
    }
    if n == 0 {
        return Ok(PsdFactor { factor: DMatrix::zeros(0, 0), tolerance: rank_tol });
    }
    let norm = p.norm();
    let asym = (p - p.transpose()).norm();
    if asym > 1e-8 * norm {
        return Err(Error::InvalidArgument(format!("matrix is not symmetric (||P - P^T||_F = {asym:e})")));
    }
    if norm == 0.0 {
        return Ok(PsdFactor { factor: DMatrix::zeros(n, 0), tolerance: rank_tol });
    }

    let sym = (p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 * n.max(10))
        .ok_or(Error::NoConvergence("symmetric eigendecomposition"))?;
    let lambda_max = eig.eigenvalues.max().max(0.0);
    let lambda_min = eig.eigenvalues.min();
    let negative_threshold = negative_tol * lambda_max;
    if lambda_min < -negative_threshold || lambda_max == 0.0 {
        return Err(Error::NotPsd { min_eigenvalue: lambda_min, threshold: -negative_threshold });
    }

    let cutoff = rank_tol * lambda_max;
    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut factor = DMatrix::zeros(n, order.len());
    for (col, &i) in order.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        factor.set_column(col, &(eig.eigenvectors.column(i) * scale));
    }
    Ok(PsdFactor { factor, tolerance: rank_tol })
}

/// `e^{A t}` by scaling and squaring with a Padé approximant.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} is not finite")));
    }
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let expm = (a * t).exp();
    ensure_finite(&expm, "exp(A t)")?;
    Ok(expm)
}

fn abscissa_from_schur(t: &DMatrix<f64>) -> f64 {
    schur_blocks(t)
        .into_iter()
        .map(|(i, size)| {
            if size == 1 {
                t[(i, i)]
            } else {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let half_trace = 0.5 * (a + d);
                let half_diff = 0.5 * (a - d);
                let disc = half_diff * half_diff + b * c;
                if disc >= 0.0 {
                    half_trace + disc.sqrt()
                } else {
                    half_trace
                }
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest real part over the eigenvalues of `A` (`-∞` for an empty matrix).
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    ensure_square(a, "A")?;
    ensure_finite(a, "A")?;
    let (_, t) = real_schur(a)?;
    Ok(abscissa_from_schur(&t))
}

/// One-sided Jacobi SVD of a `k × 2` matrix. nalgebra's SVD loses accuracy when the
/// smaller dimension is 2 and the matrix is nearly rank one, so this shape is handled here.
fn svd_two_columns(m: &DMatrix<f64>) -> SortedSvd {
    let k = m.nrows();
    let mut c1: DVector<f64> = m.column(0).clone_owned();
    let mut c2: DVector<f64> = m.column(1).clone_owned();
    let mut v = DMatrix::<f64>::identity(2, 2);
    for _ in 0..8 {
        let (a, b, g) = (c1.norm_squared(), c2.norm_squared(), c1.dot(&c2));
        if g == 0.0 || g.abs() <= f64::EPSILON * (a * b).sqrt() {
            break;
        }
        let zeta = (b - a) / (2.0 * g);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = c * t;
        let (n1, n2) = (&c1 * c - &c2 * s, &c1 * s + &c2 * c);
        c1 = n1;
        c2 = n2;
        let (v1, v2) = (v.column(0) * c - v.column(1) * s, v.column(0) * s + v.column(1) * c);
        v.set_column(0, &v1);
        v.set_column(1, &v2);
    }
    if c2.norm() > c1.norm() {
        std::mem::swap(&mut c1, &mut c2);
        v.swap_columns(0, 1);
    }
    let (s1, s2) = (c1.norm(), c2.norm());
    let mut u = DMatrix::zeros(k, 2);
    let u1 = if s1 > 0.0 {
        c1 / s1
    } else {
        let mut e = DVector::zeros(k);
        e[0] = 1.0;
        e
    };
    // second left vector: re-orthogonalized, or any unit vector orthogonal to the first
    let mut u2 = &c2 - &u1 * u1.dot(&c2);
    if u2.norm() <= f64::EPSILON * s1.max(f64::MIN_POSITIVE) {
        let j = (0..k).min_by(|&a, &b| u1[a].abs().total_cmp(&u1[b].abs())).unwrap_or(0);
        u2 = DVector::zeros(k);
        u2[j] = 1.0;
        u2 -= &u1 * u1[j];
    }
    let u2n = u2.norm();
    u.set_column(0, &u1);
    u.set_column(1, &(u2 / u2n));
    SortedSvd { u, singular_values: DVector::from_vec(vec![s1, s2]), v }
}

/// Thin SVD, singular values in decreasing order. Handles empty matrices.
pub fn sorted_svd(m: &DMatrix<f64>) -> Result<SortedSvd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SortedSvd {
            u: DMatrix::zeros(rows, 0),
            singular_values: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        });
    }
    ensure_finite(m, "SVD input")?;
    if k == 2 {
        return Ok(if cols == 2 {
            svd_two_columns(m)
        } else {
            let t = svd_two_columns(&m.transpose());
            SortedSvd { u: t.v, singular_values: t.singular_values, v: t.u }
        });
    }
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, 1000 * k.max(10))
        .ok_or(Error::NoConvergence("singular value decomposition"))?;
    let u = svd.u.ok_or(Error::NoConvergence("singular value decomposition"))?;
    let v_t = svd.v_t.ok_or(Error::NoConvergence("singular value decomposition"))?;
    Ok(SortedSvd { u, singular_values: svd.singular_values, v: v_t.transpose() })
}

/// Singular values only, decreasing.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    match rows.min(cols) {
        0 => return Ok(Vec::new()),
        2 => return Ok(sorted_svd(m)?.singular_values.iter().copied().collect()),
        _ => {}
    }
    ensure_finite(m, "SVD input")?;
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 1000 * rows.min(cols).max(10))
        .ok_or(Error::NoConvergence("singular value decomposition"))?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// Spectral norm `‖M‖₂`.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}
