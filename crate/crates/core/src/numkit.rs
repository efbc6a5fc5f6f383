//! Dense complex linear algebra kernel.
//!
//! Factorizations are delegated to `nalgebra`; this module adds the
//! contracts the rest of the crate relies on (sorted spectra, rank
//! thresholds, PSD clamping) and the Stein solver that produces exact
//! frame operators of infinite orbits.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Largest dimension solved through the vectorized Kronecker system.
pub const VECTORIZED_STEIN_MAX_DIM: usize = 16;
/// Cap on doubling steps in the Stein iteration.
pub const MAX_DOUBLINGS: usize = 200;
/// Default relative residual tolerance for the Stein solver.
pub const DEFAULT_STEIN_TOL: f64 = 1e-12;
/// Relative threshold below which negative eigenvalues count as rounding dust.
pub const PSD_DUST: f64 = 1e-10;

const MAX_SWEEPS: usize = 10_000;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Canonical basis vector `δ_k` (zero-based `k`) of `ℂ^dim`.
pub fn basis_vector(dim: usize, k: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[k] = real(1.0);
    v
}

pub fn real_vector(entries: &[f64]) -> Vector {
    Vector::from_iterator(entries.len(), entries.iter().map(|&x| real(x)))
}

pub fn real_matrix(rows: usize, cols: usize, row_major: &[f64]) -> Matrix {
    Matrix::from_row_iterator(rows, cols, row_major.iter().map(|&x| real(x)))
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn require_finite(m: &Matrix, what: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

fn require_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() == m.ncols() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be square and non-empty, got {}×{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// `‖M − M*‖_F`.
pub fn hermitian_defect(m: &Matrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()).scale(0.5)
}

/// A bounded operator on the truncation `ℂ^d`, stored densely.
///
/// Entries are always finite and the matrix is square.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(Matrix);

impl Operator {
    pub fn new(m: Matrix) -> Result<Self> {
        require_square(&m, "operator")?;
        require_finite(&m, "operator")?;
        Ok(Self(m))
    }

    pub fn from_real_rows(dim: usize, row_major: &[f64]) -> Result<Self> {
        if row_major.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}×{dim} operator, got {}",
                dim * dim,
                row_major.len()
            )));
        }
        Self::new(real_matrix(dim, dim, row_major))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[C64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(entries)))
    }

    pub fn real_diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&real_vector(entries)))
    }

    /// Forward shift `δ_k ↦ δ_{k+1}`, `δ_d ↦ 0`.
    pub fn nilpotent_shift(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for k in 0..dim.saturating_sub(1) {
            m[(k + 1, k)] = real(1.0);
        }
        Self(m)
    }

    /// Cyclic forward shift `δ_k ↦ δ_{k+1 mod d}`; satisfies `T^d = I`.
    pub fn circulant_shift(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        for k in 0..dim {
            m[((k + 1) % dim, k)] = real(1.0);
        }
        Self(m)
    }

    /// Circulant matrix with the given first row: `C[i][j] = c[(j − i) mod d]`.
    pub fn circulant(first_row: &[C64]) -> Result<Self> {
        let d = first_row.len();
        if d == 0 {
            return Err(Error::InvalidInput("empty circulant row".into()));
        }
        Self::new(Matrix::from_fn(d, d, |i, j| first_row[(j + d - i) % d]))
    }

    pub fn block_diag(blocks: &[Operator]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("block_diag needs at least one block".into()));
        }
        let d: usize = blocks.iter().map(Operator::dim).sum();
        let mut m = Matrix::zeros(d, d);
        let mut offset = 0;
        for b in blocks {
            let k = b.dim();
            m.view_mut((offset, offset), (k, k)).copy_from(&b.0);
            offset += k;
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn adjoint(&self) -> Operator {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, other: &Operator) -> Operator {
        Self(&self.0 * &other.0)
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    pub fn scaled(&self, s: C64) -> Operator {
        Self(self.0.map(|z| z * s))
    }

    pub fn pow(&self, n: usize) -> Operator {
        let mut acc = Matrix::identity(self.dim(), self.dim());
        let mut base = self.0.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Self(acc)
    }

    /// Operator norm `σ_max`.
    pub fn norm(&self) -> f64 {
        operator_norm(&self.0)
    }

    /// `‖T*T − I‖_F ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        (self.0.adjoint() * &self.0 - Matrix::identity(d, d)).norm() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_defect(&self.0) <= tol * self.0.norm().max(1.0)
    }
}

impl Deref for Operator {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Thin singular value decomposition `M = U Σ V*` with descending `Σ`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v_adjoint: Matrix,
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `threshold`.
    pub fn rank_above(&self, threshold: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > threshold).count()
    }

    pub fn default_rank_tol(&self) -> f64 {
        let n = self.u.nrows().max(self.v_adjoint.ncols()) as f64;
        n * f64::EPSILON * self.max()
    }
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    require_finite(m, "matrix")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput("svd of an empty matrix".into()));
    }
    let dec = SVD::try_new(m.clone(), true, true, f64::EPSILON, MAX_SWEEPS).ok_or(
        Error::NoConvergence {
            iterations: MAX_SWEEPS,
            residual: f64::NAN,
        },
    )?;
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V*");
    // nalgebra sorts by value; keep it explicit so the contract does not
    // depend on that detail.
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let singular_values = order.iter().map(|&i| dec.singular_values[i].max(0.0)).collect();
    let u = Matrix::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let v_adjoint = Matrix::from_rows(&order.iter().map(|&i| v_t.row(i).into_owned()).collect::<Vec<_>>());
    Ok(Svd {
        u,
        singular_values,
        v_adjoint,
    })
}

pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values)
}

/// `σ_max(M)`; zero for empty or non-finite input.
pub fn operator_norm(m: &Matrix) -> f64 {
    svd(m).map(|s| s.max()).unwrap_or(0.0)
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: Matrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// `V f(Λ) V*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * v.adjoint()
    }
}

pub fn eig_hermitian(m: &Matrix) -> Result<HermitianEigen> {
    require_square(m, "matrix")?;
    require_finite(m, "matrix")?;
    let scale = m.norm();
    let defect = hermitian_defect(m);
    if defect > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (‖M − M*‖_F = {defect:e})"
        )));
    }
    let dec = SymmetricEigen::try_new(hermitian_part(m), f64::EPSILON, MAX_SWEEPS).ok_or(
        Error::NoConvergence {
            iterations: MAX_SWEEPS,
            residual: f64::NAN,
        },
    )?;
    let mut order: Vec<usize> = (0..dec.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| dec.eigenvalues[i]).collect();
    let eigenvectors = Matrix::from_columns(
        &order
            .iter()
            .map(|&i| dec.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Moore–Penrose pseudo-inverse. Singular values at or below `rank_tol`
/// are treated as zero; `None` selects `max(m, n)·ε·σ_max`.
pub fn pinv(m: &Matrix, rank_tol: Option<f64>) -> Result<Matrix> {
    let dec = svd(m)?;
    let tol = match rank_tol {
        Some(t) if t < 0.0 || !t.is_finite() => {
            return Err(Error::InvalidInput(format!("rank tolerance must be ≥ 0, got {t}")))
        }
        Some(t) => t,
        None => dec.default_rank_tol(),
    };
    let mut out = Matrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in dec.singular_values.iter().enumerate() {
        if s > tol && s > 0.0 {
            let v = dec.v_adjoint.row(k).adjoint();
            let u = dec.u.column(k);
            out += (v * u.adjoint()).unscale(s);
        }
    }
    Ok(out)
}

fn require_psd(m: &Matrix) -> Result<HermitianEigen> {
    let eig = eig_hermitian(m)?;
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    if eig.min() < -PSD_DUST * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig)
}

/// Principal square root of a Hermitian PSD matrix; eigenvalue dust
/// down to `−1e−10·‖M‖` is clamped to zero.
pub fn sqrt_psd(m: &Matrix) -> Result<Matrix> {
    let eig = require_psd(m)?;
    Ok(hermitian_part(&eig.map(|l| l.max(0.0).sqrt())))
}

/// `M^{-1/2}` for a Hermitian positive definite matrix.
pub fn inv_sqrt_pd(m: &Matrix, tol: f64) -> Result<Matrix> {
    let eig = require_psd(m)?;
    if eig.min() <= tol {
        return Err(Error::NotAFrame {
            lower_bound: eig.min(),
            tol,
        });
    }
    Ok(hermitian_part(&eig.map(|l| 1.0 / l.sqrt())))
}

/// Spectral radius `max |λ|`.
///
/// Eigenvalues come from a complex Schur form; the estimate is capped by
/// Gelfand bounds `‖M^k‖^{1/k}`, `k ≤ d`, which are exact for nilpotent
/// input where the Schur diagonal only reaches `O(ε^{1/d})`.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    require_square(m, "matrix")?;
    require_finite(m, "matrix")?;
    let d = m.nrows();
    let mut gelfand = f64::INFINITY;
    let mut power = m.clone();
    for k in 1..=d {
        let nk = operator_norm(&power);
        gelfand = gelfand.min(nk.powf(1.0 / k as f64));
        if nk == 0.0 {
            return Ok(0.0);
        }
        if k < d {
            power = &power * m;
        }
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .map(|s| s.unpack().1.diagonal().iter().fold(0.0_f64, |a, z| a.max(z.norm())));
    Ok(match schur {
        Some(r) => r.min(gelfand),
        None => power_iteration_radius(m).min(gelfand),
    })
}

/// Fallback: `‖M^{2^j}‖^{1/2^j}` by repeated normalized squaring.
fn power_iteration_radius(m: &Matrix) -> f64 {
    let mut log_scale = 0.0_f64;
    let mut p = m.clone();
    let mut exponent = 1.0_f64;
    for _ in 0..40 {
        let n = p.norm();
        if n == 0.0 {
            return 0.0;
        }
        log_scale += n.ln() / exponent;
        p.unscale_mut(n);
        p = &p * &p;
        exponent *= 2.0;
    }
    (log_scale + p.norm().ln() / exponent).exp()
}

/// How a Stein equation was solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteinMethod {
    VectorizedSolve,
    DoublingIteration,
}

/// Solution of `S − T S T* = C`.
#[derive(Clone, Debug)]
pub struct SteinSolution {
    pub s: Matrix,
    /// `‖S − T S T* − C‖_F`.
    pub residual: f64,
    pub method: SteinMethod,
    pub iterations: usize,
}

pub fn stein_residual(t: &Matrix, c: &Matrix, s: &Matrix) -> f64 {
    (s - t * s * t.adjoint() - c).norm()
}

/// Solves `S − T S T* = C`, i.e. `S = Σ_{n≥0} Tⁿ C T*ⁿ`.
///
/// Requires `ρ(T) < 1 − 1e−8`. Dimensions up to
/// [`VECTORIZED_STEIN_MAX_DIM`] use the Kronecker system
/// `(I − conj(T) ⊗ T) vec(S) = vec(C)`; larger ones use the doubling
/// iteration `S ← S + T_k S T_k*`, `T_k ← T_k²`.
pub fn solve_stein(t: &Matrix, c: &Matrix, tol: f64) -> Result<SteinSolution> {
    require_square(t, "T")?;
    require_square(c, "C")?;
    require_finite(t, "T")?;
    require_finite(c, "C")?;
    if t.nrows() != c.nrows() {
        return Err(Error::InvalidInput(format!(
            "T is {0}×{0} but C is {1}×{1}",
            t.nrows(),
            c.nrows()
        )));
    }
    if hermitian_defect(c) > 1e-10 * c.norm() {
        return Err(Error::InvalidInput("C must be Hermitian".into()));
    }
    let rho = spectral_radius(t)?;
    if rho >= 1.0 - 1e-8 {
        return Err(Error::DivergentSeries { spectral_radius: rho });
    }
    let d = t.nrows();
    let target = tol * (1.0 + c.norm());
    let (s, method, iterations) = if d <= VECTORIZED_STEIN_MAX_DIM {
        (stein_vectorized(t, c)?, SteinMethod::VectorizedSolve, 1)
    } else {
        let (s, it) = stein_doubling(t, c, target)?;
        (s, SteinMethod::DoublingIteration, it)
    };
    let s = hermitian_part(&s);
    let residual = stein_residual(t, c, &s);
    if residual > target {
        return Err(Error::NoConvergence { iterations, residual });
    }
    Ok(SteinSolution {
        s,
        residual,
        method,
        iterations,
    })
}

fn stein_vectorized(t: &Matrix, c: &Matrix) -> Result<Matrix> {
    let d = t.nrows();
    let n = d * d;
    let kron = t.map(|z| z.conj()).kronecker(t);
    let system = Matrix::identity(n, n) - kron;
    let rhs = Vector::from_column_slice(c.as_slice());
    let sol = system.lu().solve(&rhs).ok_or_else(|| {
        Error::InvalidInput("Stein system is singular".into())
    })?;
    Ok(Matrix::from_column_slice(d, d, sol.as_slice()))
}

fn stein_doubling(t: &Matrix, c: &Matrix, target: f64) -> Result<(Matrix, usize)> {
    let mut s = c.clone();
    let mut tk = t.clone();
    let mut last = f64::INFINITY;
    for it in 1..=MAX_DOUBLINGS {
        let update = &tk * &s * tk.adjoint();
        last = update.norm();
        s += update;
        if last < target {
            return Ok((s, it));
        }
        tk = &tk * &tk;
    }
    Err(Error::NoConvergence {
        iterations: MAX_DOUBLINGS,
        residual: last,
    })
}

/// Orthonormal basis (as columns) of the column space of `m`, keeping
/// singular values above `rel_tol·σ_max`.
pub fn range_basis(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let dec = svd(m)?;
    let r = dec.rank_above(rel_tol * dec.max());
    Ok(dec.u.columns(0, r).into_owned())
}

/// Orthonormal basis (as columns) of the null space of `m`, using the
/// threshold `rel_tol·σ_max` to decide rank.
pub fn null_space_basis(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let n = m.ncols();
    let dec = svd(m)?;
    let r = if dec.max() == 0.0 {
        0
    } else {
        dec.rank_above(rel_tol * dec.max())
    };
    if r == n {
        return Ok(Matrix::zeros(n, 0));
    }
    let vr = dec.v_adjoint.rows(0, r).adjoint();
    let projector = Matrix::identity(n, n) - &vr * vr.adjoint();
    let eig = eig_hermitian(&hermitian_part(&projector))?;
    let cols: Vec<Vector> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.5)
        .map(|(j, _)| eig.eigenvectors.column(j).into_owned())
        .collect();
    Ok(Matrix::from_columns(&cols))
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal column bases. Subspaces of different dimension give 1.
pub fn subspace_gap(a: &Matrix, b: &Matrix) -> f64 {
    let d = a.nrows();
    let pa = a * a.adjoint();
    let pb = b * b.adjoint();
    let id = Matrix::identity(d, d);
    let g1 = if b.ncols() == 0 { 0.0 } else { operator_norm(&((&id - &pa) * b)) };
    let g2 = if a.ncols() == 0 { 0.0 } else { operator_norm(&((&id - &pb) * a)) };
    g1.max(g2).min(1.0)
}
