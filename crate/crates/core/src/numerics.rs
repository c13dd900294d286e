//! Dense complex linear algebra with explicit rank tolerances.
//!
//! Every rank decision goes through a [`TolerancePolicy`]: a singular value
//! `σᵢ` counts towards the rank when `σᵢ > rel_rank_tol · max(rows, cols) · σ_max`.

use faer::{Col, Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{c64, CMat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("nullspace is empty: rank {rank} equals column count {cols}")]
    NullspaceEmpty { rank: usize, cols: usize },
    #[error("input has rank {rank}, expected full column rank {expected}")]
    RankDeficientInput { rank: usize, expected: usize },
    #[error("tolerance {name}={value} outside (0, 1e-2)")]
    InvalidTolerance { name: &'static str, value: f64 },
}

/// Thresholds for numerical rank and residual checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub rel_rank_tol: f64,
    pub residual_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rel_rank_tol: 1e-8,
            residual_tol: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rel_rank_tol: f64, residual_tol: f64) -> Result<Self, NumericsError> {
        for (name, value) in [("rel_rank_tol", rel_rank_tol), ("residual_tol", residual_tol)] {
            if !(value > 0.0 && value < 1e-2) {
                return Err(NumericsError::InvalidTolerance { name, value });
            }
        }
        Ok(Self {
            rel_rank_tol,
            residual_tol,
        })
    }

    /// Absolute cutoff for singular values of a `rows × cols` matrix whose
    /// largest singular value is `sigma_max`.
    pub fn rank_cutoff(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        self.rel_rank_tol * rows.max(cols) as f64 * sigma_max
    }
}

/// Unit-variance circularly-symmetric complex Gaussian matrix, filled
/// column-major, real part first.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Mat::<c64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            out[(i, j)] = c64::new(re * scale, im * scale);
        }
    }
    out
}

/// Unit-variance complex Gaussian scalar.
pub fn gaussian_scalar<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re * scale, im * scale)
}

/// Singular values in nonincreasing order; empty for an empty matrix.
///
/// # Panics
///
/// If the SVD fails to converge, which only happens for non-finite input.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    singular_values_ref(a.as_ref())
}

pub(crate) fn singular_values_ref(a: MatRef<'_, c64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    a.singular_values()
        .expect("SVD did not converge (non-finite matrix entries?)")
}

/// `floor` is a lower bound on the reference `σ_max`, so a matrix of
/// roundoff measured against a nonzero `floor` has rank 0.
fn rank_from_values(sv: &[f64], rows: usize, cols: usize, pol: &TolerancePolicy, floor: f64) -> usize {
    let sigma_max = sv.first().copied().unwrap_or(0.0).max(floor);
    if sigma_max == 0.0 {
        return 0;
    }
    let cutoff = pol.rank_cutoff(rows, cols, sigma_max);
    sv.iter().take_while(|&&s| s > cutoff).count()
}

/// Number of singular values above the policy cutoff; 0 for a zero matrix.
pub fn numerical_rank(a: &CMat, pol: &TolerancePolicy) -> usize {
    numerical_rank_ref(a.as_ref(), pol)
}

pub(crate) fn numerical_rank_ref(a: MatRef<'_, c64>, pol: &TolerancePolicy) -> usize {
    numerical_rank_floored(a, 0.0, pol)
}

/// Rank against `max(σ_max, floor)`.
pub fn numerical_rank_floored(a: MatRef<'_, c64>, floor: f64, pol: &TolerancePolicy) -> usize {
    let sv = singular_values_ref(a);
    rank_from_values(&sv, a.nrows(), a.ncols(), pol, floor)
}

/// Rank together with the singular values on either side of the cutoff,
/// both relative to `σ_max`: `(rank, last kept, first dropped)`.
/// `floor` bounds the reference `σ_max` from below (pass 0 for a purely
/// relative test).
pub fn rank_with_margin(
    a: MatRef<'_, c64>,
    floor: f64,
    pol: &TolerancePolicy,
) -> (usize, Option<f64>, Option<f64>) {
    let sv = singular_values_ref(a);
    let rank = rank_from_values(&sv, a.nrows(), a.ncols(), pol, floor);
    let smax = sv.first().copied().unwrap_or(0.0).max(floor);
    let rel = |s: f64| if smax > 0.0 { s / smax } else { 0.0 };
    let kept = rank.checked_sub(1).map(|i| rel(sv[i]));
    let dropped = sv.get(rank).map(|&s| rel(s));
    (rank, kept, dropped)
}

/// Orthonormal basis of `{x : A x = 0}` as the columns of a `cols(A) × (cols(A) − rank)`
/// matrix.
pub fn nullspace_basis(a: &CMat, pol: &TolerancePolicy) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return identity(n);
    }
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    // Zero rows leave the nullspace unchanged and give a square input, so
    // the full SVD returns a complete right basis.
    let padded;
    let a_ref = if a.nrows() < n {
        padded = Mat::from_fn(n, n, |i, j| if i < a.nrows() { a[(i, j)] } else { c64::new(0.0, 0.0) });
        padded.as_ref()
    } else {
        a.as_ref()
    };
    let svd = a_ref
        .svd()
        .expect("SVD did not converge (non-finite matrix entries?)");
    let sv: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
    let rank = rank_from_values(&sv, a.nrows(), n, pol, 0.0);
    svd.V().subcols(rank, n - rank).to_owned()
}

/// A random point of a nullspace together with diagnostics.
#[derive(Debug, Clone)]
pub struct NullspaceSample {
    /// Unit-norm solution of `A v = 0`.
    pub vector: Col<c64>,
    /// `‖A v‖ / ‖v‖`.
    pub residual: f64,
    pub rank: usize,
    pub nullity: usize,
    /// Smallest pivot counted in the rank, relative to the largest.
    pub smallest_kept: Option<f64>,
    /// Largest pivot below the cutoff, relative to the largest.
    pub largest_dropped: Option<f64>,
}

/// Orthogonal projector onto `null(A)`, i.e. `I − Q_r Q_rᴴ` with `Q_r` an
/// orthonormal basis of the row space of `A`.
///
/// The row space comes from a column-pivoted QR factorization of `Aᴴ`; the
/// rank is the number of `|R_ii|` above
/// `rel_rank_tol · max(rows, cols) · |R_00|`. This is about twice as fast
/// as an SVD at the sizes the random-coefficient systems reach.
#[derive(Debug, Clone)]
pub struct NullspaceProjector {
    a: CMat,
    row_basis: CMat,
    smallest_kept: Option<f64>,
    largest_dropped: Option<f64>,
}

impl NullspaceProjector {
    pub fn new(a: &CMat, pol: &TolerancePolicy) -> Self {
        let (m, n) = (a.nrows(), a.ncols());
        if m == 0 || n == 0 {
            return Self {
                a: a.clone(),
                row_basis: Mat::zeros(n, 0),
                smallest_kept: None,
                largest_dropped: None,
            };
        }
        let ah = a.adjoint().to_owned();
        let qr = ah.col_piv_qr();
        let r = qr.R();
        let diag: Vec<f64> = (0..m.min(n)).map(|i| r[(i, i)].norm()).collect();
        let rank = rank_from_values(&diag, m, n, pol, 0.0);
        let dmax = diag.first().copied().unwrap_or(0.0);
        let rel = |s: f64| if dmax > 0.0 { s / dmax } else { 0.0 };
        let row_basis = qr.compute_thin_Q().subcols(0, rank).to_owned();
        Self {
            a: a.clone(),
            row_basis,
            smallest_kept: rank.checked_sub(1).map(|i| rel(diag[i])),
            largest_dropped: diag.get(rank).map(|&s| rel(s)),
        }
    }

    pub fn rank(&self) -> usize {
        self.row_basis.ncols()
    }

    pub fn nullity(&self) -> usize {
        self.a.ncols() - self.rank()
    }

    /// Projects `r` and normalizes the result.
    pub fn project(&self, r: Col<c64>) -> Result<NullspaceSample, NumericsError> {
        let n = self.a.ncols();
        assert_eq!(r.nrows(), n, "starting vector length must equal column count");
        let rank = self.rank();
        if rank >= n {
            return Err(NumericsError::NullspaceEmpty { rank, cols: n });
        }
        let coeffs = self.row_basis.adjoint() * &r;
        let mut v = &r - &self.row_basis * &coeffs;
        let norm = v.norm_l2();
        if norm > 0.0 {
            v = v * faer::Scale(c64::new(1.0 / norm, 0.0));
        }
        let residual = if self.a.nrows() == 0 {
            0.0
        } else {
            (&self.a * &v).norm_l2() / v.norm_l2().max(f64::MIN_POSITIVE)
        };
        Ok(NullspaceSample {
            vector: v,
            residual,
            rank,
            nullity: n - rank,
            smallest_kept: self.smallest_kept,
            largest_dropped: self.largest_dropped,
        })
    }
}

/// Projects a seeded random vector onto the nullspace of `a` and
/// normalizes it; see [`NullspaceProjector`].
///
/// The `det(A Aᴴ)` prefactor of the closed-form solution is a nonzero scalar
/// and is omitted.
pub fn solve_homogeneous_random(
    a: &CMat,
    seed: u64,
    pol: &TolerancePolicy,
) -> Result<NullspaceSample, NumericsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = gaussian_matrix(&mut rng, a.ncols(), 1);
    NullspaceProjector::new(a, pol).project(r.col(0).to_owned())
}

/// Orthonormal basis of the orthogonal complement of `span(V)` for an
/// `M × k` input of full column rank.
pub fn orth_complement(v: &CMat, pol: &TolerancePolicy) -> Result<CMat, NumericsError> {
    let (m, k) = (v.nrows(), v.ncols());
    if k == 0 {
        return Ok(identity(m));
    }
    let rank = numerical_rank(v, pol);
    if rank < k {
        return Err(NumericsError::RankDeficientInput { rank, expected: k });
    }
    Ok(column_space_complement(v.as_ref(), 0.0, pol))
}

/// Orthonormal basis of `span(A)^⊥`; the rank is decided by `pol` against
/// `max(σ_max, floor)`.
pub fn column_space_complement(a: MatRef<'_, c64>, floor: f64, pol: &TolerancePolicy) -> CMat {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return identity(m);
    }
    let padded;
    let a_ref = if a.ncols() < m {
        padded = Mat::from_fn(m, m, |i, j| if j < a.ncols() { a[(i, j)] } else { c64::new(0.0, 0.0) });
        padded.as_ref()
    } else {
        a
    };
    let svd = a_ref
        .svd()
        .expect("SVD did not converge (non-finite matrix entries?)");
    let sv: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
    let rank = rank_from_values(&sv, m, a.ncols(), pol, floor);
    svd.U().subcols(rank, m - rank).to_owned()
}

/// Orthonormal basis of `span(A)`; the rank is decided as in
/// [`column_space_complement`].
pub fn column_space_basis(a: MatRef<'_, c64>, floor: f64, pol: &TolerancePolicy) -> CMat {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return Mat::zeros(m, 0);
    }
    let svd = a
        .thin_svd()
        .expect("SVD did not converge (non-finite matrix entries?)");
    let sv: Vec<f64> = svd.S().column_vector().iter().map(|s| s.re).collect();
    let rank = rank_from_values(&sv, m, a.ncols(), pol, floor);
    svd.U().subcols(0, rank).to_owned()
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Horizontal concatenation; every block must have `rows` rows.
pub fn hcat(rows: usize, blocks: &[MatRef<'_, c64>]) -> CMat {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::<c64>::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row mismatch");
        out.as_mut().subcols_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    out
}

/// Frobenius norm.
pub fn fro(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: MatRef<'_, c64>) -> f64 {
    singular_values_ref(a).first().copied().unwrap_or(0.0)
}
