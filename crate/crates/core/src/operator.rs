//! Dense operators on ℂⁿ with tolerance-explicit spectral predicates.
//!
//! Everything is complex double precision; real inputs are embedded. Rank
//! decisions are always made by singular-value thresholding at the tolerance
//! scale, never by exact zero tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::subspace::Subspace;
use crate::tol::Tolerance;

pub type Matrix = DMatrix<Complex64>;
pub type Vector = DVector<Complex64>;

/// Inner product with the convention ⟨a, b⟩ = Σ aᵢ·conj(bᵢ) (linear in the
/// first argument).
pub fn inner(a: &Vector, b: &Vector) -> Complex64 {
    b.dotc(a)
}

/// Bounded operator on ℂⁿ, stored as a dense square matrix (row-major
/// semantics at the interface).
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: Matrix,
}

impl Operator {
    /// Wraps a square matrix with finite entries.
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidInput(format!(
                "operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput(
                "operator entries must be finite".into(),
            ));
        }
        Ok(Self { matrix })
    }

    /// Internal constructor for matrices produced by arithmetic on already
    /// validated operators.
    pub(crate) fn from_matrix_unchecked(matrix: Matrix) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(Matrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(Matrix::zeros(dim, dim))
    }

    /// Diagonal operator with real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let entries: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(Matrix::from_diagonal(&DVector::from_vec(entries)))
    }

    /// Builds an n×n operator from row-major complex entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} operator, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(Matrix::from_row_slice(dim, dim, entries))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }

    /// Conjugate transpose. `adjoint(adjoint(A)) = A` exactly.
    pub fn adjoint(&self) -> Self {
        Self::from_matrix_unchecked(self.matrix.adjoint())
    }

    /// Operator norm: the largest singular value.
    pub fn op_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// Operator norm of A − A*, the distance to the self-adjoint cone.
    pub fn herm_deviation(&self) -> f64 {
        Self::from_matrix_unchecked(&self.matrix - self.matrix.adjoint()).op_norm()
    }

    pub fn is_self_adjoint(&self, tol: &Tolerance) -> bool {
        self.herm_deviation() <= tol.scale(self.dim(), self.op_norm())
    }

    /// Hermitian part (A + A*)/2, used to symmetrize before every
    /// eigendecomposition of a nominally self-adjoint input.
    pub(crate) fn hermitian_part(&self) -> Matrix {
        (&self.matrix + self.matrix.adjoint()).scale(0.5)
    }

    /// Eigenvalues and eigenvectors of the Hermitian part, ascending.
    pub(crate) fn hermitian_eigen(&self) -> (Vec<f64>, Matrix) {
        hermitian_eigen_sorted(&self.hermitian_part())
    }

    /// Spectral bounds (m, M) of a self-adjoint operator: the smallest and
    /// largest eigenvalue, so that m·I ⪯ A ⪯ M·I holds by construction.
    pub fn pos_bounds(&self, tol: &Tolerance) -> Result<(f64, f64)> {
        let deviation = self.herm_deviation();
        let threshold = tol.scale(self.dim(), self.op_norm());
        if deviation > threshold {
            return Err(Error::NotSelfAdjoint {
                deviation,
                threshold,
            });
        }
        let (values, _) = self.hermitian_eigen();
        Ok((values[0], values[values.len() - 1]))
    }

    /// True iff the operator is self-adjoint within tolerance and its
    /// smallest eigenvalue is ≥ −(tol scale). Non-Hermitian inputs return
    /// false rather than erroring; strict spectral bounds are exposed via
    /// [`Operator::pos_bounds`].
    pub fn is_positive(&self, tol: &Tolerance) -> bool {
        match self.pos_bounds(tol) {
            Ok((min, _)) => min >= -tol.scale(self.dim(), self.op_norm()),
            Err(_) => false,
        }
    }

    /// Unique positive square root of a positive semidefinite operator,
    /// computed by spectral calculus. Eigenvalues in the tolerance band
    /// around zero are clamped to zero.
    pub fn sqrt_psd(&self, tol: &Tolerance) -> Result<Self> {
        let threshold = tol.scale(self.dim(), self.op_norm());
        let deviation = self.herm_deviation();
        if deviation > threshold {
            return Err(Error::NotSelfAdjoint {
                deviation,
                threshold,
            });
        }
        let (values, vectors) = self.hermitian_eigen();
        if values[0] < -threshold {
            return Err(Error::NotPositive {
                min_eigenvalue: values[0],
                threshold,
            });
        }
        let roots: Vec<Complex64> = values
            .iter()
            .map(|&v| Complex64::new(v.max(0.0).sqrt(), 0.0))
            .collect();
        let d = Matrix::from_diagonal(&DVector::from_vec(roots));
        Ok(Self::from_matrix_unchecked(
            &vectors * d * vectors.adjoint(),
        ))
    }

    /// Moore–Penrose pseudo-inverse A† = Σ vᵢ·uᵢᴴ/σᵢ over the singular
    /// values above the tolerance scale.
    pub fn pinv(&self, tol: &Tolerance) -> Self {
        let n = self.dim();
        let svd = jacobi_svd(&self.matrix);
        let eps = tol.scale(n, svd.singular_values[0]);
        let mut pinv = Matrix::zeros(n, n);
        for (i, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma > eps {
                pinv += svd.v.column(i) * svd.u.column(i).adjoint() / Complex64::new(sigma, 0.0);
            }
        }
        Self::from_matrix_unchecked(pinv)
    }

    /// Orthonormal basis of the range, with rank decided by singular values
    /// above the tolerance scale.
    pub fn range_basis(&self, tol: &Tolerance) -> Subspace {
        let n = self.dim();
        let svd = jacobi_svd(&self.matrix);
        let eps = tol.scale(n, svd.singular_values[0]);
        let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
        let mut basis = Matrix::zeros(n, rank);
        for j in 0..rank {
            basis.set_column(j, &svd.u.column(j));
        }
        Subspace::from_orthonormal_unchecked(n, basis)
    }

    /// Loewner order test: self ⪯ other iff the smallest eigenvalue of
    /// (other − self) is ≥ −(tol scale). Both operators must be
    /// self-adjoint within tolerance.
    pub fn loewner_leq(&self, other: &Self, tol: &Tolerance) -> Result<bool> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let magnitude = self.op_norm().max(other.op_norm());
        let threshold = tol.scale(self.dim(), magnitude);
        for op in [self, other] {
            let deviation = op.herm_deviation();
            if deviation > threshold {
                return Err(Error::NotSelfAdjoint {
                    deviation,
                    threshold,
                });
            }
        }
        let diff = Self::from_matrix_unchecked(&other.matrix - &self.matrix);
        let (values, _) = diff.hermitian_eigen();
        Ok(values[0] >= -threshold)
    }

    /// Smallest singular value; zero operators report 0.
    pub fn min_singular_value(&self) -> f64 {
        smallest_singular_value(&self.matrix)
    }
}

/// Thin singular value decomposition A = U·diag(σ)·Vᴴ with σ descending.
/// Columns of U belonging to zero singular values are zero and must be
/// filtered by the σ threshold.
pub(crate) struct ThinSvd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD. All singular value computations in the crate go
/// through this routine: the iterative bidiagonal SVD misconverges on some
/// rank-deficient complex inputs, and Gram-matrix eigendecompositions
/// cannot resolve singular values below √ε·σmax, while Jacobi rotations
/// keep small singular values accurate.
pub(crate) fn jacobi_svd(a: &Matrix) -> ThinSvd {
    const MAX_SWEEPS: usize = 64;
    const PAIR_TOL: f64 = 1e-15;
    let m = a.nrows();
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut converged = true;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    alpha += wi.norm_sqr();
                    beta += wj.norm_sqr();
                    gamma += wi.conj() * wj;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let abs_g = gamma.norm();
                if abs_g <= PAIR_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;

                // Rotation zeroing the (i, j) entry of the column Gram:
                // t solves t² + 2τt − 1 = 0 with τ = (β − α)/(2|γ|).
                // Componentwise division: complex division underflows its
                // denominator's squared norm for |γ| below ~1e-154.
                let phase = Complex64::new(gamma.re / abs_g, gamma.im / abs_g);
                let tau = (beta - alpha) / (2.0 * abs_g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let left = Complex64::new(s, 0.0) * phase.conj();
                let right = Complex64::new(s, 0.0) * phase;
                for r in 0..m {
                    let fi = w[(r, i)];
                    let gj = w[(r, j)];
                    w[(r, i)] = fi.scale(c) - gj * left;
                    w[(r, j)] = fi * right + gj.scale(c);
                }
                for r in 0..n {
                    let fi = v[(r, i)];
                    let gj = v[(r, j)];
                    v[(r, i)] = fi.scale(c) - gj * left;
                    v[(r, j)] = fi * right + gj.scale(c);
                }
            }
        }
        if converged {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = (0..n).map(|j| (w.column(j).norm(), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite column norms"));
    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (rank, &(sigma, j)) in order.iter().enumerate() {
        singular_values.push(sigma);
        if sigma > 0.0 {
            let col = w.column(j).map(|z| Complex64::new(z.re / sigma, z.im / sigma));
            u.set_column(rank, &col);
        }
        v_sorted.set_column(rank, &v.column(j));
    }
    ThinSvd {
        u,
        singular_values,
        v: v_sorted,
    }
}

/// Largest singular value of a rectangular matrix.
pub(crate) fn spectral_norm(m: &Matrix) -> f64 {
    jacobi_svd(m).singular_values.first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square matrix.
pub(crate) fn smallest_singular_value(m: &Matrix) -> f64 {
    debug_assert_eq!(m.nrows(), m.ncols());
    jacobi_svd(m).singular_values.last().copied().unwrap_or(0.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and eigenvector columns permuted to match.
pub(crate) fn hermitian_eigen_sorted(h: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues of a Hermitian matrix are finite")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}
