//! Closed subspaces of ℂⁿ, represented by orthonormal bases.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{Matrix, Operator, Vector};
use crate::tol::Tolerance;

/// Subspace of ℂⁿ given by an n×k matrix with orthonormal columns. The zero
/// subspace (k = 0) is admitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Matrix,
}

impl Subspace {
    /// Validates shape, finiteness, and basisᴴ·basis = I within tolerance.
    pub fn new(ambient_dim: usize, basis: Matrix, tol: &Tolerance) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        if basis.nrows() != ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: ambient_dim,
                found: basis.nrows(),
            });
        }
        if basis.ncols() > ambient_dim {
            return Err(Error::InvalidInput(format!(
                "subspace dimension {} exceeds ambient dimension {ambient_dim}",
                basis.ncols()
            )));
        }
        if !basis.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidInput("basis entries must be finite".into()));
        }
        let k = basis.ncols();
        if k > 0 {
            let gram = basis.adjoint() * &basis;
            let deviation = (&gram - Matrix::identity(k, k)).norm();
            let threshold = tol.scale(ambient_dim, 1.0);
            if deviation > threshold {
                return Err(Error::InvalidInput(format!(
                    "basis columns are not orthonormal: deviation {deviation:.3e} exceeds {threshold:.3e}"
                )));
            }
        }
        Ok(Self { ambient_dim, basis })
    }

    /// Constructor for bases produced by an orthonormalizing routine.
    pub(crate) fn from_orthonormal_unchecked(ambient_dim: usize, basis: Matrix) -> Self {
        Self { ambient_dim, basis }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: Matrix::zeros(ambient_dim, 0),
        }
    }

    /// The coordinate subspace span{e_index}.
    pub fn coordinate(ambient_dim: usize, index: usize) -> Self {
        let mut basis = Matrix::zeros(ambient_dim, 1);
        basis[(index, 0)] = Complex64::new(1.0, 0.0);
        Self { ambient_dim, basis }
    }

    /// Orthonormal basis of the span of the given vectors. Rank is decided by
    /// singular values above the tolerance scale; dependent or empty input
    /// yields a lower-dimensional (possibly zero) subspace.
    pub fn orthonormalize(ambient_dim: usize, vectors: &[Vector], tol: &Tolerance) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidInput("ambient dimension must be positive".into()));
        }
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
            if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidInput("vector entries must be finite".into()));
            }
        }
        if vectors.is_empty() {
            return Ok(Self::zero(ambient_dim));
        }
        let mut stacked = Matrix::zeros(ambient_dim, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            stacked.set_column(j, v);
        }
        Ok(Self::orthonormalize_columns(&stacked, tol))
    }

    /// Orthonormalizes the columns of a matrix, with the rank decided by
    /// singular values above the tolerance scale.
    pub fn orthonormalize_columns(columns: &Matrix, tol: &Tolerance) -> Self {
        let n = columns.nrows();
        if columns.ncols() == 0 {
            return Self::zero(n);
        }
        let svd = crate::operator::jacobi_svd(columns);
        let eps = tol.scale(n.max(columns.ncols()), svd.singular_values[0]);
        let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
        let mut basis = Matrix::zeros(n, rank);
        for j in 0..rank {
            basis.set_column(j, &svd.u.column(j));
        }
        Self::from_orthonormal_unchecked(n, basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension k of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Orthogonal projection π = basis·basisᴴ onto the subspace.
    pub fn projection(&self) -> Operator {
        Operator::from_matrix_unchecked(&self.basis * self.basis.adjoint())
    }

    /// Coordinates basisᴴ·v of the projection of v onto the subspace.
    pub fn coordinates(&self, v: &Vector) -> DVector<Complex64> {
        self.basis.adjoint() * v
    }

    /// Embeds coordinate vector y as basis·y ∈ ℂⁿ.
    pub fn embed(&self, y: &DVector<Complex64>) -> Vector {
        &self.basis * y
    }

    /// Residual ‖v − ππv‖ of membership, relative to ‖v‖.
    pub fn residual(&self, v: &Vector) -> f64 {
        (v - self.embed(&self.coordinates(v))).norm()
    }
}
