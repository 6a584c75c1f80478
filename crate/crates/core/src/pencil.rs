//! Extremal values of the quotient ⟨Sf,f⟩ / ⟨Gf,f⟩ for positive
//! semidefinite pencils (S, G).
//!
//! The infimum over vectors with ⟨Gf,f⟩ > 0 is computed by splitting the
//! space into R = range(G) and N = ker(G), eliminating the kernel block with
//! the Schur complement S/N = S_RR − S_RN·(S_NN)†·S_NR, and taking the
//! smallest eigenvalue of the reduced pencil (S/N, G_RR). For positive
//! semidefinite S the infimum is attained and the witness is recovered from
//! the minimizing kernel component n* = −(S_NN)†·S_NR·r.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigen_sorted, inner, Matrix, Operator, Vector};
use crate::subspace::Subspace;
use crate::tol::Tolerance;

/// Extremal quotient value together with a vector attaining it.
#[derive(Debug, Clone)]
pub struct PencilExtremum {
    pub value: f64,
    pub witness: Vector,
}

/// Quotient ⟨Sf,f⟩ / ⟨Gf,f⟩ at a single vector (real parts; the forms are
/// Hermitian by the callers' preconditions).
pub fn quotient(s: &Operator, g: &Operator, f: &Vector) -> f64 {
    let num = inner(&s.apply(f), f).re;
    let den = inner(&g.apply(f), f).re;
    num / den
}

struct SplitPencil {
    range_basis: Matrix,
    range_eigenvalues: Vec<f64>,
    kernel_basis: Matrix,
    s_herm: Matrix,
}

/// Validates the pencil and splits the space along range(G) / ker(G).
fn split(s: &Operator, g: &Operator, tol: &Tolerance) -> Result<SplitPencil> {
    if s.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: g.dim(),
        });
    }
    let n = s.dim();
    for op in [s, g] {
        let threshold = tol.scale(n, op.op_norm());
        let deviation = op.herm_deviation();
        if deviation > threshold {
            return Err(Error::NotSelfAdjoint {
                deviation,
                threshold,
            });
        }
        let (values, _) = op.hermitian_eigen();
        if values[0] < -threshold {
            return Err(Error::NotPositive {
                min_eigenvalue: values[0],
                threshold,
            });
        }
    }
    let (g_values, g_vectors) = g.hermitian_eigen();
    let eps = tol.scale(n, g_values[n - 1].abs());
    let range_idx: Vec<usize> = (0..n).filter(|&i| g_values[i] > eps).collect();
    if range_idx.is_empty() {
        return Err(Error::ZeroPencil);
    }
    let kernel_idx: Vec<usize> = (0..n).filter(|&i| g_values[i] <= eps).collect();

    let mut range_basis = Matrix::zeros(n, range_idx.len());
    let mut range_eigenvalues = Vec::with_capacity(range_idx.len());
    for (j, &i) in range_idx.iter().enumerate() {
        range_basis.set_column(j, &g_vectors.column(i));
        range_eigenvalues.push(g_values[i]);
    }
    let mut kernel_basis = Matrix::zeros(n, kernel_idx.len());
    for (j, &i) in kernel_idx.iter().enumerate() {
        kernel_basis.set_column(j, &g_vectors.column(i));
    }
    Ok(SplitPencil {
        range_basis,
        range_eigenvalues,
        kernel_basis,
        s_herm: s.hermitian_part(),
    })
}

fn scaled_by_inverse_sqrt(m: &Matrix, eigenvalues: &[f64]) -> Matrix {
    let weights: Vec<Complex64> = eigenvalues
        .iter()
        .map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0))
        .collect();
    let d = Matrix::from_diagonal(&DVector::from_vec(weights));
    &d * m * &d
}

/// Infimum of ⟨Sf,f⟩ / ⟨Gf,f⟩ over vectors with ⟨Gf,f⟩ > 0, for positive
/// semidefinite self-adjoint S and G. The value is non-negative; the witness
/// attains the quotient.
pub fn pencil_min(s: &Operator, g: &Operator, tol: &Tolerance) -> Result<PencilExtremum> {
    let parts = split(s, g, tol)?;
    let r = parts.range_basis.ncols();
    let s_rr = parts.range_basis.adjoint() * &parts.s_herm * &parts.range_basis;

    let (schur, kernel_lift) = if parts.kernel_basis.ncols() == 0 {
        (s_rr, None)
    } else {
        let s_rn = parts.range_basis.adjoint() * &parts.s_herm * &parts.kernel_basis;
        let s_nn = parts.kernel_basis.adjoint() * &parts.s_herm * &parts.kernel_basis;
        let s_nn_pinv = pinv_psd(&s_nn, tol);
        let schur = &s_rr - &s_rn * &s_nn_pinv * s_rn.adjoint();
        // n* = −(S_NN)†·S_NR·r recovers the minimizing kernel component.
        let lift = -(&s_nn_pinv * s_rn.adjoint());
        (schur, Some(lift))
    };

    // Reduce (S/N, G_RR) to an ordinary Hermitian problem with G_RR^{-1/2}.
    let w = scaled_by_inverse_sqrt(&schur, &parts.range_eigenvalues);
    let w_herm = (&w + w.adjoint()).scale(0.5);
    let (values, vectors) = hermitian_eigen_sorted(&w_herm);
    let value = values[0].max(0.0);

    let x = vectors.column(0).into_owned();
    let weights: Vec<Complex64> = parts
        .range_eigenvalues
        .iter()
        .map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0))
        .collect();
    let y = Matrix::from_diagonal(&DVector::from_vec(weights)) * x;
    let mut witness = &parts.range_basis * &y;
    if let Some(lift) = kernel_lift {
        witness += &parts.kernel_basis * (lift * &y);
    }
    let norm = witness.norm();
    debug_assert!(norm > 0.0 && r > 0);
    witness /= Complex64::new(norm, 0.0);

    Ok(PencilExtremum { value, witness })
}

/// Supremum of the quotient for pencils whose numerator vanishes on ker(G),
/// i.e. the minimal λ with S ⪯ λ·G. Errors if S does not vanish on ker(G)
/// within tolerance (the supremum would be infinite).
pub fn pencil_max(s: &Operator, g: &Operator, tol: &Tolerance) -> Result<PencilExtremum> {
    let parts = split(s, g, tol)?;
    if parts.kernel_basis.ncols() > 0 {
        let coupling = (&parts.s_herm * &parts.kernel_basis).norm();
        let threshold = tol.scale(s.dim(), s.op_norm());
        if coupling > threshold {
            return Err(Error::VerificationFailed {
                name: "numerator vanishes on ker(G)".into(),
                margin: threshold - coupling,
            });
        }
    }
    let s_rr = parts.range_basis.adjoint() * &parts.s_herm * &parts.range_basis;
    let w = scaled_by_inverse_sqrt(&s_rr, &parts.range_eigenvalues);
    let w_herm = (&w + w.adjoint()).scale(0.5);
    let (values, vectors) = hermitian_eigen_sorted(&w_herm);
    let r = parts.range_basis.ncols();
    let value = values[r - 1].max(0.0);

    let x = vectors.column(r - 1).into_owned();
    let weights: Vec<Complex64> = parts
        .range_eigenvalues
        .iter()
        .map(|&v| Complex64::new(1.0 / v.sqrt(), 0.0))
        .collect();
    let y = Matrix::from_diagonal(&DVector::from_vec(weights)) * x;
    let mut witness = &parts.range_basis * y;
    let norm = witness.norm();
    witness /= Complex64::new(norm, 0.0);

    Ok(PencilExtremum { value, witness })
}

/// Pencil minimum of (S, G) with both forms compressed to a subspace. The
/// witness is returned in ambient coordinates.
pub fn pencil_min_restricted(
    s: &Operator,
    g: &Operator,
    subspace: &Subspace,
    tol: &Tolerance,
) -> Result<PencilExtremum> {
    if subspace.dim() == 0 {
        return Err(Error::ZeroPencil);
    }
    let b = subspace.basis();
    let s_c = Operator::from_matrix_unchecked(b.adjoint() * s.matrix() * b);
    let g_c = Operator::from_matrix_unchecked(b.adjoint() * g.matrix() * b);
    let reduced = pencil_min(&s_c, &g_c, tol)?;
    Ok(PencilExtremum {
        value: reduced.value,
        witness: subspace.embed(&reduced.witness),
    })
}

/// Pseudo-inverse of a Hermitian PSD block: invert the eigenvalues above
/// the tolerance scale (for a PSD matrix they are its singular values).
fn pinv_psd(m: &Matrix, tol: &Tolerance) -> Matrix {
    let herm = (m + m.adjoint()).scale(0.5);
    let (values, vectors) = hermitian_eigen_sorted(&herm);
    let n = m.nrows();
    let eps = tol.scale(n.max(1), values[n - 1].abs());
    let inverted: Vec<Complex64> = values
        .iter()
        .map(|&v| {
            if v > eps {
                Complex64::new(1.0 / v, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let d = Matrix::from_diagonal(&DVector::from_vec(inverted));
    &vectors * d * vectors.adjoint()
}
