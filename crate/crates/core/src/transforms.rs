//! Executable bound propagation: every constructive result that turns known
//! frame bounds into bounds for a modified system.
//!
//! Each operation checks its hypotheses numerically (reporting a margin per
//! hypothesis, never assuming one silently) and verifies its conclusion
//! against the optimal bounds of the target system before returning. A
//! propagated lower bound must never exceed the optimal lower bound, and a
//! propagated upper bound must never fall below the optimal upper bound;
//! violations surface as [`Error::VerificationFailed`].

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::ControlledFrameSpec;
use crate::operator::{inner, Matrix, Operator};
use crate::pencil::{pencil_max, pencil_min_restricted};
use crate::probe::unit_vector;
use crate::subspace::Subspace;
use crate::tol::Tolerance;

const HYPOTHESIS_SAMPLES: usize = 200;
const HYPOTHESIS_SAMPLE_SEED: u64 = 0x7e57;

/// Identifies which propagation rule produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    RestrictToRange,
    TransferOperator,
    CombineOperators,
    StripToPlain,
    LiftFromPlain,
    UnitaryImage,
    UnitaryImageCorollary,
    Perturbation,
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TransformKind::RestrictToRange => "restrict_to_range",
            TransformKind::TransferOperator => "transfer_frame_to",
            TransformKind::CombineOperators => "combine_k",
            TransformKind::StripToPlain => "strip_controllers/to_plain",
            TransformKind::LiftFromPlain => "strip_controllers/from_plain",
            TransformKind::UnitaryImage => "unitary_transform",
            TransformKind::UnitaryImageCorollary => "unitary_transform_corollary",
            TransformKind::Perturbation => "perturb_check",
        };
        f.write_str(name)
    }
}

/// A checked hypothesis: non-negative margin means satisfied (thresholds are
/// folded into the margin).
#[derive(Debug, Clone)]
pub struct HypothesisMargin {
    pub name: String,
    pub margin: f64,
}

/// Frame bounds derived by a propagation rule, with the numerically checked
/// hypotheses that license them.
#[derive(Debug, Clone)]
pub struct PropagatedBounds {
    pub lower: f64,
    pub upper: f64,
    pub source: TransformKind,
    pub hypotheses: Vec<HypothesisMargin>,
}

fn check(hypotheses: &mut Vec<HypothesisMargin>, name: &str, margin: f64) -> Result<()> {
    hypotheses.push(HypothesisMargin {
        name: name.to_string(),
        margin,
    });
    if margin < 0.0 {
        return Err(Error::HypothesisFailed {
            name: name.to_string(),
            margin,
        });
    }
    Ok(())
}

fn commutator_norm(a: &Matrix, b: &Matrix) -> f64 {
    Operator::from_matrix_unchecked(a * b - b * a).op_norm()
}

/// Validates that (lower, upper) are bounds the spec actually satisfies, by
/// comparison with the optimal ones.
fn check_given_bounds(
    hypotheses: &mut Vec<HypothesisMargin>,
    spec: &ControlledFrameSpec,
    lower: f64,
    upper: f64,
    label: &str,
    tol: &Tolerance,
) -> Result<(f64, f64)> {
    if !(lower.is_finite() && upper.is_finite() && lower > 0.0 && lower <= upper) {
        return Err(Error::InvalidInput(format!(
            "bounds for {label} must satisfy 0 < lower <= upper < inf, got ({lower}, {upper})"
        )));
    }
    let report = spec.classify(tol)?;
    let scale = tol.scale(spec.dim(), report.upper.abs().max(1.0));
    check(
        hypotheses,
        &format!("{label}: given lower bound is valid"),
        report.lower + scale - lower,
    )?;
    check(
        hypotheses,
        &format!("{label}: given upper bound is valid"),
        upper + scale - report.upper,
    )?;
    Ok((report.lower, report.upper))
}

/// Bounds for the system viewed over R_K only: the lower constant improves
/// to A/‖(K*)†‖² for vectors in the range of K, the Bessel bound is
/// unchanged. Verified by sampling the restricted lower inequality.
pub fn restrict_to_range(
    spec: &ControlledFrameSpec,
    lower: f64,
    upper: f64,
    tol: &Tolerance,
) -> Result<PropagatedBounds> {
    let n = spec.dim();
    let k = spec.range_operator();
    if k.op_norm() <= tol.scale(n, 1.0) {
        return Err(Error::ZeroOperator { name: "K" });
    }
    let mut hypotheses = Vec::new();
    check_given_bounds(&mut hypotheses, spec, lower, upper, "spec", tol)?;

    let k_adj_pinv_norm = k.adjoint().pinv(tol).op_norm();
    let restricted_lower = lower / (k_adj_pinv_norm * k_adj_pinv_norm);

    // Sampled check of A/‖(K*)†‖²·‖f‖² ≤ frame_sum(f) over f ∈ R_K.
    let k_range = k.range_basis(tol);
    let scale = tol.scale(n, upper.abs().max(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(HYPOTHESIS_SAMPLE_SEED);
    let mut worst = f64::INFINITY;
    for _ in 0..HYPOTHESIS_SAMPLES {
        let f = k_range.embed(&unit_vector(&mut rng, k_range.dim()));
        let sum = spec.frame_sum(&f, tol)?;
        worst = worst.min(sum - restricted_lower * f.norm_squared());
    }
    if worst < -scale {
        return Err(Error::VerificationFailed {
            name: "restricted lower bound on sampled range vectors".into(),
            margin: worst,
        });
    }

    Ok(PropagatedBounds {
        lower: restricted_lower,
        upper,
        source: TransformKind::RestrictToRange,
        hypotheses,
    })
}

/// Minimal λ ≥ 0 with T·T* ⪯ λ·K·K*, defined whenever range(T) ⊆ range(K).
/// ‖T*z‖ ≤ √λ·‖K*z‖ holds for every z.
pub fn douglas_lambda(t: &Operator, k: &Operator, tol: &Tolerance) -> Result<f64> {
    if t.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: t.dim(),
        });
    }
    let n = t.dim();
    let k_range = k.range_basis(tol);
    let residual = Operator::from_matrix_unchecked(
        t.matrix() - k_range.projection().matrix() * t.matrix(),
    )
    .op_norm();
    let threshold = tol.scale(n, t.op_norm());
    if residual > threshold {
        return Err(Error::RangeNotContained {
            deviation: residual,
            threshold,
        });
    }
    let tt = Operator::from_matrix_unchecked(t.matrix() * t.matrix().adjoint());
    let kk = Operator::from_matrix_unchecked(k.matrix() * k.matrix().adjoint());
    let ext = pencil_max(&tt, &kk, tol)?;
    Ok(ext.value)
}

/// Transfers frame bounds from K to any T with range(T) ⊆ range(K): the
/// lower bound divides by the Douglas constant λ, the Bessel bound is
/// unchanged. Verified against the optimal bounds of the T-system.
pub fn transfer_frame_to(
    spec: &ControlledFrameSpec,
    lower: f64,
    upper: f64,
    t: &Operator,
    tol: &Tolerance,
) -> Result<PropagatedBounds> {
    let mut hypotheses = Vec::new();
    check_given_bounds(&mut hypotheses, spec, lower, upper, "spec", tol)?;

    let lambda = douglas_lambda(t, spec.range_operator(), tol)?;
    if lambda <= tol.scale(spec.dim(), 1.0) {
        return Err(Error::ZeroOperator { name: "T" });
    }
    check(
        &mut hypotheses,
        "douglas constant is positive",
        lambda - tol.scale(spec.dim(), 1.0),
    )?;
    let propagated = PropagatedBounds {
        lower: lower / lambda,
        upper,
        source: TransformKind::TransferOperator,
        hypotheses,
    };

    let t_spec = spec.with_range_operator(t.clone())?;
    let report = t_spec.classify(tol)?;
    let scale = tol.scale(spec.dim(), report.upper.abs().max(1.0));
    if propagated.lower > report.lower + scale {
        return Err(Error::VerificationFailed {
            name: "transferred lower bound within optimal".into(),
            margin: report.lower + scale - propagated.lower,
        });
    }
    if propagated.upper < report.upper - scale {
        return Err(Error::VerificationFailed {
            name: "transferred upper bound covers optimal".into(),
            margin: propagated.upper - (report.upper - scale),
        });
    }
    Ok(propagated)
}

/// Bounds for the combined operator α·K₁ + β·K₂ when the ranges of K₁ and
/// K₂ are orthogonal:
///
/// ```text
///     lower = A₁A₂ / (2(|α|²A₁ + |β|²A₂)),   upper = (B₁ + B₂)/2.
/// ```
///
/// The displayed lower constant is only sound for balanced coefficients
/// (|α| = |β|, or A₁ = A₂); the verification step against the optimal
/// bounds of the combined system rejects unsound invocations.
#[allow(clippy::too_many_arguments)]
pub fn combine_k(
    spec: &ControlledFrameSpec,
    k1: &Operator,
    k2: &Operator,
    bounds1: (f64, f64),
    bounds2: (f64, f64),
    alpha: Complex64,
    beta: Complex64,
    tol: &Tolerance,
) -> Result<PropagatedBounds> {
    let n = spec.dim();
    if k1.dim() != n || k2.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k1.dim().min(k2.dim()),
        });
    }
    if !(alpha.is_finite() && beta.is_finite()) || alpha.norm() + beta.norm() <= 0.0 {
        return Err(Error::InvalidInput(
            "combination coefficients must be finite and not both zero".into(),
        ));
    }
    let overlap = Operator::from_matrix_unchecked(k2.matrix().adjoint() * k1.matrix()).op_norm();
    let threshold = tol.scale(n, k1.op_norm() * k2.op_norm());
    if overlap > threshold {
        return Err(Error::RangesNotOrthogonal { overlap, threshold });
    }

    let mut hypotheses = Vec::new();
    hypotheses.push(HypothesisMargin {
        name: "ranges orthogonal".into(),
        margin: threshold - overlap,
    });
    let spec1 = spec.with_range_operator(k1.clone())?;
    let spec2 = spec.with_range_operator(k2.clone())?;
    check_given_bounds(&mut hypotheses, &spec1, bounds1.0, bounds1.1, "K1", tol)?;
    check_given_bounds(&mut hypotheses, &spec2, bounds2.0, bounds2.1, "K2", tol)?;

    let (a1, b1) = bounds1;
    let (a2, b2) = bounds2;
    let denom = 2.0 * (alpha.norm_sqr() * a1 + beta.norm_sqr() * a2);
    let propagated = PropagatedBounds {
        lower: a1 * a2 / denom,
        upper: (b1 + b2) / 2.0,
        source: TransformKind::CombineOperators,
        hypotheses,
    };

    let combined = Operator::from_matrix_unchecked(
        k1.matrix().map(|z| z * alpha) + k2.matrix().map(|z| z * beta),
    );
    let report = spec.with_range_operator(combined)?.classify(tol)?;
    let scale = tol.scale(n, report.upper.abs().max(1.0));
    if propagated.lower > report.lower + scale {
        return Err(Error::VerificationFailed {
            name: "combined lower bound within optimal".into(),
            margin: report.lower + scale - propagated.lower,
        });
    }
    if propagated.upper < report.upper - scale {
        return Err(Error::VerificationFailed {
            name: "combined upper bound covers optimal".into(),
            margin: propagated.upper - (report.upper - scale),
        });
    }
    Ok(propagated)
}

/// Moves bounds between the controlled system and the plain K-fusion system
/// when C, C′ ∈ GL⁺ commute with K and with the plain frame operator
/// S = Σᵢwᵢ²π_{Wᵢ}:
///
/// * `from_plain`: plain bounds (A, B) become (m·m′·A, M·M′·B) where
///   (m, M) and (m′, M′) are the spectral bounds of C and C′;
/// * `to_plain`: controlled bounds (A_c, B_c) become
///   (A_c·‖(CC′)^{1/2}‖⁻², B_c·‖(CC′)^{−1/2}‖²).
///
/// Both directions are verified against the optimal bounds of their target
/// system.
pub fn strip_controllers(
    spec: &ControlledFrameSpec,
    tol: &Tolerance,
) -> Result<(PropagatedBounds, PropagatedBounds)> {
    let n = spec.dim();
    let c = spec.controller();
    let cp = spec.controller_prime();
    let k = spec.range_operator();
    // The commutation hypotheses refer to the plain fusion frame operator,
    // computed independently of S_{CC'}.
    let s_plain = spec.plain_frame_operator();

    let mut hypotheses = Vec::new();
    let (m_c, big_m_c) = c.pos_bounds(tol)?;
    check(
        &mut hypotheses,
        "C in GL+",
        m_c - tol.scale(n, c.op_norm()),
    )?;
    let (m_cp, big_m_cp) = cp.pos_bounds(tol)?;
    check(
        &mut hypotheses,
        "C' in GL+",
        m_cp - tol.scale(n, cp.op_norm()),
    )?;

    let comm_scale = |a: &Operator, b: &Operator| tol.scale(n, a.op_norm() * b.op_norm().max(1.0));
    check(
        &mut hypotheses,
        "CK = KC",
        comm_scale(c, k) - commutator_norm(c.matrix(), k.matrix()),
    )?;
    check(
        &mut hypotheses,
        "C'K = KC'",
        comm_scale(cp, k) - commutator_norm(cp.matrix(), k.matrix()),
    )?;
    check(
        &mut hypotheses,
        "SC = CS",
        comm_scale(c, &s_plain) - commutator_norm(c.matrix(), s_plain.matrix()),
    )?;

    // (CC')^{±1/2} only makes sense when the product is itself positive.
    let cc = Operator::from_matrix_unchecked(c.matrix() * cp.matrix());
    let cc_dev = cc.herm_deviation();
    check(
        &mut hypotheses,
        "CC' positive",
        tol.scale(n, cc.op_norm()) - cc_dev,
    )?;
    let (cc_min, cc_max) = cc.pos_bounds(tol)?;
    check(
        &mut hypotheses,
        "CC' in GL+",
        cc_min - tol.scale(n, cc.op_norm()),
    )?;

    let plain_spec = spec.uncontrolled();
    let plain_report = plain_spec.classify(tol)?;
    let controlled_report = spec.classify(tol)?;
    let scale = tol.scale(
        n,
        plain_report.upper.abs().max(controlled_report.upper.abs()).max(1.0),
    );

    // Plain bounds lifted to the controlled system.
    let from_plain = PropagatedBounds {
        lower: m_c * m_cp * plain_report.lower,
        upper: big_m_c * big_m_cp * plain_report.upper,
        source: TransformKind::LiftFromPlain,
        hypotheses: hypotheses.clone(),
    };
    if from_plain.lower > controlled_report.lower + scale {
        return Err(Error::VerificationFailed {
            name: "lifted lower bound within optimal".into(),
            margin: controlled_report.lower + scale - from_plain.lower,
        });
    }
    if from_plain.upper < controlled_report.upper - scale {
        return Err(Error::VerificationFailed {
            name: "lifted upper bound covers optimal".into(),
            margin: from_plain.upper - (controlled_report.upper - scale),
        });
    }

    // Controlled bounds stripped down to the plain system. ‖(CC')^{1/2}‖² is
    // the top eigenvalue of CC', ‖(CC')^{-1/2}‖² the reciprocal bottom one.
    let to_plain = PropagatedBounds {
        lower: controlled_report.lower / cc_max,
        upper: controlled_report.upper / cc_min,
        source: TransformKind::StripToPlain,
        hypotheses,
    };
    if to_plain.lower > plain_report.lower + scale {
        return Err(Error::VerificationFailed {
            name: "stripped lower bound within optimal".into(),
            margin: plain_report.lower + scale - to_plain.lower,
        });
    }
    if to_plain.upper < plain_report.upper - scale {
        return Err(Error::VerificationFailed {
            name: "stripped upper bound covers optimal".into(),
            margin: to_plain.upper - (plain_report.upper - scale),
        });
    }

    Ok((to_plain, from_plain))
}

fn unitary_image_spec(
    spec: &ControlledFrameSpec,
    u: &Operator,
    tol: &Tolerance,
) -> Result<ControlledFrameSpec> {
    let subspaces = spec
        .system()
        .items()
        .iter()
        .map(|(w, _)| Subspace::orthonormalize_columns(&(u.matrix() * w.basis()), tol))
        .collect();
    spec.with_subspaces(subspaces)
}

fn verify_transport(
    new_spec: &ControlledFrameSpec,
    propagated: &PropagatedBounds,
    tol: &Tolerance,
) -> Result<()> {
    let report = new_spec.classify(tol)?;
    let scale = tol.scale(new_spec.dim(), report.upper.abs().max(1.0));
    if propagated.lower > report.lower + scale {
        return Err(Error::VerificationFailed {
            name: "transported lower bound within optimal".into(),
            margin: report.lower + scale - propagated.lower,
        });
    }
    if propagated.upper < report.upper - scale {
        return Err(Error::VerificationFailed {
            name: "transported upper bound covers optimal".into(),
            margin: propagated.upper - (report.upper - scale),
        });
    }
    Ok(())
}

/// Image system {(U·Wᵢ, wᵢ)} for invertible U with U*C = CU* and
/// K*(U*)⁻¹ = (U*)⁻¹K*, stated for specs with C′ = C. Bounds scale by
/// ‖U‖²‖U⁻¹‖².
pub fn unitary_transform(
    spec: &ControlledFrameSpec,
    u: &Operator,
    tol: &Tolerance,
) -> Result<(ControlledFrameSpec, PropagatedBounds)> {
    let n = spec.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.dim(),
        });
    }
    let c = spec.controller();
    let mut hypotheses = Vec::new();
    check(
        &mut hypotheses,
        "C' = C",
        tol.scale(n, c.op_norm())
            - Operator::from_matrix_unchecked(c.matrix() - spec.controller_prime().matrix())
                .op_norm(),
    )?;
    let smin = u.min_singular_value();
    let threshold = tol.scale(n, u.op_norm());
    if smin <= threshold {
        return Err(Error::NotInvertible {
            singular_value: smin,
            threshold,
        });
    }
    check(
        &mut hypotheses,
        "U*C = CU*",
        tol.scale(n, u.op_norm() * c.op_norm())
            - commutator_norm(&u.matrix().adjoint(), c.matrix()),
    )?;
    let u_inv = u
        .matrix()
        .clone()
        .try_inverse()
        .expect("U verified invertible");
    let u_adj_inv = u_inv.adjoint();
    let k_adj = spec.range_operator().matrix().adjoint();
    check(
        &mut hypotheses,
        "K*(U*)^-1 = (U*)^-1 K*",
        tol.scale(n, spec.range_operator().op_norm() * u.op_norm())
            - commutator_norm(&k_adj, &u_adj_inv),
    )?;

    let report = spec.classify(tol)?;
    let u_norm = u.op_norm();
    let u_inv_norm = Operator::from_matrix_unchecked(u_inv).op_norm();
    let factor = u_norm * u_norm * u_inv_norm * u_inv_norm;

    let new_spec = unitary_image_spec(spec, u, tol)?;
    let propagated = PropagatedBounds {
        lower: report.lower / factor,
        upper: report.upper * factor,
        source: TransformKind::UnitaryImage,
        hypotheses,
    };
    verify_transport(&new_spec, &propagated, tol)?;
    Ok((new_spec, propagated))
}

/// Image system for unitary U with U⁻¹C = CU⁻¹ and K*U = UK*. Since
/// ‖U‖ = ‖U⁻¹‖ = 1, the propagated bounds equal the originals.
pub fn unitary_transform_corollary(
    spec: &ControlledFrameSpec,
    u: &Operator,
    tol: &Tolerance,
) -> Result<(ControlledFrameSpec, PropagatedBounds)> {
    let n = spec.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.dim(),
        });
    }
    let unitary_dev = Operator::from_matrix_unchecked(
        u.matrix().adjoint() * u.matrix() - Matrix::identity(n, n),
    )
    .op_norm();
    let threshold = tol.scale(n, u.op_norm().max(1.0));
    if unitary_dev > threshold {
        return Err(Error::NotUnitary {
            deviation: unitary_dev,
            threshold,
        });
    }
    let c = spec.controller();
    let mut hypotheses = Vec::new();
    check(
        &mut hypotheses,
        "C' = C",
        tol.scale(n, c.op_norm())
            - Operator::from_matrix_unchecked(c.matrix() - spec.controller_prime().matrix())
                .op_norm(),
    )?;
    hypotheses.push(HypothesisMargin {
        name: "U unitary".into(),
        margin: threshold - unitary_dev,
    });
    let u_inv = u.matrix().adjoint();
    check(
        &mut hypotheses,
        "U^-1 C = C U^-1",
        tol.scale(n, c.op_norm()) - commutator_norm(&u_inv, c.matrix()),
    )?;
    check(
        &mut hypotheses,
        "K*U = UK*",
        tol.scale(n, spec.range_operator().op_norm())
            - commutator_norm(&spec.range_operator().matrix().adjoint(), u.matrix()),
    )?;

    let report = spec.classify(tol)?;
    let new_spec = unitary_image_spec(spec, u, tol)?;
    let propagated = PropagatedBounds {
        lower: report.lower,
        upper: report.upper,
        source: TransformKind::UnitaryImageCorollary,
        hypotheses,
    };
    verify_transport(&new_spec, &propagated, tol)?;
    Ok((new_spec, propagated))
}

/// Perturbation of the subspace family: if the difference form
/// D = Σᵢwᵢ²·C′*(π_{Vᵢ} − π_{Wᵢ})·C satisfies 0 ≺ D ⪯ R·I with
/// 0 < R < A, the V-system is Bessel with bound R + B and satisfies the
/// lower inequality on R_K with constant A − R·‖K†‖².
///
/// The lower constant must itself be positive; this is checked as an
/// additional runtime hypothesis since 0 < R < A alone does not force it.
pub fn perturb_check(
    spec: &ControlledFrameSpec,
    subspaces_v: &[Subspace],
    r: f64,
    lower: f64,
    upper: f64,
    tol: &Tolerance,
) -> Result<PropagatedBounds> {
    let n = spec.dim();
    if !(r.is_finite() && r > 0.0 && r < lower) {
        return Err(Error::InvalidInput(format!(
            "perturbation level must satisfy 0 < R < lower bound, got R = {r}, lower = {lower}"
        )));
    }
    if subspaces_v.len() != spec.system().len() {
        return Err(Error::DimensionMismatch {
            expected: spec.system().len(),
            found: subspaces_v.len(),
        });
    }
    let mut hypotheses = Vec::new();
    check_given_bounds(&mut hypotheses, spec, lower, upper, "spec", tol)?;

    let cp_adj = spec.controller_prime().matrix().adjoint();
    let mut d = Matrix::zeros(n, n);
    for ((w, weight), v) in spec.system().items().iter().zip(subspaces_v) {
        if v.ambient_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.ambient_dim(),
            });
        }
        let delta = v.projection().matrix() - w.projection().matrix();
        d += (&cp_adj * delta * spec.controller().matrix()).scale(weight * weight);
    }
    let d = Operator::from_matrix_unchecked(d);

    let d_threshold = tol.scale(n, d.op_norm());
    check(
        &mut hypotheses,
        "D self-adjoint",
        d_threshold - d.herm_deviation(),
    )?;
    let (d_min, d_max) = d.pos_bounds(tol)?;
    check(&mut hypotheses, "D strictly positive", d_min - d_threshold)?;
    check(&mut hypotheses, "D bounded by R", r + d_threshold - d_max)?;

    // Sampled form of the same condition, as stated: 0 < ⟨Df,f⟩ ≤ R‖f‖².
    let mut rng = ChaCha8Rng::seed_from_u64(HYPOTHESIS_SAMPLE_SEED);
    let mut sampled_min = f64::INFINITY;
    let mut sampled_max = f64::NEG_INFINITY;
    for _ in 0..HYPOTHESIS_SAMPLES {
        let f = unit_vector(&mut rng, n);
        let q = inner(&d.apply(&f), &f).re;
        sampled_min = sampled_min.min(q);
        sampled_max = sampled_max.max(q);
    }
    check(&mut hypotheses, "sampled form positive", sampled_min)?;
    check(
        &mut hypotheses,
        "sampled form bounded by R",
        r + d_threshold - sampled_max,
    )?;

    let k = spec.range_operator();
    let k_pinv_norm = k.pinv(tol).op_norm();
    let lower_const = lower - r * k_pinv_norm * k_pinv_norm;
    check(
        &mut hypotheses,
        "A - R||Kdagger||^2 positive",
        lower_const - tol.scale(n, 1.0),
    )?;

    let propagated = PropagatedBounds {
        lower: lower_const,
        upper: r + upper,
        source: TransformKind::Perturbation,
        hypotheses,
    };

    // Conclusion versus the optimal bounds of the V-system: Bessel on all of
    // H, lower inequality on R_K.
    let v_spec = spec.with_subspaces(subspaces_v.to_vec())?;
    let (v_upper, _) = v_spec.optimal_upper_bound(tol)?;
    let scale = tol.scale(n, v_upper.abs().max(1.0));
    if v_upper > propagated.upper + scale {
        return Err(Error::VerificationFailed {
            name: "perturbed Bessel bound covers optimal".into(),
            margin: propagated.upper + scale - v_upper,
        });
    }
    let k_range = k.range_basis(tol);
    if k_range.dim() == 0 {
        return Err(Error::ZeroOperator { name: "K" });
    }
    let s_v = v_spec.frame_operator();
    let kk = Operator::from_matrix_unchecked(k.matrix() * k.matrix().adjoint());
    let restricted = pencil_min_restricted(&s_v, &kk, &k_range, tol)?;
    if restricted.value < propagated.lower - scale {
        return Err(Error::VerificationFailed {
            name: "perturbed lower bound within optimal on range".into(),
            margin: restricted.value - (propagated.lower - scale),
        });
    }
    Ok(propagated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::fixtures::{diagonal_example, parseval_system};
    use crate::frame::FusionSystem;
    use crate::operator::Vector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn restrict_identity_k_keeps_bounds() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let b = restrict_to_range(&spec, 1.0, 1.0, &tol).unwrap();
        assert!((b.lower - 1.0).abs() <= 1e-12);
        assert!((b.upper - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn restrict_diagonal_example() {
        // n = 4, K = diag(1/√(i+1)): ‖(K*)†‖² = 4 so the lower bound drops
        // to αβ/4.
        let tol = Tolerance::default();
        let spec = diagonal_example(4, 2.0, 3.0);
        let b = restrict_to_range(&spec, 6.0, 6.0, &tol).unwrap();
        assert!((b.lower - 1.5).abs() <= 1e-9);
        assert!((b.upper - 6.0).abs() <= 1e-12);
    }

    #[test]
    fn restrict_scaled_identity() {
        // K = 2I: ‖(K*)†‖² = 1/4, so the restricted lower bound is 4A, which
        // the optimal bounds on R_K = H confirm.
        let tol = Tolerance::default();
        let spec = parseval_system(3)
            .with_range_operator(Operator::from_matrix_unchecked(
                Matrix::identity(3, 3).scale(2.0),
            ))
            .unwrap();
        let report = spec.classify(&tol).unwrap();
        assert!((report.lower - 0.25).abs() <= 1e-12);
        let b = restrict_to_range(&spec, report.lower, report.upper, &tol).unwrap();
        assert!((b.lower - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn douglas_examples() {
        let tol = Tolerance::default();
        let k = diagonal_example(3, 1.0, 1.0).range_operator().clone();
        assert!((douglas_lambda(&k, &k, &tol).unwrap() - 1.0).abs() <= 1e-9);

        let two_k = Operator::from_matrix_unchecked(k.matrix().scale(2.0));
        assert!((douglas_lambda(&two_k, &k, &tol).unwrap() - 4.0).abs() <= 1e-9);

        let t = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let k = Operator::from_real_diagonal(&[2.0, 1.0]).unwrap();
        assert!((douglas_lambda(&t, &k, &tol).unwrap() - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn douglas_rejects_range_escape() {
        let tol = Tolerance::default();
        let t = Operator::identity(2);
        let k = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            douglas_lambda(&t, &k, &tol),
            Err(Error::RangeNotContained { .. })
        ));
    }

    #[test]
    fn douglas_minimality() {
        // λ certifies the Loewner bound and fails slightly below it.
        let tol = Tolerance::default();
        let t = Operator::from_real_diagonal(&[1.2, 0.4, 0.0]).unwrap();
        let k = Operator::from_real_diagonal(&[2.0, 0.5, 1.0]).unwrap();
        let lambda = douglas_lambda(&t, &k, &tol).unwrap();
        let tt = Operator::from_matrix_unchecked(t.matrix() * t.matrix().adjoint());
        let kk = |factor: f64| {
            Operator::from_matrix_unchecked(
                (k.matrix() * k.matrix().adjoint()).scale(factor),
            )
        };
        assert!(tt.loewner_leq(&kk(lambda), &tol).unwrap());
        assert!(!tt.loewner_leq(&kk(lambda * (1.0 - 1e-6)), &tol).unwrap());
    }

    #[test]
    fn transfer_examples() {
        let tol = Tolerance::default();
        let spec = diagonal_example(4, 2.0, 3.0);
        let report = spec.classify(&tol).unwrap();

        let same = transfer_frame_to(
            &spec,
            report.lower,
            report.upper,
            spec.range_operator(),
            &tol,
        )
        .unwrap();
        assert!((same.lower - report.lower).abs() <= 1e-9);

        // T = K/2: λ = 1/4, so the lower bound quadruples — exactly matching
        // the optimal bounds for T.
        let half = Operator::from_matrix_unchecked(spec.range_operator().matrix().scale(0.5));
        let b = transfer_frame_to(&spec, report.lower, report.upper, &half, &tol).unwrap();
        assert!((b.lower - 4.0 * report.lower).abs() <= 1e-7);
    }

    #[test]
    fn transfer_contractions_stay_valid() {
        let tol = Tolerance::default();
        let spec = diagonal_example(3, 2.0, 3.0);
        let report = spec.classify(&tol).unwrap();
        // K composed with contractions keeps range(T) ⊆ range(K); the
        // in-operation verification compares against the optimal T-bounds.
        for i in 0..50 {
            let x = 0.1 + 0.8 * (i as f64 / 50.0);
            let m = Operator::from_real_diagonal(&[x, 1.0 - x / 2.0, x / 2.0]).unwrap();
            let t = Operator::from_matrix_unchecked(spec.range_operator().matrix() * m.matrix());
            let b = transfer_frame_to(&spec, report.lower, report.upper, &t, &tol).unwrap();
            let t_report = spec.with_range_operator(t).unwrap().classify(&tol).unwrap();
            assert!(b.lower <= t_report.lower + 1e-9);
        }
    }

    #[test]
    fn combine_formula_instantiation() {
        // A₁ = A₂ = B₁ = B₂ = 1, α = β = 1 → (1/4, 1).
        let tol = Tolerance::default();
        let spec = parseval_system(2);
        let k1 = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let k2 = Operator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let one = c(1.0, 0.0);
        let b = combine_k(&spec, &k1, &k2, (1.0, 1.0), (1.0, 1.0), one, one, &tol).unwrap();
        assert!((b.lower - 0.25).abs() <= 1e-12);
        assert!((b.upper - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn combine_degenerate_coefficient() {
        // β = 0 degenerates the formula to A₂/2, still below the optimal
        // bound for K₁ on this balanced instance.
        let tol = Tolerance::default();
        let spec = parseval_system(2);
        let k1 = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let k2 = Operator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let b = combine_k(
            &spec,
            &k1,
            &k2,
            (1.0, 1.0),
            (1.0, 1.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            &tol,
        )
        .unwrap();
        assert!((b.lower - 0.5).abs() <= 1e-12);
        let k1_report = spec.with_range_operator(k1).unwrap().classify(&tol).unwrap();
        assert!(b.lower <= k1_report.lower + 1e-12);
    }

    #[test]
    fn range_orthogonality_matches_sampled_inner_products() {
        // ‖K₂*K₁‖ ≤ tol ⇔ ⟨K₁*f, K₂*f⟩ vanishes on sampled vectors.
        use rand::SeedableRng;
        let tol = Tolerance::default();
        let orthogonal = (
            Operator::from_real_diagonal(&[1.0, 0.0, 0.0]).unwrap(),
            Operator::from_real_diagonal(&[0.0, 0.7, 1.0]).unwrap(),
        );
        let overlapping = (
            Operator::from_real_diagonal(&[1.0, 0.3, 0.0]).unwrap(),
            Operator::from_real_diagonal(&[0.0, 0.7, 1.0]).unwrap(),
        );
        for (k1, k2, expect_orthogonal) in
            [(orthogonal.0, orthogonal.1, true), (overlapping.0, overlapping.1, false)]
        {
            let overlap =
                Operator::from_matrix_unchecked(k2.matrix().adjoint() * k1.matrix()).op_norm();
            let threshold = tol.scale(3, k1.op_norm() * k2.op_norm());
            assert_eq!(overlap <= threshold, expect_orthogonal);

            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            let mut sampled_max: f64 = 0.0;
            for _ in 0..200 {
                let f = crate::probe::unit_vector(&mut rng, 3);
                let ip = inner(&k1.adjoint().apply(&f), &k2.adjoint().apply(&f)).norm();
                sampled_max = sampled_max.max(ip);
            }
            assert_eq!(sampled_max <= threshold, expect_orthogonal);
        }
    }

    #[test]
    fn combine_rejects_overlapping_ranges() {
        let tol = Tolerance::default();
        let spec = parseval_system(2);
        let k1 = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let one = c(1.0, 0.0);
        assert!(matches!(
            combine_k(&spec, &k1, &k1, (1.0, 1.0), (1.0, 1.0), one, one, &tol),
            Err(Error::RangesNotOrthogonal { .. })
        ));
    }

    #[test]
    fn combine_rejects_unbalanced_unsound_constant() {
        // With A₁ ≠ A₂ and |α| ≠ |β| the displayed constant can exceed the
        // optimal lower bound of the combined system; the verification step
        // refuses to return it.
        let tol = Tolerance::default();
        let items = vec![
            (Subspace::coordinate(2, 0), 1.0),
            (Subspace::coordinate(2, 1), 10.0_f64.sqrt()),
        ];
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            Operator::identity(2),
            Operator::identity(2),
            Operator::identity(2),
            &tol,
        )
        .unwrap();
        let k1 = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let k2 = Operator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let result = combine_k(
            &spec,
            &k1,
            &k2,
            (1.0, 10.0),
            (10.0, 10.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            &tol,
        );
        assert!(matches!(result, Err(Error::VerificationFailed { .. })));
    }

    #[test]
    fn strip_identity_controllers() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let (to_plain, from_plain) = strip_controllers(&spec, &tol).unwrap();
        assert!((to_plain.lower - 1.0).abs() <= 1e-12);
        assert!((to_plain.upper - 1.0).abs() <= 1e-12);
        assert!((from_plain.lower - 1.0).abs() <= 1e-12);
        assert!((from_plain.upper - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn strip_scalar_controllers() {
        // C = 2I, C′ = 3I: controlled bounds are exactly 6× the plain ones.
        let tol = Tolerance::default();
        let spec = diagonal_example(4, 2.0, 3.0);
        let plain = spec.uncontrolled().classify(&tol).unwrap();
        let controlled = spec.classify(&tol).unwrap();
        let (to_plain, from_plain) = strip_controllers(&spec, &tol).unwrap();
        assert!((from_plain.lower - 6.0 * plain.lower).abs() <= 1e-9);
        assert!((from_plain.upper - 6.0 * plain.upper).abs() <= 1e-9);
        assert!((from_plain.lower - controlled.lower).abs() <= 1e-9);
        assert!((to_plain.lower - controlled.lower / 6.0).abs() <= 1e-9);
        assert!((to_plain.upper - controlled.upper / 6.0).abs() <= 1e-9);
    }

    #[test]
    fn strip_rejects_non_commuting_controller() {
        // K = [[0,1],[0,0]] does not commute with C = diag(1,2).
        let tol = Tolerance::default();
        let items = vec![
            (Subspace::coordinate(2, 0), 1.0),
            (Subspace::coordinate(2, 1), 1.0),
        ];
        let k =
            Operator::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let ctrl = Operator::from_real_diagonal(&[1.0, 2.0]).unwrap();
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            ctrl.clone(),
            ctrl,
            k,
            &tol,
        )
        .unwrap();
        match strip_controllers(&spec, &tol) {
            Err(Error::HypothesisFailed { name, .. }) => assert_eq!(name, "CK = KC"),
            other => panic!("expected HypothesisFailed, got {other:?}"),
        }
    }

    #[test]
    fn unitary_identity_and_scaling() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let report = spec.classify(&tol).unwrap();

        let (new_spec, b) = unitary_transform(&spec, &Operator::identity(3), &tol).unwrap();
        assert!((b.lower - report.lower).abs() <= 1e-12);
        assert!((b.upper - report.upper).abs() <= 1e-12);
        for ((w_new, _), (w_old, _)) in
            new_spec.system().items().iter().zip(spec.system().items())
        {
            assert!(
                (w_new.projection().matrix() - w_old.projection().matrix()).norm() <= 1e-12
            );
        }

        // U = 2I: ‖U‖²‖U⁻¹‖² = 1 and the subspaces are unchanged as spans.
        let two = Operator::from_matrix_unchecked(Matrix::identity(3, 3).scale(2.0));
        let (new_spec, b) = unitary_transform(&spec, &two, &tol).unwrap();
        assert!((b.lower - report.lower).abs() <= 1e-9);
        assert!((b.upper - report.upper).abs() <= 1e-9);
        for ((w_new, _), (w_old, _)) in
            new_spec.system().items().iter().zip(spec.system().items())
        {
            assert!(
                (w_new.projection().matrix() - w_old.projection().matrix()).norm() <= 1e-9
            );
        }
    }

    #[test]
    fn unitary_permutation_preserves_bounds() {
        // Coordinate permutation on the diagonal example with scalar C and
        // scalar K, so both commutation hypotheses hold exactly.
        let tol = Tolerance::default();
        let spec = diagonal_example(4, 2.0, 2.0)
            .with_range_operator(Operator::from_matrix_unchecked(
                Matrix::identity(4, 4).scale(0.7),
            ))
            .unwrap();
        let report = spec.classify(&tol).unwrap();

        let mut p = Matrix::zeros(4, 4);
        for i in 0..4 {
            p[((i + 1) % 4, i)] = c(1.0, 0.0);
        }
        let u = Operator::new(p).unwrap();
        let (new_spec, b) = unitary_transform(&spec, &u, &tol).unwrap();
        let new_report = new_spec.classify(&tol).unwrap();
        assert!((new_report.lower - report.lower).abs() <= 1e-9);
        assert!((new_report.upper - report.upper).abs() <= 1e-9);
        assert!(b.lower <= new_report.lower + 1e-9);
        assert!(b.upper >= new_report.upper - 1e-9);
    }

    #[test]
    fn corollary_phase_matrix() {
        let tol = Tolerance::default();
        let spec = diagonal_example(3, 2.0, 2.0)
            .with_range_operator(Operator::from_matrix_unchecked(
                Matrix::identity(3, 3).scale(0.5),
            ))
            .unwrap();
        let report = spec.classify(&tol).unwrap();

        let (_, b) = unitary_transform_corollary(&spec, &Operator::identity(3), &tol).unwrap();
        assert!((b.lower - report.lower).abs() <= 1e-12);

        let phases: Vec<Complex64> = [0.3, 1.1, -0.4]
            .iter()
            .map(|&t: &f64| Complex64::new(t.cos(), t.sin()))
            .collect();
        let u = Operator::new(Matrix::from_diagonal(&nalgebra::DVector::from_vec(
            phases,
        )))
        .unwrap();
        let (new_spec, b) = unitary_transform_corollary(&spec, &u, &tol).unwrap();
        let new_report = new_spec.classify(&tol).unwrap();
        assert!((b.lower - new_report.lower).abs() <= 1e-9);
        assert!((b.upper - new_report.upper).abs() <= 1e-9);
    }

    #[test]
    fn corollary_rejects_non_unitary() {
        let tol = Tolerance::default();
        let spec = parseval_system(2);
        let u = Operator::from_real_diagonal(&[2.0, 1.0]).unwrap();
        assert!(matches!(
            unitary_transform_corollary(&spec, &u, &tol),
            Err(Error::NotUnitary { .. })
        ));
    }

    /// Perturbation instance where the difference form is strictly positive:
    /// every duplicated low-weight item has its subspace enlarged by one
    /// fresh coordinate direction, so D is a positive diagonal operator.
    fn enlargement_instance() -> (ControlledFrameSpec, Vec<Subspace>) {
        let tol = Tolerance::default();
        let n = 4;
        let mut items: Vec<(Subspace, f64)> = (0..n)
            .map(|i| (Subspace::coordinate(n, i), 1.0))
            .collect();
        let eta = 0.25;
        for i in 0..n {
            items.push((Subspace::coordinate(n, i), eta));
        }
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            Operator::identity(n),
            Operator::identity(n),
            Operator::identity(n),
            &tol,
        )
        .unwrap();
        // V enlarges each duplicate item i by coordinate (i+1) mod n.
        let mut subspaces_v: Vec<Subspace> =
            (0..n).map(|i| Subspace::coordinate(n, i)).collect();
        for i in 0..n {
            let mut basis = Matrix::zeros(n, 2);
            basis[(i, 0)] = c(1.0, 0.0);
            basis[((i + 1) % n, 1)] = c(1.0, 0.0);
            subspaces_v.push(Subspace::new(n, basis, &tol).unwrap());
        }
        (spec, subspaces_v)
    }

    #[test]
    fn perturb_enlargement_instance() {
        let tol = Tolerance::default();
        let (spec, subspaces_v) = enlargement_instance();
        let report = spec.classify(&tol).unwrap();
        // D = η²·I exactly, so R = η² is admissible.
        let r = 0.25 * 0.25;
        let b = perturb_check(&spec, &subspaces_v, r, report.lower, report.upper, &tol).unwrap();
        assert!((b.upper - (r + report.upper)).abs() <= 1e-12);
        assert!((b.lower - (report.lower - r)).abs() <= 1e-12);
        let v_spec = spec.with_subspaces(subspaces_v).unwrap();
        let v_report = v_spec.classify(&tol).unwrap();
        assert!(v_report.upper <= b.upper + 1e-9);
        assert!(v_report.lower + 1e-9 >= b.lower);
    }

    #[test]
    fn perturb_rejects_unperturbed_family() {
        // V = W gives D = 0, which fails strict positivity.
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let subspaces: Vec<Subspace> = spec
            .system()
            .items()
            .iter()
            .map(|(w, _)| w.clone())
            .collect();
        match perturb_check(&spec, &subspaces, 0.5, 1.0, 1.0, &tol) {
            Err(Error::HypothesisFailed { name, .. }) => {
                assert_eq!(name, "D strictly positive");
            }
            other => panic!("expected HypothesisFailed, got {other:?}"),
        }
    }

    #[test]
    fn perturb_rejects_rotations() {
        // Dimension-preserving rotations make D traceless, hence never
        // strictly positive.
        let tol = Tolerance::default();
        let spec = diagonal_example(4, 2.0, 3.0);
        let theta: f64 = 0.05;
        let subspaces_v: Vec<Subspace> = (0..4)
            .map(|i| {
                let mut basis = Matrix::zeros(4, 1);
                basis[(i, 0)] = c(theta.cos(), 0.0);
                basis[((i + 1) % 4, 0)] = c(theta.sin(), 0.0);
                Subspace::new(4, basis, &tol).unwrap()
            })
            .collect();
        let report = spec.classify(&tol).unwrap();
        match perturb_check(
            &spec,
            &subspaces_v,
            report.lower / 2.0,
            report.lower,
            report.upper,
            &tol,
        ) {
            Err(Error::HypothesisFailed { .. }) => {}
            other => panic!("expected HypothesisFailed, got {other:?}"),
        }
    }

    #[test]
    fn perturb_rejects_out_of_range_r() {
        let tol = Tolerance::default();
        let (spec, subspaces_v) = enlargement_instance();
        let report = spec.classify(&tol).unwrap();
        let result = perturb_check(
            &spec,
            &subspaces_v,
            report.lower + 1.0,
            report.lower,
            report.upper,
            &tol,
        );
        assert!(matches!(result, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn propagated_lower_never_exceeds_optimal() {
        // Soundness across the rules on the diagonal family.
        let tol = Tolerance::default();
        let spec = diagonal_example(5, 2.0, 3.0);
        let report = spec.classify(&tol).unwrap();

        let b = restrict_to_range(&spec, report.lower, report.upper, &tol).unwrap();
        assert!(b.lower <= report.lower + 1e-9);

        let (to_plain, from_plain) = strip_controllers(&spec, &tol).unwrap();
        let plain = spec.uncontrolled().classify(&tol).unwrap();
        assert!(to_plain.lower <= plain.lower + 1e-9);
        assert!(from_plain.lower <= report.lower + 1e-9);

        let mut vector = Vector::zeros(5);
        vector[0] = c(1.0, 0.0);
        let _ = vector;
    }
}
