//! Controlled K-fusion frame systems: frame operator, analysis/synthesis
//! maps, optimal bounds, and definition-level verification.
//!
//! A spec bundles a weighted family {(Wᵢ, wᵢ)} with controllers C, C′ ∈
//! GL(ℂⁿ) and a range operator K. The quadratic form of interest is
//!
//! ```text
//!     Σᵢ wᵢ² ⟨π_{Wᵢ} C f, π_{Wᵢ} C′ f⟩
//! ```
//!
//! whose optimal constants against ‖K*f‖² (below) and ‖f‖² (above) are
//! computed spectrally: the upper bound is the largest eigenvalue of the
//! frame operator S = Σᵢ wᵢ² C′*·π_{Wᵢ}·C, and the lower bound is the
//! smallest value of the pencil (S, K·K*).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operator::{inner, Matrix, Operator, Vector};
use crate::pencil::{pencil_min, quotient};
use crate::probe::unit_vector;
use crate::subspace::Subspace;
use crate::tol::Tolerance;

/// Weighted family of closed subspaces {(Wᵢ, wᵢ)} with strictly positive
/// weights, all sharing one ambient dimension.
#[derive(Debug, Clone)]
pub struct FusionSystem {
    ambient_dim: usize,
    items: Vec<(Subspace, f64)>,
}

impl FusionSystem {
    pub fn new(items: Vec<(Subspace, f64)>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidInput("fusion system must be nonempty".into()))?;
        let ambient_dim = first.0.ambient_dim();
        for (subspace, weight) in &items {
            if subspace.ambient_dim() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: subspace.ambient_dim(),
                });
            }
            // Weights are strictly positive by definition; zero-weight items
            // are rejected rather than dropped.
            if !(weight.is_finite() && *weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "weights must be finite and positive, got {weight}"
                )));
            }
        }
        Ok(Self { ambient_dim, items })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(Subspace, f64)] {
        &self.items
    }
}

/// A fusion system controlled by C and C′, measured against the range
/// operator K.
#[derive(Debug, Clone)]
pub struct ControlledFrameSpec {
    system: FusionSystem,
    c: Operator,
    c_prime: Operator,
    k: Operator,
}

impl ControlledFrameSpec {
    /// Validates dimensions and GL(ℂⁿ) membership of both controllers
    /// (smallest singular value above the tolerance scale).
    pub fn new(
        system: FusionSystem,
        c: Operator,
        c_prime: Operator,
        k: Operator,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = system.ambient_dim();
        for op in [&c, &c_prime, &k] {
            if op.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: op.dim(),
                });
            }
        }
        for op in [&c, &c_prime] {
            let smin = op.min_singular_value();
            let threshold = tol.scale(n, op.op_norm());
            if smin <= threshold {
                return Err(Error::NotInvertible {
                    singular_value: smin,
                    threshold,
                });
            }
        }
        Ok(Self {
            system,
            c,
            c_prime,
            k,
        })
    }

    pub fn system(&self) -> &FusionSystem {
        &self.system
    }

    pub fn controller(&self) -> &Operator {
        &self.c
    }

    pub fn controller_prime(&self) -> &Operator {
        &self.c_prime
    }

    pub fn range_operator(&self) -> &Operator {
        &self.k
    }

    pub fn dim(&self) -> usize {
        self.system.ambient_dim()
    }

    /// Same system and controllers, different range operator.
    pub fn with_range_operator(&self, k: Operator) -> Result<Self> {
        if k.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: k.dim(),
            });
        }
        Ok(Self {
            system: self.system.clone(),
            c: self.c.clone(),
            c_prime: self.c_prime.clone(),
            k,
        })
    }

    /// Same controllers and K, different subspaces (weights kept in order).
    pub fn with_subspaces(&self, subspaces: Vec<Subspace>) -> Result<Self> {
        if subspaces.len() != self.system.len() {
            return Err(Error::DimensionMismatch {
                expected: self.system.len(),
                found: subspaces.len(),
            });
        }
        let items = subspaces
            .into_iter()
            .zip(self.system.items().iter().map(|(_, w)| *w))
            .collect();
        Ok(Self {
            system: FusionSystem::new(items)?,
            c: self.c.clone(),
            c_prime: self.c_prime.clone(),
            k: self.k.clone(),
        })
    }

    /// The same system with C = C′ = I (plain K-fusion frame).
    pub fn uncontrolled(&self) -> Self {
        Self {
            system: self.system.clone(),
            c: Operator::identity(self.dim()),
            c_prime: Operator::identity(self.dim()),
            k: self.k.clone(),
        }
    }

    /// Re(Σᵢ wᵢ²⟨π_{Wᵢ}Cf, π_{Wᵢ}C′f⟩). The definition presumes a real
    /// quantity; an imaginary part above the tolerance scale is an error.
    pub fn frame_sum(&self, f: &Vector, tol: &Tolerance) -> Result<f64> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.len(),
            });
        }
        let cf = self.c.apply(f);
        let cpf = self.c_prime.apply(f);
        let mut total = Complex64::new(0.0, 0.0);
        for (subspace, weight) in self.system.items() {
            // ⟨π a, π b⟩ = ⟨Bᴴa, Bᴴb⟩ for an orthonormal basis B of the
            // subspace.
            let a = subspace.coordinates(&cf);
            let b = subspace.coordinates(&cpf);
            total += inner(&a, &b).scale(weight * weight);
        }
        let threshold = tol.scale(self.dim(), total.norm().max(f.norm_squared()));
        if total.im.abs() > threshold {
            return Err(Error::NonRealForm {
                imaginary: total.im.abs(),
                threshold,
            });
        }
        Ok(total.re)
    }

    /// Frame operator S = Σᵢ wᵢ²·C′*·π_{Wᵢ}·C, so that ⟨Sf, f⟩ equals the
    /// frame sum.
    pub fn frame_operator(&self) -> Operator {
        let n = self.dim();
        let mut s = Matrix::zeros(n, n);
        let cp_adj = self.c_prime.matrix().adjoint();
        for (subspace, weight) in self.system.items() {
            let term = &cp_adj * subspace.projection().matrix() * self.c.matrix();
            s += term.scale(weight * weight);
        }
        Operator::from_matrix_unchecked(s)
    }

    /// Plain fusion frame operator Σᵢ wᵢ²·π_{Wᵢ} (controllers ignored).
    pub fn plain_frame_operator(&self) -> Operator {
        let n = self.dim();
        let mut s = Matrix::zeros(n, n);
        for (subspace, weight) in self.system.items() {
            s += subspace.projection().matrix().scale(weight * weight);
        }
        Operator::from_matrix_unchecked(s)
    }

    /// Positive square roots (C′*·π_{Wᵢ}·C)^{1/2}, one per item. Errors with
    /// the offending index if the standing positivity hypothesis fails.
    fn block_roots(&self, tol: &Tolerance) -> Result<Vec<Operator>> {
        let cp_adj = self.c_prime.matrix().adjoint();
        self.system
            .items()
            .iter()
            .enumerate()
            .map(|(index, (subspace, _))| {
                let block = Operator::from_matrix_unchecked(
                    &cp_adj * subspace.projection().matrix() * self.c.matrix(),
                );
                block.sqrt_psd(tol).map_err(|err| match err {
                    Error::NotSelfAdjoint {
                        deviation,
                        threshold,
                    }
                    | Error::NotPositive {
                        min_eigenvalue: deviation,
                        threshold,
                    } => Error::NotPositiveBlock {
                        index,
                        deviation,
                        threshold,
                    },
                    other => other,
                })
            })
            .collect()
    }

    /// Analysis map f ↦ (wᵢ·(C′*π_{Wᵢ}C)^{1/2}·f)ᵢ. Requires every block
    /// C′*π_{Wᵢ}C to be a positive operator.
    pub fn analysis_apply(&self, f: &Vector, tol: &Tolerance) -> Result<BlockVector> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.len(),
            });
        }
        let roots = self.block_roots(tol)?;
        let blocks = roots
            .iter()
            .zip(self.system.items())
            .map(|(root, (_, weight))| root.apply(f).scale(*weight))
            .collect();
        Ok(BlockVector { blocks })
    }

    /// Synthesis map (gᵢ)ᵢ ↦ Σᵢ wᵢ·(C′*π_{Wᵢ}C)^{1/2}·gᵢ, the adjoint of
    /// the analysis map.
    pub fn synthesis_apply(&self, g: &BlockVector, tol: &Tolerance) -> Result<Vector> {
        if g.len() != self.system.len() {
            return Err(Error::DimensionMismatch {
                expected: self.system.len(),
                found: g.len(),
            });
        }
        let n = self.dim();
        for block in &g.blocks {
            if block.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: block.len(),
                });
            }
        }
        let roots = self.block_roots(tol)?;
        let mut out = Vector::zeros(n);
        for ((root, (_, weight)), block) in roots.iter().zip(self.system.items()).zip(&g.blocks) {
            out += root.apply(block).scale(*weight);
        }
        Ok(out)
    }

    /// Frame operator after the self-adjointness gate used by every bound
    /// operation.
    fn checked_frame_operator(&self, tol: &Tolerance) -> Result<Operator> {
        let s = self.frame_operator();
        let deviation = s.herm_deviation();
        let threshold = tol.scale(self.dim(), s.op_norm());
        if deviation > threshold {
            return Err(Error::NotSelfAdjoint {
                deviation,
                threshold,
            });
        }
        Ok(s)
    }

    /// Optimal Bessel bound: the largest eigenvalue of S, with the attaining
    /// unit eigenvector.
    pub fn optimal_upper_bound(&self, tol: &Tolerance) -> Result<(f64, Vector)> {
        let s = self.checked_frame_operator(tol)?;
        let (values, vectors) = s.hermitian_eigen();
        let n = self.dim();
        Ok((values[n - 1], vectors.column(n - 1).into_owned()))
    }

    /// Optimal lower bound: the largest A with A·‖K*f‖² ≤ frame sum for all
    /// f, computed as the minimum of the pencil (S, K·K*). Vectors in
    /// ker(K*) impose no constraint.
    pub fn optimal_lower_bound(&self, tol: &Tolerance) -> Result<(f64, Vector)> {
        let threshold = tol.scale(self.dim(), 1.0);
        if self.k.op_norm() <= threshold {
            return Err(Error::ZeroOperator { name: "K" });
        }
        let s = self.checked_frame_operator(tol)?;
        let kk = Operator::from_matrix_unchecked(self.k.matrix() * self.k.matrix().adjoint());
        let ext = pencil_min(&s, &kk, tol)?;
        Ok((ext.value, ext.witness))
    }

    /// Assembles both optimal bounds, the frame/Parseval classification, and
    /// cross-checks the Bessel characterization ‖T*‖ ≤ √B on the stacked
    /// synthesis map when the positivity hypothesis holds.
    pub fn classify(&self, tol: &Tolerance) -> Result<BoundsReport> {
        let (upper, upper_witness) = self.optimal_upper_bound(tol)?;
        let (lower, lower_witness) = self.optimal_lower_bound(tol)?;
        let scale = tol.scale(self.dim(), upper.abs().max(1.0));
        let is_frame = lower > scale;
        let is_parseval = (lower - 1.0).abs() <= scale && (upper - 1.0).abs() <= scale;

        match self.block_roots(tol) {
            Ok(roots) => {
                let n = self.dim();
                let mut stacked = Matrix::zeros(n * roots.len(), n);
                for (i, (root, (_, weight))) in
                    roots.iter().zip(self.system.items()).enumerate()
                {
                    let block = root.matrix().scale(*weight);
                    stacked.view_mut((i * n, 0), (n, n)).copy_from(&block);
                }
                let synthesis_norm = crate::operator::spectral_norm(&stacked);
                let margin = upper.max(0.0).sqrt() + scale - synthesis_norm;
                if margin < 0.0 {
                    return Err(Error::VerificationFailed {
                        name: "synthesis norm bounded by sqrt of Bessel bound".into(),
                        margin,
                    });
                }
            }
            // Without the positivity hypothesis the analysis map is not
            // defined; the spectral bounds above remain valid.
            Err(Error::NotPositiveBlock { .. }) => {}
            Err(other) => return Err(other),
        }

        Ok(BoundsReport {
            lower,
            upper,
            lower_witness,
            upper_witness,
            is_frame,
            is_parseval,
            tol_used: *tol,
        })
    }

    /// Randomized direct check of A·‖K*f‖² ≤ frame sum ≤ B·‖f‖² on `trials`
    /// seeded unit vectors. Reports every violation and the worst margins.
    pub fn verify_definition(
        &self,
        lower: f64,
        upper: f64,
        trials: usize,
        seed: u64,
        tol: &Tolerance,
    ) -> Result<DefinitionReport> {
        if trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        let k_adj = self.k.adjoint();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut violations = Vec::new();
        let mut worst_lower = f64::INFINITY;
        let mut worst_upper = f64::INFINITY;
        let scale = tol.scale(self.dim(), upper.abs().max(1.0));
        for index in 0..trials {
            let f = unit_vector(&mut rng, self.dim());
            let sum = self.frame_sum(&f, tol)?;
            let lower_margin = sum - lower * k_adj.apply(&f).norm_squared();
            let upper_margin = upper * f.norm_squared() - sum;
            worst_lower = worst_lower.min(lower_margin);
            worst_upper = worst_upper.min(upper_margin);
            if lower_margin < -scale || upper_margin < -scale {
                violations.push(DefinitionViolation {
                    index,
                    vector: f,
                    lower_margin,
                    upper_margin,
                });
            }
        }
        Ok(DefinitionReport {
            trials,
            seed,
            worst_lower_margin: worst_lower,
            worst_upper_margin: worst_upper,
            violations,
        })
    }

    /// Operator sandwich A·KK* ⪯ S ⪯ B·I for the bounds of a report.
    pub fn frame_operator_sandwich(
        &self,
        report: &BoundsReport,
        tol: &Tolerance,
    ) -> Result<bool> {
        let s = self.checked_frame_operator(tol)?;
        let kk = Operator::from_matrix_unchecked(
            (self.k.matrix() * self.k.matrix().adjoint()).scale(report.lower),
        );
        let upper_cap = Operator::from_matrix_unchecked(
            Matrix::identity(self.dim(), self.dim()).scale(report.upper),
        );
        Ok(kk.loewner_leq(&s, tol)? && s.loewner_leq(&upper_cap, tol)?)
    }

    /// Restriction S|_{R_K} : R_K → S(R_K) in orthonormal bases, inverted,
    /// with the certified norm bracket B⁻¹‖f‖ ≤ ‖S⁻¹f‖ ≤ A⁻¹‖K†‖²‖f‖ for
    /// f ∈ S(R_K). The bracket is certified both spectrally and on sampled
    /// vectors.
    pub fn s_restricted_inverse(&self, tol: &Tolerance) -> Result<RestrictedInverse> {
        let report = self.classify(tol)?;
        if !report.is_frame {
            return Err(Error::NotAFrame {
                lower: report.lower,
            });
        }
        let k_range = self.k.range_basis(tol);
        if k_range.dim() == 0 {
            return Err(Error::ZeroOperator { name: "K" });
        }
        let s = self.checked_frame_operator(tol)?;
        let image_cols = s.matrix() * k_range.basis();
        let image = Subspace::orthonormalize_columns(&image_cols, tol);
        if image.dim() != k_range.dim() {
            return Err(Error::SingularRestriction {
                singular_value: 0.0,
                threshold: tol.scale(self.dim(), s.op_norm()),
            });
        }
        // Matrix of S|_{R_K} from R_K-coordinates to S(R_K)-coordinates.
        let restricted = image.basis().adjoint() * s.matrix() * k_range.basis();
        let smin = crate::operator::smallest_singular_value(&restricted);
        let threshold = tol.scale(self.dim(), s.op_norm());
        if smin <= threshold {
            return Err(Error::SingularRestriction {
                singular_value: smin,
                threshold,
            });
        }
        let inverse = restricted
            .try_inverse()
            .expect("restriction verified nonsingular");

        let k_pinv_norm = self.k.pinv(tol).op_norm();
        let norm_lower = 1.0 / report.upper;
        let norm_upper = k_pinv_norm * k_pinv_norm / report.lower;

        // Spectral certificate: singular values of the inverse map are the
        // norms ‖S⁻¹f‖/‖f‖ over S(R_K).
        let inv_min = crate::operator::smallest_singular_value(&inverse);
        let inv_max = crate::operator::spectral_norm(&inverse);
        let scale = tol.scale(self.dim(), norm_upper.max(1.0));
        if inv_min < norm_lower - scale {
            return Err(Error::VerificationFailed {
                name: "restricted inverse lower norm bound".into(),
                margin: inv_min - norm_lower,
            });
        }
        if inv_max > norm_upper + scale {
            return Err(Error::VerificationFailed {
                name: "restricted inverse upper norm bound".into(),
                margin: norm_upper - inv_max,
            });
        }

        let map = Operator::from_matrix_unchecked(
            k_range.basis() * &inverse * image.basis().adjoint(),
        );

        // Sampled certificate over S(R_K).
        let mut rng = ChaCha8Rng::seed_from_u64(RESTRICTED_INVERSE_SEED);
        for _ in 0..RESTRICTED_INVERSE_SAMPLES {
            let y = unit_vector(&mut rng, image.dim());
            let f = image.embed(&y);
            let norm = map.apply(&f).norm();
            if norm < norm_lower - scale || norm > norm_upper + scale {
                return Err(Error::VerificationFailed {
                    name: "restricted inverse sampled norm bracket".into(),
                    margin: (norm_lower - norm).max(norm - norm_upper),
                });
            }
        }

        Ok(RestrictedInverse {
            map,
            domain: image,
            codomain: k_range,
            norm_lower,
            norm_upper,
        })
    }
}

const RESTRICTED_INVERSE_SAMPLES: usize = 1000;
const RESTRICTED_INVERSE_SEED: u64 = 0x5f3c;

/// Element of the block space ⊕ᵢ ℂⁿ, one block per frame item.
#[derive(Debug, Clone)]
pub struct BlockVector {
    blocks: Vec<Vector>,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vector>) -> Self {
        Self { blocks }
    }

    pub fn zeros(count: usize, dim: usize) -> Self {
        Self {
            blocks: vec![Vector::zeros(dim); count],
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vector] {
        &self.blocks
    }

    /// Blockwise inner product Σᵢ ⟨aᵢ, bᵢ⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| inner(a, b))
            .sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }
}

/// Certified frame bounds with achieving vectors.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: Vector,
    pub upper_witness: Vector,
    pub is_frame: bool,
    pub is_parseval: bool,
    pub tol_used: Tolerance,
}

/// One sampled violation of the defining inequality.
#[derive(Debug, Clone)]
pub struct DefinitionViolation {
    pub index: usize,
    pub vector: Vector,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

/// Outcome of the randomized definition check.
#[derive(Debug, Clone)]
pub struct DefinitionReport {
    pub trials: usize,
    pub seed: u64,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
    pub violations: Vec<DefinitionViolation>,
}

impl DefinitionReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Inverse of the frame operator restricted to the range of K, as a map
/// S(R_K) → R_K embedded in ℂⁿ (it annihilates the orthogonal complement of
/// its domain).
#[derive(Debug, Clone)]
pub struct RestrictedInverse {
    pub map: Operator,
    /// S(R_K), the domain of the inverse.
    pub domain: Subspace,
    /// R_K, the codomain.
    pub codomain: Subspace,
    /// Certified ‖S⁻¹f‖ ≥ norm_lower·‖f‖ on the domain (= 1/B).
    pub norm_lower: f64,
    /// Certified ‖S⁻¹f‖ ≤ norm_upper·‖f‖ on the domain (= ‖K†‖²/A).
    pub norm_upper: f64,
}

/// Quotient frame_sum(f)/‖K*f‖² used by tightness checks.
pub fn lower_quotient(spec: &ControlledFrameSpec, f: &Vector) -> f64 {
    let s = spec.frame_operator();
    let kk = Operator::from_matrix_unchecked(
        spec.range_operator().matrix() * spec.range_operator().matrix().adjoint(),
    );
    quotient(&s, &kk, f)
}

/// Constructions shared by the unit tests of this crate.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Wᵢ = span{eᵢ}, wᵢ = 1, C = C′ = K = I: a Parseval system.
    pub(crate) fn parseval_system(n: usize) -> ControlledFrameSpec {
        let tol = Tolerance::default();
        let items = (0..n).map(|i| (Subspace::coordinate(n, i), 1.0)).collect();
        ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            Operator::identity(n),
            Operator::identity(n),
            Operator::identity(n),
            &tol,
        )
        .unwrap()
    }

    /// Truncation of the diagonal ℓ² example: Wᵢ = span{eᵢ},
    /// wᵢ = 1/√(i+1), C = αI, C′ = βI, K = diag(1/√(i+1)).
    pub(crate) fn diagonal_example(n: usize, alpha: f64, beta: f64) -> ControlledFrameSpec {
        let tol = Tolerance::default();
        let items = (0..n)
            .map(|i| {
                (
                    Subspace::coordinate(n, i),
                    1.0 / ((i + 1) as f64).sqrt(),
                )
            })
            .collect();
        let weights: Vec<f64> = (0..n).map(|i| 1.0 / ((i + 1) as f64).sqrt()).collect();
        let k = Operator::from_real_diagonal(&weights).unwrap();
        let c = Operator::from_matrix_unchecked(Matrix::identity(n, n).scale(alpha));
        let cp = Operator::from_matrix_unchecked(Matrix::identity(n, n).scale(beta));
        ControlledFrameSpec::new(FusionSystem::new(items).unwrap(), c, cp, k, &tol).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{diagonal_example, parseval_system};
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn e(n: usize, i: usize) -> Vector {
        Vector::from_fn(n, |j, _| if j == i { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    #[test]
    fn frame_sum_parseval_basis_vector() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        assert!((spec.frame_sum(&e(3, 0), &tol).unwrap() - 1.0).abs() <= 1e-12);
        let zero = Vector::zeros(3);
        assert!(spec.frame_sum(&zero, &tol).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn frame_sum_diagonal_example() {
        // n = 3, α = 2, β = 3, f = (1,1,1): 6 + 3 + 2 = 11.
        let tol = Tolerance::default();
        let spec = diagonal_example(3, 2.0, 3.0);
        let f = Vector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((spec.frame_sum(&f, &tol).unwrap() - 11.0).abs() <= 1e-12);
    }

    #[test]
    fn frame_operator_matches_hand_values() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        assert!((spec.frame_operator().matrix() - Matrix::identity(3, 3)).norm() <= 1e-12);

        let spec = diagonal_example(3, 2.0, 3.0);
        let expected = Operator::from_real_diagonal(&[6.0, 3.0, 2.0]).unwrap();
        assert!((spec.frame_operator().matrix() - expected.matrix()).norm() <= 1e-12);
        let _ = tol;
    }

    #[test]
    fn analysis_parseval_and_diagonal() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let blocks = spec.analysis_apply(&e(3, 0), &tol).unwrap();
        assert!((blocks.blocks()[0].clone() - e(3, 0)).norm() <= 1e-12);
        assert!(blocks.blocks()[1].norm() <= 1e-12);
        assert!(blocks.blocks()[2].norm() <= 1e-12);

        // n = 2, α = β = 1, f = (1,1) → blocks (e₁, e₂/√2), Σ‖·‖² = 1.5.
        let spec = diagonal_example(2, 1.0, 1.0);
        let f = Vector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let blocks = spec.analysis_apply(&f, &tol).unwrap();
        assert!((blocks.blocks()[0].clone() - e(2, 0)).norm() <= 1e-12);
        assert!((blocks.blocks()[1].clone() - e(2, 1).scale(0.5_f64.sqrt())).norm() <= 1e-12);
        let sum = spec.frame_sum(&f, &tol).unwrap();
        assert!((blocks.norm_squared() - sum).abs() <= 1e-12);
        assert!((blocks.norm_squared() - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn frame_sum_rejects_complex_forms() {
        // A non-scalar C′ against C = I makes the form genuinely complex at
        // suitable vectors.
        let tol = Tolerance::default();
        let items = vec![(Subspace::coordinate(2, 0), 1.0)];
        let cp = Operator::from_rows(2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)])
            .unwrap();
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            Operator::identity(2),
            cp,
            Operator::identity(2),
            &tol,
        )
        .unwrap();
        let f = Vector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        match spec.frame_sum(&f, &tol) {
            Err(Error::NonRealForm { .. }) => {}
            other => panic!("expected NonRealForm, got {other:?}"),
        }
    }

    #[test]
    fn analysis_rejects_non_positive_block() {
        // C = I with a non-scalar C′ and a coordinate subspace makes
        // C′*·π·C non-Hermitian.
        let tol = Tolerance::default();
        let items = vec![(Subspace::coordinate(2, 0), 1.0)];
        let cp = Operator::from_rows(2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)])
            .unwrap();
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            Operator::identity(2),
            cp,
            Operator::identity(2),
            &tol,
        )
        .unwrap();
        match spec.analysis_apply(&e(2, 0), &tol) {
            Err(Error::NotPositiveBlock { index: 0, .. }) => {}
            other => panic!("expected NotPositiveBlock, got {other:?}"),
        }
    }

    #[test]
    fn synthesis_is_adjoint_and_composes_to_s() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let g = BlockVector::new(vec![e(3, 0), Vector::zeros(3), Vector::zeros(3)]);
        assert!((spec.synthesis_apply(&g, &tol).unwrap() - e(3, 0)).norm() <= 1e-12);

        let zero = BlockVector::zeros(3, 3);
        assert!(spec.synthesis_apply(&zero, &tol).unwrap().norm() <= 1e-15);

        // synthesis(analysis(f)) = S·f on the diagonal example.
        let spec = diagonal_example(4, 2.0, 3.0);
        let f = Vector::from_fn(4, |i, _| c(0.3 + i as f64, 0.5 - 0.2 * i as f64));
        let blocks = spec.analysis_apply(&f, &tol).unwrap();
        let synth = spec.synthesis_apply(&blocks, &tol).unwrap();
        let sf = spec.frame_operator().apply(&f);
        assert!((synth - sf).norm() <= 1e-10);
    }

    #[test]
    fn optimal_upper_bound_examples() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let (b, _) = spec.optimal_upper_bound(&tol).unwrap();
        assert!((b - 1.0).abs() <= 1e-12);

        // n = 8, α = 2, β = 3: the Bessel bound is αβ = 6, attained at e₁.
        let spec = diagonal_example(8, 2.0, 3.0);
        let (b, witness) = spec.optimal_upper_bound(&tol).unwrap();
        assert!((b - 6.0).abs() <= 1e-9);
        let sum = spec.frame_sum(&witness, &tol).unwrap();
        assert!((sum - b * witness.norm_squared()).abs() <= 1e-9);
    }

    #[test]
    fn optimal_lower_bound_examples() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let (a, _) = spec.optimal_lower_bound(&tol).unwrap();
        assert!((a - 1.0).abs() <= 1e-12);

        // With the diagonal K the quotient is identically αβ.
        for n in [2usize, 5, 9] {
            let spec = diagonal_example(n, 2.0, 3.0);
            let (a, witness) = spec.optimal_lower_bound(&tol).unwrap();
            assert!((a - 6.0).abs() <= 1e-9, "n = {n}: got {a}");
            let q = lower_quotient(&spec, &witness);
            assert!((q - a).abs() <= 1e-9);
        }

        // With K = I the lower bound is αβ/n, decaying to zero.
        let mut previous = f64::INFINITY;
        for n in [4usize, 8, 16] {
            let spec = diagonal_example(n, 2.0, 3.0)
                .with_range_operator(Operator::identity(n))
                .unwrap();
            let (a, _) = spec.optimal_lower_bound(&tol).unwrap();
            assert!((a - 6.0 / n as f64).abs() <= 1e-9);
            assert!(a < previous);
            previous = a;
        }
    }

    #[test]
    fn classify_examples() {
        let tol = Tolerance::default();
        let report = parseval_system(3).classify(&tol).unwrap();
        assert!(report.is_frame && report.is_parseval);
        assert!((report.lower - 1.0).abs() <= 1e-12);
        assert!((report.upper - 1.0).abs() <= 1e-12);

        let report = diagonal_example(8, 2.0, 3.0).classify(&tol).unwrap();
        assert!(report.is_frame && !report.is_parseval);
        assert!((report.lower - 6.0).abs() <= 1e-9);
        assert!((report.upper - 6.0).abs() <= 1e-9);
    }

    #[test]
    fn classify_detects_non_frame() {
        // K projects onto e₂ while the only subspace is span{e₁}:
        // S = diag(1,0), K·K* = diag(0,1), so the lower bound is 0.
        let tol = Tolerance::default();
        let items = vec![(Subspace::coordinate(2, 0), 1.0)];
        let k = Operator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            Operator::identity(2),
            Operator::identity(2),
            k,
            &tol,
        )
        .unwrap();
        let report = spec.classify(&tol).unwrap();
        assert!(report.lower.abs() <= 1e-12);
        assert!(!report.is_frame);
        // The pencil quotient at f = e₂ is 0.
        let q = lower_quotient(&spec, &e(2, 1));
        assert!(q.abs() <= 1e-12);
    }

    #[test]
    fn verify_definition_examples() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let report = spec.verify_definition(1.0, 1.0, 500, 11, &tol).unwrap();
        assert!(report.pass());
        assert!(report.worst_lower_margin >= -1e-12);
        assert!(report.worst_upper_margin >= -1e-12);

        // The certified loose pair (αβ/2, αβ) passes.
        let spec = diagonal_example(6, 2.0, 3.0);
        let report = spec.verify_definition(3.0, 6.0, 500, 12, &tol).unwrap();
        assert!(report.pass());

        // An inflated lower bound fails and carries a witness.
        let report = spec.verify_definition(12.0, 6.0, 500, 13, &tol).unwrap();
        assert!(!report.pass());
        let witness = &report.violations[0];
        assert!(witness.lower_margin < 0.0);
        assert_eq!(witness.vector.len(), 6);
    }

    #[test]
    fn sandwich_examples() {
        let tol = Tolerance::default();
        let spec = parseval_system(3);
        let report = spec.classify(&tol).unwrap();
        assert!(spec.frame_operator_sandwich(&report, &tol).unwrap());

        let spec = diagonal_example(5, 2.0, 3.0);
        let mut report = spec.classify(&tol).unwrap();
        // The certified loose pair also passes the sandwich.
        report.lower = 3.0;
        assert!(spec.frame_operator_sandwich(&report, &tol).unwrap());
        // A deliberately inflated lower bound fails.
        report.lower = 12.0;
        assert!(!spec.frame_operator_sandwich(&report, &tol).unwrap());
    }

    #[test]
    fn restricted_inverse_parseval() {
        let tol = Tolerance::default();
        let inv = parseval_system(3).s_restricted_inverse(&tol).unwrap();
        assert!((inv.norm_lower - 1.0).abs() <= 1e-12);
        assert!((inv.norm_upper - 1.0).abs() <= 1e-12);
        let f = e(3, 1);
        assert!((inv.map.apply(&f) - f).norm() <= 1e-10);
    }

    #[test]
    fn restricted_inverse_diagonal_example() {
        // n = 4: S = diag(6,3,2,1.5), full-rank K, so the inverse acts as
        // multiplication by (i+1)/(αβ) on each coordinate.
        let tol = Tolerance::default();
        let spec = diagonal_example(4, 2.0, 3.0);
        let inv = spec.s_restricted_inverse(&tol).unwrap();
        for i in 0..4 {
            let f = e(4, i);
            let expected = (i + 1) as f64 / 6.0;
            assert!((inv.map.apply(&f) - f.scale(expected)).norm() <= 1e-9);
        }
        // Bracket constants 1/B and ‖K†‖²/A.
        assert!((inv.norm_lower - 1.0 / 6.0).abs() <= 1e-9);
        assert!((inv.norm_upper - 4.0 / 6.0).abs() <= 1e-9);
    }

    #[test]
    fn restricted_inverse_rank_deficient_k() {
        // K = diag(1,0) restricts S = diag(6,3) to span{e₁}: inverse 1/6.
        let tol = Tolerance::default();
        let spec = diagonal_example(2, 2.0, 3.0)
            .with_range_operator(Operator::from_real_diagonal(&[1.0, 0.0]).unwrap())
            .unwrap();
        let inv = spec.s_restricted_inverse(&tol).unwrap();
        assert_eq!(inv.codomain.dim(), 1);
        let f = e(2, 0);
        assert!((inv.map.apply(&f) - f.scale(1.0 / 6.0)).norm() <= 1e-10);
    }

    #[test]
    fn rejects_zero_weight() {
        let items = vec![(Subspace::coordinate(2, 0), 0.0)];
        assert!(FusionSystem::new(items).is_err());
    }

    #[test]
    fn rejects_singular_controller() {
        let tol = Tolerance::default();
        let items = vec![(Subspace::coordinate(2, 0), 1.0)];
        let singular = Operator::from_real_diagonal(&[1.0, 0.0]).unwrap();
        let result = ControlledFrameSpec::new(
            FusionSystem::new(items).unwrap(),
            singular,
            Operator::identity(2),
            Operator::identity(2),
            &tol,
        );
        assert!(matches!(result, Err(Error::NotInvertible { .. })));
    }
}
