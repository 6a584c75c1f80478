//! Theorem verification harness: generates hypothesis-satisfying instances,
//! applies each bound-propagation rule, and compares the propagated bounds
//! against the optimal ones of the target system.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ckff_core::{
    pencil_min_restricted, transforms, ControlledFrameSpec, FusionSystem, Matrix, Operator,
    PropagatedBounds, Subspace, Tolerance, Vector,
};

use crate::document::HypothesisDocument;
use crate::error::{CliError, Result};
use crate::generate::{self, GenConfig};

/// Registry of verifiable statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremKind {
    Sandwich,
    RestrictToRange,
    TransferFrameToT,
    CombineK,
    StripControllers,
    UnitaryTransform,
    UnitaryTransformCorollary,
    PerturbCheck,
}

impl TheoremKind {
    pub const REGISTRY: [TheoremKind; 8] = [
        TheoremKind::Sandwich,
        TheoremKind::RestrictToRange,
        TheoremKind::TransferFrameToT,
        TheoremKind::CombineK,
        TheoremKind::StripControllers,
        TheoremKind::UnitaryTransform,
        TheoremKind::UnitaryTransformCorollary,
        TheoremKind::PerturbCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TheoremKind::Sandwich => "sandwich",
            TheoremKind::RestrictToRange => "restrict_to_range",
            TheoremKind::TransferFrameToT => "transfer_frame_to_t",
            TheoremKind::CombineK => "combine_k",
            TheoremKind::StripControllers => "strip_controllers",
            TheoremKind::UnitaryTransform => "unitary_transform",
            TheoremKind::UnitaryTransformCorollary => "unitary_transform_corollary",
            TheoremKind::PerturbCheck => "perturb_check",
        }
    }
}

impl fmt::Display for TheoremKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        TheoremKind::REGISTRY
            .iter()
            .find(|t| t.name() == s)
            .copied()
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown theorem `{s}`; known: {}",
                    TheoremKind::REGISTRY
                        .iter()
                        .map(|t| t.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            })
    }
}

/// Test-only fault injection for the mutation sanity check.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Compose the frame operator check from raw blocks C′*π_{Wᵢ}C instead
    /// of their square roots.
    DropAnalysisSqrt,
}

/// Suite configuration: which theorems, how many seeded instances each, at
/// which maximal dimension.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub theorems: Vec<TheoremKind>,
    pub instances: usize,
    pub base_seed: u64,
    pub max_dim: usize,
    pub tol: Tolerance,
    #[doc(hidden)]
    pub mutation: Option<Mutation>,
}

impl SuiteConfig {
    pub fn new(theorems: Vec<TheoremKind>, instances: usize, base_seed: u64, max_dim: usize) -> Self {
        Self {
            theorems,
            instances,
            base_seed,
            max_dim,
            tol: Tolerance::default(),
            mutation: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_dim < 2 {
            return Err(CliError::Config("max_dim must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConclusionDocument {
    pub propagated_lower: f64,
    pub propagated_upper: f64,
    pub classify_lower: f64,
    pub classify_upper: f64,
    pub pass: bool,
}

/// One JSON line per verified instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance_id: String,
    pub seed: u64,
    pub theorem: String,
    pub hypotheses: Vec<HypothesisDocument>,
    pub conclusion: ConclusionDocument,
    pub timing_ms: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn suite_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Runs every configured theorem over its seeded instances. Reports are
/// ordered by (theorem, instance index) and deterministic in the base seed.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    config.validate()?;
    let mut reports = Vec::new();
    for (t_idx, theorem) in config.theorems.iter().enumerate() {
        for index in 0..config.instances {
            let seed = config
                .base_seed
                .wrapping_add((t_idx as u64) << 32)
                .wrapping_add(index as u64);
            let start = Instant::now();
            let outcome = run_instance(*theorem, seed, config);
            let timing_ms = start.elapsed().as_secs_f64() * 1e3;
            let report = match outcome {
                Ok((hypotheses, conclusion)) => {
                    let hyp_pass = hypotheses.iter().all(|h| h.pass);
                    let pass = hyp_pass && conclusion.pass;
                    VerificationReport {
                        instance_id: format!("{}-{index:03}", theorem.name()),
                        seed,
                        theorem: theorem.name().into(),
                        hypotheses,
                        conclusion,
                        timing_ms,
                        pass,
                        note: None,
                    }
                }
                Err(err) => VerificationReport {
                    instance_id: format!("{}-{index:03}", theorem.name()),
                    seed,
                    theorem: theorem.name().into(),
                    hypotheses: Vec::new(),
                    conclusion: ConclusionDocument {
                        propagated_lower: f64::NAN,
                        propagated_upper: f64::NAN,
                        classify_lower: f64::NAN,
                        classify_upper: f64::NAN,
                        pass: false,
                    },
                    timing_ms,
                    pass: false,
                    note: Some(err.to_string()),
                },
            };
            reports.push(report);
        }
    }
    Ok(reports)
}

type InstanceOutcome = (Vec<HypothesisDocument>, ConclusionDocument);

fn run_instance(
    theorem: TheoremKind,
    seed: u64,
    config: &SuiteConfig,
) -> Result<InstanceOutcome> {
    match theorem {
        TheoremKind::Sandwich => run_sandwich(seed, config),
        TheoremKind::RestrictToRange => run_restrict(seed, config),
        TheoremKind::TransferFrameToT => run_transfer(seed, config),
        TheoremKind::CombineK => run_combine(seed, config),
        TheoremKind::StripControllers => run_strip(seed, config),
        TheoremKind::UnitaryTransform => run_unitary(seed, config, false),
        TheoremKind::UnitaryTransformCorollary => run_unitary(seed, config, true),
        TheoremKind::PerturbCheck => run_perturb(seed, config),
    }
}

fn hypothesis(name: &str, margin: f64) -> HypothesisDocument {
    HypothesisDocument {
        name: name.into(),
        margin,
        pass: margin >= 0.0,
    }
}

fn margins_of(bounds: &PropagatedBounds) -> Vec<HypothesisDocument> {
    bounds
        .hypotheses
        .iter()
        .map(|h| hypothesis(&h.name, h.margin))
        .collect()
}

fn draw_dim<R: Rng>(rng: &mut R, config: &SuiteConfig) -> usize {
    rng.random_range(2..=config.max_dim)
}

fn positivity_config<R: Rng>(rng: &mut R, dim: usize, k_rank: usize, seed: u64) -> GenConfig {
    GenConfig {
        dim,
        n_subspaces: dim,
        max_subdim: 2.min(dim),
        controller_cond: rng.random_range(1.0..4.0),
        k_rank,
        seed,
        positivity: true,
    }
}

fn run_sandwich(seed: u64, config: &SuiteConfig) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);
    let cfg = positivity_config(&mut rng, dim, dim, seed ^ 0xABCD);
    let spec = generate::gen_instance(&cfg, tol)?;

    let s = spec.frame_operator();
    let threshold = tol.scale(dim, s.op_norm());
    let mut hypotheses = vec![hypothesis(
        "S self-adjoint",
        threshold - s.herm_deviation(),
    )];

    // Composite T*T, column by column — or, under the injected mutation,
    // the composite with the square roots dropped.
    let composite = match config.mutation {
        None => {
            let mut m = Matrix::zeros(dim, dim);
            for j in 0..dim {
                let mut e = Vector::zeros(dim);
                e[j] = Complex64::new(1.0, 0.0);
                let blocks = spec.analysis_apply(&e, tol)?;
                m.set_column(j, &spec.synthesis_apply(&blocks, tol)?);
            }
            m
        }
        Some(Mutation::DropAnalysisSqrt) => {
            let mut m = Matrix::zeros(dim, dim);
            let cp_adj = spec.controller_prime().matrix().adjoint();
            for (w, weight) in spec.system().items() {
                let block = &cp_adj * w.projection().matrix() * spec.controller().matrix();
                m += (block.adjoint() * &block).scale(weight * weight);
            }
            m
        }
    };
    hypotheses.push(hypothesis(
        "S = synthesis o analysis",
        threshold * 10.0 - (composite - s.matrix()).norm(),
    ));

    let report = spec.classify(tol)?;
    let sandwich = spec.frame_operator_sandwich(&report, tol)?;
    Ok((
        hypotheses,
        ConclusionDocument {
            propagated_lower: report.lower,
            propagated_upper: report.upper,
            classify_lower: report.lower,
            classify_upper: report.upper,
            pass: sandwich,
        },
    ))
}

fn run_restrict(seed: u64, config: &SuiteConfig) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);
    let k_rank = rng.random_range(1..=dim);
    let cfg = positivity_config(&mut rng, dim, k_rank, seed ^ 0xABCD);
    let spec = generate::gen_instance(&cfg, tol)?;
    let report = spec.classify(tol)?;

    let bounds = transforms::restrict_to_range(&spec, report.lower, report.upper, tol)?;

    // Optimal lower bound over R_K: smallest eigenvalue of S compressed to
    // the range of K.
    let k_range = spec.range_operator().range_basis(tol);
    let s = spec.frame_operator();
    let compressed = Operator::new(k_range.basis().adjoint() * s.matrix() * k_range.basis())?;
    let (restricted_lower, _) = compressed.pos_bounds(tol)?;
    let scale = tol.scale(dim, report.upper.max(1.0));
    let pass = bounds.lower <= restricted_lower + scale && bounds.upper + scale >= report.upper;
    Ok((
        margins_of(&bounds),
        ConclusionDocument {
            propagated_lower: bounds.lower,
            propagated_upper: bounds.upper,
            classify_lower: restricted_lower,
            classify_upper: report.upper,
            pass,
        },
    ))
}

fn run_transfer(seed: u64, config: &SuiteConfig) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);
    let k_rank = rng.random_range(1..=dim);
    let cfg = positivity_config(&mut rng, dim, k_rank, seed ^ 0xABCD);
    let spec = generate::gen_instance(&cfg, tol)?;
    let report = spec.classify(tol)?;

    // T = K·M for a random contraction M, renormalized to unit norm so the
    // optimal lower bound of the T-system stays below its Bessel bound.
    let raw = generate::gaussian_matrix(&mut rng, dim, dim);
    let contraction = raw.clone().unscale(Operator::new(raw)?.op_norm());
    let product = spec.range_operator().matrix() * contraction;
    let product_norm = Operator::new(product.clone())?.op_norm();
    if product_norm <= tol.scale(dim, 1.0) {
        return Err(CliError::Config("degenerate contraction draw".into()));
    }
    let t = Operator::new(product.unscale(product_norm))?;

    let bounds = transforms::transfer_frame_to(&spec, report.lower, report.upper, &t, tol)?;
    let t_report = spec.with_range_operator(t)?.classify(tol)?;
    let scale = tol.scale(dim, t_report.upper.max(1.0));
    let pass = bounds.lower <= t_report.lower + scale && bounds.upper + scale >= t_report.upper;
    Ok((
        margins_of(&bounds),
        ConclusionDocument {
            propagated_lower: bounds.lower,
            propagated_upper: bounds.upper,
            classify_lower: t_report.lower,
            classify_upper: t_report.upper,
            pass,
        },
    ))
}

fn run_combine(seed: u64, config: &SuiteConfig) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);
    let cfg = positivity_config(&mut rng, dim, dim, seed ^ 0xABCD);
    let spec = generate::gen_instance(&cfg, tol)?;

    // Orthogonal ranges from disjoint column blocks of one unitary.
    let q = generate::haar_unitary(&mut rng, dim);
    let r1 = rng.random_range(1..dim);
    let r2 = rng.random_range(1..=(dim - r1));
    let normalized_block = |rng: &mut ChaCha8Rng, offset: usize, rank: usize| -> Result<Operator> {
        let mut basis = Matrix::zeros(dim, rank);
        for j in 0..rank {
            basis.set_column(j, &q.column(offset + j));
        }
        let factors = generate::gaussian_matrix(rng, rank, dim);
        let raw = basis * factors;
        let norm = Operator::new(raw.clone())?.op_norm();
        Ok(Operator::new(raw.unscale(norm))?)
    };
    let k1 = normalized_block(&mut rng, 0, r1)?;
    let k2 = normalized_block(&mut rng, r1, r2)?;

    // Balanced coefficients: the displayed combination constant is only
    // sound when |alpha| = |beta|.
    let phase = |rng: &mut ChaCha8Rng| {
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        Complex64::new(theta.cos(), theta.sin())
    };
    let alpha = phase(&mut rng);
    let beta = phase(&mut rng);

    let report1 = spec.with_range_operator(k1.clone())?.classify(tol)?;
    let report2 = spec.with_range_operator(k2.clone())?.classify(tol)?;
    let bounds = transforms::combine_k(
        &spec,
        &k1,
        &k2,
        (report1.lower, report1.upper),
        (report2.lower, report2.upper),
        alpha,
        beta,
        tol,
    )?;

    let combined = Operator::new(k1.matrix().map(|z| z * alpha) + k2.matrix().map(|z| z * beta))?;
    let combined_report = spec.with_range_operator(combined)?.classify(tol)?;
    let scale = tol.scale(dim, combined_report.upper.max(1.0));
    let pass = bounds.lower <= combined_report.lower + scale
        && bounds.upper + scale >= combined_report.upper;
    Ok((
        margins_of(&bounds),
        ConclusionDocument {
            propagated_lower: bounds.lower,
            propagated_upper: bounds.upper,
            classify_lower: combined_report.lower,
            classify_upper: combined_report.upper,
            pass,
        },
    ))
}

/// Coordinate-family instance with K diagonal in the shared eigenbasis, so
/// C, C′, K, and the plain frame operator all commute.
fn commuting_family_spec<R: Rng>(
    rng: &mut R,
    dim: usize,
    k_rank: usize,
    tol: &Tolerance,
) -> Result<(ControlledFrameSpec, Matrix)> {
    let q = generate::haar_unitary(rng, dim);
    let mut items = Vec::new();
    for start in 0..dim {
        let width = rng.random_range(1..=2.min(dim));
        let mut basis = Matrix::zeros(dim, width);
        for j in 0..width {
            basis.set_column(j, &q.column((start + j) % dim));
        }
        items.push((
            Subspace::new(dim, basis, tol)?,
            rng.random_range(0.5..1.5),
        ));
    }
    let cond: f64 = rng.random_range(1.0..4.0);
    let eigenvalues: Vec<f64> = (0..dim)
        .map(|_| rng.random_range(0.5..0.5 * cond.max(1.2) + 0.5))
        .collect();
    let diag: Vec<Complex64> = eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let c = Operator::new(&q * Matrix::from_diagonal(&DVector::from_vec(diag)) * q.adjoint())?;
    let factor = rng.random_range(0.5..2.0);
    let cp = Operator::new(c.matrix().scale(factor))?;

    let mut k_diag = vec![0.0; dim];
    let mut coords: Vec<usize> = (0..dim).collect();
    coords.shuffle(rng);
    for (j, &coord) in coords.iter().take(k_rank).enumerate() {
        k_diag[coord] = if j == 0 { 1.0 } else { rng.random_range(0.35..1.0) };
    }
    let k_entries: Vec<Complex64> = k_diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let k = Operator::new(&q * Matrix::from_diagonal(&DVector::from_vec(k_entries)) * q.adjoint())?;

    let spec = ControlledFrameSpec::new(FusionSystem::new(items)?, c, cp, k, tol)?;
    Ok((spec, q))
}

fn run_strip(seed: u64, config: &SuiteConfig) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);
    let k_rank = rng.random_range(1..=dim);
    let (spec, _) = commuting_family_spec(&mut rng, dim, k_rank, tol)?;

    let (to_plain, from_plain) = transforms::strip_controllers(&spec, tol)?;
    let controlled = spec.classify(tol)?;
    let plain = spec.uncontrolled().classify(tol)?;
    let scale = tol.scale(dim, controlled.upper.max(plain.upper).max(1.0));
    let pass = from_plain.lower <= controlled.lower + scale
        && from_plain.upper + scale >= controlled.upper
        && to_plain.lower <= plain.lower + scale
        && to_plain.upper + scale >= plain.upper;

    let mut hypotheses = margins_of(&from_plain);
    hypotheses.push(hypothesis(
        "stripped lower bound within plain optimal",
        plain.lower + scale - to_plain.lower,
    ));
    hypotheses.push(hypothesis(
        "stripped upper bound covers plain optimal",
        to_plain.upper + scale - plain.upper,
    ));
    Ok((
        hypotheses,
        ConclusionDocument {
            propagated_lower: from_plain.lower,
            propagated_upper: from_plain.upper,
            classify_lower: controlled.lower,
            classify_upper: controlled.upper,
            pass,
        },
    ))
}

/// Permutation with its orbit partition.
fn random_permutation_with_orbits<R: Rng>(rng: &mut R, dim: usize) -> (Vec<usize>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..dim).collect();
    perm.shuffle(rng);
    let mut orbit_of = vec![usize::MAX; dim];
    let mut orbit = 0;
    for start in 0..dim {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let mut j = start;
        while orbit_of[j] == usize::MAX {
            orbit_of[j] = orbit;
            j = perm[j];
        }
        orbit += 1;
    }
    (perm, orbit_of)
}

fn run_unitary(seed: u64, config: &SuiteConfig, corollary: bool) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);

    // Orbit structure: U permutes the shared eigenbasis; every operator
    // that must commute with U is constant on the permutation's orbits.
    let q = generate::haar_unitary(&mut rng, dim);
    let (perm, orbit_of) = random_permutation_with_orbits(&mut rng, dim);
    let orbit_count = orbit_of.iter().copied().max().unwrap_or(0) + 1;

    let orbit_values = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> Vec<f64> {
        (0..orbit_count).map(|_| rng.random_range(lo..hi)).collect()
    };

    let c_values = orbit_values(&mut rng, 0.5, 2.0);
    let c_diag: Vec<Complex64> = (0..dim)
        .map(|j| Complex64::new(c_values[orbit_of[j]], 0.0))
        .collect();
    let c = Operator::new(
        &q * Matrix::from_diagonal(&DVector::from_vec(c_diag)) * q.adjoint(),
    )?;

    // K zeroes a strict subset of orbits when possible, normalized to 1.
    let mut k_values = orbit_values(&mut rng, 0.35, 1.0);
    if orbit_count > 1 && rng.random_range(0..2) == 1 {
        let drop = rng.random_range(0..orbit_count);
        k_values[drop] = 0.0;
    }
    let k_max = k_values.iter().cloned().fold(0.0, f64::max);
    if k_max <= 0.0 {
        return Err(CliError::Config("degenerate K draw".into()));
    }
    let k_diag: Vec<Complex64> = (0..dim)
        .map(|j| Complex64::new(k_values[orbit_of[j]] / k_max, 0.0))
        .collect();
    let k = Operator::new(
        &q * Matrix::from_diagonal(&DVector::from_vec(k_diag)) * q.adjoint(),
    )?;

    // U = Q·Π·diag(δ)·Q* with δ constant on orbits: invertible for the
    // theorem, unit-modulus phases for the corollary.
    let mut m = Matrix::zeros(dim, dim);
    if corollary {
        let phases: Vec<f64> = (0..orbit_count)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        for j in 0..dim {
            let theta = phases[orbit_of[j]];
            m[(perm[j], j)] = Complex64::new(theta.cos(), theta.sin());
        }
    } else {
        let scales = orbit_values(&mut rng, 0.6, 1.7);
        for j in 0..dim {
            m[(perm[j], j)] = Complex64::new(scales[orbit_of[j]], 0.0);
        }
    }
    let u = Operator::new(&q * m * q.adjoint())?;

    let mut items = Vec::new();
    for start in 0..dim {
        let width = rng.random_range(1..=2.min(dim));
        let mut basis = Matrix::zeros(dim, width);
        for j in 0..width {
            basis.set_column(j, &q.column((start + j) % dim));
        }
        items.push((
            Subspace::new(dim, basis, tol)?,
            rng.random_range(0.5..1.5),
        ));
    }
    let spec = ControlledFrameSpec::new(FusionSystem::new(items)?, c.clone(), c, k, tol)?;
    let old_report = spec.classify(tol)?;

    let (new_spec, bounds) = if corollary {
        transforms::unitary_transform_corollary(&spec, &u, tol)?
    } else {
        transforms::unitary_transform(&spec, &u, tol)?
    };
    let new_report = new_spec.classify(tol)?;
    let scale = tol.scale(dim, new_report.upper.max(1.0));
    let mut pass = bounds.lower <= new_report.lower + scale
        && bounds.upper + scale >= new_report.upper;
    let mut hypotheses = margins_of(&bounds);
    if corollary {
        // Isometric transport leaves the optimal bounds invariant.
        hypotheses.push(hypothesis(
            "optimal bounds invariant under isometry",
            scale
                - (new_report.lower - old_report.lower)
                    .abs()
                    .max((new_report.upper - old_report.upper).abs()),
        ));
        pass = pass && hypotheses.last().is_some_and(|h| h.pass);
    }
    Ok((
        hypotheses,
        ConclusionDocument {
            propagated_lower: bounds.lower,
            propagated_upper: bounds.upper,
            classify_lower: new_report.lower,
            classify_upper: new_report.upper,
            pass,
        },
    ))
}

fn run_perturb(seed: u64, config: &SuiteConfig) -> Result<InstanceOutcome> {
    let tol = &config.tol;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = draw_dim(&mut rng, config);

    // Primary items cover each coordinate with solid weight; expansion items
    // carry small weight and are the ones whose subspaces get enlarged, so
    // the difference form D is a positive multiple of C² on each coordinate.
    let q = generate::haar_unitary(&mut rng, dim);
    let cond: f64 = rng.random_range(1.0..3.0);
    let c_diag: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(1.0..cond.max(1.1)), 0.0))
        .collect();
    let c = Operator::new(
        &q * Matrix::from_diagonal(&DVector::from_vec(c_diag)) * q.adjoint(),
    )?;
    let factor = rng.random_range(0.5..1.5);
    let cp = Operator::new(c.matrix().scale(factor))?;

    let column_subspace = |coord: usize| -> Subspace {
        let mut basis = Matrix::zeros(dim, 1);
        basis.set_column(0, &q.column(coord));
        Subspace::new(dim, basis, tol).expect("column of a unitary")
    };

    let mut tau: Vec<usize> = (0..dim).collect();
    tau.shuffle(&mut rng);

    let mut eta = 0.3 / cond;
    for _attempt in 0..8 {
        let mut items: Vec<(Subspace, f64)> = (0..dim)
            .map(|i| (column_subspace(i), rng.random_range(0.8..1.2)))
            .collect();
        let mut subspaces_v: Vec<Subspace> = items.iter().map(|(w, _)| w.clone()).collect();
        for j in 0..dim {
            let anchor = tau[(j + 1) % dim];
            items.push((column_subspace(anchor), eta));
            let mut basis = Matrix::zeros(dim, 2);
            basis.set_column(0, &q.column(anchor));
            basis.set_column(1, &q.column(tau[j]));
            subspaces_v.push(Subspace::new(dim, basis, tol)?);
        }
        let spec = ControlledFrameSpec::new(
            FusionSystem::new(items)?,
            c.clone(),
            cp.clone(),
            Operator::identity(dim),
            tol,
        )?;
        let report = spec.classify(tol)?;

        // D = η²·c·C² here; take R at its top eigenvalue.
        let cp_adj = spec.controller_prime().matrix().adjoint();
        let mut d = Matrix::zeros(dim, dim);
        for ((w, weight), v) in spec.system().items().iter().zip(&subspaces_v) {
            let delta = v.projection().matrix() - w.projection().matrix();
            d += (&cp_adj * delta * spec.controller().matrix()).scale(weight * weight);
        }
        let (_, d_max) = Operator::new(d)?.pos_bounds(tol)?;
        if d_max >= 0.8 * report.lower {
            eta *= 0.5;
            continue;
        }
        let r = d_max;

        let bounds =
            transforms::perturb_check(&spec, &subspaces_v, r, report.lower, report.upper, tol)?;

        let v_spec = spec.with_subspaces(subspaces_v)?;
        let v_report = v_spec.classify(tol)?;
        let k_range = spec.range_operator().range_basis(tol);
        let kk = Operator::new(
            spec.range_operator().matrix() * spec.range_operator().matrix().adjoint(),
        )?;
        let restricted = pencil_min_restricted(&v_spec.frame_operator(), &kk, &k_range, tol)?;
        let scale = tol.scale(dim, v_report.upper.max(1.0));
        let pass = bounds.upper + scale >= v_report.upper
            && bounds.lower <= restricted.value + scale;
        return Ok((
            margins_of(&bounds),
            ConclusionDocument {
                propagated_lower: bounds.lower,
                propagated_upper: bounds.upper,
                classify_lower: restricted.value,
                classify_upper: v_report.upper,
                pass,
            },
        ));
    }
    Err(CliError::Config(
        "could not fit the perturbation below the lower frame bound".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trips_names() {
        for t in TheoremKind::REGISTRY {
            assert_eq!(TheoremKind::from_str(t.name()).unwrap(), t);
        }
        assert!(TheoremKind::from_str("nope").is_err());
    }

    #[test]
    fn empty_theorem_list_is_an_empty_pass() {
        let config = SuiteConfig::new(vec![], 10, 0, 4);
        let reports = run_suite(&config).unwrap();
        assert!(reports.is_empty());
        assert!(suite_pass(&reports));
    }

    #[test]
    fn each_theorem_passes_a_few_seeds() {
        let config = SuiteConfig::new(TheoremKind::REGISTRY.to_vec(), 5, 42, 5);
        let reports = run_suite(&config).unwrap();
        assert_eq!(reports.len(), 40);
        for report in &reports {
            assert!(
                report.pass,
                "{} seed {} failed: {:?} {:?}",
                report.instance_id, report.seed, report.note, report.conclusion
            );
        }
    }

    #[test]
    fn dropped_square_root_is_detected() {
        let mut config = SuiteConfig::new(vec![TheoremKind::Sandwich], 5, 7, 5);
        config.mutation = Some(Mutation::DropAnalysisSqrt);
        let reports = run_suite(&config).unwrap();
        assert!(
            !suite_pass(&reports),
            "mutated suite unexpectedly passed: {reports:?}"
        );
    }
}
