//! Seeded random instance generation.
//!
//! The default generator keeps the standing positivity hypothesis satisfied
//! by construction: subspaces are coordinate spans in one shared random
//! eigenbasis Q, the controller C = Q·diag(d)·Q* is positive and commutes
//! with every projection, and C′ = c·C for a random c > 0, so each block
//! C′*·π_{Wᵢ}·C is positive semidefinite. `positivity: false` lifts all of
//! this for negative tests (independent controllers, generic subspaces).
//!
//! Generated range operators are normalized to unit operator norm, which
//! keeps the optimal lower bound below the Bessel bound on every instance.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ckff_core::{ControlledFrameSpec, FusionSystem, Matrix, Operator, Subspace, Tolerance};

use crate::error::{CliError, Result};

/// Parameters of one generated instance.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub dim: usize,
    pub n_subspaces: usize,
    pub max_subdim: usize,
    /// Ratio of the largest to the smallest controller eigenvalue.
    pub controller_cond: f64,
    pub k_rank: usize,
    pub seed: u64,
    pub positivity: bool,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CliError::Config("dim must be positive".into()));
        }
        if self.n_subspaces == 0 {
            return Err(CliError::Config("n_subspaces must be positive".into()));
        }
        if !(1..=self.dim).contains(&self.max_subdim) {
            return Err(CliError::Config(format!(
                "max_subdim must lie in 1..={}, got {}",
                self.dim, self.max_subdim
            )));
        }
        if self.k_rank > self.dim {
            return Err(CliError::Config(format!(
                "k_rank must be at most dim = {}, got {}",
                self.dim, self.k_rank
            )));
        }
        if self.k_rank == 0 {
            return Err(CliError::Config("k_rank must be positive".into()));
        }
        if !(self.controller_cond.is_finite() && self.controller_cond >= 1.0) {
            return Err(CliError::Config(format!(
                "controller condition number must be >= 1, got {}",
                self.controller_cond
            )));
        }
        Ok(())
    }
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of the R diagonal folded into Q.
pub fn haar_unitary<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 1e-150 {
            let phase = d / Complex64::new(d.norm(), 0.0);
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
    }
    q
}

/// Positive eigenvalue profile spanning exactly [s, s·cond].
fn spectrum<R: Rng>(rng: &mut R, dim: usize, cond: f64, scale: f64) -> Vec<f64> {
    let mut values: Vec<f64> = (0..dim)
        .map(|_| scale * cond.powf(rng.random_range(0.0..1.0)))
        .collect();
    values[0] = scale;
    if dim > 1 {
        values[dim - 1] = scale * cond;
    }
    values.shuffle(rng);
    values
}

fn diagonal_in_basis(q: &Matrix, diag: &[f64]) -> Operator {
    let entries: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let d = Matrix::from_diagonal(&DVector::from_vec(entries));
    Operator::new(q * d * q.adjoint()).expect("similarity of a finite diagonal")
}

/// Random operator of exact rank `rank`, normalized to unit operator norm,
/// with singular values kept in [0.35, 1].
pub fn random_range_operator<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> Operator {
    let left = haar_unitary(rng, dim);
    let right = haar_unitary(rng, dim);
    let mut singulars = vec![0.0; dim];
    for s in singulars.iter_mut().take(rank) {
        *s = rng.random_range(0.35..1.0);
    }
    singulars[..rank].sort_by(|a, b| b.partial_cmp(a).unwrap());
    if rank > 0 {
        singulars[0] = 1.0;
    }
    let entries: Vec<Complex64> = singulars
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    let sigma = Matrix::from_diagonal(&DVector::from_vec(entries));
    Operator::new(&left * sigma * right.adjoint()).expect("finite factors")
}

/// Coordinate index sets for each subspace, covering every coordinate when
/// the budget n_subspaces·max_subdim allows it, then topped up randomly.
fn coordinate_sets<R: Rng>(
    rng: &mut R,
    dim: usize,
    n_subspaces: usize,
    max_subdim: usize,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..dim).collect();
    order.shuffle(rng);
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); n_subspaces];
    let mut target = 0usize;
    for &coord in &order {
        let mut placed = false;
        for _ in 0..n_subspaces {
            if sets[target].len() < max_subdim {
                sets[target].push(coord);
                placed = true;
            }
            target = (target + 1) % n_subspaces;
            if placed {
                break;
            }
        }
    }
    // Top up each subspace toward a random size within budget.
    for set in sets.iter_mut() {
        if set.is_empty() {
            set.push(rng.random_range(0..dim));
        }
        let goal = rng.random_range(set.len()..=max_subdim);
        let mut candidates: Vec<usize> = (0..dim).filter(|c| !set.contains(c)).collect();
        candidates.shuffle(rng);
        while set.len() < goal {
            match candidates.pop() {
                Some(c) => set.push(c),
                None => break,
            }
        }
    }
    sets
}

fn subspace_from_columns(q: &Matrix, coords: &[usize]) -> Subspace {
    let dim = q.nrows();
    let mut basis = Matrix::zeros(dim, coords.len());
    for (j, &c) in coords.iter().enumerate() {
        basis.set_column(j, &q.column(c));
    }
    Subspace::new(dim, basis, &Tolerance::default()).expect("columns of a unitary")
}

/// Deterministic-in-seed random instance.
pub fn gen_instance(cfg: &GenConfig, tol: &Tolerance) -> Result<ControlledFrameSpec> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.dim;

    if cfg.positivity {
        let q = haar_unitary(&mut rng, n);
        let sets = coordinate_sets(&mut rng, n, cfg.n_subspaces, cfg.max_subdim);
        let items: Vec<(Subspace, f64)> = sets
            .iter()
            .map(|coords| {
                (
                    subspace_from_columns(&q, coords),
                    rng.random_range(0.5..1.5),
                )
            })
            .collect();
        let scale = rng.random_range(0.5..1.5);
        let c = diagonal_in_basis(&q, &spectrum(&mut rng, n, cfg.controller_cond, scale));
        let factor = rng.random_range(0.5..2.0);
        let cp = Operator::new(c.matrix().scale(factor))?;
        let k = random_range_operator(&mut rng, n, cfg.k_rank);
        Ok(ControlledFrameSpec::new(
            FusionSystem::new(items)?,
            c,
            cp,
            k,
            tol,
        )?)
    } else {
        let items: Vec<(Subspace, f64)> = (0..cfg.n_subspaces)
            .map(|_| {
                let k = rng.random_range(1..=cfg.max_subdim);
                let sub =
                    Subspace::orthonormalize_columns(&gaussian_matrix(&mut rng, n, k), tol);
                (sub, rng.random_range(0.5..1.5))
            })
            .collect();
        let qc = haar_unitary(&mut rng, n);
        let scale_c = rng.random_range(0.5..1.5);
        let c = diagonal_in_basis(&qc, &spectrum(&mut rng, n, cfg.controller_cond, scale_c));
        let qp = haar_unitary(&mut rng, n);
        let scale_p = rng.random_range(0.5..1.5);
        let cp = diagonal_in_basis(&qp, &spectrum(&mut rng, n, cfg.controller_cond, scale_p));
        let k = random_range_operator(&mut rng, n, cfg.k_rank);
        Ok(ControlledFrameSpec::new(
            FusionSystem::new(items)?,
            c,
            cp,
            k,
            tol,
        )?)
    }
}

/// Truncation of the diagonal ℓ² example family: Wᵢ = span{eᵢ},
/// wᵢ = 1/√(i+1), C = αI, C′ = βI, K = diag(1/√(i+1)).
pub fn diagonal_example(
    n: usize,
    alpha: f64,
    beta: f64,
    tol: &Tolerance,
) -> Result<ControlledFrameSpec> {
    if n == 0 {
        return Err(CliError::Config("n must be positive".into()));
    }
    if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
        return Err(CliError::Config(format!(
            "alpha and beta must be finite and positive, got ({alpha}, {beta})"
        )));
    }
    let items: Vec<(Subspace, f64)> = (0..n)
        .map(|i| (Subspace::coordinate(n, i), 1.0 / ((i + 1) as f64).sqrt()))
        .collect();
    let weights: Vec<f64> = (0..n).map(|i| 1.0 / ((i + 1) as f64).sqrt()).collect();
    let k = Operator::from_real_diagonal(&weights)?;
    let c = Operator::new(Matrix::identity(n, n).scale(alpha))?;
    let cp = Operator::new(Matrix::identity(n, n).scale(beta))?;
    Ok(ControlledFrameSpec::new(
        FusionSystem::new(items)?,
        c,
        cp,
        k,
        tol,
    )?)
}
