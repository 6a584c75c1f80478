//! Randomized extremal probes: sphere sampling with local refinement.
//!
//! These are the independent cross-checks used by the verification harness.
//! They touch the operators only through matrix-vector products, so they
//! share no code path with the SVD/eigendecomposition routines they are used
//! to check. Uniform sphere samples alone concentrate away from extremal
//! directions in dimension ≥ 3, so each probe refines its best candidates by
//! an iteration that also uses only matrix-vector products.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::{inner, Operator, Vector};

/// Value found by a probe together with the vector achieving it.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub value: f64,
    pub witness: Vector,
}

/// Unit vector drawn from the rotation-invariant complex Gaussian.
pub fn unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v / Complex64::new(norm, 0.0);
        }
    }
}

/// Largest gain ‖Af‖ over unit vectors: `samples` random starts, then power
/// iteration on A*A from the best one.
pub fn max_gain(a: &Operator, samples: usize, refine_steps: usize, seed: u64) -> ProbeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a.dim();
    let mut best = unit_vector(&mut rng, n);
    let mut best_value = a.apply(&best).norm();
    for _ in 1..samples {
        let f = unit_vector(&mut rng, n);
        let value = a.apply(&f).norm();
        if value > best_value {
            best_value = value;
            best = f;
        }
    }
    let adjoint = a.adjoint();
    let mut v = best.clone();
    for _ in 0..refine_steps {
        let w = adjoint.apply(&a.apply(&v));
        let norm = w.norm();
        if norm <= 1e-150 {
            break;
        }
        v = w / Complex64::new(norm, 0.0);
        let value = a.apply(&v).norm();
        if value > best_value {
            best_value = value;
            best = v.clone();
        }
    }
    ProbeResult {
        value: best_value,
        witness: best,
    }
}

/// Largest Rayleigh quotient ⟨Sf,f⟩ over unit vectors for self-adjoint
/// positive semidefinite S (power iteration refinement).
pub fn max_rayleigh(s: &Operator, samples: usize, refine_steps: usize, seed: u64) -> ProbeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.dim();
    let rayleigh = |f: &Vector| inner(&s.apply(f), f).re;
    let mut best = unit_vector(&mut rng, n);
    let mut best_value = rayleigh(&best);
    for _ in 1..samples {
        let f = unit_vector(&mut rng, n);
        let value = rayleigh(&f);
        if value > best_value {
            best_value = value;
            best = f;
        }
    }
    let mut v = best.clone();
    for _ in 0..refine_steps {
        let w = s.apply(&v);
        let norm = w.norm();
        if norm <= 1e-150 {
            break;
        }
        v = w / Complex64::new(norm, 0.0);
        let value = rayleigh(&v);
        if value > best_value {
            best_value = value;
            best = v.clone();
        }
    }
    ProbeResult {
        value: best_value,
        witness: best,
    }
}

/// Smallest quotient ⟨Sf,f⟩/⟨Gf,f⟩ over `samples` admissible random
/// vectors, refined by exact-line-search descent from the best starts. The
/// returned value never exceeds the minimum of the raw samples.
pub fn min_pencil_quotient(
    s: &Operator,
    g: &Operator,
    samples: usize,
    refine_steps: usize,
    seed: u64,
) -> ProbeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.dim();
    let g_floor = 1e-12 * g.op_norm().max(1.0);

    let mut starts: Vec<(f64, Vector)> = Vec::new();
    let mut best: Option<(f64, Vector)> = None;
    let mut drawn = 0;
    while drawn < samples {
        let f = unit_vector(&mut rng, n);
        let den = inner(&g.apply(&f), &f).re;
        if den <= g_floor {
            continue;
        }
        drawn += 1;
        let q = inner(&s.apply(&f), &f).re / den;
        if best.as_ref().is_none_or(|(b, _)| q < *b) {
            best = Some((q, f.clone()));
        }
        starts.push((q, f));
        starts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        starts.truncate(4);
    }
    let (mut best_value, mut best_witness) = best.expect("at least one admissible sample");

    // Steepest descent with exact line search: each step minimizes the
    // quotient on span{f, S·f − ρ·G·f} by solving the 2×2 pencil there in
    // closed form (quadratic formula, no eigensolver involved).
    for (_, start) in starts {
        let mut f = start;
        for _ in 0..refine_steps {
            let Some(next) = line_search_step(s, g, &f, g_floor) else {
                break;
            };
            f = next;
            let den = inner(&g.apply(&f), &f).re;
            if den > g_floor {
                let q = inner(&s.apply(&f), &f).re / den;
                if q < best_value {
                    best_value = q;
                    best_witness = f.clone();
                }
            }
        }
    }
    ProbeResult {
        value: best_value,
        witness: best_witness,
    }
}

/// One exact-line-search step for the quotient ⟨Sf,f⟩/⟨Gf,f⟩: returns the
/// minimizer over the plane spanned by `f` and the residual direction, or
/// None at (numerical) stationarity.
fn line_search_step(s: &Operator, g: &Operator, f: &Vector, g_floor: f64) -> Option<Vector> {
    let sf = s.apply(f);
    let gf = g.apply(f);
    let den = inner(&gf, f).re;
    if den <= g_floor {
        return None;
    }
    let rho = inner(&sf, f).re / den;
    let residual = &sf - gf.scale(rho);

    // Orthonormal pair {u1, u2} spanning {f, residual}.
    let u1 = f / Complex64::new(f.norm(), 0.0);
    let mut w = residual.clone();
    let overlap = inner(&residual, &u1);
    w -= &u1 * overlap;
    let w_norm = w.norm();
    if w_norm <= 1e-14 * (rho.abs().max(1.0)) {
        return None;
    }
    let u2 = w / Complex64::new(w_norm, 0.0);

    // Compressed 2×2 Hermitian forms.
    let (su1, su2) = (s.apply(&u1), s.apply(&u2));
    let (gu1, gu2) = (g.apply(&u1), g.apply(&u2));
    let s11 = inner(&su1, &u1).re;
    let s22 = inner(&su2, &u2).re;
    let s12 = inner(&su1, &u2);
    let g11 = inner(&gu1, &u1).re;
    let g22 = inner(&gu2, &u2).re;
    let g12 = inner(&gu1, &u2);

    // det(S2 − λ·G2) = a·λ² − b·λ + c with the coefficients below.
    let a = g11 * g22 - g12.norm_sqr();
    let b = s11 * g22 + s22 * g11 - 2.0 * (s12 * g12.conj()).re;
    let c = s11 * s22 - s12.norm_sqr();
    let lambda = if a.abs() > 1e-14 * (g11.abs() + g22.abs()).max(1.0) {
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        (b - disc) / (2.0 * a)
    } else if b.abs() > 1e-300 {
        c / b
    } else {
        return None;
    };

    // Null vector of (S2 − λ·G2).
    let m11 = Complex64::new(s11 - lambda * g11, 0.0);
    let m12 = s12.conj() - g12.conj().scale(lambda);
    let m21 = s12 - g12.scale(lambda);
    let m22 = Complex64::new(s22 - lambda * g22, 0.0);
    let (v0, v1) = if m11.norm().max(m12.norm()) >= m21.norm().max(m22.norm()) {
        (m12, -m11)
    } else {
        (m22, -m21)
    };
    if v0.norm() + v1.norm() <= 1e-150 {
        return None;
    }
    let mut next = u1 * v0 + u2 * v1;
    let norm = next.norm();
    if norm <= 1e-150 {
        return None;
    }
    next /= Complex64::new(norm, 0.0);
    Some(next)
}
