//! Numerical laboratory for controlled K-fusion frames on ℂⁿ.
//!
//! The crate is organized in four layers:
//!
//! * [`operator`] / [`subspace`] — dense complex operators, orthonormal
//!   subspace bases, and tolerance-explicit spectral predicates (adjoints,
//!   positivity, square roots, pseudo-inverses, ranges, Loewner order);
//! * [`pencil`] — extremal values of positive semidefinite operator pencils,
//!   with kernel handling by Schur complement;
//! * [`frame`] — weighted subspace systems with controller pair (C, C′) and
//!   a range operator K: frame operator, analysis/synthesis maps, optimal
//!   bounds, and definition-level verification;
//! * [`transforms`] — executable forms of the bound-propagation results
//!   (range restriction, operator transfer and combination, controller
//!   stripping, unitary transport, perturbation), each checking its
//!   hypotheses numerically and verifying its conclusion against the
//!   computed optimal bounds.
//!
//! All types are immutable after construction and all operations are pure
//! functions of their inputs; randomized checks take explicit seeds.

pub mod error;
pub mod frame;
pub mod operator;
pub mod pencil;
pub mod probe;
pub mod subspace;
pub mod tol;
pub mod transforms;

pub use error::{Error, Result};
pub use frame::{
    BlockVector, BoundsReport, ControlledFrameSpec, DefinitionReport, DefinitionViolation,
    FusionSystem, RestrictedInverse,
};
pub use operator::{inner, Matrix, Operator, Vector};
pub use pencil::{pencil_max, pencil_min, pencil_min_restricted, PencilExtremum};
pub use probe::ProbeResult;
pub use subspace::Subspace;
pub use tol::Tolerance;
pub use transforms::{HypothesisMargin, PropagatedBounds, TransformKind};
