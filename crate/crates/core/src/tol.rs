//! Tolerance policy for all numerical comparisons.
//!
//! Every predicate in the crate compares against the same dimension-aware
//! threshold, `rel * n * max(1, magnitude) + abs`, so theorem checks are
//! reproducible across instances of different scale.

use crate::error::{Error, Result};

/// Relative/absolute tolerance pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    rel: f64,
    abs: f64,
}

pub const DEFAULT_REL: f64 = 1e-9;
pub const DEFAULT_ABS: f64 = 1e-12;

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Result<Self> {
        if !(rel.is_finite() && rel > 0.0) {
            return Err(Error::InvalidInput(format!(
                "relative tolerance must be finite and positive, got {rel}"
            )));
        }
        if !(abs.is_finite() && abs >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "absolute tolerance must be finite and non-negative, got {abs}"
            )));
        }
        Ok(Self { rel, abs })
    }

    pub fn rel(&self) -> f64 {
        self.rel
    }

    pub fn abs(&self) -> f64 {
        self.abs
    }

    /// Threshold for a comparison in dimension `dim` between quantities of
    /// roughly the given magnitude.
    pub fn scale(&self, dim: usize, magnitude: f64) -> f64 {
        self.rel * dim as f64 * magnitude.max(1.0) + self.abs
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL,
            abs: DEFAULT_ABS,
        }
    }
}
