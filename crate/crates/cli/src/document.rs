//! JSON document format for frame specs and machine-readable reports.
//!
//! Complex numbers are stored as `[re, im]` pairs and matrices row-major, so
//! documents diff cleanly and round-trip bit-exactly (serde_json prints the
//! shortest representation that parses back to the same double).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use ckff_core::{
    BoundsReport, ControlledFrameSpec, DefinitionReport, FusionSystem, Matrix, Operator,
    PropagatedBounds, Subspace, Tolerance, Vector,
};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub type ComplexPair = [f64; 2];
pub type MatrixRows = Vec<Vec<ComplexPair>>;

/// Serialized controlled frame spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpecDocument {
    pub schema_version: u32,
    pub dim: usize,
    pub field: String,
    pub subspaces: Vec<SubspaceDocument>,
    pub weights: Vec<f64>,
    #[serde(rename = "C")]
    pub c: MatrixRows,
    #[serde(rename = "Cp")]
    pub cp: MatrixRows,
    #[serde(rename = "K")]
    pub k: MatrixRows,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// One subspace: its orthonormal basis as an n×k matrix, row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SubspaceDocument {
    pub basis: MatrixRows,
}

fn matrix_to_rows(m: &Matrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_matrix(rows: &MatrixRows, expected_rows: usize, label: &str) -> Result<Matrix> {
    if rows.len() != expected_rows {
        return Err(CliError::Config(format!(
            "{label}: expected {expected_rows} rows, found {}",
            rows.len()
        )));
    }
    let cols = rows.first().map_or(0, |r| r.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Config(format!(
                "{label}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(Matrix::from_fn(expected_rows, cols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl SpecDocument {
    pub fn from_spec(spec: &ControlledFrameSpec) -> Self {
        let subspaces = spec
            .system()
            .items()
            .iter()
            .map(|(w, _)| SubspaceDocument {
                basis: matrix_to_rows(w.basis()),
            })
            .collect();
        let weights = spec.system().items().iter().map(|(_, w)| *w).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            dim: spec.dim(),
            field: "complex".into(),
            subspaces,
            weights,
            c: matrix_to_rows(spec.controller().matrix()),
            cp: matrix_to_rows(spec.controller_prime().matrix()),
            k: matrix_to_rows(spec.range_operator().matrix()),
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_spec(&self, tol: &Tolerance) -> Result<ControlledFrameSpec> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.field != "complex" {
            return Err(CliError::Config(format!(
                "unsupported field `{}`, expected `complex`",
                self.field
            )));
        }
        if self.subspaces.len() != self.weights.len() {
            return Err(CliError::Config(format!(
                "{} subspaces but {} weights",
                self.subspaces.len(),
                self.weights.len()
            )));
        }
        let n = self.dim;
        let mut items = Vec::with_capacity(self.subspaces.len());
        for (i, (doc, &weight)) in self.subspaces.iter().zip(&self.weights).enumerate() {
            let basis = rows_to_matrix(&doc.basis, n, &format!("subspace {i}"))?;
            let subspace = Subspace::new(n, basis, tol)?;
            items.push((subspace, weight));
        }
        let c = Operator::new(rows_to_matrix(&self.c, n, "C")?)?;
        let cp = Operator::new(rows_to_matrix(&self.cp, n, "Cp")?)?;
        let k = Operator::new(rows_to_matrix(&self.k, n, "K")?)?;
        Ok(ControlledFrameSpec::new(
            FusionSystem::new(items)?,
            c,
            cp,
            k,
            tol,
        )?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Standalone matrix document, used to pass operators (e.g. a transport U)
/// on the command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub dim: usize,
    pub matrix: MatrixRows,
}

impl MatrixDocument {
    pub fn from_operator(op: &Operator) -> Self {
        Self {
            dim: op.dim(),
            matrix: matrix_to_rows(op.matrix()),
        }
    }

    pub fn to_operator(&self) -> Result<Operator> {
        let m = rows_to_matrix(&self.matrix, self.dim, "matrix")?;
        if m.ncols() != self.dim {
            return Err(CliError::Config(format!(
                "matrix must be square, found {}x{}",
                self.dim,
                m.ncols()
            )));
        }
        Ok(Operator::new(m)?)
    }
}

fn vector_to_pairs(v: &Vector) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// JSON form of classification output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsDocument {
    pub lower: f64,
    pub upper: f64,
    pub lower_witness: Vec<ComplexPair>,
    pub upper_witness: Vec<ComplexPair>,
    pub is_frame: bool,
    pub is_parseval: bool,
    pub tol_rel: f64,
    pub tol_abs: f64,
}

impl BoundsDocument {
    pub fn from_report(report: &BoundsReport) -> Self {
        Self {
            lower: report.lower,
            upper: report.upper,
            lower_witness: vector_to_pairs(&report.lower_witness),
            upper_witness: vector_to_pairs(&report.upper_witness),
            is_frame: report.is_frame,
            is_parseval: report.is_parseval,
            tol_rel: report.tol_used.rel(),
            tol_abs: report.tol_used.abs(),
        }
    }
}

/// JSON form of the randomized definition check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckDocument {
    pub lower: f64,
    pub upper: f64,
    pub trials: usize,
    pub seed: u64,
    pub pass: bool,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<Vec<ComplexPair>>,
}

impl CheckDocument {
    pub fn from_report(lower: f64, upper: f64, report: &DefinitionReport) -> Self {
        Self {
            lower,
            upper,
            trials: report.trials,
            seed: report.seed,
            pass: report.pass(),
            worst_lower_margin: report.worst_lower_margin,
            worst_upper_margin: report.worst_upper_margin,
            violations: report.violations.len(),
            first_violation: report
                .violations
                .first()
                .map(|v| vector_to_pairs(&v.vector)),
        }
    }
}

/// JSON form of propagated bounds with their hypothesis margins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagatedDocument {
    pub source: String,
    pub lower: f64,
    pub upper: f64,
    pub hypotheses: Vec<HypothesisDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisDocument {
    pub name: String,
    pub margin: f64,
    pub pass: bool,
}

impl PropagatedDocument {
    pub fn from_bounds(bounds: &PropagatedBounds) -> Self {
        Self {
            source: bounds.source.to_string(),
            lower: bounds.lower,
            upper: bounds.upper,
            hypotheses: bounds
                .hypotheses
                .iter()
                .map(|h| HypothesisDocument {
                    name: h.name.clone(),
                    margin: h.margin,
                    pass: h.margin >= 0.0,
                })
                .collect(),
        }
    }
}
