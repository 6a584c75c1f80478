//! Library surface of the command-line front end: JSON documents, seeded
//! instance generation, and the theorem verification suite.

pub mod document;
pub mod error;
pub mod generate;
pub mod suite;

pub use document::{
    BoundsDocument, CheckDocument, MatrixDocument, PropagatedDocument, SpecDocument,
    SCHEMA_VERSION,
};
pub use error::{CliError, Result};
pub use generate::{diagonal_example, gen_instance, GenConfig};
pub use suite::{run_suite, suite_pass, SuiteConfig, TheoremKind, VerificationReport};
