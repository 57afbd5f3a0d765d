//! t-wise covering arrays for feature models.
//!
//! The pipeline parses a feature model ([`fm`]), encodes it as CNF over
//! CASA values ([`cnf`]), detects root and mandatory-equivalent features
//! with a DPLL solver ([`sat`], [`reduction`]), anneals a covering array on
//! the reduced value space ([`anneal`]) and expands it back to full width.
//! [`tsets`] provides the independent coverage check, [`stats`] and
//! [`bench`] the runtime comparison between reduced and unreduced runs.

pub mod anneal;
pub mod bench;
pub mod cnf;
pub mod fixtures;
pub mod fm;
pub mod pipeline;
pub mod reduction;
pub mod sat;
pub mod stats;
pub mod tsets;

pub use anneal::AnnealConfig;
pub use cnf::{encode_fm_to_cnf, Clause, CnfFormula, Literal, ModelFile, Value};
pub use fm::{parse_feature_model, FeatureId, FeatureModel};
pub use pipeline::{generate, GenerateOptions, Generated};
pub use reduction::{ReductionSet, ValueMapping};
pub use sat::{Assignment, SolveResult, Solver};
pub use tsets::{CoverageReport, CoveringArray, Row, TSet};
