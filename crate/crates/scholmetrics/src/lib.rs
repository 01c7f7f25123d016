//! Venue-centered scientometrics over flat-file bibliographic dumps.
//!
//! The crate ingests tab-separated publication metadata, extracts a
//! venue-centered corpus (accepted papers plus everything citing or cited by
//! them), classifies papers against a research-topic ontology by n-gram /
//! Levenshtein label matching, and computes citation, geopolitical, and
//! topic-trend reports as deterministic CSV (and SVG heatmaps for the
//! year-matrix reports).
//!
//! Modules follow the pipeline stages:
//!
//! - [`corpus`]: data model, TSV ingestion, venue extraction
//! - [`ontology`]: research-topic graph: labels, super-topics, equivalence
//! - [`classifier`]: tokenization, n-grams, label matching, annotation
//! - [`metrics`]: rankings, matrices, debit, stability, trends
//! - [`report`]: CSV/SVG emission
//! - [`pipeline`]: config-driven batch runs behind the CLI

pub mod classifier;
pub mod corpus;
pub mod metrics;
pub mod ontology;
pub mod pipeline;
pub mod report;
