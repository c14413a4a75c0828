//! Cross-script retrieval toolkit.
//!
//! The crate covers the full "script gap" workflow: rule-table romanization of
//! non-Latin text, TREC-format corpus I/O, a BM25 reference retriever, IR
//! metrics with paired significance testing, construction of native / mixed /
//! romanized training sets, and a small hashed-trigram dual encoder that can
//! be trained on those sets.

pub mod corpus;
pub mod encoder;
pub mod hashing;
pub mod metrics;
pub mod mixer;
pub mod retrieval;
pub mod romanizer;

pub use corpus::{Document, Qrels, Query, Run, RunEntry, TrainingTriple};
pub use romanizer::{RomanizationResult, RomanizeOptions, Rule, RuleTable, ScriptClass, TableSet};

/// Toolkit version, recorded in manifests and sidecar metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
