//! Budgeted training-data subset selection.
//!
//! Examples are scored for utility (perplexity and CoT loss, combined after
//! min-max normalization) and compared through a cosine similarity kernel over
//! their embeddings. Subsets are then chosen under a cardinality budget by
//!
//! - greedy maximization of a submodular function ([`submodular`], [`greedy`]),
//! - a utility/diversity balanced greedy ([`greedy::utility_diversity_select`]),
//! - seeded random sampling or greedy DPP MAP ([`baselines`]),
//!
//! and small instances can be solved exhaustively ([`oracle`]) to check the
//! greedy approximation ratio.

pub mod baselines;
pub mod error;
pub mod evaluation;
pub mod greedy;
pub mod io;
pub mod manifest;
pub mod model;
pub mod oracle;
pub mod scoring;
pub mod similarity;
pub mod submodular;

pub use error::{Error, Result};
pub use model::{
    EmbeddingMatrix, ExampleRecord, ScoreTable, SelectionResult, SimilarityMatrix, TokenProbRecord,
};
