//! Protein structure similarity from alpha-carbon distance matrices.
//!
//! A structure is reduced to its CA trace, rendered as a normalized
//! distance-matrix image, resampled to a fixed size and described by two
//! gradient-orientation descriptors: a co-occurrence matrix of quantized
//! orientations (CoMOGrad, 256 values) and a pyramid histogram of oriented
//! gradients (PHOG, 768 values). Two structures are compared by the
//! Euclidean distance of their 1024-value feature vectors, which costs the
//! same regardless of protein length.
//!
//! The [`eval`] module treats any pairwise score as a binary classifier of
//! SCOPe family (or superfamily) membership and produces posterior, MCC and
//! ROC curves.

pub mod config;
pub mod distmat;
pub mod eval;
pub mod featuredb;
pub mod features;
pub mod imageops;
pub mod scoring;
pub mod structure;
pub mod synth;

pub use config::Config;
pub use distmat::{distance_matrix, to_gray, DistanceMatrix, GrayImage};
pub use eval::{ConfusionCounts, Polarity, ScoredPair};
pub use featuredb::FeatureStore;
pub use features::{extract_features, FeatureVector, FEATURE_LEN};
pub use imageops::GradientField;
pub use scoring::{score, search, ScoreResult};
pub use structure::{parse_pdb, parse_scop_label, CaTrace, LabelTable, ScopLabel};

/// Crate-wide error, wrapping the per-module failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] structure::ParseError),
    #[error(transparent)]
    Image(#[from] imageops::ImageError),
    #[error(transparent)]
    Score(#[from] scoring::ScoreError),
    #[error(transparent)]
    Store(#[from] featuredb::StoreError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
