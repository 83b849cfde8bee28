//! Fuzzy dialogue-graph edit distance (FuDGE) and the FF1 flow-quality score.
//!
//! A dialogue flow is a rooted DAG of intent buckets. [`align::Scorer`]
//! measures how far a conversation is from the closest root-to-leaf path of
//! a flow, [`metrics`] aggregates those distances over a corpus and trades
//! them off against flow size, and [`experiments`] drives the separation and
//! path-count sweep studies on real or synthetic data.

pub mod align;
pub mod embedding;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;

pub use align::{AlignmentTrace, CostModel, Operation, Scorer};
pub use embedding::{hash_embed, DistanceVariant, EmbeddingTable};
pub use error::{Error, ErrorClass, Result};
pub use model::{
    load_corpus, load_flow, Actor, BucketSet, Corpus, Dialogue, FlowGraph, FlowPath, IntentBucket, Utterance,
};
