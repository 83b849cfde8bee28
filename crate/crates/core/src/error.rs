use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report. Variants carry the offending id so
/// callers can point users at the exact record.
#[derive(Debug, Error)]
pub enum Error {
    // Flow / bucket / corpus validation.
    #[error("cycle detected through edge {from} -> {to}")]
    CycleDetected { from: String, to: String },
    #[error("node {node} references unknown bucket {bucket}")]
    DanglingBucketRef { node: String, bucket: String },
    #[error("node {0} is not reachable from the root")]
    UnreachableNode(String),
    #[error("bucket {0} has no utterances")]
    EmptyBucket(String),
    #[error("duplicate node id {0}")]
    DuplicateNodeId(String),
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: String, to: String },
    #[error("edge references unknown node {0}")]
    UnknownNode(String),
    #[error("root {0} must have in-degree 0")]
    RootHasParent(String),
    #[error("root {0} must not carry a bucket")]
    RootWithBucket(String),
    #[error("node {0} has no bucket")]
    MissingBucket(String),
    #[error("flow has no leaf")]
    NoLeaf,
    #[error("duplicate bucket id {0}")]
    DuplicateBucketId(String),
    #[error("duplicate utterance id {0}")]
    DuplicateUtteranceId(String),
    #[error("utterance {0} has empty text")]
    EmptyText(String),
    #[error("duplicate dialogue id {0}")]
    DuplicateDialogueId(String),
    #[error("unknown actor {actor:?} in {context}")]
    UnknownActor { actor: String, context: String },
    #[error("unknown dialogue {0}")]
    UnknownDialogue(String),
    #[error("malformed document at line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    // Embeddings.
    #[error("no embedding for {0}")]
    MissingEmbedding(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector for {key} has dimension {found}, table dimension is {expected}")]
    DimensionDrift { key: String, expected: usize, found: usize },
    #[error("vector for {0} is zero or not finite")]
    ZeroVector(String),
    #[error("duplicate embedding key {0}")]
    DuplicateKey(String),
    #[error("embedding table header missing or invalid")]
    MissingHeader,
    #[error("invalid embedding dimension {0}")]
    InvalidDimension(usize),
    #[error("centroid of bucket {0} is the zero vector")]
    DegenerateCentroid(String),
    #[error("no bucket shares the actor of utterance {0}")]
    NoCandidateBucket(String),

    // Scoring.
    #[error("flow has more than {cap} root-to-leaf paths")]
    PathExplosion { cap: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Embedding,
    PathExplosion,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            MissingEmbedding(_)
            | DimensionMismatch { .. }
            | DimensionDrift { .. }
            | ZeroVector(_)
            | DuplicateKey(_)
            | MissingHeader
            | InvalidDimension(_)
            | DegenerateCentroid(_)
            | NoCandidateBucket(_) => ErrorClass::Embedding,
            PathExplosion { .. } => ErrorClass::PathExplosion,
            Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}
