//! Utterance vectors and the distances built on them.
//!
//! All stored vectors are unit length, so cosine distance reduces to
//! `1 - dot(a, b)`, clamped to `[0, 1]`. Distances between mismatched actors
//! are `+inf`.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Actor, BucketSet, IntentBucket, Utterance};

/// Default dimension of the fallback hash embedder.
pub const DEFAULT_HASH_DIMENSION: usize = 256;

/// How an utterance is compared against an intent bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceVariant {
    /// Distance to the nearest member utterance.
    Min,
    /// Distance to the bucket centroid.
    Centroid,
}

impl fmt::Display for DistanceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceVariant::Min => "min",
            DistanceVariant::Centroid => "centroid",
        })
    }
}

impl FromStr for DistanceVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(DistanceVariant::Min),
            "centroid" => Ok(DistanceVariant::Centroid),
            other => Err(format!("unknown distance variant {other:?}")),
        }
    }
}

/// Map from utterance id to a unit-normalized vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dimension: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    key: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidDimension(dimension));
        }
        Ok(EmbeddingTable {
            dimension,
            entries: HashMap::new(),
        })
    }

    /// Embeds every utterance with [`hash_embed`].
    pub fn hashed<'a>(utterances: impl IntoIterator<Item = &'a Utterance>, dimension: usize) -> Result<Self> {
        let mut table = EmbeddingTable::new(dimension)?;
        for u in utterances {
            if table.contains(&u.id) {
                return Err(Error::DuplicateKey(u.id.clone()));
            }
            let vector = hash_embed(&u.text, dimension).map_err(|e| match e {
                Error::EmptyText(_) => Error::EmptyText(u.id.clone()),
                other => other,
            })?;
            table.entries.insert(u.id.clone(), vector);
        }
        Ok(table)
    }

    /// Stores `vector` under `key` after L2 normalization.
    pub fn insert(&mut self, key: impl Into<String>, mut vector: Vec<f64>) -> Result<()> {
        let key = key.into();
        if vector.len() != self.dimension {
            return Err(Error::DimensionDrift {
                key,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if !normalize(&mut vector) {
            return Err(Error::ZeroVector(key));
        }
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        self.entries.insert(key, vector);
        Ok(())
    }

    /// Adds all entries of `other`; keys must not collide.
    pub fn merge(&mut self, other: EmbeddingTable) -> Result<()> {
        if other.dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                left: self.dimension,
                right: other.dimension,
            });
        }
        for (key, vector) in other.entries {
            if self.entries.contains_key(&key) {
                return Err(Error::DuplicateKey(key));
            }
            self.entries.insert(key, vector);
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Result<&[f64]> {
        self.entries
            .get(key)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbedding(key.to_string()))
    }

    /// Parses the JSONL table format: a `{"dimension": D}` header line, then
    /// one `{"key", "vector"}` record per line.
    pub fn from_jsonl(document: &str) -> Result<Self> {
        let mut lines = document.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::MissingHeader)?;
        let header: Header = serde_json::from_str(header).map_err(|_| Error::MissingHeader)?;
        let mut table = EmbeddingTable::new(header.dimension)?;
        for (ix, line) in lines {
            let record: Record = serde_json::from_str(line).map_err(|source| Error::Parse { line: ix + 1, source })?;
            table.insert(record.key, record.vector)?;
        }
        Ok(table)
    }

    /// Writes the JSONL format with keys in ascending order.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header {
            dimension: self.dimension,
        })
        .expect("header serializes");
        out.push('\n');
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        for key in keys {
            let record = Record {
                key: key.clone(),
                vector: self.entries[key].clone(),
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Scales `v` to unit length. Returns false for zero or non-finite input.
fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    // exact zero for identical vectors, which rounding in dot() would miss
    if a == b {
        return 0.0;
    }
    (1.0 - dot(a, b)).clamp(0.0, 1.0)
}

/// `clamp(1 - dot(a, b), 0, 1)` for unit vectors.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(cosine_unchecked(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketCentroid {
    pub bucket_id: String,
    pub vector: Vec<f64>,
}

/// Mean of the members' vectors, re-normalized to unit length.
pub fn bucket_centroid(bucket: &IntentBucket, table: &EmbeddingTable) -> Result<BucketCentroid> {
    let mut sum = vec![0.0; table.dimension()];
    for id in bucket.utterance_ids() {
        for (acc, x) in sum.iter_mut().zip(table.get(id)?) {
            *acc += x;
        }
    }
    let count = bucket.utterances.len() as f64;
    sum.iter_mut().for_each(|x| *x /= count);
    if !normalize(&mut sum) {
        return Err(Error::DegenerateCentroid(bucket.id.clone()));
    }
    Ok(BucketCentroid {
        bucket_id: bucket.id.clone(),
        vector: sum,
    })
}

/// Buckets, their vectors and centroids, bound together for distance queries.
#[derive(Debug)]
pub struct SemanticSpace<'a> {
    buckets: &'a BucketSet,
    table: &'a EmbeddingTable,
    centroids: Vec<BucketCentroid>,
    /// Intent-intent distances, row-major by bucket index.
    pairs: Vec<f64>,
    variant: DistanceVariant,
}

impl<'a> SemanticSpace<'a> {
    /// Computes every bucket centroid. Fails if any member is not embedded.
    pub fn new(buckets: &'a BucketSet, table: &'a EmbeddingTable, variant: DistanceVariant) -> Result<Self> {
        let centroids = buckets
            .iter()
            .map(|b| bucket_centroid(b, table))
            .collect::<Result<Vec<_>>>()?;
        let n = centroids.len();
        let mut pairs = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                pairs[a * n + b] = if buckets.by_index(a).actor != buckets.by_index(b).actor {
                    f64::INFINITY
                } else if a == b {
                    0.0
                } else {
                    cosine_unchecked(&centroids[a].vector, &centroids[b].vector)
                };
            }
        }
        Ok(SemanticSpace {
            buckets,
            table,
            centroids,
            pairs,
            variant,
        })
    }

    pub fn buckets(&self) -> &'a BucketSet {
        self.buckets
    }

    pub fn table(&self) -> &'a EmbeddingTable {
        self.table
    }

    pub fn variant(&self) -> DistanceVariant {
        self.variant
    }

    pub fn centroid(&self, bucket_id: &str) -> Option<&BucketCentroid> {
        self.buckets.position(bucket_id).map(|ix| &self.centroids[ix])
    }

    fn position(&self, bucket: &IntentBucket) -> Result<usize> {
        self.buckets
            .position(&bucket.id)
            .ok_or_else(|| Error::InvalidConfig(format!("bucket {} is not part of this space", bucket.id)))
    }

    /// Intent-utterance distance: `+inf` on actor mismatch, otherwise the
    /// Min or Centroid cosine distance.
    pub fn intent_utterance_distance(&self, bucket: &IntentBucket, u: &Utterance) -> Result<f64> {
        let ix = self.position(bucket)?;
        if bucket.actor != u.actor {
            return Ok(f64::INFINITY);
        }
        let v = self.table.get(&u.id)?;
        self.intent_vector_distance(ix, u.actor, v)
    }

    pub(crate) fn intent_vector_distance(&self, bucket_ix: usize, actor: Actor, v: &[f64]) -> Result<f64> {
        let bucket = self.buckets.by_index(bucket_ix);
        if bucket.actor != actor {
            return Ok(f64::INFINITY);
        }
        match self.variant {
            DistanceVariant::Centroid => Ok(cosine_unchecked(&self.centroids[bucket_ix].vector, v)),
            DistanceVariant::Min => {
                let mut best = f64::INFINITY;
                for id in bucket.utterance_ids() {
                    best = best.min(cosine_unchecked(self.table.get(id)?, v));
                }
                Ok(best)
            }
        }
    }

    /// Intent-intent distance between centroids, `+inf` on actor mismatch.
    pub fn intent_intent_distance(&self, a: &IntentBucket, b: &IntentBucket) -> Result<f64> {
        Ok(self.intent_intent_distance_ix(self.position(a)?, self.position(b)?))
    }

    pub(crate) fn intent_intent_distance_ix(&self, a: usize, b: usize) -> f64 {
        self.pairs[a * self.centroids.len() + b]
    }

    /// The same-actor bucket closest to `u`; ties go to the smaller bucket id.
    pub fn nearest_bucket(&self, u: &Utterance) -> Result<&'a IntentBucket> {
        let v = self.table.get(&u.id)?;
        let ix = self
            .nearest_bucket_ix(u.actor, v)?
            .map(|(ix, _)| ix)
            .ok_or_else(|| Error::NoCandidateBucket(u.id.clone()))?;
        Ok(self.buckets.by_index(ix))
    }

    /// Returns `(bucket index, d1)` of the nearest same-actor bucket.
    fn nearest_bucket_ix(&self, actor: Actor, v: &[f64]) -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        // Buckets are sorted by id, so a strict comparison keeps the smallest id on ties.
        for (ix, bucket) in self.buckets.iter().enumerate() {
            if bucket.actor != actor {
                continue;
            }
            let d = self.intent_vector_distance(ix, actor, v)?;
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((ix, d));
            }
        }
        Ok(best)
    }
}

/// Deterministic character-trigram feature hashing.
///
/// The text is lowercased and its whitespace collapsed; each character
/// trigram (or the whole text, if shorter than three characters) is hashed
/// with FNV-1a to a coordinate whose count is incremented. The count vector
/// is L2-normalized, so all coordinates are non-negative.
pub fn hash_embed(text: &str, dimension: usize) -> Result<Vec<f64>> {
    if dimension < 8 {
        return Err(Error::InvalidDimension(dimension));
    }
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if normalized.is_empty() {
        return Err(Error::EmptyText(text.to_string()));
    }
    let chars: Vec<char> = normalized.chars().collect();
    let mut vector = vec![0.0; dimension];
    let mut bump = |gram: &[char]| {
        let mut hasher = FnvHasher::default();
        let mut buf = [0u8; 4];
        for c in gram {
            hasher.write(c.encode_utf8(&mut buf).as_bytes());
        }
        vector[(hasher.finish() % dimension as u64) as usize] += 1.0;
    };
    if chars.len() < 3 {
        bump(&chars);
    } else {
        chars.windows(3).for_each(bump);
    }
    normalize(&mut vector);
    Ok(vector)
}
