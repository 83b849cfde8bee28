//! Domain types: actors, utterances, dialogues, intent buckets and flows.
//!
//! Everything here is validated at construction and immutable afterwards.

mod corpus;
mod flow;

pub use corpus::{load_corpus, Corpus, Dialogue};
pub use flow::{load_flow, FlowDocument, FlowGraph, FlowPath, NodeRecord, DEFAULT_PATH_CAP};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speaker role of an utterance or bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    User,
    Agent,
}

impl Actor {
    pub fn as_str(self) -> &'static str {
        match self {
            Actor::User => "user",
            Actor::Agent => "agent",
        }
    }

    pub fn other(self) -> Actor {
        match self {
            Actor::User => Actor::Agent,
            Actor::Agent => Actor::User,
        }
    }

    pub(crate) fn parse_in(raw: &str, context: &str) -> Result<Actor> {
        raw.parse().map_err(|_| Error::UnknownActor {
            actor: raw.to_string(),
            context: context.to_string(),
        })
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Actor {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "user" => Ok(Actor::User),
            "agent" => Ok(Actor::Agent),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub text: String,
    pub actor: Actor,
}

impl Utterance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, actor: Actor) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyText(id));
        }
        Ok(Utterance { id, text, actor })
    }
}

/// A named set of same-actor utterances. Flow nodes are labeled with buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentBucket {
    pub id: String,
    pub name: String,
    pub actor: Actor,
    pub utterances: Vec<Utterance>,
}

impl IntentBucket {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        actor: Actor,
        members: Vec<(String, String)>,
    ) -> Result<Self> {
        let id = id.into();
        if members.is_empty() {
            return Err(Error::EmptyBucket(id));
        }
        let utterances = members
            .into_iter()
            .map(|(uid, text)| Utterance::new(uid, text, actor))
            .collect::<Result<Vec<_>>>()?;
        Ok(IntentBucket {
            id,
            name: name.into(),
            actor,
            utterances,
        })
    }

    pub fn utterance_ids(&self) -> impl Iterator<Item = &str> {
        self.utterances.iter().map(|u| u.id.as_str())
    }
}

/// All buckets of a flow, kept sorted by id.
#[derive(Debug, Clone, Default)]
pub struct BucketSet {
    buckets: Vec<IntentBucket>,
    index: HashMap<String, usize>,
}

impl BucketSet {
    pub fn new(mut buckets: Vec<IntentBucket>) -> Result<Self> {
        buckets.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(buckets.len());
        let mut seen_utterances = HashSet::new();
        for (ix, bucket) in buckets.iter().enumerate() {
            if bucket.utterances.is_empty() {
                return Err(Error::EmptyBucket(bucket.id.clone()));
            }
            if index.insert(bucket.id.clone(), ix).is_some() {
                return Err(Error::DuplicateBucketId(bucket.id.clone()));
            }
            for u in &bucket.utterances {
                if u.text.trim().is_empty() {
                    return Err(Error::EmptyText(u.id.clone()));
                }
                if !seen_utterances.insert(u.id.as_str()) {
                    return Err(Error::DuplicateUtteranceId(u.id.clone()));
                }
            }
        }
        Ok(BucketSet { buckets, index })
    }

    /// Parses a bucket file (a JSON array of bucket records).
    pub fn from_json(document: &str) -> Result<Self> {
        let records: Vec<BucketRecord> = serde_json::from_str(document).map_err(|source| Error::Parse {
            line: source.line(),
            source,
        })?;
        let mut buckets = Vec::with_capacity(records.len());
        for record in records {
            warn_unknown(&record.extra, &format!("bucket {}", record.id));
            let actor = Actor::parse_in(&record.actor, &format!("bucket {}", record.id))?;
            let members = record
                .utterances
                .into_iter()
                .map(|u| {
                    warn_unknown(&u.extra, &format!("utterance {}", u.id));
                    (u.id, u.text)
                })
                .collect();
            let name = record.name.unwrap_or_else(|| record.id.clone());
            buckets.push(IntentBucket::new(record.id, name, actor, members)?);
        }
        BucketSet::new(buckets)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<BucketRecord> = self
            .buckets
            .iter()
            .map(|b| BucketRecord {
                id: b.id.clone(),
                name: Some(b.name.clone()),
                actor: b.actor.as_str().to_string(),
                utterances: b
                    .utterances
                    .iter()
                    .map(|u| UtteranceRecord {
                        id: u.id.clone(),
                        text: u.text.clone(),
                        extra: BTreeMap::new(),
                    })
                    .collect(),
                extra: BTreeMap::new(),
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("bucket records serialize")
    }

    pub fn get(&self, id: &str) -> Option<&IntentBucket> {
        self.index.get(id).map(|&ix| &self.buckets[ix])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn by_index(&self, ix: usize) -> &IntentBucket {
        &self.buckets[ix]
    }

    pub fn iter(&self) -> impl Iterator<Item = &IntentBucket> {
        self.buckets.iter()
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BucketRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    actor: String,
    utterances: Vec<UtteranceRecord>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct UtteranceRecord {
    id: String,
    text: String,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, serde_json::Value>,
}

pub(crate) fn warn_unknown(extra: &BTreeMap<String, serde_json::Value>, context: &str) {
    for key in extra.keys() {
        log::warn!("ignoring unknown field {key:?} in {context}");
    }
}
