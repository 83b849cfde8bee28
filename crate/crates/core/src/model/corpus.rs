use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{warn_unknown, Actor, Utterance};
use crate::error::{Error, Result};

/// An ordered sequence of actor-tagged turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Utterance>,
}

impl Dialogue {
    /// Builds a dialogue, assigning turn ids `<dialogue_id>#<turn_index>`.
    pub fn from_turns<I, S>(id: impl Into<String>, turns: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Actor, S)>,
        S: Into<String>,
    {
        let id = id.into();
        let turns = turns
            .into_iter()
            .enumerate()
            .map(|(ix, (actor, text))| Utterance::new(turn_id(&id, ix), text, actor))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dialogue { id, turns })
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

pub fn turn_id(dialogue_id: &str, index: usize) -> String {
    format!("{dialogue_id}#{index}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    dialogues: Vec<Dialogue>,
    total_utterances: usize,
}

impl Corpus {
    pub fn new(dialogues: Vec<Dialogue>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut turn_ids = HashSet::new();
        for d in &dialogues {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::DuplicateDialogueId(d.id.clone()));
            }
            for u in &d.turns {
                if !turn_ids.insert(u.id.as_str()) {
                    return Err(Error::DuplicateUtteranceId(u.id.clone()));
                }
            }
        }
        let total_utterances = dialogues.iter().map(Dialogue::len).sum();
        Ok(Corpus {
            dialogues,
            total_utterances,
        })
    }

    pub fn dialogues(&self) -> &[Dialogue] {
        &self.dialogues
    }

    pub fn get(&self, id: &str) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.id == id)
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn total_utterances(&self) -> usize {
        self.total_utterances
    }

    /// Mean turns per dialogue; `None` for an empty corpus.
    pub fn avg_length(&self) -> Option<f64> {
        (!self.dialogues.is_empty()).then(|| self.total_utterances as f64 / self.dialogues.len() as f64)
    }

    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.dialogues.iter().flat_map(|d| d.turns.iter())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.dialogues {
            let record = DialogueRecord {
                id: d.id.clone(),
                turns: d
                    .turns
                    .iter()
                    .map(|u| TurnRecord {
                        actor: u.actor.as_str().to_string(),
                        text: u.text.clone(),
                        extra: BTreeMap::new(),
                    })
                    .collect(),
                extra: BTreeMap::new(),
            };
            out.push_str(&serde_json::to_string(&record).expect("dialogue serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DialogueRecord {
    id: String,
    turns: Vec<TurnRecord>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TurnRecord {
    actor: String,
    text: String,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, serde_json::Value>,
}

/// Parses a corpus file: one JSON dialogue per line, blank lines skipped.
pub fn load_corpus(document: &str) -> Result<Corpus> {
    let mut dialogues = Vec::new();
    for (ix, line) in document.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DialogueRecord =
            serde_json::from_str(line).map_err(|source| Error::Parse { line: ix + 1, source })?;
        warn_unknown(&record.extra, &format!("dialogue {}", record.id));
        let mut turns = Vec::with_capacity(record.turns.len());
        for (t, turn) in record.turns.into_iter().enumerate() {
            let id = turn_id(&record.id, t);
            warn_unknown(&turn.extra, &id);
            let actor = Actor::parse_in(&turn.actor, &id)?;
            turns.push((actor, turn.text));
        }
        dialogues.push(Dialogue::from_turns(record.id, turns)?);
    }
    Corpus::new(dialogues)
}
