//! Constructed data sets with known structure, used by the acceptance suite
//! and the CLI fixtures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::synth::{embed_all, generate_dialogues, random_walk, Phrasebook};
use super::{synthesize, NoiseConfig, SynthesisConfig, Synthetic};
use crate::embedding::{EmbeddingTable, DEFAULT_HASH_DIMENSION};
use crate::error::Result;
use crate::model::{Actor, BucketSet, Corpus, Dialogue, FlowGraph};

/// A task flow with dialogues drawn from it and from an unrelated flow.
#[derive(Debug, Clone)]
pub struct SeparationScenario {
    pub flow: FlowGraph,
    pub buckets: BucketSet,
    /// Covers both corpora and the task flow's buckets.
    pub table: EmbeddingTable,
    pub in_task: Corpus,
    pub out_task: Corpus,
}

/// Positives come from the task flow; negatives come from a second flow
/// with its own, independently drawn vocabulary. Both get `noise` on every
/// noise channel.
pub fn separation_scenario(seed: u64, noise: f64) -> Result<SeparationScenario> {
    let base = SynthesisConfig {
        seed,
        noise: NoiseConfig::uniform(noise),
        n_dialogues: 30,
        ..SynthesisConfig::default()
    };
    let task = synthesize(&SynthesisConfig {
        namespace: "in/".into(),
        ..base.clone()
    })?;
    let other = out_of_task(&base, "out/")?;
    let mut table = task.table;
    table.merge(other.table)?;
    Ok(SeparationScenario {
        flow: task.flow,
        buckets: task.buckets,
        table,
        in_task: task.corpus,
        out_task: other.corpus,
    })
}

/// A second synthetic set with the same shape parameters as `base` but a
/// derived seed, so its flow and vocabulary are unrelated to `base`'s.
pub fn out_of_task(base: &SynthesisConfig, namespace: &str) -> Result<Synthetic> {
    synthesize(&SynthesisConfig {
        namespace: namespace.into(),
        seed: base.seed ^ 0x9E37_79B9_7F4A_7C15,
        ..base.clone()
    })
}

#[derive(Debug, Clone)]
pub struct SweepScenario {
    pub flow: FlowGraph,
    pub buckets: BucketSet,
    pub table: EmbeddingTable,
    pub corpus: Corpus,
    /// Ids of the leaves of the paths the corpus was drawn from.
    pub dominant_leaves: Vec<String>,
}

/// `paths` disjoint chains of `length` nodes under the root, every node with
/// its own bucket, and a corpus drawn from the first `dominant` chains only.
pub fn dominant_paths_scenario(
    seed: u64,
    paths: usize,
    length: usize,
    dominant: usize,
    n_dialogues: usize,
    noise: f64,
) -> Result<SweepScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phrases = Phrasebook::default();
    let users = length.div_ceil(2);
    let agents = length / 2;
    let mut all = phrases.add_buckets(&mut rng, "", Actor::User, users * paths, 3)?;
    all.extend(phrases.add_buckets(&mut rng, "", Actor::Agent, agents * paths, 3)?);
    let buckets = BucketSet::new(all)?;

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut leaves = Vec::new();
    for p in 0..paths {
        let mut prev = "root".to_string();
        for l in 0..length {
            let id = format!("p{p:02}.{l:02}");
            let bucket = if l % 2 == 0 {
                format!("user{:03}", p * users + l / 2)
            } else {
                format!("agent{:03}", p * agents + l / 2)
            };
            nodes.push((id.clone(), Some(bucket)));
            edges.push((prev, id.clone()));
            prev = id;
        }
        leaves.push(prev);
    }
    let flow = FlowGraph::new("root", nodes, edges, &buckets)?;

    let chains: Vec<Vec<usize>> = leaves[..dominant]
        .iter()
        .map(|leaf| {
            let mut path = vec![flow.index_of(leaf).expect("leaf exists")];
            while let Some(&parent) = flow.parents(*path.last().unwrap()).first() {
                path.push(parent);
            }
            path.reverse();
            path
        })
        .collect();
    let (corpus, _) = generate_dialogues(
        &mut rng,
        &flow,
        &buckets,
        &phrases,
        NoiseConfig::uniform(noise),
        "",
        n_dialogues,
        |rng| chains[rng.gen_range(0..chains.len())].clone(),
    )?;
    let table = embed_all(&buckets, &[&corpus], DEFAULT_HASH_DIMENSION)?;
    Ok(SweepScenario {
        flow,
        buckets,
        table,
        corpus,
        dominant_leaves: leaves[..dominant].to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct LayeredInstance {
    pub flow: FlowGraph,
    pub buckets: BucketSet,
    pub table: EmbeddingTable,
    pub dialogue: Dialogue,
}

/// `layers` layers of `width` nodes, consecutive layers fully connected,
/// over a fixed pool of 8 user and 8 agent buckets; plus one dialogue of
/// `turns` turns from a random walk with light noise.
///
/// With width 2 this gives `2 * layers + 1` nodes, about `4 * layers`
/// edges and `2^layers` paths.
pub fn layered_instance(layers: usize, width: usize, turns: usize, seed: u64) -> Result<LayeredInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phrases = Phrasebook::default();
    let mut all = phrases.add_buckets(&mut rng, "", Actor::User, 8, 3)?;
    all.extend(phrases.add_buckets(&mut rng, "", Actor::Agent, 8, 3)?);
    let buckets = BucketSet::new(all)?;

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut prev = vec!["root".to_string()];
    for l in 0..layers {
        let prefix = if l % 2 == 0 { "user" } else { "agent" };
        let current: Vec<String> = (0..width).map(|i| format!("l{l:05}.{i}")).collect();
        for id in &current {
            nodes.push((id.clone(), Some(format!("{prefix}{:03}", rng.gen_range(0..8)))));
        }
        for p in &prev {
            for c in &current {
                edges.push((p.clone(), c.clone()));
            }
        }
        prev = current;
    }
    let flow = FlowGraph::new("root", nodes, edges, &buckets)?;

    // Walk far enough to cover `turns`, then truncate.
    let (corpus, _) = generate_dialogues(
        &mut rng,
        &flow,
        &buckets,
        &phrases,
        NoiseConfig::uniform(0.1),
        "",
        1,
        |rng| random_walk(&flow, rng),
    )?;
    let walk = &corpus.dialogues()[0];
    let dialogue = Dialogue::from_turns(
        "probe",
        walk.turns.iter().take(turns).map(|u| (u.actor, u.text.clone())),
    )?;
    let table = embed_all(
        &buckets,
        &[&Corpus::new(vec![dialogue.clone()])?],
        DEFAULT_HASH_DIMENSION,
    )?;
    Ok(LayeredInstance {
        flow,
        buckets,
        table,
        dialogue,
    })
}
