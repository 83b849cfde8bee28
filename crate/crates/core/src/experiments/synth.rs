//! Seeded generator for flows, buckets, embeddings and dialogues.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingTable, DEFAULT_HASH_DIMENSION};
use crate::error::{Error, Result};
use crate::model::{Actor, BucketSet, Corpus, Dialogue, FlowGraph, FlowPath, IntentBucket};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-turn probability of replacing the turn with a perturbed paraphrase.
    pub paraphrase_jitter: f64,
    /// Per-node probability of an extra, off-flow turn after the node's turn.
    pub insert_prob: f64,
    /// Per-node probability of dropping the node's turn.
    pub delete_prob: f64,
}

impl NoiseConfig {
    pub const NONE: NoiseConfig = NoiseConfig {
        paraphrase_jitter: 0.0,
        insert_prob: 0.0,
        delete_prob: 0.0,
    };

    pub fn uniform(p: f64) -> Self {
        NoiseConfig {
            paraphrase_jitter: p,
            insert_prob: p,
            delete_prob: p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub seed: u64,
    pub n_buckets_user: usize,
    pub n_buckets_agent: usize,
    /// Maximum children per node, and maximum layer width.
    pub branching: usize,
    /// Number of non-root layers; every path has this many nodes.
    pub depth: usize,
    pub n_dialogues: usize,
    pub noise: NoiseConfig,
    /// Member utterances per bucket.
    pub members_per_bucket: usize,
    /// Hash embedding dimension.
    pub dimension: usize,
    /// Prefix for every generated id, so several synthetic sets can share one table.
    pub namespace: String,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            seed: 0,
            n_buckets_user: 6,
            n_buckets_agent: 6,
            branching: 3,
            depth: 6,
            n_dialogues: 40,
            noise: NoiseConfig::NONE,
            members_per_bucket: 3,
            dimension: DEFAULT_HASH_DIMENSION,
            namespace: String::new(),
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, p) in [
            ("paraphrase_jitter", self.noise.paraphrase_jitter),
            ("insert_prob", self.noise.insert_prob),
            ("delete_prob", self.noise.delete_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if self.depth == 0 {
            return bad("depth must be at least 1".into());
        }
        if self.branching == 0 {
            return bad("branching must be at least 1".into());
        }
        if self.n_buckets_user == 0 || (self.depth > 1 && self.n_buckets_agent == 0) {
            return bad("need at least one bucket per actor used by the flow".into());
        }
        if self.members_per_bucket == 0 {
            return bad("members_per_bucket must be at least 1".into());
        }
        if self.dimension < 8 {
            return bad(format!("dimension must be at least 8, got {}", self.dimension));
        }
        Ok(())
    }
}

/// Everything a scoring run needs, generated from one seed.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub flow: FlowGraph,
    pub buckets: BucketSet,
    pub table: EmbeddingTable,
    pub corpus: Corpus,
    /// The path each dialogue was sampled from.
    pub sources: Vec<FlowPath>,
}

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwxz";
const VOWELS: &[u8] = b"aeiou";

fn word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(2..=3);
    let mut w = String::with_capacity(syllables * 2);
    for _ in 0..syllables {
        w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
        w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
    }
    w
}

fn phrase(rng: &mut ChaCha8Rng, words: usize) -> Vec<String> {
    (0..words).map(|_| word(rng)).collect()
}

/// Bucket phrase material: members share a base phrase plus one extra word.
#[derive(Debug, Clone, Default)]
pub(crate) struct Phrasebook {
    base: HashMap<String, Vec<String>>,
}

impl Phrasebook {
    /// Creates `count` buckets for `actor` with fresh random phrases.
    pub(crate) fn add_buckets(
        &mut self,
        rng: &mut ChaCha8Rng,
        namespace: &str,
        actor: Actor,
        count: usize,
        members: usize,
    ) -> Result<Vec<IntentBucket>> {
        let mut out = Vec::with_capacity(count);
        for j in 0..count {
            let id = format!("{namespace}{actor}{j:03}");
            let base = phrase(rng, 4);
            let texts = (0..members)
                .map(|k| (format!("{id}.u{k}"), format!("{} {}", base.join(" "), word(rng))))
                .collect();
            let name = base[..2].join(" ");
            out.push(IntentBucket::new(id.clone(), name, actor, texts)?);
            self.base.insert(id, base);
        }
        Ok(out)
    }

    /// A paraphrase of the bucket phrase with one word swapped for a new one.
    fn jittered(&self, rng: &mut ChaCha8Rng, bucket: &str) -> String {
        let mut words = self.base[bucket].clone();
        let at = rng.gen_range(0..words.len());
        words[at] = word(rng);
        words.join(" ")
    }
}

/// Emits dialogues by walking `choose_path` and applying `noise`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn generate_dialogues(
    rng: &mut ChaCha8Rng,
    flow: &FlowGraph,
    buckets: &BucketSet,
    phrases: &Phrasebook,
    noise: NoiseConfig,
    namespace: &str,
    n_dialogues: usize,
    mut choose_path: impl FnMut(&mut ChaCha8Rng) -> Vec<usize>,
) -> Result<(Corpus, Vec<FlowPath>)> {
    let mut dialogues = Vec::with_capacity(n_dialogues);
    let mut sources = Vec::with_capacity(n_dialogues);
    for i in 0..n_dialogues {
        let path = choose_path(rng);
        let mut turns: Vec<(Actor, String)> = Vec::new();
        for &v in &path[1..] {
            let bucket = buckets.by_index(flow.bucket_index(v).expect("non-root node"));
            if rng.gen_bool(noise.delete_prob) {
                // dropped turn
            } else if rng.gen_bool(noise.paraphrase_jitter) {
                turns.push((bucket.actor, phrases.jittered(rng, &bucket.id)));
            } else {
                let member = &bucket.utterances[rng.gen_range(0..bucket.utterances.len())];
                turns.push((bucket.actor, member.text.clone()));
            }
            if rng.gen_bool(noise.insert_prob) {
                let actor = if rng.gen_bool(0.5) { Actor::User } else { Actor::Agent };
                turns.push((actor, phrase(rng, 4).join(" ")));
            }
        }
        dialogues.push(Dialogue::from_turns(format!("{namespace}d{i:04}"), turns)?);
        sources.push(FlowPath {
            node_ids: path.iter().map(|&v| flow.id(v).to_string()).collect(),
        });
    }
    Ok((Corpus::new(dialogues)?, sources))
}

/// Uniform random walk from the root to a leaf.
pub(crate) fn random_walk(flow: &FlowGraph, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut path = vec![flow.root()];
    let mut v = flow.root();
    while !flow.is_leaf(v) {
        let kids = flow.children(v);
        v = kids[rng.gen_range(0..kids.len())];
        path.push(v);
    }
    path
}

/// Hash-embeds every bucket member and dialogue turn.
pub(crate) fn embed_all(buckets: &BucketSet, corpora: &[&Corpus], dimension: usize) -> Result<EmbeddingTable> {
    let members = buckets.iter().flat_map(|b| b.utterances.iter());
    let turns = corpora.iter().flat_map(|c| c.utterances());
    EmbeddingTable::hashed(members.chain(turns), dimension)
}

/// Builds a random layered flow and a noisy corpus sampled from it.
///
/// Layer `l` (1-based) holds between 1 and `branching` nodes, all user
/// nodes when `l` is odd and agent nodes when even. Each node links to 1 to
/// `branching` nodes of the next layer, and every node gets at least one
/// parent. Same config, same output.
pub fn synthesize(cfg: &SynthesisConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let ns = cfg.namespace.as_str();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut phrases = Phrasebook::default();
    let mut all = phrases.add_buckets(&mut rng, ns, Actor::User, cfg.n_buckets_user, cfg.members_per_bucket)?;
    all.extend(phrases.add_buckets(&mut rng, ns, Actor::Agent, cfg.n_buckets_agent, cfg.members_per_bucket)?);
    let user_ids: Vec<String> = all
        .iter()
        .filter(|b| b.actor == Actor::User)
        .map(|b| b.id.clone())
        .collect();
    let agent_ids: Vec<String> = all
        .iter()
        .filter(|b| b.actor == Actor::Agent)
        .map(|b| b.id.clone())
        .collect();
    let buckets = BucketSet::new(all)?;

    let root = format!("{ns}root");
    let mut nodes: Vec<(String, Option<String>)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut previous = vec![root.clone()];
    for layer in 1..=cfg.depth {
        let pool = if layer % 2 == 1 { &user_ids } else { &agent_ids };
        let width = rng.gen_range(1..=cfg.branching);
        let current: Vec<String> = (0..width).map(|i| format!("{ns}n{layer:02}.{i}")).collect();
        for id in &current {
            nodes.push((id.clone(), Some(pool[rng.gen_range(0..pool.len())].clone())));
        }
        let mut has_parent = vec![false; width];
        for parent in &previous {
            let k = rng.gen_range(1..=cfg.branching.min(width));
            for child in sample(&mut rng, width, k).into_iter() {
                has_parent[child] = true;
                edges.push((parent.clone(), current[child].clone()));
            }
        }
        for (child, _) in has_parent.iter().enumerate().filter(|(_, &p)| !p) {
            let parent = &previous[rng.gen_range(0..previous.len())];
            edges.push((parent.clone(), current[child].clone()));
        }
        previous = current;
    }
    let flow = FlowGraph::new(&root, nodes, edges, &buckets)?;

    let (corpus, sources) = generate_dialogues(
        &mut rng,
        &flow,
        &buckets,
        &phrases,
        cfg.noise,
        ns,
        cfg.n_dialogues,
        |rng| random_walk(&flow, rng),
    )?;
    let table = embed_all(&buckets, &[&corpus], cfg.dimension)?;
    Ok(Synthetic {
        flow,
        buckets,
        table,
        corpus,
        sources,
    })
}
