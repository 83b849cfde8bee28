//! Random instances and a from-scratch reference scorer shared by the
//! integration tests. Nothing here calls the library's distance code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fudge::{Actor, BucketSet, Dialogue, EmbeddingTable, FlowGraph, IntentBucket};
use rand::seq::SliceRandom;
use rand::Rng;

pub const DIM: usize = 8;

pub struct Instance {
    pub buckets: BucketSet,
    pub table: EmbeddingTable,
    pub flow: FlowGraph,
    pub dialogue: Dialogue,
    pub root: String,
    /// node id -> bucket id, non-root nodes only
    pub node_bucket: BTreeMap<String, String>,
    pub edges: Vec<(String, String)>,
    /// key -> raw (unnormalized) vector
    pub raw: BTreeMap<String, Vec<f64>>,
    pub bucket_members: BTreeMap<String, (Actor, Vec<String>)>,
}

fn random_vector<R: Rng>(rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-3 {
            return v;
        }
    }
}

fn random_actor<R: Rng>(rng: &mut R) -> Actor {
    if rng.gen_bool(0.5) {
        Actor::User
    } else {
        Actor::Agent
    }
}

/// Random DAG with at most `max_nodes` nodes (root included) and at most
/// `max_edges` edges, random buckets with random vectors, and a random
/// dialogue of at most `max_turns` turns.
pub fn random_instance<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize, max_turns: usize) -> Instance {
    let mut raw = BTreeMap::new();
    let mut bucket_members = BTreeMap::new();
    let mut buckets = Vec::new();
    let n_buckets = rng.gen_range(1..=6);
    for b in 0..n_buckets {
        let id = format!("b{b}");
        let actor = random_actor(rng);
        let mut members = Vec::new();
        let mut ids = Vec::new();
        for k in 0..rng.gen_range(1..=3) {
            let key = format!("{id}.m{k}");
            raw.insert(key.clone(), random_vector(rng));
            members.push((key.clone(), format!("member {k}")));
            ids.push(key);
        }
        buckets.push(IntentBucket::new(id.clone(), id.clone(), actor, members).unwrap());
        bucket_members.insert(id, (actor, ids));
    }
    let bucket_ids: Vec<String> = bucket_members.keys().cloned().collect();

    // Ids are shuffled against creation order so id order and topological
    // order disagree.
    let n = rng.gen_range(1..=max_nodes);
    let mut labels: Vec<usize> = (0..n).collect();
    labels[1..].shuffle(rng);
    let ids: Vec<String> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| if i == 0 { "root".to_string() } else { format!("v{l:02}") })
        .collect();
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    let budget = max_edges.saturating_sub(edges.len());
    let extra = if budget == 0 { 0 } else { rng.gen_range(0..=budget) };
    for _ in 0..extra {
        if n < 3 {
            break;
        }
        let a = rng.gen_range(0..n - 1);
        let b = rng.gen_range(a + 1..n);
        if !edges.contains(&(a, b)) {
            edges.push((a, b));
        }
    }
    let mut node_bucket = BTreeMap::new();
    for id in &ids[1..] {
        node_bucket.insert(id.clone(), bucket_ids.choose(rng).unwrap().clone());
    }
    let edges: Vec<(String, String)> = edges.iter().map(|&(a, b)| (ids[a].clone(), ids[b].clone())).collect();

    let buckets = BucketSet::new(buckets).unwrap();
    let flow = FlowGraph::new(
        "root",
        node_bucket.iter().map(|(n, b)| (n.clone(), Some(b.clone()))).collect(),
        edges.clone(),
        &buckets,
    )
    .unwrap();

    let m = rng.gen_range(0..=max_turns);
    let dialogue = Dialogue::from_turns("d", (0..m).map(|i| (random_actor(rng), format!("turn {i}")))).unwrap();
    for u in &dialogue.turns {
        raw.insert(u.id.clone(), random_vector(rng));
    }
    let mut table = EmbeddingTable::new(DIM).unwrap();
    for (k, v) in &raw {
        table.insert(k.clone(), v.clone()).unwrap();
    }
    Instance {
        buckets,
        table,
        flow,
        dialogue,
        root: "root".into(),
        node_bucket,
        edges,
        raw,
        bucket_members,
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (unit(a), unit(b));
    let d: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    (1.0 - d).clamp(0.0, 1.0)
}

/// Reference scorer built only from the instance's raw data, with unit
/// insertion and deletion costs.
pub struct Reference<'a> {
    pub inst: &'a Instance,
    pub min_variant: bool,
    pub alpha: f64,
    /// bucket id -> substitution cost per turn
    subs: BTreeMap<String, Vec<f64>>,
}

impl<'a> Reference<'a> {
    pub fn new(inst: &'a Instance, min_variant: bool, alpha: f64) -> Self {
        let mut r = Reference {
            inst,
            min_variant,
            alpha,
            subs: BTreeMap::new(),
        };
        r.subs = inst
            .bucket_members
            .keys()
            .map(|b| {
                (
                    b.clone(),
                    (0..inst.dialogue.len()).map(|t| r.substitution(b, t)).collect(),
                )
            })
            .collect();
        r
    }

    fn centroid(&self, bucket: &str) -> Vec<f64> {
        let (_, members) = &self.inst.bucket_members[bucket];
        let mut sum = vec![0.0; DIM];
        for key in members {
            for (s, x) in sum.iter_mut().zip(unit(&self.inst.raw[key])) {
                *s += x;
            }
        }
        unit(&sum)
    }

    fn d1(&self, bucket: &str, v: &[f64]) -> f64 {
        if self.min_variant {
            let (_, members) = &self.inst.bucket_members[bucket];
            members
                .iter()
                .map(|k| cos(&self.inst.raw[k], v))
                .fold(f64::INFINITY, f64::min)
        } else {
            cos(&self.centroid(bucket), v)
        }
    }

    pub fn substitution(&self, bucket: &str, turn: usize) -> f64 {
        let u = &self.inst.dialogue.turns[turn];
        let (actor, _) = self.inst.bucket_members[bucket];
        if actor != u.actor {
            return f64::INFINITY;
        }
        let v = &self.inst.raw[&u.id];
        let mut nearest: Option<(&str, f64)> = None;
        for (id, (a, _)) in &self.inst.bucket_members {
            if *a != u.actor {
                continue;
            }
            let d = self.d1(id, v);
            if nearest.is_none_or(|(_, best)| d < best) {
                nearest = Some((id, d));
            }
        }
        let star = nearest.unwrap().0;
        let d2 = if star == bucket {
            0.0
        } else {
            cos(&self.centroid(bucket), &self.centroid(star))
        };
        self.alpha * (self.d1(bucket, v) + d2)
    }

    /// Root-to-leaf paths by recursive search over the raw edge list.
    pub fn paths(&self) -> Vec<Vec<String>> {
        fn walk(at: &str, edges: &[(String, String)], prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            prefix.push(at.to_string());
            let children: Vec<&String> = edges.iter().filter(|(a, _)| a == at).map(|(_, b)| b).collect();
            if children.is_empty() {
                out.push(prefix.clone());
            }
            for c in children {
                walk(c, edges, prefix, out);
            }
            prefix.pop();
        }
        let mut out = Vec::new();
        walk(&self.inst.root, &self.inst.edges, &mut Vec::new(), &mut out);
        out
    }

    /// Full-matrix edit distance between one path (root first) and the dialogue.
    pub fn path_distance(&self, path: &[String]) -> f64 {
        let m = self.inst.dialogue.len();
        let nodes = &path[1..];
        let mut d = vec![vec![0.0; m + 1]; nodes.len() + 1];
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j as f64;
        }
        for i in 1..=nodes.len() {
            d[i][0] = i as f64;
            let costs = &self.subs[&self.inst.node_bucket[&nodes[i - 1]]];
            for j in 1..=m {
                let sub = d[i - 1][j - 1] + costs[j - 1];
                d[i][j] = sub.min(d[i - 1][j] + 1.0).min(d[i][j - 1] + 1.0);
            }
        }
        d[nodes.len()][m]
    }

    pub fn fudge(&self) -> f64 {
        self.paths()
            .iter()
            .map(|p| self.path_distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Classic unit-cost edit distance.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Singleton bucket per symbol with mutually orthogonal vectors; a chain
/// flow spelling `path` and a dialogue spelling `dialogue`.
pub struct OneHotChain {
    pub buckets: BucketSet,
    pub table: EmbeddingTable,
    pub flow: FlowGraph,
    pub dialogue: Dialogue,
}

pub fn one_hot_chain(alphabet: usize, path: &[u8], symbols: &[u8]) -> OneHotChain {
    let dim = alphabet.max(2);
    assert!(path.iter().chain(symbols).all(|&s| (s as usize) < alphabet));
    let one_hot = |i: usize| {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    };
    let mut table = EmbeddingTable::new(dim).unwrap();
    let mut all = Vec::new();
    for s in 0..alphabet {
        let id = format!("s{s}");
        let key = format!("{id}.m");
        table.insert(key.clone(), one_hot(s)).unwrap();
        all.push(IntentBucket::new(id.clone(), id, Actor::User, vec![(key, format!("symbol {s}"))]).unwrap());
    }
    let buckets = BucketSet::new(all).unwrap();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut prev = "root".to_string();
    for (i, &s) in path.iter().enumerate() {
        let id = format!("c{i:02}");
        nodes.push((id.clone(), Some(format!("s{s}"))));
        edges.push((prev, id.clone()));
        prev = id;
    }
    let flow = FlowGraph::new("root", nodes, edges, &buckets).unwrap();
    let dialogue = Dialogue::from_turns("d", symbols.iter().map(|&s| (Actor::User, format!("symbol {s}")))).unwrap();
    for (u, &s) in dialogue.turns.iter().zip(symbols) {
        table.insert(u.id.clone(), one_hot(s as usize)).unwrap();
    }
    OneHotChain {
        buckets,
        table,
        flow,
        dialogue,
    }
}
