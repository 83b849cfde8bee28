//! Fuzzy edit distance between a dialogue and the paths of a flow.
//!
//! A dialogue is aligned against a root-to-leaf path with the usual three
//! edit operations: deleting a path node, inserting a dialogue turn, or
//! substituting a turn for a node at a cost derived from the embedding
//! space. The FuDGE value of a dialogue is the minimum over all paths.
//!
//! [`Scorer::efficient_fudge`] evaluates every path at once: nodes are
//! visited in topological order and each keeps a single distance row, the
//! pointwise minimum of its parents' rows pushed through the node's DP step.
//! A row entry depends only on (node, dialogue position), so merging at a
//! shared node loses nothing, and each node and edge is touched once per
//! dialogue position.

use serde::{Deserialize, Serialize};

use crate::embedding::{DistanceVariant, EmbeddingTable, SemanticSpace};
use crate::error::{Error, Result};
use crate::model::{BucketSet, Dialogue, FlowGraph, FlowPath, IntentBucket, Utterance};

/// Costs of the three edit operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub alpha: f64,
    pub insert_cost: f64,
    pub delete_cost: f64,
    pub variant: DistanceVariant,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            alpha: 0.5,
            insert_cost: 1.0,
            delete_cost: 1.0,
            variant: DistanceVariant::Centroid,
        }
    }
}

impl CostModel {
    pub fn with_variant(variant: DistanceVariant) -> Self {
        CostModel {
            variant,
            ..CostModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        for (name, value) in [("insert_cost", self.insert_cost), ("delete_cost", self.delete_cost)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

/// One row of the alignment table: entry `j` is the cheapest alignment of
/// the path prefix ending at `node_id` with the first `j` turns.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    pub node_id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operation {
    #[serde(rename = "replace")]
    Substitute,
    #[serde(rename = "insert")]
    Insert,
    #[serde(rename = "delete")]
    Delete,
}

impl Operation {
    pub fn label(self) -> &'static str {
        match self {
            Operation::Substitute => "replace",
            Operation::Insert => "insert",
            Operation::Delete => "delete",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStep {
    pub operation: Operation,
    /// Path node consumed by the step; `None` for inserts.
    pub node_id: Option<String>,
    /// Dialogue turn consumed by the step; `None` for deletes.
    pub turn_index: Option<usize>,
    pub step_cost: f64,
    pub cumulative_cost: f64,
}

/// The cheapest alignment of a dialogue against its best-matching path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTrace {
    pub dialogue_id: String,
    pub steps: Vec<AlignmentStep>,
    pub best_path: FlowPath,
    /// Non-root nodes on `best_path`.
    pub path_length: usize,
    pub total: f64,
}

/// Substitution costs of one dialogue against every bucket, row-major by
/// bucket (`bucket * m + turn`).
#[derive(Debug, Clone)]
pub struct TurnCosts {
    turns: usize,
    costs: Vec<f64>,
}

impl TurnCosts {
    pub fn turns(&self) -> usize {
        self.turns
    }

    fn row(&self, bucket: usize) -> &[f64] {
        &self.costs[bucket * self.turns..(bucket + 1) * self.turns]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Choice {
    Substitute,
    Delete,
    Insert,
}

/// Scores dialogues against flows built over one bucket set.
#[derive(Debug)]
pub struct Scorer<'a> {
    space: SemanticSpace<'a>,
    cost: CostModel,
}

impl<'a> Scorer<'a> {
    pub fn new(buckets: &'a BucketSet, table: &'a EmbeddingTable, cost: CostModel) -> Result<Self> {
        cost.validate()?;
        Ok(Scorer {
            space: SemanticSpace::new(buckets, table, cost.variant)?,
            cost,
        })
    }

    pub fn cost_model(&self) -> &CostModel {
        &self.cost
    }

    pub fn space(&self) -> &SemanticSpace<'a> {
        &self.space
    }

    /// `alpha * (d1(bucket, u) + d2(bucket, B*))`, or `+inf` when actors differ.
    pub fn substitution_cost(&self, bucket: &IntentBucket, u: &Utterance) -> Result<f64> {
        if bucket.actor != u.actor {
            return Ok(f64::INFINITY);
        }
        let d1 = self.space.intent_utterance_distance(bucket, u)?;
        let nearest = self.space.nearest_bucket(u)?;
        let d2 = self.space.intent_intent_distance(bucket, nearest)?;
        Ok(self.cost.alpha * (d1 + d2))
    }

    /// Substitution costs of every turn against every bucket.
    pub fn prepare(&self, dialogue: &Dialogue) -> Result<TurnCosts> {
        let buckets = self.space.buckets();
        let m = dialogue.len();
        let mut costs = vec![f64::INFINITY; buckets.len() * m];
        let mut d1 = vec![f64::INFINITY; buckets.len()];
        for (s, turn) in dialogue.turns.iter().enumerate() {
            let v = self.space.table().get(&turn.id)?;
            // Buckets are sorted by id, so a strict comparison keeps the smallest id on ties.
            let mut nearest: Option<(usize, f64)> = None;
            for (r, bucket) in buckets.iter().enumerate() {
                if bucket.actor != turn.actor {
                    continue;
                }
                d1[r] = self.space.intent_vector_distance(r, turn.actor, v)?;
                if nearest.is_none_or(|(_, best)| d1[r] < best) {
                    nearest = Some((r, d1[r]));
                }
            }
            // No same-actor bucket means every substitution is gated anyway.
            let Some((nearest, _)) = nearest else {
                continue;
            };
            for (r, bucket) in buckets.iter().enumerate() {
                if bucket.actor == turn.actor {
                    costs[r * m + s] = self.cost.alpha * (d1[r] + self.space.intent_intent_distance_ix(r, nearest));
                }
            }
        }
        Ok(TurnCosts { turns: m, costs })
    }

    fn root_row(&self, m: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        row.push(acc);
        for _ in 0..m {
            acc += self.cost.insert_cost;
            row.push(acc);
        }
        row
    }

    /// One DP step: extends `prev` (the row of the path prefix before this
    /// node) by a node whose substitution costs are `sub`. Ties prefer
    /// substitution, then deletion, then insertion.
    fn step(&self, prev: &[f64], sub: &[f64], out: &mut [f64], mut choices: Option<&mut [Choice]>) {
        let (ins, del) = (self.cost.insert_cost, self.cost.delete_cost);
        out[0] = prev[0] + del;
        if let Some(c) = choices.as_deref_mut() {
            c[0] = Choice::Delete;
        }
        for s in 1..prev.len() {
            let mut best = prev[s - 1] + sub[s - 1];
            let mut choice = Choice::Substitute;
            let deleted = prev[s] + del;
            if deleted < best {
                best = deleted;
                choice = Choice::Delete;
            }
            let inserted = out[s - 1] + ins;
            if inserted < best {
                best = inserted;
                choice = Choice::Insert;
            }
            out[s] = best;
            if let Some(c) = choices.as_deref_mut() {
                c[s] = choice;
            }
        }
    }

    fn node_costs<'c>(&self, g: &FlowGraph, costs: &'c TurnCosts, node: usize) -> &'c [f64] {
        let bucket = g.bucket_index(node).expect("non-root nodes carry a bucket");
        costs.row(bucket)
    }

    fn check_flow(&self, g: &FlowGraph) -> Result<()> {
        // The flow must have been validated against this scorer's bucket set.
        for v in 0..g.node_count() {
            if let (Some(id), Some(ix)) = (g.bucket_id(v), g.bucket_index(v)) {
                let set = self.space.buckets();
                if ix >= set.len() || set.by_index(ix).id != id {
                    return Err(Error::InvalidConfig(format!(
                        "flow was built against a different bucket set (node {})",
                        g.id(v)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Fuzzy edit distance between a dialogue and one root-to-leaf path,
    /// with the distance row of every path node (root first).
    pub fn path_edit_distance(
        &self,
        dialogue: &Dialogue,
        g: &FlowGraph,
        path: &FlowPath,
    ) -> Result<(f64, Vec<DistanceRow>)> {
        self.check_flow(g)?;
        let nodes = g.resolve_path(path)?;
        let costs = self.prepare(dialogue)?;
        let mut rows = Vec::with_capacity(nodes.len());
        let mut current = self.root_row(dialogue.len());
        rows.push(DistanceRow {
            node_id: g.id(nodes[0]).to_string(),
            values: current.clone(),
        });
        let mut next = vec![0.0; current.len()];
        for &v in &nodes[1..] {
            self.step(&current, self.node_costs(g, &costs, v), &mut next, None);
            std::mem::swap(&mut current, &mut next);
            rows.push(DistanceRow {
                node_id: g.id(v).to_string(),
                values: current.clone(),
            });
        }
        Ok((current[dialogue.len()], rows))
    }

    fn path_distance_prepared(&self, costs: &TurnCosts, g: &FlowGraph, nodes: &[usize]) -> f64 {
        let mut current = self.root_row(costs.turns);
        let mut next = vec![0.0; current.len()];
        for &v in &nodes[1..] {
            self.step(&current, self.node_costs(g, costs, v), &mut next, None);
            std::mem::swap(&mut current, &mut next);
        }
        current[costs.turns]
    }

    /// Minimum of `path_edit_distance` over every enumerated path.
    pub fn naive_fudge(&self, dialogue: &Dialogue, g: &FlowGraph, path_cap: usize) -> Result<f64> {
        self.check_flow(g)?;
        let paths = g.enumerate_paths(path_cap)?;
        let costs = self.prepare(dialogue)?;
        let mut min_dist = f64::INFINITY;
        for path in &paths {
            let nodes = g.resolve_path(path)?;
            min_dist = min_dist.min(self.path_distance_prepared(&costs, g, &nodes));
        }
        Ok(min_dist)
    }

    /// Path distances for many paths against one dialogue, sharing the cost table.
    pub fn path_distances(&self, dialogue: &Dialogue, g: &FlowGraph, paths: &[FlowPath]) -> Result<Vec<f64>> {
        self.check_flow(g)?;
        let costs = self.prepare(dialogue)?;
        paths
            .iter()
            .map(|p| Ok(self.path_distance_prepared(&costs, g, &g.resolve_path(p)?)))
            .collect()
    }

    /// FuDGE in `O((|V| + |E|) m)` after the cost table is built.
    pub fn efficient_fudge(&self, dialogue: &Dialogue, g: &FlowGraph) -> Result<f64> {
        self.check_flow(g)?;
        let costs = self.prepare(dialogue)?;
        let table = self.fill(g, &costs, false);
        Ok(table.best_leaf(g).1)
    }

    /// Best path and operation sequence for a dialogue.
    pub fn backtrace(&self, dialogue: &Dialogue, g: &FlowGraph) -> Result<AlignmentTrace> {
        self.check_flow(g)?;
        let costs = self.prepare(dialogue)?;
        let table = self.fill(g, &costs, true);
        let (leaf, total) = table.best_leaf(g);
        let m = costs.turns;

        let mut reversed = Vec::new();
        let mut path = vec![leaf];
        let (mut v, mut s) = (leaf, m);
        while v != g.root() {
            match table.choices[v * table.width + s] {
                Choice::Substitute => {
                    reversed.push((
                        Operation::Substitute,
                        Some(v),
                        Some(s - 1),
                        self.node_costs(g, &costs, v)[s - 1],
                    ));
                    v = table.from[v * table.width + s - 1];
                    s -= 1;
                    path.push(v);
                }
                Choice::Delete => {
                    reversed.push((Operation::Delete, Some(v), None, self.cost.delete_cost));
                    v = table.from[v * table.width + s];
                    path.push(v);
                }
                Choice::Insert => {
                    reversed.push((Operation::Insert, None, Some(s - 1), self.cost.insert_cost));
                    s -= 1;
                }
            }
        }
        for t in (0..s).rev() {
            reversed.push((Operation::Insert, None, Some(t), self.cost.insert_cost));
        }

        let mut cumulative = 0.0;
        let steps = reversed
            .into_iter()
            .rev()
            .map(|(operation, node, turn_index, step_cost)| {
                cumulative += step_cost;
                AlignmentStep {
                    operation,
                    node_id: node.map(|n| g.id(n).to_string()),
                    turn_index,
                    step_cost,
                    cumulative_cost: cumulative,
                }
            })
            .collect();
        path.reverse();
        let best_path = FlowPath {
            node_ids: path.iter().map(|&n| g.id(n).to_string()).collect(),
        };
        Ok(AlignmentTrace {
            dialogue_id: dialogue.id.clone(),
            steps,
            path_length: best_path.len(),
            best_path,
            total,
        })
    }

    fn fill(&self, g: &FlowGraph, costs: &TurnCosts, keep_choices: bool) -> DagTable {
        let width = costs.turns + 1;
        let n = g.node_count();
        let mut rows = vec![0.0; n * width];
        let mut from = if keep_choices {
            vec![0usize; n * width]
        } else {
            Vec::new()
        };
        let mut choices = if keep_choices {
            vec![Choice::Insert; n * width]
        } else {
            Vec::new()
        };
        let mut merged = vec![0.0; width];
        let mut out = vec![0.0; width];

        for &v in g.topological_order() {
            if v == g.root() {
                rows[v * width..(v + 1) * width].copy_from_slice(&self.root_row(costs.turns));
                continue;
            }
            let parents = g.parents(v);
            merged.copy_from_slice(&rows[parents[0] * width..(parents[0] + 1) * width]);
            if keep_choices {
                from[v * width..(v + 1) * width].fill(parents[0]);
            }
            // Parents are sorted by id, so strict comparison keeps the lower id on ties.
            for &p in &parents[1..] {
                let row = &rows[p * width..(p + 1) * width];
                for s in 0..width {
                    if row[s] < merged[s] {
                        merged[s] = row[s];
                        if keep_choices {
                            from[v * width + s] = p;
                        }
                    }
                }
            }
            let node_choices = keep_choices.then(|| &mut choices[v * width..(v + 1) * width]);
            self.step(&merged, self.node_costs(g, costs, v), &mut out, node_choices);
            rows[v * width..(v + 1) * width].copy_from_slice(&out);
        }
        DagTable {
            width,
            rows,
            from,
            choices,
        }
    }
}

/// Per-node distance rows plus, when tracing, the winning parent of each
/// merged entry and the operation chosen for each cell.
struct DagTable {
    width: usize,
    rows: Vec<f64>,
    from: Vec<usize>,
    choices: Vec<Choice>,
}

impl DagTable {
    fn best_leaf(&self, g: &FlowGraph) -> (usize, f64) {
        let last = self.width - 1;
        let mut best = (usize::MAX, f64::INFINITY);
        for leaf in g.leaves() {
            let d = self.rows[leaf * self.width + last];
            if best.0 == usize::MAX || d < best.1 {
                best = (leaf, d);
            }
        }
        best
    }
}
