use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{warn_unknown, BucketSet};
use crate::error::{Error, Result};

/// Default limit on the number of paths `enumerate_paths` will materialize.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Serialized form of a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDocument {
    pub root: String,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<(String, String)>,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket: Option<String>,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// A rooted DAG whose non-root nodes are labeled with intent buckets.
///
/// Nodes are addressed internally by dense indices; children and parents
/// lists are kept sorted by node id so every traversal is deterministic.
#[derive(Debug, Clone)]
pub struct FlowGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    buckets: Vec<Option<String>>,
    bucket_ix: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    root: usize,
    topo: Vec<usize>,
    edge_count: usize,
}

impl FlowGraph {
    /// Builds and validates a flow. `nodes` may omit the root; if present it
    /// must have no bucket.
    pub fn new(
        root: &str,
        nodes: Vec<(String, Option<String>)>,
        edges: Vec<(String, String)>,
        bucket_set: &BucketSet,
    ) -> Result<Self> {
        let mut ids = Vec::with_capacity(nodes.len() + 1);
        let mut buckets = Vec::with_capacity(nodes.len() + 1);
        let mut index = HashMap::with_capacity(nodes.len() + 1);
        let root_listed = nodes.iter().any(|(id, _)| id == root);
        if !root_listed {
            index.insert(root.to_string(), 0);
            ids.push(root.to_string());
            buckets.push(None);
        }
        for (id, bucket) in nodes {
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::DuplicateNodeId(id));
            }
            ids.push(id);
            buckets.push(bucket);
        }
        let root_ix = index[root];

        let n = ids.len();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for (from, to) in &edges {
            let f = *index.get(from).ok_or_else(|| Error::UnknownNode(from.clone()))?;
            let t = *index.get(to).ok_or_else(|| Error::UnknownNode(to.clone()))?;
            if !seen.insert((f, t)) {
                return Err(Error::DuplicateEdge {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            children[f].push(t);
            parents[t].push(f);
        }
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        }

        if !parents[root_ix].is_empty() {
            return Err(Error::RootHasParent(root.to_string()));
        }

        let mut bucket_ix = Vec::with_capacity(n);
        for (ix, bucket) in buckets.iter().enumerate() {
            match (ix == root_ix, bucket) {
                (true, Some(_)) => return Err(Error::RootWithBucket(ids[ix].clone())),
                (true, None) => bucket_ix.push(None),
                (false, None) => return Err(Error::MissingBucket(ids[ix].clone())),
                (false, Some(b)) => {
                    let pos = bucket_set.position(b).ok_or_else(|| Error::DanglingBucketRef {
                        node: ids[ix].clone(),
                        bucket: b.clone(),
                    })?;
                    bucket_ix.push(Some(pos));
                }
            }
        }

        let topo = topological_order(&ids, &children, &parents)?;

        let mut reached = vec![false; n];
        reached[root_ix] = true;
        let mut stack = vec![root_ix];
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                if !reached[c] {
                    reached[c] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(ix) = (0..n).filter(|&ix| !reached[ix]).min_by(|&a, &b| ids[a].cmp(&ids[b])) {
            return Err(Error::UnreachableNode(ids[ix].clone()));
        }

        if children.iter().all(|c| !c.is_empty()) {
            return Err(Error::NoLeaf);
        }

        Ok(FlowGraph {
            ids,
            index,
            buckets,
            bucket_ix,
            children,
            parents,
            root: root_ix,
            topo,
            edge_count: edges.len(),
        })
    }

    pub fn from_document(doc: FlowDocument, bucket_set: &BucketSet) -> Result<Self> {
        warn_unknown(&doc.extra, "flow");
        let nodes = doc
            .nodes
            .into_iter()
            .map(|n| {
                warn_unknown(&n.extra, &format!("node {}", n.id));
                (n.id, n.bucket)
            })
            .collect();
        FlowGraph::new(&doc.root, nodes, doc.edges, bucket_set)
    }

    pub fn to_document(&self) -> FlowDocument {
        let nodes = self
            .ids
            .iter()
            .zip(&self.buckets)
            .map(|(id, bucket)| NodeRecord {
                id: id.clone(),
                bucket: bucket.clone(),
                extra: BTreeMap::new(),
            })
            .collect();
        FlowDocument {
            root: self.ids[self.root].clone(),
            nodes,
            edges: self.edges().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            extra: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("flow document serializes")
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> &str {
        &self.ids[self.root]
    }

    pub fn id(&self, node: usize) -> &str {
        &self.ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn bucket_id(&self, node: usize) -> Option<&str> {
        self.buckets[node].as_deref()
    }

    /// Position of the node's bucket in the `BucketSet` the flow was built against.
    pub fn bucket_index(&self, node: usize) -> Option<usize> {
        self.bucket_ix[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.children[node].is_empty()
    }

    /// Leaves in ascending id order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut leaves: Vec<usize> = (0..self.ids.len()).filter(|&v| self.is_leaf(v)).collect();
        leaves.sort_by(|&a, &b| self.ids[a].cmp(&self.ids[b]));
        leaves
    }

    /// Topological order; among ready nodes the smallest id comes first.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Edges grouped by source in topological order, targets by id.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.topo.iter().flat_map(move |&v| {
            self.children[v]
                .iter()
                .map(move |&c| (self.ids[v].as_str(), self.ids[c].as_str()))
        })
    }

    /// Number of root-to-leaf paths, saturating at `u128::MAX`.
    pub fn path_count(&self) -> u128 {
        let mut count = vec![0u128; self.ids.len()];
        for &v in self.topo.iter().rev() {
            count[v] = if self.is_leaf(v) {
                1
            } else {
                self.children[v]
                    .iter()
                    .fold(0u128, |acc, &c| acc.saturating_add(count[c]))
            };
        }
        count[self.root]
    }

    /// All root-to-leaf paths in lexicographic order of their node id
    /// sequences. Fails with `PathExplosion` when there are more than `cap`.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<FlowPath>> {
        if self.path_count() > cap as u128 {
            return Err(Error::PathExplosion { cap });
        }
        let mut paths = Vec::new();
        let mut prefix = vec![self.root];
        // (node, next child position)
        let mut stack = vec![(self.root, 0usize)];
        while let Some((v, next)) = stack.last_mut() {
            let v = *v;
            if self.is_leaf(v) {
                paths.push(FlowPath {
                    node_ids: prefix.iter().map(|&n| self.ids[n].clone()).collect(),
                });
                stack.pop();
                prefix.pop();
                continue;
            }
            if *next < self.children[v].len() {
                let c = self.children[v][*next];
                *next += 1;
                stack.push((c, 0));
                prefix.push(c);
            } else {
                stack.pop();
                prefix.pop();
            }
        }
        Ok(paths)
    }

    /// Resolves a path to node indices, checking that it is a root-to-leaf
    /// walk along edges of this flow.
    pub fn resolve_path(&self, path: &FlowPath) -> Result<Vec<usize>> {
        let nodes = path
            .node_ids
            .iter()
            .map(|id| self.index_of(id).ok_or_else(|| Error::UnknownNode(id.clone())))
            .collect::<Result<Vec<_>>>()?;
        match nodes.first() {
            Some(&first) if first == self.root => {}
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "path does not start at root {}",
                    self.root_id()
                )))
            }
        }
        for pair in nodes.windows(2) {
            if !self.children[pair[0]].contains(&pair[1]) {
                return Err(Error::InvalidConfig(format!(
                    "{} -> {} is not an edge",
                    self.ids[pair[0]], self.ids[pair[1]]
                )));
            }
        }
        if !self.is_leaf(*nodes.last().expect("non-empty")) {
            return Err(Error::InvalidConfig("path does not end at a leaf".into()));
        }
        Ok(nodes)
    }

    /// The sub-flow made of the union of the given paths' nodes and edges.
    pub fn union_of_paths(&self, paths: &[FlowPath], bucket_set: &BucketSet) -> Result<FlowGraph> {
        let mut keep = vec![false; self.ids.len()];
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        keep[self.root] = true;
        for path in paths {
            let nodes = self.resolve_path(path)?;
            for pair in nodes.windows(2) {
                keep[pair[1]] = true;
                if seen.insert((pair[0], pair[1])) {
                    edges.push((self.ids[pair[0]].clone(), self.ids[pair[1]].clone()));
                }
            }
        }
        let nodes = (0..self.ids.len())
            .filter(|&v| keep[v])
            .map(|v| (self.ids[v].clone(), self.buckets[v].clone()))
            .collect();
        FlowGraph::new(self.root_id(), nodes, edges, bucket_set)
    }
}

fn topological_order(ids: &[String], children: &[Vec<usize>], parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = ids.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<(&str, usize)>> = (0..n)
        .filter(|&v| indegree[v] == 0)
        .map(|v| Reverse((ids[v].as_str(), v)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, v))) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse((ids[c].as_str(), c)));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every node left over has a left-over parent; walk parents until a node
    // repeats, which closes a cycle.
    let remaining: Vec<bool> = indegree.iter().map(|&d| d > 0).collect();
    let start = (0..n)
        .filter(|&v| remaining[v])
        .min_by(|&a, &b| ids[a].cmp(&ids[b]))
        .expect("some node remains");
    let mut visited = vec![false; n];
    let mut v = start;
    loop {
        visited[v] = true;
        let p = *parents[v]
            .iter()
            .find(|&&p| remaining[p])
            .expect("remaining node has a remaining parent");
        if visited[p] {
            return Err(Error::CycleDetected {
                from: ids[p].clone(),
                to: ids[v].clone(),
            });
        }
        v = p;
    }
}

/// A root-to-leaf walk, root included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FlowPath {
    pub node_ids: Vec<String>,
}

impl FlowPath {
    /// Number of non-root nodes.
    pub fn len(&self) -> usize {
        self.node_ids.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses a flow file against an already-parsed bucket file.
pub fn load_flow(flow_document: &str, buckets_document: &str) -> Result<(FlowGraph, BucketSet)> {
    let bucket_set = BucketSet::from_json(buckets_document)?;
    let doc: FlowDocument = serde_json::from_str(flow_document).map_err(|source| Error::Parse {
        line: source.line(),
        source,
    })?;
    let flow = FlowGraph::from_document(doc, &bucket_set)?;
    Ok((flow, bucket_set))
}
