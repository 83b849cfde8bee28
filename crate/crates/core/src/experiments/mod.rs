//! Evaluation studies: in-task vs out-of-task separation, path-count
//! sweeps, and the synthetic data they run on.

pub mod scenarios;
mod synth;

pub use synth::{synthesize, NoiseConfig, SynthesisConfig, Synthetic};

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::Scorer;
use crate::error::{Error, Result};
use crate::metrics::{self, corpus_fudge, mean_std, Algorithm};
use crate::model::{Corpus, FlowGraph, FlowPath};

/// A path with the corpus evidence used to rank it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPath {
    pub path: FlowPath,
    /// Dialogues whose best alignment runs along this path.
    pub support: usize,
    /// Sum over the corpus of the path's edit distance to each dialogue.
    pub total_cost: f64,
}

/// Orders paths by support (descending), then total alignment cost
/// (ascending), then node ids.
pub fn rank_paths(g: &FlowGraph, corpus: &Corpus, scorer: &Scorer<'_>, path_cap: usize) -> Result<Vec<RankedPath>> {
    let paths = g.enumerate_paths(path_cap)?;
    let lookup: HashMap<&FlowPath, usize> = paths.iter().enumerate().map(|(i, p)| (p, i)).collect();

    let per_dialogue = corpus
        .dialogues()
        .par_iter()
        .map(|d| {
            let best = scorer.backtrace(d, g)?.best_path;
            let distances = scorer.path_distances(d, g, &paths)?;
            Ok((lookup[&best], distances))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ranked: Vec<RankedPath> = paths
        .iter()
        .map(|p| RankedPath {
            path: p.clone(),
            support: 0,
            total_cost: 0.0,
        })
        .collect();
    for (best, distances) in &per_dialogue {
        ranked[*best].support += 1;
        for (r, d) in ranked.iter_mut().zip(distances) {
            r.total_cost += d;
        }
    }
    ranked.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then(a.total_cost.total_cmp(&b.total_cost))
            .then_with(|| a.path.cmp(&b.path))
    });
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub nc: f64,
    pub nf: f64,
    pub ff1: f64,
}

/// Scores the sub-flow made of the top-`k` ranked paths for every `k`.
pub fn sweep(g: &FlowGraph, corpus: &Corpus, scorer: &Scorer<'_>, path_cap: usize) -> Result<Vec<SweepPoint>> {
    let ranked = rank_paths(g, corpus, scorer, path_cap)?;
    sweep_ranked(g, corpus, scorer, &ranked)
}

/// Like [`sweep`], reusing an existing ranking.
pub fn sweep_ranked(
    g: &FlowGraph,
    corpus: &Corpus,
    scorer: &Scorer<'_>,
    ranked: &[RankedPath],
) -> Result<Vec<SweepPoint>> {
    let paths: Vec<FlowPath> = ranked.iter().map(|r| r.path.clone()).collect();
    let buckets = scorer.space().buckets();
    (1..=paths.len())
        .into_par_iter()
        .map(|k| {
            let sub = g.union_of_paths(&paths[..k], buckets)?;
            let score = corpus_fudge(corpus, &sub, scorer, Algorithm::Efficient)?;
            let norm = metrics::ff1(score.mean, metrics::complexity(&sub), corpus)?;
            Ok(SweepPoint {
                k,
                nc: norm.nc,
                nf: norm.nf,
                ff1: norm.ff1,
            })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("k,nc,nf,ff1\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.k, p.nc, p.nf, p.ff1));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl GroupStats {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        GroupStats {
            mean,
            std,
            n: values.len(),
        }
    }
}

/// Same statistics with each dialogue's FuDGE divided by its turn count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerTurnStats {
    pub positives: GroupStats,
    pub negatives: GroupStats,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub positives: GroupStats,
    pub negatives: GroupStats,
    /// `negatives.mean - positives.mean`
    pub margin: f64,
    pub per_turn: PerTurnStats,
}

/// FuDGE statistics of in-task (positives) and out-of-task (negatives)
/// dialogues against one flow.
pub fn separation(
    flow: &FlowGraph,
    in_task: &Corpus,
    out_task: &Corpus,
    scorer: &Scorer<'_>,
) -> Result<SeparationReport> {
    if in_task.is_empty() || out_task.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let score = |c: &Corpus| -> Result<(Vec<f64>, Vec<f64>)> {
        let s = corpus_fudge(c, flow, scorer, Algorithm::Efficient)?;
        let raw: Vec<f64> = s.per_dialogue.iter().map(|d| d.fudge).collect();
        let per_turn = raw
            .iter()
            .zip(c.dialogues())
            .map(|(f, d)| f / d.len().max(1) as f64)
            .collect();
        Ok((raw, per_turn))
    };
    let (pos, pos_turn) = score(in_task)?;
    let (neg, neg_turn) = score(out_task)?;
    let positives = GroupStats::of(&pos);
    let negatives = GroupStats::of(&neg);
    let pt_pos = GroupStats::of(&pos_turn);
    let pt_neg = GroupStats::of(&neg_turn);
    Ok(SeparationReport {
        positives,
        negatives,
        margin: negatives.mean - positives.mean,
        per_turn: PerTurnStats {
            positives: pt_pos,
            negatives: pt_neg,
            margin: pt_neg.mean - pt_pos.mean,
        },
    })
}

/// Samples `ratio` of the in-task dialogues (at least one) and the same
/// number of out-of-task dialogues, keeping corpus order.
pub fn sample_mix<R: Rng>(in_task: &Corpus, out_task: &Corpus, ratio: f64, rng: &mut R) -> Result<(Corpus, Corpus)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!("ratio must be in (0, 1], got {ratio}")));
    }
    if in_task.is_empty() || out_task.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let k = ((in_task.len() as f64 * ratio).round() as usize).clamp(1, in_task.len());
    let pick = |c: &Corpus, k: usize, rng: &mut R| -> Result<Corpus> {
        let mut ix = sample(rng, c.len(), k.min(c.len())).into_vec();
        ix.sort_unstable();
        Corpus::new(ix.into_iter().map(|i| c.dialogues()[i].clone()).collect())
    };
    let positives = pick(in_task, k, rng)?;
    let negatives = pick(out_task, k, rng)?;
    Ok((positives, negatives))
}
