//! Corpus-level aggregates: mean FuDGE, flow complexity and FF1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::Scorer;
use crate::error::{Error, Result};
use crate::model::{Corpus, FlowGraph, DEFAULT_PATH_CAP};

/// Which FuDGE implementation to run per dialogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Efficient,
    Naive,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "efficient" => Ok(Algorithm::Efficient),
            "naive" => Ok(Algorithm::Naive),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueScore {
    pub dialogue_id: String,
    pub fudge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub per_dialogue: Vec<DialogueScore>,
    pub mean: f64,
    pub std: f64,
}

/// Population mean and standard deviation, summed in slice order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// FuDGE of every dialogue against `g`, plus mean and std. Dialogues are
/// scored in parallel; the reduction runs in corpus order.
pub fn corpus_fudge(corpus: &Corpus, g: &FlowGraph, scorer: &Scorer<'_>, algorithm: Algorithm) -> Result<CorpusScore> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let per_dialogue = corpus
        .dialogues()
        .par_iter()
        .map(|d| {
            let fudge = match algorithm {
                Algorithm::Efficient => scorer.efficient_fudge(d, g)?,
                Algorithm::Naive => scorer.naive_fudge(d, g, DEFAULT_PATH_CAP)?,
            };
            Ok(DialogueScore {
                dialogue_id: d.id.clone(),
                fudge,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_dialogue.iter().map(|s| s.fudge).collect();
    let (mean, std) = mean_std(&values);
    Ok(CorpusScore {
        per_dialogue,
        mean,
        std,
    })
}

/// Number of nodes, root included.
pub fn complexity(g: &FlowGraph) -> usize {
    g.node_count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub nc: f64,
    pub nf: f64,
    pub ff1: f64,
}

/// Harmonic mean of `1 - nc` and `1 - nf`; zero when both are zero.
pub fn ff1_score(nc: f64, nf: f64) -> f64 {
    let (a, b) = (1.0 - nc, 1.0 - nf);
    if a + b == 0.0 {
        return 0.0;
    }
    2.0 * a * b / (a + b)
}

/// Normalizes complexity by the corpus size in utterances and mean FuDGE by
/// the mean dialogue length, both clamped to `[0, 1]`, and combines them.
pub fn ff1(mean_fudge: f64, complexity: usize, corpus: &Corpus) -> Result<Normalized> {
    let avg = match corpus.avg_length() {
        Some(avg) if avg > 0.0 => avg,
        _ => return Err(Error::EmptyCorpus),
    };
    let nc = (complexity as f64 / corpus.total_utterances() as f64).clamp(0.0, 1.0);
    let nf = (mean_fudge / avg).clamp(0.0, 1.0);
    Ok(Normalized {
        nc,
        nf,
        ff1: ff1_score(nc, nf),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub flow: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub per_dialogue: Vec<DialogueScore>,
    pub mean_fudge: f64,
    pub std_fudge: f64,
    pub complexity: usize,
    pub nc: f64,
    pub nf: f64,
    pub ff1: f64,
}

pub const CSV_HEADER: &str = "flow,N,complexity,nc,mean_fudge,std_fudge,nf,ff1";

impl MetricReport {
    pub fn to_csv(&self) -> String {
        format!(
            "{CSV_HEADER}\n{},{},{},{},{},{},{},{}\n",
            csv_field(&self.flow),
            self.n,
            self.complexity,
            self.nc,
            self.mean_fudge,
            self.std_fudge,
            self.nf,
            self.ff1
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Scores a corpus against a flow and computes every aggregate.
pub fn evaluate(
    flow_name: &str,
    corpus: &Corpus,
    g: &FlowGraph,
    scorer: &Scorer<'_>,
    algorithm: Algorithm,
) -> Result<MetricReport> {
    let score = corpus_fudge(corpus, g, scorer, algorithm)?;
    let complexity = complexity(g);
    let norm = ff1(score.mean, complexity, corpus)?;
    Ok(MetricReport {
        flow: flow_name.to_string(),
        n: corpus.len(),
        per_dialogue: score.per_dialogue,
        mean_fudge: score.mean,
        std_fudge: score.std,
        complexity,
        nc: norm.nc,
        nf: norm.nf,
        ff1: norm.ff1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Actor, BucketSet, Dialogue, IntentBucket};
    use proptest::prelude::*;

    fn corpus(lengths: &[usize]) -> Corpus {
        Corpus::new(
            lengths
                .iter()
                .enumerate()
                .map(|(i, &n)| Dialogue::from_turns(format!("d{i}"), (0..n).map(|_| (Actor::User, "t"))).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn flow(nodes: &[&str], edges: &[(&str, &str)]) -> FlowGraph {
        let set = BucketSet::new(vec![IntentBucket::new(
            "b",
            "b",
            Actor::User,
            vec![("m".into(), "x".into())],
        )
        .unwrap()])
        .unwrap();
        FlowGraph::new(
            "root",
            nodes.iter().map(|n| (n.to_string(), Some("b".to_string()))).collect(),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            &set,
        )
        .unwrap()
    }

    #[test]
    fn mean_and_population_std() {
        assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
        assert!(mean_std(&[0.7, 0.7, 0.7]).1 < 1e-12);
    }

    #[test]
    fn complexity_counts_root() {
        assert_eq!(complexity(&flow(&[], &[])), 1);
        assert_eq!(
            complexity(&flow(&["a", "b", "c"], &[("root", "a"), ("a", "b"), ("b", "c")])),
            4
        );
        let diamond = flow(
            &["A", "B", "C", "D"],
            &[("root", "A"), ("root", "B"), ("A", "C"), ("B", "C"), ("C", "D")],
        );
        assert_eq!(complexity(&diamond), 5);
    }

    #[test]
    fn ff1_examples() {
        assert!((ff1_score(0.44, 0.03) - 0.71).abs() < 0.005);
        assert!((ff1_score(0.23, 0.27) - 0.75).abs() < 0.005);
        assert!((ff1_score(0.5, 0.5) - 0.5).abs() < 1e-12);
        assert_eq!(ff1_score(1.0, 1.0), 0.0);
        assert_eq!(ff1_score(0.0, 0.0), 1.0);
    }

    #[test]
    fn normalization_clamps() {
        let c = corpus(&[2, 2]);
        let n = ff1(10.0, 100, &c).unwrap();
        assert_eq!((n.nc, n.nf, n.ff1), (1.0, 1.0, 0.0));
        let n = ff1(1.0, 2, &c).unwrap();
        assert_eq!((n.nc, n.nf), (0.5, 0.5));
        assert!(matches!(ff1(1.0, 2, &corpus(&[])), Err(Error::EmptyCorpus)));
        assert!(matches!(ff1(0.0, 1, &corpus(&[0, 0])), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn csv_row() {
        let report = MetricReport {
            flow: "a,b".into(),
            n: 2,
            per_dialogue: vec![],
            mean_fudge: 1.5,
            std_fudge: 0.5,
            complexity: 4,
            nc: 0.25,
            nf: 0.5,
            ff1: 0.6,
        };
        assert_eq!(
            report.to_csv(),
            format!("{CSV_HEADER}\n\"a,b\",2,4,0.25,1.5,0.5,0.5,0.6\n")
        );
    }

    proptest! {
        #[test]
        fn ff1_symmetric_and_bounded(nc in 0.0f64..=1.0, nf in 0.0f64..=1.0) {
            let v = ff1_score(nc, nf);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - ff1_score(nf, nc)).abs() < 1e-12);
            if nc == 1.0 || nf == 1.0 {
                prop_assert_eq!(v, 0.0);
            }
            if v == 1.0 {
                prop_assert!(nc == 0.0 && nf == 0.0);
            }
        }

        #[test]
        fn ff1_non_increasing(nc in 0.0f64..=1.0, nf in 0.0f64..=1.0, dn in 0.0f64..=1.0) {
            let nc2 = (nc + dn).min(1.0);
            let nf2 = (nf + dn).min(1.0);
            prop_assert!(ff1_score(nc2, nf) <= ff1_score(nc, nf) + 1e-12);
            prop_assert!(ff1_score(nc, nf2) <= ff1_score(nc, nf) + 1e-12);
        }
    }
}
