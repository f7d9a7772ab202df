use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CausalDag;
use crate::error::{Error, Result};

/// Which nodes enter a [`RecoveryScore`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryFilter {
    #[default]
    AllNodes,
    /// Nodes with at least two parents, two of which are not adjacent.
    NonadjacentParents,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub node: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub filter: RecoveryFilter,
    pub nodes: Vec<NodeScore>,
    /// Mean F1 over the included nodes; `None` when no node qualifies.
    pub mean_f1: Option<f64>,
}

fn has_nonadjacent_parents(dag: &CausalDag, v: usize) -> bool {
    let p = dag.parents(v);
    p.iter().enumerate().any(|(i, &a)| p[i + 1..].iter().any(|&b| !dag.adjacent(a, b)))
}

/// Per-node set precision, recall and F1 of discovered parents against the
/// true ones. Nodes absent from `discovered` count as having no discovered
/// parents. An empty discovered set scores precision 1 only when the true
/// set is empty too, and likewise for recall; F1 is 0 when both are 0.
pub fn score_recovery(
    dag: &CausalDag,
    discovered: &BTreeMap<String, BTreeSet<String>>,
    filter: RecoveryFilter,
) -> Result<RecoveryScore> {
    for (node, parents) in discovered {
        dag.node(node)?;
        if let Some(p) = parents.iter().find(|p| dag.node(p).is_err()) {
            return Err(Error::UnknownNode(p.clone()));
        }
    }
    let empty = BTreeSet::new();
    let mut nodes = Vec::new();
    for v in 0..dag.len() {
        if filter == RecoveryFilter::NonadjacentParents && !has_nonadjacent_parents(dag, v) {
            continue;
        }
        let name = &dag.nodes()[v];
        let truth: BTreeSet<&str> = dag.parents(v).iter().map(|&p| dag.nodes()[p].as_str()).collect();
        let found: BTreeSet<&str> = discovered.get(name).unwrap_or(&empty).iter().map(String::as_str).collect();
        let tp = truth.intersection(&found).count() as f64;
        let ratio = |den: usize, other_empty: bool| {
            if den == 0 {
                if other_empty {
                    1.0
                } else {
                    0.0
                }
            } else {
                tp / den as f64
            }
        };
        let precision = ratio(found.len(), truth.is_empty());
        let recall = ratio(truth.len(), found.is_empty());
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        nodes.push(NodeScore { node: name.clone(), precision, recall, f1 });
    }
    let mean_f1 = (!nodes.is_empty()).then(|| nodes.iter().map(|s| s.f1).sum::<f64>() / nodes.len() as f64);
    Ok(RecoveryScore { filter, nodes, mean_f1 })
}
