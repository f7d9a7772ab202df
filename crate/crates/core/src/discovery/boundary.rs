use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DataView};
use crate::error::Result;
use crate::indep::CiTest;
use crate::info::{cmi, Estimator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPhase {
    Grow,
    Shrink,
}

/// One independence test issued while building a boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub phase: BoundaryPhase,
    pub candidate: AttrId,
    pub given: Vec<AttrId>,
    pub p_value: f64,
    pub dependent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovBoundary {
    pub target: AttrId,
    /// Members in the order they entered during the grow phase.
    pub members: Vec<AttrId>,
    pub trace: Vec<TraceStep>,
    /// Growing stopped at the size cap with candidates left untested.
    pub truncated: bool,
}

impl MarkovBoundary {
    pub fn contains(&self, a: AttrId) -> bool {
        self.members.contains(&a)
    }
}

/// Candidates other than `target`, by descending `Î(target; X)` with ties
/// broken by attribute id.
pub fn order_by_association(view: &DataView<'_>, target: AttrId, candidates: &[AttrId]) -> Result<Vec<AttrId>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for &x in candidates.iter().filter(|&&x| x != target) {
        scored.push((cmi(view, &[target], &[x], &[], Estimator::MillerMadow)?.value, x));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|(_, x)| x).collect())
}

/// Grow-Shrink Markov boundary of `target` among `candidates`.
///
/// Grow passes over the candidates in descending association, adding `X`
/// whenever `target` and `X` are dependent given the current boundary,
/// until a pass adds nothing or `max_size` is reached. Shrink then removes
/// members independent of `target` given the rest, to a fixpoint.
pub fn markov_boundary(
    view: &DataView<'_>,
    target: AttrId,
    candidates: &[AttrId],
    tester: &dyn CiTest,
    max_size: usize,
) -> Result<MarkovBoundary> {
    let order = order_by_association(view, target, candidates)?;
    let mut members: Vec<AttrId> = Vec::new();
    let mut trace = Vec::new();
    let mut truncated = false;
    'grow: loop {
        let mut added = false;
        for &x in &order {
            if members.contains(&x) {
                continue;
            }
            if members.len() >= max_size {
                truncated = true;
                break 'grow;
            }
            let p_value = tester.p_value(view, &[target], &[x], &members)?;
            let dependent = p_value < tester.alpha();
            trace.push(TraceStep { phase: BoundaryPhase::Grow, candidate: x, given: members.clone(), p_value, dependent });
            if dependent {
                members.push(x);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    loop {
        let mut removed = None;
        for (i, &x) in members.iter().enumerate() {
            let rest: Vec<AttrId> = members.iter().copied().filter(|&m| m != x).collect();
            let p_value = tester.p_value(view, &[target], &[x], &rest)?;
            let dependent = p_value < tester.alpha();
            trace.push(TraceStep { phase: BoundaryPhase::Shrink, candidate: x, given: rest, p_value, dependent });
            if !dependent {
                removed = Some(i);
                break;
            }
        }
        match removed {
            Some(i) => {
                members.remove(i);
            }
            None => break,
        }
    }
    Ok(MarkovBoundary { target, members, trace, truncated })
}
