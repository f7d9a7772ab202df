//! Covariate and mediator discovery: attribute pruning, Grow-Shrink Markov
//! boundaries and collider-based parent detection.

mod boundary;
mod cd;
mod fgs;
mod prune;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DataView};
use crate::error::{Error, Result};
use crate::indep::CiTest;

pub use boundary::{markov_boundary, order_by_association, BoundaryPhase, MarkovBoundary, TraceStep};
pub use cd::ParentSearch;
pub use fgs::{fgs_parents, FgsResult};
pub use prune::{drop_fd_attrs, drop_keylike_attrs, entropy_trends, EntropyTrend, KeylikeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    /// Threshold in nats for approximate functional dependencies.
    pub fd_epsilon: f64,
    /// `None` disables key-like attribute dropping.
    pub keylike: Option<KeylikeConfig>,
    pub max_boundary: usize,
    /// Largest attribute set counted in one pass when materializing the
    /// boundaries used by a parent search.
    pub max_materialize: usize,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self { fd_epsilon: 0.01, keylike: Some(KeylikeConfig::default()), max_boundary: 8, max_materialize: 16, seed: 0 }
    }
}

/// Markov boundaries and parent searches over a fixed set of candidate
/// attributes, memoizing boundaries.
pub struct Discoverer<'v, 'a> {
    view: &'v DataView<'a>,
    tester: &'v dyn CiTest,
    candidates: Vec<AttrId>,
    max_boundary: usize,
    max_materialize: usize,
    boundaries: Mutex<HashMap<AttrId, Arc<MarkovBoundary>>>,
}

impl<'v, 'a> Discoverer<'v, 'a> {
    pub fn new(view: &'v DataView<'a>, tester: &'v dyn CiTest, candidates: &[AttrId], max_boundary: usize) -> Self {
        let mut candidates = candidates.to_vec();
        candidates.sort_unstable();
        candidates.dedup();
        Self { view, tester, candidates, max_boundary, max_materialize: 16, boundaries: Mutex::default() }
    }

    pub fn with_max_materialize(mut self, max: usize) -> Self {
        self.max_materialize = max;
        self
    }

    pub fn view(&self) -> &'v DataView<'a> {
        self.view
    }

    pub fn tester(&self) -> &'v dyn CiTest {
        self.tester
    }

    pub fn candidates(&self) -> &[AttrId] {
        &self.candidates
    }

    pub fn markov_boundary(&self, target: AttrId) -> Result<Arc<MarkovBoundary>> {
        if !self.candidates.contains(&target) {
            return Err(Error::InvalidConfig(format!("{target} is not a discovery candidate")));
        }
        if let Some(mb) = self.boundaries.lock().expect("boundary memo poisoned").get(&target) {
            return Ok(Arc::clone(mb));
        }
        let mb = Arc::new(markov_boundary(self.view, target, &self.candidates, self.tester, self.max_boundary)?);
        self.boundaries.lock().expect("boundary memo poisoned").insert(target, Arc::clone(&mb));
        Ok(mb)
    }

    fn materialize(&self, attrs: &[AttrId]) -> Result<()> {
        if attrs.len() <= self.max_materialize {
            self.view.materialize(&[attrs.to_vec()])?;
        }
        Ok(())
    }
}

/// Discovered covariates of the treatment and mediators of each outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovariateSet {
    pub treatment: AttrId,
    pub covariates: Vec<AttrId>,
    /// `(outcome, mediators)` in outcome order.
    pub mediators: Vec<(AttrId, Vec<AttrId>)>,
    pub dropped_fd: Vec<AttrId>,
    pub dropped_entropy: Vec<AttrId>,
    pub fallback_used: bool,
    /// Outcomes whose mediators came from the boundary fallback.
    pub mediator_fallback: Vec<AttrId>,
    pub truncated: bool,
    pub boundaries: Vec<MarkovBoundary>,
    /// Independence tests executed during discovery.
    pub tests: usize,
}

impl CovariateSet {
    /// Result with nothing discovered.
    pub fn empty(treatment: AttrId) -> Self {
        Self {
            treatment,
            covariates: Vec::new(),
            mediators: Vec::new(),
            dropped_fd: Vec::new(),
            dropped_entropy: Vec::new(),
            fallback_used: false,
            mediator_fallback: Vec::new(),
            truncated: false,
            boundaries: Vec::new(),
            tests: 0,
        }
    }

    pub fn mediators_of(&self, outcome: AttrId) -> &[AttrId] {
        self.mediators.iter().find(|(y, _)| *y == outcome).map_or(&[], |(_, m)| m)
    }
}

/// Prunes the candidates, then discovers the parents of `treatment`
/// (outcomes excluded) and of every outcome (treatment excluded).
/// `candidates = None` uses every attribute of the dataset.
pub fn discover(
    view: &DataView<'_>,
    treatment: AttrId,
    outcomes: &[AttrId],
    candidates: Option<&[AttrId]>,
    tester: &dyn CiTest,
    cfg: &DiscoveryConfig,
) -> Result<CovariateSet> {
    let all: Vec<AttrId> = match candidates {
        Some(c) => c.to_vec(),
        None => view.dataset().attr_ids().collect(),
    };
    let protected = |a: &AttrId| *a == treatment || outcomes.contains(a);
    let others: Vec<AttrId> = all.iter().copied().filter(|a| !protected(a)).collect();
    let dropped_fd = drop_fd_attrs(view, treatment, &others, cfg.fd_epsilon)?;
    let others: Vec<AttrId> = others.into_iter().filter(|a| !dropped_fd.contains(a)).collect();
    let dropped_entropy = match &cfg.keylike {
        Some(k) => drop_keylike_attrs(view, &others, k, cfg.seed)?,
        None => Vec::new(),
    };
    let mut kept: Vec<AttrId> = others.into_iter().filter(|a| !dropped_entropy.contains(a)).collect();
    kept.push(treatment);
    kept.extend_from_slice(outcomes);

    let before = tester.executed();
    let disc = Discoverer::new(view, tester, &kept, cfg.max_boundary).with_max_materialize(cfg.max_materialize);
    let cov = disc.parents(treatment, outcomes)?;
    let mut boundaries = vec![(*disc.markov_boundary(treatment)?).clone()];
    let mut mediators = Vec::new();
    let mut mediator_fallback = Vec::new();
    let mut truncated = cov.truncated;
    for &y in outcomes {
        let m = disc.parents(y, &[treatment])?;
        if m.fallback_used {
            mediator_fallback.push(y);
        }
        truncated |= m.truncated;
        mediators.push((y, m.parents));
        boundaries.push((*disc.markov_boundary(y)?).clone());
    }
    Ok(CovariateSet {
        treatment,
        covariates: cov.parents,
        mediators,
        dropped_fd,
        dropped_entropy,
        fallback_used: cov.fallback_used,
        mediator_fallback,
        truncated,
        boundaries,
        tests: tester.executed() - before,
    })
}
