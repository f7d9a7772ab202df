use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::boundary::order_by_association;
use super::Discoverer;
use crate::data::AttrId;
use crate::error::Result;

/// Parents of one target found by covariate detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParentSearch {
    pub target: AttrId,
    pub boundary: Vec<AttrId>,
    /// Co-parent pairs collected in the first phase, before filtering.
    pub candidates: Vec<AttrId>,
    pub parents: Vec<AttrId>,
    /// No co-parent pair was found and the boundary minus `exclude` was
    /// returned instead.
    pub fallback_used: bool,
    pub truncated: bool,
}

impl Discoverer<'_, '_> {
    /// Covariate detection for `target`.
    ///
    /// Phase I: for each boundary member `Z`, looks for a set
    /// `S ⊆ MB(Z) − {target, W}` and a member `W` with `Z ⊥ W | S` and
    /// `Z ⊥̸ W | S ∪ {target}`, i.e. a collider at `target`; both `Z` and
    /// `W` are kept. Phase II drops kept attributes that some subset of the
    /// boundary separates from `target`. If nothing is kept, falls back to
    /// the boundary. Attributes in `exclude` never appear in the result.
    pub fn parents(&self, target: AttrId, exclude: &[AttrId]) -> Result<ParentSearch> {
        let mb_t = self.markov_boundary(target)?;
        let view = self.view();
        let tester = self.tester();
        let mut truncated = mb_t.truncated;
        let mut kept: BTreeSet<AttrId> = BTreeSet::new();

        for &z in &mb_t.members {
            if kept.contains(&z) {
                continue;
            }
            let mb_z = self.markov_boundary(z)?;
            truncated |= mb_z.truncated;
            let mut cover: Vec<AttrId> = mb_t.members.iter().chain(&mb_z.members).copied().chain([target, z]).collect();
            cover.sort_unstable();
            cover.dedup();
            self.materialize(&cover)?;

            let pool: Vec<AttrId> = order_by_association(view, z, &mb_z.members)?.into_iter().filter(|&a| a != target).collect();
            let partners: Vec<AttrId> = mb_t.members.iter().copied().filter(|&w| w != z).collect();
            'search: for size in 0..=pool.len() {
                for s in pool.iter().copied().combinations(size) {
                    for &w in partners.iter().filter(|w| !s.contains(w)) {
                        if !tester.independent(view, &[z], &[w], &s)? {
                            continue;
                        }
                        let mut with_t = s.clone();
                        with_t.push(target);
                        if !tester.independent(view, &[z], &[w], &with_t)? {
                            kept.insert(z);
                            kept.insert(w);
                            break 'search;
                        }
                    }
                }
            }
        }

        let candidates: Vec<AttrId> = kept.iter().copied().collect();
        let mut parents = Vec::new();
        for &c in &candidates {
            let rest: Vec<AttrId> = mb_t.members.iter().copied().filter(|&m| m != c).collect();
            let mut separated = false;
            'sep: for size in 0..=rest.len() {
                for s in rest.iter().copied().combinations(size) {
                    if tester.independent(view, &[target], &[c], &s)? {
                        separated = true;
                        break 'sep;
                    }
                }
            }
            if !separated {
                parents.push(c);
            }
        }

        let fallback_used = candidates.is_empty() && !mb_t.members.is_empty();
        if fallback_used {
            parents = mb_t.members.clone();
            parents.sort_unstable();
        }
        parents.retain(|p| !exclude.contains(p) && *p != target);
        Ok(ParentSearch { target, boundary: mb_t.members.clone(), candidates, parents, fallback_used, truncated })
    }
}
