use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::Discoverer;
use crate::data::AttrId;
use crate::error::Result;

/// Parents of every node from full Grow-Shrink structure discovery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgsResult {
    pub nodes: Vec<AttrId>,
    /// Parent sets aligned with `nodes`.
    pub parents: Vec<Vec<AttrId>>,
    pub neighbors: Vec<Vec<AttrId>>,
    /// Independence tests executed, boundaries included.
    pub tests: usize,
}

fn subsets_exist<F>(pool: &[AttrId], mut f: F) -> Result<bool>
where
    F: FnMut(&[AttrId]) -> Result<bool>,
{
    for size in 0..=pool.len() {
        for s in pool.iter().copied().combinations(size) {
            if f(&s)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn smaller(a: Vec<AttrId>, b: Vec<AttrId>) -> Vec<AttrId> {
    if b.len() < a.len() {
        b
    } else {
        a
    }
}

/// Baseline structure discovery: Markov boundaries of all nodes, then
/// neighbors as boundary pairs not separated by any subset of the smaller
/// of the two boundaries, then parents by orienting v-structures.
pub fn fgs_parents(disc: &Discoverer<'_, '_>) -> Result<FgsResult> {
    let view = disc.view();
    let tester = disc.tester();
    let before = tester.executed();
    let nodes = disc.candidates().to_vec();
    let mut mb = Vec::with_capacity(nodes.len());
    for &x in &nodes {
        mb.push(disc.markov_boundary(x)?.members.iter().copied().collect::<BTreeSet<_>>());
    }
    let idx = |a: AttrId| nodes.binary_search(&a).expect("node in candidate list");

    let mut neighbors: Vec<BTreeSet<AttrId>> = vec![BTreeSet::new(); nodes.len()];
    for (i, &x) in nodes.iter().enumerate() {
        for &y in mb[i].iter().filter(|&&y| y > x) {
            let j = idx(y);
            if !mb[j].contains(&x) {
                continue;
            }
            let bx: Vec<AttrId> = mb[i].iter().copied().filter(|&a| a != y).collect();
            let by: Vec<AttrId> = mb[j].iter().copied().filter(|&a| a != x).collect();
            let pool = smaller(bx, by);
            let separated = subsets_exist(&pool, |s| tester.independent(view, &[x], &[y], s))?;
            if !separated {
                neighbors[i].insert(y);
                neighbors[j].insert(x);
            }
        }
    }

    let mut parents: Vec<Vec<AttrId>> = vec![Vec::new(); nodes.len()];
    for (i, &x) in nodes.iter().enumerate() {
        for &y in &neighbors[i] {
            let j = idx(y);
            let mut is_parent = false;
            for &z in neighbors[i].iter().filter(|&&z| z != y && !neighbors[j].contains(&z)) {
                let k = idx(z);
                let by: Vec<AttrId> = mb[j].iter().copied().filter(|&a| a != x && a != z).collect();
                let bz: Vec<AttrId> = mb[k].iter().copied().filter(|&a| a != x && a != y).collect();
                let pool = smaller(by, bz);
                let separable = subsets_exist(&pool, |s| {
                    let mut with_x = s.to_vec();
                    with_x.push(x);
                    tester.independent(view, &[y], &[z], &with_x)
                })?;
                if !separable {
                    is_parent = true;
                    break;
                }
            }
            if is_parent {
                parents[i].push(y);
            }
        }
    }
    Ok(FgsResult {
        nodes,
        parents,
        neighbors: neighbors.into_iter().map(|s| s.into_iter().collect()).collect(),
        tests: tester.executed() - before,
    })
}
