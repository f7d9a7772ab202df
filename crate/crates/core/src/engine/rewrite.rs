use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DataView};
use crate::error::{Error, Result};
use crate::indep::{run_test, TestConfig, TestResult};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Naive,
    Total,
    Direct,
}

/// Per-arm averages and their difference.
///
/// For naive and total estimates `delta = t1_average − t0_average`. For
/// the direct effect `delta = t0_average − t1_average`, the effect of
/// moving the treatment from `t1` to `t0` with mediators held at their
/// `t1` distribution; `contrast` names the direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate<S> {
    pub kind: EstimateKind,
    pub contrast: String,
    pub t0_average: Option<S>,
    pub t1_average: Option<S>,
    /// `None` when no block contains both arms.
    pub delta: Option<S>,
    pub significance: Option<TestResult>,
    /// Share of rows in blocks that contain both arms.
    pub matched_fraction: S,
    pub blocks: usize,
    pub matched_blocks: usize,
}

impl<S: Scalar> EffectEstimate<S> {
    pub fn to_f64(&self) -> EffectEstimate<f64> {
        EffectEstimate {
            kind: self.kind,
            contrast: self.contrast.clone(),
            t0_average: self.t0_average.as_ref().map(S::to_f64_lossy),
            t1_average: self.t1_average.as_ref().map(S::to_f64_lossy),
            delta: self.delta.as_ref().map(S::to_f64_lossy),
            significance: self.significance.clone(),
            matched_fraction: self.matched_fraction.to_f64_lossy(),
            blocks: self.blocks,
            matched_blocks: self.matched_blocks,
        }
    }
}

/// Counts `[arm][y]` for one block, arm 0 = `t0`.
type Cell = [[u64; 2]; 2];

fn arm_total(c: &Cell, arm: usize) -> u64 {
    c[arm][0] + c[arm][1]
}

fn block_total(c: &Cell) -> u64 {
    arm_total(c, 0) + arm_total(c, 1)
}

fn matched(c: &Cell) -> bool {
    arm_total(c, 0) > 0 && arm_total(c, 1) > 0
}

/// Blocks keyed by the codes of `keys`, restricted to rows with `t` in
/// `{t0, t1}`.
fn blocks(view: &DataView<'_>, t: AttrId, t0: u32, t1: u32, y: AttrId, keys: &[AttrId]) -> Result<BTreeMap<Vec<u32>, Cell>> {
    let ds = view.dataset();
    let attrs: Vec<AttrId> = keys.iter().copied().chain([t, y]).collect();
    let table = view.table(&attrs)?;
    let k = keys.len();
    let mut out: BTreeMap<Vec<u32>, Cell> = BTreeMap::new();
    for (codes, n) in table.cells() {
        let arm = if codes[k] == t0 {
            0
        } else if codes[k] == t1 {
            1
        } else {
            continue;
        };
        let yv = ds
            .outcome_value(y, codes[k + 1])
            .ok_or_else(|| Error::InvalidQuery(format!("outcome `{}` is not 0/1", ds.name(y))))?;
        out.entry(codes[..k].to_vec()).or_insert([[0; 2]; 2])[arm][yv as usize] += n;
    }
    Ok(out)
}

fn check_disjoint(t: AttrId, y: AttrId, sets: &[&[AttrId]]) -> Result<()> {
    if t == y || sets.iter().any(|s| s.contains(&t) || s.contains(&y)) {
        return Err(Error::Overlap("treatment and outcome cannot be adjustment attributes".into()));
    }
    Ok(())
}

/// Plain difference of outcome averages between the arms, significance
/// from `T ⊥ Y`.
pub fn naive_estimate<S: Scalar>(
    view: &DataView<'_>,
    t: AttrId,
    t0: u32,
    t1: u32,
    y: AttrId,
    cfg: &TestConfig,
) -> Result<EffectEstimate<S>> {
    check_disjoint(t, y, &[])?;
    let b = blocks(view, t, t0, t1, y, &[])?;
    let cell = b.values().next().copied().unwrap_or([[0; 2]; 2]);
    let avg = |arm: usize| (arm_total(&cell, arm) > 0).then(|| S::ratio(cell[arm][1], arm_total(&cell, arm)));
    let (a0, a1) = (avg(0), avg(1));
    let delta = match (&a0, &a1) {
        (Some(x0), Some(x1)) => Some(x1.clone() - x0.clone()),
        _ => None,
    };
    let significance = significance(view, t, y, &[], cfg)?;
    Ok(EffectEstimate {
        kind: EstimateKind::Naive,
        contrast: "t1-t0".into(),
        t0_average: a0,
        t1_average: a1,
        delta,
        significance,
        matched_fraction: if block_total(&cell) > 0 { S::one() } else { S::zero() },
        blocks: b.len(),
        matched_blocks: usize::from(matched(&cell)),
    })
}

fn significance(view: &DataView<'_>, t: AttrId, y: AttrId, z: &[AttrId], cfg: &TestConfig) -> Result<Option<TestResult>> {
    if view.n() == 0 {
        return Ok(None);
    }
    Ok(Some(run_test(view, &[t], &[y], z, cfg)?))
}

/// Adjustment-formula estimate of the average treatment effect.
///
/// Rows are partitioned into blocks by `Z`; blocks lacking either arm are
/// discarded (exact matching). Each arm's adjusted average is
/// `Σ_b w_b · avg(Y | arm, b)` with `w_b` the block's share of the
/// matched rows. Significance tests `T ⊥ Y | Z`.
pub fn rewrite_total<S: Scalar>(
    view: &DataView<'_>,
    t: AttrId,
    t0: u32,
    t1: u32,
    y: AttrId,
    z: &[AttrId],
    cfg: &TestConfig,
) -> Result<EffectEstimate<S>> {
    let z = sorted(z);
    check_disjoint(t, y, &[&z])?;
    let b = blocks(view, t, t0, t1, y, &z)?;
    let all: u64 = b.values().map(block_total).sum();
    let kept: Vec<&Cell> = b.values().filter(|c| matched(c)).collect();
    let n_matched: u64 = kept.iter().map(|c| block_total(c)).sum();
    let adjusted = |arm: usize| -> Option<S> {
        (n_matched > 0).then(|| {
            kept.iter()
                .fold(S::zero(), |acc, c| acc + S::ratio(block_total(c), n_matched) * S::ratio(c[arm][1], arm_total(c, arm)))
        })
    };
    let (a0, a1) = (adjusted(0), adjusted(1));
    let delta = a0.as_ref().zip(a1.as_ref()).map(|(x0, x1)| x1.clone() - x0.clone());
    Ok(EffectEstimate {
        kind: EstimateKind::Total,
        contrast: "t1-t0".into(),
        t0_average: a0,
        t1_average: a1,
        delta,
        significance: significance(view, t, y, &z, cfg)?,
        matched_fraction: if all > 0 { S::ratio(n_matched, all) } else { S::zero() },
        blocks: b.len(),
        matched_blocks: kept.len(),
    })
}

/// Mediator-formula estimate of the natural direct effect of moving the
/// treatment from `t1` to `t0`:
/// `Σ_(z,m) (E[Y|t0,m,z] − E[Y|t1,m,z]) · Pr(m|t1,z) · Pr(z)`.
///
/// Blocks are formed over `(Z, M)` and kept only when both arms occur.
/// All probabilities are computed on the kept rows. Significance tests
/// `T ⊥ Y | Z ∪ M`.
#[allow(clippy::too_many_arguments)]
pub fn rewrite_direct<S: Scalar>(
    view: &DataView<'_>,
    t: AttrId,
    t0: u32,
    t1: u32,
    y: AttrId,
    z: &[AttrId],
    m: &[AttrId],
    cfg: &TestConfig,
) -> Result<EffectEstimate<S>> {
    let z = sorted(z);
    let m: Vec<AttrId> = sorted(m).into_iter().filter(|a| !z.contains(a)).collect();
    check_disjoint(t, y, &[&z, &m])?;
    let keys: Vec<AttrId> = z.iter().chain(&m).copied().collect();
    let b = blocks(view, t, t0, t1, y, &keys)?;
    let all: u64 = b.values().map(block_total).sum();
    let nz = z.len();
    let kept: Vec<(&[u32], &Cell)> = b.iter().filter(|(_, c)| matched(c)).map(|(k, c)| (&k[..nz], c)).collect();
    let n_matched: u64 = kept.iter().map(|(_, c)| block_total(c)).sum();
    // Per z: matched rows and matched t1 rows.
    let mut per_z: BTreeMap<&[u32], (u64, u64)> = BTreeMap::new();
    for (zk, c) in &kept {
        let e = per_z.entry(zk).or_default();
        e.0 += block_total(c);
        e.1 += arm_total(c, 1);
    }
    let term = |arm: usize| -> Option<S> {
        (n_matched > 0).then(|| {
            kept.iter().fold(S::zero(), |acc, (zk, c)| {
                let (n_z, n_t1z) = per_z[zk];
                acc + S::ratio(c[arm][1], arm_total(c, arm)) * S::ratio(arm_total(c, 1), n_t1z) * S::ratio(n_z, n_matched)
            })
        })
    };
    let (a0, a1) = (term(0), term(1));
    let delta = a0.as_ref().zip(a1.as_ref()).map(|(x0, x1)| x0.clone() - x1.clone());
    Ok(EffectEstimate {
        kind: EstimateKind::Direct,
        contrast: "t1->t0".into(),
        t0_average: a0,
        t1_average: a1,
        delta,
        significance: significance(view, t, y, &keys, cfg)?,
        matched_fraction: if all > 0 { S::ratio(n_matched, all) } else { S::zero() },
        blocks: b.len(),
        matched_blocks: kept.len(),
    })
}

fn sorted(a: &[AttrId]) -> Vec<AttrId> {
    let mut v = a.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}
