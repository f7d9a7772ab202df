use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DataView};
use crate::error::Result;
use crate::info::{cmi_sets, kappa, Estimator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Responsibility {
    pub attr: AttrId,
    pub rho: f64,
}

/// Share of `Î(T;V)` attributable to each member of `V`:
/// `ρ_Z ∝ max(0, Î(T;V) − Î(T;V|Z))`, normalized to sum to 1, plug-in
/// entropies. Sorted by descending `ρ`, ties by attribute name. `None`
/// when every numerator is zero.
pub fn responsibility(view: &DataView<'_>, t: AttrId, v: &[AttrId]) -> Result<Option<Vec<Responsibility>>> {
    let est = Estimator::PlugIn;
    let mut attrs = v.to_vec();
    attrs.sort_unstable();
    attrs.dedup();
    let total = cmi_sets(view, &[t], &attrs, &[], est)?;
    let mut raw = Vec::with_capacity(attrs.len());
    for &z in &attrs {
        let reduced = cmi_sets(view, &[t], &attrs, &[z], est)?;
        raw.push((z, (total - reduced).max(0.0)));
    }
    let denom: f64 = raw.iter().map(|r| r.1).sum();
    if !(denom > 1e-15) {
        return Ok(None);
    }
    let ds = view.dataset();
    let mut out: Vec<Responsibility> = raw.into_iter().map(|(attr, num)| Responsibility { attr, rho: num / denom }).collect();
    out.sort_by(|a, b| b.rho.total_cmp(&a.rho).then_with(|| ds.name(a.attr).cmp(ds.name(b.attr))));
    Ok(Some(out))
}

/// Borda score of every item: for each ranking, the number of items with
/// a strictly lower key, summed over rankings. `keys[r][i]` is the key of
/// item `i` in ranking `r`; higher keys rank first.
pub fn borda_scores(keys: &[Vec<f64>]) -> Vec<usize> {
    let n = keys.first().map_or(0, Vec::len);
    let mut scores = vec![0usize; n];
    for ranking in keys {
        let mut sorted = ranking.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, k) in ranking.iter().enumerate() {
            scores[i] += sorted.partition_point(|s| s.total_cmp(k) == Ordering::Less);
        }
    }
    scores
}

/// Item indices by descending Borda score, ties broken by `labels`.
pub fn borda_order<L: Ord>(labels: &[L], keys: &[Vec<f64>]) -> Vec<usize> {
    let scores = borda_scores(keys);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then_with(|| labels[a].cmp(&labels[b])));
    order
}

/// A value-level explanation `(T = t, Y = y, Z = z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineExplanation {
    pub t: u32,
    pub y: u32,
    pub z: u32,
    /// Contribution of `(t, z)` to `Î(T;Z)`.
    pub kappa_tz: f64,
    /// Contribution of `(y, z)` to `Î(Y;Z)`.
    pub kappa_yz: f64,
    pub borda: usize,
}

/// Top-`k` triples observed in the view, ranked by Borda aggregation of
/// the two contribution rankings. Ties are broken by the decoded values
/// `(t, y, z)`. Empty when `Z` is independent of both `T` and `Y` in the
/// sample.
pub fn fine_explanations(view: &DataView<'_>, t: AttrId, y: AttrId, z: AttrId, k: usize) -> Result<Vec<FineExplanation>> {
    let est = Estimator::PlugIn;
    if cmi_sets(view, &[t], &[z], &[], est)? <= 0.0 && cmi_sets(view, &[y], &[z], &[], est)? <= 0.0 {
        return Ok(Vec::new());
    }
    let ct_tz = view.table(&[t, z])?;
    let ct_yz = view.table(&[y, z])?;
    let triples: Vec<Vec<u32>> = view.table(&[t, y, z])?.cells().map(|(codes, _)| codes).collect();
    let k_tz: Vec<f64> = triples.iter().map(|c| kappa::<f64>(&ct_tz, c[0], c[2])).collect();
    let k_yz: Vec<f64> = triples.iter().map(|c| kappa::<f64>(&ct_yz, c[1], c[2])).collect();
    let ds = view.dataset();
    let labels: Vec<(&str, &str, &str)> =
        triples.iter().map(|c| (ds.decode(t, c[0]), ds.decode(y, c[1]), ds.decode(z, c[2]))).collect();
    let keys = vec![k_tz.clone(), k_yz.clone()];
    let scores = borda_scores(&keys);
    Ok(borda_order(&labels, &keys)
        .into_iter()
        .take(k)
        .map(|i| FineExplanation {
            t: triples[i][0],
            y: triples[i][1],
            z: triples[i][2],
            kappa_tz: k_tz[i],
            kappa_yz: k_yz[i],
            borda: scores[i],
        })
        .collect())
}
