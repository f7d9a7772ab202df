use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::strata::{weighted_group_sample, Strata};
use super::{binomial_ci, fixed_margin_sample, mix, test_seed, Method, TestConfig, TestResult};
use crate::data::{AttrId, DataView};
use crate::error::Result;
use crate::info::mi_dense;

/// Mutual-information permutation test with fixed-margin table sampling.
///
/// For every group `z` of `Z`, draws `m` random tables with the group's
/// `(X, Y)` margins and pairs them index-wise across groups into `m`
/// permuted statistics `Σ_z Pr(z) Î_z`. The p-value is the fraction of
/// permuted statistics `>=` the observed one, floored at `1/(m+1)`.
pub fn mit_test(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], cfg: &TestConfig) -> Result<TestResult> {
    let strata = Strata::build(view, x, y, z)?;
    from_strata(&strata, x, y, z, view.fingerprint(), cfg)
}

pub(super) fn from_strata(
    strata: &Strata,
    x: &[AttrId],
    y: &[AttrId],
    z: &[AttrId],
    fingerprint: u64,
    cfg: &TestConfig,
) -> Result<TestResult> {
    let seed = test_seed(cfg.seed, fingerprint, x, y, z);
    let m = cfg.permutations;
    let statistic = strata.statistic();

    let (groups, method): (Vec<usize>, Method) = match cfg.group_sample {
        Some(gs) => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x67726f7570));
            (weighted_group_sample(strata, gs.c, &mut rng), Method::MitSampled)
        }
        None => ((0..strata.groups.len()).collect(), Method::Mit),
    };
    let informative: Vec<usize> = groups.into_iter().filter(|&g| !strata.groups[g].is_degenerate()).collect();
    if informative.is_empty() {
        return Ok(TestResult {
            statistic,
            p_value: 1.0,
            ci_low: Some(1.0),
            ci_high: Some(1.0),
            method,
            permutations: Some(m),
            df: None,
            groups: strata.groups.len(),
            groups_tested: 0,
        });
    }

    let observed: f64 = informative.iter().map(|&g| strata.weight(&strata.groups[g]) * strata.groups[g].mi()).sum();

    let per_group: Vec<Vec<f64>> = informative
        .par_iter()
        .map(|&g| {
            let grp = &strata.groups[g];
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, (grp.key as u64) ^ ((grp.key >> 64) as u64).rotate_left(17)));
            (0..m)
                .map(|_| {
                    let t =
                        fixed_margin_sample(&grp.row_margins, &grp.col_margins, &mut rng).expect("group margins are consistent");
                    mi_dense::<f64>(&t, &grp.row_margins, &grp.col_margins)
                })
                .collect()
        })
        .collect();

    let weights: Vec<f64> = informative.iter().map(|&g| strata.weight(&strata.groups[g])).collect();
    let exceed = count_exceeding(&per_group, &weights, observed, m);
    Ok(permutation_result(statistic, exceed, m, method, strata.groups.len(), informative.len()))
}

/// Number of the `m` permuted statistics at least as large as `observed`.
/// Sums run in group order so equal tables reproduce `observed` exactly;
/// a relative slack of 1e-9 absorbs rounding between distinct but
/// MI-equivalent tables.
fn count_exceeding(per_group: &[Vec<f64>], weights: &[f64], observed: f64, m: usize) -> usize {
    let threshold = observed - 1e-9 * observed.abs() - 1e-15;
    (0..m)
        .filter(|&i| {
            let s: f64 = per_group.iter().zip(weights).map(|(vals, w)| w * vals[i]).sum();
            s >= threshold
        })
        .count()
}

fn permutation_result(statistic: f64, exceed: usize, m: usize, method: Method, groups: usize, tested: usize) -> TestResult {
    let p = (exceed as f64 / m as f64).max(1.0 / (m as f64 + 1.0));
    let (lo, hi) = binomial_ci(p, m);
    TestResult {
        statistic,
        p_value: p,
        ci_low: Some(lo),
        ci_high: Some(hi),
        method,
        permutations: Some(m),
        df: None,
        groups,
        groups_tested: tested,
    }
}

/// Baseline permutation test that shuffles the `X` labels of the rows
/// inside each group of `Z` and recounts. Same statistic and p-value rule
/// as [`mit_test`]; cost grows with the number of rows.
pub fn shuffle_test(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], cfg: &TestConfig) -> Result<TestResult> {
    let strata = Strata::build(view, x, y, z)?;
    let seed = test_seed(cfg.seed, view.fingerprint(), x, y, z);
    let m = cfg.permutations;
    let ds = view.dataset();
    let statistic = strata.statistic();

    // Row-level category indices per group, matching the strata layout.
    let tuple = |attrs: &[AttrId], row: usize| -> Vec<u32> { attrs.iter().map(|&a| ds.codes(a)[row]).collect() };
    let mut rows_by_group: BTreeMap<Vec<u32>, (Vec<Vec<u32>>, Vec<Vec<u32>>)> = BTreeMap::new();
    for &r in view.selection().rows() {
        let entry = rows_by_group.entry(tuple(z, r as usize)).or_default();
        entry.0.push(tuple(x, r as usize));
        entry.1.push(tuple(y, r as usize));
    }
    let groups: Vec<(Vec<usize>, Vec<usize>, usize, usize, u128)> = rows_by_group
        .into_values()
        .zip(&strata.groups)
        .map(|((xs, ys), g)| {
            let index = |vals: Vec<Vec<u32>>| {
                let mut keys = vals.clone();
                keys.sort();
                keys.dedup();
                let idx = vals.iter().map(|v| keys.binary_search(v).expect("present")).collect::<Vec<_>>();
                (idx, keys.len())
            };
            let (xi, nx) = index(xs);
            let (yi, ny) = index(ys);
            (xi, yi, nx, ny, g.key)
        })
        .collect();

    let informative: Vec<usize> = (0..groups.len()).filter(|&g| !strata.groups[g].is_degenerate()).collect();
    let observed: f64 = informative.iter().map(|&g| strata.weight(&strata.groups[g]) * strata.groups[g].mi()).sum();
    let per_group: Vec<Vec<f64>> = informative
        .par_iter()
        .map(|&g| {
            let (xi, yi, nx, ny, key) = &groups[g];
            let grp = &strata.groups[g];
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, (*key as u64) ^ ((*key >> 64) as u64).rotate_left(17)));
            let mut labels = xi.clone();
            let mut counts = vec![0u64; nx * ny];
            (0..m)
                .map(|_| {
                    labels.shuffle(&mut rng);
                    counts.iter_mut().for_each(|c| *c = 0);
                    for (&a, &b) in labels.iter().zip(yi) {
                        counts[a * ny + b] += 1;
                    }
                    mi_dense::<f64>(&counts, &grp.row_margins, &grp.col_margins)
                })
                .collect()
        })
        .collect();
    let weights: Vec<f64> = informative.iter().map(|&g| strata.weight(&strata.groups[g])).collect();
    if informative.is_empty() {
        return Ok(permutation_result(statistic, m, m, Method::Shuffle, strata.groups.len(), 0));
    }
    let exceed = count_exceeding(&per_group, &weights, observed, m);
    Ok(permutation_result(statistic, exceed, m, Method::Shuffle, strata.groups.len(), informative.len()))
}
