use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{AttrId, ContingencyTable, DataView, Selection};
use crate::error::{Error, Result};
use crate::indep::mix;
use crate::info::{self, Estimator};

/// Attributes in near one-to-one correspondence with `t`:
/// `Ĥ(T|X) <= epsilon` and `Ĥ(X|T) <= epsilon`, Miller-Madow entropies.
pub fn drop_fd_attrs(view: &DataView<'_>, t: AttrId, candidates: &[AttrId], epsilon: f64) -> Result<Vec<AttrId>> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let est = Estimator::MillerMadow;
    let h_t = view.entropy(&[t], est)?;
    let mut dropped = Vec::new();
    for &x in candidates.iter().filter(|&&x| x != t) {
        let h_x = view.entropy(&[x], est)?;
        let h_tx = view.entropy(&[t, x], est)?;
        if h_tx - h_x <= epsilon && h_tx - h_t <= epsilon {
            dropped.push(x);
        }
    }
    Ok(dropped)
}

/// Settings for detecting attributes whose entropy grows with sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeylikeConfig {
    /// Random row samples drawn at each size.
    pub samples: usize,
    /// Number of geometric sample sizes, halving from the largest.
    pub sizes: usize,
    /// Largest sample size (capped at the number of rows).
    pub max_sample: usize,
    pub alpha: f64,
    /// Minimum slope of entropy against `ln(size)` for an attribute to be
    /// dropped. A row identifier has slope 1.
    pub min_slope: f64,
    pub permutations: usize,
}

impl Default for KeylikeConfig {
    fn default() -> Self {
        Self { samples: 10, sizes: 4, max_sample: 1024, alpha: 0.01, min_slope: 0.1, permutations: 1000 }
    }
}

/// Entropy-vs-size fit for one attribute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrend {
    pub attr: AttrId,
    pub slope: f64,
    pub p_value: f64,
}

/// Attributes whose Miller-Madow entropy increases significantly with the
/// size of random row samples, such as identifiers. Sizes are
/// `s, s/2, s/4, ...` with `s = min(n, max_sample)`; the slope of entropy
/// against `ln(size)` is tested by permuting the entropies across sizes.
/// Returns nothing when the smallest size would be below 8 rows.
pub fn drop_keylike_attrs(view: &DataView<'_>, candidates: &[AttrId], cfg: &KeylikeConfig, seed: u64) -> Result<Vec<AttrId>> {
    Ok(entropy_trends(view, candidates, cfg, seed)?
        .into_iter()
        .filter(|tr| tr.p_value < cfg.alpha && tr.slope > cfg.min_slope)
        .map(|tr| tr.attr)
        .collect())
}

pub fn entropy_trends(view: &DataView<'_>, candidates: &[AttrId], cfg: &KeylikeConfig, seed: u64) -> Result<Vec<EntropyTrend>> {
    if cfg.sizes < 3 {
        return Err(Error::InvalidConfig("key-like detection needs at least 3 sample sizes".into()));
    }
    if cfg.samples == 0 || cfg.permutations == 0 {
        return Err(Error::InvalidConfig("key-like detection needs samples and permutations".into()));
    }
    let top = view.n().min(cfg.max_sample);
    let sizes: Vec<usize> = (0..cfg.sizes).rev().map(|k| top >> k).collect();
    if sizes[0] < 8 {
        return Ok(Vec::new());
    }
    let rows = view.selection().rows();
    let ds = view.dataset();
    candidates
        .par_iter()
        .map(|&attr| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, attr.0 as u64 ^ 0x6b65_796c));
            let mut xs = Vec::with_capacity(sizes.len() * cfg.samples);
            let mut hs = Vec::with_capacity(xs.capacity());
            for &s in &sizes {
                for _ in 0..cfg.samples {
                    let picked: Vec<u32> =
                        rand::seq::index::sample(&mut rng, rows.len(), s).into_iter().map(|i| rows[i]).collect();
                    let ct = ContingencyTable::count(ds, &Selection::from_rows(picked), &[attr])?;
                    xs.push((s as f64).ln());
                    hs.push(info::entropy_mm::<f64>(&ct)?);
                }
            }
            let slope = ols_slope(&xs, &hs);
            let mut perm = hs.clone();
            let mut at_least = 0usize;
            for _ in 0..cfg.permutations {
                perm.shuffle(&mut rng);
                if ols_slope(&xs, &perm) >= slope - 1e-12 {
                    at_least += 1;
                }
            }
            let p_value = (at_least + 1) as f64 / (cfg.permutations + 1) as f64;
            Ok(EntropyTrend { attr, slope, p_value })
        })
        .collect()
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
