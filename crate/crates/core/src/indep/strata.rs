use std::collections::BTreeSet;

use rand::Rng;

use crate::data::{AttrId, DataView};
use crate::error::{Error, Result};
use crate::info::mi_dense;

/// The 2-way table of `(X, Y)` inside one conditioning group `Z = z`,
/// restricted to categories that occur in the group.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    /// Mixed-radix index of `z`.
    pub key: u128,
    pub n: u64,
    pub row_margins: Vec<u64>,
    pub col_margins: Vec<u64>,
    /// Row-major `row_margins.len() x col_margins.len()` counts.
    pub counts: Vec<u64>,
}

impl Stratum {
    /// A group whose table has a single row or column carries no
    /// information about dependence; its MI is 0 under every permutation.
    pub fn is_degenerate(&self) -> bool {
        self.row_margins.len() < 2 || self.col_margins.len() < 2
    }

    pub fn mi(&self) -> f64 {
        mi_dense(&self.counts, &self.row_margins, &self.col_margins)
    }

    /// `max(H(X|z), H(Y|z))`, plug-in.
    pub fn max_margin_entropy(&self) -> f64 {
        let h = |m: &[u64]| -> f64 {
            let n = self.n as f64;
            m.iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.ln()
                })
                .sum()
        };
        h(&self.row_margins).max(h(&self.col_margins))
    }
}

/// `(X, Y)` tables for every observed group of `Z`, in group-key order.
#[derive(Clone, Debug, PartialEq)]
pub struct Strata {
    pub n: u64,
    pub groups: Vec<Stratum>,
    /// `|Π_X|` and `|Π_Y|` over the whole selection.
    pub distinct_x: usize,
    pub distinct_y: usize,
}

impl Strata {
    pub fn build(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidConfig("X and Y must be nonempty".into()));
        }
        if view.n() == 0 {
            return Err(Error::EmptySelection);
        }
        let attrs = [z, x, y].concat();
        let mut seen = attrs.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != attrs.len() {
            return Err(Error::Overlap("X, Y and Z must be disjoint".into()));
        }
        let table = view.table(&attrs)?;
        let (nz, nx) = (z.len(), x.len());
        let k = attrs.len();
        let mut all_x = BTreeSet::new();
        let mut all_y = BTreeSet::new();
        let mut groups = Vec::new();
        let cells = table.raw_cells();
        let mut start = 0;
        while start < cells.len() {
            let zkey = table.sub_key(cells[start].0, 0, nz);
            let mut end = start;
            while end < cells.len() && table.sub_key(cells[end].0, 0, nz) == zkey {
                end += 1;
            }
            let mut xs: Vec<u128> = Vec::new();
            let mut ys: Vec<u128> = Vec::new();
            let part: Vec<(u128, u128, u64)> = cells[start..end]
                .iter()
                .map(|&(key, c)| (table.sub_key(key, nz, nz + nx), table.sub_key(key, nz + nx, k), c))
                .collect();
            for &(xk, yk, _) in &part {
                xs.push(xk);
                ys.push(yk);
            }
            xs.sort_unstable();
            xs.dedup();
            ys.sort_unstable();
            ys.dedup();
            let mut counts = vec![0u64; xs.len() * ys.len()];
            let mut row_margins = vec![0u64; xs.len()];
            let mut col_margins = vec![0u64; ys.len()];
            for &(xk, yk, c) in &part {
                let i = xs.binary_search(&xk).expect("x key present");
                let j = ys.binary_search(&yk).expect("y key present");
                counts[i * ys.len() + j] += c;
                row_margins[i] += c;
                col_margins[j] += c;
            }
            all_x.extend(xs);
            all_y.extend(ys);
            groups.push(Stratum { key: zkey, n: row_margins.iter().sum(), row_margins, col_margins, counts });
            start = end;
        }
        Ok(Self { n: table.total(), groups, distinct_x: all_x.len(), distinct_y: all_y.len() })
    }

    pub fn weight(&self, g: &Stratum) -> f64 {
        g.n as f64 / self.n as f64
    }

    /// `(|Π_X| - 1)(|Π_Y| - 1)|Π_Z|`.
    pub fn df(&self) -> u64 {
        (self.distinct_x.saturating_sub(1) * self.distinct_y.saturating_sub(1) * self.groups.len()) as u64
    }

    /// Plug-in `Î(X;Y|Z) = Σ_z Pr(z) Î_z(X;Y)`, summed in group order.
    pub fn statistic(&self) -> f64 {
        self.groups.iter().map(|g| self.weight(g) * g.mi()).sum()
    }
}

/// Draws groups without replacement with probability proportional to
/// `Pr(z) * max(H(X|z), H(Y|z))`. Returns sorted group indices; groups
/// with zero weight are never drawn.
pub fn weighted_group_sample<R: Rng + ?Sized>(strata: &Strata, c: f64, rng: &mut R) -> Vec<usize> {
    let weights: Vec<f64> = strata.groups.iter().map(|g| strata.weight(g) * g.max_margin_entropy()).collect();
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive == 0 {
        return Vec::new();
    }
    let n_groups = strata.groups.len() as f64;
    let size = ((c * n_groups.ln()).ceil().max(1.0) as usize).min(positive);
    let mut picked: Vec<usize> = rand::seq::index::sample_weighted(rng, weights.len(), |i| weights[i], size)
        .expect("weights are finite and nonnegative")
        .into_iter()
        .collect();
    picked.sort_unstable();
    picked
}
