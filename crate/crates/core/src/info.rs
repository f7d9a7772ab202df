//! Entropy, (conditional) mutual information and per-cell contributions,
//! all in nats.

use serde::{Deserialize, Serialize};

use crate::data::{AttrId, ContingencyTable, DataView};
use crate::error::{Error, Result};
use crate::num::Real;

/// Which entropy estimator to apply to empirical frequencies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `-Σ F ln F + (m-1)/(2n)`.
    #[default]
    MillerMadow,
    /// `-Σ F ln F`.
    PlugIn,
}

/// Plug-in entropy `-Σ F(x) ln F(x)` of the table's cells.
pub fn entropy_plugin<R: Real>(ct: &ContingencyTable) -> Result<R> {
    if ct.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let n = R::from_count(ct.total());
    let h = ct.counts().fold(R::zero(), |acc, c| acc - R::xlnx(R::from_count(c) / n));
    Ok(h)
}

/// Miller-Madow corrected entropy: plug-in plus `(m-1)/(2n)` where `m` is
/// the number of nonempty cells.
pub fn entropy_mm<R: Real>(ct: &ContingencyTable) -> Result<R> {
    let h = entropy_plugin::<R>(ct)?;
    let m = R::from_count(ct.len() as u64);
    let n = R::from_count(ct.total());
    Ok(h + (m - R::one()) / (n + n))
}

pub fn entropy<R: Real>(ct: &ContingencyTable, est: Estimator) -> Result<R> {
    match est {
        Estimator::MillerMadow => entropy_mm(ct),
        Estimator::PlugIn => entropy_plugin(ct),
    }
}

/// Plug-in mutual information of a dense row-major `rows x cols` count
/// matrix with the given margins.
pub fn mi_dense<R: Real>(counts: &[u64], row_margins: &[u64], col_margins: &[u64]) -> R {
    let n: u64 = row_margins.iter().sum();
    if n == 0 {
        return R::zero();
    }
    let nf = R::from_count(n);
    let cols = col_margins.len();
    let mut acc = R::zero();
    for (i, &ri) in row_margins.iter().enumerate() {
        if ri == 0 {
            continue;
        }
        let rf = R::from_count(ri);
        for (j, &cj) in col_margins.iter().enumerate() {
            let nij = counts[i * cols + j];
            if nij == 0 {
                continue;
            }
            let nijf = R::from_count(nij);
            acc = acc + nijf / nf * (nijf * nf / (rf * R::from_count(cj))).ln();
        }
    }
    acc
}

/// Plug-in mutual information between the two attributes of a 2-way table.
pub fn mi_plugin<R: Real>(ct2: &ContingencyTable) -> Result<R> {
    let (_, _, dense) = ct2.to_dense_2d()?;
    let (r, c) = margins_of(ct2)?;
    Ok(mi_dense(&dense, &r, &c))
}

fn margins_of(ct2: &ContingencyTable) -> Result<(Vec<u64>, Vec<u64>)> {
    let (rows, cols, dense) = ct2.to_dense_2d()?;
    let mut r = vec![0u64; rows.len()];
    let mut c = vec![0u64; cols.len()];
    for i in 0..rows.len() {
        for j in 0..cols.len() {
            let v = dense[i * cols.len() + j];
            r[i] += v;
            c[j] += v;
        }
    }
    Ok((r, c))
}

/// Signed contribution of the cell `(x, y)` to the plug-in mutual
/// information of a 2-way table: `Pr(x,y) ln(Pr(x,y) / (Pr(x) Pr(y)))`.
/// Empty cells contribute 0.
pub fn kappa<R: Real>(ct2: &ContingencyTable, x: u32, y: u32) -> R {
    if ct2.attrs().len() != 2 || ct2.total() == 0 {
        return R::zero();
    }
    let nxy = ct2.get(&[x, y]);
    if nxy == 0 {
        return R::zero();
    }
    let (mut nx, mut ny) = (0u64, 0u64);
    for (codes, c) in ct2.cells() {
        if codes[0] == x {
            nx += c;
        }
        if codes[1] == y {
            ny += c;
        }
    }
    let n = R::from_count(ct2.total());
    let pxy = R::from_count(nxy) / n;
    pxy * (pxy / ((R::from_count(nx) / n) * (R::from_count(ny) / n))).ln()
}

/// κ for every nonempty cell, in table order.
pub fn kappa_cells<R: Real>(ct2: &ContingencyTable) -> Vec<((u32, u32), R)> {
    ct2.cells().map(|(codes, _)| ((codes[0], codes[1]), kappa(ct2, codes[0], codes[1]))).collect()
}

/// Conditional mutual information estimate with the entropy terms that
/// produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate<R> {
    /// `max(0, h_xz + h_yz - h_xyz - h_z)`.
    pub value: R,
    pub h_xz: R,
    pub h_yz: R,
    pub h_xyz: R,
    pub h_z: R,
}

/// `Î(X;Y|Z) = Ĥ(XZ) + Ĥ(YZ) - Ĥ(XYZ) - Ĥ(Z)`, clamped at 0. `Z = ∅`
/// gives the mutual information.
pub fn cmi(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], est: Estimator) -> Result<MiEstimate<f64>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidConfig("X and Y must be nonempty".into()));
    }
    if let Some(a) = x.iter().find(|a| y.contains(a) || z.contains(a)).or_else(|| y.iter().find(|a| z.contains(a))) {
        return Err(Error::Overlap(format!("attribute {a} appears twice")));
    }
    if view.n() == 0 {
        return Err(Error::EmptySelection);
    }
    let xz = [x, z].concat();
    let yz = [y, z].concat();
    let xyz = [x, y, z].concat();
    let h_xz = view.entropy(&xz, est)?;
    let h_yz = view.entropy(&yz, est)?;
    let h_xyz = view.entropy(&xyz, est)?;
    let h_z = view.entropy(z, est)?;
    let value = (h_xz + h_yz - h_xyz - h_z).max(0.0);
    Ok(MiEstimate { value, h_xz, h_yz, h_xyz, h_z })
}

/// Unclamped set-algebra form `Ĥ(X∪Z) + Ĥ(Y∪Z) - Ĥ(X∪Y∪Z) - Ĥ(Z)`; the
/// arguments may overlap.
pub fn cmi_sets(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], est: Estimator) -> Result<f64> {
    let xz = [x, z].concat();
    let yz = [y, z].concat();
    let xyz = [x, y, z].concat();
    Ok(view.entropy(&xz, est)? + view.entropy(&yz, est)? - view.entropy(&xyz, est)? - view.entropy(z, est)?)
}
