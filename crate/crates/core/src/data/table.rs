use std::collections::HashMap;

use super::{AttrId, Dataset, Selection};
use crate::error::{Error, Result};

/// Dense counting is used when the joint domain is at most this large.
const DENSE_LIMIT: u128 = 1 << 16;

/// Sparse k-way count table.
///
/// Cells are keyed by a mixed-radix index over the attributes' dictionary
/// sizes, with the first attribute most significant, so the sorted cell list
/// is in lexicographic order of code tuples. Only nonzero cells are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    attrs: Vec<AttrId>,
    cards: Vec<u32>,
    /// `radix[i]` is the product of `cards[i..]`; `radix[k] == 1`.
    radix: Vec<u128>,
    cells: Vec<(u128, u64)>,
    total: u64,
}

fn radix_of(cards: &[u32]) -> Result<Vec<u128>> {
    let mut radix = vec![1u128; cards.len() + 1];
    for i in (0..cards.len()).rev() {
        radix[i] = radix[i + 1].checked_mul(u128::from(cards[i].max(1))).ok_or(Error::TooManyCells(cards.len()))?;
    }
    Ok(radix)
}

impl ContingencyTable {
    /// Counts the selected rows over `attrs`. An empty attribute list gives
    /// a single cell holding the row count.
    pub fn count(ds: &Dataset, sel: &Selection, attrs: &[AttrId]) -> Result<Self> {
        let cards: Vec<u32> = attrs.iter().map(|&a| ds.cardinality(a)).collect();
        let radix = radix_of(&cards)?;
        let cols: Vec<&[u32]> = attrs.iter().map(|&a| ds.codes(a)).collect();
        let key_of = |row: u32| -> u128 { cols.iter().zip(&radix[1..]).map(|(col, &r)| u128::from(col[row as usize]) * r).sum() };
        let cells = if radix[0] <= DENSE_LIMIT {
            let mut dense = vec![0u64; radix[0] as usize];
            for &row in sel.rows() {
                dense[key_of(row) as usize] += 1;
            }
            dense.into_iter().enumerate().filter(|&(_, c)| c > 0).map(|(k, c)| (k as u128, c)).collect()
        } else {
            let mut map: HashMap<u128, u64> = HashMap::new();
            for &row in sel.rows() {
                *map.entry(key_of(row)).or_insert(0) += 1;
            }
            let mut cells: Vec<(u128, u64)> = map.into_iter().collect();
            cells.sort_unstable_by_key(|&(k, _)| k);
            cells
        };
        Ok(Self { attrs: attrs.to_vec(), cards, radix, cells, total: sel.len() as u64 })
    }

    /// Builds a table from explicit cells; zero counts are dropped and
    /// duplicate tuples accumulate.
    pub fn from_cells(attrs: Vec<AttrId>, cards: Vec<u32>, cells: impl IntoIterator<Item = (Vec<u32>, u64)>) -> Result<Self> {
        if attrs.len() != cards.len() {
            return Err(Error::InvalidConfig("attribute and cardinality lists differ".into()));
        }
        let radix = radix_of(&cards)?;
        let mut map: HashMap<u128, u64> = HashMap::new();
        for (codes, count) in cells {
            if codes.len() != attrs.len() || codes.iter().zip(&cards).any(|(&c, &k)| c >= k) {
                return Err(Error::InvalidConfig(format!("cell {codes:?} does not fit the table")));
            }
            if count > 0 {
                let key = codes.iter().zip(&radix[1..]).map(|(&c, &r)| u128::from(c) * r).sum();
                *map.entry(key).or_insert(0) += count;
            }
        }
        let mut cells: Vec<(u128, u64)> = map.into_iter().collect();
        cells.sort_unstable_by_key(|&(k, _)| k);
        let total = cells.iter().map(|&(_, c)| c).sum();
        Ok(Self { attrs, cards, radix, cells, total })
    }

    pub fn attrs(&self) -> &[AttrId] {
        &self.attrs
    }

    pub fn cards(&self) -> &[u32] {
        &self.cards
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of nonempty cells.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Raw `(key, count)` pairs in lexicographic tuple order.
    pub fn raw_cells(&self) -> &[(u128, u64)] {
        &self.cells
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.cells.iter().map(|&(_, c)| c)
    }

    pub fn decode_key(&self, key: u128) -> Vec<u32> {
        (0..self.attrs.len()).map(|i| ((key % self.radix[i]) / self.radix[i + 1]) as u32).collect()
    }

    /// Index of the sub-tuple formed by the contiguous attribute range
    /// `start..end`.
    pub fn sub_key(&self, key: u128, start: usize, end: usize) -> u128 {
        (key % self.radix[start]) / self.radix[end]
    }

    pub fn cells(&self) -> impl Iterator<Item = (Vec<u32>, u64)> + '_ {
        self.cells.iter().map(|&(k, c)| (self.decode_key(k), c))
    }

    pub fn get(&self, codes: &[u32]) -> u64 {
        if codes.len() != self.attrs.len() || codes.iter().zip(&self.cards).any(|(&c, &k)| c >= k) {
            return 0;
        }
        let key: u128 = codes.iter().zip(&self.radix[1..]).map(|(&c, &r)| u128::from(c) * r).sum();
        self.cells.binary_search_by_key(&key, |&(k, _)| k).map_or(0, |i| self.cells[i].1)
    }

    /// Sums out every attribute not in `keep`; the result's attributes are
    /// in the order given by `keep`.
    pub fn marginalize(&self, keep: &[AttrId]) -> Result<Self> {
        let pos: Vec<usize> =
            keep.iter().map(|a| self.attrs.iter().position(|b| b == a).ok_or(Error::NotSubset)).collect::<Result<_>>()?;
        if pos.len() == self.attrs.len() && pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let cards: Vec<u32> = pos.iter().map(|&p| self.cards[p]).collect();
        let radix = radix_of(&cards)?;
        let remap = |key: u128| -> u128 {
            pos.iter().zip(&radix[1..]).map(|(&p, &r)| ((key % self.radix[p]) / self.radix[p + 1]) * r).sum()
        };
        let cells = if radix[0] <= DENSE_LIMIT {
            let mut dense = vec![0u64; radix[0] as usize];
            for &(k, c) in &self.cells {
                dense[remap(k) as usize] += c;
            }
            dense.into_iter().enumerate().filter(|&(_, c)| c > 0).map(|(k, c)| (k as u128, c)).collect()
        } else {
            let mut map: HashMap<u128, u64> = HashMap::with_capacity(self.cells.len());
            for &(k, c) in &self.cells {
                *map.entry(remap(k)).or_insert(0) += c;
            }
            let mut cells: Vec<(u128, u64)> = map.into_iter().collect();
            cells.sort_unstable_by_key(|&(k, _)| k);
            cells
        };
        Ok(Self { attrs: keep.to_vec(), cards, radix, cells, total: self.total })
    }

    /// Dense row-major matrix of a 2-way table, restricted to the rows and
    /// columns with nonzero margins. Returns `(row codes, column codes, counts)`.
    pub fn to_dense_2d(&self) -> Result<(Vec<u32>, Vec<u32>, Vec<u64>)> {
        if self.attrs.len() != 2 {
            return Err(Error::InvalidConfig(format!("expected a 2-way table, got {} ways", self.attrs.len())));
        }
        let mut rows: Vec<u32> = Vec::new();
        let mut cols: Vec<u32> = Vec::new();
        for (codes, _) in self.cells() {
            rows.push(codes[0]);
            cols.push(codes[1]);
        }
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        let mut dense = vec![0u64; rows.len() * cols.len()];
        for (codes, c) in self.cells() {
            let i = rows.binary_search(&codes[0]).expect("row code present");
            let j = cols.binary_search(&codes[1]).expect("column code present");
            dense[i * cols.len() + j] = c;
        }
        Ok((rows, cols, dense))
    }
}

/// Exact group-by counts of the selected rows over `attrs`.
pub fn contingency(ds: &Dataset, sel: &Selection, attrs: &[AttrId]) -> Result<ContingencyTable> {
    if attrs.is_empty() {
        return Err(Error::InvalidConfig("contingency table needs at least one attribute".into()));
    }
    ContingencyTable::count(ds, sel, attrs)
}

pub fn marginalize(ct: &ContingencyTable, keep: &[AttrId]) -> Result<ContingencyTable> {
    ct.marginalize(keep)
}
