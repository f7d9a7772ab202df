use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use super::{AttrId, ContingencyTable, Dataset, Selection};
use crate::error::{Error, Result};
use crate::info::{self, Estimator};

type EntropyKey = (Vec<AttrId>, u64, Estimator);

/// Entropy estimates keyed by (sorted attribute set, selection fingerprint,
/// estimator). Concurrent readers, serialized writers.
#[derive(Debug, Default)]
pub struct EntropyCache {
    map: RwLock<HashMap<EntropyKey, f64>>,
    hits: AtomicUsize,
}

impl EntropyCache {
    pub fn get(&self, attrs: &[AttrId], fingerprint: u64, est: Estimator) -> Option<f64> {
        let v = self.map.read().expect("entropy cache poisoned").get(&(attrs.to_vec(), fingerprint, est)).copied();
        if v.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        v
    }

    pub fn insert(&self, attrs: Vec<AttrId>, fingerprint: u64, est: Estimator, value: f64) {
        self.map.write().expect("entropy cache poisoned").insert((attrs, fingerprint, est), value);
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("entropy cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}

/// A dataset restricted to a fixed row selection, with a count cache and an
/// entropy cache. All statistics in the crate are computed through a view.
///
/// Materialized tables answer any request over a subset of their
/// attributes by marginalization; other requests scan the selected rows
/// once and keep the result.
#[derive(Debug)]
pub struct DataView<'a> {
    ds: &'a Dataset,
    sel: Selection,
    fingerprint: u64,
    materialized: RwLock<Vec<Arc<ContingencyTable>>>,
    exact: RwLock<HashMap<Vec<AttrId>, Arc<ContingencyTable>>>,
    scans: AtomicUsize,
    entropies: Arc<EntropyCache>,
}

impl<'a> DataView<'a> {
    pub fn new(ds: &'a Dataset, sel: Selection) -> Self {
        Self::with_entropy_cache(ds, sel, Arc::new(EntropyCache::default()))
    }

    /// Shares an entropy cache across views; keys carry the selection
    /// fingerprint so distinct selections never collide.
    pub fn with_entropy_cache(ds: &'a Dataset, sel: Selection, entropies: Arc<EntropyCache>) -> Self {
        let fingerprint = sel.fingerprint();
        Self {
            ds,
            sel,
            fingerprint,
            materialized: RwLock::default(),
            exact: RwLock::default(),
            scans: AtomicUsize::new(0),
            entropies,
        }
    }

    pub fn all(ds: &'a Dataset) -> Self {
        Self::new(ds, Selection::all(ds.n_rows()))
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }

    pub fn selection(&self) -> &Selection {
        &self.sel
    }

    pub fn n(&self) -> usize {
        self.sel.len()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn entropy_cache(&self) -> &Arc<EntropyCache> {
        &self.entropies
    }

    /// A child view over a subset of this view's rows sharing the entropy cache.
    pub fn subview(&self, sel: Selection) -> DataView<'a> {
        DataView::with_entropy_cache(self.ds, sel, Arc::clone(&self.entropies))
    }

    /// Number of full row scans performed so far.
    pub fn scans(&self) -> usize {
        self.scans.load(Ordering::Relaxed)
    }

    /// Scans the selection once per attribute set and keeps the tables for
    /// later marginalization.
    pub fn materialize(&self, attr_sets: &[Vec<AttrId>]) -> Result<()> {
        for attrs in attr_sets {
            let mut key = attrs.clone();
            key.sort_unstable();
            key.dedup();
            if self.covering(&key).is_some() {
                continue;
            }
            let table = Arc::new(self.scan(&key)?);
            self.materialized.write().expect("count cache poisoned").push(table);
        }
        Ok(())
    }

    fn scan(&self, attrs: &[AttrId]) -> Result<ContingencyTable> {
        self.scans.fetch_add(1, Ordering::Relaxed);
        ContingencyTable::count(self.ds, &self.sel, attrs)
    }

    /// Smallest materialized table whose attributes cover `attrs`.
    fn covering(&self, attrs: &[AttrId]) -> Option<Arc<ContingencyTable>> {
        self.materialized
            .read()
            .expect("count cache poisoned")
            .iter()
            .filter(|t| attrs.iter().all(|a| t.attrs().contains(a)))
            .min_by_key(|t| t.len())
            .cloned()
    }

    /// Counts over `attrs` in the given order.
    pub fn table(&self, attrs: &[AttrId]) -> Result<Arc<ContingencyTable>> {
        if let Some(t) = self.exact.read().expect("count cache poisoned").get(attrs) {
            return Ok(Arc::clone(t));
        }
        let table = match self.covering(attrs) {
            Some(big) => big.marginalize(attrs)?,
            None => self.scan(attrs)?,
        };
        let table = Arc::new(table);
        self.exact.write().expect("count cache poisoned").insert(attrs.to_vec(), Arc::clone(&table));
        Ok(table)
    }

    /// Cached entropy of the joint distribution of `attrs` (duplicates
    /// ignored). The empty set has entropy 0.
    pub fn entropy(&self, attrs: &[AttrId], est: Estimator) -> Result<f64> {
        if self.sel.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut key = attrs.to_vec();
        key.sort_unstable();
        key.dedup();
        if key.is_empty() {
            return Ok(0.0);
        }
        if let Some(h) = self.entropies.get(&key, self.fingerprint, est) {
            return Ok(h);
        }
        let h = info::entropy::<f64>(&*self.table(&key)?, est)?;
        self.entropies.insert(key, self.fingerprint, est, h);
        Ok(h)
    }
}

/// Builds a view over `sel` with the given attribute sets materialized.
pub fn materialize_cache<'a>(ds: &'a Dataset, sel: &Selection, attr_sets: &[Vec<AttrId>]) -> Result<DataView<'a>> {
    let view = DataView::new(ds, sel.clone());
    view.materialize(attr_sets)?;
    Ok(view)
}
