#![allow(dead_code)]

use causalq::data::{AttrId, Dataset};
use causalq::synth::{sample_dataset, CausalDag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Binary DAG where `Pr(v = 1 | parents) = 0.1 + 0.8 * mean(parents)`.
pub fn binary_dag(names: &[&str], edges: &[(&str, &str)]) -> CausalDag {
    let index = |n: &str| names.iter().position(|m| *m == n).unwrap();
    let idx: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (index(a), index(b))).collect();
    let cpts = (0..names.len())
        .map(|v| {
            let k = idx.iter().filter(|e| e.1 == v).count();
            (0..1usize << k)
                .map(|row| {
                    let on = row.count_ones() as f64;
                    let p = if k == 0 { 0.5 } else { 0.1 + 0.8 * on / k as f64 };
                    vec![1.0 - p, p]
                })
                .collect()
        })
        .collect();
    CausalDag::new(names.iter().map(|s| s.to_string()).collect(), vec![2; names.len()], &idx, cpts).unwrap()
}

pub fn sample(dag: &CausalDag, n: usize, seed: u64) -> Dataset {
    sample_dataset(dag, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

pub fn ids(ds: &Dataset, names: &[&str]) -> Vec<AttrId> {
    ds.attrs(names).unwrap()
}

pub fn names(ds: &Dataset, ids: &[AttrId]) -> Vec<String> {
    let mut v = ds.names(ids);
    v.sort();
    v
}

/// Dataset from `(values..., count)` rows.
pub fn from_counts(header: &[&str], rows: &[(&[&str], usize)]) -> Dataset {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    let mut records: Vec<Vec<String>> = Vec::new();
    for (values, count) in rows {
        for _ in 0..*count {
            records.push(values.iter().map(|s| s.to_string()).collect());
        }
    }
    Dataset::from_records(&header, &records).unwrap()
}
