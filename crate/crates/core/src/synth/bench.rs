use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_dag, sample_dataset, score_recovery, DsepTester, RandomDagConfig, RecoveryFilter};
use crate::data::{AttrId, DataView, Dataset};
use crate::discovery::{fgs_parents, Discoverer};
use crate::error::{Error, Result};
use crate::indep::{CiTest, TestConfig, Tester};

/// Parent-recovery benchmark over random DAGs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryBenchConfig {
    pub dag: RandomDagConfig,
    pub rows: usize,
    /// DAGs with at least one scored node to collect.
    pub dags: usize,
    /// Seeds `first_seed, first_seed + 1, ...` are scanned in order.
    pub first_seed: u64,
    pub filter: RecoveryFilter,
    /// The per-DAG seed replaces `test.seed`.
    pub test: TestConfig,
    pub max_boundary: usize,
    /// Gives up after this many seeds without enough scored DAGs.
    pub max_seeds: u64,
}

impl Default for RecoveryBenchConfig {
    fn default() -> Self {
        Self {
            dag: RandomDagConfig {
                nodes: 8,
                edge_prob: RandomDagConfig::total_edges(8, 4.0),
                min_categories: 2,
                max_categories: 2,
                concentration: 1.0,
            },
            rows: 50_000,
            dags: 10,
            first_seed: 1,
            filter: RecoveryFilter::NonadjacentParents,
            test: TestConfig::default(),
            max_boundary: 8,
            max_seeds: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DagRecovery {
    pub seed: u64,
    /// Mean F1 of the parents found from data.
    pub f1: f64,
    /// Mean F1 with d-separation answering every test.
    pub oracle_f1: f64,
    /// Tests for each node's parents, each search starting from scratch.
    pub cd_tests_fresh: Vec<usize>,
    /// Tests for all nodes' parents sharing one memoized tester.
    pub cd_tests_shared: usize,
    /// Tests for the parents of every node by neighborhood discovery.
    pub fgs_tests: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryBench {
    pub runs: Vec<DagRecovery>,
    /// Seeds tried, including DAGs without a scored node.
    pub seeds_scanned: u64,
}

impl RecoveryBench {
    pub fn mean_f1(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.f1))
    }

    pub fn mean_oracle_f1(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.oracle_f1))
    }

    pub fn min_f1(&self) -> f64 {
        self.runs.iter().map(|r| r.f1).fold(f64::INFINITY, f64::min)
    }

    /// Tests to find one node's parents from scratch, averaged over nodes.
    pub fn cd_tests_per_node(&self) -> f64 {
        mean(self.runs.iter().flat_map(|r| r.cd_tests_fresh.iter().map(|&t| t as f64)))
    }

    pub fn cd_tests_amortized(&self) -> f64 {
        self.per_node(|r| r.cd_tests_shared)
    }

    pub fn fgs_tests_per_dag(&self) -> f64 {
        mean(self.runs.iter().map(|r| r.fgs_tests as f64))
    }

    pub fn fgs_tests_amortized(&self) -> f64 {
        self.per_node(|r| r.fgs_tests)
    }

    fn per_node(&self, f: impl Fn(&DagRecovery) -> usize) -> f64 {
        let nodes: usize = self.runs.iter().map(|r| r.cd_tests_fresh.len()).sum();
        self.runs.iter().map(f).sum::<usize>() as f64 / nodes as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn parents_by_name(ds: &Dataset, disc: &Discoverer<'_, '_>) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut found = BTreeMap::new();
    for &v in disc.candidates() {
        let r = disc.parents(v, &[])?;
        found.insert(ds.name(v).to_string(), r.parents.iter().map(|&a| ds.name(a).to_string()).collect());
    }
    Ok(found)
}

/// For each seed, draws a DAG and a sample from one RNG seeded with it,
/// discovers every node's parents with the configured test and with the
/// d-separation oracle, and counts tests for from-scratch parent searches
/// and for full neighborhood discovery. DAGs without a scored node are
/// skipped.
pub fn recovery_benchmark(cfg: &RecoveryBenchConfig) -> Result<RecoveryBench> {
    cfg.dag.validate()?;
    let mut runs = Vec::with_capacity(cfg.dags);
    let mut seed = cfg.first_seed;
    while runs.len() < cfg.dags {
        if seed - cfg.first_seed >= cfg.max_seeds {
            return Err(Error::InvalidConfig(format!("fewer than {} scored DAGs in {} seeds", cfg.dags, cfg.max_seeds)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = random_dag(&cfg.dag, &mut rng)?;
        let ds = sample_dataset(&dag, cfg.rows, &mut rng)?;
        let view = DataView::all(&ds);
        let all: Vec<AttrId> = ds.attr_ids().collect();
        let test = TestConfig { seed, ..cfg.test };
        let tester = Tester::new(test)?;
        let found = parents_by_name(&ds, &Discoverer::new(&view, &tester, &all, cfg.max_boundary))?;
        let score = score_recovery(&dag, &found, cfg.filter)?;
        seed += 1;
        let Some(f1) = score.mean_f1 else { continue };
        let oracle = DsepTester::new(&dag);
        let oracle_found = parents_by_name(&ds, &Discoverer::new(&view, &oracle, &all, cfg.max_boundary))?;
        let oracle_f1 = score_recovery(&dag, &oracle_found, cfg.filter)?.mean_f1.unwrap_or(f64::NAN);
        let mut cd_tests_fresh = Vec::with_capacity(all.len());
        for &v in &all {
            let t = Tester::new(test)?;
            Discoverer::new(&view, &t, &all, cfg.max_boundary).parents(v, &[])?;
            cd_tests_fresh.push(t.executed());
        }
        let t = Tester::new(test)?;
        let fgs_tests = fgs_parents(&Discoverer::new(&view, &t, &all, cfg.max_boundary))?.tests;
        runs.push(DagRecovery { seed: seed - 1, f1, oracle_f1, cd_tests_fresh, cd_tests_shared: tester.executed(), fgs_tests });
    }
    Ok(RecoveryBench { runs, seeds_scanned: seed - cfg.first_seed })
}
