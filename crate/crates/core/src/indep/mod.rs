//! Conditional independence tests over contingency tables: the χ² (G-test)
//! approximation, the fixed-margin Monte-Carlo permutation test, and the
//! hybrid of the two.

mod chi2;
mod mit;
mod sampler;
mod strata;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DataView};
use crate::error::{Error, Result};

pub use chi2::chi2_test;
pub use mit::{mit_test, shuffle_test};
pub use sampler::fixed_margin_sample;
pub use strata::{weighted_group_sample, Strata, Stratum};

/// Which procedure produced a [`TestResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Chi2,
    Mit,
    MitSampled,
    Shuffle,
}

/// Test selection for [`run_test`] and [`Tester`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMethod {
    Chi2,
    Mit,
    #[default]
    HyMit,
    /// Row-shuffling permutation test; benchmark baseline only.
    Shuffle,
}

impl std::str::FromStr for TestMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chi2" => Ok(Self::Chi2),
            "mit" => Ok(Self::Mit),
            "hymit" => Ok(Self::HyMit),
            "shuffle" => Ok(Self::Shuffle),
            _ => Err(Error::Parse { input: s.to_owned(), reason: "expected chi2, mit, hymit or shuffle".into() }),
        }
    }
}

/// Weighted sampling of conditioning groups inside MIT.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSampling {
    /// Sample size is `ceil(c * ln |Π_Z|)`, at least one group.
    pub c: f64,
}

impl Default for GroupSampling {
    fn default() -> Self {
        Self { c: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub permutations: usize,
    /// χ² is used by the hybrid test when `df <= n / beta`.
    pub beta: f64,
    pub group_sample: Option<GroupSampling>,
    pub seed: u64,
    pub method: TestMethod,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { alpha: 0.01, permutations: 1000, beta: 5.0, group_sample: None, seed: 0, method: TestMethod::HyMit }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.permutations == 0 {
            return Err(Error::InvalidConfig("at least one permutation is required".into()));
        }
        if !(self.beta >= 1.0) {
            return Err(Error::InvalidConfig(format!("beta must be >= 1, got {}", self.beta)));
        }
        if let Some(gs) = self.group_sample {
            if !(gs.c > 0.0) {
                return Err(Error::InvalidConfig("group sample constant must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Plug-in `Î(X;Y|Z)` in nats.
    pub statistic: f64,
    pub p_value: f64,
    /// 95% binomial interval around the permutation p-value.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub method: Method,
    pub permutations: Option<usize>,
    pub df: Option<u64>,
    /// Number of conditioning groups `|Π_Z|`.
    pub groups: usize,
    /// Groups that entered the permutation distribution.
    pub groups_tested: usize,
}

impl TestResult {
    pub fn independent(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        !self.independent(alpha)
    }
}

/// Tests `X ⊥ Y | Z` with the method chosen in `cfg`. `X` and `Y` may be
/// attribute sets, in which case each is treated as one compound variable.
pub fn run_test(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], cfg: &TestConfig) -> Result<TestResult> {
    match cfg.method {
        TestMethod::Chi2 => chi2_test(view, x, y, z, cfg),
        TestMethod::Mit => mit_test(view, x, y, z, cfg),
        TestMethod::HyMit => hymit_test(view, x, y, z, cfg),
        TestMethod::Shuffle => shuffle_test(view, x, y, z, cfg),
    }
}

/// χ² when `df <= n / beta`, otherwise MIT (with group sampling when
/// configured).
pub fn hymit_test(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], cfg: &TestConfig) -> Result<TestResult> {
    let strata = Strata::build(view, x, y, z)?;
    if (strata.df() as f64) <= view.n() as f64 / cfg.beta {
        Ok(chi2::from_strata(&strata))
    } else {
        mit::from_strata(&strata, x, y, z, view.fingerprint(), cfg)
    }
}

type MemoKey = (u64, Vec<AttrId>, Vec<AttrId>, Vec<AttrId>);

/// Puts `(x, y, z)` in a canonical order; the tests are symmetric in x and y.
pub(crate) fn canonical(x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> (Vec<AttrId>, Vec<AttrId>, Vec<AttrId>) {
    let sorted = |s: &[AttrId]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (mut a, mut b, c) = (sorted(x), sorted(y), sorted(z));
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    (a, b, c)
}

/// Source of conditional-independence verdicts for structure discovery.
pub trait CiTest: Sync {
    /// Evidence against `X ⊥ Y | Z`; independence is accepted when the
    /// value is at least [`CiTest::alpha`].
    fn p_value(&self, view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> Result<f64>;

    fn alpha(&self) -> f64;

    /// Distinct tests performed so far.
    fn executed(&self) -> usize;

    fn independent(&self, view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> Result<bool> {
        Ok(self.p_value(view, x, y, z)? >= self.alpha())
    }
}

/// A configured test with memoization and a count of executed tests.
#[derive(Debug)]
pub struct Tester {
    cfg: TestConfig,
    executed: AtomicUsize,
    memo: Mutex<HashMap<MemoKey, TestResult>>,
}

impl Tester {
    pub fn new(cfg: TestConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, executed: AtomicUsize::new(0), memo: Mutex::default() })
    }

    pub fn config(&self) -> &TestConfig {
        &self.cfg
    }

    pub fn test(&self, view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> Result<TestResult> {
        let (a, b, c) = canonical(x, y, z);
        let key = (view.fingerprint(), a, b, c);
        if let Some(r) = self.memo.lock().expect("tester memo poisoned").get(&key) {
            return Ok(r.clone());
        }
        let result = run_test(view, &key.1, &key.2, &key.3, &self.cfg)?;
        self.executed.fetch_add(1, Ordering::Relaxed);
        self.memo.lock().expect("tester memo poisoned").insert(key, result.clone());
        Ok(result)
    }
}

impl CiTest for Tester {
    fn p_value(&self, view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> Result<f64> {
        Ok(self.test(view, x, y, z)?.p_value)
    }

    fn alpha(&self) -> f64 {
        self.cfg.alpha
    }

    /// Distinct tests actually run (memo hits are not counted).
    fn executed(&self) -> usize {
        self.executed.load(Ordering::Relaxed)
    }
}

/// SplitMix64 finalizer used to derive reproducible RNG streams.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(a << 6).wrapping_add(a >> 2);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one test call, derived from the configured seed, the selection
/// and the canonical arguments.
pub(crate) fn test_seed(seed: u64, fingerprint: u64, x: &[AttrId], y: &[AttrId], z: &[AttrId]) -> u64 {
    let (a, b, c) = canonical(x, y, z);
    let mut h = mix(seed, fingerprint);
    for (tag, set) in [(1u64, &a), (2, &b), (3, &c)] {
        h = mix(h, tag);
        for id in set {
            h = mix(h, id.0 as u64);
        }
    }
    h
}

/// Wald 95% interval around a permutation p-value, clipped to [0, 1].
pub(crate) fn binomial_ci(p: f64, m: usize) -> (f64, f64) {
    let half = 1.96 * (p * (1.0 - p) / m as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}
