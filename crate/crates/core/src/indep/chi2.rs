use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::strata::Strata;
use super::{Method, TestConfig, TestResult};
use crate::data::{AttrId, DataView};
use crate::error::Result;

/// Likelihood-ratio χ² test: `G = 2 n Î(X;Y|Z)` against a χ² law with
/// `(|Π_X| - 1)(|Π_Y| - 1)|Π_Z|` degrees of freedom.
pub fn chi2_test(view: &DataView<'_>, x: &[AttrId], y: &[AttrId], z: &[AttrId], _cfg: &TestConfig) -> Result<TestResult> {
    let strata = Strata::build(view, x, y, z)?;
    Ok(from_strata(&strata))
}

pub(super) fn from_strata(strata: &Strata) -> TestResult {
    let statistic = strata.statistic();
    let df = strata.df();
    let g = 2.0 * strata.n as f64 * statistic;
    let p_value =
        if df == 0 { 1.0 } else { ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(g).clamp(0.0, 1.0) };
    TestResult {
        statistic,
        p_value,
        ci_low: None,
        ci_high: None,
        method: Method::Chi2,
        permutations: None,
        df: Some(df),
        groups: strata.groups.len(),
        groups_tested: strata.groups.len(),
    }
}
