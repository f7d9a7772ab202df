use serde::{Deserialize, Serialize};

use crate::data::{AttrId, DataView};
use crate::error::Result;
use crate::indep::{run_test, TestConfig, TestResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Balance {
    Biased,
    Balanced,
    /// Fewer than two rows or a single treatment arm in the context.
    Undetermined,
}

/// Outcome of testing `T ⊥ V` in one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasVerdict {
    pub balance: Balance,
    /// Plug-in `Î(T;V)` in the context, nats.
    pub statistic: f64,
    pub test: Option<TestResult>,
    /// `V`, sorted.
    pub attributes: Vec<AttrId>,
}

impl BiasVerdict {
    pub fn biased(&self) -> bool {
        self.balance == Balance::Biased
    }

    pub fn p_value(&self) -> Option<f64> {
        self.test.as_ref().map(|t| t.p_value)
    }
}

/// Whether a treatment arm is missing or the context is too small to test.
pub fn undetermined(view: &DataView<'_>, t: AttrId) -> Result<bool> {
    Ok(view.n() < 2 || view.table(&[t])?.len() < 2)
}

/// Tests `T ⊥ V` on the view, treating `V` as one compound variable. The
/// query is biased with respect to `V` when independence is rejected at
/// `cfg.alpha`. An empty `V` is balanced by definition.
pub fn detect_bias(view: &DataView<'_>, t: AttrId, v: &[AttrId], cfg: &TestConfig) -> Result<BiasVerdict> {
    let mut attributes = v.to_vec();
    attributes.sort_unstable();
    attributes.dedup();
    if undetermined(view, t)? {
        return Ok(BiasVerdict { balance: Balance::Undetermined, statistic: 0.0, test: None, attributes });
    }
    if attributes.is_empty() {
        return Ok(BiasVerdict { balance: Balance::Balanced, statistic: 0.0, test: None, attributes });
    }
    let test = run_test(view, &[t], &attributes, &[], cfg)?;
    let balance = if test.rejects(cfg.alpha) { Balance::Biased } else { Balance::Balanced };
    Ok(BiasVerdict { balance, statistic: test.statistic, test: Some(test), attributes })
}
