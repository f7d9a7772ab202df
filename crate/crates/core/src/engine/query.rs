use serde::{Deserialize, Serialize};

use crate::data::{select, AttrId, Context, Dataset, Selection};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectKind {
    #[default]
    Total,
    Direct,
}

impl std::str::FromStr for EffectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "total" => Ok(Self::Total),
            "direct" => Ok(Self::Direct),
            _ => Err(Error::Parse { input: s.to_owned(), reason: "expected total or direct".into() }),
        }
    }
}

/// A group-by-average query by attribute names:
/// `SELECT T, X, avg(Y1), ... FROM D WHERE C GROUP BY T, X` restricted to
/// two treatment values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub treatment: String,
    pub t0: String,
    pub t1: String,
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub groupby: Vec<String>,
    #[serde(default, rename = "where")]
    pub context: Context,
    #[serde(default)]
    pub effect: EffectKind,
}

/// A [`QuerySpec`] resolved against a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalQuery {
    pub spec: QuerySpec,
    pub treatment: AttrId,
    pub t0: u32,
    pub t1: u32,
    pub outcomes: Vec<AttrId>,
    pub groupby: Vec<AttrId>,
}

impl CausalQuery {
    pub fn resolve(ds: &Dataset, spec: &QuerySpec) -> Result<Self> {
        let treatment = ds.attr(&spec.treatment)?;
        let code = |v: &str| {
            ds.encode(treatment, v).ok_or_else(|| Error::UnknownValue { attr: spec.treatment.clone(), value: v.to_owned() })
        };
        let (t0, t1) = (code(&spec.t0)?, code(&spec.t1)?);
        if t0 == t1 {
            return Err(Error::InvalidQuery("t0 and t1 must differ".into()));
        }
        if spec.outcomes.is_empty() {
            return Err(Error::InvalidQuery("at least one outcome is required".into()));
        }
        let outcomes = ds.attrs(&spec.outcomes)?;
        let groupby = ds.attrs(&spec.groupby)?;
        for &y in &outcomes {
            if !ds.is_binary_outcome(y) {
                return Err(Error::InvalidQuery(format!("outcome `{}` takes values outside {{0, 1}}", ds.name(y))));
            }
            if y == treatment {
                return Err(Error::InvalidQuery("the treatment cannot be an outcome".into()));
            }
            if groupby.contains(&y) {
                return Err(Error::InvalidQuery(format!("outcome `{}` is also a grouping attribute", ds.name(y))));
            }
        }
        if groupby.contains(&treatment) {
            return Err(Error::InvalidQuery("the treatment cannot be a grouping attribute".into()));
        }
        for term in spec.context.terms() {
            ds.attr(&term.attr)?;
        }
        Ok(Self { spec: spec.clone(), treatment, t0, t1, outcomes, groupby })
    }

    /// Rows satisfying the WHERE context with treatment `t0` or `t1`.
    pub fn base_selection(&self, ds: &Dataset) -> Result<Selection> {
        Ok(select(ds, &self.spec.context)?.restrict_in(ds, self.treatment, &[self.t0, self.t1]))
    }
}
