use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{detect_bias, undetermined, Balance};
use super::explain::{fine_explanations, responsibility};
use super::query::{CausalQuery, EffectKind, QuerySpec};
use super::rewrite::{naive_estimate, rewrite_direct, rewrite_total, EffectEstimate};
use super::sql::rewritten_sql;
use crate::data::{AttrId, Context, DataView, Dataset, Selection};
use crate::discovery::{discover, CovariateSet, DiscoveryConfig};
use crate::error::Result;
use crate::indep::{CiTest, TestConfig, TestResult, Tester};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub test: TestConfig,
    pub discovery: DiscoveryConfig,
    /// Triples reported per attribute.
    pub top_k: usize,
    /// Covariates to adjust for instead of discovering them.
    pub covariates: Option<Vec<String>>,
    /// Mediators used for every outcome instead of discovering them.
    pub mediators: Option<Vec<String>>,
    /// Table name used in the rewritten SQL.
    pub table_name: String,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            test: TestConfig::default(),
            discovery: DiscoveryConfig::default(),
            top_k: 5,
            covariates: None,
            mediators: None,
            table_name: "D".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedSet {
    pub target: String,
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    /// Covariates were given by the caller.
    pub supplied: bool,
    pub covariates: Vec<String>,
    pub mediators: Vec<NamedSet>,
    pub dropped_fd: Vec<String>,
    pub dropped_entropy: Vec<String>,
    pub fallback_used: bool,
    pub mediator_fallback: Vec<String>,
    pub truncated: bool,
    pub boundaries: Vec<NamedSet>,
    pub tests: usize,
}

impl DiscoveryReport {
    /// Names for a discovery result, with nothing supplied by the caller.
    pub fn from_set(ds: &Dataset, set: &CovariateSet) -> Self {
        Self {
            supplied: false,
            covariates: names(ds, &set.covariates),
            mediators: set
                .mediators
                .iter()
                .map(|(y, m)| NamedSet { target: ds.name(*y).into(), attributes: names(ds, m) })
                .collect(),
            dropped_fd: names(ds, &set.dropped_fd),
            dropped_entropy: names(ds, &set.dropped_entropy),
            fallback_used: set.fallback_used,
            mediator_fallback: names(ds, &set.mediator_fallback),
            truncated: set.truncated,
            boundaries: set
                .boundaries
                .iter()
                .map(|b| NamedSet { target: ds.name(b.target).into(), attributes: names(ds, &b.members) })
                .collect(),
            tests: set.tests,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub balance: Balance,
    pub attributes: Vec<String>,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub test: Option<TestResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedRho {
    pub attribute: String,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub t: String,
    pub y: String,
    pub z: String,
    pub kappa_tz: f64,
    pub kappa_yz: f64,
    pub borda: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineReport {
    pub attribute: String,
    pub triples: Vec<Triple>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub outcome: String,
    pub verdict: VerdictReport,
    /// `None` when no single attribute carries any of the dependence.
    pub responsibility: Option<Vec<NamedRho>>,
    pub fine: Vec<FineReport>,
    pub naive: EffectEstimate<f64>,
    pub total: EffectEstimate<f64>,
    pub direct: Option<EffectEstimate<f64>>,
    /// The naive and adjusted differences have opposite signs.
    pub reversal: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContextStatus {
    Analyzed,
    Undetermined,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextReport {
    /// Group-by values of this context, in group-by order.
    pub key: Vec<String>,
    pub context: Context,
    pub rows: usize,
    pub status: ContextStatus,
    pub error: Option<String>,
    pub outcomes: Vec<OutcomeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub schema_version: u32,
    pub query: QuerySpec,
    /// Rows matching the WHERE context with either treatment value.
    pub rows: usize,
    pub discovery: DiscoveryReport,
    pub contexts: Vec<ContextReport>,
    pub rewritten_sql: String,
}

impl BiasReport {
    pub fn has_undetermined(&self) -> bool {
        self.contexts.iter().any(|c| c.status == ContextStatus::Undetermined)
    }

    pub fn has_failures(&self) -> bool {
        self.contexts.iter().any(|c| c.status == ContextStatus::Failed)
    }

    /// Fixed-width table of naive, total and direct effects per context
    /// and outcome.
    pub fn summary_table(&self) -> String {
        let fmt = |e: Option<&EffectEstimate<f64>>| match e.and_then(|e| e.delta) {
            Some(d) => format!("{d:+.4}"),
            None => "-".into(),
        };
        let mut lines = vec![format!(
            "{:<24} {:<12} {:<12} {:>9} {:>9} {:>9} {:>9}  note",
            "context", "outcome", "verdict", "p", "naive", "total", "direct"
        )];
        for c in &self.contexts {
            let key = if c.key.is_empty() { "(all)".to_string() } else { c.key.join(",") };
            if c.outcomes.is_empty() {
                let status = match c.status {
                    ContextStatus::Undetermined => "undetermined",
                    ContextStatus::Failed => "failed",
                    ContextStatus::Analyzed => "-",
                };
                lines.push(format!("{key:<24} {:<12} {status:<12}", "-"));
                continue;
            }
            for o in &c.outcomes {
                let verdict = match o.verdict.balance {
                    Balance::Biased => "biased",
                    Balance::Balanced => "unbiased",
                    Balance::Undetermined => "undetermined",
                };
                let p = o.verdict.p_value.map_or("-".into(), |p| format!("{p:.4}"));
                let note = if o.reversal { "  sign reversal" } else { "" };
                lines.push(format!(
                    "{key:<24} {:<12} {verdict:<12} {p:>9} {:>9} {:>9} {:>9}{note}",
                    o.outcome,
                    fmt(Some(&o.naive)),
                    fmt(Some(&o.total)),
                    fmt(o.direct.as_ref())
                ));
            }
        }
        lines.join("\n")
    }
}

fn names(ds: &Dataset, ids: &[AttrId]) -> Vec<String> {
    ds.names(ids)
}

/// Runs the full pipeline: pruning and discovery on the WHERE selection,
/// then per group-by context bias detection, explanations (when biased)
/// and naive, total and, for direct queries, direct effect estimates.
pub fn analyze(ds: &Dataset, spec: &QuerySpec, cfg: &AnalysisConfig) -> Result<BiasReport> {
    cfg.test.validate()?;
    let q = CausalQuery::resolve(ds, spec)?;
    let base = q.base_selection(ds)?;
    let view = DataView::new(ds, base.clone());

    let supplied_z = cfg.covariates.as_ref().map(|c| ds.attrs(c)).transpose()?;
    let supplied_m = cfg.mediators.as_ref().map(|m| ds.attrs(m)).transpose()?;
    let needs_discovery = supplied_z.is_none() || (spec.effect == EffectKind::Direct && supplied_m.is_none());
    let tester = Tester::new(cfg.test)?;
    let discovered: Option<CovariateSet> = if needs_discovery && view.n() > 0 {
        Some(discover(&view, q.treatment, &q.outcomes, None, &tester, &cfg.discovery)?)
    } else {
        None
    };
    let z: Vec<AttrId> = match (&supplied_z, &discovered) {
        (Some(z), _) => z.clone(),
        (None, Some(d)) => d.covariates.clone(),
        (None, None) => Vec::new(),
    };
    let mediators: Vec<(AttrId, Vec<AttrId>)> = q
        .outcomes
        .iter()
        .map(|&y| {
            let m = match (&supplied_m, &discovered) {
                (Some(m), _) => m.clone(),
                (None, Some(d)) => d.mediators_of(y).to_vec(),
                (None, None) => Vec::new(),
            };
            (y, m)
        })
        .collect();

    let mut discovery = match &discovered {
        Some(d) => DiscoveryReport::from_set(ds, d),
        None => DiscoveryReport::from_set(ds, &CovariateSet::empty(q.treatment)),
    };
    if supplied_z.is_some() {
        discovery.supplied = true;
        discovery.fallback_used = false;
    }
    discovery.covariates = names(ds, &z);
    discovery.mediators =
        mediators.iter().map(|(y, m)| NamedSet { target: ds.name(*y).into(), attributes: names(ds, m) }).collect();
    discovery.tests = tester.executed();

    let contexts = enumerate_contexts(ds, &q, &view, &base)?;
    let reports: Vec<ContextReport> = contexts
        .into_par_iter()
        .map(|(key, context, sel)| {
            let sub = view.subview(sel);
            let rows = sub.n();
            match analyze_context(&sub, &q, &z, &mediators, cfg) {
                Ok(Some(outcomes)) => {
                    ContextReport { key, context, rows, status: ContextStatus::Analyzed, error: None, outcomes }
                }
                Ok(None) => {
                    ContextReport { key, context, rows, status: ContextStatus::Undetermined, error: None, outcomes: Vec::new() }
                }
                Err(e) => ContextReport {
                    key,
                    context,
                    rows,
                    status: ContextStatus::Failed,
                    error: Some(e.to_string()),
                    outcomes: Vec::new(),
                },
            }
        })
        .collect();

    Ok(BiasReport {
        schema_version: SCHEMA_VERSION,
        query: spec.clone(),
        rows: base.len(),
        rewritten_sql: rewritten_sql(&cfg.table_name, spec, &discovery.covariates),
        discovery,
        contexts: reports,
    })
}

/// Contexts `C ∧ X = x` for every group-by value `x` present, ordered by
/// decoded values. Without grouping attributes the only context is `C`.
fn enumerate_contexts(
    ds: &Dataset,
    q: &CausalQuery,
    view: &DataView<'_>,
    base: &Selection,
) -> Result<Vec<(Vec<String>, Context, Selection)>> {
    if q.groupby.is_empty() {
        return Ok(vec![(Vec::new(), q.spec.context.clone(), base.clone())]);
    }
    if view.n() == 0 {
        return Ok(Vec::new());
    }
    let table = view.table(&q.groupby)?;
    let mut keyed: Vec<(Vec<String>, Vec<u32>)> = table
        .cells()
        .map(|(codes, _)| (q.groupby.iter().zip(&codes).map(|(&a, &c)| ds.decode(a, c).to_owned()).collect(), codes))
        .collect();
    keyed.sort();
    Ok(keyed
        .into_iter()
        .map(|(key, codes)| {
            let mut ctx = q.spec.context.clone();
            for (&a, v) in q.groupby.iter().zip(&key) {
                ctx = ctx.and_eq(ds.name(a), v.clone());
            }
            let fixed: Vec<(AttrId, u32)> = q.groupby.iter().copied().zip(codes).collect();
            (key, ctx, base.restrict(ds, &fixed))
        })
        .collect())
}

fn analyze_context(
    view: &DataView<'_>,
    q: &CausalQuery,
    z: &[AttrId],
    mediators: &[(AttrId, Vec<AttrId>)],
    cfg: &AnalysisConfig,
) -> Result<Option<Vec<OutcomeReport>>> {
    let ds = view.dataset();
    let t = q.treatment;
    if undetermined(view, t)? {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(q.outcomes.len());
    for (y, m) in mediators {
        let y = *y;
        let v: Vec<AttrId> = match q.spec.effect {
            EffectKind::Total => z.to_vec(),
            EffectKind::Direct => z.iter().chain(m).copied().collect(),
        };
        let verdict = detect_bias(view, t, &v, &cfg.test)?;
        let (rho, fine) = if verdict.biased() {
            let rho = responsibility(view, t, &verdict.attributes)?;
            let order: Vec<AttrId> = match &rho {
                Some(r) => r.iter().map(|e| e.attr).collect(),
                None => verdict.attributes.clone(),
            };
            let mut fine = Vec::new();
            for &a in &order {
                let triples = fine_explanations(view, t, y, a, cfg.top_k)?
                    .into_iter()
                    .map(|f| Triple {
                        t: ds.decode(t, f.t).into(),
                        y: ds.decode(y, f.y).into(),
                        z: ds.decode(a, f.z).into(),
                        kappa_tz: f.kappa_tz,
                        kappa_yz: f.kappa_yz,
                        borda: f.borda,
                    })
                    .collect();
                fine.push(FineReport { attribute: ds.name(a).into(), triples });
            }
            let rho = rho.map(|r| r.into_iter().map(|e| NamedRho { attribute: ds.name(e.attr).into(), rho: e.rho }).collect());
            (rho, fine)
        } else {
            (None, Vec::new())
        };
        let naive = naive_estimate::<f64>(view, t, q.t0, q.t1, y, &cfg.test)?;
        let total = rewrite_total::<f64>(view, t, q.t0, q.t1, y, z, &cfg.test)?;
        let direct = match q.spec.effect {
            EffectKind::Direct => Some(rewrite_direct::<f64>(view, t, q.t0, q.t1, y, z, m, &cfg.test)?),
            EffectKind::Total => None,
        };
        let reversal = matches!((naive.delta, total.delta), (Some(a), Some(b)) if a * b < 0.0);
        out.push(OutcomeReport {
            outcome: ds.name(y).into(),
            verdict: VerdictReport {
                balance: verdict.balance,
                attributes: names(ds, &verdict.attributes),
                statistic: verdict.statistic,
                p_value: verdict.p_value(),
                test: verdict.test,
            },
            responsibility: rho,
            fine,
            naive,
            total,
            direct,
            reversal,
        });
    }
    Ok(Some(out))
}
