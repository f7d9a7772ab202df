//! Bias detection, explanation and query rewriting for group-by-average
//! queries.

mod detect;
mod explain;
mod query;
mod report;
mod rewrite;
mod sql;

pub use detect::{detect_bias, undetermined, Balance, BiasVerdict};
pub use explain::{borda_order, borda_scores, fine_explanations, responsibility, FineExplanation, Responsibility};
pub use query::{CausalQuery, EffectKind, QuerySpec};
pub use report::{
    analyze, AnalysisConfig, BiasReport, ContextReport, ContextStatus, DiscoveryReport, FineReport, NamedRho, NamedSet,
    OutcomeReport, Triple, VerdictReport, SCHEMA_VERSION,
};
pub use rewrite::{naive_estimate, rewrite_direct, rewrite_total, EffectEstimate, EstimateKind};
pub use sql::rewritten_sql;
