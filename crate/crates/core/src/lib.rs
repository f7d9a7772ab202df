//! Detection, explanation and removal of confounding bias in
//! group-by-average queries over categorical data.
//!
//! The pipeline discovers the covariates of a treatment from data
//! ([`discovery`]), tests whether the query is balanced with respect to
//! them ([`indep`], [`engine`]), ranks explanations, and rewrites the query
//! into adjusted total and direct effect estimates.

// `!(x > 0.0)` forms also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod data;
pub mod discovery;
pub mod engine;
pub mod error;
pub mod indep;
pub mod info;
pub mod num;
pub mod synth;

pub use error::{Error, Result};

/// Effect estimate in double precision, as reported by [`engine::analyze`].
pub type Estimate = engine::EffectEstimate<f64>;
/// Effect estimate in exact rational arithmetic.
pub type ExactEstimate = engine::EffectEstimate<num_rational::BigRational>;
/// Conditional mutual information estimate in double precision.
pub type MiEstimate = info::MiEstimate<f64>;
