//! Email authorship identification from writing style.
//!
//! The pipeline: load and clean raw emails ([`corpus`]), extract stylometric
//! and content features ([`stylometry`], [`content`]), train a cluster-based
//! classification model ([`ccm`]), and evaluate under stratified
//! cross-validation ([`eval`]).
//!
//! Numeric code is generic over the scalar type via [`num::Scalar`]; the type
//! aliases at the crate root pin the default `f64` instantiation used by the
//! CLI and the evaluation harness.

pub mod ccm;
pub mod content;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod kmeans;
pub mod num;
pub mod scale;
mod seeding;
pub mod stats;
pub mod stylometry;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};

/// Default scalar for the full pipeline.
pub type Scalar = f64;

/// [`ccm::CcmModel`] at the default scalar.
pub type Model = ccm::CcmModel<Scalar>;
/// [`content::Codebook`] at the default scalar.
pub type Codebook = content::Codebook<Scalar>;
/// [`stylometry::FeatureVector`] at the default scalar.
pub type FeatureVector = stylometry::FeatureVector<Scalar>;
/// [`eval::EvalReport`] at the default scalar.
pub type EvalReport = eval::EvalReport<Scalar>;
