//! Guided discovery of cognitive models: a sandboxed model description
//! language, native baseline models, maximum-likelihood fitting, model
//! comparison, synthetic data generation, posterior predictive checks, and
//! an iterative proposal pipeline driven by a language model.

pub mod baselines;
pub mod binding;
pub mod comparison;
pub mod dataset;
pub mod env;
pub mod error;
pub mod fitting;
pub mod mdl;
pub mod params;
pub mod pipeline;
pub mod ppc;
pub mod prob;
pub mod synthgen;
