//! Risk-sensitive selection of a small pool of search-system configurations
//! and per-query assignment of a configuration from that pool.
//!
//! The pipeline:
//!
//! 1. [`metrics::build_matrix`] turns runs and judgments into an
//!    [`data::EffectivenessMatrix`] (or one is loaded from a TSV file).
//! 2. [`selection::select_configurations`] greedily picks `k` complementary
//!    configurations, trading the reward of improving some queries against
//!    the risk of degrading others.
//! 3. [`matcher::TrainedModel`] maps each training query to its best pool
//!    member and assigns unseen queries through their most similar training
//!    query.
//!
//! [`baselines`] and [`harness`] provide the reference systems and the
//! cross-validation protocol used to compare them.

pub mod baselines;
pub mod data;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod matcher;
pub mod metrics;
pub mod selection;

pub use error::{Error, Result};
