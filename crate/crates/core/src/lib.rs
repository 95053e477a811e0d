//! Regression trees for multiresponse and longitudinal data with unbiased,
//! chi-squared based split-variable selection.
//!
//! The pipeline per node is: residual sign vectors ([`selector`]), variable
//! selection by contingency-table tests, then a split-set search on the
//! chosen variable only ([`splitter`]). Trees are grown and pruned by
//! cost-complexity cross-validation in [`tree`]. [`baseline`] is an
//! exhaustive-search tree used as a comparator, and [`sim`] holds the
//! seeded Monte-Carlo experiments.

pub mod baseline;
pub mod dataset;
pub mod error;
pub mod par;
pub mod sample;
pub mod selector;
pub mod sim;
pub mod splitter;
pub mod stats;
pub mod tree;

pub use dataset::{Cell, ColumnRole, Dataset, Layout, LoadOptions, Obs, RoleSpec, SubjectSeries};
pub use error::{Error, Result};
pub use sample::{Predictor, PredictorKind, Sample};
pub use tree::{GrowConfig, Method, Tree};
