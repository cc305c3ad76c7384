//! Out-of-distribution detection as likelihood-ratio testing.
//!
//! The library fits exact-likelihood density models to an in-distribution
//! dataset, pairs them with a pluggable proxy for the unknown
//! out-distribution, and scores samples by the log likelihood ratio
//! `log p_out_proxy(x) - log p_in(x)` (higher means more OOD). Rank-based
//! evaluation (AUROC, ROC, FPR@TPR) and threshold calibration live in
//! [`metrics`] and [`detector`]; scripted demonstrations of why the naive
//! density criterion fails live in [`experiments`].

#![forbid(unsafe_code)]

pub mod dataset;
pub mod density;
pub mod detector;
pub mod document;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod io;
pub mod metrics;
pub mod proxy;
pub mod seed;

pub use dataset::{Dataset, Sample};
pub use error::Error;
pub use seed::Seed;

pub type Result<T> = std::result::Result<T, Error>;
