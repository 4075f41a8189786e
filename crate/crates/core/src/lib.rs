//! Optimism of regression models under random design.
//!
//! Optimism is the expected test error on fresh inputs minus the expected
//! training error. This crate estimates it by simulation and resampling
//! and evaluates the asymptotic formulas for least squares, ridge,
//! low-rank and kernel ridge estimators.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod numcore;
pub mod models;
pub mod signals;
pub mod theory;

pub use error::{Error, Result};
