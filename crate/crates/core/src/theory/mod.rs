//! Closed-form and asymptotic optimism.
//!
//! Expectations over a fresh point run on a weighted evaluation sample:
//! a composite or Gauss–Hermite rule in one dimension, or antithetic
//! Monte-Carlo draws otherwise. The sample is a pure function of its
//! seed, so formulas evaluated with the same stream share their points
//! and agree to solver precision wherever they coincide algebraically.

mod asymptotic;
mod closed_form;
mod decomposition;
mod moments;

pub use asymptotic::{
    cor2_signal_part, thm1_optimism, thm2_lowrank_bound, thm3_ridge_optimism, thm4_kernel_optimism, Estimate,
    TheoryValue,
};
pub use closed_form::{
    cor4_scaled_1d, cor5_quadratic_form, exp_signal_printed, exp_signal_scaled, fk_closed_form, poly_closed_form,
    PrintedExpForms,
};
pub use decomposition::{prop1_decomposition, Decomposition, TestLaw};
pub use moments::{
    population_moments, EvalMethod, FeatureMap, FnFeatureMap, NtkFeatureMap, PopulationMoments, JACKKNIFE_GROUPS,
    MIN_BUDGET,
};
