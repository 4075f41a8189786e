//! Model zoo: closed-form linear fits, kernel ridge regression and small
//! networks trained by full-batch gradient descent.

mod kernel;
mod linear;
mod mlp;
mod ntk;
mod optim;

pub use kernel::{fit_krr, ntk_features, ntk_gram, ntk_kernel_eval, KernelSpec};
pub use linear::{fit_bended, fit_low_rank, fit_mean, fit_ols, fit_ridge, fit_ridge_with, LinearFeatures};
pub use mlp::{fit_mlp, Mlp, MlpSpec};
pub use ntk::{fit_ntk_layerwise, ntk_hidden, NtkLayerwiseSpec};
pub use optim::Optimizer;

use crate::error::{Error, Result};
use crate::numcore::{dot, DenseMatrix, SeedStream};
use crate::signals::Dataset;

/// Declarative model family.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// Constant predictor equal to the training mean.
    Mean,
    Ols { intercept: bool },
    /// Penalty `nλ‖β‖²` on the normal equations.
    Ridge { lambda: f64, intercept: bool },
    /// `α + β·max(x, 0)`.
    Bended,
    LowRank { rank: usize },
    Krr { kernel: KernelSpec, lambda: f64 },
    Mlp(MlpSpec),
    NtkLayerwise(NtkLayerwiseSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            ModelSpec::Ridge { lambda, .. } | ModelSpec::Krr { lambda, .. } if !(*lambda >= 0.0) => {
                bad(format!("lambda = {lambda} must be >= 0"))
            }
            ModelSpec::LowRank { rank: 0 } => bad("rank must be >= 1".into()),
            ModelSpec::Mlp(s) => s.validate(),
            ModelSpec::NtkLayerwise(s) => s.validate(),
            ModelSpec::Krr { kernel, .. } => kernel.validate(),
            _ => Ok(()),
        }
    }

    /// Short label for reports.
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Mean => "mean".into(),
            ModelSpec::Ols { intercept: false } => "ols".into(),
            ModelSpec::Ols { intercept: true } => "ols+1".into(),
            ModelSpec::Ridge { intercept: false, .. } => "ridge".into(),
            ModelSpec::Ridge { intercept: true, .. } => "ridge+1".into(),
            ModelSpec::Bended => "bended".into(),
            ModelSpec::LowRank { rank } => format!("lowrank{rank}"),
            ModelSpec::Krr { kernel: KernelSpec::Linear, .. } => "krr-linear".into(),
            ModelSpec::Krr { .. } => "krr-ntk".into(),
            ModelSpec::Mlp(s) => format!(
                "mlp{}",
                s.hidden.iter().map(|w| format!("-{w}")).collect::<String>()
            ),
            ModelSpec::NtkLayerwise(s) => format!("ntk-{}", s.m),
        }
    }

    /// The penalty parameter, zero for unpenalized families.
    pub fn lambda(&self) -> f64 {
        match self {
            ModelSpec::Ridge { lambda, .. } | ModelSpec::Krr { lambda, .. } => *lambda,
            ModelSpec::NtkLayerwise(s) => s.lambda,
            _ => 0.0,
        }
    }

    /// Fewest training rows a fit on `d` inputs needs to be determined.
    pub fn min_train_rows(&self, d: usize) -> usize {
        match self {
            ModelSpec::Ols { intercept } => d + usize::from(*intercept),
            ModelSpec::LowRank { rank } => *rank,
            ModelSpec::Bended => 2,
            _ => 1,
        }
    }

    /// Whether fitting consumes random numbers.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, ModelSpec::Mlp(_) | ModelSpec::NtkLayerwise(_))
    }
}

/// Non-fatal conditions met while fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// Normal equations were singular; the pseudo-inverse was used.
    PseudoInverseFallback,
    /// The ReLU feature was identically zero and was dropped.
    DegenerateFeatures,
    /// Diagonal jitter added to the Gram matrix before factorizing.
    GramJitter(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Linear { features: LinearFeatures, beta: Vec<f64> },
    Kernel { kernel: KernelSpec, alpha: Vec<f64>, train_x: DenseMatrix },
    Mlp(Mlp),
    Ntk { w: DenseMatrix, a: Vec<f64> },
}

/// A fitted predictor. Immutable after fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub payload: Payload,
    /// Per-epoch training objective for iterative fits, empty otherwise.
    pub loss_trace: Vec<f64>,
    pub warnings: Vec<FitWarning>,
}

impl FittedModel {
    /// Input dimension the model was trained on.
    pub fn input_dim(&self) -> Option<usize> {
        match &self.payload {
            Payload::Linear { features, beta } => features.input_dim(beta.len()),
            Payload::Kernel { train_x, .. } => Some(train_x.cols()),
            Payload::Mlp(m) => Some(m.sizes()[0]),
            Payload::Ntk { w, .. } => Some(w.rows()),
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        match &self.payload {
            Payload::Linear { features, beta } => dot(&features.map(x), beta),
            Payload::Kernel { kernel, alpha, train_x } => {
                (0..train_x.rows()).map(|i| kernel.eval(x, train_x.row(i)) * alpha[i]).sum()
            }
            Payload::Mlp(m) => m.predict_one(x),
            Payload::Ntk { w, a } => ntk::forward_one(w, a, x),
        }
    }
}

/// Predictions at each row of `x`.
pub fn predict(model: &FittedModel, x: &DenseMatrix) -> Result<Vec<f64>> {
    if let Some(d) = model.input_dim() {
        if d != x.cols() {
            return Err(Error::DimensionMismatch { expected: d, found: x.cols() });
        }
    }
    match &model.payload {
        Payload::Mlp(m) => Ok(m.forward(x).output),
        Payload::Ntk { w, a } => Ok(ntk::forward(w, a, x).1),
        _ => Ok((0..x.rows()).map(|i| model.predict_one(x.row(i))).collect()),
    }
}

/// Fits any model family. Only the iterative families read `rng`.
pub fn fit(spec: &ModelSpec, data: &Dataset, rng: &SeedStream) -> Result<FittedModel> {
    spec.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    match spec {
        ModelSpec::Mean => fit_mean(data),
        ModelSpec::Ols { intercept } => fit_ols(data, *intercept),
        ModelSpec::Ridge { lambda, intercept } => fit_ridge_with(data, *lambda, *intercept),
        ModelSpec::Bended => fit_bended(data),
        ModelSpec::LowRank { rank } => fit_low_rank(data, *rank),
        ModelSpec::Krr { kernel, lambda } => fit_krr(data, kernel, *lambda),
        ModelSpec::Mlp(s) => fit_mlp(data, s, rng),
        ModelSpec::NtkLayerwise(s) => fit_ntk_layerwise(data, s, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_checks_dimension() {
        let data = Dataset::new(DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), vec![1.0, 2.0], None).unwrap();
        let m = fit_ols(&data, false).unwrap();
        let bad = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(predict(&m, &bad), Err(Error::DimensionMismatch { .. })));
        let good = DenseMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert!((predict(&m, &good).unwrap()[0] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn names_and_validation() {
        assert_eq!(ModelSpec::Ols { intercept: true }.name(), "ols+1");
        assert!(ModelSpec::Ridge { lambda: -1.0, intercept: false }.validate().is_err());
        assert!(ModelSpec::LowRank { rank: 0 }.validate().is_err());
        assert_eq!(ModelSpec::Mlp(MlpSpec::default()).name(), "mlp-50-50");
    }
}
