use crate::error::{Error, Result};
use crate::numcore::linalg::{solve_psd_or_pinv, svd, PINV_CUTOFF};
use crate::numcore::{dot, mean, DenseMatrix};
use crate::signals::Dataset;

use super::{FitWarning, FittedModel, ModelSpec, Payload};

/// How raw inputs become regression features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearFeatures {
    Raw,
    /// Raw inputs followed by a constant 1.
    Intercept,
    /// `(1, max(x, 0))` on 1-D input.
    Bended,
    /// The constant 1 alone.
    Constant,
}

impl LinearFeatures {
    pub fn map(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LinearFeatures::Raw => x.to_vec(),
            LinearFeatures::Intercept => {
                let mut f = x.to_vec();
                f.push(1.0);
                f
            }
            LinearFeatures::Bended => vec![1.0, x[0].max(0.0)],
            LinearFeatures::Constant => vec![1.0],
        }
    }

    pub(crate) fn input_dim(&self, n_coef: usize) -> Option<usize> {
        match self {
            LinearFeatures::Raw => Some(n_coef),
            LinearFeatures::Intercept => Some(n_coef - 1),
            LinearFeatures::Bended => Some(1),
            LinearFeatures::Constant => None,
        }
    }

    pub fn design(&self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            LinearFeatures::Raw => x.clone(),
            LinearFeatures::Intercept => x.with_intercept(),
            _ => {
                let rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| self.map(x.row(i))).collect();
                DenseMatrix::from_rows(&rows).expect("finite features")
            }
        }
    }
}

fn linear_model(spec: ModelSpec, features: LinearFeatures, beta: Vec<f64>, warnings: Vec<FitWarning>) -> FittedModel {
    FittedModel { spec, payload: Payload::Linear { features, beta }, loss_trace: Vec::new(), warnings }
}

/// Solves `(ΦᵀΦ + penalty·I) β = Φᵀy`, falling back to the pseudo-inverse.
fn penalized_ls(phi: &DenseMatrix, y: &[f64], penalty: f64) -> Result<(Vec<f64>, Vec<FitWarning>)> {
    let g = phi.gram().add_diagonal(penalty);
    let r = phi.tmatvec(y)?;
    let (beta, fallback) = solve_psd_or_pinv(&g, &r)?;
    let warnings = if fallback { vec![FitWarning::PseudoInverseFallback] } else { Vec::new() };
    Ok((beta, warnings))
}

pub fn fit_mean(data: &Dataset) -> Result<FittedModel> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(linear_model(ModelSpec::Mean, LinearFeatures::Constant, vec![mean(&data.y)], Vec::new()))
}

/// Least squares `β̂ = (XᵀX)⁻¹Xᵀy`, optionally with an intercept column.
pub fn fit_ols(data: &Dataset, intercept: bool) -> Result<FittedModel> {
    let mut m = fit_ridge_with(data, 0.0, intercept)?;
    m.spec = ModelSpec::Ols { intercept };
    Ok(m)
}

/// Ridge `β̂ = (XᵀX + nλI)⁻¹Xᵀy` on raw features.
pub fn fit_ridge(data: &Dataset, lambda: f64) -> Result<FittedModel> {
    fit_ridge_with(data, lambda, false)
}

/// Ridge with an optional intercept column. The intercept is penalized like
/// every other coefficient.
pub fn fit_ridge_with(data: &Dataset, lambda: f64, intercept: bool) -> Result<FittedModel> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    let features = if intercept { LinearFeatures::Intercept } else { LinearFeatures::Raw };
    let phi = features.design(&data.x);
    let (beta, warnings) = penalized_ls(&phi, &data.y, data.n() as f64 * lambda)?;
    Ok(linear_model(ModelSpec::Ridge { lambda, intercept }, features, beta, warnings))
}

/// Exact least squares on `(1, max(x, 0))`.
pub fn fit_bended(data: &Dataset) -> Result<FittedModel> {
    if data.d() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: data.d() });
    }
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if data.x.as_slice().iter().all(|x| *x <= 0.0) {
        let beta = vec![mean(&data.y), 0.0];
        return Ok(linear_model(ModelSpec::Bended, LinearFeatures::Bended, beta, vec![FitWarning::DegenerateFeatures]));
    }
    let phi = LinearFeatures::Bended.design(&data.x);
    let (beta, warnings) = penalized_ls(&phi, &data.y, 0.0)?;
    Ok(linear_model(ModelSpec::Bended, LinearFeatures::Bended, beta, warnings))
}

/// Least squares with `XᵀX/n` replaced by its best rank-`k` approximation.
pub fn fit_low_rank(data: &Dataset, k: usize) -> Result<FittedModel> {
    let d = data.d();
    if k == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    if k > d {
        return Err(Error::RankExceedsDimension { rank: k, dim: d });
    }
    let n = data.n() as f64;
    let sigma = data.x.gram().scale(1.0 / n);
    let eta: Vec<f64> = data.x.tmatvec(&data.y)?.iter().map(|v| v / n).collect();
    let beta = truncated_pinv_apply(&sigma, &eta, k);
    Ok(linear_model(ModelSpec::LowRank { rank: k }, LinearFeatures::Raw, beta, Vec::new()))
}

/// `Σ_k⁺ v` for symmetric PSD `Σ`, keeping the top `k` singular directions.
pub(crate) fn truncated_pinv_apply(sigma: &DenseMatrix, v: &[f64], k: usize) -> Vec<f64> {
    let dec = svd(sigma);
    let cutoff = dec.s[0] * PINV_CUTOFF;
    let mut out = vec![0.0; v.len()];
    for r in 0..k.min(dec.s.len()) {
        let s = dec.s[r];
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let dir = dec.vt.row(r);
        let c = dot(dir, v) / s;
        out.iter_mut().zip(dir).for_each(|(o, x)| *o += c * x);
    }
    out
}
