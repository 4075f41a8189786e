//! Leading-order optimism of least squares, low-rank, ridge and kernel
//! ridge estimators, as expectations over a fresh point `(x*, y*)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numcore::linalg::PINV_CUTOFF;
use crate::numcore::{dot, svd, Cholesky, DenseMatrix, SeedStream};
use crate::signals::{DesignSpec, SignalSpec};

use super::moments::{EvalMethod, EvalSample, FeatureMap, PopulationMoments};

/// An evaluated asymptotic optimism.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryValue {
    pub raw_optimism: f64,
    /// `n·raw/(2σ²)`, absent when the noise variance is zero.
    pub scaled_optimism: Option<f64>,
    pub n: usize,
    pub eval_stderr: f64,
    pub method: EvalMethod,
}

impl TheoryValue {
    pub fn new(raw: f64, stderr: f64, n: usize, noise_var: f64, method: EvalMethod) -> Self {
        Self {
            raw_optimism: raw,
            scaled_optimism: scale(raw, n, noise_var),
            n,
            eval_stderr: stderr,
            method,
        }
    }

    /// Standard error on the scaled value.
    pub fn scaled_stderr(&self, noise_var: f64) -> Option<f64> {
        scale(self.eval_stderr, self.n, noise_var)
    }
}

fn scale(raw: f64, n: usize, noise_var: f64) -> Option<f64> {
    (noise_var > 0.0).then(|| n as f64 * raw / (2.0 * noise_var))
}

/// A value with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn quad(m: &DenseMatrix, f: &[f64]) -> f64 {
    dot(f, &m.matvec(f).expect("square"))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    Ok(())
}

/// `E[(r ± ε)²]·w`, the noise pair averaged.
fn pair(r: f64, eps: f64) -> f64 {
    0.5 * ((r + eps).powi(2) + (r - eps).powi(2))
}

/// Per-point `E_ε[(y − fᵀc)²]·fᵀMf` for a coefficient vector `c` and weight matrix `M`.
fn residual_weighted(sample: &EvalSample, c: &[f64], m: &DenseMatrix, with_noise: bool) -> Vec<f64> {
    (0..sample.len())
        .map(|i| {
            let f = sample.f(i);
            let r = sample.mu[i] - dot(f, c);
            let e = if with_noise { sample.eps[i] } else { 0.0 };
            pair(r, e) * quad(m, f)
        })
        .collect()
}

fn finish(pm: &PopulationMoments, (mean, se): (f64, f64), n: usize) -> TheoryValue {
    let c = 2.0 / n as f64;
    TheoryValue::new(c * mean, c * se, n, pm.noise_var, pm.method)
}

/// Least squares: `(2/n)·E[(y* − x*ᵀΣ⁻¹η)²·x*ᵀΣ⁻¹x*]`.
pub fn thm1_optimism(pm: &PopulationMoments, n: usize, budget: usize, rng: &SeedStream) -> Result<TheoryValue> {
    check_n(n)?;
    let sample = pm.sample(budget, rng)?;
    let est = pm.jackknife(&sample, |sigma, eta| {
        let chol = Cholesky::new(sigma)?;
        let beta = chol.solve(eta)?;
        Ok(residual_weighted(&sample, &beta, &chol.inverse(), true))
    })?;
    Ok(finish(pm, est, n))
}

/// Signal part `E[(μ(x*) − x*ᵀΣ⁻¹η)²·x*ᵀΣ⁻¹x*]`, evaluated on the moments' own sample.
/// Zero exactly when μ is linear in the features.
pub fn cor2_signal_part(pm: &PopulationMoments) -> Result<Estimate> {
    let sample = pm.sample(pm.budget, &pm.rng)?;
    let (value, stderr) = pm.jackknife(&sample, |sigma, eta| {
        let chol = Cholesky::new(sigma)?;
        let beta = chol.solve(eta)?;
        Ok(residual_weighted(&sample, &beta, &chol.inverse(), false))
    })?;
    Ok(Estimate { value, stderr })
}

/// `Σ_k⁺ + σ_{k+1}⁻¹ I`. The inflation is zero at `k = d` or when `σ_{k+1}` is negligible.
pub(crate) fn lowrank_weight(sigma: &DenseMatrix, k: usize) -> DenseMatrix {
    let q = sigma.rows();
    let dec = svd(sigma);
    let cutoff = dec.s[0] * PINV_CUTOFF;
    let infl = if k < q && dec.s[k] > cutoff { dec.s[k].recip() } else { 0.0 };
    let mut m = DenseMatrix::identity(q).scale(infl).into_vec();
    for r in 0..k {
        let s = dec.s[r];
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let v = dec.vt.row(r);
        for i in 0..q {
            for j in 0..q {
                m[i * q + j] += v[i] * v[j] / s;
            }
        }
    }
    DenseMatrix::new(q, q, m).expect("finite")
}

/// Low-rank bound: `(2/n)·E[(y* − x*ᵀMη)²·x*ᵀMx*]` with `M = Σ_k⁺ + σ_{k+1}⁻¹I`.
pub fn thm2_lowrank_bound(
    pm: &PopulationMoments,
    k: usize,
    n: usize,
    budget: usize,
    rng: &SeedStream,
) -> Result<TheoryValue> {
    check_n(n)?;
    if k == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    if k > pm.d {
        return Err(Error::RankExceedsDimension { rank: k, dim: pm.d });
    }
    let sample = pm.sample(budget, rng)?;
    let est = pm.jackknife(&sample, |sigma, eta| {
        let m = lowrank_weight(sigma, k);
        let c = m.matvec(eta)?;
        Ok(residual_weighted(&sample, &c, &m, true))
    })?;
    Ok(finish(pm, est, n))
}

/// Ridge with penalty `nλ`: `(2/n)·E[gᵀΣ_λ⁻¹g]` where
/// `g = x*y* − (x*x*ᵀ + λI)Σ_λ⁻¹η` and `Σ_λ = Σ + λI`.
pub fn thm3_ridge_optimism(
    pm: &PopulationMoments,
    lambda: f64,
    n: usize,
    budget: usize,
    rng: &SeedStream,
) -> Result<TheoryValue> {
    check_n(n)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    let sample = pm.sample(budget, rng)?;
    let est = pm.jackknife(&sample, |sigma, eta| ridge_points(&sample, sigma, eta, lambda))?;
    Ok(finish(pm, est, n))
}

fn ridge_points(sample: &EvalSample, sigma: &DenseMatrix, eta: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let chol = Cholesky::new(&sigma.add_diagonal(lambda))?;
    let a = chol.inverse();
    let b = chol.solve(eta)?;
    Ok((0..sample.len())
        .map(|i| {
            let f = sample.f(i);
            let fb = dot(f, &b);
            let h = |y: f64| {
                let g: Vec<f64> = f.iter().zip(&b).map(|(fj, bj)| fj * (y - fb) - lambda * bj).collect();
                quad(&a, &g)
            };
            let (mu, e) = (sample.mu[i], sample.eps[i]);
            0.5 * (h(mu + e) + h(mu - e))
        })
        .collect())
}

/// Kernel ridge in the explicit feature space of `phi`, moments by inner Monte Carlo.
/// Identical to the ridge formula when `phi` is the identity.
pub fn thm4_kernel_optimism(
    phi: impl FeatureMap + 'static,
    signal: &SignalSpec,
    design: &DesignSpec,
    lambda: f64,
    n: usize,
    budget: usize,
    rng: &SeedStream,
) -> Result<TheoryValue> {
    let q = phi.dim(design.dimension());
    let work = q.saturating_mul(q);
    if work > budget {
        return Err(Error::FeatureDimensionOverflow { q, work, budget });
    }
    let pm = PopulationMoments::from_features(Arc::new(phi), signal, design, EvalMethod::InnerMc, budget, rng)?;
    thm3_ridge_optimism(&pm, lambda, n, budget, rng)
}
