//! Population moments `Σ = E[φφᵀ]`, `η = E[φy]` and the weighted
//! evaluation sample every asymptotic formula averages over.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{ntk_features, LinearFeatures};
use crate::numcore::rng::standard_normal;
use crate::numcore::{pairwise_sum, DenseMatrix, QuadratureRule, SeedStream};
use crate::signals::{DesignSpec, SignalKind, SignalSpec};

/// Smallest inner Monte-Carlo budget accepted.
pub const MIN_BUDGET: usize = 1000;
/// Groups used for the delete-one-group jackknife.
pub const JACKKNIFE_GROUPS: usize = 20;
const QUADRATURE_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Quadrature,
    InnerMc,
}

impl EvalMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EvalMethod::Quadrature => "quadrature",
            EvalMethod::InnerMc => "inner-MC",
        }
    }
}

/// A deterministic feature map `x ↦ φ(x)`.
pub trait FeatureMap: Send + Sync + fmt::Debug {
    /// Output length for inputs of length `input_dim`.
    fn dim(&self, input_dim: usize) -> usize;
    fn map(&self, x: &[f64]) -> Vec<f64>;
    /// Points of a 1-D input where φ is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// `E[φφᵀ]` in closed form, when known.
    fn exact_sigma(&self, _design: &DesignSpec) -> Option<DenseMatrix> {
        None
    }
    /// `E[φ·μ]` in closed form, when known.
    fn exact_eta(&self, _signal: &SignalSpec, _design: &DesignSpec) -> Option<Vec<f64>> {
        None
    }
}

impl FeatureMap for LinearFeatures {
    fn dim(&self, input_dim: usize) -> usize {
        match self {
            LinearFeatures::Raw => input_dim,
            LinearFeatures::Intercept => input_dim + 1,
            LinearFeatures::Bended => 2,
            LinearFeatures::Constant => 1,
        }
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        LinearFeatures::map(self, x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            LinearFeatures::Bended => vec![0.0],
            _ => Vec::new(),
        }
    }

    fn exact_sigma(&self, design: &DesignSpec) -> Option<DenseMatrix> {
        let cov = design.covariance();
        let d = cov.rows();
        match self {
            LinearFeatures::Raw => Some(cov.clone()),
            LinearFeatures::Intercept => Some(
                DenseMatrix::from_fn(d + 1, d + 1, |i, j| match (i < d, j < d) {
                    (true, true) => cov.get(i, j),
                    (false, false) => 1.0,
                    _ => 0.0,
                })
                .expect("finite"),
            ),
            LinearFeatures::Constant => Some(DenseMatrix::identity(1)),
            LinearFeatures::Bended => None,
        }
    }

    fn exact_eta(&self, signal: &SignalSpec, design: &DesignSpec) -> Option<Vec<f64>> {
        let SignalKind::LinearMap { beta } = &signal.kind else { return None };
        let mut eta = design.covariance().matvec(beta).ok()?;
        match self {
            LinearFeatures::Raw => Some(eta),
            LinearFeatures::Intercept => {
                eta.push(0.0);
                Some(eta)
            }
            _ => None,
        }
    }
}

/// Gradient features of a two-layer ReLU network at a fixed initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct NtkFeatureMap {
    pub w0: DenseMatrix,
    pub a: Vec<f64>,
}

impl FeatureMap for NtkFeatureMap {
    fn dim(&self, input_dim: usize) -> usize {
        input_dim * self.a.len()
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        ntk_features(&self.w0, &self.a, x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// Any closure as a feature map.
pub struct FnFeatureMap<F> {
    pub out_dim: usize,
    pub f: F,
}

impl<F> fmt::Debug for FnFeatureMap<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnFeatureMap(q={})", self.out_dim)
    }
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> FeatureMap for FnFeatureMap<F> {
    fn dim(&self, _input_dim: usize) -> usize {
        self.out_dim
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

/// Weighted points `(φ(x), μ(x), ε)`. Each point stands for the pair
/// `y = μ ± ε`, so integrands quadratic in the noise are averaged exactly.
#[derive(Debug, Clone)]
pub(crate) struct EvalSample {
    pub q: usize,
    pub feats: Vec<f64>,
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub weight: Vec<f64>,
    pub group: Vec<usize>,
    pub groups: usize,
}

impl EvalSample {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn f(&self, i: usize) -> &[f64] {
        &self.feats[i * self.q..(i + 1) * self.q]
    }

    pub fn build(
        phi: &dyn FeatureMap,
        signal: &SignalSpec,
        design: &DesignSpec,
        method: EvalMethod,
        budget: usize,
        rng: &SeedStream,
    ) -> Result<Self> {
        let d = design.dimension();
        if signal.input_dim() != d {
            return Err(Error::DimensionMismatch { expected: signal.input_dim(), found: d });
        }
        let q = phi.dim(d);
        let sd = signal.noise_var.sqrt();
        let mut s = EvalSample { q, feats: Vec::new(), mu: Vec::new(), eps: Vec::new(), weight: Vec::new(), group: Vec::new(), groups: 1 };
        let push = |s: &mut EvalSample, x: &[f64], e: f64, w: f64, g: usize| -> Result<()> {
            let f = phi.map(x);
            if f.len() != q {
                return Err(Error::DimensionMismatch { expected: q, found: f.len() });
            }
            let m = signal.mu(x);
            if !m.is_finite() || f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteIntegrand { node: x[0] });
            }
            s.feats.extend(f);
            s.mu.push(m);
            s.eps.push(e);
            s.weight.push(w);
            s.group.push(g);
            Ok(())
        };
        match method {
            EvalMethod::Quadrature => {
                if d != 1 {
                    return Err(Error::UnsupportedCombination(format!(
                        "quadrature needs a 1-D design, got dimension {d}; use inner-MC"
                    )));
                }
                let scale = design.covariance().get(0, 0).sqrt();
                let mut bps: Vec<f64> = signal.breakpoints();
                bps.extend(phi.breakpoints());
                let rule = if bps.is_empty() {
                    signal.quadrature_rule()
                } else {
                    let z: Vec<f64> = bps.iter().map(|b| b / scale).collect();
                    QuadratureRule::for_kinks(&z)
                };
                for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                    push(&mut s, &[scale * z], sd, *w, 0)?;
                }
            }
            EvalMethod::InnerMc => {
                if budget < MIN_BUDGET {
                    return Err(Error::InvalidArgument(format!("inner-MC budget {budget} is below {MIN_BUDGET}")));
                }
                let mut r = rng.rng();
                let xs: Vec<Vec<f64>> = (0..budget).map(|_| design.sample_point(&mut r)).collect();
                let w = 1.0 / budget as f64;
                for (i, x) in xs.iter().enumerate() {
                    let e = sd * standard_normal(&mut r);
                    push(&mut s, x, e, w, i * JACKKNIFE_GROUPS / budget)?;
                }
                s.groups = JACKKNIFE_GROUPS;
            }
        }
        Ok(s)
    }

    /// Per-group sums of `w·v`, in point order.
    fn group_sums(&self, vals: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.groups];
        for i in 0..self.len() {
            out[self.group[i]] += self.weight[i] * vals(i);
        }
        out
    }

    /// Weighted mean of per-point values, leaving out group `drop`.
    pub fn average(&self, vals: &[f64], drop: Option<usize>) -> f64 {
        let num = self.group_sums(|i| vals[i]);
        let den = self.group_sums(|_| 1.0);
        leave_out(&num, drop) / leave_out(&den, drop)
    }

    fn moment_sums(&self) -> MomentSums {
        let q = self.q;
        let mut sig = vec![vec![0.0; q * q]; self.groups];
        let mut eta = vec![vec![0.0; q]; self.groups];
        let mut w = vec![0.0; self.groups];
        for i in 0..self.len() {
            let (g, wi, f) = (self.group[i], self.weight[i], self.f(i));
            w[g] += wi;
            for a in 0..q {
                let wf = wi * f[a];
                eta[g][a] += wf * self.mu[i];
                for b in a..q {
                    sig[g][a * q + b] += wf * f[b];
                }
            }
        }
        MomentSums { q, sig, eta, w }
    }

    /// Plug-in `(Σ, η)` leaving out group `drop`.
    pub fn plug_in(&self, drop: Option<usize>) -> (DenseMatrix, Vec<f64>) {
        self.moment_sums().get(drop)
    }
}

fn leave_out(per_group: &[f64], drop: Option<usize>) -> f64 {
    let total: f64 = per_group.iter().sum();
    match drop {
        Some(g) => total - per_group[g],
        None => total,
    }
}

struct MomentSums {
    q: usize,
    sig: Vec<Vec<f64>>,
    eta: Vec<Vec<f64>>,
    w: Vec<f64>,
}

impl MomentSums {
    fn get(&self, drop: Option<usize>) -> (DenseMatrix, Vec<f64>) {
        let q = self.q;
        let w = leave_out(&self.w, drop);
        let col = |v: &Vec<Vec<f64>>, k: usize| leave_out(&v.iter().map(|r| r[k]).collect::<Vec<_>>(), drop) / w;
        let mut sig = vec![0.0; q * q];
        for a in 0..q {
            for b in a..q {
                let v = col(&self.sig, a * q + b);
                sig[a * q + b] = v;
                sig[b * q + a] = v;
            }
        }
        let eta = (0..q).map(|a| col(&self.eta, a)).collect();
        (DenseMatrix::from_parts(q, q, sig), eta)
    }
}

/// `Σ`, `η` and everything needed to rebuild the evaluation sample.
#[derive(Clone)]
pub struct PopulationMoments {
    pub d: usize,
    pub sigma: DenseMatrix,
    pub eta: Vec<f64>,
    pub noise_var: f64,
    pub signal: SignalSpec,
    pub design: DesignSpec,
    /// Bound on the numerical error of `Σ` and `η`.
    pub eval_error: f64,
    pub method: EvalMethod,
    pub budget: usize,
    pub rng: SeedStream,
    pub(crate) features: Arc<dyn FeatureMap>,
    exact_sigma: bool,
    exact_eta: bool,
}

impl fmt::Debug for PopulationMoments {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PopulationMoments")
            .field("d", &self.d)
            .field("sigma", &self.sigma)
            .field("eta", &self.eta)
            .field("noise_var", &self.noise_var)
            .field("features", &self.features)
            .field("eval_error", &self.eval_error)
            .field("method", &self.method)
            .finish()
    }
}

impl PopulationMoments {
    /// Moments of the features `φ` with the sample drawn from `rng`.
    pub fn from_features(
        phi: Arc<dyn FeatureMap>,
        signal: &SignalSpec,
        design: &DesignSpec,
        method: EvalMethod,
        budget: usize,
        rng: &SeedStream,
    ) -> Result<Self> {
        let sample = EvalSample::build(phi.as_ref(), signal, design, method, budget, rng)?;
        let ex_sigma = phi.exact_sigma(design);
        let ex_eta = phi.exact_eta(signal, design);
        let (exact_sigma, exact_eta) = (ex_sigma.is_some(), ex_eta.is_some());
        let (plug_sigma, plug_eta) = sample.plug_in(None);
        let eval_error = match method {
            EvalMethod::Quadrature => QUADRATURE_ERROR,
            EvalMethod::InnerMc => 4.0 * moment_stderr(&sample, exact_sigma, exact_eta),
        };
        Ok(Self {
            d: sample.q,
            sigma: ex_sigma.unwrap_or(plug_sigma),
            eta: ex_eta.unwrap_or(plug_eta),
            noise_var: signal.noise_var,
            signal: signal.clone(),
            design: design.clone(),
            eval_error,
            method,
            budget,
            rng: *rng,
            features: phi,
            exact_sigma,
            exact_eta,
        })
    }

    pub(crate) fn sample(&self, budget: usize, rng: &SeedStream) -> Result<EvalSample> {
        EvalSample::build(self.features.as_ref(), &self.signal, &self.design, self.method, budget, rng)
    }

    /// `E[h]` over `sample`, where `stat` maps moments to per-point values `h`.
    /// The jackknife standard error also carries the variability of plug-in moments.
    pub(crate) fn jackknife<S>(&self, sample: &EvalSample, stat: S) -> Result<(f64, f64)>
    where
        S: Fn(&DenseMatrix, &[f64]) -> Result<Vec<f64>> + Sync,
    {
        let sums = (!(self.exact_sigma && self.exact_eta)).then(|| sample.moment_sums());
        let moments = |drop: Option<usize>| match &sums {
            None => (self.sigma.clone(), self.eta.clone()),
            Some(ms) => {
                let (s, e) = ms.get(drop);
                (
                    if self.exact_sigma { self.sigma.clone() } else { s },
                    if self.exact_eta { self.eta.clone() } else { e },
                )
            }
        };
        let (s, e) = moments(None);
        let full = sample.average(&stat(&s, &e)?, None);
        if sample.groups < 2 {
            return Ok((full, 0.0));
        }
        let leave: Vec<f64> = (0..sample.groups)
            .into_par_iter()
            .map(|g| {
                let (s, e) = moments(Some(g));
                Ok(sample.average(&stat(&s, &e)?, Some(g)))
            })
            .collect::<Result<_>>()?;
        Ok((full, jackknife_se(&leave)))
    }
}

/// `sqrt((G−1)/G · Σ (v_g − v̄)²)`.
pub(crate) fn jackknife_se(leave: &[f64]) -> f64 {
    let g = leave.len() as f64;
    let m = pairwise_sum(leave) / g;
    let ss: Vec<f64> = leave.iter().map(|v| (v - m).powi(2)).collect();
    ((g - 1.0) / g * pairwise_sum(&ss)).sqrt()
}

fn moment_stderr(sample: &EvalSample, exact_sigma: bool, exact_eta: bool) -> f64 {
    if exact_sigma && exact_eta {
        return 0.0;
    }
    let sums = sample.moment_sums();
    let groups: Vec<(DenseMatrix, Vec<f64>)> = (0..sample.groups).map(|g| sums.get(Some(g))).collect();
    let q = sample.q;
    let mut worst = 0.0f64;
    if !exact_eta {
        for a in 0..q {
            let v: Vec<f64> = groups.iter().map(|(_, e)| e[a]).collect();
            worst = worst.max(jackknife_se(&v));
        }
    }
    if !exact_sigma {
        for a in 0..q * q {
            let v: Vec<f64> = groups.iter().map(|(s, _)| s.as_slice()[a]).collect();
            worst = worst.max(jackknife_se(&v));
        }
    }
    worst
}

/// Moments of the raw design features, with an intercept column when the
/// design asks for one.
pub fn population_moments(
    signal: &SignalSpec,
    design: &DesignSpec,
    method: EvalMethod,
    budget: usize,
    rng: &SeedStream,
) -> Result<PopulationMoments> {
    let phi = if design.intercept { LinearFeatures::Intercept } else { LinearFeatures::Raw };
    PopulationMoments::from_features(Arc::new(phi), signal, design, method, budget, rng)
}
