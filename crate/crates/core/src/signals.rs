//! Ground-truth mean functions, Gaussian designs and synthetic datasets.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::{dot, Cholesky, DenseMatrix, QuadratureRule, SeedStream, DEFAULT_ORDER};
use crate::numcore::rng::standard_normal;

#[derive(Debug, Clone, PartialEq)]
pub enum SignalKind {
    /// `f_k`: a scaled ReLU for `k < 0.5`, a scaled negative identity above.
    PiecewiseK { k: f64 },
    /// `A₀ + A₁x + … + A_m x^m`.
    Polynomial { coeffs: Vec<f64> },
    /// `exp(−a (x − b)²)`.
    ExpBump { a: f64, b: f64 },
    /// `βᵀx` in any dimension.
    LinearMap { beta: Vec<f64> },
}

/// Mean function plus homoskedastic Gaussian noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub noise_var: f64,
}

impl SignalSpec {
    pub fn new(kind: SignalKind, noise_var: f64) -> Result<Self> {
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidArgument(format!("noise variance {noise_var} must be finite and >= 0")));
        }
        match &kind {
            SignalKind::PiecewiseK { k } if !(0.0..=1.0).contains(k) => {
                return Err(Error::InvalidArgument(format!("k = {k} outside [0, 1]")));
            }
            SignalKind::Polynomial { coeffs } if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) => {
                return Err(Error::InvalidArgument("polynomial needs finite coefficients".into()));
            }
            SignalKind::ExpBump { a, b } if !(*a >= 0.0) || !a.is_finite() || !b.is_finite() => {
                return Err(Error::InvalidArgument(format!("bump needs finite a >= 0, got a={a}, b={b}")));
            }
            SignalKind::LinearMap { beta } if beta.is_empty() || beta.iter().any(|c| !c.is_finite()) => {
                return Err(Error::InvalidArgument("linear map needs a finite non-empty beta".into()));
            }
            _ => {}
        }
        Ok(Self { kind, noise_var })
    }

    pub fn piecewise_k(k: f64, noise_var: f64) -> Result<Self> {
        Self::new(SignalKind::PiecewiseK { k }, noise_var)
    }

    pub fn polynomial(coeffs: Vec<f64>, noise_var: f64) -> Result<Self> {
        Self::new(SignalKind::Polynomial { coeffs }, noise_var)
    }

    pub fn exp_bump(a: f64, b: f64, noise_var: f64) -> Result<Self> {
        Self::new(SignalKind::ExpBump { a, b }, noise_var)
    }

    pub fn linear(beta: Vec<f64>, noise_var: f64) -> Result<Self> {
        Self::new(SignalKind::LinearMap { beta }, noise_var)
    }

    /// Input dimension the signal accepts.
    pub fn input_dim(&self) -> usize {
        match &self.kind {
            SignalKind::LinearMap { beta } => beta.len(),
            _ => 1,
        }
    }

    /// Short name used in reports.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SignalKind::PiecewiseK { .. } => "fk",
            SignalKind::Polynomial { .. } => "poly",
            SignalKind::ExpBump { .. } => "exp",
            SignalKind::LinearMap { .. } => "linear",
        }
    }

    /// Parameter label, e.g. `0.25` for `f_k` or `1;0;2` for coefficients.
    pub fn param_label(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(";");
        match &self.kind {
            SignalKind::PiecewiseK { k } => format!("{k}"),
            SignalKind::Polynomial { coeffs } => join(coeffs),
            SignalKind::ExpBump { a, b } => format!("{a};{b}"),
            SignalKind::LinearMap { beta } => join(beta),
        }
    }

    /// True when μ is exactly linear through the origin.
    pub fn is_linear(&self) -> bool {
        match &self.kind {
            SignalKind::LinearMap { .. } => true,
            SignalKind::PiecewiseK { k } => *k >= 0.5,
            SignalKind::Polynomial { coeffs } => coeffs.iter().enumerate().all(|(i, c)| i == 1 || *c == 0.0),
            SignalKind::ExpBump { .. } => false,
        }
    }

    /// Noise-free mean at a point, unchecked dimension.
    pub(crate) fn mu(&self, x: &[f64]) -> f64 {
        match &self.kind {
            SignalKind::PiecewiseK { k } => fk(*k, x[0]),
            SignalKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x[0] + c),
            SignalKind::ExpBump { a, b } => (-a * (x[0] - b).powi(2)).exp(),
            SignalKind::LinearMap { beta } => dot(beta, x),
        }
    }

    /// Points where μ is not smooth, plus refinement edges for narrow bumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            SignalKind::PiecewiseK { k } if *k != 0.5 => vec![0.0],
            SignalKind::ExpBump { a, b } if *a > 0.0 => QuadratureRule::bump_edges(*b, 0.5 / a.sqrt()),
            _ => Vec::new(),
        }
    }

    /// Quadrature rule that integrates this signal's 1-D moments accurately.
    pub fn quadrature_rule(&self) -> QuadratureRule {
        let bps = self.breakpoints();
        match &self.kind {
            _ if !bps.is_empty() => QuadratureRule::for_kinks(&bps),
            SignalKind::Polynomial { coeffs } => {
                QuadratureRule::gauss_hermite(DEFAULT_ORDER.max(coeffs.len() + 2)).expect("order > 0")
            }
            _ => QuadratureRule::gauss_hermite(DEFAULT_ORDER).expect("order > 0"),
        }
    }
}

fn fk(k: f64, x: f64) -> f64 {
    if k < 0.5 {
        ((0.5 - k) / 0.5) * x.max(0.0)
    } else {
        ((k - 0.5) / 0.5) * (-x)
    }
}

pub fn eval_signal(spec: &SignalSpec, x: &[f64]) -> Result<f64> {
    let d = spec.input_dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    Ok(spec.mu(x))
}

/// Zero-mean Gaussian input law with an optional intercept feature.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    dimension: usize,
    covariance: DenseMatrix,
    factor: DenseMatrix,
    identity: bool,
    pub intercept: bool,
}

impl DesignSpec {
    /// `N(0, I_d)`.
    pub fn standard(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("design dimension must be >= 1".into()));
        }
        let eye = DenseMatrix::identity(dimension);
        Ok(Self { dimension, covariance: eye.clone(), factor: eye, identity: true, intercept: false })
    }

    /// `N(0, Σ)` for symmetric positive-definite `Σ`.
    pub fn with_covariance(covariance: DenseMatrix) -> Result<Self> {
        let chol = Cholesky::new(&covariance)?;
        Ok(Self {
            dimension: covariance.rows(),
            factor: chol.lower(),
            identity: covariance == DenseMatrix::identity(covariance.rows()),
            covariance,
            intercept: false,
        })
    }

    pub fn intercept(mut self, on: bool) -> Self {
        self.intercept = on;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn covariance(&self) -> &DenseMatrix {
        &self.covariance
    }

    pub fn is_standard(&self) -> bool {
        self.identity
    }

    /// Number of model features, counting the intercept column.
    pub fn feature_dim(&self) -> usize {
        self.dimension + usize::from(self.intercept)
    }

    /// Raw input features, optionally followed by the constant 1.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let mut f = x.to_vec();
        if self.intercept {
            f.push(1.0);
        }
        f
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dimension).map(|_| standard_normal(rng)).collect();
        if self.identity {
            return z;
        }
        self.factor.matvec(&z).expect("factor is d x d")
    }
}

/// Training or test sample: design rows `X`, responses `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub noise_var: Option<f64>,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: Vec<f64>, noise_var: Option<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.rows(), found: y.len() });
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite response {bad}")));
        }
        Ok(Self { x, y, noise_var })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(idx)?;
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Ok(Self { x, y, noise_var: self.noise_var })
    }
}

pub fn sample_dataset(spec: &SignalSpec, design: &DesignSpec, n: usize, rng: &SeedStream) -> Result<Dataset> {
    sample_dataset_with(spec, design, n, &mut rng.rng())
}

/// Same as [`sample_dataset`] but continues an existing generator.
pub fn sample_dataset_with<R: Rng + ?Sized>(
    spec: &SignalSpec,
    design: &DesignSpec,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = design.dimension();
    if spec.input_dim() != d {
        return Err(Error::DimensionMismatch { expected: spec.input_dim(), found: d });
    }
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        data.extend(design.sample_point(rng));
    }
    let x = DenseMatrix::new(n, d, data)?;
    let sd = spec.noise_var.sqrt();
    let y = (0..n)
        .map(|i| {
            let mu = spec.mu(x.row(i));
            if sd > 0.0 { mu + sd * standard_normal(rng) } else { mu }
        })
        .collect();
    Dataset::new(x, y, Some(spec.noise_var))
}

/// Gaussian moments `(E[Zμ(Z)], E[Z²μ(Z)²], E[Z³μ(Z)])` of a 1-D signal.
pub fn moments_1d(spec: &SignalSpec) -> Result<(f64, f64, f64)> {
    if spec.input_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: spec.input_dim() });
    }
    let rule = spec.quadrature_rule();
    let m1 = rule.expect(|z| z * spec.mu(&[z]))?;
    let m2 = rule.expect(|z| (z * spec.mu(&[z])).powi(2))?;
    let m3 = rule.expect(|z| z.powi(3) * spec.mu(&[z]))?;
    Ok((m1, m2, m3))
}
