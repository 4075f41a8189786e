use crate::error::{Error, Result};
use crate::numcore::{dot, Cholesky, DenseMatrix};
use crate::signals::Dataset;

use super::{FitWarning, FittedModel, ModelSpec, Payload};

const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `xᵀx′`.
    Linear,
    /// Tangent kernel of `g(x) = m^{-1/2} Σⱼ aⱼ relu(wⱼᵀx)` with respect to the
    /// first-layer weights, frozen at `(w0, a)`. `w0` is `d × m`.
    Ntk { w0: DenseMatrix, a: Vec<f64> },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Ntk { w0, a } = self {
            if w0.cols() != a.len() {
                return Err(Error::DimensionMismatch { expected: w0.cols(), found: a.len() });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite output weights".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], xp: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => dot(x, xp),
            KernelSpec::Ntk { w0, a } => ntk_kernel_eval(w0, a, x, xp),
        }
    }

    /// Gram matrix `K(X, X)`.
    pub fn gram(&self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            KernelSpec::Linear => x.transpose().gram(),
            KernelSpec::Ntk { w0, a } => ntk_gram(w0, a, x),
        }
    }
}

/// `Θ(x, x′) = (1/m) Σⱼ aⱼ² 1[wⱼᵀx > 0] 1[wⱼᵀx′ > 0] xᵀx′`.
pub fn ntk_kernel_eval(w0: &DenseMatrix, a: &[f64], x: &[f64], xp: &[f64]) -> f64 {
    let m = a.len();
    let mut s = 0.0;
    for j in 0..m {
        let (mut u, mut v) = (0.0, 0.0);
        for i in 0..w0.rows() {
            u += w0.get(i, j) * x[i];
            v += w0.get(i, j) * xp[i];
        }
        if u > 0.0 && v > 0.0 {
            s += a[j] * a[j];
        }
    }
    s / m as f64 * dot(x, xp)
}

/// Gradient of `g` with respect to `W`, flattened neuron by neuron
/// (length `d·m`). Its inner products reproduce [`ntk_kernel_eval`].
pub fn ntk_features(w0: &DenseMatrix, a: &[f64], x: &[f64]) -> Vec<f64> {
    let (d, m) = (w0.rows(), a.len());
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = vec![0.0; d * m];
    for j in 0..m {
        let pre: f64 = (0..d).map(|i| w0.get(i, j) * x[i]).sum();
        if pre > 0.0 {
            for i in 0..d {
                out[j * d + i] = scale * a[j] * x[i];
            }
        }
    }
    out
}

pub fn ntk_gram(w0: &DenseMatrix, a: &[f64], x: &DenseMatrix) -> DenseMatrix {
    let n = x.rows();
    let m = a.len();
    let pre = x.matmul(w0).expect("w0 has d rows");
    // masked squared output weights per row
    let act: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|j| if pre.get(i, j) > 0.0 { a[j] * a[j] } else { 0.0 }).collect())
        .collect();
    let ind: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|j| if pre.get(i, j) > 0.0 { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let v = dot(&act[i], &ind[k]) / m as f64 * dot(x.row(i), x.row(k));
            data[i * n + k] = v;
            data[k * n + i] = v;
        }
    }
    DenseMatrix::new(n, n, data).expect("finite gram")
}

/// Kernel ridge regression `α = (K + λI)⁻¹y`.
///
/// A failed factorization is retried with diagonal jitter growing from
/// `1e-12·tr(K)/n` by factors of ten up to `1e-6·tr(K)/n`. A jittered solve
/// is kept only when it still solves the original system to `1e-6` relative
/// residual, otherwise the Gram matrix is reported singular.
pub fn fit_krr(data: &Dataset, kernel: &KernelSpec, lambda: f64) -> Result<FittedModel> {
    kernel.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if let KernelSpec::Ntk { w0, .. } = kernel {
        if w0.rows() != data.d() {
            return Err(Error::DimensionMismatch { expected: w0.rows(), found: data.d() });
        }
    }
    let k = kernel.gram(&data.x).add_diagonal(lambda);
    let base = k.trace() / data.n() as f64;
    let mut warnings = Vec::new();
    let mut chol = Cholesky::new(&k);
    let mut level = JITTER_START;
    while chol.is_err() && level <= JITTER_MAX * (1.0 + 1e-9) && base > 0.0 {
        let jitter = level * base;
        chol = Cholesky::new(&k.add_diagonal(jitter));
        if chol.is_ok() {
            warnings.push(FitWarning::GramJitter(jitter));
        }
        level *= 10.0;
    }
    let chol = chol.map_err(|_| Error::SingularGram)?;
    let alpha = chol.solve(&data.y)?;
    if !warnings.is_empty() {
        // jitter can always force a factorization; accept it only if the
        // unjittered system is still solved
        let r: Vec<f64> = k.matvec(&alpha)?.iter().zip(&data.y).map(|(p, y)| p - y).collect();
        if crate::numcore::norm2(&r) > 1e-6 * crate::numcore::norm2(&data.y).max(f64::MIN_POSITIVE) {
            return Err(Error::SingularGram);
        }
    }
    Ok(FittedModel {
        spec: ModelSpec::Krr { kernel: kernel.clone(), lambda },
        payload: Payload::Kernel { kernel: kernel.clone(), alpha, train_x: data.x.clone() },
        loss_trace: Vec::new(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit_ridge, predict};
    use crate::numcore::{derive_stream, rng::normal_vec, sym_eigen};
    use crate::signals::{sample_dataset, DesignSpec, SignalSpec};
    use proptest::prelude::*;

    fn unit_ntk() -> (DenseMatrix, Vec<f64>) {
        (DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(), vec![1.0])
    }

    #[test]
    fn hand_gradient_values() {
        let (w, a) = unit_ntk();
        assert_eq!(ntk_kernel_eval(&w, &a, &[1.0, 1.0], &[2.0, 0.0]), 2.0);
        assert_eq!(ntk_kernel_eval(&w, &a, &[-1.0, 0.0], &[2.0, 5.0]), 0.0);
    }

    #[test]
    fn features_reproduce_kernel() {
        let mut rng = derive_stream(8, 0).rng();
        let (d, m) = (3, 7);
        let w = DenseMatrix::new(d, m, normal_vec(&mut rng, d * m)).unwrap();
        let a = normal_vec(&mut rng, m);
        for _ in 0..20 {
            let x = normal_vec(&mut rng, d);
            let y = normal_vec(&mut rng, d);
            let k = ntk_kernel_eval(&w, &a, &x, &y);
            let f = dot(&ntk_features(&w, &a, &x), &ntk_features(&w, &a, &y));
            assert!((k - f).abs() < 1e-12 * k.abs().max(1.0));
            assert!(ntk_kernel_eval(&w, &a, &x, &x) >= 0.0);
        }
    }

    #[test]
    fn scalar_krr() {
        let d = Dataset::new(DenseMatrix::from_rows(&[vec![1.0]]).unwrap(), vec![2.0], None).unwrap();
        let m = fit_krr(&d, &KernelSpec::Linear, 1.0).unwrap();
        assert!((predict(&m, &d.x).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolates_with_zero_penalty() {
        let s = SignalSpec::piecewise_k(0.1, 0.1).unwrap();
        let data = sample_dataset(&s, &DesignSpec::standard(1).unwrap(), 3, &derive_stream(2, 0)).unwrap();
        let x2 = DenseMatrix::from_fn(3, 3, |i, j| data.x.get(i, 0).powi(j as i32)).unwrap();
        let lifted = Dataset::new(x2, data.y.clone(), None).unwrap();
        let m = fit_krr(&lifted, &KernelSpec::Linear, 0.0).unwrap();
        let p = predict(&m, &lifted.x).unwrap();
        for (a, b) in p.iter().zip(&lifted.y) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_kernel_is_ridge_with_unit_n_penalty() {
        let s = SignalSpec::linear(vec![1.0, -1.0, 0.5], 0.3).unwrap();
        let data = sample_dataset(&s, &DesignSpec::standard(3).unwrap(), 25, &derive_stream(6, 0)).unwrap();
        let lam = 2.5;
        let k = fit_krr(&data, &KernelSpec::Linear, lam).unwrap();
        let r = fit_ridge(&data, lam / data.n() as f64).unwrap();
        let probe = DenseMatrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![-1.0, 2.0, 0.0]]).unwrap();
        for (a, b) in predict(&k, &probe).unwrap().iter().zip(predict(&r, &probe).unwrap()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rank_deficient_gram_is_singular() {
        // identical rows, zero penalty: the Gram has rank 1
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let d = Dataset::new(x, vec![1.0, 2.0, 3.0], None).unwrap();
        assert_eq!(fit_krr(&d, &KernelSpec::Linear, 0.0).unwrap_err(), Error::SingularGram);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ntk_gram_symmetric_psd(seed in any::<u64>(), n in 2usize..40, d in 1usize..4, m in 1usize..20) {
            let mut rng = derive_stream(seed, 1).rng();
            let w = DenseMatrix::new(d, m, normal_vec(&mut rng, d * m)).unwrap();
            let a = normal_vec(&mut rng, m);
            let x = DenseMatrix::new(n, d, normal_vec(&mut rng, n * d)).unwrap();
            let g = ntk_gram(&w, &a, &x);
            prop_assert!(g.is_symmetric(1e-12));
            let low = *sym_eigen(&g).unwrap().values.last().unwrap();
            prop_assert!(low >= -1e-8 * g.trace());
        }
    }
}
