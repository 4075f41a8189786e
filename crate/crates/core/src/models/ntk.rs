use crate::error::{Error, Result};
use crate::numcore::rng::normal_vec;
use crate::numcore::{dot, DenseMatrix, SeedStream};
use crate::signals::Dataset;

use super::optim::{OptState, Optimizer};
use super::{FittedModel, ModelSpec, Payload};

/// Two-layer ReLU network `ŷ = relu(XW)·a` trained on
/// `MSE + λ·tr(Z₁Z₁ᵀ)` with `Z₁ = relu(XW)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NtkLayerwiseSpec {
    pub m: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
}

impl Default for NtkLayerwiseSpec {
    fn default() -> Self {
        Self { m: 50, lambda: 0.0, epochs: 300, learning_rate: 0.01, optimizer: Optimizer::Adam }
    }
}

impl NtkLayerwiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.epochs == 0 {
            return Err(Error::InvalidArgument("width and epochs must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !(self.learning_rate >= 0.0) {
            return Err(Error::InvalidArgument("lambda and learning rate must be >= 0".into()));
        }
        Ok(())
    }
}

/// Hidden activations `Z₁ = relu(XW)` (`n × m`) and outputs `Z₁a`.
pub(crate) fn forward(w: &DenseMatrix, a: &[f64], x: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let z = x.matmul(w).expect("w has d rows");
    let z1 = DenseMatrix::from_parts(z.rows(), z.cols(), z.as_slice().iter().map(|v| v.max(0.0)).collect());
    let out = (0..z1.rows()).map(|i| dot(z1.row(i), a)).collect();
    (z1, out)
}

pub(crate) fn forward_one(w: &DenseMatrix, a: &[f64], x: &[f64]) -> f64 {
    let m = DenseMatrix::from_parts(1, x.len(), x.to_vec());
    forward(w, a, &m).1[0]
}

/// Hidden activations of a fitted layerwise model.
pub fn ntk_hidden(model: &FittedModel, x: &DenseMatrix) -> Option<DenseMatrix> {
    match &model.payload {
        Payload::Ntk { w, a } => Some(forward(w, a, x).0),
        _ => None,
    }
}

/// Penalized objective, its MSE part, and gradients for `[W (row-major), a]`.
fn objective(w: &DenseMatrix, a: &[f64], data: &Dataset, lambda: f64) -> (f64, f64, Vec<f64>) {
    let (n, d, m) = (data.n(), w.rows(), a.len());
    let pre = data.x.matmul(w).expect("w has d rows");
    let (z1, out) = forward(w, a, &data.x);
    let resid: Vec<f64> = out.iter().zip(&data.y).map(|(p, t)| p - t).collect();
    let mse = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
    let pen = lambda * z1.as_slice().iter().map(|v| v * v).sum::<f64>();
    let mut gw = vec![0.0; d * m];
    let mut ga = vec![0.0; m];
    for i in 0..n {
        let c = 2.0 * resid[i] / n as f64;
        let zr = z1.row(i);
        for j in 0..m {
            ga[j] += c * zr[j];
            if pre.get(i, j) > 0.0 {
                let dz = c * a[j] + 2.0 * lambda * zr[j];
                for k in 0..d {
                    gw[k * m + j] += dz * data.x.get(i, k);
                }
            }
        }
    }
    gw.extend(ga);
    (mse + pen, mse, gw)
}

pub fn fit_ntk_layerwise(data: &Dataset, spec: &NtkLayerwiseSpec, rng: &SeedStream) -> Result<FittedModel> {
    spec.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let (d, m) = (data.d(), spec.m);
    let mut r = rng.rng();
    let mut params = normal_vec(&mut r, d * m);
    params.extend(normal_vec(&mut r, m));
    let mut state = OptState::new(spec.optimizer, params.len());
    let mut trace = Vec::with_capacity(spec.epochs);
    let split = |p: &[f64]| (DenseMatrix::from_parts(d, m, p[..d * m].to_vec()), p[d * m..].to_vec());
    for epoch in 0..spec.epochs {
        let (w, a) = split(&params);
        let (obj, _, grad) = objective(&w, &a, data, spec.lambda);
        if !obj.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        trace.push(obj);
        state.step(&mut params, &grad, spec.learning_rate);
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::DivergedLoss { epoch: spec.epochs });
    }
    let (w, a) = split(&params);
    Ok(FittedModel {
        spec: ModelSpec::NtkLayerwise(spec.clone()),
        payload: Payload::Ntk { w, a },
        loss_trace: trace,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::predict;
    use crate::numcore::{derive_stream, sym_eigen};
    use crate::signals::{sample_dataset, DesignSpec, SignalSpec};

    fn relu_data(n: usize, seed: u64) -> Dataset {
        let s = SignalSpec::piecewise_k(0.0, 0.0).unwrap();
        sample_dataset(&s, &DesignSpec::standard(1).unwrap(), n, &derive_stream(seed, 0)).unwrap()
    }

    #[test]
    fn zero_rate_predicts_initialization() {
        let d = relu_data(15, 1);
        let spec = NtkLayerwiseSpec { m: 8, epochs: 5, learning_rate: 0.0, ..Default::default() };
        let rng = derive_stream(1, 9);
        let m = fit_ntk_layerwise(&d, &spec, &rng).unwrap();
        let mut r = rng.rng();
        let w = DenseMatrix::new(1, 8, normal_vec(&mut r, 8)).unwrap();
        let a = normal_vec(&mut r, 8);
        assert_eq!(predict(&m, &d.x).unwrap(), forward(&w, &a, &d.x).1);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = relu_data(6, 2);
        let mut r = derive_stream(2, 3).rng();
        let w = DenseMatrix::new(1, 4, normal_vec(&mut r, 4)).unwrap();
        let a = normal_vec(&mut r, 4);
        let lambda = 0.3;
        let (_, _, g) = objective(&w, &a, &d, lambda);
        let mut p: Vec<f64> = w.as_slice().to_vec();
        p.extend(&a);
        let h = 1e-6;
        for k in 0..p.len() {
            let eval = |delta: f64| {
                let mut q = p.clone();
                q[k] += delta;
                objective(&DenseMatrix::from_parts(1, 4, q[..4].to_vec()), &q[4..], &d, lambda).0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * fd.abs().max(1e-3), "k={k} fd={fd} g={}", g[k]);
        }
    }

    #[test]
    fn fits_realizable_relu_and_keeps_psd_hidden_gram() {
        let d = relu_data(100, 3);
        let spec = NtkLayerwiseSpec { m: 50, epochs: 1000, learning_rate: 0.01, ..Default::default() };
        let m = fit_ntk_layerwise(&d, &spec, &derive_stream(3, 1)).unwrap();
        let p = predict(&m, &d.x).unwrap();
        let mse = p.iter().zip(&d.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / d.n() as f64;
        assert!(mse < 1e-2, "mse {mse}");
        let z1 = ntk_hidden(&m, &d.x).unwrap();
        let z2 = z1.transpose().gram();
        let low = *sym_eigen(&z2).unwrap().values.last().unwrap();
        assert!(low >= -1e-8 * z2.trace());
    }
}
