use crate::error::{Error, Result};
use crate::numcore::rng::standard_normal;
use crate::numcore::{DenseMatrix, SeedStream};
use crate::signals::Dataset;

use super::optim::{OptState, Optimizer};
use super::{FittedModel, ModelSpec, Payload};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    /// Hidden layer widths; ReLU after each.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
}

impl Default for MlpSpec {
    fn default() -> Self {
        Self { hidden: vec![50, 50], epochs: 300, learning_rate: 0.01, optimizer: Optimizer::Adam }
    }
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument("hidden widths must be non-empty and >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument("learning rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Fully connected ReLU network with a scalar linear output.
///
/// Parameters live in one flat vector: for each layer the `in × out`
/// weight matrix (row-major) followed by the `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

pub struct Forward {
    /// Pre-activations per layer, `n × width` row-major.
    pre: Vec<Vec<f64>>,
    /// Layer inputs, starting with the data.
    inputs: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl Mlp {
    /// He-normal weights `N(0, 2/fan_in)`, zero biases.
    pub fn init<R: rand::Rng + ?Sized>(sizes: Vec<usize>, rng: &mut R) -> Self {
        let mut params = Vec::with_capacity(Self::count(&sizes));
        for l in 0..sizes.len() - 1 {
            let sd = (2.0 / sizes[l] as f64).sqrt();
            params.extend((0..sizes[l] * sizes[l + 1]).map(|_| sd * standard_normal(rng)));
            params.extend(std::iter::repeat_n(0.0, sizes[l + 1]));
        }
        Self { sizes, params }
    }

    pub fn from_params(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let want = Self::count(&sizes);
        if params.len() != want {
            return Err(Error::DimensionMismatch { expected: want, found: params.len() });
        }
        Ok(Self { sizes, params })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn offset(&self, layer: usize) -> usize {
        self.sizes[..=layer].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `(W, b)` of a layer, `W` shaped `in × out`.
    pub fn layer(&self, l: usize) -> (DenseMatrix, Vec<f64>) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offset(l);
        let w = DenseMatrix::from_parts(i, o, self.params[off..off + i * o].to_vec());
        (w, self.params[off + i * o..off + i * o + o].to_vec())
    }

    pub fn forward(&self, x: &DenseMatrix) -> Forward {
        let n = x.rows();
        let layers = self.sizes.len() - 1;
        let mut inputs = vec![x.as_slice().to_vec()];
        let mut pre = Vec::with_capacity(layers);
        for l in 0..layers {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let w = &self.params[off..off + i * o];
            let b = &self.params[off + i * o..off + i * o + o];
            let a = &inputs[l];
            let mut z = Vec::with_capacity(n * o);
            for _ in 0..n {
                z.extend_from_slice(b);
            }
            for r in 0..n {
                let zr = &mut z[r * o..(r + 1) * o];
                for (k, av) in a[r * i..(r + 1) * i].iter().enumerate() {
                    if *av == 0.0 {
                        continue;
                    }
                    for (zz, ww) in zr.iter_mut().zip(&w[k * o..(k + 1) * o]) {
                        *zz += av * ww;
                    }
                }
            }
            if l + 1 < layers {
                inputs.push(z.iter().map(|v| v.max(0.0)).collect());
            }
            pre.push(z);
        }
        let output = pre.last().expect("at least one layer").clone();
        Forward { pre, inputs, output }
    }

    pub fn predict_one(&self, x: &[f64]) -> f64 {
        let m = DenseMatrix::from_parts(1, x.len(), x.to_vec());
        self.forward(&m).output[0]
    }

    /// Mean squared error and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, x: &DenseMatrix, y: &[f64]) -> (f64, Vec<f64>) {
        let n = x.rows();
        let fw = self.forward(x);
        let resid: Vec<f64> = fw.output.iter().zip(y).map(|(p, t)| p - t).collect();
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut delta: Vec<f64> = resid.iter().map(|r| 2.0 * r / n as f64).collect();
        for l in (0..self.sizes.len() - 1).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let a = &fw.inputs[l];
            {
                let (gw, gb) = grad[off..off + i * o + o].split_at_mut(i * o);
                for r in 0..n {
                    let dr = &delta[r * o..(r + 1) * o];
                    for (g, d) in gb.iter_mut().zip(dr) {
                        *g += d;
                    }
                    for (k, av) in a[r * i..(r + 1) * i].iter().enumerate() {
                        if *av == 0.0 {
                            continue;
                        }
                        for (g, d) in gw[k * o..(k + 1) * o].iter_mut().zip(dr) {
                            *g += av * d;
                        }
                    }
                }
            }
            if l > 0 {
                let w = &self.params[off..off + i * o];
                let zprev = &fw.pre[l - 1];
                let mut next = vec![0.0; n * i];
                for r in 0..n {
                    let dr = &delta[r * o..(r + 1) * o];
                    for k in 0..i {
                        // relu'(0) = 0
                        if zprev[r * i + k] > 0.0 {
                            next[r * i + k] = w[k * o..(k + 1) * o].iter().zip(dr).map(|(a, b)| a * b).sum();
                        }
                    }
                }
                delta = next;
            }
        }
        (loss, grad)
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}

/// Full-batch training of a ReLU network on squared loss.
pub fn fit_mlp(data: &Dataset, spec: &MlpSpec, rng: &SeedStream) -> Result<FittedModel> {
    spec.validate()?;
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut sizes = vec![data.d()];
    sizes.extend(&spec.hidden);
    sizes.push(1);
    let mut net = Mlp::init(sizes, &mut rng.rng());
    let mut state = OptState::new(spec.optimizer, net.params.len());
    let mut trace = Vec::with_capacity(spec.epochs);
    for epoch in 0..spec.epochs {
        let (loss, grad) = net.loss_and_grad(&data.x, &data.y);
        if !loss.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        trace.push(loss);
        state.step(net.params_mut(), &grad, spec.learning_rate);
    }
    if net.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::DivergedLoss { epoch: spec.epochs });
    }
    Ok(FittedModel { spec: ModelSpec::Mlp(spec.clone()), payload: Payload::Mlp(net), loss_trace: trace, warnings: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::predict;
    use crate::numcore::derive_stream;
    use crate::signals::{sample_dataset, DesignSpec, SignalSpec};

    fn net_of(model: &FittedModel) -> &Mlp {
        match &model.payload {
            Payload::Mlp(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = derive_stream(21, 0).rng();
        // random biases keep every pre-activation away from the ReLU kink
        let sizes = vec![2, 4, 3, 1];
        let count = Mlp::count(&sizes);
        let net = Mlp::from_params(sizes, crate::numcore::rng::normal_vec(&mut rng, count)).unwrap();
        let x = DenseMatrix::from_rows(&[
            vec![0.3, -1.1], vec![1.2, 0.4], vec![-0.7, 0.9], vec![0.05, 0.6], vec![-1.3, -0.2],
        ]).unwrap();
        let y = [0.5, -0.2, 1.0, 0.3, -0.8];
        let (_, g) = net.loss_and_grad(&x, &y);
        let h = 1e-5;
        for p in 0..net.params.len() {
            let mut up = net.clone();
            up.params[p] += h;
            let mut dn = net.clone();
            dn.params[p] -= h;
            let fd = (up.loss_and_grad(&x, &y).0 - dn.loss_and_grad(&x, &y).0) / (2.0 * h);
            let scale = g[p].abs().max(fd.abs()).max(1e-6);
            assert!((g[p] - fd).abs() <= 1e-4 * scale, "param {p}: analytic {} fd {fd}", g[p]);
        }
    }

    #[test]
    fn zero_rate_keeps_initialization() {
        let s = SignalSpec::piecewise_k(0.0, 0.1).unwrap();
        let d = sample_dataset(&s, &DesignSpec::standard(1).unwrap(), 20, &derive_stream(1, 0)).unwrap();
        let spec = MlpSpec { hidden: vec![5, 5], epochs: 10, learning_rate: 0.0, optimizer: Optimizer::Adam };
        let rng = derive_stream(1, 1);
        let fitted = fit_mlp(&d, &spec, &rng).unwrap();
        let init = Mlp::init(vec![1, 5, 5, 1], &mut rng.rng());
        assert_eq!(net_of(&fitted), &init);
        assert_eq!(fitted.loss_trace.len(), 10);
    }

    #[test]
    fn zero_last_layer_gives_constant_bias() {
        let mut net = Mlp::init(vec![3, 4, 4, 1], &mut derive_stream(2, 0).rng());
        let off = net.offset(2);
        let p = net.params_mut();
        p[off..off + 4].iter_mut().for_each(|w| *w = 0.0);
        p[off + 4] = 0.7;
        let m = FittedModel { spec: ModelSpec::Mlp(MlpSpec::default()), payload: Payload::Mlp(net), loss_trace: vec![], warnings: vec![] };
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-5.0, 0.0, 9.0]]).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), vec![0.7, 0.7]);
    }

    #[test]
    fn learns_noiseless_linear_target() {
        let s = SignalSpec::polynomial(vec![0.0, 2.0], 0.0).unwrap();
        let d = sample_dataset(&s, &DesignSpec::standard(1).unwrap(), 100, &derive_stream(3, 0)).unwrap();
        let spec = MlpSpec { hidden: vec![50, 50], epochs: 2000, learning_rate: 0.01, optimizer: Optimizer::Adam };
        let m = fit_mlp(&d, &spec, &derive_stream(3, 1)).unwrap();
        let p = predict(&m, &d.x).unwrap();
        let mse = p.iter().zip(&d.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / d.n() as f64;
        assert!(mse < 1e-2, "mse {mse}");
        // window minimum never exceeds the window start
        for w in m.loss_trace.windows(200) {
            assert!(w.iter().cloned().fold(f64::INFINITY, f64::min) <= w[0]);
        }
    }

    #[test]
    fn huge_rate_diverges() {
        let s = SignalSpec::polynomial(vec![0.0, 1e150], 0.0).unwrap();
        let d = sample_dataset(&s, &DesignSpec::standard(1).unwrap(), 10, &derive_stream(4, 0)).unwrap();
        let spec = MlpSpec { hidden: vec![4], epochs: 50, learning_rate: 1e200, optimizer: Optimizer::SGD_DEFAULT };
        assert!(matches!(fit_mlp(&d, &spec, &derive_stream(4, 1)), Err(Error::DivergedLoss { .. })));
    }
}
