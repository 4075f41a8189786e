/// First-order update rule for full-batch training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// β₁ = 0.9, β₂ = 0.999, ε = 1e-8, bias-corrected moments.
    Adam,
    /// Heavy-ball momentum: `v ← μv + g`, `θ ← θ − lr·v`.
    Sgd { momentum: f64 },
}

impl Optimizer {
    pub const SGD_DEFAULT: Optimizer = Optimizer::Sgd { momentum: 0.9 };

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Adam => "adam",
            Optimizer::Sgd { .. } => "sgd",
        }
    }
}

pub(crate) struct OptState {
    kind: Optimizer,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl OptState {
    pub(crate) fn new(kind: Optimizer, len: usize) -> Self {
        Self { kind, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub(crate) fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        match self.kind {
            Optimizer::Adam => {
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                    self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
                    let mhat = self.m[i] / c1;
                    let vhat = self.v[i] / c2;
                    params[i] -= lr * mhat / (vhat.sqrt() + EPS);
                }
            }
            Optimizer::Sgd { momentum } => {
                for i in 0..params.len() {
                    self.m[i] = momentum * self.m[i] + grad[i];
                    params[i] -= lr * self.m[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_is_signed_lr() {
        // bias correction makes the first step lr·g/(|g| + ε)
        let mut p = vec![1.0, -2.0];
        let mut s = OptState::new(Optimizer::Adam, 2);
        s.step(&mut p, &[0.5, -3.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-7 && (p[1] + 1.9).abs() < 1e-7);
    }

    #[test]
    fn momentum_accumulates() {
        let mut p = vec![0.0];
        let mut s = OptState::new(Optimizer::SGD_DEFAULT, 1);
        s.step(&mut p, &[1.0], 1.0);
        s.step(&mut p, &[1.0], 1.0);
        // v1 = 1, v2 = 1.9
        assert!((p[0] + 2.9).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_is_a_no_op() {
        for kind in [Optimizer::Adam, Optimizer::SGD_DEFAULT] {
            let mut p = vec![0.3, 0.7];
            let mut s = OptState::new(kind, 2);
            for _ in 0..10 {
                s.step(&mut p, &[1.0, -4.0], 0.0);
            }
            assert_eq!(p, vec![0.3, 0.7]);
        }
    }
}
