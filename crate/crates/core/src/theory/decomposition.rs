//! Exact signal/noise split of least-squares optimism conditional on a
//! fixed training design.

use crate::error::{Error, Result};
use crate::numcore::{dot, mean_stderr, Cholesky, DenseMatrix, SeedStream};
use crate::signals::{DesignSpec, SignalSpec};

/// Where test inputs `x*` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TestLaw {
    /// Fresh draws from a Gaussian design.
    Design(DesignSpec),
    /// Uniform draws from the training rows, averaged exactly.
    TrainingRows,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub signal_part: f64,
    pub noise_part: f64,
    pub total: f64,
    /// Monte-Carlo standard error of the total; zero for exact averages.
    pub stderr: f64,
}

/// `signal = E‖μ* − x*ᵀβ_μ‖² − (1/n)‖μ − Hμ‖²` and
/// `noise = σ²(E[x*ᵀG⁻¹x*] − tr(HᵀH)/n + 2tr(H)/n)` with `G = XᵀX`,
/// `H = XG⁻¹Xᵀ` and `β_μ = G⁻¹Xᵀμ(X)`.
pub fn prop1_decomposition(
    x: &DenseMatrix,
    signal: &SignalSpec,
    sigma2: f64,
    law: &TestLaw,
    budget: usize,
    rng: &SeedStream,
) -> Result<Decomposition> {
    let (n, d) = x.shape();
    if signal.input_dim() != d {
        return Err(Error::DimensionMismatch { expected: signal.input_dim(), found: d });
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance {sigma2} must be >= 0")));
    }
    let chol = Cholesky::new(&x.gram()).map_err(|_| Error::RankDeficientDesign)?;
    let ginv = chol.inverse();
    let mu: Vec<f64> = (0..n).map(|i| signal.mu(x.row(i))).collect();
    let beta = chol.solve(&x.tmatvec(&mu)?)?;
    let fitted = x.matvec(&beta)?;
    let in_sample = mu.iter().zip(&fitted).map(|(m, f)| (m - f).powi(2)).sum::<f64>() / n as f64;
    // HᵀH = H for the projection, so both traces equal d.
    let tr_h = d as f64;
    let nf = n as f64;
    let noise = |lev: f64| sigma2 * (lev - tr_h / nf + 2.0 * tr_h / nf);
    match law {
        TestLaw::TrainingRows => {
            let lev = ginv.matmul(&x.gram())?.trace() / nf;
            // Averaging over the rows reproduces the in-sample residual exactly.
            let out = in_sample;
            let signal_part = out - in_sample;
            let noise_part = noise(lev);
            Ok(Decomposition { signal_part, noise_part, total: signal_part + noise_part, stderr: 0.0 })
        }
        TestLaw::Design(design) => {
            if design.dimension() != d {
                return Err(Error::DimensionMismatch { expected: d, found: design.dimension() });
            }
            if budget == 0 {
                return Err(Error::InvalidArgument("budget must be >= 1".into()));
            }
            let lev = ginv.matmul(design.covariance())?.trace();
            let mut r = rng.rng();
            let vals: Vec<f64> = (0..budget)
                .map(|_| {
                    let xs = design.sample_point(&mut r);
                    (signal.mu(&xs) - dot(&xs, &beta)).powi(2)
                })
                .collect();
            let (out, se) = mean_stderr(&vals);
            let signal_part = out - in_sample;
            let noise_part = noise(lev);
            Ok(Decomposition { signal_part, noise_part, total: signal_part + noise_part, stderr: se })
        }
    }
}
