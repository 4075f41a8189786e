//! One-dimensional closed forms for the scaled optimism of least squares
//! with a standard normal input.

use crate::error::{Error, Result};
use crate::numcore::normal_moment;
use crate::signals::{moments_1d, SignalSpec};

fn positive(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::ZeroNoiseVariance)
    }
}

/// `(3m₁² + m₂ − 2m₃m₁)/σ² + 1` from `m₁ = E[Zμ]`, `m₂ = E[Z²μ²]`, `m₃ = E[Z³μ]`.
pub fn cor4_scaled_1d(m1: f64, m2: f64, m3: f64, sigma2: f64) -> Result<f64> {
    positive(sigma2)?;
    Ok((3.0 * m1 * m1 + m2 - 2.0 * m3 * m1) / sigma2 + 1.0)
}

/// Polynomial signal `Σ Aᵢ zⁱ` through Gaussian moments:
/// `F = Σ_{i,j≠1} [(−2−4i)·m_{i+1}m_{j+1} + 2·m_{i+j+2}]·AᵢAⱼ`, returned as `F/(2σ²) + 1`.
pub fn cor5_quadratic_form(coeffs: &[f64], sigma2: f64) -> Result<f64> {
    positive(sigma2)?;
    let m = |p: usize| normal_moment(p as u32);
    let mut terms = Vec::new();
    for (i, ai) in coeffs.iter().enumerate().filter(|(i, _)| *i != 1) {
        for (j, aj) in coeffs.iter().enumerate().filter(|(j, _)| *j != 1) {
            let c = (-2.0 - 4.0 * i as f64) * m(i + 1) * m(j + 1) + 2.0 * m(i + j + 2);
            terms.push(c * ai * aj);
        }
    }
    Ok(crate::numcore::pairwise_sum(&terms) / (2.0 * sigma2) + 1.0)
}

/// Cubic signal: `(2A₀² + 30A₂² + 84A₃² + 12A₀A₂)/(2σ²) + 1`. `A₁` drops out.
pub fn poly_closed_form(a: [f64; 4], sigma2: f64) -> Result<f64> {
    positive(sigma2)?;
    let [a0, _, a2, a3] = a;
    Ok((2.0 * a0 * a0 + 30.0 * a2 * a2 + 84.0 * a3 * a3 + 12.0 * a0 * a2) / (2.0 * sigma2) + 1.0)
}

/// The `f_k` family: `1.5(1−2k)²/(2σ²) + 1` below `k = 0.5`, exactly 1 above.
pub fn fk_closed_form(k: f64, sigma2: f64) -> Result<f64> {
    positive(sigma2)?;
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidArgument(format!("k = {k} outside [0, 1]")));
    }
    if k < 0.5 {
        Ok(1.5 * (1.0 - 2.0 * k).powi(2) / (2.0 * sigma2) + 1.0)
    } else {
        Ok(1.0)
    }
}

/// `μ(z) = exp(−a(z−b)²)`: moments by quadrature, then [`cor4_scaled_1d`].
pub fn exp_signal_scaled(a: f64, b: f64, sigma2: f64) -> Result<f64> {
    positive(sigma2)?;
    let (m1, m2, m3) = moments_1d(&SignalSpec::exp_bump(a, b, sigma2)?)?;
    cor4_scaled_1d(m1, m2, m3, sigma2)
}

/// The published closed-form expressions for the exponential signal.
/// They disagree with direct integration and are kept for side-by-side reports only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedExpForms {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub scaled: f64,
}

pub fn exp_signal_printed(a: f64, b: f64, sigma2: f64) -> Result<PrintedExpForms> {
    positive(sigma2)?;
    let s2 = std::f64::consts::SQRT_2;
    let (ab2, a2b2) = (a * b * b, a * a * b * b);
    let m1 = a * b * (-ab2 / (a + 1.0)).exp() / (s2 * (1.0 + a).powf(1.5));
    let m2 = (1.0 + 2.0 * a + 8.0 * a2b2) * (-2.0 * ab2 / (2.0 * a + 1.0)).exp() / (2.0 * s2 * (1.0 + 2.0 * a).powf(2.5));
    let m3 = a * b * (3.0 + 3.0 * a + 2.0 * a2b2) * (-ab2 / (a + 1.0)).exp() / (2.0 * s2 * (1.0 + a).powf(3.5));
    let e1 = (-2.0 * ab2 / (1.0 + a)).exp();
    let e2 = (-2.0 * ab2 / (1.0 + 2.0 * a)).exp();
    let inner = 3.0 * a2b2 / (1.0 + a).powi(3) * e1
        + (1.0 + 2.0 * a * a + 8.0 * a2b2) / (s2 * (1.0 + 2.0 * a).powf(2.5)) * e2
        + a2b2 * (2.0 + a * (3.0 + 2.0 * ab2)) / (1.0 + a).powi(5) * e1;
    Ok(PrintedExpForms { m1, m2, m3, scaled: inner / (2.0 * sigma2) + 1.0 })
}
