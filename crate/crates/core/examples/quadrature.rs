//! Gaussian expectations: plain Gauss–Hermite against the kink-aware
//! composite rule, and the population moments built on them.

use optimism::numcore::{normal_moment, QuadratureRule};
use optimism::numcore::SeedStream;
use optimism::signals::{moments_1d, DesignSpec, SignalSpec};
use optimism::theory::{population_moments, EvalMethod};

fn main() -> optimism::Result<()> {
    let gh = QuadratureRule::gauss_hermite(40)?;
    for p in [2, 4, 8] {
        let v = gh.expect(|z| z.powi(p as i32))?;
        println!("E[Z^{p}] = {v:.12} (exact {})", normal_moment(p));
    }

    // E[max(Z, 0)] = 1/√(2π) has a kink at zero.
    let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let kinked = QuadratureRule::for_kinks(&[0.0]);
    println!(
        "E[relu(Z)]: Gauss–Hermite err {:.2e}, split rule err {:.2e}",
        (gh.expect(|z| z.max(0.0))? - exact).abs(),
        (kinked.expect(|z| z.max(0.0))? - exact).abs()
    );

    let s = SignalSpec::piecewise_k(0.2, 0.05)?;
    let (m1, m2, m3) = moments_1d(&s)?;
    println!("f_0.2 moments: E[Zμ]={m1:.6} E[Z²μ²]={m2:.6} E[Z³μ]={m3:.6}");

    let pm = population_moments(&s, &DesignSpec::standard(1)?.intercept(true), EvalMethod::Quadrature, 0, &SeedStream::new(1, 0))?;
    println!("with intercept: Σ = {:?}, η = {:?}", pm.sigma.as_slice(), pm.eta);
    Ok(())
}
