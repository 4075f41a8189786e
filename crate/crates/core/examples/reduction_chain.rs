//! The asymptotic formulas collapse onto one another on shared samples:
//! ridge at λ = 0, full-rank low-rank and identity-feature kernel all give
//! the least-squares value.

use optimism::models::LinearFeatures;
use optimism::numcore::{DenseMatrix, SeedStream};
use optimism::signals::{DesignSpec, SignalSpec};
use optimism::theory::{
    cor2_signal_part, population_moments, thm1_optimism, thm2_lowrank_bound, thm3_ridge_optimism, thm4_kernel_optimism,
    EvalMethod,
};

fn main() -> optimism::Result<()> {
    let cov = DenseMatrix::from_rows(&[vec![2.0, 0.4], vec![0.4, 0.5]])?;
    let design = DesignSpec::with_covariance(cov)?;
    let s = SignalSpec::linear(vec![1.0, -2.0], 0.3)?;
    let (n, budget, rng) = (200, 20_000, SeedStream::new(3, 0));
    let pm = population_moments(&s, &design, EvalMethod::InnerMc, budget, &rng)?;

    let t1 = thm1_optimism(&pm, n, budget, &rng)?;
    let t2 = thm2_lowrank_bound(&pm, 2, n, budget, &rng)?;
    let t3 = thm3_ridge_optimism(&pm, 0.0, n, budget, &rng)?;
    let t4 = thm4_kernel_optimism(LinearFeatures::Raw, &s, &design, 0.0, n, budget, &rng)?;
    println!("least squares   {:.10} ± {:.1e}", t1.raw_optimism, t1.eval_stderr);
    println!("low rank k = d  {:.10}", t2.raw_optimism);
    println!("ridge λ = 0     {:.10}", t3.raw_optimism);
    println!("kernel, raw φ   {:.10}", t4.raw_optimism);
    println!("scaled {:.4} (a linear signal in d = 2 gives 2)", t1.scaled_optimism.unwrap());
    let sp = cor2_signal_part(&pm)?;
    println!("signal part {:.2e} ± {:.1e}", sp.value, sp.stderr);
    Ok(())
}
