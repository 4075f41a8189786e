//! Ridge optimism as the penalty grows, next to Monte Carlo at a few points.

use optimism::estimators::{mc_optimism_with, VarianceReduction};
use optimism::models::ModelSpec;
use optimism::numcore::SeedStream;
use optimism::signals::{DesignSpec, SignalSpec};
use optimism::theory::{population_moments, thm3_ridge_optimism, EvalMethod};

fn main() -> optimism::Result<()> {
    let n = 1000;
    let design = DesignSpec::standard(1)?;
    let rng = SeedStream::new(5, 0);
    for k in [0.0, 1.0] {
        let s = SignalSpec::piecewise_k(k, 0.01)?;
        let pm = population_moments(&s, &design, EvalMethod::Quadrature, 0, &rng)?;
        println!("k = {k}");
        for lambda in [0.0, 0.5, 1.0, 2.0, 10.0, 100.0, 1000.0] {
            let t = thm3_ridge_optimism(&pm, lambda, n, 0, &rng)?;
            let scaled = t.scaled_optimism.unwrap();
            let mc = if lambda <= 10.0 {
                let spec = ModelSpec::Ridge { lambda, intercept: false };
                let e = mc_optimism_with(&s, &design, &spec, n, n, 400, 5, VarianceReduction::PopulationReference)?;
                format!("{:9.3} ± {:.3}", e.opt_scaled.unwrap(), e.scaled_stderr(0.01).unwrap())
            } else {
                String::new()
            };
            println!("  λ={lambda:<7} theory {scaled:9.3}  λ·opt {:.3e}  mc {mc}", lambda * t.raw_optimism);
        }
    }
    Ok(())
}
