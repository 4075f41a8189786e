//! Rank-k least squares on an anisotropic design, against its bound.

use optimism::estimators::mc_optimism;
use optimism::models::ModelSpec;
use optimism::numcore::{svd, DenseMatrix, SeedStream};
use optimism::signals::{DesignSpec, SignalSpec};
use optimism::theory::{population_moments, thm1_optimism, thm2_lowrank_bound, EvalMethod};

fn main() -> optimism::Result<()> {
    let cov = DenseMatrix::diag(&[4.0, 1.0, 0.25]);
    let dec = svd(&cov);
    println!("singular values {:?}", dec.s);
    for k in 1..=3 {
        let err = dec.reconstruct(k).sub(&cov)?.max_abs();
        println!("rank-{k} reconstruction max error {err:.3}");
    }

    let design = DesignSpec::with_covariance(cov)?;
    let s = SignalSpec::linear(vec![1.0, 1.0, 1.0], 0.5)?;
    let (n, budget, rng) = (200, 50_000, SeedStream::new(8, 0));
    let pm = population_moments(&s, &design, EvalMethod::InnerMc, budget, &rng)?;
    println!("full least squares theory {:.4}", thm1_optimism(&pm, n, budget, &rng)?.raw_optimism);
    for k in 1..=3 {
        let bound = thm2_lowrank_bound(&pm, k, n, budget, &rng)?;
        let mc = mc_optimism(&s, &design, &ModelSpec::LowRank { rank: k }, n, n, 500, 8)?;
        println!("k={k}: mc {:.4} ± {:.4}, bound {:.4}", mc.opt_raw, mc.stderr_opt, bound.raw_optimism);
    }
    Ok(())
}
