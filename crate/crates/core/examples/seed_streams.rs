//! Per-run random streams are fixed by (seed, run index), so any thread
//! count reproduces the same numbers.

use optimism::estimators::mc_optimism;
use optimism::models::ModelSpec;
use optimism::numcore::{derive_stream, hash_seed};
use optimism::signals::{DesignSpec, SignalSpec};
use rand::Rng;

fn main() -> optimism::Result<()> {
    for run in 0..3 {
        let mut rng = derive_stream(7, run).rng();
        let draws: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        println!("run {run}: {draws:.4?}");
    }
    println!("child 'model' of run 0: {:?}", derive_stream(7, 0).child("model"));
    println!("cell key hash: {}", hash_seed("7|fk|0.5|ols"));

    let s = SignalSpec::piecewise_k(0.25, 0.05)?;
    let design = DesignSpec::standard(1)?;
    let ols = ModelSpec::Ols { intercept: false };
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_optimism(&s, &design, &ols, 100, 100, 500, 7))
    };
    let (a, b) = (run_with(1)?, run_with(6)?);
    println!("1 thread {:.17}, 6 threads {:.17}, identical: {}", a.opt_raw, b.opt_raw, a == b);
    Ok(())
}
