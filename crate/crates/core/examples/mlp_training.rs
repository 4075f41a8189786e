//! A small ReLU network trained by full-batch Adam, and its Monte-Carlo
//! optimism next to least squares on the same signal.

use optimism::estimators::{mc_optimism, mse};
use optimism::models::{fit_mlp, MlpSpec, ModelSpec, Optimizer};
use optimism::numcore::SeedStream;
use optimism::signals::{sample_dataset, DesignSpec, SignalSpec};

fn main() -> optimism::Result<()> {
    let design = DesignSpec::standard(1)?;
    let s = SignalSpec::piecewise_k(0.0, 0.01)?;
    let data = sample_dataset(&s, &design, 200, &SeedStream::new(2, 0))?;
    let spec = MlpSpec { hidden: vec![32, 32], epochs: 400, learning_rate: 0.01, optimizer: Optimizer::Adam };
    let model = fit_mlp(&data, &spec, &SeedStream::new(2, 1))?;
    let trace = &model.loss_trace;
    for e in [0, trace.len() / 4, trace.len() / 2, trace.len() - 1] {
        println!("epoch {e:>4}: loss {:.5}", trace[e]);
    }
    println!("train mse {:.5}", mse(&model, &data)?);

    for spec in [ModelSpec::Ols { intercept: true }, ModelSpec::Mlp(spec)] {
        let e = mc_optimism(&s, &design, &spec, 200, 1000, 20, 3)?;
        println!("{:<12} scaled optimism {:.2} ± {:.2}", spec.name(), e.opt_scaled.unwrap(), e.scaled_stderr(0.01).unwrap());
    }
    Ok(())
}
