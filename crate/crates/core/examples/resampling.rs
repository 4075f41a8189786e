//! Hold-out and k-fold optimism on one fixed dataset.

use optimism::estimators::{holdout_optimism, kfold_optimism, ResamplingPlan};
use optimism::models::ModelSpec;
use optimism::numcore::SeedStream;
use optimism::signals::{sample_dataset, DesignSpec, SignalSpec};

fn main() -> optimism::Result<()> {
    let s = SignalSpec::piecewise_k(0.3, 1.0)?;
    let data = sample_dataset(&s, &DesignSpec::standard(1)?, 400, &SeedStream::new(13, 0))?;
    for spec in [ModelSpec::Ols { intercept: true }, ModelSpec::Bended, ModelSpec::Mean] {
        let plans = [
            ("hold-out 20%", ResamplingPlan::holdout(200)),
            ("hold-out, no bootstrap", ResamplingPlan::HoldOut { test_fraction: 0.2, num_runs: 200, bootstrap: false }),
            ("2-fold", ResamplingPlan::KFold { k: 2, num_runs: 200 }),
            ("4-fold", ResamplingPlan::KFold { k: 4, num_runs: 200 }),
        ];
        println!("{}", spec.name());
        for (label, plan) in plans {
            let e = match plan {
                ResamplingPlan::HoldOut { .. } => holdout_optimism(&data, &spec, &plan, 1)?,
                ResamplingPlan::KFold { .. } => kfold_optimism(&data, &spec, &plan, 1)?,
            };
            println!(
                "  {label:<24} train rows {:>3}  opt {:.4} ± {:.4}  per row {:.2e}",
                e.n_train,
                e.opt_raw,
                e.stderr_opt,
                e.opt_raw / e.n_train as f64
            );
        }
    }
    Ok(())
}
