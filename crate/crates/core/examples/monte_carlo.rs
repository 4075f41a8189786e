//! Monte-Carlo optimism against the closed form, with and without the
//! population-reference control variate.

use optimism::estimators::{mc_optimism_with, VarianceReduction};
use optimism::models::ModelSpec;
use optimism::signals::{DesignSpec, SignalSpec};
use optimism::theory::fk_closed_form;

fn main() -> optimism::Result<()> {
    let design = DesignSpec::standard(1)?;
    let ols = ModelSpec::Ols { intercept: false };
    let sigma2 = 0.05;
    for k in [0.0, 0.25, 0.5, 1.0] {
        let s = SignalSpec::piecewise_k(k, sigma2)?;
        let theory = fk_closed_form(k, sigma2)?;
        for (label, red) in [("plain", VarianceReduction::None), ("control variate", VarianceReduction::PopulationReference)] {
            let est = mc_optimism_with(&s, &design, &ols, 500, 500, 1000, 42, red)?;
            println!(
                "k={k:<4} {label:<16} {:>8.3} ± {:<6.3} (theory {theory:.3})",
                est.opt_scaled.unwrap(),
                est.scaled_stderr(sigma2).unwrap()
            );
        }
    }
    Ok(())
}
