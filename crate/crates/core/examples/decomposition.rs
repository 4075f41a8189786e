//! Signal and noise parts of the optimism for one fixed training design.

use optimism::numcore::SeedStream;
use optimism::signals::{sample_dataset, DesignSpec, SignalSpec};
use optimism::theory::{prop1_decomposition, TestLaw};

fn main() -> optimism::Result<()> {
    // Inputs only; the responses of this draw are not used.
    let x = sample_dataset(&SignalSpec::piecewise_k(0.5, 0.1)?, &DesignSpec::standard(1)?, 100, &SeedStream::new(4, 0))?.x;
    for k in [0.0, 0.25, 0.5, 1.0] {
        let s = SignalSpec::piecewise_k(k, 0.1)?;
        for (label, law) in [("fresh draws", TestLaw::Design(DesignSpec::standard(1)?)), ("training rows", TestLaw::TrainingRows)] {
            let d = prop1_decomposition(&x, &s, 0.1, &law, 50_000, &SeedStream::new(4, 1));
            match d {
                Ok(d) => println!(
                    "k={k:<4} {label:<13} signal {:.5} noise {:.5} total {:.5} ± {:.1e}",
                    d.signal_part, d.noise_part, d.total, d.stderr
                ),
                Err(e) => println!("k={k:<4} {label:<13} {e}"),
            }
        }
    }
    Ok(())
}
