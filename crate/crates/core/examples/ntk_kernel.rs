//! Tangent kernel of a two-layer ReLU network: Gram spectrum, kernel ridge
//! fit, and the kernel optimism formula in the feature space.

use optimism::estimators::mc_optimism;
use optimism::models::{ntk_gram, KernelSpec, ModelSpec};
use optimism::numcore::rng::standard_normal;
use optimism::numcore::{sym_eigen, DenseMatrix, SeedStream};
use optimism::signals::{DesignSpec, SignalSpec};
use optimism::theory::{thm4_kernel_optimism, NtkFeatureMap};
use rand::Rng;

fn main() -> optimism::Result<()> {
    let (d, m) = (1, 8);
    let mut rng = SeedStream::new(21, 0).rng();
    let w0 = DenseMatrix::from_fn(d, m, |_, _| standard_normal(&mut rng))?;
    let a: Vec<f64> = (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();

    let x = DenseMatrix::from_fn(30, d, |_, _| standard_normal(&mut rng))?;
    let eig = sym_eigen(&ntk_gram(&w0, &a, &x))?;
    println!("Gram eigenvalues: top {:.3}, bottom {:.2e}", eig.values[0], eig.values[eig.values.len() - 1]);

    let s = SignalSpec::piecewise_k(0.2, 0.1)?;
    let design = DesignSpec::standard(d)?;
    let n = 300;
    for lambda in [1.0, 10.0, 100.0] {
        let phi = NtkFeatureMap { w0: w0.clone(), a: a.clone() };
        // Kernel ridge on n rows with penalty λ matches the feature-space ridge at λ/n.
        let t = thm4_kernel_optimism(phi, &s, &design, lambda / n as f64, n, 40_000, &SeedStream::new(22, 0))?;
        let spec = ModelSpec::Krr { kernel: KernelSpec::Ntk { w0: w0.clone(), a: a.clone() }, lambda };
        let e = mc_optimism(&s, &design, &spec, n, n, 300, 23)?;
        println!(
            "λ={lambda:<5} theory {:.4} ± {:.4}   mc {:.4} ± {:.4}",
            t.scaled_optimism.unwrap(),
            t.scaled_stderr(0.1).unwrap(),
            e.opt_scaled.unwrap(),
            e.scaled_stderr(0.1).unwrap()
        );
    }
    Ok(())
}
