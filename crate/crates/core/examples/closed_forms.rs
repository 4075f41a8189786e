//! Scaled optimism of least squares for one-dimensional signals, straight
//! from the closed forms. No sampling involved.

use optimism::theory::{cor5_quadratic_form, exp_signal_printed, exp_signal_scaled, fk_closed_form, poly_closed_form};

fn main() -> optimism::Result<()> {
    println!("f_k family");
    println!("{:>5} {:>10} {:>10} {:>10}", "k", "σ²=0.01", "σ²=0.05", "σ²=0.1");
    for i in 0..=10 {
        let k = i as f64 / 10.0;
        let v: Vec<f64> = [0.01, 0.05, 0.1].iter().map(|&s| fk_closed_form(k, s)).collect::<Result<_, _>>()?;
        println!("{k:>5.1} {:>10.3} {:>10.3} {:>10.3}", v[0], v[1], v[2]);
    }

    println!("\ncubic polynomials (σ² = 1)");
    for a in [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [1.0, 5.0, -1.0, 0.5]] {
        println!("A = {a:?}: {:.4} (general form {:.4})", poly_closed_form(a, 1.0)?, cor5_quadratic_form(&a, 1.0)?);
    }

    println!("\nexp(−a(z−b)²), σ² = 0.1");
    for (a, b) in [(0.5, 0.0), (1.0, 1.0), (4.0, -0.5)] {
        let direct = exp_signal_scaled(a, b, 0.1)?;
        let printed = exp_signal_printed(a, b, 0.1)?;
        println!("a={a} b={b}: integrated {direct:.4}, printed form {:.4}", printed.scaled);
    }
    Ok(())
}
