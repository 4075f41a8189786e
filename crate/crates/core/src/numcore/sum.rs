//! Pairwise (tree) reductions. Results depend only on the input order.

const LEAF: usize = 8;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Weighted sum `Σ wᵢ xᵢ`.
pub fn weighted_sum(w: &[f64], xs: &[f64]) -> f64 {
    let prod: Vec<f64> = w.iter().zip(xs).map(|(a, b)| a * b).collect();
    pairwise_sum(&prod)
}

/// Sample mean and the standard error of that mean (two-pass, n − 1 denominator).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = mean(xs);
    if n < 2 {
        return (m, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (m, (var / n as f64).sqrt())
}
