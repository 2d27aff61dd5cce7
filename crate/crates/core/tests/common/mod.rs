#![allow(dead_code)]

/// Kolmogorov–Smirnov distance between sorted draws and a distribution
/// function.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max)
}

/// Fraction of sorted draws at or below `x`.
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

pub fn binomial_se(p: f64, k: u64) -> f64 {
    (p * (1.0 - p) / k as f64).sqrt()
}
