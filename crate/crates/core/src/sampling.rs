//! Reproducible draws of sufficient statistics.
//!
//! Replicate `i` of a run with master seed `s` always draws from the stream
//! identified by `SeedSpec { master: s, stream: i }`. Streams are ChaCha8
//! keyed by the master seed, with the stream id selecting the ChaCha stream
//! (nonce), so streams are independent and can be generated in any order or
//! on any thread.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(master: u64, stream: u64) -> Self {
        SeedSpec { master, stream }
    }

    /// Generator for this stream, positioned at its start.
    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Reduced data from one simulated data set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SufficientStat {
    /// Sample maximum of `n` draws from `U(0, θ)`.
    UniformMax { x_max: f64, n: u32 },
    /// Sample mean of `n` draws from `N(θ, σ²)` with σ known.
    GaussianMean { x_bar: f64, n: u32, sigma: f64 },
    /// Sample mean and unbiased sample variance of `n ≥ 2` Gaussian draws.
    GaussianMeanVar { x_bar: f64, s2: f64, n: u32 },
}

impl SufficientStat {
    pub fn n(&self) -> u32 {
        match *self {
            SufficientStat::UniformMax { n, .. }
            | SufficientStat::GaussianMean { n, .. }
            | SufficientStat::GaussianMeanVar { n, .. } => n,
        }
    }
}

/// `X_(n) = θ·U^{1/n}`, the inverse CDF of `θ·Beta(n, 1)`.
pub fn sample_uniform_max<R: Rng + ?Sized>(n: u32, theta: f64, rng: &mut R) -> Result<SufficientStat> {
    if n == 0 {
        return Err(domain("uniform sample size must be at least 1"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(domain(format!("uniform support must be positive, got {theta}")));
    }
    // 1 - U lies in (0, 1], keeping the maximum strictly positive
    let u = 1.0 - rng.random::<f64>();
    let x_max = theta * u.powf(1.0 / n as f64);
    Ok(SufficientStat::UniformMax { x_max, n })
}

/// `X̄ ~ N(θ, σ²/n)` from a single normal draw.
pub fn sample_gaussian_mean<R: Rng + ?Sized>(
    n: u32,
    theta: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<SufficientStat> {
    check_gaussian(n, theta, sigma)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(SufficientStat::GaussianMean {
        x_bar: theta + sigma / (n as f64).sqrt() * z,
        n,
        sigma,
    })
}

/// `X̄ ~ N(θ, σ²/n)` and, independently, `(n-1)s²/σ² ~ χ²(n-1)` drawn as
/// `Gamma(shape = (n-1)/2, scale = 2)`.
pub fn sample_gaussian_mean_var<R: Rng + ?Sized>(
    n: u32,
    theta: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<SufficientStat> {
    if n < 2 {
        return Err(domain(format!("mean/variance statistic needs n >= 2, got {n}")));
    }
    check_gaussian(n, theta, sigma)?;
    let z: f64 = StandardNormal.sample(rng);
    let dof = (n - 1) as f64;
    let chi2 = Gamma::new(0.5 * dof, 2.0)
        .map_err(|e| domain(format!("chi-squared sampler: {e}")))?
        .sample(rng);
    Ok(SufficientStat::GaussianMeanVar {
        x_bar: theta + sigma / (n as f64).sqrt() * z,
        s2: sigma * sigma * chi2 / dof,
        n,
    })
}

fn check_gaussian(n: u32, theta: f64, sigma: f64) -> Result<()> {
    if n == 0 {
        return Err(domain("Gaussian sample size must be at least 1"));
    }
    if !theta.is_finite() {
        return Err(domain(format!("Gaussian mean must be finite, got {theta}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(domain(format!("Gaussian sigma must be positive, got {sigma}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (mean, (var / k).sqrt())
    }

    #[test]
    fn uniform_max_support_and_determinism() {
        for stream in 0..100 {
            let seed = SeedSpec::new(7, stream);
            let a = sample_uniform_max(5, 2.0, &mut seed.rng()).unwrap();
            let b = sample_uniform_max(5, 2.0, &mut seed.rng()).unwrap();
            assert_eq!(a, b);
            let SufficientStat::UniformMax { x_max, .. } = a else { unreachable!() };
            assert!(x_max > 0.0 && x_max <= 2.0);
        }
    }

    #[test]
    fn uniform_max_mean_matches_beta() {
        let draws: Vec<f64> = (0..100_000)
            .map(|i| match sample_uniform_max(3, 1.0, &mut SeedSpec::new(11, i).rng()).unwrap() {
                SufficientStat::UniformMax { x_max, .. } => x_max,
                _ => unreachable!(),
            })
            .collect();
        let (mean, se) = mean_and_se(&draws);
        assert!((mean - 0.75).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn gaussian_mean_examples() {
        let draws: Vec<f64> = (0..100_000)
            .map(|i| match sample_gaussian_mean(100, 0.1, 1.0, &mut SeedSpec::new(3, i).rng()).unwrap() {
                SufficientStat::GaussianMean { x_bar, .. } => x_bar,
                _ => unreachable!(),
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.1).abs() < 3.0 * 0.1 / (1e5f64).sqrt());

        let s = SeedSpec::new(1, 2);
        let tight = sample_gaussian_mean(4, 0.3, 1e-8, &mut s.rng()).unwrap();
        let SufficientStat::GaussianMean { x_bar, .. } = tight else { unreachable!() };
        assert!((x_bar - 0.3).abs() < 1e-6);
        assert_eq!(tight, sample_gaussian_mean(4, 0.3, 1e-8, &mut s.rng()).unwrap());
    }

    #[test]
    fn gaussian_mean_var_examples() {
        let mut s2s = Vec::with_capacity(100_000);
        for i in 0..100_000 {
            match sample_gaussian_mean_var(5, 1.0, 10.0, &mut SeedSpec::new(5, i).rng()).unwrap() {
                SufficientStat::GaussianMeanVar { s2, .. } => {
                    assert!(s2 >= 0.0);
                    s2s.push(s2);
                }
                _ => unreachable!(),
            }
        }
        let (mean, se) = mean_and_se(&s2s);
        assert!((mean - 100.0).abs() < 3.0 * se, "mean {mean} se {se}");
        let s = SeedSpec::new(9, 9);
        assert_eq!(
            sample_gaussian_mean_var(5, 1.0, 10.0, &mut s.rng()).unwrap(),
            sample_gaussian_mean_var(5, 1.0, 10.0, &mut s.rng()).unwrap()
        );
    }

    #[test]
    fn domain_errors() {
        let mut rng = SeedSpec::new(0, 0).rng();
        assert!(sample_uniform_max(0, 1.0, &mut rng).is_err());
        assert!(sample_uniform_max(3, 0.0, &mut rng).is_err());
        assert!(sample_gaussian_mean(0, 1.0, 1.0, &mut rng).is_err());
        assert!(sample_gaussian_mean(3, 1.0, -1.0, &mut rng).is_err());
        assert!(sample_gaussian_mean_var(1, 1.0, 1.0, &mut rng).is_err());
    }
}
