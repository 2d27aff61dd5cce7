//! Uniform-support models under the Jeffreys prior `π(θ) = 1/θ`.
//!
//! With `X₁…Xₙ ~ U(0, θ)` the posterior is `Pareto(n, X_(n))`. For two
//! independent samples the product `ψ = θ_x·θ_y` has a closed-form posterior
//! distribution function, with separate expressions for `n ≠ m` and `n = m`.

use crate::engine::{BeliefModel, Engine, Posterior, ProbeResult};
use crate::error::{domain, Result};
use crate::sampling::{sample_uniform_max, StreamRng, SufficientStat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPosterior {
    /// Shape; the sample size. Non-integer values are accepted.
    pub shape: f64,
    /// Scale; the sample maximum.
    pub scale: f64,
}

impl ParetoPosterior {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(domain(format!("Pareto shape must be positive, got {shape}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(domain(format!("Pareto scale must be positive, got {scale}")));
        }
        Ok(ParetoPosterior { shape, scale })
    }

    pub fn from_stat(stat: &SufficientStat) -> Result<Self> {
        match *stat {
            SufficientStat::UniformMax { x_max, n } => Self::new(n as f64, x_max),
            other => Err(domain(format!("Pareto posterior needs a sample maximum, got {other:?}"))),
        }
    }

    /// `(1 - (scale/x)^shape)·1{x >= scale}`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.scale {
            0.0
        } else {
            1.0 - (self.scale / x).powf(self.shape)
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < self.scale {
            0.0
        } else {
            self.shape / x * (self.scale / x).powf(self.shape)
        }
    }

    /// Inverse distribution function, `q ∈ [0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        self.scale * (1.0 - q).powf(-1.0 / self.shape)
    }

    /// Posterior probability of `[theta0 - eps, theta0 + eps]`; the ball must
    /// stay inside the positive half-line.
    pub fn ball_prob(&self, theta0: f64, eps: f64) -> Result<f64> {
        check_positive_ball(theta0, eps)?;
        Ok((self.cdf(theta0 + eps) - self.cdf(theta0 - eps)).clamp(0.0, 1.0))
    }
}

fn check_positive_ball(center: f64, eps: f64) -> Result<()> {
    if !(center > 0.0) || !center.is_finite() {
        return Err(domain(format!("ball center must be positive, got {center}")));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(domain(format!("ball radius must be nonnegative, got {eps}")));
    }
    if eps >= center {
        return Err(domain(format!(
            "ball radius {eps} must be smaller than its center {center}"
        )));
    }
    Ok(())
}

impl Posterior for ParetoPosterior {
    fn ball_prob(&self, center: f64, eps: f64) -> Result<f64> {
        ParetoPosterior::ball_prob(self, center, eps)
    }

    fn density(&self, psi: f64) -> Option<f64> {
        Some(ParetoPosterior::density(self, psi))
    }

    fn cdf(&self, psi: f64) -> Option<f64> {
        Some(ParetoPosterior::cdf(self, psi))
    }
}

/// Exact sampling probability that the `Pareto(n, X_(n))` posterior gives
/// the ball `[θ₀ - ε, θ₀ + ε]` probability at most `α`.
///
/// Splits on whether the lower edge of the ball is above the sample maximum:
/// `p = P(X ≤ min(t₁, θ₀ - ε)) + P(X ≥ max(t₂, θ₀ - ε))` with
/// `t₁ = α^{1/n}[(θ₀-ε)^{-n} - (θ₀+ε)^{-n}]^{-1/n}`, `t₂ = (1-α)^{1/n}(θ₀+ε)`
/// and `P(X ≤ x) = (x/θ₀)^n`.
pub fn fct_prob_closed_form(theta0: f64, eps: f64, alpha: f64, n: u32) -> Result<f64> {
    check_positive_ball(theta0, eps)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n == 0 {
        return Err(domain("sample size must be at least 1"));
    }
    let nf = n as f64;
    let lower = theta0 - eps;
    let upper = theta0 + eps;
    let max_cdf = |x: f64| (x / theta0).powf(nf).clamp(0.0, 1.0);
    let t1 = alpha.powf(1.0 / nf) * (lower.powf(-nf) - upper.powf(-nf)).powf(-1.0 / nf);
    let t2 = (1.0 - alpha).powf(1.0 / nf) * upper;
    let p = max_cdf(t1.min(lower)) + (1.0 - max_cdf(t2.max(lower)));
    Ok(p.clamp(0.0, 1.0))
}

/// Posterior of `ψ = θ_x·θ_y` from two independent uniform samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductPosterior {
    pub n: f64,
    pub m: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl ProductPosterior {
    pub fn new(n: f64, m: f64, x_max: f64, y_max: f64) -> Result<Self> {
        for (name, v) in [("n", n), ("m", m), ("x_max", x_max), ("y_max", y_max)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("product posterior `{name}` must be positive, got {v}")));
            }
        }
        Ok(ProductPosterior { n, m, x_max, y_max })
    }

    /// Lower end of the support, `X_(n)·Y_(m)`.
    pub fn support_start(&self) -> f64 {
        self.x_max * self.y_max
    }

    pub fn cdf(&self, psi: f64) -> f64 {
        if self.n == self.m {
            self.cdf_equal(psi)
        } else {
            self.cdf_unequal(psi)
        }
    }

    /// `1 + m/(n-m)·(s/ψ)^n - n/(n-m)·(s/ψ)^m` with `s = X_(n)Y_(m)`.
    pub fn cdf_unequal(&self, psi: f64) -> f64 {
        let s = self.support_start();
        if psi <= s {
            return 0.0;
        }
        let (n, m) = (self.n, self.m);
        let r = s / psi;
        (1.0 + m / (n - m) * r.powf(n) - n / (n - m) * r.powf(m)).clamp(0.0, 1.0)
    }

    /// `1 - (1 + n·ln(ψ/s))·(s/ψ)^n`, the `n = m` limit; uses `n` only.
    pub fn cdf_equal(&self, psi: f64) -> f64 {
        let s = self.support_start();
        if psi <= s {
            return 0.0;
        }
        let n = self.n;
        (1.0 - (1.0 + n * (psi / s).ln()) * (s / psi).powf(n)).clamp(0.0, 1.0)
    }

    pub fn density(&self, psi: f64) -> f64 {
        let s = self.support_start();
        if psi <= s {
            return 0.0;
        }
        let (n, m) = (self.n, self.m);
        let r = s / psi;
        if n == m {
            n * n * (psi / s).ln() * r.powf(n) / psi
        } else {
            n * m / (n - m) * (r.powf(m) - r.powf(n)) / psi
        }
    }

    /// `F(ψ₀ + ε) - F(ψ₀ - ε)`; the CDF is zero below the support, which
    /// clamps the lower edge.
    pub fn ball_prob(&self, psi0: f64, eps: f64) -> Result<f64> {
        check_positive_ball(psi0, eps)?;
        Ok((self.cdf(psi0 + eps) - self.cdf(psi0 - eps)).clamp(0.0, 1.0))
    }
}

impl Posterior for ProductPosterior {
    fn ball_prob(&self, center: f64, eps: f64) -> Result<f64> {
        ProductPosterior::ball_prob(self, center, eps)
    }

    fn density(&self, psi: f64) -> Option<f64> {
        Some(ProductPosterior::density(self, psi))
    }

    fn cdf(&self, psi: f64) -> Option<f64> {
        Some(ProductPosterior::cdf(self, psi))
    }
}

/// `X₁…Xₙ ~ U(0, θ₀)`; the functional is `θ` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSupportModel {
    pub theta0: f64,
    pub n: u32,
}

impl UniformSupportModel {
    pub const TAG: &'static str = "uniform-support";

    pub fn new(theta0: f64, n: u32) -> Result<Self> {
        if !(theta0 > 0.0) || !theta0.is_finite() {
            return Err(domain(format!("theta0 must be positive, got {theta0}")));
        }
        if n == 0 {
            return Err(domain("n must be at least 1"));
        }
        Ok(UniformSupportModel { theta0, n })
    }
}

impl BeliefModel for UniformSupportModel {
    fn tag(&self) -> &'static str {
        Self::TAG
    }

    fn true_value(&self) -> f64 {
        self.theta0
    }

    fn sample_size(&self) -> u32 {
        self.n
    }

    fn radius_limit(&self) -> f64 {
        self.theta0
    }

    fn draw_stats(&self, rng: &mut StreamRng) -> Result<Vec<SufficientStat>> {
        Ok(vec![sample_uniform_max(self.n, self.theta0, rng)?])
    }

    fn posterior(&self, stats: &[SufficientStat], _rng: &mut StreamRng) -> Result<Box<dyn Posterior>> {
        let [stat] = stats else {
            return Err(domain("uniform-support posterior takes exactly one statistic"));
        };
        Ok(Box::new(ParetoPosterior::from_stat(stat)?))
    }
}

/// Independent `U(0, θx₀)` and `U(0, θy₀)` samples; the functional is
/// `ψ = θ_x·θ_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformProductModel {
    pub theta_x0: f64,
    pub theta_y0: f64,
    pub n: u32,
    pub m: u32,
}

impl UniformProductModel {
    pub const TAG: &'static str = "uniform-product";

    pub fn new(theta_x0: f64, theta_y0: f64, n: u32, m: u32) -> Result<Self> {
        for (name, v) in [("theta_x0", theta_x0), ("theta_y0", theta_y0)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        if n == 0 || m == 0 {
            return Err(domain("sample sizes must be at least 1"));
        }
        Ok(UniformProductModel { theta_x0, theta_y0, n, m })
    }
}

impl BeliefModel for UniformProductModel {
    fn tag(&self) -> &'static str {
        Self::TAG
    }

    fn true_value(&self) -> f64 {
        self.theta_x0 * self.theta_y0
    }

    fn sample_size(&self) -> u32 {
        self.n
    }

    fn radius_limit(&self) -> f64 {
        self.true_value()
    }

    fn draw_stats(&self, rng: &mut StreamRng) -> Result<Vec<SufficientStat>> {
        let x = sample_uniform_max(self.n, self.theta_x0, rng)?;
        let y = sample_uniform_max(self.m, self.theta_y0, rng)?;
        Ok(vec![x, y])
    }

    fn posterior(&self, stats: &[SufficientStat], _rng: &mut StreamRng) -> Result<Box<dyn Posterior>> {
        match stats {
            [SufficientStat::UniformMax { x_max, n }, SufficientStat::UniformMax { x_max: y_max, n: m }] => Ok(
                Box::new(ProductPosterior::new(*n as f64, *m as f64, *x_max, *y_max)?),
            ),
            _ => Err(domain("uniform-product posterior takes two sample maxima")),
        }
    }
}

/// Monte Carlo estimate of the false-confidence probability for the product
/// model.
#[allow(clippy::too_many_arguments)]
pub fn product_fct_prob_mc(
    engine: &Engine,
    theta_x0: f64,
    theta_y0: f64,
    n: u32,
    m: u32,
    eps: f64,
    alpha: f64,
    k: u64,
    seed: u64,
) -> Result<ProbeResult> {
    let model = UniformProductModel::new(theta_x0, theta_y0, n, m)?;
    engine.probe(&model, eps, alpha, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeedSpec;

    #[test]
    fn pareto_cdf_examples() {
        let p = ParetoPosterior::new(3.0, 0.9).unwrap();
        assert_eq!(p.cdf(0.9), 0.0);
        assert_eq!(p.cdf(0.5), 0.0);
        assert!((p.cdf(1.3) - (1.0 - (0.9f64 / 1.3).powi(3))).abs() < 1e-12);
        let p = ParetoPosterior::new(1.0, 1.0).unwrap();
        assert_eq!(p.cdf(2.0), 0.5);
    }

    #[test]
    fn pareto_cdf_against_draws() {
        // inverse-CDF draws x_max·U^{-1/n}, independent of `cdf`
        let p = ParetoPosterior::new(3.0, 0.9).unwrap();
        let mut rng = SeedSpec::new(21, 0).rng();
        let k = 200_000;
        let below = (0..k)
            .filter(|_| {
                let u = 1.0 - rand::Rng::random::<f64>(&mut rng);
                0.9 * u.powf(-1.0 / 3.0) <= 1.3
            })
            .count() as f64
            / k as f64;
        let exact = p.cdf(1.3);
        let se = (exact * (1.0 - exact) / k as f64).sqrt();
        assert!((below - exact).abs() < 3.0 * se);
    }

    #[test]
    fn support_ball_examples() {
        let p = ParetoPosterior::new(1.0, 0.5).unwrap();
        assert_eq!(p.ball_prob(1.0, 0.0).unwrap(), 0.0);
        let v = p.ball_prob(1.0, 0.3).unwrap();
        assert!((v - 0.5 * (1.0 / 0.7 - 1.0 / 1.3)).abs() < 1e-10);
        assert!((v - 0.329_67).abs() < 1e-5);
        let p = ParetoPosterior::new(1.0, 0.9).unwrap();
        let v = p.ball_prob(1.0, 0.3).unwrap();
        assert!((v - (1.0 - 0.9 / 1.3)).abs() < 1e-10);
        assert!(p.ball_prob(1.0, 1.0).is_err());
        assert!(p.ball_prob(1.0, -0.1).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(fct_prob_closed_form(1.0, 0.0, 0.5, 4).unwrap(), 1.0);
        assert_eq!(fct_prob_closed_form(1.0, 0.3, 0.5, 1).unwrap(), 1.0);
        let v = fct_prob_closed_form(1.0, 0.05, 0.5, 10).unwrap();
        assert!(v > 0.0 && v < 1.0);
        assert!(fct_prob_closed_form(1.0, 1.0, 0.5, 1).is_err());
        assert!(fct_prob_closed_form(1.0, 0.1, 1.0, 1).is_err());
    }

    /// The product of marginal probabilities as typeset next to the joint
    /// decomposition. It treats overlapping events as independent and does
    /// not equal the sampling probability.
    fn printed_product_form(theta0: f64, eps: f64, alpha: f64, n: f64) -> f64 {
        let a = ((theta0 / (theta0 - eps)).powf(n) - (theta0 / (theta0 + eps)).powf(n)).recip();
        let lower = ((theta0 - eps) / theta0).powf(n);
        let ind = if eps <= theta0 * ((1.0 - alpha).powf(-1.0 / n) - 1.0) { 1.0 } else { 0.0 };
        (alpha * a).min(1.0) * lower + (1.0 - (1.0 - alpha) * ((theta0 + eps) / theta0).powf(n)) * ind * (1.0 - lower)
    }

    #[test]
    fn product_form_disagrees_with_case_analysis() {
        let printed = printed_product_form(1.0, 0.3, 0.5, 1.0);
        assert!((printed - 0.636).abs() < 1e-3);
        assert_eq!(fct_prob_closed_form(1.0, 0.3, 0.5, 1).unwrap(), 1.0);
    }

    #[test]
    fn product_cdf_examples() {
        let p = ProductPosterior::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.cdf(1.0), 0.0);
        let e = std::f64::consts::E;
        assert!((p.cdf(e) - (1.0 - 2.0 / e)).abs() < 1e-12);
        let q = ProductPosterior::new(2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((q.cdf(2.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn product_density_is_cdf_derivative() {
        for (n, m) in [(1.0, 1.0), (3.0, 3.0), (2.0, 5.0), (7.0, 1.5)] {
            let p = ProductPosterior::new(n, m, 0.8, 1.7).unwrap();
            for psi in [1.5, 2.0, 3.3, 8.0] {
                let h = 1e-5;
                let fd = (p.cdf(psi + h) - p.cdf(psi - h)) / (2.0 * h);
                assert!((fd - p.density(psi)).abs() < 1e-6, "n={n} m={m} psi={psi}");
            }
        }
    }

    #[test]
    fn uniform_models_validate() {
        assert!(UniformSupportModel::new(0.0, 1).is_err());
        assert!(UniformSupportModel::new(1.0, 0).is_err());
        assert!(UniformProductModel::new(10.0, -1.0, 1, 1).is_err());
        let m = UniformProductModel::new(10.0, 1.0, 2, 3).unwrap();
        assert_eq!(m.true_value(), 10.0);
    }
}
