//! Gaussian models: the ratio of two means with known noise, the conjugate
//! normal mean, and the coefficient of variation.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engine::{BeliefModel, CriticalRadius, Engine, Posterior, ProbeResult};
use crate::error::{domain, Result};
use crate::numerics::{folded_normal_mean, integrate_with, normal_cdf, normal_pdf, QuadratureRule, QuadratureSpec};
use crate::sampling::{sample_gaussian_mean, sample_gaussian_mean_var, StreamRng, SufficientStat};

/// Tail mass the ratio-density truncation is allowed to drop.
pub const RATIO_TAIL_MASS: f64 = 1e-6;

/// Posterior of `ψ = θ_x/θ_y` with independent flat priors and
/// `θ_x | X ~ N(x̄, σ²/n)`, `θ_y | Y ~ N(ȳ, σ²/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPosterior {
    pub x_bar: f64,
    pub y_bar: f64,
    pub n: u32,
    pub sigma: f64,
    pub rule: QuadratureRule,
    pub tol: f64,
}

impl RatioPosterior {
    pub fn new(x_bar: f64, y_bar: f64, n: u32, sigma: f64) -> Result<Self> {
        if !x_bar.is_finite() || !y_bar.is_finite() {
            return Err(domain("ratio posterior means must be finite"));
        }
        if n == 0 {
            return Err(domain("ratio posterior needs n >= 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(RatioPosterior {
            x_bar,
            y_bar,
            n,
            sigma,
            rule: QuadratureRule::AdaptiveSimpson,
            tol: 1e-8,
        })
    }

    pub fn with_quadrature(mut self, rule: QuadratureRule, tol: f64) -> Self {
        self.rule = rule;
        self.tol = tol;
        self
    }

    /// Marginal posterior density of `ψ`, obtained by integrating the
    /// Jacobian `|γ|` of `(ψ, γ) ↦ (ψγ, γ)` against the conditional normal
    /// law of `γ` given `ψ`; that integral is a folded-normal mean.
    pub fn density(&self, psi: f64) -> f64 {
        let n = self.n as f64;
        let s2 = self.sigma * self.sigma;
        let q = 1.0 + psi * psi;
        let prefactor = (n / (2.0 * PI * s2 * q)).sqrt();
        // (ψx̄ + ȳ)²/(1+ψ²) - x̄² - ȳ² = -(x̄ - ψȳ)²/(1+ψ²)
        let gap = self.x_bar - psi * self.y_bar;
        let exponent = -n / (2.0 * s2) * gap * gap / q;
        let gamma_mean = (psi * self.x_bar + self.y_bar) / q;
        let gamma_sd = self.sigma / (n * q).sqrt();
        let abs_gamma = folded_normal_mean(gamma_mean, gamma_sd).unwrap_or(0.0);
        prefactor * exponent.exp() * abs_gamma
    }

    /// Rough location and width of the main posterior mass, used to place
    /// quadrature breakpoints.
    fn bulk(&self) -> Option<(f64, f64)> {
        if self.y_bar == 0.0 {
            return None;
        }
        let center = self.x_bar / self.y_bar;
        let se = self.sigma / (self.n as f64).sqrt();
        let width = se * (1.0 + center * center).sqrt() / self.y_bar.abs();
        (center.is_finite() && width.is_finite() && width > 0.0).then_some((center, width))
    }

    fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        if let Some((c, w)) = self.bulk() {
            pts.push(c);
            for mult in [1.0, 2.0, 4.0, 8.0] {
                pts.push(c - mult * w);
                pts.push(c + mult * w);
            }
        }
        pts.push(0.0);
        pts.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Integral of the density over `[lo, hi]`, split at the breakpoints.
    pub fn mass_between(&self, lo: f64, hi: f64) -> Result<f64> {
        if lo == hi {
            return Ok(0.0);
        }
        if let QuadratureRule::Riemann { .. } = self.rule {
            let spec = QuadratureSpec::new(lo, hi)?;
            return integrate_with(|x| self.density(x), self.rule, &spec);
        }
        let pts = self.breakpoints(lo, hi);
        let width = hi - lo;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let spec = QuadratureSpec::new(w[0], w[1])?
                .with_tol(self.tol * (w[1] - w[0]) / width)
                .with_panels(8);
            total += integrate_with(|x| self.density(x), self.rule, &spec)?;
        }
        Ok(total)
    }

    /// Half-width `T` around `center` at which `T·(π(c-T) + π(c+T))`, a
    /// bound on the tail mass for the `1/ψ²` tails, drops below `tail`.
    pub fn truncation_half_width(&self, center: f64, tail: f64) -> f64 {
        let mut t = self
            .bulk()
            .map(|(c, w)| (c - center).abs() + 10.0 * w)
            .unwrap_or(1.0)
            .max(1.0);
        while t * (self.density(center - t) + self.density(center + t)) > tail && t < 1e15 {
            t *= 2.0;
        }
        t
    }

    /// Mass over the truncation window; should be 1 up to the dropped tail.
    pub fn total_mass(&self, center: f64) -> Result<f64> {
        let t = self.truncation_half_width(center, RATIO_TAIL_MASS);
        // geometric breakpoints keep panels proportionate to the 1/ψ² decay
        let mut edges = vec![center];
        let mut r = 1.0;
        while r < t {
            edges.push(center - r);
            edges.push(center + r);
            r *= 2.0;
        }
        edges.push(center - t);
        edges.push(center + t);
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut total = 0.0;
        for w in edges.windows(2) {
            total += self.mass_between(w[0], w[1])?;
        }
        Ok(total)
    }

    pub fn ball_prob(&self, psi0: f64, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(domain(format!("ball radius must be nonnegative, got {eps}")));
        }
        Ok(self.mass_between(psi0 - eps, psi0 + eps)?.clamp(0.0, 1.0))
    }
}

impl Posterior for RatioPosterior {
    fn ball_prob(&self, center: f64, eps: f64) -> Result<f64> {
        RatioPosterior::ball_prob(self, center, eps)
    }

    /// Accumulates the two annuli between successive radii, so the sequence
    /// is nondecreasing and each stretch is integrated once.
    fn ball_probs(&self, center: f64, radii: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(radii.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &eps in radii {
            if !(eps >= prev) {
                return Err(domain("radii must be nondecreasing"));
            }
            acc += self.mass_between(center + prev, center + eps)?;
            acc += self.mass_between(center - eps, center - prev)?;
            prev = eps;
            out.push(acc.clamp(0.0, 1.0));
        }
        Ok(out)
    }

    fn density(&self, psi: f64) -> Option<f64> {
        Some(RatioPosterior::density(self, psi))
    }
}

/// `θ | X ~ N(μ_n, τ_n²)` under the prior `θ ~ N(μ, τ²)` with σ² known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugatePosterior {
    pub mu_n: f64,
    pub tau_n2: f64,
}

/// `τ_n² = (1/τ² + n/σ²)⁻¹`, `μ_n = (μ/τ² + n·x̄/σ²)·τ_n²`.
pub fn conjugate_posterior(x_bar: f64, n: u32, sigma2: f64, mu: f64, tau2: f64) -> Result<ConjugatePosterior> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(tau2 > 0.0) || !tau2.is_finite() {
        return Err(domain(format!("prior variance must be positive, got {tau2}")));
    }
    if !x_bar.is_finite() || !mu.is_finite() {
        return Err(domain("means must be finite"));
    }
    let nf = n as f64;
    let tau_n2 = 1.0 / (1.0 / tau2 + nf / sigma2);
    // (μ/τ² + n·x̄/σ²)·τ_n² rewritten as a shrinkage of x̄ towards μ, which
    // returns x̄ exactly when μ = x̄
    let mu_n = x_bar + (mu - x_bar) * (tau_n2 / tau2);
    Ok(ConjugatePosterior { mu_n, tau_n2 })
}

impl ConjugatePosterior {
    pub fn tau_n(&self) -> f64 {
        self.tau_n2.sqrt()
    }

    /// `Φ((θ₀-μ_n)/τ_n + ε/τ_n) - Φ((θ₀-μ_n)/τ_n - ε/τ_n)`.
    pub fn ball_prob(&self, theta0: f64, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(domain(format!("ball radius must be nonnegative, got {eps}")));
        }
        let tau = self.tau_n();
        // the value depends on the offset only through its magnitude; with a
        // nonnegative offset the upper-tail form keeps precision
        let a = ((theta0 - self.mu_n) / tau).abs();
        let e = eps / tau;
        let v = if a - e > 0.0 {
            normal_cdf(-(a - e)) - normal_cdf(-(a + e))
        } else {
            normal_cdf(a + e) - normal_cdf(a - e)
        };
        Ok(v.clamp(0.0, 1.0))
    }
}

impl Posterior for ConjugatePosterior {
    fn ball_prob(&self, center: f64, eps: f64) -> Result<f64> {
        ConjugatePosterior::ball_prob(self, center, eps)
    }

    fn density(&self, psi: f64) -> Option<f64> {
        let tau = self.tau_n();
        Some(normal_pdf((psi - self.mu_n) / tau) / tau)
    }

    fn cdf(&self, psi: f64) -> Option<f64> {
        Some(normal_cdf((psi - self.mu_n) / self.tau_n()))
    }
}

/// Prior on `(θ, σ²)` for the coefficient-of-variation model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefVarPrior {
    /// `π(θ, σ²) ∝ 1/σ²`: `σ² | data ~ InvGamma((n-1)/2, (n-1)s²/2)`.
    #[default]
    InverseVariance,
    /// `π(θ, σ²) ∝ σ⁻³`: `σ² | data ~ InvGamma(n/2, (n-1)s²/2)`.
    Jeffreys,
}

/// Posterior of `ψ = σ/θ`, represented by sorted posterior draws.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVarPosterior {
    draws: Vec<f64>,
}

impl CoefVarPosterior {
    pub fn sample<R: Rng + ?Sized>(stat: &SufficientStat, prior: CoefVarPrior, m_post: usize, rng: &mut R) -> Result<Self> {
        let SufficientStat::GaussianMeanVar { x_bar, s2, n } = *stat else {
            return Err(domain(format!("coefficient-of-variation posterior needs mean and variance, got {stat:?}")));
        };
        if n < 2 {
            return Err(domain("coefficient-of-variation posterior needs n >= 2"));
        }
        if m_post == 0 {
            return Err(domain("m_post must be at least 1"));
        }
        if !(s2 > 0.0) {
            return Err(domain(format!("sample variance must be positive, got {s2}")));
        }
        let nf = n as f64;
        let shape = match prior {
            CoefVarPrior::InverseVariance => 0.5 * (nf - 1.0),
            CoefVarPrior::Jeffreys => 0.5 * nf,
        };
        let rate = 0.5 * (nf - 1.0) * s2;
        let gamma = Gamma::new(shape, 1.0).map_err(|e| domain(format!("posterior gamma: {e}")))?;
        let mut draws = Vec::with_capacity(m_post);
        while draws.len() < m_post {
            let var = rate / gamma.sample(rng);
            let sd = var.sqrt();
            let z: f64 = StandardNormal.sample(rng);
            let theta = x_bar + sd / nf.sqrt() * z;
            if theta.abs() < 1e-300 {
                continue;
            }
            draws.push(sd / theta);
        }
        draws.sort_by(f64::total_cmp);
        Ok(CoefVarPosterior { draws })
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    fn count_within(&self, lo: f64, hi: f64) -> usize {
        let start = self.draws.partition_point(|&x| x < lo);
        let end = self.draws.partition_point(|&x| x <= hi);
        end.saturating_sub(start)
    }

    pub fn ball_prob(&self, center: f64, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(domain(format!("ball radius must be nonnegative, got {eps}")));
        }
        Ok(self.count_within(center - eps, center + eps) as f64 / self.draws.len() as f64)
    }
}

impl Posterior for CoefVarPosterior {
    fn ball_prob(&self, center: f64, eps: f64) -> Result<f64> {
        CoefVarPosterior::ball_prob(self, center, eps)
    }

    /// The in-ball fraction is a step function; the supremum of radii with
    /// fraction at most `α` is an order statistic of the distances.
    fn critical_radius(&self, center: f64, alpha: f64, top: f64, _xtol: f64) -> Result<CriticalRadius> {
        let m = self.draws.len();
        let allowed = (alpha * m as f64 + 1e-9).floor() as usize;
        if allowed >= m {
            return Ok(CriticalRadius { radius: top, capped: true });
        }
        let mut dist: Vec<f64> = self.draws.iter().map(|x| (x - center).abs()).collect();
        let (_, nth, _) = dist.select_nth_unstable_by(allowed, f64::total_cmp);
        let radius = *nth;
        if radius > top {
            Ok(CriticalRadius { radius: top, capped: true })
        } else {
            Ok(CriticalRadius { radius, capped: false })
        }
    }

    fn cdf(&self, psi: f64) -> Option<f64> {
        Some(self.draws.partition_point(|&x| x <= psi) as f64 / self.draws.len() as f64)
    }
}

/// Ratio of two Gaussian means with common known σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRatioModel {
    pub theta_x0: f64,
    pub theta_y0: f64,
    pub sigma: f64,
    pub n: u32,
    pub rule: QuadratureRule,
    pub tol: f64,
}

impl GaussianRatioModel {
    pub const TAG: &'static str = "gaussian-ratio";

    pub fn new(theta_x0: f64, theta_y0: f64, sigma: f64, n: u32) -> Result<Self> {
        if !theta_x0.is_finite() || !theta_y0.is_finite() || theta_y0 == 0.0 {
            return Err(domain("theta_x0 must be finite and theta_y0 finite and nonzero"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("sigma must be positive, got {sigma}")));
        }
        if n == 0 {
            return Err(domain("n must be at least 1"));
        }
        Ok(GaussianRatioModel {
            theta_x0,
            theta_y0,
            sigma,
            n,
            rule: QuadratureRule::AdaptiveSimpson,
            tol: 1e-6,
        })
    }

    pub fn with_quadrature(mut self, rule: QuadratureRule, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(domain(format!("quadrature tolerance must be positive, got {tol}")));
        }
        if let QuadratureRule::Riemann { points: 0 } = rule {
            return Err(domain("Riemann rule needs at least one point"));
        }
        self.rule = rule;
        self.tol = tol;
        Ok(self)
    }
}

impl BeliefModel for GaussianRatioModel {
    fn tag(&self) -> &'static str {
        Self::TAG
    }

    fn true_value(&self) -> f64 {
        self.theta_x0 / self.theta_y0
    }

    fn sample_size(&self) -> u32 {
        self.n
    }

    fn sigma(&self) -> Option<f64> {
        Some(self.sigma)
    }

    fn radius_limit(&self) -> f64 {
        100.0 * self.true_value().abs().max(1.0)
    }

    fn draw_stats(&self, rng: &mut StreamRng) -> Result<Vec<SufficientStat>> {
        let x = sample_gaussian_mean(self.n, self.theta_x0, self.sigma, rng)?;
        let y = sample_gaussian_mean(self.n, self.theta_y0, self.sigma, rng)?;
        Ok(vec![x, y])
    }

    fn posterior(&self, stats: &[SufficientStat], _rng: &mut StreamRng) -> Result<Box<dyn Posterior>> {
        match stats {
            [SufficientStat::GaussianMean { x_bar, n, sigma }, SufficientStat::GaussianMean { x_bar: y_bar, .. }] => {
                Ok(Box::new(
                    RatioPosterior::new(*x_bar, *y_bar, *n, *sigma)?.with_quadrature(self.rule, self.tol),
                ))
            }
            _ => Err(domain("gaussian-ratio posterior takes two sample means")),
        }
    }
}

/// Normal mean with a normal prior and known variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianConjugateModel {
    pub theta0: f64,
    pub sigma2: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
    pub n: u32,
}

impl GaussianConjugateModel {
    pub const TAG: &'static str = "gaussian-conjugate";

    pub fn new(theta0: f64, sigma2: f64, prior_mean: f64, prior_var: f64, n: u32) -> Result<Self> {
        // validates everything but theta0
        conjugate_posterior(0.0, n, sigma2, prior_mean, prior_var)?;
        if !theta0.is_finite() {
            return Err(domain("theta0 must be finite"));
        }
        Ok(GaussianConjugateModel {
            theta0,
            sigma2,
            prior_mean,
            prior_var,
            n,
        })
    }

    fn tau_n(&self) -> f64 {
        (1.0 / (1.0 / self.prior_var + self.n as f64 / self.sigma2)).sqrt()
    }
}

impl BeliefModel for GaussianConjugateModel {
    fn tag(&self) -> &'static str {
        Self::TAG
    }

    fn true_value(&self) -> f64 {
        self.theta0
    }

    fn sample_size(&self) -> u32 {
        self.n
    }

    fn sigma(&self) -> Option<f64> {
        Some(self.sigma2.sqrt())
    }

    fn radius_limit(&self) -> f64 {
        100.0 * self.tau_n()
    }

    fn draw_stats(&self, rng: &mut StreamRng) -> Result<Vec<SufficientStat>> {
        Ok(vec![sample_gaussian_mean(self.n, self.theta0, self.sigma2.sqrt(), rng)?])
    }

    fn posterior(&self, stats: &[SufficientStat], _rng: &mut StreamRng) -> Result<Box<dyn Posterior>> {
        match stats {
            [SufficientStat::GaussianMean { x_bar, n, .. }] => Ok(Box::new(conjugate_posterior(
                *x_bar,
                *n,
                self.sigma2,
                self.prior_mean,
                self.prior_var,
            )?)),
            _ => Err(domain("gaussian-conjugate posterior takes one sample mean")),
        }
    }
}

/// `X₁…Xₙ ~ N(μ₀, σ₀²)` with both unknown; the functional is `ψ = σ/θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefVariationModel {
    pub mu0: f64,
    pub sigma0: f64,
    pub n: u32,
    pub m_post: usize,
    pub prior: CoefVarPrior,
}

impl CoefVariationModel {
    pub const TAG: &'static str = "coef-variation";

    pub fn new(mu0: f64, sigma0: f64, n: u32, m_post: usize, prior: CoefVarPrior) -> Result<Self> {
        if !mu0.is_finite() || mu0 == 0.0 {
            return Err(domain("mu0 must be finite and nonzero"));
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(domain(format!("sigma0 must be positive, got {sigma0}")));
        }
        if n < 2 {
            return Err(domain(format!("coefficient of variation needs n >= 2, got {n}")));
        }
        if m_post == 0 {
            return Err(domain("m_post must be at least 1"));
        }
        Ok(CoefVariationModel {
            mu0,
            sigma0,
            n,
            m_post,
            prior,
        })
    }
}

impl BeliefModel for CoefVariationModel {
    fn tag(&self) -> &'static str {
        Self::TAG
    }

    fn true_value(&self) -> f64 {
        self.sigma0 / self.mu0
    }

    fn sample_size(&self) -> u32 {
        self.n
    }

    fn radius_limit(&self) -> f64 {
        100.0 * self.true_value().abs()
    }

    fn draw_stats(&self, rng: &mut StreamRng) -> Result<Vec<SufficientStat>> {
        Ok(vec![sample_gaussian_mean_var(self.n, self.mu0, self.sigma0, rng)?])
    }

    fn posterior(&self, stats: &[SufficientStat], rng: &mut StreamRng) -> Result<Box<dyn Posterior>> {
        let [stat] = stats else {
            return Err(domain("coef-variation posterior takes one statistic"));
        };
        Ok(Box::new(CoefVarPosterior::sample(stat, self.prior, self.m_post, rng)?))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ratio_fct_prob_mc(
    engine: &Engine,
    theta_x0: f64,
    theta_y0: f64,
    sigma: f64,
    n: u32,
    eps: f64,
    alpha: f64,
    k: u64,
    seed: u64,
) -> Result<ProbeResult> {
    let model = GaussianRatioModel::new(theta_x0, theta_y0, sigma, n)?;
    engine.probe(&model, eps, alpha, k, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn coefvar_fct_probe(
    engine: &Engine,
    mu0: f64,
    sigma0: f64,
    n: u32,
    eps: f64,
    alpha: f64,
    k: u64,
    m_post: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let model = CoefVariationModel::new(mu0, sigma0, n, m_post, CoefVarPrior::default())?;
    engine.probe(&model, eps, alpha, k, seed)
}
