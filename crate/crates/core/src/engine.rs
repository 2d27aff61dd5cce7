//! Model-agnostic false-confidence probes.
//!
//! A probe draws `k` independent data sets under the true parameter, forms
//! the posterior for each, and counts how often the posterior puts belief at
//! most `α` on the ball `[ψ₀ - ε, ψ₀ + ε]` around the truth; equivalently,
//! belief at least `1 - α` on the complement, a set that excludes `ψ₀`.
//!
//! Replicate `i` always uses stream `i` of the master seed, so every result
//! here is a pure function of (model, arguments, seed) and does not depend
//! on the number of worker threads.

use std::cell::Cell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{bisect_monotone, Bracket};
use crate::sampling::{SeedSpec, StreamRng, SufficientStat};

/// Result of solving for the largest ball radius a posterior keeps below
/// the belief threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRadius {
    pub radius: f64,
    /// The ball probability never reached the threshold inside the search
    /// bracket; `radius` is the bracket top.
    pub capped: bool,
}

/// A posterior for the scalar functional of interest, as seen by the probes.
pub trait Posterior: Send {
    /// Posterior probability of `[center - eps, center + eps]`.
    fn ball_prob(&self, center: f64, eps: f64) -> Result<f64>;

    /// Ball probabilities for an increasing radius grid.
    fn ball_probs(&self, center: f64, radii: &[f64]) -> Result<Vec<f64>> {
        radii.iter().map(|&e| self.ball_prob(center, e)).collect()
    }

    /// `sup{ε ∈ [0, top] : ball_prob(center, ε) <= alpha}`, located to
    /// within `xtol`. The default bisects on [`Posterior::ball_prob`].
    fn critical_radius(&self, center: f64, alpha: f64, top: f64, xtol: f64) -> Result<CriticalRadius> {
        if self.ball_prob(center, top)? <= alpha {
            return Ok(CriticalRadius {
                radius: top,
                capped: true,
            });
        }
        let failure: Cell<Option<Error>> = Cell::new(None);
        let f = |eps: f64| match self.ball_prob(center, eps) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        };
        let radius = bisect_monotone(f, alpha, Bracket::new(0.0, top)?, xtol)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(CriticalRadius { radius, capped: false })
    }

    /// Posterior density, where one is available in closed form.
    fn density(&self, _psi: f64) -> Option<f64> {
        None
    }

    /// Posterior distribution function, where available.
    fn cdf(&self, _psi: f64) -> Option<f64> {
        None
    }
}

/// A sampling model together with the posterior it induces.
///
/// Implementations must be shareable read-only across worker threads.
pub trait BeliefModel: Send + Sync + std::fmt::Debug {
    fn tag(&self) -> &'static str;

    /// True value `ψ₀` of the functional of interest.
    fn true_value(&self) -> f64;

    fn sample_size(&self) -> u32;

    /// Known noise level, for models that have one.
    fn sigma(&self) -> Option<f64> {
        None
    }

    /// Largest radius the probes may use; also the top of the bracket when
    /// solving for critical radii.
    fn radius_limit(&self) -> f64;

    /// Draw the sufficient statistics of one data set under the true
    /// parameter.
    fn draw_stats(&self, rng: &mut StreamRng) -> Result<Vec<SufficientStat>>;

    /// Posterior given the statistics. `rng` continues the replicate's
    /// stream, for models whose posterior is represented by draws.
    fn posterior(&self, stats: &[SufficientStat], rng: &mut StreamRng) -> Result<Box<dyn Posterior>>;

    fn replicate(&self, seed: SeedSpec) -> Result<Box<dyn Posterior>> {
        let mut rng = seed.rng();
        let stats = self.draw_stats(&mut rng)?;
        self.posterior(&stats, &mut rng)
    }
}

/// The interval `[center - radius, center + radius]`. Its complement is the
/// set that excludes the true value yet may carry most of the belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBall {
    pub center: f64,
    pub radius: f64,
}

impl EpsilonBall {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(domain(format!("ball center must be finite, got {center}")));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(domain(format!("ball radius must be finite and nonnegative, got {radius}")));
        }
        Ok(EpsilonBall { center, radius })
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.radius
    }

    /// Belief assigned to the complement, by additivity.
    pub fn complement_belief(ball_prob: f64) -> f64 {
        1.0 - ball_prob
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub model: String,
    pub epsilon: f64,
    pub alpha: f64,
    pub p_hat: f64,
    pub mc_se: f64,
    pub k: u64,
    pub seed: u64,
}

impl ProbeResult {
    fn from_count(model: &str, epsilon: f64, alpha: f64, hits: u64, k: u64, seed: u64) -> Self {
        let p_hat = hits as f64 / k as f64;
        ProbeResult {
            model: model.to_string(),
            epsilon,
            alpha,
            p_hat,
            mc_se: (p_hat * (1.0 - p_hat) / k as f64).sqrt(),
            k,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSolution {
    pub model: String,
    pub alpha: f64,
    pub p: f64,
    pub epsilon: f64,
    pub k: u64,
    pub seed: u64,
    /// Replicates whose critical radius hit the bracket top.
    pub capped: u64,
}

/// `ε(α, p)` on a grid; `epsilon[i][j]` belongs to `alphas[i]`, `ps[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub model: String,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    pub epsilon: Vec<Vec<f64>>,
    pub capped: Vec<u64>,
    pub k: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub replicate: u64,
    pub density: Option<Vec<f64>>,
    pub cdf: Option<Vec<f64>>,
}

/// Critical radii of `k` replicates, in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSample {
    pub radii: Vec<f64>,
    pub capped: u64,
}

impl RadiusSample {
    /// Largest `ε` with `#{i : ε_i* >= ε} >= p·k`, i.e. the empirical
    /// `(1 - p)`-quantile of the critical radii taken from below.
    pub fn quantile_for(&self, p: f64) -> f64 {
        let mut sorted = self.radii.clone();
        sorted.sort_by(f64::total_cmp);
        quantile_sorted(&sorted, p)
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let k = sorted.len();
    // the 1e-9 guard keeps p·k that is integral in exact arithmetic from
    // rounding up past it
    let need = ((p * k as f64) - 1e-9).ceil().clamp(1.0, k as f64) as usize;
    sorted[k - need]
}

pub struct Engine {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("workers", &self.workers).finish()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        return Err(domain("replicate count k must be at least 1"));
    }
    Ok(())
}

fn check_radii(model: &dyn BeliefModel, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(domain("epsilon grid must be nonempty"));
    }
    let limit = model.radius_limit();
    for w in radii.windows(2) {
        if !(w[0] < w[1]) {
            return Err(domain(format!("epsilon grid must be strictly increasing at {} -> {}", w[0], w[1])));
        }
    }
    for &e in radii {
        if !(e >= 0.0) || !e.is_finite() {
            return Err(domain(format!("epsilon must be finite and nonnegative, got {e}")));
        }
        if e >= limit {
            return Err(domain(format!(
                "epsilon {e} is not below the radius limit {limit} of model `{}`",
                model.tag()
            )));
        }
    }
    Ok(())
}

fn strictly_increasing_probs(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(domain(format!("{name} grid must be nonempty")));
    }
    for &x in xs {
        check_alpha(x).map_err(|_| domain(format!("{name} values must lie in (0, 1), got {x}")))?;
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

impl Engine {
    pub fn new(workers: usize) -> Result<Self> {
        let workers = workers.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| domain(format!("cannot start worker pool: {e}")))?;
        Ok(Engine { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Evaluate `f` on every replicate, in parallel, returning results in
    /// replicate order. The first failing replicate (lowest index) wins.
    fn map_replicates<T, F>(&self, model: &dyn BeliefModel, k: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let results: Vec<Result<T>> = self
            .pool
            .install(|| (0..k).into_par_iter().map(&f).collect());
        results
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.map_err(|e| Error::Replicate {
                    index: i as u64,
                    model: model.tag().to_string(),
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Estimate `p = P(ball_prob <= α)` at a single radius.
    pub fn probe(&self, model: &dyn BeliefModel, eps: f64, alpha: f64, k: u64, seed: u64) -> Result<ProbeResult> {
        let mut curve = self.curve(model, &[eps], alpha, k, seed)?;
        Ok(curve.pop().expect("one grid point"))
    }

    /// `p̂(ε)` over an increasing radius grid from one shared replicate set.
    pub fn curve(&self, model: &dyn BeliefModel, radii: &[f64], alpha: f64, k: u64, seed: u64) -> Result<Vec<ProbeResult>> {
        let mut all = self.curves(model, radii, &[alpha], k, seed)?;
        Ok(all.pop().expect("one alpha"))
    }

    /// Curves for several thresholds at once; `result[a][j]` belongs to
    /// `alphas[a]` and `radii[j]`.
    ///
    /// A replicate counts at `ε_j` only if its ball probability stays at or
    /// below `α` for every grid radius up to `ε_j`. Ball probabilities are
    /// nondecreasing in the radius, so this is the same event, and it makes
    /// each curve nonincreasing even under rounding.
    pub fn curves(
        &self,
        model: &dyn BeliefModel,
        radii: &[f64],
        alphas: &[f64],
        k: u64,
        seed: u64,
    ) -> Result<Vec<Vec<ProbeResult>>> {
        check_k(k)?;
        check_radii(model, radii)?;
        if alphas.is_empty() {
            return Err(domain("alpha list must be nonempty"));
        }
        for &a in alphas {
            check_alpha(a)?;
        }
        let center = model.true_value();
        // per replicate and alpha: number of leading grid radii satisfying the event
        let prefixes = self.map_replicates(model, k, |i| {
            let post = model.replicate(SeedSpec::new(seed, i))?;
            let probs = post.ball_probs(center, radii)?;
            Ok(alphas
                .iter()
                .map(|&a| probs.iter().take_while(|&&b| b <= a).count())
                .collect::<Vec<usize>>())
        })?;
        let mut out = Vec::with_capacity(alphas.len());
        for (ai, &alpha) in alphas.iter().enumerate() {
            let mut hits = vec![0u64; radii.len() + 1];
            for pre in &prefixes {
                hits[pre[ai]] += 1;
            }
            // hits at radius j = replicates whose prefix length exceeds j
            let mut row = Vec::with_capacity(radii.len());
            let mut remaining = k;
            for (j, &eps) in radii.iter().enumerate() {
                remaining -= hits[j];
                row.push(ProbeResult::from_count(model.tag(), eps, alpha, remaining, k, seed));
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Critical radius `ε_i*` of every replicate at threshold `alpha`.
    pub fn critical_radii(&self, model: &dyn BeliefModel, alpha: f64, k: u64, seed: u64) -> Result<RadiusSample> {
        let mut all = self.critical_radii_multi(model, &[alpha], k, seed)?;
        Ok(all.pop().expect("one alpha"))
    }

    fn critical_radii_multi(&self, model: &dyn BeliefModel, alphas: &[f64], k: u64, seed: u64) -> Result<Vec<RadiusSample>> {
        check_k(k)?;
        for &a in alphas {
            check_alpha(a)?;
        }
        let center = model.true_value();
        let top = model.radius_limit() * (1.0 - 1e-12);
        let xtol = top * 1e-11;
        let per_rep = self.map_replicates(model, k, |i| {
            let post = model.replicate(SeedSpec::new(seed, i))?;
            alphas
                .iter()
                .map(|&a| post.critical_radius(center, a, top, xtol))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok((0..alphas.len())
            .map(|ai| RadiusSample {
                radii: per_rep.iter().map(|r| r[ai].radius).collect(),
                capped: per_rep.iter().filter(|r| r[ai].capped).count() as u64,
            })
            .collect())
    }

    /// Largest `ε` such that the estimated probability of a ball belief at
    /// most `α` is still at least `p`.
    pub fn solve_epsilon(&self, model: &dyn BeliefModel, alpha: f64, p: f64, k: u64, seed: u64) -> Result<EpsilonSolution> {
        check_alpha(p).map_err(|_| domain(format!("p must lie in (0, 1), got {p}")))?;
        let sample = self.critical_radii(model, alpha, k, seed)?;
        Ok(EpsilonSolution {
            model: model.tag().to_string(),
            alpha,
            p,
            epsilon: sample.quantile_for(p),
            k,
            seed,
            capped: sample.capped,
        })
    }

    /// `ε(α, p)` for every cell, from one replicate set shared by the whole
    /// grid.
    pub fn contour_grid(&self, model: &dyn BeliefModel, alphas: &[f64], ps: &[f64], k: u64, seed: u64) -> Result<ContourGrid> {
        strictly_increasing_probs("alpha", alphas)?;
        strictly_increasing_probs("p", ps)?;
        let samples = self.critical_radii_multi(model, alphas, k, seed)?;
        let mut epsilon = Vec::with_capacity(alphas.len());
        let mut capped = Vec::with_capacity(alphas.len());
        for s in samples {
            let mut sorted = s.radii;
            sorted.sort_by(f64::total_cmp);
            epsilon.push(ps.iter().map(|&p| quantile_sorted(&sorted, p)).collect());
            capped.push(s.capped);
        }
        Ok(ContourGrid {
            model: model.tag().to_string(),
            alphas: alphas.to_vec(),
            ps: ps.to_vec(),
            epsilon,
            capped,
            k,
            seed,
        })
    }

    /// Tabulate the posterior of `count` independent replicates on `grid`.
    pub fn posterior_snapshots(&self, model: &dyn BeliefModel, count: u64, seed: u64, grid: &[f64]) -> Result<Vec<Snapshot>> {
        if count == 0 {
            return Err(domain("snapshot count must be at least 1"));
        }
        if grid.is_empty() {
            return Err(domain("snapshot grid must be nonempty"));
        }
        self.map_replicates(model, count, |i| {
            let post = model.replicate(SeedSpec::new(seed, i))?;
            let density: Option<Vec<f64>> = grid.iter().map(|&x| post.density(x)).collect();
            let cdf: Option<Vec<f64>> = grid.iter().map(|&x| post.cdf(x)).collect();
            Ok(Snapshot {
                replicate: i,
                density,
                cdf,
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_matches_definition() {
        let s = RadiusSample {
            radii: vec![5.0, 1.0, 4.0, 2.0, 3.0],
            capped: 0,
        };
        // p̂(ε) = #{ε_i >= ε}/5; largest ε with p̂ >= p
        assert_eq!(s.quantile_for(0.2), 5.0);
        assert_eq!(s.quantile_for(0.4), 4.0);
        assert_eq!(s.quantile_for(0.41), 3.0);
        assert_eq!(s.quantile_for(1e-9), 5.0);
        assert_eq!(s.quantile_for(0.999), 1.0);
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let eps = s.quantile_for(p);
            let at = s.radii.iter().filter(|&&r| r >= eps).count() as f64 / 5.0;
            assert!(at >= p);
            let above = s.radii.iter().filter(|&&r| r > eps).count() as f64 / 5.0;
            assert!(above < p);
        }
    }

    #[test]
    fn quantile_is_exact_for_integral_pk() {
        let radii: Vec<f64> = (0..100_000).map(|i| i as f64).collect();
        let s = RadiusSample { radii, capped: 0 };
        // exactly 95_000 radii are >= 5000
        assert_eq!(s.quantile_for(0.95), 5000.0);
    }

    #[test]
    fn ball_rejects_negative_radius() {
        assert!(EpsilonBall::new(1.0, -0.1).is_err());
        let b = EpsilonBall::new(10.0, 4.0).unwrap();
        assert!(b.contains(6.0) && b.contains(14.0) && !b.contains(14.5));
    }
}
