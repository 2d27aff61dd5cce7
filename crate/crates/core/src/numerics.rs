//! Special functions, one-dimensional quadrature and monotone root finding.
//!
//! Everything here is a pure function of its arguments and can be called
//! from any number of threads.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{domain, Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function `Φ(x)`.
///
/// Evaluated through the complementary error function, so both tails keep
/// full relative precision: `Φ(x) = erfc(-x / √2) / 2`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Mean of `|γ|` for `γ ~ N(m, s²)`.
///
/// Closed form `s·√(2/π)·exp(-m²/2s²) + |m|·erf(|m|/(s√2))`, which is
/// algebraically the same as `… + m·(1 - 2Φ(-m/s))` but exactly symmetric
/// in the sign of `m`.
pub fn folded_normal_mean(m: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(domain(format!("folded normal scale must be positive, got {s}")));
    }
    if !m.is_finite() {
        return Err(domain(format!("folded normal mean must be finite, got {m}")));
    }
    let a = m.abs();
    let z = a / s;
    Ok(s * SQRT_2_OVER_PI * (-0.5 * z * z).exp() + a * libm::erf(z * FRAC_1_SQRT_2))
}

/// Bounds of the window `mean ± 10·sd` used to truncate Gaussian-dominated
/// half-infinite integrals. The discarded tail mass is below 1e-22.
pub fn gaussian_window(mean: f64, sd: f64) -> (f64, f64) {
    (mean - 10.0 * sd, mean + 10.0 * sd)
}

/// How a definite integral is approximated.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Adaptive Simpson with interval halving; the reference rule.
    #[default]
    AdaptiveSimpson,
    /// Fixed midpoint Riemann sum with the given number of cells; kept as an
    /// independent oracle.
    Riemann { points: usize },
}


#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub lo: f64,
    pub hi: f64,
    /// Number of equal panels the interval is cut into before adapting.
    /// More panels make it harder to step over a narrow peak.
    pub initial_panels: usize,
}

impl QuadratureSpec {
    pub const DEFAULT_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_SUBDIVISIONS: usize = 100_000;

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let spec = QuadratureSpec {
            abs_tol: Self::DEFAULT_TOL,
            max_subdivisions: Self::DEFAULT_MAX_SUBDIVISIONS,
            lo,
            hi,
            initial_panels: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels;
        self
    }

    pub fn with_max_subdivisions(mut self, max: usize) -> Self {
        self.max_subdivisions = max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(domain(format!("quadrature tolerance must be positive, got {}", self.abs_tol)));
        }
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(domain(format!(
                "quadrature bounds must be finite, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.lo > self.hi {
            return Err(domain(format!(
                "quadrature bounds out of order: [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.initial_panels == 0 {
            return Err(domain("quadrature needs at least one initial panel"));
        }
        Ok(())
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson quadrature of `f` over `[spec.lo, spec.hi]`.
///
/// The tolerance is shared out in proportion to panel width, and each panel
/// is accepted once its Richardson error estimate `|S₂ - S₁| / 15` is within
/// its share. Exhausting `max_subdivisions` yields [`Error::Accuracy`] with
/// the best estimate attached.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let (lo, hi) = (spec.lo, spec.hi);
    if lo == hi {
        return Ok(0.0);
    }
    let width = hi - lo;
    let panels = spec.initial_panels;
    let mut stack: Vec<Panel> = Vec::with_capacity(64);
    // push right-to-left so panels are consumed left-to-right
    for i in (0..panels).rev() {
        let a = lo + width * (i as f64) / (panels as f64);
        let b = if i + 1 == panels {
            hi
        } else {
            lo + width * ((i + 1) as f64) / (panels as f64)
        };
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        stack.push(Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole: simpson(a, b, fa, fm, fb),
            tol: spec.abs_tol * (b - a) / width,
        });
    }

    let mut total = 0.0;
    let mut leftover = 0.0;
    let mut splits = 0usize;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if !delta.is_finite() {
            return Err(domain(format!("integrand is not finite on [{}, {}]", p.a, p.b)));
        }
        let tiny = (p.b - p.a) <= 4.0 * f64::EPSILON * p.a.abs().max(p.b.abs()).max(1.0);
        if delta.abs() <= 15.0 * p.tol || tiny {
            total += left + right + delta / 15.0;
            continue;
        }
        if splits >= spec.max_subdivisions {
            total += left + right + delta / 15.0;
            leftover += delta.abs() / 15.0;
            continue;
        }
        splits += 1;
        let half = 0.5 * p.tol;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: half,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: half,
        });
    }
    if leftover > spec.abs_tol {
        return Err(Error::Accuracy {
            estimate: total,
            error_bound: leftover,
        });
    }
    Ok(total)
}

/// Midpoint Riemann sum with `points` equal cells.
pub fn riemann_sum<F>(f: F, lo: f64, hi: f64, points: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if points == 0 {
        return Err(domain("Riemann sum needs at least one cell"));
    }
    if !(lo <= hi) {
        return Err(domain(format!("Riemann bounds out of order: [{lo}, {hi}]")));
    }
    let h = (hi - lo) / points as f64;
    let sum: f64 = (0..points).map(|i| f(lo + (i as f64 + 0.5) * h)).sum();
    Ok(sum * h)
}

/// Integrate with whichever rule is configured. For the adaptive rule the
/// spec fields apply; for the Riemann rule only the bounds are used.
pub fn integrate_with<F>(f: F, rule: QuadratureRule, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    match rule {
        QuadratureRule::AdaptiveSimpson => integrate(f, spec),
        QuadratureRule::Riemann { points } => {
            spec.validate()?;
            riemann_sum(f, spec.lo, spec.hi, points)
        }
    }
}

/// Search interval for [`bisect_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
            return Err(domain(format!("invalid bracket [{lo}, {hi}]")));
        }
        Ok(Bracket { lo, hi })
    }
}

/// Bisection for a monotone (either direction) `f` on `bracket`.
///
/// Returns a point within `xtol` of the boundary between the region where
/// `f` has not yet passed `target` and the region where it has. For a
/// nondecreasing `f` that is `sup{x : f(x) <= target}`; a jump across
/// `target` is located to within `xtol` just like a continuous crossing.
pub fn bisect_monotone<F>(f: F, target: f64, bracket: Bracket, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(xtol > 0.0) {
        return Err(domain(format!("xtol must be positive, got {xtol}")));
    }
    let Bracket { mut lo, mut hi } = bracket;
    let (f_lo, f_hi) = (f(lo), f(hi));
    let increasing = f_lo <= f_hi;
    let (min, max) = if increasing { (f_lo, f_hi) } else { (f_hi, f_lo) };
    if !(min <= target && target <= max) {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo,
            f_hi,
            target,
        });
    }
    let before = |v: f64| if increasing { v <= target } else { v >= target };
    if before(f_hi) {
        return Ok(hi);
    }
    while hi - lo > 2.0 * xtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if before(f(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Trapezoid rule on tabulated values. Used for normalisation checks of
/// tabulated densities.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
