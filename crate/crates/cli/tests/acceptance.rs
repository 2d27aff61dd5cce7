//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so every line shows.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fclab_core::models::{
    fct_prob_closed_form, product_fct_prob_mc, CoefVarPrior, CoefVariationModel,
    GaussianConjugateModel, GaussianRatioModel, ParetoPosterior, ProductPosterior, RatioPosterior,
    UniformSupportModel,
};
use fclab_core::numerics::QuadratureRule;
use fclab_core::sampling::{sample_uniform_max, SeedSpec, SufficientStat};
use fclab_core::Engine;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn binomial_se(p: f64, k: u64) -> f64 {
    (p * (1.0 - p) / k as f64).sqrt()
}

fn engine() -> Engine {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    Engine::new(workers).expect("engine")
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2}s (limit {limit_s}s)"))
}

fn c1_uniform_support() -> Verdict {
    let t = Instant::now();
    let model = UniformSupportModel::new(1.0, 1).unwrap();
    let r = engine().probe(&model, 0.3, 0.5, 100_000, 1).unwrap();
    let (fast, time) = within(t.elapsed(), 5.0);
    let exact = 1.0;
    let matched = (r.p_hat - exact).abs() <= 3.0 * r.mc_se;
    verdict(
        r.p_hat >= 0.8 && matched && fast,
        format!("p_hat={} (>= 0.8, exact {exact} within 3 se={}), {time}", r.p_hat, r.mc_se),
    )
}

fn c2_uniform_product() -> Verdict {
    let t = Instant::now();
    let r = product_fct_prob_mc(&engine(), 10.0, 1.0, 1, 1, 6.0, 0.5, 10_000, 2).unwrap();
    let (fast, time) = within(t.elapsed(), 10.0);
    verdict(r.p_hat >= 0.99 && fast, format!("p_hat={} (>= 0.99), {time}", r.p_hat))
}

fn c3_gaussian_ratio() -> Verdict {
    let t = Instant::now();
    let model = GaussianRatioModel::new(0.1, 0.01, 1.0, 100)
        .unwrap()
        .with_quadrature(QuadratureRule::AdaptiveSimpson, 1e-6)
        .unwrap();
    let r = engine().probe(&model, 4.0, 0.05, 10_000, 3).unwrap();
    let (fast, time) = within(t.elapsed(), 300.0);
    verdict(
        r.p_hat > 0.8 && fast,
        format!("p_hat={} (> 0.8, se={:.4}), {time}", r.p_hat, r.mc_se),
    )
}

fn c4_gaussian_conjugate() -> Verdict {
    let t = Instant::now();
    let engine = engine();
    let ns = [1u32, 3, 5, 10, 20, 50, 100, 200, 500, 1000];
    let eps: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let model = GaussianConjugateModel::new(1.0, 1.0, 0.0, 100.0, n).unwrap();
            engine.solve_epsilon(&model, 0.5, 0.95, 100_000, 4).unwrap().epsilon
        })
        .collect();
    let (fast, time) = within(t.elapsed(), 120.0);
    let at = |n: u32| eps[ns.iter().position(|&m| m == n).unwrap()];
    let argmax = ns[eps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()];
    let in_band = (0.60..=0.70).contains(&at(3));
    let near_three = [1, 3, 5].contains(&argmax);
    let shrinks = at(1000) < at(3);
    verdict(
        in_band && near_three && shrinks && fast,
        format!(
            "eps(3)={:.4} in [0.60, 0.70]: {in_band}; argmax n={argmax} (eps={:.4}) near 3: {near_three}; \
             eps(1000)={:.5} < eps(3): {shrinks}; {time}",
            at(3),
            at(argmax),
            at(1000)
        ),
    )
}

fn c5_coef_variation() -> Verdict {
    let t = Instant::now();
    let engine = engine();
    let ns = [5u32, 10, 20, 50, 100, 200, 500, 1000];
    let eps: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let model = CoefVariationModel::new(1.0, 10.0, n, 1000, CoefVarPrior::default()).unwrap();
            engine.solve_epsilon(&model, 0.5, 0.9, 10_000, 5).unwrap().epsilon
        })
        .collect();
    let (fast, time) = within(t.elapsed(), 300.0);
    let monotone = eps.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = eps.iter().map(|e| format!("{e:.3}")).collect();
    verdict(monotone && fast, format!("eps over n = [{}], nonincreasing: {monotone}; {time}", shown.join(", ")))
}

fn c6_oracles() -> Verdict {
    let engine = engine();
    let k = 100_000;
    let eps = [0.05, 0.15, 0.3, 0.5, 0.8];
    let alphas = [0.05, 0.25, 0.5, 0.75, 0.95];
    let mut worst_closed: f64 = 0.0;
    for n in [1u32, 5, 20] {
        let model = UniformSupportModel::new(1.0, n).unwrap();
        let curves = engine.curves(&model, &eps, &alphas, k, 60 + n as u64).unwrap();
        for (row, &alpha) in curves.iter().zip(&alphas) {
            for r in row {
                let exact = fct_prob_closed_form(1.0, r.epsilon, alpha, n).unwrap();
                let tol = 3.0 * r.mc_se.max(binomial_se(exact, k)).max(1e-12);
                worst_closed = worst_closed.max((r.p_hat - exact).abs() / tol);
            }
        }
    }

    let mut worst_ks: f64 = 0.0;
    for (n, m, x_max, y_max) in [(1.0, 1.0, 1.0, 1.0), (5.0, 20.0, 8.0, 0.9), (20.0, 20.0, 9.7, 0.95)] {
        let post = ProductPosterior::new(n, m, x_max, y_max).unwrap();
        let mut rng = SeedSpec::new(61, 0).rng();
        let mut draws: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let u = 1.0 - rng.random::<f64>();
                let v = 1.0 - rng.random::<f64>();
                x_max * u.powf(-1.0 / n) * y_max * v.powf(-1.0 / m)
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        let total = draws.len() as f64;
        for (i, &x) in draws.iter().enumerate() {
            let f = post.cdf(x);
            worst_ks = worst_ks.max((f - i as f64 / total).abs().max((f - (i + 1) as f64 / total).abs()));
        }
    }

    let mut worst_ratio: f64 = 0.0;
    let draws_n = 200_000u64;
    for (x_bar, y_bar, n) in [(0.1, 0.01, 100u32), (0.15, 0.06, 5), (0.3, 0.1, 20)] {
        let post = RatioPosterior::new(x_bar, y_bar, n, 1.0).unwrap();
        let se = 1.0 / (n as f64).sqrt();
        let mut rng = SeedSpec::new(62, n as u64).rng();
        let draws: Vec<f64> = (0..draws_n)
            .map(|_| {
                let zx: f64 = StandardNormal.sample(&mut rng);
                let zy: f64 = StandardNormal.sample(&mut rng);
                (x_bar + se * zx) / (y_bar + se * zy)
            })
            .collect();
        for eps in [0.5, 2.0, 4.0, 8.0] {
            let q = post.ball_prob(10.0, eps).unwrap();
            let inside = draws.iter().filter(|&&x| (x - 10.0).abs() <= eps).count() as f64 / draws_n as f64;
            let tol = 3.0 * binomial_se(q, draws_n).max(1e-6);
            worst_ratio = worst_ratio.max((inside - q).abs() / tol);
        }
    }
    verdict(
        worst_closed <= 1.0 && worst_ks < 0.005 && worst_ratio <= 1.0,
        format!(
            "closed form worst |diff|/3se={worst_closed:.3}; product KS={worst_ks:.5} (< 0.005); \
             ratio ball worst |diff|/3se={worst_ratio:.3}"
        ),
    )
}

fn c7_normalisation() -> Verdict {
    let mut rng = SeedSpec::new(70, 0).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x_bar = rng.random_range(-1.0..1.0);
        let y_bar = rng.random_range(-1.0..1.0);
        let n = rng.random_range(1..200u32);
        let sigma = rng.random_range(0.1..10.0);
        let post = RatioPosterior::new(x_bar, y_bar, n, sigma).unwrap();
        let mass = post.total_mass(x_bar / y_bar).unwrap();
        worst = worst.max((mass - 1.0).abs());
    }
    verdict(worst <= 1e-4, format!("worst |mass - 1| = {worst:.2e} over 10 configs (<= 1e-4)"))
}

fn c8_branch_continuity() -> Verdict {
    let mut worst: f64 = 0.0;
    for (n, x_max, y_max) in [(1.0, 1.0, 1.0), (3.0, 0.8, 1.7), (20.0, 9.5, 0.9)] {
        let equal = ProductPosterior::new(n, n, x_max, y_max).unwrap();
        let s = equal.support_start();
        for factor in [1.0001, 1.01, 1.3, 2.0, 10.0] {
            let psi = s * factor;
            let target = equal.cdf_equal(psi);
            for rel in [1e-5, 1e-6, 1e-7] {
                for m in [n * (1.0 + rel), n * (1.0 - rel)] {
                    let near = ProductPosterior::new(n, m, x_max, y_max).unwrap().cdf_unequal(psi);
                    worst = worst.max((near - target).abs());
                }
            }
        }
    }
    verdict(worst <= 1e-4, format!("worst gap between branches = {worst:.2e} (<= 1e-4)"))
}

fn c9_probability_matching() -> Verdict {
    let k = 100_000u64;
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [0.05f64, 0.5] {
        for n in [1u32, 10] {
            let covered = (0..k)
                .filter(|&i| {
                    let stat = sample_uniform_max(n, 2.0, &mut SeedSpec::new(90, i).rng()).unwrap();
                    let SufficientStat::UniformMax { x_max, .. } = stat else { unreachable!() };
                    let upper = x_max * alpha.powf(-1.0 / n as f64);
                    let post = ParetoPosterior::from_stat(&stat).unwrap();
                    debug_assert!((post.cdf(upper) - (1.0 - alpha)).abs() < 1e-12);
                    upper >= 2.0
                })
                .count();
            let freq = covered as f64 / k as f64;
            let target = 1.0 - alpha;
            let good = (freq - target).abs() <= 3.0 * binomial_se(target, k);
            ok &= good;
            lines.push(format!("a={alpha} n={n}: {freq:.4}"));
        }
    }
    verdict(ok, format!("coverage vs 1-alpha within 3 se: {}", lines.join("; ")))
}

fn c10_determinism() -> Verdict {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.json");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 2, 8] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fclab"))
            .args(["run", "--no-plot", "--workers", &workers.to_string(), "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env("RUST_LOG", "warn")
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        if !status.success() {
            return verdict(false, format!("run with {workers} workers exited with {status}"));
        }
        outputs.push(std::fs::read(out.join("results.csv")).unwrap());
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    verdict(same, format!("results.csv byte-identical across 1/2/8 workers: {same} ({} bytes)", outputs[0].len()))
}

type Criterion = (u8, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "uniform support probe", c1_uniform_support),
        (2, "uniform product probe", c2_uniform_product),
        (3, "gaussian ratio probe", c3_gaussian_ratio),
        (4, "gaussian conjugate solved epsilon", c4_gaussian_conjugate),
        (5, "coefficient of variation monotone", c5_coef_variation),
        (6, "closed forms vs oracles", c6_oracles),
        (7, "ratio density normalisation", c7_normalisation),
        (8, "product branch continuity", c8_branch_continuity),
        (9, "probability matching coverage", c9_probability_matching),
        (10, "worker-count determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let v = check();
        println!("{} criterion {id} ({name}): {}", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.ok);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
