mod common;

use common::ks_distance;
use fclab_core::models::UniformSupportModel;
use fclab_core::sampling::{sample_uniform_max, SeedSpec, SufficientStat};
use fclab_core::Engine;
use rand::Rng;

fn max_of(stat: SufficientStat) -> f64 {
    match stat {
        SufficientStat::UniformMax { x_max, .. } => x_max,
        other => panic!("unexpected statistic {other:?}"),
    }
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let k = 100_000u64;
    let pairs: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let a: f64 = SeedSpec::new(17, 2 * i).rng().random();
            let b: f64 = SeedSpec::new(17, 2 * i + 1).rng().random();
            (a, b)
        })
        .collect();
    let n = k as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a / n, y + b / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    let r = sab / (saa * sbb).sqrt();
    assert!(r.abs() < 0.01, "r = {r}");

    // same stream id under neighbouring master seeds
    let r2: Vec<(f64, f64)> = (0..k)
        .map(|i| (SeedSpec::new(1, i).rng().random(), SeedSpec::new(2, i).rng().random()))
        .collect();
    let (ma, mb) = r2.iter().fold((0.0, 0.0), |(x, y), (a, b)| (x + a / n, y + b / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in &r2 {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    assert!((sab / (saa * sbb).sqrt()).abs() < 0.01);
}

#[test]
fn uniform_max_follows_beta_n_1() {
    // 1% critical value of the one-sample KS statistic, asymptotic form
    let critical = 1.628 / (10_000f64).sqrt();
    for n in [1u32, 5, 20] {
        let mut xs: Vec<f64> = (0..10_000)
            .map(|i| max_of(sample_uniform_max(n, 3.0, &mut SeedSpec::new(99, i).rng()).unwrap()) / 3.0)
            .collect();
        xs.sort_by(f64::total_cmp);
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0).powi(n as i32));
        assert!(d < critical, "n={n}: D = {d}");
    }
}

#[test]
fn consumption_order_does_not_matter() {
    let draw = |i: u64| max_of(sample_uniform_max(4, 1.0, &mut SeedSpec::new(5, i).rng()).unwrap());
    let forward: Vec<f64> = (0..1000).map(draw).collect();
    let mut backward: Vec<f64> = (0..1000).rev().map(draw).collect();
    backward.reverse();
    assert_eq!(forward, backward);
    let mut interleaved = vec![0.0; 1000];
    for i in (0..1000).step_by(2).chain((1..1000).step_by(2)) {
        interleaved[i as usize] = draw(i);
    }
    assert_eq!(forward, interleaved);

    let model = UniformSupportModel::new(1.0, 4).unwrap();
    let grid = [0.05, 0.1, 0.2, 0.4];
    let a = Engine::new(1).unwrap().curve(&model, &grid, 0.3, 20_000, 5).unwrap();
    let b = Engine::new(7).unwrap().curve(&model, &grid, 0.3, 20_000, 5).unwrap();
    assert_eq!(a, b);
}
