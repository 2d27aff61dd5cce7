//! Built-in experiment plans, one per reproduced figure.

use fclab_core::numerics::QuadratureRule;
use fclab_core::ModelParams;

use crate::config::{ExperimentPlan, Grid, PlanKind, SnapshotPlan};
use crate::error::CliError;

pub const FIGURES: std::ops::RangeInclusive<u8> = 2..=9;

/// Seed used by every preset unless overridden.
pub const PRESET_SEED: u64 = 20_190_601;

fn steps(count: usize, step: f64) -> Grid {
    // i·step as a quotient keeps grid points like 0.3 exact
    let per_unit = (1.0 / step).round();
    Grid::List((0..count).map(|i| i as f64 / per_unit).collect())
}

fn unit_grid() -> Grid {
    Grid::List((1..20).map(|i| i as f64 / 20.0).collect())
}

fn base(model: &str, params: ModelParams, kind: PlanKind, n: Vec<u32>) -> ExperimentPlan {
    ExperimentPlan {
        model: model.into(),
        params,
        kind,
        n,
        sigma: None,
        eps: None,
        alpha: vec![0.5],
        p: None,
        k: 100_000,
        m_post: 1000,
        seed: PRESET_SEED,
        snapshots: None,
        out: None,
    }
}

fn ratio_params() -> ModelParams {
    ModelParams {
        theta_x0: Some(0.1),
        theta_y0: Some(0.01),
        quadrature: Some(QuadratureRule::AdaptiveSimpson),
        quad_tol: Some(1e-6),
        ..Default::default()
    }
}

fn conjugate_params() -> ModelParams {
    ModelParams {
        theta0: Some(1.0),
        sigma2: Some(1.0),
        prior_mean: Some(0.0),
        prior_var: Some(100.0),
        ..Default::default()
    }
}

pub fn figure(id: u8) -> Result<ExperimentPlan, CliError> {
    let plan = match id {
        2 => ExperimentPlan {
            eps: Some(steps(96, 0.01)),
            snapshots: Some(SnapshotPlan {
                count: 4,
                n: vec![1, 5, 20],
                psi: Grid::Linspace { from: 0.0, to: 3.0, count: 601 },
                epsilon: 0.3,
            }),
            ..base(
                "uniform-support",
                ModelParams { theta0: Some(1.0), ..Default::default() },
                PlanKind::Curve,
                vec![1, 5, 20, 100],
            )
        },
        3 => ExperimentPlan {
            eps: Some(steps(100, 0.1)),
            snapshots: Some(SnapshotPlan {
                count: 4,
                n: vec![1, 5, 20],
                psi: Grid::Linspace { from: 0.0, to: 40.0, count: 801 },
                epsilon: 6.0,
            }),
            ..base(
                "uniform-product",
                ModelParams { theta_x0: Some(10.0), theta_y0: Some(1.0), ..Default::default() },
                PlanKind::Curve,
                vec![1, 5, 20, 100],
            )
        },
        4 | 5 => ExperimentPlan {
            sigma: Some(vec![0.1, 1.0, 10.0]),
            eps: Some(steps(21, 0.5)),
            alpha: vec![if id == 4 { 0.5 } else { 0.05 }],
            k: 10_000,
            ..base("gaussian-ratio", ratio_params(), PlanKind::Curve, vec![1, 5, 20, 100])
        },
        6 => ExperimentPlan {
            sigma: Some(vec![1.0]),
            k: 10_000,
            snapshots: Some(SnapshotPlan {
                count: 5,
                n: vec![5, 20, 100],
                psi: Grid::Linspace { from: -40.0, to: 60.0, count: 2001 },
                epsilon: 4.0,
            }),
            ..base("gaussian-ratio", ratio_params(), PlanKind::Snapshots, vec![])
        },
        7 => ExperimentPlan {
            alpha: match unit_grid() {
                Grid::List(v) => v,
                Grid::Linspace { .. } => unreachable!(),
            },
            p: Some(unit_grid()),
            ..base("gaussian-conjugate", conjugate_params(), PlanKind::Contour, vec![3, 20, 100])
        },
        8 => ExperimentPlan {
            p: Some(Grid::List(vec![0.95])),
            ..base(
                "gaussian-conjugate",
                conjugate_params(),
                PlanKind::Solve,
                vec![1, 3, 5, 10, 20, 50, 100, 200, 500, 1000],
            )
        },
        9 => ExperimentPlan {
            p: Some(Grid::List(vec![0.9])),
            k: 10_000,
            ..base(
                "coef-variation",
                ModelParams { mu0: Some(1.0), sigma0: Some(10.0), ..Default::default() },
                PlanKind::Solve,
                vec![5, 10, 20, 50, 100, 200, 500, 1000],
            )
        },
        other => {
            return Err(CliError::Config(format!(
                "figure: no preset for figure {other}; choose {}..={}",
                FIGURES.start(),
                FIGURES.end()
            )))
        }
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fclab_core::ModelRegistry;

    #[test]
    fn every_preset_validates() {
        let reg = ModelRegistry::with_builtin();
        for id in FIGURES {
            figure(id).unwrap().validate(&reg).unwrap_or_else(|e| panic!("figure {id}: {e}"));
        }
        assert!(figure(1).is_err());
        assert!(figure(10).is_err());
    }

    #[test]
    fn grids_hit_exact_values() {
        let eps = figure(2).unwrap().eps_values();
        assert_eq!(eps.len(), 96);
        assert_eq!(eps[30], 0.3);
        assert_eq!(*eps.last().unwrap(), 0.95);
        let eps = figure(3).unwrap().eps_values();
        assert_eq!(eps[60], 6.0);
        assert_eq!(*eps.last().unwrap(), 9.9);
        assert_eq!(*figure(4).unwrap().eps_values().last().unwrap(), 10.0);
        let p7 = figure(7).unwrap();
        assert!(p7.alpha.contains(&0.5) && p7.p_values().contains(&0.95));
    }
}
