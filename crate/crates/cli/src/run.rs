//! Executing a plan and writing its files.

use std::path::{Path, PathBuf};

use fclab_core::{BeliefModel, Engine, ModelRegistry};
use serde::Serialize;

use crate::config::{ExperimentPlan, PlanKind};
use crate::error::{io_err, CliError};
use crate::plot::{self, PlotKind};
use crate::table::{CurveRow, ResultTable, SnapshotRow, SolveRow};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    pub plot: bool,
    /// Figure preset the plan came from; names the plot file.
    pub figure: Option<u8>,
}

/// Replicates whose critical radius hit the search bracket top.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CappedCount {
    pub n: u32,
    pub alpha: f64,
    pub capped: u64,
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: ResultTable,
    /// Extra snapshot table for curve plans that request one.
    pub snapshots: Option<ResultTable>,
    pub capped: Vec<CappedCount>,
}

#[derive(Debug, Clone, Serialize)]
struct Meta<'a> {
    tool: &'static str,
    config: &'a ExperimentPlan,
    config_hash: String,
    seed: u64,
    k: u64,
    figure: Option<u8>,
    rows: usize,
    files: Vec<String>,
    capped: &'a [CappedCount],
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub results: PathBuf,
    pub meta: PathBuf,
    pub files: Vec<PathBuf>,
    pub outcome: Outcome,
}

fn build(
    registry: &ModelRegistry,
    plan: &ExperimentPlan,
    n: u32,
    sigma: Option<f64>,
) -> Result<Box<dyn BeliefModel>, CliError> {
    registry
        .build(&plan.model, &plan.params, &plan.setup(n, sigma))
        .map_err(|e| CliError::Config(format!("params: {e}")))
}

fn snapshot_rows(
    engine: &Engine,
    registry: &ModelRegistry,
    plan: &ExperimentPlan,
) -> Result<Option<ResultTable>, CliError> {
    let Some(spec) = &plan.snapshots else {
        return Ok(None);
    };
    let grid = spec.psi.values();
    let mut rows = Vec::new();
    for &n in &spec.n {
        for sigma in plan.sigma_values() {
            let model = build(registry, plan, n, sigma)?;
            log::info!("snapshots: n={n} sigma={sigma:?}");
            for snap in engine.posterior_snapshots(model.as_ref(), spec.count, plan.seed, &grid)? {
                for (j, &psi) in grid.iter().enumerate() {
                    rows.push(SnapshotRow {
                        model: plan.model.clone(),
                        n,
                        sigma: model.sigma(),
                        replicate: snap.replicate,
                        psi,
                        density: snap.density.as_ref().map(|d| d[j]),
                        cdf: snap.cdf.as_ref().map(|c| c[j]),
                        psi0: model.true_value(),
                        epsilon: spec.epsilon,
                    });
                }
            }
        }
    }
    Ok(Some(ResultTable::Snapshots(rows)))
}

/// Run every computation in a validated plan.
pub fn execute(plan: &ExperimentPlan, registry: &ModelRegistry, engine: &Engine) -> Result<Outcome, CliError> {
    plan.validate(registry)?;
    let mut capped = Vec::new();
    let table = match plan.kind {
        PlanKind::Curve => {
            let eps = plan.eps_values();
            let mut rows = Vec::new();
            for &n in &plan.n {
                for sigma in plan.sigma_values() {
                    let model = build(registry, plan, n, sigma)?;
                    log::info!("curve: model={} n={n} sigma={sigma:?} k={}", plan.model, plan.k);
                    let curves = engine.curves(model.as_ref(), &eps, &plan.alpha, plan.k, plan.seed)?;
                    for (curve, &alpha) in curves.iter().zip(&plan.alpha) {
                        rows.extend(curve.iter().map(|r| CurveRow {
                            model: plan.model.clone(),
                            n,
                            sigma: model.sigma(),
                            alpha,
                            epsilon: r.epsilon,
                            p_hat: r.p_hat,
                            mc_se: r.mc_se,
                            k: r.k,
                            seed: r.seed,
                        }));
                    }
                }
            }
            ResultTable::Curve(rows)
        }
        PlanKind::Solve | PlanKind::Contour => {
            let ps = plan.p_values();
            let sigma = plan.sigma_values()[0];
            let mut rows = Vec::new();
            for &n in &plan.n {
                let model = build(registry, plan, n, sigma)?;
                log::info!("solve: model={} n={n} k={}", plan.model, plan.k);
                let grid = engine.contour_grid(model.as_ref(), &plan.alpha, &ps, plan.k, plan.seed)?;
                for (i, &alpha) in grid.alphas.iter().enumerate() {
                    capped.push(CappedCount {
                        n,
                        alpha,
                        capped: grid.capped[i],
                        k: plan.k,
                    });
                    for (j, &p) in grid.ps.iter().enumerate() {
                        rows.push(SolveRow {
                            model: plan.model.clone(),
                            n,
                            alpha,
                            p,
                            epsilon_solved: grid.epsilon[i][j],
                            k: plan.k,
                            seed: plan.seed,
                        });
                    }
                }
            }
            ResultTable::Solve(rows)
        }
        PlanKind::Snapshots => {
            let table = snapshot_rows(engine, registry, plan)?.expect("validated");
            return Ok(Outcome {
                table,
                snapshots: None,
                capped,
            });
        }
    };
    let snapshots = snapshot_rows(engine, registry, plan)?;
    Ok(Outcome {
        table,
        snapshots,
        capped,
    })
}

pub fn plot_kind(kind: PlanKind) -> PlotKind {
    match kind {
        PlanKind::Curve => PlotKind::Curve,
        PlanKind::Solve => PlotKind::Series,
        PlanKind::Contour => PlotKind::Contour,
        PlanKind::Snapshots => PlotKind::Snapshots,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Execute `plan` and write `results.csv`, `results_meta.json` and, unless
/// disabled, the SVG plots into `opts.out`.
pub fn run(plan: &ExperimentPlan, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let registry = ModelRegistry::with_builtin();
    plan.validate(&registry)?;
    let engine = Engine::new(opts.workers)?;
    let outcome = execute(plan, &registry, &engine)?;

    std::fs::create_dir_all(&opts.out).map_err(|e| io_err(&opts.out, e))?;
    let hash = plan.config_hash();
    let results = opts.out.join("results.csv");
    outcome.table.write(&results, plan.seed, &hash)?;
    let mut files = vec![results.clone()];
    if let Some(snaps) = &outcome.snapshots {
        let path = opts.out.join("snapshots.csv");
        snaps.write(&path, plan.seed, &hash)?;
        files.push(path);
    }

    if opts.plot {
        let stem = opts.figure.map(|f| format!("figure{f}")).unwrap_or_else(|| "results".into());
        let svg = plot::render(&outcome.table, plot_kind(plan.kind))?;
        let path = opts.out.join(format!("{stem}.svg"));
        write_text(&path, &with_comment(&svg, plan.seed, &hash))?;
        files.push(path);
        if let Some(snaps) = &outcome.snapshots {
            let svg = plot::render(snaps, PlotKind::Snapshots)?;
            let path = opts.out.join(format!("{stem}_snapshots.svg"));
            write_text(&path, &with_comment(&svg, plan.seed, &hash))?;
            files.push(path);
        }
    }

    let meta_path = opts.out.join("results_meta.json");
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    let meta = Meta {
        tool: concat!("fclab ", env!("CARGO_PKG_VERSION")),
        config: plan,
        config_hash: hash,
        seed: plan.seed,
        k: plan.k,
        figure: opts.figure,
        rows: outcome.table.len(),
        files: names,
        capped: &outcome.capped,
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serialises");
    write_text(&meta_path, &(json + "\n"))?;
    files.push(meta_path.clone());
    Ok(RunSummary {
        results,
        meta: meta_path,
        files,
        outcome,
    })
}

/// Insert the seed/hash comment after the SVG root element opens.
pub fn with_comment(svg: &str, seed: u64, hash: &str) -> String {
    match svg.find('\n') {
        Some(i) => format!("{}\n<!-- seed={seed} config_hash={hash} -->{}", &svg[..i], &svg[i..]),
        None => svg.to_string(),
    }
}
