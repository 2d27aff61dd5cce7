use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use fclab_cli::plot::{self, PlotKind};
use fclab_cli::run::with_comment;
use fclab_cli::table::read_table_file;
use fclab_cli::{presets, CliError, ExperimentPlan, RunOptions};
use fclab_core::ModelRegistry;

#[derive(Parser)]
#[command(name = "fclab", version, about = "False-confidence experiments for Bayesian posteriors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan from a JSON config or a figure preset
    #[command(group(ArgGroup::new("plan").required(true).args(["config", "figure"])))]
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Figure preset, 2 to 9
        #[arg(long)]
        figure: Option<u8>,
        /// Output directory
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on it
        #[arg(long, env = "FCL_WORKERS")]
        workers: Option<usize>,
        /// Override the replicate count
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        no_plot: bool,
    },
    /// Render a results CSV as SVG
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Defaults to the CSV path with an .svg extension
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the registered models
    Models,
    /// Print the JSON plan of a figure preset
    Preset { figure: u8 },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn first_line_comment(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    let line = text.lines().next()?;
    line.strip_prefix("# ").map(str::to_string)
}

/// Write to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            figure,
            out,
            seed,
            workers,
            k,
            no_plot,
        } => {
            let mut plan = match (&config, figure) {
                (Some(path), _) => ExperimentPlan::load(path)?,
                (None, Some(id)) => presets::figure(id)?,
                (None, None) => unreachable!("clap enforces the group"),
            };
            if let Some(seed) = seed {
                plan.seed = seed;
            }
            if let Some(k) = k {
                plan.k = k;
            }
            let out = out
                .or_else(|| plan.out.clone())
                .unwrap_or_else(|| match figure {
                    Some(id) => PathBuf::from(format!("out/figure{id}")),
                    None => PathBuf::from("out"),
                });
            plan.out = Some(out.clone());
            let opts = RunOptions {
                out,
                workers: workers.unwrap_or_else(default_workers).max(1),
                plot: !no_plot,
                figure,
            };
            let summary = fclab_cli::run(&plan, &opts)?;
            for f in &summary.files {
                emit(&format!("wrote {}", f.display()))?;
            }
            for c in summary.outcome.capped.iter().filter(|c| c.capped > 0) {
                log::warn!("n={} alpha={}: {} of {} critical radii capped", c.n, c.alpha, c.capped, c.k);
            }
            Ok(())
        }
        Command::Plot { csv, kind, out } => {
            let table = read_table_file(&csv, kind.schema())?;
            let svg = plot::render(&table, kind)?;
            let svg = match first_line_comment(&csv) {
                Some(c) => match c.split_once(' ') {
                    Some((s, h)) => {
                        let seed = s.trim_start_matches("seed=").parse().unwrap_or(0);
                        with_comment(&svg, seed, h.trim_start_matches("config_hash="))
                    }
                    None => svg,
                },
                None => svg,
            };
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            std::fs::write(&out, svg).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
            emit(&format!("wrote {}", out.display()))?;
            Ok(())
        }
        Command::Models => {
            let reg = ModelRegistry::with_builtin();
            for tag in reg.tags() {
                let f = reg.get(tag).expect("listed tag");
                emit(&format!("{tag:<20} {}", f.describe()))?;
            }
            Ok(())
        }
        Command::Preset { figure } => {
            let plan = presets::figure(figure)?;
            emit(&serde_json::to_string_pretty(&plan).expect("plan serialises"))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
