use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pssm_core::{dump, dynamics, experiments, network, SimParams};

/// School migration and segregation simulator.
///
/// Seeds resolve as: --seed flag, then `seed` in the config file, then the
/// PSSM_SEED environment variable, then the built-in default.
#[derive(Debug, Parser)]
#[command(name = "pssm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation; writes metrics.csv plus the final schools.csv and students.csv.
    Run {
        /// `key = value` parameter file; absent keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed, overriding the config file and PSSM_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of ticks (years), overriding the config file.
        #[arg(long)]
        ticks: Option<u32>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a parameter sweep; writes <name>_raw.csv and <name>_agg.csv.
    Sweep {
        /// Experiment file (`key = value`, sweeps as `[start -> step -> stop]`).
        #[arg(long)]
        experiment: PathBuf,
        /// Worker threads; output does not depend on it.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Export the network of the model itself.
    Network {
        /// What to write.
        #[arg(long, value_enum)]
        emit: Emit,
        /// Centrality that drives colours (dot) or bins (histogram).
        #[arg(long, default_value = "betweenness")]
        measure: String,
        /// Histogram bin count.
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract tidy x,y,series,ci data for one figure.
    PlotData {
        /// Aggregated sweep CSV (fig4_9, fig4_12, fig4_13) or students.csv (fig4_14).
        #[arg(long)]
        input: PathBuf,
        /// One of fig4_9, fig4_12, fig4_13, fig4_14.
        #[arg(long)]
        figure: String,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write schools.csv and students.csv after setup (and optionally some ticks).
    Dump {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Ticks to simulate before dumping.
        #[arg(long, default_value_t = 0)]
        ticks: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Emit {
    Dot,
    Graphml,
    Tree,
    Centrality,
    Histogram,
}

fn load_params(config: Option<&Path>, seed: Option<u64>) -> Result<SimParams> {
    let mut params = SimParams::default();
    if let Ok(env_seed) = std::env::var("PSSM_SEED") {
        params.seed = env_seed
            .trim()
            .parse()
            .with_context(|| format!("PSSM_SEED `{env_seed}` is not a 64-bit unsigned integer"))?;
    }
    if let Some(path) = config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        params
            .apply_config(&text)
            .with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(seed) = seed {
        params.seed = seed;
    }
    Ok(params)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            config,
            seed,
            ticks,
            out,
        } => {
            let mut params = load_params(config.as_deref(), seed)?;
            if let Some(t) = ticks {
                params.max_ticks = t;
            }
            params.validate()?;
            let mut world = dynamics::setup(&params)?;
            let history = dynamics::run(&mut world)?;
            write(&out, "metrics.csv", &dump::metrics_csv(&history))?;
            write(&out, "schools.csv", &dump::schools_csv(&world))?;
            write(&out, "students.csv", &dump::students_csv(&world))?;
            let last = history.last();
            println!(
                "ran {} ticks (seed {}): public {}, private {}, out of school {} -> {}",
                history.len(),
                params.seed,
                last.map_or(0, |m| m.enrolled_public),
                last.map_or(0, |m| m.enrolled_private),
                last.map_or(0, |m| m.out_of_school),
                out.display()
            );
        }
        Command::Sweep {
            experiment,
            workers,
            out,
        } => {
            anyhow::ensure!(workers >= 1, "--workers must be at least 1");
            let text = fs::read_to_string(&experiment)
                .with_context(|| format!("reading {}", experiment.display()))?;
            let spec = experiments::parse_experiment(&text)
                .with_context(|| format!("in {}", experiment.display()))?;
            let result = experiments::simulate(&spec, workers)?;
            write(&out, &format!("{}_raw.csv", spec.name), &experiments::raw_csv(&result)?)?;
            write(&out, &format!("{}_agg.csv", spec.name), &experiments::aggregated_csv(&result)?)?;
            println!(
                "{}: {} configurations x {} repetitions x {} ticks = {} rows -> {}",
                spec.name,
                experiments::expand(&spec)?.len(),
                spec.repetitions,
                spec.stop_ticks,
                result.records.len(),
                out.display()
            );
        }
        Command::Network {
            emit: kind,
            measure,
            bins,
            out,
        } => {
            let graph = network::build_model_graph();
            let report = network::centrality(&graph);
            let text = match kind {
                Emit::Dot => network::to_dot(&graph, &report, &measure)?,
                Emit::Graphml => network::to_graphml(&graph, &report),
                Emit::Tree => network::tree_emit(&graph)?,
                Emit::Centrality => report.to_csv(),
                Emit::Histogram => network::histogram(&report, &measure, bins)?,
            };
            emit(out.as_deref(), &text)?;
            if out.is_some() {
                println!("network: {} nodes, {} edges", graph.nodes.len(), graph.edges.len());
            }
        }
        Command::PlotData { input, figure, out } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let data = experiments::plot_data(&text, &figure)?;
            emit(out.as_deref(), &data)?;
            if out.is_some() {
                println!("{figure}: {} points", data.lines().count().saturating_sub(1));
            }
        }
        Command::Dump {
            config,
            seed,
            ticks,
            out,
        } => {
            let mut params = load_params(config.as_deref(), seed)?;
            params.max_ticks = params.max_ticks.max(ticks);
            params.validate()?;
            let mut world = dynamics::setup(&params)?;
            for _ in 0..ticks {
                dynamics::step(&mut world)?;
            }
            write(&out, "schools.csv", &dump::schools_csv(&world))?;
            write(&out, "students.csv", &dump::students_csv(&world))?;
            println!("dumped tick {} -> {}", world.tick, out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
