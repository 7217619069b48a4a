use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mixslim::bench::{
    self, cmd_detect, cmd_evaluate, cmd_experiment, cmd_simulate, cmd_sweep_t, cmd_sweep_tau, default_t_grid,
    default_tau_grid, format_error_report, load_network, load_truth, write_sweep_csv, ClusteringSection, ConfigFile,
    ModelSection, RunSection, SlimSection, SweepTarget,
};
use mixslim::dcmm::{Experiment1, SubExperiment};
use mixslim::Error;

#[derive(Parser)]
#[command(name = "mixslim", version, about = "Mixed-membership community detection with the SLIM matrix")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample DCMM networks and write edge lists, memberships and a manifest.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate memberships of a network file.
    Detect {
        /// Edge list (`u v` pairs) or `.gml` file.
        network: PathBuf,
        #[command(flatten)]
        slim: SlimArgs,
        /// Membership CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Mixed-Hamming error and hard misclassifications of an estimate.
    Evaluate {
        /// Estimated membership CSV.
        estimate: PathBuf,
        /// True membership CSV or community labels.
        truth: PathBuf,
    },
    /// Replicated sweep over a sub-experiment grid.
    Experiment {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        slim: SlimArgs,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error against the regularization coefficient c in tau = c * mean degree.
    SweepTau(SweepArgs),
    /// Error against the truncation length T of the approximate variant.
    SweepT(SweepArgs),
}

#[derive(Args, Default)]
struct SlimArgs {
    /// Number of communities.
    #[arg(long)]
    k: Option<usize>,
    /// Walk discount; alpha = exp(-gamma). [default: 0.25]
    #[arg(long)]
    gamma: Option<f64>,
    /// zero, mean-degree, max-degree, mid-range or explicit. [default: mean-degree]
    #[arg(long)]
    tau_rule: Option<String>,
    /// [default: 0.1]
    #[arg(long)]
    tau_coeff: Option<f64>,
    /// exact or approx. [default: exact]
    #[arg(long)]
    variant: Option<String>,
    /// Series terms of the approximate variant. [default: 10]
    #[arg(long)]
    t: Option<usize>,
    /// Row normalization of memberships, l1 or l2. [default: l1]
    #[arg(long)]
    norm: Option<String>,
    /// K-medians restarts. [default: 10]
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ModelArgs {
    /// Sub-experiment a..l.
    #[arg(long)]
    sub: Option<SubExperiment>,
    /// Network size. [default: 500, or 200 with --desk]
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sweep values; the sub-experiment grid when absent.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Desk scale: n = 200 and 10 replications unless given.
    #[arg(long)]
    desk: bool,
    /// Sectioned config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Replications per grid value. [default: 50]
    #[arg(long)]
    reps: Option<usize>,
    /// Write 0 for wall times so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Observed network; needs --truth.
    #[arg(long, requires = "truth", conflicts_with = "sub")]
    network: Option<PathBuf>,
    /// True memberships or labels for --network.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Sample the network from this sub-experiment instead.
    #[arg(long)]
    sub: Option<SubExperiment>,
    #[arg(long)]
    n: Option<usize>,
    /// Model value to sample at; the middle of the sub-experiment grid when absent.
    #[arg(long)]
    value: Option<f64>,
    #[arg(long)]
    desk: bool,
    /// Comma-separated sweep values; c in 0..2 step 0.1 or T in 1..20 when absent.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    slim: SlimArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SlimArgs {
    fn to_config(&self) -> ConfigFile {
        ConfigFile {
            slim: SlimSection {
                gamma: self.gamma,
                tau_rule: self.tau_rule.clone(),
                tau_coeff: self.tau_coeff,
                variant: self.variant.clone(),
                t: self.t,
                max_exact_n: None,
            },
            clustering: ClusteringSection {
                k: self.k,
                restarts: self.restarts,
                norm: self.norm.clone(),
                ..Default::default()
            },
            run: RunSection {
                seed: self.seed,
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

fn load_config(path: Option<&Path>) -> mixslim::Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
}

fn model_overlay(model: &ModelArgs, run: &RunArgs) -> ConfigFile {
    ConfigFile {
        model: ModelSection {
            sub: model.sub,
            n: model.n.or(model.desk.then_some(200)),
            grid: model.grid.clone(),
            ..Default::default()
        },
        run: RunSection {
            reps: run.reps.or(model.desk.then_some(bench::DESK_REPS)),
            no_timing: run.no_timing.then_some(true),
            ..Default::default()
        },
        ..Default::default()
    }
}

fn emit(out: Option<&Path>, body: &[u8]) -> mixslim::Result<()> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let _ = std::io::stdout().write_all(body);
            Ok(())
        }
    }
}

fn sweep_csv(rows: &[bench::SweepRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_sweep_csv(rows, &mut buf).expect("writing to memory");
    buf
}

fn run_sweep(args: &SweepArgs, tau: bool) -> mixslim::Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg = cfg.overlay(args.slim.to_config());
    cfg = cfg.overlay(ConfigFile {
        run: RunSection {
            reps: args.run.reps.or(args.desk.then_some(bench::DESK_REPS)),
            no_timing: args.run.no_timing.then_some(true),
            ..Default::default()
        },
        ..Default::default()
    });
    let slim = cfg.slim_config()?;
    let fit = cfg.fit_options()?;
    let timing = !cfg.run.no_timing.unwrap_or(false);
    let target = match (&args.network, &args.truth) {
        (Some(network), Some(truth)) => {
            let graph = load_network(network)?;
            let truth = load_truth(truth, Some(&graph.labels), cfg.clustering.k)?;
            SweepTarget::Network {
                adjacency: graph.adjacency,
                truth,
            }
        }
        _ => {
            let sub = args.sub.or(cfg.model.sub).ok_or_else(|| {
                Error::InvalidParameter("give --network with --truth, or a sub-experiment with --sub".into())
            })?;
            let n = args.n.or(args.desk.then_some(200)).or(cfg.model.n).unwrap_or(Experiment1::full(sub).n);
            cfg.model = ModelSection {
                sub: Some(sub),
                n: Some(n),
                ..Default::default()
            };
            let spec = cfg.experiment_spec()?;
            let grid = spec.grid.clone();
            let value = args.value.unwrap_or(grid[grid.len() / 2]);
            SweepTarget::Model { spec, value }
        }
    };
    let rows = if tau {
        let grid = args.grid.clone().unwrap_or_else(default_tau_grid);
        cmd_sweep_tau(&target, &slim, &fit, &grid, timing)?
    } else {
        let grid = args.grid.clone().unwrap_or_else(default_t_grid);
        cmd_sweep_t(&target, &slim, &fit, &grid, timing)?
    };
    emit(args.out.as_deref(), &sweep_csv(&rows))
}

fn run(cli: Cli) -> mixslim::Result<()> {
    match cli.command {
        Command::Simulate { model, run, seed, out } => {
            let cfg = load_config(model.config.as_deref())?
                .overlay(model_overlay(&model, &run))
                .overlay(ConfigFile {
                    run: RunSection {
                        seed,
                        ..Default::default()
                    },
                    ..Default::default()
                });
            let spec = cfg.experiment_spec()?;
            let dir = out
                .or(cfg.run.out.clone())
                .ok_or_else(|| Error::InvalidParameter("simulate needs --out DIR".into()))?;
            let manifest = cmd_simulate(&spec, &dir)?;
            log::info!("wrote {} networks to {}", manifest.entries.len(), dir.display());
            Ok(())
        }
        Command::Detect {
            network,
            slim,
            out,
            config,
        } => {
            let cfg = load_config(config.as_deref())?.overlay(slim.to_config());
            let k = cfg
                .clustering
                .k
                .ok_or_else(|| Error::InvalidParameter("detect needs --k".into()))?;
            let (_, text) = cmd_detect(&network, k, &cfg.slim_config()?, &cfg.fit_options()?)?;
            emit(out.or(cfg.run.out).as_deref(), text.as_bytes())
        }
        Command::Evaluate { estimate, truth } => {
            let report = cmd_evaluate(&estimate, &truth)?;
            emit(None, format_error_report(&report).as_bytes())
        }
        Command::Experiment { model, run, slim, out } => {
            let cfg = load_config(model.config.as_deref())?
                .overlay(slim.to_config())
                .overlay(model_overlay(&model, &run));
            let spec = cfg.experiment_spec()?;
            let rows = cmd_experiment(&spec)?;
            emit(out.or(cfg.run.out).as_deref(), &sweep_csv(&rows))
        }
        Command::SweepTau(args) => run_sweep(&args, true),
        Command::SweepT(args) => run_sweep(&args, false),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
