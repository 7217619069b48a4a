//! Experiment harness: simulation, detection, evaluation and sweeps, with
//! CSV output.
//!
//! Sweep CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `sweep_value` | grid value (n0, rho, c, T, ...) |
//! | `mean_error` | mean mixed-Hamming error over replications |
//! | `std_error` | standard error of that mean (0 for one replication) |
//! | `mean_eigengap` | mean of `lambda_K - lambda_{K+1}` over replications |
//! | `flagged_row_rate` | flagged rows divided by `n * reps` |
//! | `wall_time_ms` | mean wall time of one replication, 0 when timing is off |
//!
//! Floats are written with six significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcmm::{
    expected_adjacency, sample_from_expected, DcmmParams, DegreeParams, Experiment1, MembershipMatrix, MixingMatrix,
    SubExperiment,
};
use crate::error::{Error, Result};
use crate::evaluation::{mixed_hamming_error, ErrorReport};
use crate::graph::{load_edge_list, write_edge_list, AdjacencyMatrix, EdgeListFormat, LabelMap, LoadedGraph};
use crate::io::{fmt_sig6, read_labels, read_matrix_csv, read_membership, write_matrix_csv};
use crate::membership::{mixed_slim, Fit, FitOptions, KMediansOptions, NormMode};
use crate::seed::{mix_seed, replication_seed};
use crate::slim::{SlimConfig, TauRule, Variant, DEFAULT_GAMMA, DEFAULT_MAX_EXACT_N, DEFAULT_TAU_COEFF, DEFAULT_TERMS};

pub const SWEEP_HEADER: &str = "sweep_value,mean_error,std_error,mean_eigengap,flagged_row_rate,wall_time_ms";
pub const DEFAULT_REPS: usize = 50;
pub const DESK_REPS: usize = 10;

/// A DCMM given directly; the sweep value multiplies `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomModel {
    pub p: MixingMatrix,
    pub theta: DegreeParams,
    pub pi: MembershipMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Preset(Experiment1),
    Custom(CustomModel),
}

impl ModelSource {
    pub fn k(&self) -> usize {
        match self {
            ModelSource::Preset(e) => e.k(),
            ModelSource::Custom(c) => c.p.k(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ModelSource::Preset(e) => e.n,
            ModelSource::Custom(c) => c.pi.n(),
        }
    }

    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            ModelSource::Preset(e) => e.grid(),
            ModelSource::Custom(_) => vec![1.0],
        }
    }

    pub fn has_random_theta(&self) -> bool {
        matches!(self, ModelSource::Preset(e) if e.has_random_theta())
    }

    pub fn params(&self, value: f64, theta_seed: u64) -> Result<DcmmParams> {
        match self {
            ModelSource::Preset(e) => e.params(value, theta_seed),
            ModelSource::Custom(c) => {
                let p = MixingMatrix::new(c.p.matrix() * value)?;
                DcmmParams::new(p, c.theta.clone(), c.pi.clone())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModelSource::Preset(e) => format!("preset {} ({}) n = {}", e.sub, e.sub.sweep_name(), e.n),
            ModelSource::Custom(c) => format!("custom n = {} k = {}", c.pi.n(), c.p.k()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model: ModelSource,
    pub grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub slim: SlimConfig,
    pub fit: FitOptions,
    pub timing: bool,
}

impl ExperimentSpec {
    /// Default replications and the model's own grid.
    pub fn new(model: ModelSource) -> Self {
        Self {
            grid: model.default_grid(),
            model,
            reps: DEFAULT_REPS,
            seed: 0,
            slim: SlimConfig::default(),
            fit: FitOptions::default(),
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("sweep grid is empty".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        self.slim.validate()
    }

    pub fn seeds(&self, value: f64, rep: usize) -> ReplicationSeeds {
        let base = replication_seed(self.seed, value, rep);
        ReplicationSeeds {
            theta: mix_seed(&[base, 1]),
            sample: mix_seed(&[base, 2]),
            kmedians: mix_seed(&[base, 3]),
        }
    }

    /// Parameters and a sampled network for one replication.
    pub fn sample(&self, value: f64, rep: usize) -> Result<(DcmmParams, AdjacencyMatrix)> {
        let seeds = self.seeds(value, rep);
        let params = self.model.params(value, seeds.theta)?;
        let omega = expected_adjacency(&params)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seeds.sample);
        let adj = sample_from_expected(&omega, &mut rng);
        Ok((params, adj))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationSeeds {
    pub theta: u64,
    pub sample: u64,
    pub kmedians: u64,
}

/// Result of fitting one network against its truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub error: ErrorReport,
    pub eigengap: Option<f64>,
    pub flagged_rows: usize,
    pub wall_ms: f64,
}

fn fit_and_score(adj: &AdjacencyMatrix, truth: &MembershipMatrix, cfg: &SlimConfig, fit: &FitOptions) -> Result<Outcome> {
    let start = Instant::now();
    let Fit { membership, report, .. } = mixed_slim(adj, truth.k(), cfg, fit)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(Outcome {
        error: mixed_hamming_error(&membership, truth)?,
        eigengap: report.eigengap(),
        flagged_rows: report.flagged_rows().len(),
        wall_ms,
    })
}

/// Samples and fits replication `rep` at grid value `value`.
pub fn run_replication(spec: &ExperimentSpec, value: f64, rep: usize) -> Result<Outcome> {
    let (params, adj) = spec.sample(value, rep)?;
    let mut fit = spec.fit;
    fit.kmedians.seed = spec.seeds(value, rep).kmedians;
    fit_and_score(&adj, &params.pi, &spec.slim, &fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_eigengap: f64,
    pub flagged_row_rate: f64,
    pub wall_time_ms: f64,
}

impl SweepRow {
    fn aggregate(sweep_value: f64, outcomes: &[Outcome], timing: bool) -> Self {
        let reps = outcomes.len() as f64;
        let errors: Vec<f64> = outcomes.iter().map(|o| o.error.mixed_hamming).collect();
        let mean_error = errors.iter().sum::<f64>() / reps;
        let std_error = if outcomes.len() > 1 {
            let var = errors.iter().map(|e| (e - mean_error).powi(2)).sum::<f64>() / (reps - 1.0);
            (var / reps).sqrt()
        } else {
            0.0
        };
        let gaps: Vec<f64> = outcomes.iter().filter_map(|o| o.eigengap).collect();
        let mean_eigengap = if gaps.is_empty() {
            f64::NAN
        } else {
            gaps.iter().sum::<f64>() / gaps.len() as f64
        };
        let cells: usize = outcomes.iter().map(|o| o.error.n).sum();
        let flagged: usize = outcomes.iter().map(|o| o.flagged_rows).sum();
        let wall_time_ms = if timing {
            outcomes.iter().map(|o| o.wall_ms).sum::<f64>() / reps
        } else {
            0.0
        };
        Self {
            sweep_value,
            mean_error,
            std_error,
            mean_eigengap,
            flagged_row_rate: flagged as f64 / cells as f64,
            wall_time_ms,
        }
    }

    pub fn to_csv_line(&self) -> String {
        [
            self.sweep_value,
            self.mean_error,
            self.std_error,
            self.mean_eigengap,
            self.flagged_row_rate,
            self.wall_time_ms,
        ]
        .iter()
        .map(|&v| fmt_sig6(v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv_line())?;
    }
    Ok(())
}

/// Runs every (grid value, replication) pair in parallel and gathers one
/// row per grid value, in grid order.
pub fn cmd_experiment(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.grid.len()).flat_map(|g| (0..spec.reps).map(move |r| (g, r))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(g, r)| run_replication(spec, spec.grid[g], r))
        .collect::<Result<Vec<_>>>()?;
    Ok(outcomes
        .chunks(spec.reps)
        .zip(&spec.grid)
        .map(|(chunk, &value)| SweepRow::aggregate(value, chunk, spec.timing))
        .collect())
}

/// What a sensitivity sweep is run on.
#[derive(Debug, Clone)]
pub enum SweepTarget {
    /// One observed network with known memberships.
    Network { adjacency: AdjacencyMatrix, truth: MembershipMatrix },
    /// Fresh samples of a model at a single value; the same samples are
    /// reused at every grid point.
    Model { spec: ExperimentSpec, value: f64 },
}

/// The tau grid `c = 0, 0.1, ..., 2`.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=20).map(|i| (i as f64 * 0.1 * 1e10).round() / 1e10).collect()
}

/// The truncation grid `T = 1, ..., 20`.
pub fn default_t_grid() -> Vec<f64> {
    (1..=20).map(f64::from).collect()
}

/// Error against the coefficient `c` in `tau = c * (degree statistic)`.
/// The statistic follows the configured rule; `zero` and `explicit` fall
/// back to the mean degree.
pub fn cmd_sweep_tau(target: &SweepTarget, base: &SlimConfig, fit: &FitOptions, grid: &[f64], timing: bool) -> Result<Vec<SweepRow>> {
    let rule = match base.tau {
        TauRule::Zero | TauRule::Explicit(_) => "mean-degree",
        other => other.name(),
    };
    let configs = grid
        .iter()
        .map(|&c| Ok(base.with_tau(TauRule::from_parts(rule, c)?)))
        .collect::<Result<Vec<_>>>()?;
    sweep(target, &configs, fit, grid, timing)
}

/// Error against the truncation length `T` of the approximate variant.
pub fn cmd_sweep_t(target: &SweepTarget, base: &SlimConfig, fit: &FitOptions, grid: &[f64], timing: bool) -> Result<Vec<SweepRow>> {
    let configs = grid
        .iter()
        .map(|&t| {
            if t < 1.0 || t.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!("truncation must be a positive integer, got {t}")));
            }
            Ok(base.with_variant(Variant::Approx { terms: t as usize }))
        })
        .collect::<Result<Vec<_>>>()?;
    sweep(target, &configs, fit, grid, timing)
}

fn sweep(target: &SweepTarget, configs: &[SlimConfig], fit: &FitOptions, grid: &[f64], timing: bool) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    for cfg in configs {
        cfg.validate()?;
    }
    let networks: Vec<(AdjacencyMatrix, MembershipMatrix, FitOptions)> = match target {
        SweepTarget::Network { adjacency, truth } => {
            if adjacency.n() != truth.n() {
                return Err(Error::Dimension(format!(
                    "network has {} nodes but truth has {} rows",
                    adjacency.n(),
                    truth.n()
                )));
            }
            vec![(adjacency.clone(), truth.clone(), *fit)]
        }
        SweepTarget::Model { spec, value } => {
            spec.validate()?;
            (0..spec.reps)
                .into_par_iter()
                .map(|rep| {
                    let (params, adj) = spec.sample(*value, rep)?;
                    let mut f = *fit;
                    f.kmedians.seed = spec.seeds(*value, rep).kmedians;
                    Ok((adj, params.pi, f))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|g| (0..networks.len()).map(move |r| (g, r))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(g, r)| {
            let (adj, truth, f) = &networks[r];
            fit_and_score(adj, truth, &configs[g], f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(outcomes
        .chunks(networks.len())
        .zip(grid)
        .map(|(chunk, &value)| SweepRow::aggregate(value, chunk, timing))
        .collect())
}

/// One simulated network as listed in `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub value: f64,
    pub rep: usize,
    pub theta_seed: u64,
    pub sample_seed: u64,
    pub network: String,
    pub membership: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sub: Option<SubExperiment>,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub reps: usize,
    pub entries: Vec<ManifestEntry>,
}

/// Writes one edge list and one membership file per (grid value,
/// replication) into `dir`, a degree file when the degrees are random, and a
/// `manifest.toml` listing them. Node labels are `1..=n`.
pub fn cmd_simulate(spec: &ExperimentSpec, dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let jobs: Vec<(f64, usize)> = spec.grid.iter().flat_map(|&v| (0..spec.reps).map(move |r| (v, r))).collect();
    let entries = jobs
        .par_iter()
        .map(|&(value, rep)| {
            let (params, adj) = spec.sample(value, rep)?;
            let seeds = spec.seeds(value, rep);
            let stem = format!("v{}_r{rep}", fmt_sig6(value));
            let network = format!("{stem}.edges");
            let membership = format!("{stem}_pi.csv");
            write_file(&dir.join(&network), |w| {
                writeln!(w, "# nodes: {}", adj.n())?;
                write_edge_list(&adj, &LabelMap::contiguous(adj.n()), w)
            })?;
            write_file(&dir.join(&membership), |w| write_matrix_csv(params.pi.matrix(), w))?;
            let theta = if spec.model.has_random_theta() {
                let name = format!("{stem}_theta.csv");
                write_file(&dir.join(&name), |w| {
                    params.theta.values().iter().try_for_each(|t| writeln!(w, "{t}"))
                })?;
                Some(name)
            } else {
                None
            };
            Ok(ManifestEntry {
                value,
                rep,
                theta_seed: seeds.theta,
                sample_seed: seeds.sample,
                network,
                membership,
                theta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        model: spec.model.describe(),
        sub: match &spec.model {
            ModelSource::Preset(e) => Some(e.sub),
            ModelSource::Custom(_) => None,
        },
        n: spec.model.n(),
        k: spec.model.k(),
        seed: spec.seed,
        reps: spec.reps,
        entries,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    write_file(&dir.join("manifest.toml"), |w| w.write_all(text.as_bytes()))?;
    Ok(manifest)
}

fn write_file(path: &Path, body: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: &Path) -> Result<LoadedGraph> {
    load_edge_list(path, EdgeListFormat::from_path(path))
}

/// Fits a network file. The returned text is the membership CSV, rows in
/// ascending node-label order, followed by the `#` report block.
pub fn cmd_detect(path: &Path, k: usize, cfg: &SlimConfig, fit: &FitOptions) -> Result<(Fit, String)> {
    let graph = load_network(path)?;
    let result = mixed_slim(&graph.adjacency, k, cfg, fit)?;
    let mut out = Vec::new();
    write_matrix_csv(result.membership.matrix(), &mut out).map_err(|e| Error::io(path, e))?;
    let mut text = String::from_utf8(out).expect("CSV is ASCII");
    text.push_str(&result.report.to_kv_block());
    Ok((result, text))
}

/// Ground truth from a file. A numeric matrix with at least two columns,
/// entries in `[0, 1]` and unit row sums (and `k` columns when `k` is given)
/// is read as memberships; anything else as community labels, which give
/// pure memberships.
pub fn load_truth(path: &Path, labels: Option<&LabelMap>, k: Option<usize>) -> Result<MembershipMatrix> {
    if let Ok(m) = read_matrix_csv(path) {
        let stochastic = m.ncols() >= 2
            && m.iter().all(|&x| (0.0..=1.0).contains(&x))
            && m.row_iter().all(|r| (r.sum() - 1.0).abs() <= 1e-4);
        if stochastic && k.is_none_or(|k| k == m.ncols()) {
            return read_membership(path);
        }
    }
    let l = read_labels(path, labels)?;
    let found = l.iter().max().map_or(0, |m| m + 1);
    let k = k.unwrap_or(found);
    if found > k {
        return Err(Error::InvalidParameter(format!("truth has {found} communities but K = {k}")));
    }
    MembershipMatrix::from_labels(&l, k)
}

/// Scores an estimated membership file against truth.
pub fn cmd_evaluate(estimate: &Path, truth: &Path) -> Result<ErrorReport> {
    let hat = read_membership(estimate)?;
    let truth = load_truth(truth, None, Some(hat.k()))?;
    mixed_hamming_error(&hat, &truth)
}

pub fn format_error_report(r: &ErrorReport) -> String {
    let perm: Vec<String> = r.permutation.iter().map(|p| (p + 1).to_string()).collect();
    format!(
        "mixed_hamming = {}\nhard_errors = {}/{}\npermutation = {}\n",
        fmt_sig6(r.mixed_hamming),
        r.hard_errors,
        r.n,
        perm.join(" ")
    )
}

/// Sectioned configuration file. Every field is optional; command-line
/// flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub slim: SlimSection,
    pub clustering: ClusteringSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub sub: Option<SubExperiment>,
    pub n: Option<usize>,
    pub grid: Option<Vec<f64>>,
    /// Custom model: mixing matrix rows.
    pub p: Option<Vec<Vec<f64>>>,
    /// Custom model: membership CSV.
    pub pi_file: Option<PathBuf>,
    /// Custom model: one degree parameter per line; all ones when absent.
    pub theta_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlimSection {
    pub gamma: Option<f64>,
    pub tau_rule: Option<String>,
    pub tau_coeff: Option<f64>,
    pub variant: Option<String>,
    pub t: Option<usize>,
    pub max_exact_n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    pub k: Option<usize>,
    pub restarts: Option<usize>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub norm: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub no_timing: Option<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            location: source.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overlays `other` on `self`: fields set in `other` win.
    pub fn overlay(mut self, other: ConfigFile) -> Self {
        macro_rules! take {
            ($($sec:ident . $field:ident),*) => {
                $(if other.$sec.$field.is_some() { self.$sec.$field = other.$sec.$field; })*
            };
        }
        take!(
            model.sub, model.n, model.grid, model.p, model.pi_file, model.theta_file,
            slim.gamma, slim.tau_rule, slim.tau_coeff, slim.variant, slim.t, slim.max_exact_n,
            clustering.k, clustering.restarts, clustering.max_iters, clustering.tol, clustering.norm,
            run.reps, run.seed, run.out, run.no_timing
        );
        self
    }

    pub fn slim_config(&self) -> Result<SlimConfig> {
        let s = &self.slim;
        let tau = TauRule::from_parts(
            s.tau_rule.as_deref().unwrap_or("mean-degree"),
            s.tau_coeff.unwrap_or(DEFAULT_TAU_COEFF),
        )?;
        let variant = match s.variant.as_deref().unwrap_or("exact") {
            "approx" => Variant::Approx {
                terms: s.t.unwrap_or(DEFAULT_TERMS),
            },
            other => other.parse()?,
        };
        let cfg = SlimConfig {
            gamma: s.gamma.unwrap_or(DEFAULT_GAMMA),
            tau,
            variant,
            max_exact_n: s.max_exact_n.unwrap_or(DEFAULT_MAX_EXACT_N),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fit_options(&self) -> Result<FitOptions> {
        let c = &self.clustering;
        let d = KMediansOptions::default();
        let kmedians = KMediansOptions {
            restarts: c.restarts.unwrap_or(d.restarts),
            max_iters: c.max_iters.unwrap_or(d.max_iters),
            seed: self.run.seed.unwrap_or(d.seed),
            tol: c.tol.unwrap_or(d.tol),
        };
        if kmedians.restarts == 0 || kmedians.max_iters == 0 {
            return Err(Error::InvalidParameter("restarts and max_iters must be positive".into()));
        }
        let norm = match &c.norm {
            Some(s) => s.parse::<NormMode>()?,
            None => NormMode::default(),
        };
        Ok(FitOptions { kmedians, norm })
    }

    /// The model described by `[model]`: a preset when `sub` is set, a
    /// custom DCMM when `p` and `pi_file` are.
    pub fn model(&self) -> Result<ModelSource> {
        let m = &self.model;
        match (&m.sub, &m.p, &m.pi_file) {
            (Some(sub), None, None) => Ok(ModelSource::Preset(Experiment1 {
                sub: *sub,
                n: m.n.unwrap_or(Experiment1::full(*sub).n),
            })),
            (None, Some(rows), Some(pi_file)) => {
                let p = MixingMatrix::from_rows(rows)?;
                let pi = read_membership(pi_file)?;
                let theta = match &m.theta_file {
                    Some(f) => DegreeParams::new(read_matrix_csv(f)?.iter().copied().collect())?,
                    None => DegreeParams::constant(pi.n(), 1.0)?,
                };
                if m.n.is_some_and(|n| n != pi.n()) {
                    return Err(Error::Dimension(format!("n = {} but the membership file has {} rows", m.n.unwrap(), pi.n())));
                }
                Ok(ModelSource::Custom(CustomModel { p, theta, pi }))
            }
            (None, None, None) => Err(Error::InvalidParameter("no model: give a sub-experiment or a custom P and membership file".into())),
            _ => Err(Error::InvalidParameter("give either a sub-experiment or a custom P with a membership file, not both".into())),
        }
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let model = self.model()?;
        let mut spec = ExperimentSpec::new(model);
        if let Some(grid) = &self.model.grid {
            spec.grid = grid.clone();
        }
        spec.reps = self.run.reps.unwrap_or(DEFAULT_REPS);
        spec.seed = self.run.seed.unwrap_or(0);
        spec.slim = self.slim_config()?;
        spec.fit = self.fit_options()?;
        spec.timing = !self.run.no_timing.unwrap_or(false);
        spec.validate()?;
        Ok(spec)
    }
}
