//! Cluster-center hunting, membership reconstruction and the end-to-end
//! estimation pipelines.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcmm::{ExpectedAdjacency, MembershipMatrix};
use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;
use crate::seed::mix_seed;
use crate::slim::{
    a4_diagnostic, build_population_slim, build_slim, leading_eigenpairs, row_normalize, SlimConfig, SlimMatrix,
};

/// Minimum pairwise distance between returned centers.
pub const CENTER_SEPARATION: f64 = 1e-9;
/// Largest accepted condition number of `V V'`.
pub const MAX_CENTER_CONDITION: f64 = 1e12;

const WEISZFELD_MAX_ITERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMediansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for KMediansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 100,
            seed: 0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMediansResult {
    /// `K x d`, row k is center k.
    pub centers: DMatrix<f64>,
    pub assignments: Vec<usize>,
    /// Mean distance of each row to its nearest center.
    pub loss: f64,
    /// Loss after every assignment step of the winning run.
    pub loss_trace: Vec<f64>,
    pub restart: usize,
}

/// K-medians on the rows of `x`: nearest-center assignment alternating with
/// Weiszfeld geometric-median updates, best of `opts.restarts` farthest-point
/// seeded runs.
pub fn kmedians(x: &DMatrix<f64>, k: usize, opts: &KMediansOptions) -> Result<KMediansResult> {
    let n = x.nrows();
    let d = x.ncols();
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyCommunities { k, n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("clustering embedding rows"));
    }
    let points: Vec<f64> = (0..n).flat_map(|i| x.row(i).iter().copied().collect::<Vec<_>>()).collect();
    let data = Points { flat: &points, d };

    let runs: Vec<Result<Run>> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[opts.seed, r as u64]));
            let first = rng.gen_range(0..n);
            run_once(&data, k, first, opts).map(|mut run| {
                run.restart = r;
                run
            })
        })
        .collect();

    let mut best: Option<Run> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(run) => {
                if best.as_ref().is_none_or(|b| run.loss < b.loss) {
                    best = Some(run);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(first_err.expect("at least one restart ran")),
    };

    let centers = DMatrix::from_row_slice(k, d, &best.centers);
    let mut separation = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            separation = separation.min((centers.row(a) - centers.row(b)).norm());
        }
    }
    if separation <= CENTER_SEPARATION {
        return Err(Error::CenterCollapse { separation });
    }
    Ok(KMediansResult {
        centers,
        assignments: best.assign,
        loss: best.loss,
        loss_trace: best.trace,
        restart: best.restart,
    })
}

struct Points<'a> {
    flat: &'a [f64],
    d: usize,
}

impl Points<'_> {
    fn len(&self) -> usize {
        self.flat.len() / self.d
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.flat[i * self.d..(i + 1) * self.d]
    }
}

struct Run {
    centers: Vec<f64>,
    assign: Vec<usize>,
    loss: f64,
    trace: Vec<f64>,
    restart: usize,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nearest center per point (lowest index on ties) and the distances.
fn assign(points: &Points, centers: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let d = points.d;
    (0..points.len())
        .map(|i| {
            let p = points.row(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let dd = dist(p, &centers[c * d..(c + 1) * d]);
                if dd < best.1 {
                    best = (c, dd);
                }
            }
            best
        })
        .unzip()
}

fn run_once(points: &Points, k: usize, first: usize, opts: &KMediansOptions) -> Result<Run> {
    let n = points.len();
    let d = points.d;

    // farthest-point seeding
    let mut centers: Vec<f64> = points.row(first).to_vec();
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(points.row(i), points.row(first))).collect();
    for _ in 1..k {
        let (far, gap) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if gap <= CENTER_SEPARATION {
            return Err(Error::CenterCollapse { separation: gap });
        }
        let c = points.row(far).to_vec();
        for (i, slot) in nearest.iter_mut().enumerate() {
            *slot = slot.min(dist(points.row(i), &c));
        }
        centers.extend(c);
    }

    let mut trace = Vec::new();
    let mut prev_assign: Option<Vec<usize>> = None;
    for _ in 0..opts.max_iters {
        let (mut labels, mut dists) = assign(points, &centers, k);

        // re-seed empty clusters at the worst-served points
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let (far, gap) = dists
                .iter()
                .enumerate()
                .filter(|&(i, _)| counts[labels[i]] > 1)
                .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            if far == usize::MAX || gap <= CENTER_SEPARATION {
                return Err(Error::CenterCollapse { separation: gap.max(0.0) });
            }
            centers[c * d..(c + 1) * d].copy_from_slice(points.row(far));
            counts[labels[far]] -= 1;
            counts[c] = 1;
            labels[far] = c;
            dists[far] = 0.0;
        }
        trace.push(dists.iter().sum::<f64>() / n as f64);

        let mut moved = 0.0f64;
        for c in 0..k {
            let members: Vec<&[f64]> = (0..n).filter(|&i| labels[i] == c).map(|i| points.row(i)).collect();
            let old = centers[c * d..(c + 1) * d].to_vec();
            let new = geometric_median(&members, &old, opts.tol);
            let cost = |y: &[f64]| members.iter().map(|p| dist(p, y)).sum::<f64>();
            let before = cost(&old);
            if cost(&new) < before - 1e-12 * before {
                moved = moved.max(dist(&new, &old));
                centers[c * d..(c + 1) * d].copy_from_slice(&new);
            }
        }

        let stable = prev_assign.as_ref() == Some(&labels);
        prev_assign = Some(labels);
        if stable && moved <= opts.tol {
            break;
        }
    }

    let (labels, dists) = assign(points, &centers, k);
    let loss = dists.iter().sum::<f64>() / n as f64;
    trace.push(loss);
    Ok(Run {
        centers,
        assign: labels,
        loss,
        trace,
        restart: 0,
    })
}

/// Weiszfeld iteration with the Vardi-Zhang correction for iterates that land
/// on a data point.
pub fn geometric_median(points: &[&[f64]], start: &[f64], tol: f64) -> Vec<f64> {
    let d = start.len();
    match points.len() {
        0 => return start.to_vec(),
        1 => return points[0].to_vec(),
        _ => {}
    }
    let mut y = start.to_vec();
    for _ in 0..WEISZFELD_MAX_ITERS {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        let mut coincident = 0usize;
        let mut pull = vec![0.0; d];
        for p in points {
            let r = dist(p, &y);
            if r < 1e-14 {
                coincident += 1;
                continue;
            }
            let w = 1.0 / r;
            den += w;
            for j in 0..d {
                num[j] += p[j] * w;
                pull[j] += (p[j] - y[j]) * w;
            }
        }
        if den == 0.0 {
            break;
        }
        let t: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next = if coincident == 0 {
            t
        } else {
            let r = pull.iter().map(|v| v * v).sum::<f64>().sqrt();
            let eta = coincident as f64;
            if r <= eta {
                break;
            }
            let beta = eta / r;
            (0..d).map(|j| (1.0 - beta) * t[j] + beta * y[j]).collect()
        };
        let step = dist(&next, &y);
        y = next;
        if step <= tol {
            break;
        }
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    #[default]
    L1,
    /// Unit l2 rows.
    L2,
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(NormMode::L1),
            "l2" => Ok(NormMode::L2),
            other => Err(Error::InvalidParameter(format!("unknown norm {other:?}"))),
        }
    }
}

impl fmt::Display for NormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormMode::L1 => "l1",
            NormMode::L2 => "l2",
        })
    }
}

/// Projected and normalized memberships before conversion to a
/// [`MembershipMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub values: DMatrix<f64>,
    pub norm: NormMode,
    /// Rows whose raw projection was entirely non-positive and got negated.
    pub flipped: Vec<usize>,
    /// Rows that clamped to zero and were replaced by the nearest-center indicator.
    pub fallback: Vec<usize>,
}

impl Reconstruction {
    /// Rows rescaled to unit l1 norm (a no-op in l1 mode).
    pub fn to_membership(&self) -> Result<MembershipMatrix> {
        match self.norm {
            NormMode::L1 => MembershipMatrix::new(self.values.clone())
                .or_else(|_| MembershipMatrix::from_unnormalized(self.values.clone())),
            NormMode::L2 => MembershipMatrix::from_unnormalized(self.values.clone()),
        }
    }
}

/// Projects the rows of `x` onto the span of the centers `v`, clamps and
/// normalizes.
pub fn reconstruct(x: &DMatrix<f64>, v: &DMatrix<f64>, norm: NormMode) -> Result<Reconstruction> {
    let k = v.nrows();
    if v.ncols() != x.ncols() || !v.is_square() {
        return Err(Error::Dimension(format!(
            "centers are {}x{} but the embedding has {} columns",
            v.nrows(),
            v.ncols(),
            x.ncols()
        )));
    }
    let gram = v * v.transpose();
    let spectrum = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = spectrum.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CENTER_CONDITION) {
        return Err(Error::SingularCenters { condition });
    }
    // Y' = (V V')^{-1} V X'
    let yt = gram
        .lu()
        .solve(&(v * x.transpose()))
        .ok_or(Error::SingularCenters { condition })?;
    let mut y = yt.transpose();

    let mut flipped = Vec::new();
    let mut fallback = Vec::new();
    for i in 0..y.nrows() {
        let mut row = y.row_mut(i);
        if row.iter().all(|&e| e <= 0.0) {
            row.neg_mut();
            flipped.push(i);
        }
        row.apply(|e| *e = e.max(0.0));
        let scale = match norm {
            NormMode::L1 => row.sum(),
            NormMode::L2 => row.norm(),
        };
        if scale > 0.0 && scale.is_finite() {
            row /= scale;
        } else {
            let xi = x.row(i);
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let dd = (xi - v.row(c)).norm();
                if dd < best.1 {
                    best = (c, dd);
                }
            }
            row.fill(0.0);
            row[best.0] = 1.0;
            fallback.push(i);
        }
    }
    Ok(Reconstruction {
        values: y,
        norm,
        flipped,
        fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    pub kmedians: KMediansOptions,
    pub norm: NormMode,
}

/// Diagnostics of one pipeline run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub n: usize,
    pub k: usize,
    pub tau: f64,
    pub eigenvalues: Vec<f64>,
    pub next_eigenvalue: Option<f64>,
    pub warnings: Vec<String>,
    pub kmedians_loss: f64,
    pub degenerate_rows: Vec<usize>,
    pub flipped_rows: Vec<usize>,
    pub fallback_rows: Vec<usize>,
}

impl RunReport {
    pub fn eigengap(&self) -> Option<f64> {
        match (self.eigenvalues.last(), self.next_eigenvalue) {
            (Some(&last), Some(next)) => Some(last - next),
            _ => None,
        }
    }

    /// Rows that needed either degenerate-embedding or fallback treatment.
    pub fn flagged_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.degenerate_rows.iter().chain(&self.fallback_rows).copied().collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    /// `# key = value` lines, suitable for appending to a CSV file.
    pub fn to_kv_block(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let vals = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "# n = {}", self.n);
        let _ = writeln!(s, "# k = {}", self.k);
        let _ = writeln!(s, "# tau = {:e}", self.tau);
        let _ = writeln!(s, "# eigenvalues = {}", vals(&self.eigenvalues));
        if let Some(next) = self.next_eigenvalue {
            let _ = writeln!(s, "# next_eigenvalue = {next:e}");
        }
        if let Some(gap) = self.eigengap() {
            let _ = writeln!(s, "# eigengap = {gap:e}");
        }
        let _ = writeln!(s, "# kmedians_loss = {:e}", self.kmedians_loss);
        let _ = writeln!(s, "# degenerate_rows = {}", list(&self.degenerate_rows));
        let _ = writeln!(s, "# flipped_rows = {}", list(&self.flipped_rows));
        let _ = writeln!(s, "# fallback_rows = {}", list(&self.fallback_rows));
        for w in &self.warnings {
            let _ = writeln!(s, "# warning = {w}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub membership: MembershipMatrix,
    pub estimate: Reconstruction,
    pub report: RunReport,
}

/// Estimates mixed memberships of an observed graph with K communities.
pub fn mixed_slim(adj: &AdjacencyMatrix, k: usize, cfg: &SlimConfig, opts: &FitOptions) -> Result<Fit> {
    let n = adj.n();
    check_k(n, k)?;
    if k == 1 {
        cfg.validate()?;
        return Ok(single_community(n));
    }
    let m = build_slim(adj, cfg)?;
    fit_similarity(&m, k, opts)
}

/// The same pipeline applied to the population matrix.
pub fn ideal_mixed_slim(omega: &ExpectedAdjacency, k: usize, cfg: &SlimConfig, opts: &FitOptions) -> Result<Fit> {
    let n = omega.n();
    check_k(n, k)?;
    if k == 1 {
        cfg.validate()?;
        return Ok(single_community(n));
    }
    let m = build_population_slim(omega, cfg)?;
    fit_similarity(&m, k, opts)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyCommunities { k, n });
    }
    Ok(())
}

fn single_community(n: usize) -> Fit {
    let ones = DMatrix::from_element(n, 1, 1.0);
    Fit {
        membership: MembershipMatrix::new(ones.clone()).expect("all-ones column is stochastic"),
        estimate: Reconstruction {
            values: ones,
            norm: NormMode::L1,
            flipped: Vec::new(),
            fallback: Vec::new(),
        },
        report: RunReport {
            n,
            k: 1,
            ..Default::default()
        },
    }
}

/// Embedding, normalization, center hunting and reconstruction for a
/// prepared similarity matrix.
pub fn fit_similarity(m: &SlimMatrix, k: usize, opts: &FitOptions) -> Result<Fit> {
    let n = m.n();
    let embedding = leading_eigenpairs(m.matrix(), k)?;
    let warnings = a4_diagnostic(&embedding).iter().map(ToString::to_string).collect();
    let normalized = row_normalize(&embedding.vectors);
    let clusters = kmedians(&normalized.rows, k, &opts.kmedians)?;
    let estimate = reconstruct(&normalized.rows, &clusters.centers, opts.norm)?;
    let membership = estimate.to_membership()?;
    let report = RunReport {
        n,
        k,
        tau: m.tau,
        eigenvalues: embedding.values.clone(),
        next_eigenvalue: embedding.next_value,
        warnings,
        kmedians_loss: clusters.loss,
        degenerate_rows: normalized.degenerate,
        flipped_rows: estimate.flipped.clone(),
        fallback_rows: estimate.fallback.clone(),
    };
    Ok(Fit {
        membership,
        estimate,
        report,
    })
}
