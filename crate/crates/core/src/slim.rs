//! The symmetrized Laplacian inverse matrix and its spectral embedding.
//!
//! For a (possibly weighted) affinity matrix `A` with degrees `d`, the walk
//! matrix is `P = D_tau^{-1} A_tau` where `A_tau = A + tau I` and
//! `D_tau = D + tau I`. The similarity is `W = (I - alpha P)^{-1}` with
//! `alpha = exp(-gamma)`, symmetrized as `M = (W + W') / 2` and with its
//! diagonal zeroed. The truncated variant replaces `W` by
//! `sum_{t=1..T} alpha^t P^t`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dcmm::ExpectedAdjacency;
use crate::error::{Error, Result};
use crate::graph::{degree_stats, AdjacencyMatrix};

pub const DEFAULT_GAMMA: f64 = 0.25;
pub const DEFAULT_TAU_COEFF: f64 = 0.1;
pub const DEFAULT_TERMS: usize = 10;
pub const DEFAULT_MAX_EXACT_N: usize = 5000;

/// How the regularization `tau` is derived from the degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum TauRule {
    Zero,
    /// `c * mean degree`
    MeanDegree(f64),
    /// `c * max degree`
    MaxDegree(f64),
    /// `c * (max degree + min degree) / 2`
    MidRange(f64),
    Explicit(f64),
}

impl TauRule {
    /// Builds a rule from its CLI name and coefficient.
    pub fn from_parts(name: &str, coeff: f64) -> Result<Self> {
        Ok(match name {
            "zero" | "none" => TauRule::Zero,
            "mean-degree" | "mean" => TauRule::MeanDegree(coeff),
            "max-degree" | "max" => TauRule::MaxDegree(coeff),
            "mid-range" | "midrange" => TauRule::MidRange(coeff),
            "explicit" => TauRule::Explicit(coeff),
            other => return Err(Error::InvalidParameter(format!("unknown tau rule {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TauRule::Zero => "zero",
            TauRule::MeanDegree(_) => "mean-degree",
            TauRule::MaxDegree(_) => "max-degree",
            TauRule::MidRange(_) => "mid-range",
            TauRule::Explicit(_) => "explicit",
        }
    }

    pub fn coeff(&self) -> f64 {
        match *self {
            TauRule::Zero => 0.0,
            TauRule::MeanDegree(c) | TauRule::MaxDegree(c) | TauRule::MidRange(c) | TauRule::Explicit(c) => c,
        }
    }

    pub fn resolve(&self, mean: f64, max: f64, min: f64) -> f64 {
        match *self {
            TauRule::Zero => 0.0,
            TauRule::MeanDegree(c) => c * mean,
            TauRule::MaxDegree(c) => c * max,
            TauRule::MidRange(c) => c * (max + min) / 2.0,
            TauRule::Explicit(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Dense factorization of `I - alpha P`.
    Exact,
    /// Series truncated after `terms` powers of the walk matrix.
    Approx { terms: usize },
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Exact => f.write_str("exact"),
            Variant::Approx { terms } => write!(f, "approx(T={terms})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlimConfig {
    pub gamma: f64,
    pub tau: TauRule,
    pub variant: Variant,
    /// Largest n for which the exact variant is attempted.
    pub max_exact_n: usize,
}

impl Default for SlimConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            tau: TauRule::MeanDegree(DEFAULT_TAU_COEFF),
            variant: Variant::Exact,
            max_exact_n: DEFAULT_MAX_EXACT_N,
        }
    }
}

impl SlimConfig {
    /// Unregularized, exact.
    pub fn plain() -> Self {
        Self {
            tau: TauRule::Zero,
            ..Self::default()
        }
    }

    pub fn with_tau(mut self, tau: TauRule) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn alpha(&self) -> f64 {
        (-self.gamma).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        let c = self.tau.coeff();
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau coefficient must be nonnegative, got {c}")));
        }
        if let Variant::Approx { terms } = self.variant {
            if terms == 0 {
                return Err(Error::InvalidParameter("truncation T must be at least 1".into()));
            }
        }
        Ok(())
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// Accepts `exact` or `approx` (default T) or `approx:T`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exact" => Ok(Variant::Exact),
            None if s == "approx" => Ok(Variant::Approx { terms: DEFAULT_TERMS }),
            Some(("approx", t)) => t
                .parse()
                .map(|terms| Variant::Approx { terms })
                .map_err(|_| Error::InvalidParameter(format!("bad truncation {t:?}"))),
            _ => Err(Error::InvalidParameter(format!("unknown variant {s:?}"))),
        }
    }
}

/// Symmetric similarity matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SlimMatrix {
    m: DMatrix<f64>,
    /// The regularization actually applied.
    pub tau: f64,
}

impl SlimMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }
}

enum Affinity<'a> {
    Graph(&'a AdjacencyMatrix),
    Dense(&'a DMatrix<f64>),
}

impl Affinity<'_> {
    fn n(&self) -> usize {
        match self {
            Affinity::Graph(a) => a.n(),
            Affinity::Dense(m) => m.nrows(),
        }
    }

    /// Degrees plus `(mean, max, min)`.
    fn degrees(&self) -> (Vec<f64>, f64, f64, f64) {
        match self {
            Affinity::Graph(a) => {
                let d = degree_stats(a);
                let deg = d.degrees.iter().map(|&v| v as f64).collect();
                (deg, d.mean, d.max as f64, d.min as f64)
            }
            Affinity::Dense(m) => {
                let deg: Vec<f64> = m.row_iter().map(|r| r.sum()).collect();
                let n = deg.len().max(1) as f64;
                let mean = deg.iter().sum::<f64>() / n;
                let max = deg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = deg.iter().copied().fold(f64::INFINITY, f64::min);
                (deg, mean, max, min)
            }
        }
    }

    /// `D_tau^{-1} A_tau` as a dense matrix.
    fn walk_dense(&self, tau: f64, inv: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut p = match self {
            Affinity::Graph(a) => a.to_dense(),
            Affinity::Dense(m) => (*m).clone(),
        };
        for i in 0..n {
            p[(i, i)] += tau;
            p.row_mut(i).scale_mut(inv[i]);
        }
        p
    }

    /// `alpha * (D_tau^{-1} A_tau) x`.
    fn walk_apply(&self, tau: f64, inv: &[f64], alpha: f64, x: &DMatrix<f64>, dense: Option<&DMatrix<f64>>) -> DMatrix<f64> {
        match (self, dense) {
            (_, Some(p)) => p * x * alpha,
            (Affinity::Graph(a), None) => {
                let n = a.n();
                let mut out = DMatrix::zeros(n, x.ncols());
                for c in 0..x.ncols() {
                    let col = x.column(c);
                    let mut dst = out.column_mut(c);
                    for i in 0..n {
                        let mut s = tau * col[i];
                        for &j in a.neighbors(i) {
                            s += col[j];
                        }
                        dst[i] = alpha * inv[i] * s;
                    }
                }
                out
            }
            (Affinity::Dense(_), None) => unreachable!("dense affinities carry their walk matrix"),
        }
    }
}

/// Similarity matrix of an observed graph.
pub fn build_slim(adj: &AdjacencyMatrix, cfg: &SlimConfig) -> Result<SlimMatrix> {
    if adj.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    build(Affinity::Graph(adj), cfg)
}

/// Similarity matrix of a population edge-probability matrix, with degrees
/// taken as its row sums.
pub fn build_population_slim(omega: &ExpectedAdjacency, cfg: &SlimConfig) -> Result<SlimMatrix> {
    if omega.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    build(Affinity::Dense(omega.matrix()), cfg)
}

fn build(aff: Affinity<'_>, cfg: &SlimConfig) -> Result<SlimMatrix> {
    cfg.validate()?;
    let n = aff.n();
    let alpha = cfg.alpha();
    let (deg, mean, max, min) = aff.degrees();
    let tau = cfg.tau.resolve(mean, max, min);
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be nonnegative, got {tau}")));
    }

    let exact = matches!(cfg.variant, Variant::Exact);
    let mut inv = Vec::with_capacity(n);
    for (i, &d) in deg.iter().enumerate() {
        let dt = d + tau;
        if dt > 0.0 {
            inv.push(1.0 / dt);
        } else if exact {
            return Err(Error::IsolatedNode { index: i });
        } else {
            // zero row of the walk matrix; the node's embedding row degenerates
            inv.push(0.0);
        }
    }

    let w = match cfg.variant {
        Variant::Exact => {
            if n > cfg.max_exact_n {
                return Err(Error::TooLargeForExact { n, limit: cfg.max_exact_n });
            }
            // alpha rounds to 1 for tiny gamma, and I - P is singular
            if alpha >= 1.0 {
                return Err(Error::NonFinite("I - alpha P is singular at this gamma"));
            }
            let mut system = aff.walk_dense(tau, &inv);
            system.scale_mut(-alpha);
            for i in 0..n {
                system[(i, i)] += 1.0;
            }
            system
                .lu()
                .solve(&DMatrix::identity(n, n))
                .ok_or(Error::NonFinite("factorizing I - alpha P"))?
        }
        Variant::Approx { terms } => {
            let dense = match aff {
                Affinity::Dense(_) => Some(aff.walk_dense(tau, &inv)),
                Affinity::Graph(_) => None,
            };
            let mut term = aff.walk_apply(tau, &inv, alpha, &DMatrix::identity(n, n), dense.as_ref());
            let mut sum = term.clone();
            for _ in 1..terms {
                term = aff.walk_apply(tau, &inv, alpha, &term, dense.as_ref());
                sum += &term;
            }
            sum
        }
    };

    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("building the similarity matrix"));
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (w[(i, j)] + w[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(SlimMatrix { m, tau })
}

/// Leading eigenpairs by eigenvalue magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `n x K`, unit-norm columns.
    pub vectors: DMatrix<f64>,
    /// The K leading eigenvalues, `|lambda|` nonincreasing.
    pub values: Vec<f64>,
    /// The (K+1)-th eigenvalue by magnitude, when K < n.
    pub next_value: Option<f64>,
}

impl SpectralEmbedding {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// `lambda_K - lambda_{K+1}`.
    pub fn eigengap(&self) -> Option<f64> {
        self.next_value.map(|next| self.values[self.values.len() - 1] - next)
    }
}

/// Computes the `k` eigenpairs of the symmetric matrix `m` with largest
/// `|lambda|`.
///
/// Equal magnitudes are ordered positive first. Each eigenvector is signed so
/// that its largest-magnitude component (first one on ties) is positive.
pub fn leading_eigenpairs(m: &DMatrix<f64>, k: usize) -> Result<SpectralEmbedding> {
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::TooManyCommunities { k, n });
    }
    let cap = (1000 * n).max(10_000);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, cap).ok_or(Error::EigenNonConvergence)?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("computing eigenvalues"));
    }

    let order = magnitude_order(eig.eigenvalues.as_slice());
    let mut vectors = DMatrix::zeros(n, k);
    for (slot, &idx) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(idx).clone_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(slot, &v);
    }
    Ok(SpectralEmbedding {
        vectors,
        values: order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect(),
        next_value: order.get(k).map(|&i| eig.eigenvalues[i]),
    })
}

/// Indices sorted by `|lambda|` descending; magnitudes equal up to rounding
/// put the positive value first.
fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tie = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap()
            .then(values[b].partial_cmp(&values[a]).unwrap())
    });
    // bubble positive members of near-tied pairs forward
    let mut changed = true;
    while changed {
        changed = false;
        for w in 0..idx.len().saturating_sub(1) {
            let (a, b) = (values[idx[w]], values[idx[w + 1]]);
            if (a.abs() - b.abs()).abs() <= tie && a < b {
                idx.swap(w, w + 1);
                changed = true;
            }
        }
    }
    idx
}

/// Row-normalized embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedEmbedding {
    pub rows: DMatrix<f64>,
    /// Rows whose norm was below `DEGENERATE_ROW_NORM`, replaced by `e_1`.
    pub degenerate: Vec<usize>,
}

pub const DEGENERATE_ROW_NORM: f64 = 1e-12;

impl NormalizedEmbedding {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn k(&self) -> usize {
        self.rows.ncols()
    }
}

pub fn row_normalize(x: &DMatrix<f64>) -> NormalizedEmbedding {
    let mut rows = x.clone();
    let mut degenerate = Vec::new();
    for i in 0..rows.nrows() {
        let mut row = rows.row_mut(i);
        let norm = row.norm();
        if norm < DEGENERATE_ROW_NORM {
            row.fill(0.0);
            row[0] = 1.0;
            degenerate.push(i);
        } else {
            row /= norm;
        }
    }
    NormalizedEmbedding { rows, degenerate }
}

#[derive(Debug, Clone, PartialEq)]
pub enum A4Warning {
    /// A leading eigenvalue is not positive.
    NonPositive { index: usize, value: f64 },
    /// `lambda_K` does not strictly dominate the magnitude of the rest.
    NotDominant { lambda_k: f64, next_abs: f64 },
}

impl fmt::Display for A4Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            A4Warning::NonPositive { index, value } => {
                write!(f, "leading eigenvalue {} is non-positive ({value:.6e})", index + 1)
            }
            A4Warning::NotDominant { lambda_k, next_abs } => write!(
                f,
                "lambda_K = {lambda_k:.6e} does not dominate |lambda_K+1| = {next_abs:.6e}"
            ),
        }
    }
}

/// Checks that the leading eigenvalues are positive and that the K-th
/// strictly dominates the remaining spectrum in magnitude. Informational only.
pub fn a4_diagnostic(x: &SpectralEmbedding) -> Vec<A4Warning> {
    let mut out: Vec<A4Warning> = x
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= 0.0)
        .map(|(index, &value)| A4Warning::NonPositive { index, value })
        .collect();
    if let (Some(&lambda_k), Some(next)) = (x.values.last(), x.next_value) {
        if lambda_k <= next.abs() {
            out.push(A4Warning::NotDominant { lambda_k, next_abs: next.abs() });
        }
    }
    for w in &out {
        log::warn!("{w}");
    }
    out
}
