//! The degree-corrected mixed membership model.
//!
//! A model is the tuple `(P, theta, Pi)`: a symmetric `K x K` mixing matrix,
//! positive degree parameters and an `n x K` row-stochastic membership
//! matrix. Edge `(i, j)`, `i != j`, appears independently with probability
//! `theta_i * theta_j * pi_i' P pi_j`.

mod presets;

pub use presets::{Experiment1, PresetRecord, SubExperiment, ThetaLaw};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::AdjacencyMatrix;

/// Row-sum tolerance for membership rows.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// `n x K` matrix whose rows are probability mass functions over communities.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix(DMatrix<f64>);

impl MembershipMatrix {
    pub fn new(pi: DMatrix<f64>) -> Result<Self> {
        if pi.ncols() == 0 {
            return Err(Error::Dimension("membership matrix needs K >= 1".into()));
        }
        for (i, row) in pi.row_iter().enumerate() {
            if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidParameter(format!(
                    "membership row {i} has an entry outside [0, 1]"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "membership row {i} sums to {s}, not 1"
                )));
            }
        }
        Ok(Self(pi))
    }

    /// Rescales each nonnegative row to unit l1 norm. Rows must have a
    /// positive sum.
    pub fn from_unnormalized(mut raw: DMatrix<f64>) -> Result<Self> {
        for i in 0..raw.nrows() {
            let mut row = raw.row_mut(i);
            if row.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(Error::InvalidParameter(format!("row {i} is all zero")));
            }
            row /= s;
        }
        Self::new(raw)
    }

    /// Pure memberships from 0-based community labels.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        let mut pi = DMatrix::zeros(labels.len(), k);
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::InvalidParameter(format!("label {l} of node {i} is not below K = {k}")));
            }
            pi[(i, l)] = 1.0;
        }
        Ok(Self(pi))
    }

    /// Every row equal to `(1/K, ..., 1/K)`.
    pub fn uniform(n: usize, k: usize) -> Self {
        Self(DMatrix::from_element(n, k, 1.0 / k as f64))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn purity(&self, i: usize) -> f64 {
        self.0.row(i).max()
    }

    pub fn is_pure(&self, i: usize) -> bool {
        self.purity(i) == 1.0
    }

    /// Argmax per row, ties going to the lowest community index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.0
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for k in 1..row.len() {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// Column `k` of the result is column `perm[k]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        Self(DMatrix::from_fn(self.n(), self.k(), |i, k| self.0[(i, perm[k])]))
    }

    /// Row `perm[i]` of the result is row `i` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = DMatrix::zeros(self.n(), self.k());
        for i in 0..self.n() {
            out.set_row(perm[i], &self.0.row(i));
        }
        Self(out)
    }
}

/// Strictly positive degree heterogeneity parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeParams(Vec<f64>);

impl DegreeParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = theta.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("theta({i}) = {v} is not positive")));
        }
        Ok(Self(theta))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Symmetric `K x K` matrix of baseline connection intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(DMatrix<f64>);

impl MixingMatrix {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if !p.is_square() || p.nrows() == 0 {
            return Err(Error::Dimension("mixing matrix must be square and nonempty".into()));
        }
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                if !(0.0..=1.0).contains(&p[(i, j)]) {
                    return Err(Error::InvalidParameter(format!("P({i}, {j}) = {} is outside [0, 1]", p[(i, j)])));
                }
                if p[(i, j)] != p[(j, i)] {
                    return Err(Error::InvalidParameter(format!("P is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self(p))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("mixing matrix rows must all have length K".into()));
        }
        Self::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    /// Diagonal `diag`, every off-diagonal entry `off`.
    pub fn two_level(k: usize, diag: f64, off: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(k, k, |i, j| if i == j { diag } else { off }))
    }

    pub fn k(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn is_nonsingular(&self, tol: f64) -> bool {
        self.0.clone().determinant().abs() > tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcmmParams {
    pub p: MixingMatrix,
    pub theta: DegreeParams,
    pub pi: MembershipMatrix,
}

impl DcmmParams {
    pub fn new(p: MixingMatrix, theta: DegreeParams, pi: MembershipMatrix) -> Result<Self> {
        if theta.len() != pi.n() {
            return Err(Error::Dimension(format!("theta has {} entries but Pi has {} rows", theta.len(), pi.n())));
        }
        if p.k() != pi.k() {
            return Err(Error::Dimension(format!("P is {0}x{0} but Pi has {1} columns", p.k(), pi.k())));
        }
        Ok(Self { p, theta, pi })
    }

    pub fn n(&self) -> usize {
        self.pi.n()
    }

    pub fn k(&self) -> usize {
        self.pi.k()
    }

    pub fn purity(&self, i: usize) -> f64 {
        self.pi.purity(i)
    }
}

/// The population edge-probability matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedAdjacency(DMatrix<f64>);

impl ExpectedAdjacency {
    /// Wraps a symmetric matrix with entries in `[0, 1]`; the diagonal is
    /// forced to zero.
    pub fn new(mut omega: DMatrix<f64>) -> Result<Self> {
        if !omega.is_square() {
            return Err(Error::Dimension("expected adjacency must be square".into()));
        }
        omega.fill_diagonal(0.0);
        let n = omega.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = omega[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::ProbabilityOutOfRange { row: i, col: j, value: v });
                }
                if v != omega[(j, i)] {
                    return Err(Error::InvalidParameter(format!("expected adjacency not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self(omega))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `Theta Pi P Pi' Theta` with the diagonal set to zero. The upper triangle is
/// evaluated and mirrored, so the result is exactly symmetric.
pub fn expected_adjacency(params: &DcmmParams) -> Result<ExpectedAdjacency> {
    let n = params.n();
    let pi = params.pi.matrix();
    let theta = params.theta.values();
    // rows of Pi P, so that Omega(i, j) = theta_i theta_j <(Pi P)_i, pi_j>
    let pi_p = pi * params.p.matrix();
    let mut omega = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = theta[i] * theta[j] * pi_p.row(i).dot(&pi.row(j));
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ProbabilityOutOfRange { row: i, col: j, value: v });
            }
            omega[(i, j)] = v;
            omega[(j, i)] = v;
        }
    }
    Ok(ExpectedAdjacency(omega))
}

/// Independent Bernoulli draws on the upper triangle of `omega`, mirrored.
pub fn sample_from_expected<R: Rng + ?Sized>(omega: &ExpectedAdjacency, rng: &mut R) -> AdjacencyMatrix {
    let n = omega.n();
    let m = omega.matrix();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < m[(i, j)] {
                edges.push((i, j));
            }
        }
    }
    AdjacencyMatrix::from_edges(n, edges).expect("indices are in range")
}

/// Draws an adjacency matrix from the model, reproducibly for a given seed.
pub fn sample_adjacency(params: &DcmmParams, seed: u64) -> Result<AdjacencyMatrix> {
    let omega = expected_adjacency(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_from_expected(&omega, &mut rng))
}
