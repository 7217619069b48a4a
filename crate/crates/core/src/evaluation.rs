//! Permutation-invariant error metrics.

use nalgebra::DMatrix;

use crate::dcmm::MembershipMatrix;
use crate::error::{Error, Result};

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `perm` with row `r` assigned to column `perm[r]`. Shortest
/// augmenting paths with vertex potentials, O(K^3).
pub fn solve_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert!(cost.is_square(), "assignment needs a square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[(r0 - 1, col - 1)] - u[r0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for col in 1..=n {
        perm[owner[col] - 1] = col - 1;
    }
    perm
}

/// Sum of `cost[(r, perm[r])]`, added in ascending order of value so that
/// transposed problems give bit-identical totals.
pub fn assignment_cost(cost: &DMatrix<f64>, perm: &[usize]) -> f64 {
    let mut terms: Vec<f64> = perm.iter().enumerate().map(|(r, &c)| cost[(r, c)]).collect();
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    terms.iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `min_O (1/n) sum_i || (Pi_hat O)_i - pi_i ||_1`.
    pub mixed_hamming: f64,
    /// Estimated column `k` is matched to true column `permutation[k]`.
    pub permutation: Vec<usize>,
    /// Nodes whose hardened estimated label, after relabeling, differs from
    /// the hardened true label.
    pub hard_errors: usize,
    pub n: usize,
}

/// `C(k, l) = sum_i |Pi_hat(i, k) - Pi(i, l)|`.
pub fn column_cost_matrix(pi_hat: &DMatrix<f64>, pi_true: &DMatrix<f64>) -> DMatrix<f64> {
    let k = pi_hat.ncols();
    DMatrix::from_fn(k, k, |a, b| {
        pi_hat
            .column(a)
            .iter()
            .zip(pi_true.column(b).iter())
            .map(|(x, y)| (x - y).abs())
            .sum()
    })
}

pub fn mixed_hamming_error(pi_hat: &MembershipMatrix, pi_true: &MembershipMatrix) -> Result<ErrorReport> {
    if pi_hat.n() != pi_true.n() || pi_hat.k() != pi_true.k() {
        return Err(Error::Dimension(format!(
            "estimate is {}x{} but truth is {}x{}",
            pi_hat.n(),
            pi_hat.k(),
            pi_true.n(),
            pi_true.k()
        )));
    }
    let n = pi_hat.n();
    let cost = column_cost_matrix(pi_hat.matrix(), pi_true.matrix());
    let permutation = solve_assignment(&cost);
    let mixed_hamming = assignment_cost(&cost, &permutation) / n as f64;

    let hat = pi_hat.hard_labels();
    let truth = pi_true.hard_labels();
    let hard_errors = hat.iter().zip(&truth).filter(|(h, t)| permutation[**h] != **t).count();
    Ok(ErrorReport {
        mixed_hamming,
        permutation,
        hard_errors,
        n,
    })
}

/// Minimum number of misclassified nodes over relabelings of the estimate.
/// Labels are 0-based and must be below `k`. Returns the count and the
/// permutation mapping estimated label to true label.
pub fn hard_error_count(labels_hat: &[usize], labels_true: &[usize], k: usize) -> Result<(usize, Vec<usize>)> {
    if labels_hat.len() != labels_true.len() {
        return Err(Error::Dimension("label vectors differ in length".into()));
    }
    if let Some(&bad) = labels_hat.iter().chain(labels_true).find(|&&l| l >= k) {
        return Err(Error::InvalidParameter(format!("label {bad} out of range for K = {k}")));
    }
    let mut confusion = DMatrix::<f64>::zeros(k, k);
    for (&h, &t) in labels_hat.iter().zip(labels_true) {
        confusion[(h, t)] += 1.0;
    }
    let perm = solve_assignment(&(-confusion.clone()));
    let matched: f64 = perm.iter().enumerate().map(|(h, &t)| confusion[(h, t)]).sum();
    Ok((labels_hat.len() - matched as usize, perm))
}
