use mixslim::graph::AdjacencyMatrix;
use mixslim::slim::{build_slim, leading_eigenpairs, SlimConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
/// Returns eigenvalues and eigenvectors as columns.
fn jacobi(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

fn oracle_leading(a: &DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (vals, vecs) = jacobi(a);
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].abs().partial_cmp(&vals[i].abs()).unwrap());
    let picked = &order[..k];
    (
        picked.iter().map(|&i| vals[i]).collect(),
        DMatrix::from_fn(a.nrows(), k, |r, c| vecs[(r, picked[c])]),
    )
}

/// Largest principal angle between two orthonormal column spans.
fn max_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let svd = (u.transpose() * v).svd(false, false);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    smallest.acos()
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&raw + raw.transpose()) * 0.5
}

#[test]
fn random_symmetric_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a = random_symmetric(30, &mut rng);
        let (vals, vecs) = oracle_leading(&a, 4);
        // the 5th magnitude must be separated, otherwise the subspace is not defined
        let (all, _) = jacobi(&a);
        let mut mags: Vec<f64> = all.iter().map(|v| v.abs()).collect();
        mags.sort_by(|x, y| y.partial_cmp(x).unwrap());
        if mags[3] - mags[4] < 1e-3 {
            continue;
        }
        let emb = leading_eigenpairs(&a, 4).unwrap();
        for (x, y) in emb.values.iter().zip(&vals) {
            assert!((x.abs() - y.abs()).abs() <= 1e-10, "{x} vs {y}");
        }
        assert!(max_angle(&emb.vectors, &vecs) <= 1e-8);
        assert!((emb.next_value.unwrap().abs() - mags[4]).abs() <= 1e-10);
    }
}

#[test]
fn slim_matrix_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 30;
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| rng.gen::<f64>() < if i / 10 == j / 10 { 0.6 } else { 0.08 })
        .collect();
    let adj = AdjacencyMatrix::from_edges(n, edges).unwrap();
    let m = build_slim(&adj, &SlimConfig::default()).unwrap();
    let (vals, vecs) = oracle_leading(m.matrix(), 3);
    let emb = leading_eigenpairs(m.matrix(), 3).unwrap();
    for (x, y) in emb.values.iter().zip(&vals) {
        assert!((x - y).abs() <= 1e-10);
    }
    assert!(max_angle(&emb.vectors, &vecs) <= 1e-8);
    for j in 0..3 {
        let col = emb.vectors.column(j);
        let big = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        assert!(big > 0.0);
    }
}
