//! Shared test oracles, independent of the library's implementation
//! paths: a dense Jacobi SVD on materialized matrices, a triple-loop
//! matrix product, and a brute-force nDCG recomputation.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::path::PathBuf;

/// Directory holding the committed fixture files.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Triple-loop f64 matrix product of row-major matrices.
pub fn matmul_oracle(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for p in 0..k {
                acc += a[i * k + p] * b[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

/// Singular values (descending) of a dense row-major m x n matrix,
/// computed by cyclic one-sided Jacobi directly on the materialized
/// matrix. Used as the reference for the factored SVD path.
pub fn dense_singular_values(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    // Column-major working copy.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a[i * n + j]).collect())
        .collect();
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let app = dot(&cols[p], &cols[p]);
                let aqq = dot(&cols[q], &cols[q]);
                let apq = dot(&cols[p], &cols[q]);
                if apq.abs() <= 1e-15 * (app * aqq).sqrt().max(f64::MIN_POSITIVE) {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let vp = cols[p][i];
                    let vq = cols[q][i];
                    cols[p][i] = c * vp - s * vq;
                    cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigma
}

/// Brute-force nDCG recomputation: explicit gain and discount loops.
pub fn ndcg_oracle(ranked: &[i8], ideal: &[i8], k: usize) -> f64 {
    fn gain(r: i8) -> f64 {
        if r <= 0 {
            0.0
        } else {
            let mut g = 1.0f64;
            for _ in 0..r {
                g *= 2.0;
            }
            g - 1.0
        }
    }
    fn dcg(grades: &[i8], k: usize) -> f64 {
        let mut acc = 0.0;
        for (i, &g) in grades.iter().enumerate() {
            if i >= k {
                break;
            }
            acc += gain(g) * std::f64::consts::LN_2 / ((i as f64) + 2.0).ln();
        }
        acc
    }
    let mut best = ideal.to_vec();
    best.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&best, k);
    if idcg == 0.0 {
        0.0
    } else {
        dcg(ranked, k) / idcg
    }
}

/// Frobenius norm of a row-major matrix.
pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
pub mod ttest_fixtures;
