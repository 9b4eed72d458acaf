//! SVD of a factored bilinear form `A = B * C` without materializing `A`.
//!
//! `B` is `d x r` and `C` is `r x d` with `r <= d`, so `A` has rank at most
//! `r`. Both factors are reduced to an `r x r` core via Gram-Schmidt
//! orthonormalization, the core is decomposed by one-sided Jacobi
//! iteration, and the singular vectors are lifted back to dimension `d`.
//! All internal arithmetic is f64.

// The rotations update two columns of the same matrix per index; plain
// index loops are the clearest way to write that.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Singular triplets of a factored product, nonzero values only.
///
/// `singular_values` is non-increasing; `left_vectors[k]` and
/// `right_vectors[k]` are the unit-norm singular vectors of the k-th
/// triplet. Triplets are defined up to a joint sign flip of both vectors.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub left_vectors: Vec<Vec<f64>>,
    pub right_vectors: Vec<Vec<f64>>,
}

impl SvdResult {
    /// Number of retained (nonzero) triplets.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Sum of the retained singular values.
    pub fn nuclear_norm(&self) -> f64 {
        self.singular_values.iter().sum()
    }
}

/// Maximum one-sided Jacobi sweeps before reporting non-convergence.
const MAX_SWEEPS: usize = 40;

/// Relative cutoff below which a singular value is treated as zero.
const RANK_CUTOFF: f64 = 1e-10;

/// Column-major f64 matrix, minimal internal helper.
struct ColMat {
    rows: usize,
    cols: Vec<Vec<f64>>,
}

impl ColMat {
    fn from_tensor_cols(t: &Tensor) -> ColMat {
        let (m, n) = (t.rows(), t.cols());
        let mut cols = vec![vec![0.0f64; m]; n];
        for i in 0..m {
            for (j, col) in cols.iter_mut().enumerate() {
                col[i] = t.at(i, j) as f64;
            }
        }
        ColMat { rows: m, cols }
    }

    fn from_tensor_rows(t: &Tensor) -> ColMat {
        // Columns of the result are the rows of `t` (i.e. t transposed).
        let (m, n) = (t.rows(), t.cols());
        let mut cols = vec![vec![0.0f64; n]; m];
        for (i, col) in cols.iter_mut().enumerate() {
            for (j, v) in col.iter_mut().enumerate() {
                *v = t.at(i, j) as f64;
            }
        }
        ColMat { rows: n, cols }
    }
}

fn dot64(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm64(x: &[f64]) -> f64 {
    dot64(x, x).sqrt()
}

/// Modified Gram-Schmidt with reorthogonalization.
///
/// Returns `(q, r)` with `q.cols` orthonormal (zero columns where the
/// input is rank deficient) and `r` upper triangular (row-major `k x k`)
/// such that input = q * r.
fn gram_schmidt(a: &ColMat) -> (ColMat, Vec<Vec<f64>>) {
    let k = a.cols.len();
    let scale: f64 = a
        .cols
        .iter()
        .map(|c| dot64(c, c))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0f64; k]; k];
    for j in 0..k {
        let mut v = a.cols[j].clone();
        // Two projection passes keep Q orthonormal even for badly
        // conditioned inputs.
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate().take(j) {
                let proj = dot64(qi, &v);
                r[i][j] += proj;
                for (ve, qe) in v.iter_mut().zip(qi.iter()) {
                    *ve -= proj * qe;
                }
            }
        }
        let n = norm64(&v);
        if n > scale * 1e-14 {
            r[j][j] = n;
            for ve in &mut v {
                *ve /= n;
            }
            q.push(v);
        } else {
            r[j][j] = 0.0;
            q.push(vec![0.0; a.rows]);
        }
    }
    (
        ColMat {
            rows: a.rows,
            cols: q,
        },
        r,
    )
}

type ColumnSet = Vec<Vec<f64>>;

/// One-sided Jacobi SVD of a square core matrix (column-major).
///
/// Rotates column pairs until the off-diagonal Frobenius mass of the
/// implicit Gram matrix drops below `1e-10` times the core's squared
/// Frobenius norm. Returns `(m, v)` where the columns of `m` are the
/// scaled left vectors (norm = singular value) and `v` accumulates the
/// right rotations.
fn jacobi_core(mut m: ColumnSet) -> Result<(ColumnSet, ColumnSet)> {
    let r = m.len();
    let mut v: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let mut e = vec![0.0; r];
            e[i] = 1.0;
            e
        })
        .collect();

    let frob2: f64 = m.iter().map(|c| dot64(c, c)).sum();
    if frob2 == 0.0 {
        return Ok((m, v));
    }
    let tol = 1e-10 * frob2;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..r {
            for q in (p + 1)..r {
                let gpq = dot64(&m[p], &m[q]);
                off += gpq * gpq;
                if gpq == 0.0 {
                    continue;
                }
                let gpp = dot64(&m[p], &m[p]);
                let gqq = dot64(&m[q], &m[q]);
                // Rutishauser rotation annihilating the (p,q) Gram entry.
                let tau = (gqq - gpp) / (2.0 * gpq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m[p].len() {
                    let mp = m[p][i];
                    let mq = m[q][i];
                    m[p][i] = c * mp - s * mq;
                    m[q][i] = s * mp + c * mq;
                }
                for i in 0..r {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if off.sqrt() <= tol {
            return Ok((m, v));
        }
    }

    // Recompute the residual for the error report.
    let mut off = 0.0f64;
    for p in 0..r {
        for q in (p + 1)..r {
            let gpq = dot64(&m[p], &m[q]);
            off += gpq * gpq;
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi SVD did not converge after {MAX_SWEEPS} sweeps (off-diagonal residual {:.3e}, tolerance {:.3e})",
        off.sqrt(),
        tol
    )))
}

/// SVD of the product `b * c` (shapes `d x r` and `r x d`, `r <= d`)
/// computed without materializing the `d x d` product.
///
/// Returns at most `r` nonzero singular triplets, values non-increasing.
pub fn svd_factored(b: &Tensor, c: &Tensor) -> Result<SvdResult> {
    if b.shape().len() != 2 || c.shape().len() != 2 {
        return Err(Error::shape("svd_factored", b.shape(), c.shape()));
    }
    let (d, r) = (b.rows(), b.cols());
    if c.rows() != r || c.cols() != d {
        return Err(Error::shape("svd_factored", b.shape(), c.shape()));
    }
    if r > d {
        return Err(Error::Input(format!(
            "svd_factored expects the inner dimension <= the outer dimension, got {r} > {d}"
        )));
    }

    let (qb, rb) = gram_schmidt(&ColMat::from_tensor_cols(b));
    let (qc, rc) = gram_schmidt(&ColMat::from_tensor_rows(c));

    // Core = R_b * R_c^T, stored column-major for the Jacobi pass.
    let mut core = vec![vec![0.0f64; r]; r];
    for i in 0..r {
        for j in 0..r {
            let mut acc = 0.0;
            for k in 0..r {
                acc += rb[i][k] * rc[j][k];
            }
            core[j][i] = acc;
        }
    }

    let (scaled, v_core) = jacobi_core(core)?;

    let mut order: Vec<(f64, usize)> = scaled
        .iter()
        .enumerate()
        .map(|(k, col)| (norm64(col), k))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let sigma_max = order.first().map(|o| o.0).unwrap_or(0.0);
    let cutoff = sigma_max * RANK_CUTOFF;

    let mut singular_values = Vec::new();
    let mut left_vectors = Vec::new();
    let mut right_vectors = Vec::new();
    for (sigma, k) in order {
        if sigma <= cutoff || sigma == 0.0 {
            break;
        }
        let u_core: Vec<f64> = scaled[k].iter().map(|x| x / sigma).collect();
        let mut u = vec![0.0f64; d];
        let mut vv = vec![0.0f64; d];
        for (i, coeff) in u_core.iter().enumerate() {
            for (ue, qe) in u.iter_mut().zip(qb.cols[i].iter()) {
                *ue += coeff * qe;
            }
        }
        for (i, coeff) in v_core[k].iter().enumerate() {
            for (ve, qe) in vv.iter_mut().zip(qc.cols[i].iter()) {
                *ve += coeff * qe;
            }
        }
        // The lifted vectors are unit norm up to rounding; tighten them.
        let un = norm64(&u);
        let vn = norm64(&vv);
        if un > 0.0 && vn > 0.0 {
            u.iter_mut().for_each(|x| *x /= un);
            vv.iter_mut().for_each(|x| *x /= vn);
        }
        singular_values.push(sigma * un * vn);
        left_vectors.push(u);
        right_vectors.push(vv);
    }

    Ok(SvdResult {
        singular_values,
        left_vectors,
        right_vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(shape: Vec<usize>, data: Vec<f32>) -> Tensor {
        Tensor::new(shape, data).unwrap()
    }

    #[test]
    fn rank_one() {
        // b = e1 (3x1), c = 2 e1^T (1x3): single triplet sigma=2, u=v=e1
        // up to a joint sign.
        let b = tensor(vec![3, 1], vec![1., 0., 0.]);
        let c = tensor(vec![1, 3], vec![2., 0., 0.]);
        let svd = svd_factored(&b, &c).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.singular_values[0] - 2.0).abs() < 1e-12);
        let sign = svd.left_vectors[0][0].signum();
        assert!((svd.left_vectors[0][0] - sign).abs() < 1e-12);
        assert!((svd.right_vectors[0][0] - sign).abs() < 1e-12);
    }

    #[test]
    fn rotation_by_90_degrees() {
        // A = [[0,-1],[1,0]]: sigma = (1,1) and u_k is orthogonal to v_k.
        let b = tensor(vec![2, 2], vec![1., 0., 0., 1.]);
        let c = tensor(vec![2, 2], vec![0., -1., 1., 0.]);
        let svd = svd_factored(&b, &c).unwrap();
        assert_eq!(svd.rank(), 2);
        for k in 0..2 {
            assert!((svd.singular_values[k] - 1.0).abs() < 1e-10);
            let uv = dot64(&svd.left_vectors[k], &svd.right_vectors[k]);
            assert!(uv.abs() < 1e-10, "u.v = {uv}");
        }
    }

    #[test]
    fn zero_product_has_no_triplets() {
        let b = tensor(vec![3, 2], vec![0.0; 6]);
        let c = tensor(vec![2, 3], vec![0.0; 6]);
        let svd = svd_factored(&b, &c).unwrap();
        assert_eq!(svd.rank(), 0);
        assert_eq!(svd.nuclear_norm(), 0.0);
    }

    #[test]
    fn singular_values_non_increasing() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let b = tensor(vec![6, 3], (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let c = tensor(vec![3, 6], (0..18).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let svd = svd_factored(&b, &c).unwrap();
        for w in svd.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn rejects_wide_factors() {
        let b = tensor(vec![2, 3], vec![0.0; 6]);
        let c = tensor(vec![3, 2], vec![0.0; 6]);
        assert!(svd_factored(&b, &c).is_err());
    }

    #[test]
    fn rank_deficient_factors() {
        // Second column of b duplicates the first: rank 1 despite r = 2.
        let b = tensor(vec![3, 2], vec![1., 1., 2., 2., 0., 0.]);
        let c = tensor(vec![2, 3], vec![1., 0., 0., 1., 0., 0.]);
        let svd = svd_factored(&b, &c).unwrap();
        assert_eq!(svd.rank(), 1);
        // A = [[2,0,0],[4,0,0],[0,0,0]], sigma_1 = sqrt(4+16) = sqrt(20).
        assert!((svd.singular_values[0] - 20f64.sqrt()).abs() < 1e-10);
    }
}
