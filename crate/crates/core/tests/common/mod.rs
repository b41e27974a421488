//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use gda_core::{DenseTensor, LabeledTensorSet, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Plain `Vec<Vec<f64>>` row-major matrices keep the oracles free of the
/// library's own kernels.
pub type Dense = Vec<Vec<f64>>;

pub fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect()).collect()
}

pub fn from_dense(d: &Dense) -> Matrix {
    let rows: Vec<&[f64]> = d.iter().map(Vec::as_slice).collect();
    Matrix::from_rows(&rows)
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for p in 0..k {
            for j in 0..m {
                out[i][j] += a[i][p] * b[p][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

/// Block `(i, j)` equals `a[i][j] · b`.
pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ar, ac, br, bc) = (a.len(), a[0].len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for p in 0..br {
                for q in 0..bc {
                    out[i * br + p][j * bc + q] = a[i][j] * b[p][q];
                }
            }
        }
    }
    out
}

pub fn frob(a: &Dense) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frob_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mode-`k` unfolding by explicit index arithmetic over multi-indices.
pub fn unfold_oracle(t: &DenseTensor, k: usize) -> Dense {
    let shape = t.shape();
    let cols: usize = shape.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &e)| e).product();
    let mut out = vec![vec![0.0; cols]; shape[k]];
    for lin in 0..t.len() {
        let mut idx = vec![0; shape.len()];
        let mut rest = lin;
        for (m, &e) in shape.iter().enumerate() {
            idx[m] = rest % e;
            rest /= e;
        }
        let mut col = 0;
        let mut stride = 1;
        for (m, &e) in shape.iter().enumerate() {
            if m != k {
                col += idx[m] * stride;
                stride *= e;
            }
        }
        out[idx[k]][col] = t.get(&idx);
    }
    out
}

/// Modified Gram-Schmidt on the columns of a tall matrix.
pub fn orthonormalize(a: &Dense) -> Dense {
    let (n, d) = (a.len(), a[0].len());
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| (0..n).map(|i| a[i][j]).collect()).collect();
    for j in 0..d {
        for p in 0..j {
            let proj: f64 = (0..n).map(|i| cols[j][i] * cols[p][i]).sum();
            for i in 0..n {
                cols[j][i] -= proj * cols[p][i];
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|x| *x /= norm);
    }
    (0..n).map(|i| (0..d).map(|j| cols[j][i]).collect()).collect()
}

/// Dominant `d`-dimensional invariant subspace of a symmetric PSD matrix by
/// orthogonal iteration.
pub fn top_eigenspace(s: &Dense, d: usize, iters: usize) -> Dense {
    let n = s.len();
    let mut q: Dense = (0..n).map(|i| (0..d).map(|j| ((i * 7 + j * 3) % 11) as f64 + if i == j { 5.0 } else { 0.0 }).collect()).collect();
    q = orthonormalize(&q);
    for _ in 0..iters {
        q = orthonormalize(&mul(s, &q));
    }
    q
}

/// Lower-triangular Cholesky factor.
pub fn cholesky(a: &Dense) -> Dense {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn lower_inverse(l: &Dense) -> Dense {
    let n = l.len();
    let mut inv = vec![vec![0.0; n]; n];
    for c in 0..n {
        for i in 0..n {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (0..i).map(|p| l[i][p] * inv[p][c]).sum();
            inv[i][c] = (rhs - s) / l[i][i];
        }
    }
    inv
}

/// Classical Fisher LDA on vector samples: the top `d` eigenvectors of
/// `(S_W + ridge·tr(S_W)/n·I)⁻¹ S_B` via Cholesky whitening.
pub fn vector_lda(data: &LabeledTensorSet, d: usize, ridge: f64) -> Dense {
    let n = data.sample_shape()[0];
    let groups = data.indices_by_class();
    let xs: Vec<&[f64]> = data.samples().iter().map(|s| s.as_slice()).collect();
    let mean_of = |idx: &[usize]| -> Vec<f64> {
        (0..n).map(|r| idx.iter().map(|&i| xs[i][r]).sum::<f64>() / idx.len() as f64).collect()
    };
    let all: Vec<usize> = (0..xs.len()).collect();
    let global = mean_of(&all);
    let mut s_b = vec![vec![0.0; n]; n];
    let mut s_w = vec![vec![0.0; n]; n];
    for g in &groups {
        let m = mean_of(g);
        for r in 0..n {
            for c in 0..n {
                s_b[r][c] += g.len() as f64 * (m[r] - global[r]) * (m[c] - global[c]);
            }
        }
        for &i in g {
            for r in 0..n {
                for c in 0..n {
                    s_w[r][c] += (xs[i][r] - m[r]) * (xs[i][c] - m[c]);
                }
            }
        }
    }
    let shift = ridge * (0..n).map(|i| s_w[i][i]).sum::<f64>() / n as f64;
    for (i, row) in s_w.iter_mut().enumerate() {
        row[i] += shift;
    }
    let l_inv = lower_inverse(&cholesky(&s_w));
    let whitened = mul(&mul(&l_inv, &s_b), &transpose(&l_inv));
    let y = top_eigenspace(&whitened, d, 400);
    mul(&transpose(&l_inv), &y)
}

/// Largest principal angle between two column spans, via Gram-Schmidt bases
/// and the largest residual norm of projecting one basis onto the other.
pub fn subspace_angle(a: &Dense, b: &Dense) -> f64 {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let proj = mul(&qa, &mul(&transpose(&qa), &qb));
    let resid: Dense = qb.iter().zip(&proj).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect();
    // spectral norm of the residual through its small Gram matrix
    let g = mul(&transpose(&resid), &resid);
    let top = top_eigenspace(&g, 1, 200);
    let v: Vec<f64> = top.iter().map(|r| r[0]).collect();
    let gv: Vec<f64> = g.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
    let lambda: f64 = gv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().max(0.0);
    lambda.sqrt().min(1.0).asin()
}
