//! Dense SVD, symmetric eigendecomposition and the regularized ratio-trace
//! solver.
//!
//! Both decompositions are Jacobi methods: cyclic two-sided rotations for
//! symmetric matrices, one-sided (Hestenes) rotations for the SVD. They are
//! slow compared to LAPACK but accurate, dependency-free and deterministic.
//!
//! Sign convention shared by every routine here: in each returned vector the
//! entry of largest magnitude is nonnegative, ties going to the lowest index.

use crate::error::{Error, Result};
use crate::tensor::{dot, Matrix};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `a = u · diag(s) · vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

/// Eigenpairs of a symmetric matrix, values nonincreasing.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Solution of the symmetric-definite generalized problem.
#[derive(Debug, Clone)]
pub struct GeneralizedEig {
    /// Unit-length generalized eigenvectors, one per column.
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

/// Index of the largest-magnitude entry, lowest index on ties.
fn pivot_index(v: &[f64]) -> usize {
    let mut best = 0;
    let mut best_abs = f64::NEG_INFINITY;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best = i;
            best_abs = x.abs();
        }
    }
    best
}

fn needs_flip(v: &[f64]) -> bool {
    !v.is_empty() && v[pivot_index(v)] < 0.0
}

/// Scales `v` to unit length and applies the sign convention in place.
pub(crate) fn normalize_with_sign(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    if needs_flip(v) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Stable descending permutation.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(s + sᵀ)/2` first.
pub fn sym_eig(s: &Matrix) -> Result<EigResult> {
    if s.rows() != s.cols() {
        return Err(Error::Dimension(format!(
            "sym_eig needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("sym_eig"));
    }
    let n = s.rows();
    let mut a = s.symmetrized().into_vec();
    let mut v = Matrix::identity(n).into_vec();
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    acc += a[i + j * n] * a[i + j * n];
                }
            }
        }
        acc.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= 1e-15 * frob || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            if off <= 1e-10 * frob {
                break;
            }
            return Err(Error::Convergence {
                routine: "sym_eig",
                sweeps,
                residual: off / frob,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p + q * n];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p + p * n];
                let aqq = a[q + q * n];
                // skip rotations that cannot change the diagonal in floating point
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[p + q * n] = 0.0;
                    a[q + p * n] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k + p * n];
                    let akq = a[k + q * n];
                    a[k + p * n] = c * akp - sn * akq;
                    a[k + q * n] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p + k * n];
                    let aqk = a[q + k * n];
                    a[p + k * n] = c * apk - sn * aqk;
                    a[q + k * n] = sn * apk + c * aqk;
                }
                a[p + q * n] = 0.0;
                a[q + p * n] = 0.0;
                for k in 0..n {
                    let vkp = v[k + p * n];
                    let vkq = v[k + q * n];
                    v[k + p * n] = c * vkp - sn * vkq;
                    v[k + q * n] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i + i * n]).collect();
    let order = descending_order(&diag);
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(diag[src]);
        let col = &v[src * n..(src + 1) * n];
        let flip = needs_flip(col);
        for (out, &x) in vectors.column_mut(dst).iter_mut().zip(col) {
            *out = if flip { -x } else { x };
        }
    }
    Ok(EigResult { values, vectors })
}

/// Thin SVD by one-sided Jacobi rotations.
pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd"));
    }
    if a.rows() < a.cols() {
        let t = svd_tall(&a.transpose())?;
        // left vectors of aᵀ are right vectors of a; re-apply the sign rule to u
        let mut u = t.v;
        let mut v = t.u;
        for j in 0..u.cols() {
            if needs_flip(u.column(j)) {
                u.column_mut(j).iter_mut().for_each(|x| *x = -*x);
                v.column_mut(j).iter_mut().for_each(|x| *x = -*x);
            }
        }
        return Ok(SvdResult { u, s: t.s, v });
    }
    svd_tall(a)
}

fn svd_tall(a: &Matrix) -> Result<SvdResult> {
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let tol = f64::EPSILON;
    // columns that have collapsed to rounding noise carry no direction
    let floor = {
        let f = a.frobenius_norm() * f64::EPSILON;
        f * f
    };

    let mut sweeps = 0;
    loop {
        let mut worst: f64 = 0.0;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(w.column(p), w.column(p));
                let beta = dot(w.column(q), w.column(q));
                let gamma = dot(w.column(p), w.column(q));
                if gamma == 0.0 || alpha <= floor || beta <= floor {
                    continue;
                }
                let cos = gamma.abs() / (alpha * beta).sqrt();
                worst = worst.max(cos);
                if cos <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps == MAX_SWEEPS {
            if worst <= 1e-12 {
                break;
            }
            return Err(Error::Convergence {
                routine: "svd",
                sweeps,
                residual: worst,
            });
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| dot(w.column(j), w.column(j)).sqrt()).collect();
    let order = descending_order(&norms);
    let smax = norms.iter().copied().fold(0.0, f64::max);
    let cutoff = smax * (m.max(n) as f64) * f64::EPSILON;

    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        vs.column_mut(dst).copy_from_slice(v.column(src));
        if sigma > cutoff && sigma > 0.0 {
            for (o, &x) in u.column_mut(dst).iter_mut().zip(w.column(src)) {
                *o = x / sigma;
            }
        } else {
            deficient.push(dst);
        }
    }
    complete_orthonormal_columns(&mut u, &deficient);

    for j in 0..n {
        if needs_flip(u.column(j)) {
            u.column_mut(j).iter_mut().for_each(|x| *x = -*x);
            vs.column_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(SvdResult { u, s, v: vs })
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows();
    let (left, right) = m.as_mut_slice().split_at_mut(q * rows);
    let cp = &mut left[p * rows..(p + 1) * rows];
    let cq = &mut right[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed columns with unit vectors orthogonal to every other
/// column, drawing candidates from the standard basis in index order.
fn complete_orthonormal_columns(u: &mut Matrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &col in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal basis");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let proj = dot(u.column(j), &e);
                    for (x, &b) in e.iter_mut().zip(u.column(j)) {
                        *x -= proj * b;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                for (o, x) in u.column_mut(col).iter_mut().zip(&e) {
                    *o = x / norm;
                }
                filled.push(col);
                break;
            }
        }
    }
}

/// Left singular vectors and singular values from the eigendecomposition of
/// `a · aᵀ`. Returns all `rows` left vectors.
pub fn left_singular_via_gram(a: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    if !a.is_finite() {
        return Err(Error::NonFinite("svd"));
    }
    let eig = sym_eig(&a.gram_rows())?;
    let s = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok((eig.vectors, s))
}

/// Dominant `d` eigenvectors of `(s_w + ridge·tr(s_w)/n·I)⁻¹ s_b`.
pub fn ratio_trace_eig(s_b: &Matrix, s_w: &Matrix, d: usize, ridge: f64) -> Result<Matrix> {
    Ok(generalized_eig(s_b, s_w, d, ridge)?.vectors)
}

/// Symmetric-definite reduction behind [`ratio_trace_eig`], returning the
/// generalized eigenvalues alongside the vectors.
///
/// When `s_w` has zero trace the ridge is taken relative to `tr(s_b)/n`
/// instead (and to 1 if both vanish), so noise-free classes stay solvable.
pub fn generalized_eig(s_b: &Matrix, s_w: &Matrix, d: usize, ridge: f64) -> Result<GeneralizedEig> {
    let n = s_b.rows();
    if s_b.cols() != n || s_w.rows() != n || s_w.cols() != n {
        return Err(Error::Dimension(format!(
            "scatter matrices {}x{} and {}x{} must be square and equal",
            s_b.rows(),
            s_b.cols(),
            s_w.rows(),
            s_w.cols()
        )));
    }
    if d == 0 || d > n {
        return Err(Error::Dimension(format!(
            "requested {d} eigenvectors of a {n}x{n} problem"
        )));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::Config(format!("ridge must be a nonnegative number, got {ridge}")));
    }
    if !s_b.is_finite() || !s_w.is_finite() {
        return Err(Error::NonFinite("ratio_trace_eig"));
    }
    let s_b = s_b.symmetrized();
    let mut reg = s_w.symmetrized();
    let mut scale = reg.trace() / n as f64;
    if scale <= 0.0 {
        scale = s_b.trace() / n as f64;
    }
    if scale <= 0.0 {
        scale = 1.0;
    }
    let shift = ridge * scale;
    for i in 0..n {
        reg.set(i, i, reg.get(i, i) + shift);
    }

    let w_eig = sym_eig(&reg)?;
    let lmax = w_eig.values[0];
    let lmin = w_eig.values[n - 1];
    if !(lmin > 0.0) || lmin <= 1e-13 * lmax {
        return Err(Error::Singular { min_eig: lmin });
    }
    // whitening transform Q Λ^{-1/2}
    let mut whiten = w_eig.vectors.clone();
    for (j, &l) in w_eig.values.iter().enumerate() {
        let inv = 1.0 / l.sqrt();
        whiten.column_mut(j).iter_mut().for_each(|x| *x *= inv);
    }
    let reduced = whiten.t_matmul(&(&s_b * &whiten))?;
    let inner = sym_eig(&reduced)?;

    let mut vectors = Matrix::zeros(n, d);
    for j in 0..d {
        let mut col: Vec<f64> = (0..n)
            .map(|r| dot_row(&whiten, r, inner.vectors.column(j)))
            .collect();
        normalize_with_sign(&mut col);
        vectors.column_mut(j).copy_from_slice(&col);
    }
    Ok(GeneralizedEig {
        vectors,
        values: inner.values[..d].to_vec(),
    })
}

fn dot_row(m: &Matrix, r: usize, v: &[f64]) -> f64 {
    v.iter().enumerate().map(|(c, &x)| m.get(r, c) * x).sum()
}

/// Cosines of the principal angles between the column spans of `a` and `b`.
///
/// Columns need not be orthonormal; both bases are orthonormalized first.
pub fn principal_angle_cosines(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let cross = qa.t_matmul(&qb)?;
    Ok(svd(&cross)?.s.into_iter().map(|c| c.min(1.0)).collect())
}

/// Largest principal angle (radians) between two column spans.
///
/// Computed from the sines, `‖(I − QaQaᵀ)Qb‖₂`, which stay accurate for
/// nearly identical subspaces.
pub fn max_principal_angle(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.cols() != b.cols() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let resid = &qb - &(&qa * &qa.t_matmul(&qb)?);
    let sine = svd(&resid)?.s[0];
    Ok(sine.min(1.0).asin())
}

fn orthonormal_basis(a: &Matrix) -> Result<Matrix> {
    let r = svd(a)?;
    Ok(r.u)
}
