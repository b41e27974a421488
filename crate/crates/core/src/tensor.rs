//! Dense N-way tensors and the multilinear algebra built on them.
//!
//! Storage is generalized column-major: the first index varies fastest, so
//! the element at zero-based multi-index `(i_1, ..., i_N)` lives at offset
//! `sum_k i_k * prod_{m<k} I_m`. Modes are zero-based throughout the API.
//!
//! The mode-k unfolding places `i_k` on the rows and enumerates the remaining
//! indices on the columns in increasing mode order, lower modes fastest. With
//! that ordering the flattened form of a full multi-mode product is
//! `A(k) X_(k) (A(N) ⊗ ... ⊗ A(k+1) ⊗ A(k-1) ⊗ ... ⊗ A(1))ᵀ`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    /// First `cols` columns of the `rows × rows` identity.
    pub fn truncated_identity(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.data[i + i * rows] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i + i * n] = v;
        }
        m
    }

    /// Builds a matrix from a column-major buffer.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a row-major buffer.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r + c * rows] = data[r * cols + c];
            }
        }
        Ok(m)
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let flat: Vec<f64> = rows
            .iter()
            .flat_map(|row| {
                assert_eq!(row.len(), c, "ragged rows");
                row.iter().copied()
            })
            .collect();
        Self::from_row_major(r, c, &flat).expect("shape checked above")
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m.data[r + c * rows] = f(r, c);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r + c * self.rows]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r + c * self.rows] = v;
    }

    /// Column-major buffer.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [f64] {
        let rows = self.rows;
        &mut self.data[c * rows..(c + 1) * rows]
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.data[k + j * other.rows];
                if b == 0.0 {
                    continue;
                }
                let src = &self.data[k * self.rows..(k + 1) * self.rows];
                for (d, &a) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            let b = other.column(j);
            for i in 0..self.cols {
                out.data[i + j * self.cols] = dot(self.column(i), b);
            }
        }
        Ok(out)
    }

    /// `self · selfᵀ`, symmetric by construction.
    pub fn gram_rows(&self) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for c in 0..self.cols {
            let col = self.column(c);
            for j in 0..n {
                let b = col[j];
                if b == 0.0 {
                    continue;
                }
                for i in j..n {
                    out.data[i + j * n] += col[i] * b;
                }
            }
        }
        for j in 0..n {
            for i in j + 1..n {
                out.data[j + i * n] = out.data[i + j * n];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// Keeps the first `cols` columns.
    pub fn leading_columns(&self, cols: usize) -> Matrix {
        assert!(cols <= self.cols);
        Matrix {
            rows: self.rows,
            cols,
            data: self.data[..cols * self.rows].to_vec(),
        }
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrized(&self) -> Matrix {
        assert_eq!(self.rows, self.cols, "symmetrize requires a square matrix");
        Matrix::from_fn(self.rows, self.cols, |r, c| {
            0.5 * (self.get(r, c) + self.get(c, r))
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Views the matrix as an order-2 tensor sharing the same buffer layout.
    pub fn into_tensor(self) -> DenseTensor {
        DenseTensor {
            shape: vec![self.rows, self.cols],
            data: self.data,
        }
    }

    fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn try_add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.try_sub(rhs).expect("matrix shape mismatch")
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.try_add(rhs).expect("matrix shape mismatch")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense N-way array of `f64` with generalized column-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Dimension(format!(
                "buffer of length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        })
    }

    /// Fills a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        validate_shape(shape)?;
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, &extent) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < extent {
                    break;
                }
                *i = 0;
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index order mismatch");
        let mut stride = 1;
        let mut off = 0;
        for (&i, &extent) in index.iter().zip(&self.shape) {
            assert!(i < extent, "index out of bounds");
            off += i * stride;
            stride *= extent;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], v: f64) {
        let off = self.offset(index);
        self.data[off] = v;
    }

    /// Same buffer under a new shape with the same element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// Interprets an order-2 tensor as a matrix.
    pub fn into_matrix(self) -> Result<Matrix> {
        if self.shape.len() != 2 {
            return Err(Error::Dimension(format!(
                "order-{} tensor is not a matrix",
                self.shape.len()
            )));
        }
        Matrix::from_col_major(self.shape[0], self.shape[1], self.data)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.shape.len() {
            return Err(Error::InvalidMode {
                mode,
                order: self.shape.len(),
            });
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "shape {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// Strides `(prod of extents below mode, extent, prod above)`.
    fn split_at_mode(&self, mode: usize) -> (usize, usize, usize) {
        let below: usize = self.shape[..mode].iter().product();
        let above: usize = self.shape[mode + 1..].iter().product();
        (below, self.shape[mode], above)
    }

    /// Mode-`mode` unfolding (zero-based mode).
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let (below, extent, above) = self.split_at_mode(mode);
        let mut out = Matrix::zeros(extent, below * above);
        for b in 0..above {
            for i in 0..extent {
                let src = &self.data[below * (i + extent * b)..][..below];
                for (a, &v) in src.iter().enumerate() {
                    out.data[i + extent * (a + below * b)] = v;
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        if mode >= shape.len() {
            return Err(Error::InvalidMode {
                mode,
                order: shape.len(),
            });
        }
        let below: usize = shape[..mode].iter().product();
        let above: usize = shape[mode + 1..].iter().product();
        let extent = shape[mode];
        if m.rows != extent || m.cols != below * above {
            return Err(Error::Dimension(format!(
                "{}x{} matrix cannot fold into mode {mode} of shape {:?}",
                m.rows, m.cols, shape
            )));
        }
        let mut data = vec![0.0; extent * below * above];
        for b in 0..above {
            for i in 0..extent {
                let dst = &mut data[below * (i + extent * b)..][..below];
                for (a, d) in dst.iter_mut().enumerate() {
                    *d = m.data[i + extent * (a + below * b)];
                }
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// `self ×_mode u`: contracts `u`'s columns against the mode index.
    pub fn mode_product(&self, u: &Matrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let (below, extent, above) = self.split_at_mode(mode);
        if u.cols != extent {
            return Err(Error::Dimension(format!(
                "{}x{} factor cannot act on mode {mode} of extent {extent}",
                u.rows, u.cols
            )));
        }
        let new_extent = u.rows;
        let mut shape = self.shape.clone();
        shape[mode] = new_extent;
        let mut data = vec![0.0; below * new_extent * above];
        for b in 0..above {
            for j in 0..extent {
                let src = &self.data[below * (j + extent * b)..][..below];
                for jp in 0..new_extent {
                    let w = u.data[jp + new_extent * j];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut data[below * (jp + new_extent * b)..][..below];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        Ok(Self { shape, data })
    }

    /// Applies factors along distinct modes, in ascending mode order.
    pub fn multi_mode_product(&self, factors: &[(&Matrix, usize)]) -> Result<Self> {
        let mut seen = vec![false; self.order()];
        for &(_, mode) in factors {
            self.check_mode(mode)?;
            if seen[mode] {
                return Err(Error::DuplicateMode(mode));
            }
            seen[mode] = true;
        }
        let mut ordered: Vec<_> = factors.to_vec();
        ordered.sort_by_key(|&(_, mode)| mode);
        let mut out = self.clone();
        for (u, mode) in ordered {
            out = out.mode_product(u, mode)?;
        }
        Ok(out)
    }

    /// Applies the transpose of each factor along its mode.
    pub fn multi_mode_product_t(&self, factors: &[(&Matrix, usize)]) -> Result<Self> {
        let transposed: Vec<Matrix> = factors.iter().map(|(u, _)| u.transpose()).collect();
        let refs: Vec<(&Matrix, usize)> = transposed
            .iter()
            .zip(factors)
            .map(|(t, &(_, mode))| (t, mode))
            .collect();
        self.multi_mode_product(&refs)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(squared_distance(&self.data, &other.data).sqrt())
    }

    pub fn try_add(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &DenseTensor) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// Entrywise mean of a nonempty set of same-shape tensors.
    pub fn mean<'a, I>(set: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a DenseTensor>,
    {
        let mut iter = set.into_iter();
        let first = iter.next().ok_or(Error::Empty("mean of an empty set"))?;
        let mut acc = first.data.clone();
        let mut count = 1usize;
        for t in iter {
            first.check_same_shape(t)?;
            for (a, &v) in acc.iter_mut().zip(&t.data) {
                *a += v;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(Self {
            shape: first.shape.clone(),
            data: acc,
        })
    }

    /// Stacks same-shape tensors along a new trailing mode.
    pub fn stack(samples: &[DenseTensor]) -> Result<Self> {
        let first = samples.first().ok_or(Error::Empty("stack of an empty set"))?;
        let mut data = Vec::with_capacity(first.len() * samples.len());
        for s in samples {
            first.check_same_shape(s)?;
            data.extend_from_slice(&s.data);
        }
        let mut shape = first.shape.clone();
        shape.push(samples.len());
        Ok(Self { shape, data })
    }

    /// Splits along the trailing mode; the inverse of [`DenseTensor::stack`].
    pub fn unstack(&self) -> Vec<DenseTensor> {
        let (&count, rest) = self.shape.split_last().expect("tensor has at least one mode");
        if rest.is_empty() {
            return self
                .data
                .iter()
                .map(|&v| DenseTensor {
                    shape: vec![1],
                    data: vec![v],
                })
                .collect();
        }
        let chunk: usize = rest.iter().product();
        (0..count)
            .map(|i| DenseTensor {
                shape: rest.to_vec(),
                data: self.data[i * chunk..(i + 1) * chunk].to_vec(),
            })
            .collect()
    }
}

impl Add for &DenseTensor {
    type Output = DenseTensor;

    fn add(self, rhs: &DenseTensor) -> DenseTensor {
        self.try_add(rhs).expect("tensor shape mismatch")
    }
}

impl Sub for &DenseTensor {
    type Output = DenseTensor;

    fn sub(self, rhs: &DenseTensor) -> DenseTensor {
        self.try_sub(rhs).expect("tensor shape mismatch")
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::Dimension("tensor order must be at least 1".into()));
    }
    if shape.contains(&0) {
        return Err(Error::Dimension(format!(
            "shape {shape:?} has a zero extent"
        )));
    }
    Ok(())
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] · b`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = Matrix::zeros(rows, cols);
    for ja in 0..a.cols {
        for ia in 0..a.rows {
            let s = a.get(ia, ja);
            if s == 0.0 {
                continue;
            }
            for jb in 0..b.cols {
                for ib in 0..b.rows {
                    out.set(ia * b.rows + ib, ja * b.cols + jb, s * b.get(ib, jb));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_tensor(shape: &[usize], seed: u64) -> DenseTensor {
        let mut r = lcg(seed);
        DenseTensor::from_fn(shape, |_| r()).unwrap()
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut r = lcg(seed);
        Matrix::from_fn(rows, cols, |_, _| r())
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn storage_offsets_are_column_major() {
        let t = DenseTensor::from_fn(&[2, 3, 2], |i| (i[0] + 10 * i[1] + 100 * i[2]) as f64).unwrap();
        assert_eq!(t.as_slice()[1], 1.0);
        assert_eq!(t.as_slice()[2], 10.0);
        assert_eq!(t.as_slice()[6], 100.0);
        assert_eq!(t.get(&[1, 2, 1]), 121.0);
    }

    #[test]
    fn unfold_order_two() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m1 = t.unfold(0).unwrap();
        assert_eq!(m1, Matrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]));
        let m2 = t.unfold(1).unwrap();
        assert_eq!(m2, Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
    }

    #[test]
    fn unfold_mode_two_matches_index_formula() {
        let shape = [2, 3, 2];
        let t = DenseTensor::from_fn(&shape, |i| (1 + i[0] + 2 * i[1] + 6 * i[2]) as f64).unwrap();
        let m = t.unfold(1).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 4));
        let mut expected = Matrix::zeros(3, 4);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    // remaining modes (0, 2), mode 0 fastest
                    let col = i + 2 * k;
                    expected.set(j, col, (1 + i + 2 * j + 6 * k) as f64);
                }
            }
        }
        assert_eq!(m, expected);
    }

    #[test]
    fn fold_roundtrips() {
        let t = random_tensor(&[3, 4, 2], 1);
        assert_eq!(DenseTensor::fold(&t.unfold(0).unwrap(), 0, t.shape()).unwrap(), t);
        let t = random_tensor(&[2, 2, 5], 2);
        assert_eq!(DenseTensor::fold(&t.unfold(2).unwrap(), 2, t.shape()).unwrap(), t);
        let z = DenseTensor::fold(&Matrix::zeros(3, 4), 1, &[2, 3, 2]).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fold_rejects_wrong_shape() {
        let err = DenseTensor::fold(&Matrix::zeros(3, 5), 1, &[2, 3, 2]).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn invalid_mode_is_reported() {
        let t = random_tensor(&[2, 2], 3);
        assert!(matches!(t.unfold(2), Err(Error::InvalidMode { mode: 2, order: 2 })));
    }

    #[test]
    fn mode_product_identity_and_sums() {
        let t = random_tensor(&[3, 4, 2], 4);
        for k in 0..3 {
            let id = Matrix::identity(t.shape()[k]);
            assert_eq!(t.mode_product(&id, k).unwrap(), t);
        }
        let t = DenseTensor::from_fn(&[2, 3], |i| (i[0] * 3 + i[1]) as f64).unwrap();
        let ones = Matrix::from_rows(&[&[1.0, 1.0]]);
        let s = t.mode_product(&ones, 0).unwrap();
        assert_eq!(s.shape(), &[1, 3]);
        for j in 0..3 {
            assert_eq!(s.get(&[0, j]), t.get(&[0, j]) + t.get(&[1, j]));
        }
    }

    #[test]
    fn mode_product_matches_contraction_loop() {
        let t = random_tensor(&[3, 4, 2], 5);
        let u = random_matrix(5, 4, 6);
        let y = t.mode_product(&u, 1).unwrap();
        assert_eq!(y.shape(), &[3, 5, 2]);
        for i in 0..3 {
            for jp in 0..5 {
                for k in 0..2 {
                    let mut acc = 0.0;
                    for j in 0..4 {
                        acc += u.get(jp, j) * t.get(&[i, j, k]);
                    }
                    assert!((y.get(&[i, jp, k]) - acc).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn mode_product_rejects_mismatch() {
        let t = random_tensor(&[3, 4], 7);
        assert!(matches!(
            t.mode_product(&Matrix::zeros(2, 3), 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn multi_mode_product_kronecker_identity() {
        let t = random_tensor(&[2, 3, 2], 8);
        let a = random_matrix(2, 2, 9);
        let b = random_matrix(2, 3, 10);
        let c = random_matrix(3, 2, 11);
        let y = t.multi_mode_product(&[(&a, 0), (&b, 1), (&c, 2)]).unwrap();
        let lhs = y.unfold(1).unwrap();
        let rhs = &(&b * &t.unfold(1).unwrap()) * &kronecker(&c, &a).transpose();
        assert!(max_abs_diff(lhs.as_slice(), rhs.as_slice()) < 1e-12);
    }

    #[test]
    fn multi_mode_product_commutes_and_rejects_duplicates() {
        let t = random_tensor(&[3, 4], 12);
        let a = random_matrix(2, 3, 13);
        let b = random_matrix(5, 4, 14);
        let ab = t.mode_product(&a, 0).unwrap().mode_product(&b, 1).unwrap();
        let ba = t.mode_product(&b, 1).unwrap().mode_product(&a, 0).unwrap();
        assert!(max_abs_diff(ab.as_slice(), ba.as_slice()) < 1e-12);
        let id = Matrix::identity(3);
        assert!(matches!(
            t.multi_mode_product(&[(&id, 0), (&id, 0)]),
            Err(Error::DuplicateMode(0))
        ));
        let i3 = Matrix::identity(3);
        let i4 = Matrix::identity(4);
        assert_eq!(t.multi_mode_product(&[(&i3, 0), (&i4, 1)]).unwrap(), t);
    }

    #[test]
    fn kronecker_blocks() {
        let b = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let k = kronecker(&Matrix::identity(2), &b);
        let expected = Matrix::from_rows(&[
            &[1.0, 2.0, 0.0, 0.0],
            &[3.0, 4.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 2.0],
            &[0.0, 0.0, 3.0, 4.0],
        ]);
        assert_eq!(k, expected);
        assert_eq!(kronecker(&Matrix::from_rows(&[&[2.0]]), &b), b.scale(2.0));
    }

    #[test]
    fn kronecker_matches_definition() {
        let a = random_matrix(2, 3, 15);
        let b = random_matrix(3, 2, 16);
        let k = kronecker(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 6));
        for i in 0..2 {
            for j in 0..3 {
                for r in 0..3 {
                    for s in 0..2 {
                        assert_eq!(k.get(i * 3 + r, j * 2 + s), a.get(i, j) * b.get(r, s));
                    }
                }
            }
        }
    }

    #[test]
    fn norms_and_distance() {
        let ones = DenseTensor::from_fn(&[2, 3, 2], |_| 1.0).unwrap();
        assert!((ones.norm() - 12f64.sqrt()).abs() < 1e-15);
        assert_eq!(ones.distance(&ones).unwrap(), 0.0);
        let t = random_tensor(&[3, 2, 4], 17);
        for k in 0..3 {
            let f = t.unfold(k).unwrap().frobenius_norm();
            assert!((f - t.norm()).abs() <= 1e-12 * t.norm());
        }
        let other = random_tensor(&[3, 2], 18);
        assert!(t.distance(&other).is_err());
    }

    #[test]
    fn means() {
        let t = random_tensor(&[2, 3], 19);
        assert_eq!(DenseTensor::mean([&t, &t]).unwrap(), t);
        let neg = t.scale(-1.0);
        assert!(DenseTensor::mean([&t, &neg]).unwrap().as_slice().iter().all(|&v| v == 0.0));
        let set: Vec<_> = (0..3).map(|s| random_tensor(&[2, 3], 20 + s)).collect();
        let m = DenseTensor::mean(&set).unwrap();
        for i in 0..6 {
            let avg = (set[0].as_slice()[i] + set[1].as_slice()[i] + set[2].as_slice()[i]) / 3.0;
            assert!((m.as_slice()[i] - avg).abs() < 1e-12);
        }
        let empty: Vec<DenseTensor> = Vec::new();
        assert!(matches!(DenseTensor::mean(&empty), Err(Error::Empty(_))));
        assert!(DenseTensor::mean([&t, &random_tensor(&[3, 2], 1)]).is_err());
    }

    #[test]
    fn stack_unstack_roundtrip() {
        let set: Vec<_> = (0..4).map(|s| random_tensor(&[2, 3], 30 + s)).collect();
        let stacked = DenseTensor::stack(&set).unwrap();
        assert_eq!(stacked.shape(), &[2, 3, 4]);
        assert_eq!(stacked.unstack(), set);
    }

    #[test]
    fn degenerate_extents_are_legal() {
        let t = random_tensor(&[1, 3, 1], 40);
        let m = t.unfold(0).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 3));
        assert_eq!(DenseTensor::fold(&m, 0, t.shape()).unwrap(), t);
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
        assert!(DenseTensor::zeros(&[]).is_err());
    }
}
