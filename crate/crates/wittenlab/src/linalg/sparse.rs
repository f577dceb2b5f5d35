use std::ops::{Add, Mul};

/// Scalar types that can live in a [`Csr`] matrix.
pub trait Entry: Copy + Default + PartialEq + Add<Output = Self> + Mul<Output = Self> + 'static {}
impl Entry for f64 {}
impl Entry for i64 {}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Entry> Csr<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Csr { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicates are summed, explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for &k in &order {
            let (r, c, v) = triplets[k];
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
            if last == Some((r, c)) {
                let l = values.len() - 1;
                values[l] = values[l] + v;
            } else {
                indices.push(c);
                values.push(v);
                rows.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((&r, &c), &v) in rows.iter().zip(&indices).zip(&values) {
            if v != T::default() {
                indptr[r + 1] += 1;
                keep_idx.push(c);
                keep_val.push(v);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr { nrows, ncols, indptr, indices: keep_idx, values: keep_val }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                out.push((r, c, v));
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<(usize, usize, T)> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        Csr::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Csr<T>) -> Csr<T> {
        assert_eq!(self.ncols, other.nrows);
        let mut trip = Vec::new();
        let mut acc: Vec<T> = vec![T::default(); other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] = acc[c] + a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                trip.push((r, c, acc[c]));
                acc[c] = T::default();
                mark[c] = false;
            }
            touched.clear();
        }
        Csr::from_triplets(self.nrows, other.ncols, &trip)
    }

    pub fn map<U: Entry>(&self, f: impl Fn(T) -> U) -> Csr<U> {
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::default())
    }
}

impl Csr<f64> {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (c, v) in self.row(r) {
                    out[c] += v * yr;
                }
            }
        }
        out
    }

    /// Returns `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Csr<f64> {
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out.values[k] *= left[r] * right[self.indices[k]];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm, an upper bound for the spectral norm.
    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::<f64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn from_dense(m: faer::MatRef<'_, f64>) -> Csr<f64> {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Csr::from_triplets(m.nrows(), m.ncols(), &t)
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(blocks: &[&Csr<f64>]) -> Csr<f64> {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        let mut out = Csr::zeros(0, ncols);
        out.indptr = vec![0];
        for b in blocks {
            assert_eq!(b.ncols, ncols);
            let base = out.indices.len();
            out.indices.extend_from_slice(&b.indices);
            out.values.extend_from_slice(&b.values);
            for r in 0..b.nrows {
                out.indptr.push(base + b.indptr[r + 1]);
            }
            out.nrows += b.nrows;
        }
        out
    }

    pub fn identity(n: usize) -> Csr<f64> {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Csr::from_triplets(n, n, &t)
    }
}

impl Csr<i64> {
    pub fn to_f64(&self) -> Csr<f64> {
        self.map(|v| v as f64)
    }

    pub fn to_dense_i64(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[r][c] += v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = Csr::from_triplets(2, 2, &[(0, 0, 1i64), (0, 0, 2), (1, 1, 1), (1, 1, -1)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.to_dense_i64(), vec![vec![3, 0], vec![0, 0]]);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = Csr::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        let b = Csr::from_triplets(3, 2, &[(0, 1, 3.0), (1, 0, 4.0), (2, 1, 5.0)]);
        let c = a.matmul(&b).to_dense();
        let d = &a.to_dense() * &b.to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(c[(i, j)], d[(i, j)]);
            }
        }
    }

    #[test]
    fn transpose_matvec() {
        let a = Csr::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        let y = [1.0, 2.0];
        assert_eq!(a.matvec_t(&y), a.transpose().matvec(&y));
    }

    #[test]
    fn vstack_rows() {
        let a = Csr::from_triplets(1, 2, &[(0, 1, 1.0)]);
        let b = Csr::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 3.0)]);
        let s = Csr::vstack(&[&a, &b]);
        assert_eq!(s.nrows, 3);
        assert_eq!(s.matvec(&[1.0, 1.0]), vec![1.0, 2.0, 3.0]);
    }
}
