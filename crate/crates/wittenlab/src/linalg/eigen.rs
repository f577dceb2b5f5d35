//! Lowest eigenpairs of `K = GᵀG` for a sparse `G`.
//!
//! Eigenvalues are returned as squared singular values of `G` restricted to the
//! computed subspace, which keeps exponentially small eigenvalues accurate in
//! absolute terms of order `ε‖G‖` rather than `ε‖K‖`.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense;
use super::sparse::Csr;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub seed: u64,
    /// Residual tolerance: `‖Kv − λv‖ ≤ tol·(1 + λ)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Problems with at most this many unknowns use a dense SVD.
    pub dense_limit: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { seed: 7, tol: 1e-8, max_iter: 400, dense_limit: 1200 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Euclidean-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// `K = GᵀG` given by its factor.
#[derive(Clone, Debug)]
pub struct FactoredOperator {
    pub g: Csr<f64>,
}

impl FactoredOperator {
    pub fn new(g: Csr<f64>) -> Self {
        FactoredOperator { g }
    }

    pub fn dim(&self) -> usize {
        self.g.ncols
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.g.matvec_t(&self.g.matvec(x))
    }

    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let kv = self.apply(v);
        kv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
    }

    pub fn assemble(&self) -> Csr<f64> {
        self.g.transpose().matmul(&self.g)
    }

    /// The `count` smallest eigenpairs in ascending order.
    pub fn lowest(&self, count: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
        let n = self.dim();
        if count > n {
            return Err(Error::InvalidArgument(format!("requested {count} eigenpairs of a {n}-dimensional operator")));
        }
        if count == 0 {
            return Ok(Eigenpairs { values: vec![], vectors: vec![], residuals: vec![] });
        }
        let mut out = if n <= opts.dense_limit { self.lowest_dense(count)? } else { self.lowest_sparse(count, opts)? };
        for v in out.vectors.iter_mut() {
            dense::canonical_sign(v);
        }
        out.residuals = out.values.iter().zip(&out.vectors).map(|(&l, v)| self.residual(l, v)).collect();
        for (i, (&l, &r)) in out.values.iter().zip(&out.residuals).enumerate() {
            if r > opts.tol * (1.0 + l) {
                return Err(Error::NonConvergence { index: i, residual: r });
            }
        }
        Ok(out)
    }

    fn lowest_dense(&self, count: usize) -> Result<Eigenpairs> {
        let n = self.dim();
        let rows = self.g.nrows.max(n);
        let mut g = Mat::<f64>::zeros(rows, n);
        for r in 0..self.g.nrows {
            for (c, v) in self.g.row(r) {
                g[(r, c)] += v;
            }
        }
        let (s, _, v) = dense::svd(g.as_ref())?;
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        for k in 0..count {
            let j = n - 1 - k;
            values.push(s[j] * s[j]);
            vectors.push(dense::col(v.as_ref(), j));
        }
        Ok(Eigenpairs { values, vectors, residuals: vec![] })
    }

    fn lowest_sparse(&self, count: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
        let n = self.dim();
        let guard = (count / 2).max(8).min(n - count);
        let p = count + guard;
        let k = self.assemble();
        let maxdiag = (0..n).map(|i| k.row(i).filter(|&(c, _)| c == i).map(|(_, v)| v).sum::<f64>()).fold(0.0, f64::max);
        let shift = 1e-9 * maxdiag.max(1e-300);
        let mut trip: Vec<Triplet<usize, usize, f64>> = k.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        trip.extend((0..n).map(|i| Triplet::new(i, i, shift)));
        let ks = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| Error::Numeric(format!("sparse assembly failed: {e:?}")))?;
        super::init();
        let llt = ks
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Numeric(format!("sparse Cholesky failed: {e:?}")))?;

        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut x = Mat::<f64>::from_fn(n, p, |_, _| rng.random::<f64>() - 0.5);
        let mut last_res = f64::INFINITY;
        for it in 0..opts.max_iter {
            use faer::linalg::solvers::Solve;
            llt.solve_in_place(x.as_mut());
            let q = dense::orthonormal_columns(x.as_ref());
            let (values, vectors) = self.rayleigh_ritz(&q)?;
            let mut worst: f64 = 0.0;
            for j in 0..count {
                let r = self.residual(values[j], &vectors[j]);
                worst = worst.max(r / (1.0 + values[j]));
            }
            last_res = worst;
            if worst <= opts.tol * 1e-2 {
                return Ok(Eigenpairs {
                    values: values[..count].to_vec(),
                    vectors: vectors[..count].to_vec(),
                    residuals: vec![],
                });
            }
            if it + 1 == opts.max_iter && worst <= opts.tol {
                log::debug!("subspace iteration stopped at residual {worst:e} after {} iterations", opts.max_iter);
                return Ok(Eigenpairs { values: values[..count].to_vec(), vectors: vectors[..count].to_vec(), residuals: vec![] });
            }
            x = dense::from_cols(n, &vectors);
        }
        Err(Error::NonConvergence { index: 0, residual: last_res })
    }

    /// Ritz pairs of K on span(q), ascending, computed from the SVD of G·q.
    fn rayleigh_ritz(&self, q: &Mat<f64>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let p = q.ncols();
        let rows = self.g.nrows.max(p);
        let mut gq = Mat::<f64>::zeros(rows, p);
        for j in 0..p {
            let cj = self.g.matvec(&dense::col(q.as_ref(), j));
            for (i, v) in cj.into_iter().enumerate() {
                gq[(i, j)] = v;
            }
        }
        let (s, _, v) = dense::svd(gq.as_ref())?;
        let ritz = q * &v;
        let mut values = Vec::with_capacity(p);
        let mut vectors = Vec::with_capacity(p);
        for k in 0..p {
            let j = p - 1 - k;
            values.push(s[j] * s[j]);
            vectors.push(dense::col(ritz.as_ref(), j));
        }
        Ok((values, vectors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(n: usize) -> Csr<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -1.0));
            t.push((i, (i + 1) % n, 1.0));
        }
        Csr::from_triplets(n, n, &t)
    }

    #[test]
    fn dense_and_sparse_agree_on_cycle() {
        let n = 300;
        let op = FactoredOperator::new(cyclic(n));
        let d = op.lowest(6, &EigenOptions { dense_limit: 10_000, ..Default::default() }).unwrap();
        let s = op.lowest(6, &EigenOptions { dense_limit: 10, ..Default::default() }).unwrap();
        for k in 0..6 {
            let exact = {
                let j = (k + 1) / 2;
                (2.0 * (std::f64::consts::PI * j as f64 / n as f64).sin()).powi(2)
            };
            assert!((d.values[k] - exact).abs() < 1e-12, "{} {}", d.values[k], exact);
            assert!((s.values[k] - exact).abs() < 1e-12, "{} {}", s.values[k], exact);
        }
    }

    #[test]
    fn rows_fewer_than_columns() {
        let g = Csr::from_triplets(1, 3, &[(0, 0, 2.0)]);
        let e = FactoredOperator::new(g).lowest(3, &EigenOptions::default()).unwrap();
        assert_eq!(e.values[0], 0.0);
        assert_eq!(e.values[1], 0.0);
        assert!((e.values[2] - 4.0).abs() < 1e-12);
    }
}
