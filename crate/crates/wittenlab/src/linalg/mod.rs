//! Sparse and dense linear algebra used throughout the crate.

pub mod dense;
pub mod eigen;
pub mod integer;
pub mod sparse;

pub use eigen::{EigenOptions, Eigenpairs, FactoredOperator};
pub use sparse::Csr;

use std::sync::Once;

static INIT: Once = Once::new();

/// Pins faer to sequential kernels so results are bitwise reproducible.
pub fn init() {
    INIT.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

/// Minimum-cost assignment of rows to distinct columns (`rows ≤ cols`).
/// Returns the column assigned to each row.
pub fn assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return vec![];
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols");
    // Hungarian algorithm with potentials, 1-based internal indexing.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

/// Conjugate gradients on the normal equations: minimises `‖b − A x‖₂`.
/// Returns `x` and the final normal-equation residual `‖Aᵀ r‖`.
pub fn cgls(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    ncols: usize,
    rel_tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut x = vec![0.0; ncols];
    let mut r = b.to_vec();
    let mut s = apply_t(&r);
    let mut p = s.clone();
    let mut gamma = dense::dot(&s, &s);
    let g0 = gamma.sqrt();
    if g0 == 0.0 {
        return (x, 0.0);
    }
    for _ in 0..max_iter {
        let q = apply(&p);
        let qq = dense::dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        s = apply_t(&r);
        let gnew = dense::dot(&s, &s);
        if gnew.sqrt() <= rel_tol * g0 {
            gamma = gnew;
            break;
        }
        let beta = gnew / gamma;
        gamma = gnew;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    (x, gamma.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_picks_optimum() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = assignment(&c);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn assignment_rectangular() {
        let c = vec![vec![5.0, 1.0, 9.0]];
        assert_eq!(assignment(&c), vec![1]);
    }

    #[test]
    fn cgls_projects_onto_range() {
        // A = [1 0; 0 0; 0 1]
        let a = Csr::from_triplets(3, 2, &[(0, 0, 1.0), (2, 1, 1.0)]);
        let (x, _) = cgls(|v| a.matvec(v), |v| a.matvec_t(v), &[1.0, 2.0, 3.0], 2, 1e-14, 10);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12);
    }
}
