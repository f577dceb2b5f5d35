//! Exact integer matrix algorithms.

/// Rank over Q by fraction-free (Bareiss) elimination.
pub fn rank(a: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    let mut prev: i128 = 1;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) / prev;
            }
            m[i][c] = 0;
        }
        prev = m[r][c];
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Nonzero invariant factors of the Smith normal form.
pub fn smith_invariants(a: &[Vec<i64>]) -> Vec<i64> {
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut out = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero magnitude in the remaining block
        let mut best = None;
        for i in t..rows {
            for j in t..cols {
                if m[i][j] != 0 && best.is_none_or(|(_, _, v): (usize, usize, i128)| m[i][j].abs() < v) {
                    best = Some((i, j, m[i][j].abs()));
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut done = true;
            for i in t + 1..rows {
                let q = m[i][t] / m[t][t];
                if q != 0 {
                    for j in t..cols {
                        m[i][j] -= q * m[t][j];
                    }
                }
                if m[i][t] != 0 {
                    done = false;
                }
            }
            for j in t + 1..cols {
                let q = m[t][j] / m[t][t];
                if q != 0 {
                    for i in t..rows {
                        m[i][j] -= q * m[i][t];
                    }
                }
                if m[t][j] != 0 {
                    done = false;
                }
            }
            if done {
                // divisibility of the remaining block
                let bad = (t + 1..rows).flat_map(|i| (t + 1..cols).map(move |j| (i, j))).find(|&(i, j)| m[i][j] % m[t][t] != 0);
                match bad {
                    Some((i, _)) => {
                        for j in t..cols {
                            m[t][j] += m[i][j];
                        }
                        continue;
                    }
                    None => break,
                }
            }
            // move the smallest entry of row t / column t to the pivot
            let mut best = (t, t, m[t][t].abs());
            for i in t + 1..rows {
                if m[i][t] != 0 && m[i][t].abs() < best.2 {
                    best = (i, t, m[i][t].abs());
                }
            }
            for j in t + 1..cols {
                if m[t][j] != 0 && m[t][j].abs() < best.2 {
                    best = (t, j, m[t][j].abs());
                }
            }
            m.swap(t, best.0);
            for row in m.iter_mut() {
                row.swap(t, best.1);
            }
        }
        out.push(m[t][t].abs() as i64);
        t += 1;
    }
    out
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        return if a < 0 { (-a, -1, 0) } else { (a, 1, 0) };
    }
    let (g, x, y) = ext_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}

/// Basis of the lattice `ker A ∩ Z^n` as columns, by unimodular column reduction.
pub fn kernel_basis(a: &[Vec<i64>], ncols: usize) -> Vec<Vec<i64>> {
    let m = a.len();
    let n = ncols;
    // rows 0..m hold A, rows m..m+n hold the accumulated unimodular transform
    let mut w: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    for i in 0..n {
        w.push((0..n).map(|j| i128::from(i == j)).collect());
    }
    let mut pivot_col = 0;
    for r in 0..m {
        if pivot_col == n {
            break;
        }
        for j in pivot_col + 1..n {
            let (pa, b) = (w[r][pivot_col], w[r][j]);
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(pa, b);
            let (u, v) = (pa / g, b / g);
            for row in w.iter_mut() {
                let (cp, cj) = (row[pivot_col], row[j]);
                row[pivot_col] = x * cp + y * cj;
                row[j] = u * cj - v * cp;
            }
        }
        if w[r][pivot_col] != 0 {
            pivot_col += 1;
        }
    }
    (pivot_col..n).map(|j| (0..n).map(|i| w[m + i][j] as i64).collect()).collect()
}

/// Covolume `sqrt(det(BᵀB))` of the lattice spanned by the given integer vectors.
pub fn covolume(basis: &[Vec<i64>]) -> f64 {
    let k = basis.len();
    if k == 0 {
        return 1.0;
    }
    let g = faer::Mat::from_fn(k, k, |i, j| basis[i].iter().zip(&basis[j]).map(|(a, b)| (*a as f64) * (*b as f64)).sum::<f64>());
    super::dense::determinant(g.as_ref()).abs().sqrt()
}

pub fn transpose(a: &[Vec<i64>], ncols: usize) -> Vec<Vec<i64>> {
    (0..ncols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(rank(&[vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(rank(&[vec![0, 0], vec![0, 0]]), 0);
        assert_eq!(rank(&[vec![2, 1, 0], vec![0, 3, 1], vec![1, 0, 5]]), 3);
        assert_eq!(rank(&[]), 0);
    }

    #[test]
    fn smith_form() {
        assert_eq!(smith_invariants(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]), vec![2, 6, 12]);
        assert_eq!(smith_invariants(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        assert_eq!(smith_invariants(&[vec![0, 0]]), Vec::<i64>::new());
    }

    #[test]
    fn kernel_lattice() {
        let a = vec![vec![2, 4, 6]];
        let k = kernel_basis(&a, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert_eq!(2 * v[0] + 4 * v[1] + 6 * v[2], 0);
        }
        // ker of (1 2 3) has covolume |(1,2,3)| = sqrt(14)
        assert!((covolume(&k) - 14f64.sqrt()).abs() < 1e-12);
        assert_eq!(kernel_basis(&[vec![1, 0], vec![0, 1]], 2).len(), 0);
        assert_eq!(kernel_basis(&[], 2).len(), 2);
    }
}
