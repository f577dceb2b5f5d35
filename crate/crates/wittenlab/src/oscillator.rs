//! Exact harmonic-oscillator model of the Witten Laplacian near a critical point.
//!
//! For `f = −(x_1² + … + x_k²)/2 + (x_{k+1}² + … + x_n²)/2` on `R^n` the deformed Laplacian on
//! `q`-forms is `−Δ + t²|x|² + ε_I t` on the component `dx_I`. Its spectrum is `2t·o^k(I, P)`.

use faer::Mat;
use serde::Serialize;

use crate::complexes::{CellComplex, Topology};
use crate::error::{Error, Result};
use crate::linalg::dense;

/// Physicists' Hermite polynomial.
pub fn hermite(j: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if j == 0 {
        return h0;
    }
    for i in 1..j {
        let h2 = 2.0 * x * h1 - 2.0 * i as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Coefficient of `t` in the zeroth-order term on `dx_I`. `I` holds 1-based axis indices.
pub fn epsilon_coeff(n: usize, q: usize, k: usize, index_set: &[usize]) -> i64 {
    let upper = index_set.iter().filter(|&&j| j > k && j <= n).count() as i64;
    -(n as i64) + 2 * k as i64 - 2 * q as i64 + 4 * upper
}

/// `o^k(I, P) = Σp + q + k − 2·#{j ∈ I | j ≤ k}`.
pub fn order(k: usize, index_set: &[usize], p: &[u32]) -> i64 {
    let low = index_set.iter().filter(|&&j| j <= k).count() as i64;
    p.iter().map(|&x| x as i64).sum::<i64>() + index_set.len() as i64 + k as i64 - 2 * low
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OscSymbol {
    pub n: usize,
    pub q: usize,
    pub k: usize,
    /// Increasing 1-based axis indices.
    pub index_set: Vec<usize>,
    pub p: Vec<u32>,
    pub order: i64,
}

pub fn index_sets(n: usize, q: usize) -> Vec<Vec<usize>> {
    crate::complexes::axis_subsets(n, q)
        .into_iter()
        .map(|m| crate::complexes::mask_axes(m).into_iter().map(|i| i + 1).collect())
        .collect()
}

fn multi_indices(n: usize, total: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in multi_indices(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All symbols of order `≤ max_order`, sorted by (order, I, P), with counts per order.
pub fn enumerate_symbols(n: usize, q: usize, k: usize, max_order: usize) -> (Vec<OscSymbol>, Vec<usize>) {
    let mut out = Vec::new();
    for index_set in index_sets(n, q) {
        for total in 0..=(max_order + 2 * q) as u32 {
            for p in multi_indices(n, total) {
                let o = order(k, &index_set, &p);
                if o >= 0 && o as usize <= max_order {
                    out.push(OscSymbol { n, q, k, index_set: index_set.clone(), p, order: o });
                }
            }
        }
    }
    out.sort_by(|a, b| (a.order, &a.index_set, &a.p).cmp(&(b.order, &b.index_set, &b.p)));
    let mut counts = vec![0usize; max_order + 1];
    for s in &out {
        counts[s.order as usize] += 1;
    }
    (out, counts)
}

pub fn model_eigenvalue(sym: &OscSymbol, t: f64) -> f64 {
    2.0 * t * sym.order as f64
}

fn factorial(p: u32) -> f64 {
    (1..=p).map(|x| x as f64).product()
}

/// Coefficient of `dx_I` of the L²-normalised eigenform at `x`.
pub fn model_eigenform(sym: &OscSymbol, t: f64, x: &[f64]) -> f64 {
    let st = t.sqrt();
    let mut c = (t / std::f64::consts::PI).powf(sym.n as f64 / 4.0);
    let mut r2 = 0.0;
    for (i, &p) in sym.p.iter().enumerate() {
        c *= hermite(p as usize, st * x[i]) / (2f64.powi(p as i32) * factorial(p)).sqrt();
        r2 += x[i] * x[i];
    }
    c * (-0.5 * t * r2).exp()
}

/// Matrix of `−d²/dx² + t²x²` in the first `b` Hermite functions of scale `√t`,
/// assembled from the ladder matrix elements of `x²` and `p²`.
fn axis_operator(b: usize, t: f64) -> Mat<f64> {
    let mut h = Mat::<f64>::zeros(b, b);
    for m in 0..b {
        let x2 = (2 * m + 1) as f64 / (2.0 * t);
        let p2 = t * (2 * m + 1) as f64 / 2.0;
        h[(m, m)] = p2 + t * t * x2;
        if m + 2 < b {
            let s = (((m + 1) * (m + 2)) as f64).sqrt();
            let off = -t * s / 2.0 + t * t * s / (2.0 * t);
            h[(m, m + 2)] = off;
            h[(m + 2, m)] = off;
        }
    }
    h
}

/// `[dx^i∧, ι_i]` on `dx_I`: +1 if `i ∈ I`, −1 otherwise.
fn clifford_sign(i: usize, index_set: &[usize]) -> f64 {
    if index_set.contains(&i) {
        1.0
    } else {
        -1.0
    }
}

/// Sorted spectrum of the model operator on `q`-forms, assembled as a Kronecker sum and diagonalised.
pub fn brute_force_model_spectrum(n: usize, q: usize, k: usize, t: f64, basis_size: usize) -> Result<Vec<f64>> {
    if n == 0 || basis_size == 0 {
        return Err(Error::InvalidArgument("need n ≥ 1 and a non-empty basis".into()));
    }
    let h1 = axis_operator(basis_size, t);
    let dim = basis_size.pow(n as u32);
    let mut all = Vec::new();
    for index_set in index_sets(n, q) {
        // zeroth-order term Σ_i f_ii [dx^i∧, ι_i] for Hessian −1 on axes ≤ k, +1 above
        let shift: f64 = (1..=n).map(|i| if i <= k { -1.0 } else { 1.0 } * clifford_sign(i, &index_set)).sum();
        let mut a = Mat::<f64>::zeros(dim, dim);
        for row in 0..dim {
            a[(row, row)] += t * shift;
            let mut stride = 1;
            for _ in 0..n {
                let mi = (row / stride) % basis_size;
                for mj in 0..basis_size {
                    let v = h1[(mi, mj)];
                    if v != 0.0 {
                        let col = row - mi * stride + mj * stride;
                        a[(row, col)] += v;
                    }
                }
                stride *= basis_size;
            }
        }
        all.extend(dense::sym_eigen(a.as_ref())?.0);
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Multiplicity of `value` in a sorted list, within `tol·(1 + |value|)`.
pub fn multiplicity(spectrum: &[f64], value: f64, tol: f64) -> usize {
    spectrum.iter().filter(|&&x| (x - value).abs() <= tol * (1.0 + value.abs())).count()
}

/// `#A^q(k)` for `k = 0..=max_k` summed over critical points with the given Morse indices.
pub fn cluster_cardinalities(n: usize, critical_indices: &[usize], q: usize, max_k: usize) -> Vec<usize> {
    let mut out = vec![0usize; max_k + 1];
    for &idx in critical_indices {
        let (_, counts) = enumerate_symbols(n, q, idx, max_k);
        out.iter_mut().zip(counts).for_each(|(o, c)| *o += c);
    }
    out
}

/// Radial cutoff `γ_η`: 1 on `[0, η/2]`, 0 beyond `η`, smooth bump in between.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum CutoffProfile {
    Bump { eta: f64 },
    /// No cutoff (`γ ≡ 1`).
    None,
}

impl CutoffProfile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            CutoffProfile::None => 1.0,
            CutoffProfile::Bump { eta } => {
                if r <= 0.5 * eta {
                    1.0
                } else if r >= eta {
                    0.0
                } else {
                    let s = (r - 0.5 * eta) / (0.5 * eta);
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            CutoffProfile::Bump { eta } => eta,
            CutoffProfile::None => f64::INFINITY,
        }
    }
}

/// Area of the unit sphere `S^{n−1}`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI.powf(n as f64 / 2.0) / gamma_half_integer(n as f64 / 2.0),
    }
}

fn gamma_half_integer(x: f64) -> f64 {
    // Γ at integers and half-integers
    if (x - x.round()).abs() < 1e-12 {
        factorial(x.round() as u32 - 1)
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut y = 0.5;
        while y < x - 1e-12 {
            g *= y;
            y += 1.0;
        }
        g
    }
}

pub const QUADRATURE_RTOL: f64 = 1e-10;

fn integrate_checked(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let rough = quadrature::integrate(f, a, b, 1e-6).integral.abs();
    let out = quadrature::integrate(f, a, b, (QUADRATURE_RTOL * rough).max(1e-300));
    if out.error_estimate > QUADRATURE_RTOL * out.integral.abs().max(1e-300) && out.error_estimate > 1e-300 {
        return Err(Error::Numeric(format!(
            "radial quadrature reached relative error {:e} (target {QUADRATURE_RTOL:e})",
            out.error_estimate / out.integral.abs()
        )));
    }
    Ok(out.integral)
}

/// `β(t) = (t/π)^{n/4} sqrt(|S^{n−1}| ∫_0^η γ²(r) e^{−tr²} r^{n−1} dr)`.
pub fn cutoff_normalization(n: usize, t: f64, profile: &CutoffProfile) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff normalisation needs t > 0, got {t}")));
    }
    let radial = |r: f64| {
        let g = profile.value(r);
        g * g * (-t * r * r).exp() * r.powi(n as i32 - 1)
    };
    // e^{-t r²} < 1e-300 beyond this radius
    let tail = (700.0 / t).sqrt();
    let integral = match *profile {
        CutoffProfile::None => integrate_checked(radial, 0.0, tail)?,
        CutoffProfile::Bump { eta } => {
            if !(eta > 0.0) {
                return Err(Error::InvalidArgument(format!("cutoff radius must be positive, got {eta}")));
            }
            let mid = (0.5 * eta).min(tail);
            integrate_checked(radial, 0.0, mid)? + integrate_checked(radial, mid, eta.min(tail))?
        }
    };
    Ok((t / std::f64::consts::PI).powf(n as f64 / 4.0) * (sphere_area(n) * integral).sqrt())
}

/// Hessian data at a critical point in flat coordinates.
#[derive(Clone, Debug)]
pub struct LocalChart {
    pub center: Vec<f64>,
    /// Orthonormal Hessian eigenvectors as columns, unstable (negative) directions first and oriented.
    pub frame: Mat<f64>,
    pub eigenvalues: Vec<f64>,
    pub index: usize,
}

impl LocalChart {
    /// Radius of a Euclidean ball containing the cutoff support `{|u| ≤ η}`.
    pub fn support_radius(&self, eta: f64) -> f64 {
        let amin = self.eigenvalues.iter().fold(f64::INFINITY, |m, a| m.min(a.abs()));
        eta / amin.sqrt()
    }
}

fn displacement(cx: &CellComplex, x: &[f64], c: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(c)
        .enumerate()
        .map(|(i, (a, b))| {
            let mut d = a - b;
            if cx.topology == Topology::Torus {
                let p = cx.periods[i];
                d -= p * (d / p).round();
            }
            d
        })
        .collect()
}

/// `J^q(t)`: for each chart, the cochain of the normalised cutoff Gaussian
/// `(1/β)(t/π)^{n/4} ∏|a_i|^{1/4} γ(|u|) e^{−t|u|²/2} dv_U`, with Morse coordinates `u_i = √|a_i| v_i`.
pub fn place_on_mesh(cx: &CellComplex, charts: &[LocalChart], q: usize, t: f64, profile: &CutoffProfile) -> Result<Vec<Vec<f64>>> {
    if cx.topology != Topology::Torus {
        return Err(Error::InvalidArgument("placement map needs a flat torus model".into()));
    }
    let n = cx.dimension;
    let eta = profile.radius();
    let mut clashes = Vec::new();
    for i in 0..charts.len() {
        for j in i + 1..charts.len() {
            let d = crate::witten::periodic_distance(&charts[i].center, &charts[j].center, &cx.periods);
            if d <= charts[i].support_radius(eta) + charts[j].support_radius(eta) {
                clashes.push(format!("({i},{j})"));
            }
        }
    }
    if !clashes.is_empty() {
        return Err(Error::InvalidArgument(format!("cutoff balls overlap for critical-point pairs {}", clashes.join(", "))));
    }
    let beta = cutoff_normalization(n, t, profile)?;
    let pref = (t / std::f64::consts::PI).powf(n as f64 / 4.0) / beta;
    let mut out = Vec::with_capacity(charts.len());
    for ch in charts {
        if ch.index != q {
            return Err(Error::InvalidArgument(format!("critical point of index {} placed in degree {q}", ch.index)));
        }
        let amp: f64 = ch.eigenvalues.iter().map(|a| a.abs().powf(0.25)).product::<f64>() * pref;
        let mut cochain = vec![0.0; cx.count(q)];
        for (id, x) in cx.barycenters[q].iter().enumerate() {
            let d = displacement(cx, x, &ch.center);
            let mut u2 = 0.0;
            for i in 0..n {
                let v: f64 = (0..n).map(|r| ch.frame[(r, i)] * d[r]).sum();
                u2 += ch.eigenvalues[i].abs() * v * v;
            }
            let g = profile.value(u2.sqrt());
            if g == 0.0 {
                continue;
            }
            let (edges, factor) = cx.cell_span(q, id);
            let minor = Mat::from_fn(q, q, |a, b| (0..n).map(|r| ch.frame[(r, a)] * edges[b][r]).sum());
            cochain[id] = amp * g * (-0.5 * t * u2).exp() * factor * dense::determinant(minor.as_ref());
        }
        out.push(cochain);
    }
    Ok(out)
}

/// Gap certificate for the pencil `(A, M)`.
#[derive(Clone, Debug, Serialize)]
pub struct GapCertificate {
    /// Largest Rayleigh quotient on `span(H1)`.
    pub upper_on_h1: f64,
    /// Smallest Rayleigh quotient on the M-orthogonal complement.
    pub lower_on_complement: f64,
    pub holds: bool,
}

fn m_orthonormal_basis(m: &Mat<f64>, cols: &Mat<f64>) -> Result<Mat<f64>> {
    let g = cols.transpose() * m * cols;
    let r = dense::inv_sqrt_spd(g.as_ref())?;
    Ok(cols * r)
}

pub fn gap_certificate(a: &Mat<f64>, m: &Mat<f64>, h1: &Mat<f64>, lo: f64, hi: f64) -> Result<GapCertificate> {
    if !(0.0 < lo && lo < hi) {
        return Err(Error::InvalidArgument(format!("need 0 < a < b, got ({lo}, {hi})")));
    }
    let n = a.nrows();
    let q1 = m_orthonormal_basis(m, h1)?;
    let upper = dense::sym_eigen((q1.transpose() * a * &q1).as_ref())?.0.last().copied().unwrap_or(f64::NEG_INFINITY);
    // complement: M-orthogonal projection of the coordinate basis away from span(H1), then orthonormalised
    let p = dense::identity(n) - &q1 * (q1.transpose() * m);
    let (vals, vecs) = dense::sym_eigen((p.transpose() * m * &p).as_ref())?;
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 1e-10 * vals[n - 1]).collect();
    let lower = if keep.is_empty() {
        f64::INFINITY
    } else {
        let raw = &p * Mat::from_fn(n, keep.len(), |i, j| vecs[(i, keep[j])]);
        let q2 = m_orthonormal_basis(m, &raw)?;
        dense::sym_eigen((q2.transpose() * a * &q2).as_ref())?.0[0]
    };
    Ok(GapCertificate { upper_on_h1: upper, lower_on_complement: lower, holds: upper <= lo && lower >= hi })
}

/// Generalised eigenvalues of `A x = λ M x`, ascending.
pub fn pencil_spectrum(a: &Mat<f64>, m: &Mat<f64>) -> Result<Vec<f64>> {
    let r = dense::inv_sqrt_spd(m.as_ref())?;
    Ok(dense::sym_eigen((&r * a * &r).as_ref())?.0)
}

/// Eigenvalues of `−u'' + x²u` on `[−L, L]` with Dirichlet ends, second-order differences.
pub fn fd_oscillator(half_width: f64, cells: usize, count: usize) -> Vec<f64> {
    let h = 2.0 * half_width / cells as f64;
    let m = cells - 1;
    let diag: Vec<f64> = (1..=m).map(|i| 2.0 / (h * h) + (-half_width + i as f64 * h).powi(2)).collect();
    let off = -1.0 / (h * h);
    (0..count).map(|j| sturm_eigenvalue(&diag, off, j)).collect()
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix (constant off-diagonal).
fn sturm_count(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = a - x - if i == 0 { 0.0 } else { off * off / d };
        if d == 0.0 {
            d = f64::EPSILON * (a.abs() + x.abs());
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// `j`-th smallest eigenvalue by bisection on the Sturm count.
fn sturm_eigenvalue(diag: &[f64], off: f64, j: usize) -> f64 {
    let radius = 2.0 * off.abs();
    let mut lo = diag.iter().cloned().fold(f64::INFINITY, f64::min) - radius;
    let mut hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > j {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Two-level Richardson extrapolation of [`fd_oscillator`] from `cells` and `2·cells`.
pub fn fd_oscillator_richardson(half_width: f64, cells: usize, count: usize) -> Vec<f64> {
    let coarse = fd_oscillator(half_width, cells, count);
    let fine = fd_oscillator(half_width, 2 * cells, count);
    coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.7), 1.0);
        assert_eq!(hermite(1, 3.0), 6.0);
        assert_eq!(hermite(2, 1.0), 2.0);
        for &x in &[-1.3f64, 0.2, 2.5] {
            let explicit = 16.0 * x.powi(4) - 48.0 * x * x + 12.0;
            assert!((hermite(4, x) - explicit).abs() <= 1e-12 * explicit.abs().max(1.0));
        }
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_coeff(1, 0, 0, &[]), -1);
        assert_eq!(epsilon_coeff(1, 0, 1, &[]), 1);
        // n=2, q=1, k=1, I=(1): ground energy 2t + ε t = 0
        assert_eq!(epsilon_coeff(2, 1, 1, &[1]), -2);
    }

    #[test]
    fn unique_ground_symbol() {
        for n in 1..=3 {
            for q in 0..=n {
                for k in 0..=n {
                    let (syms, counts) = enumerate_symbols(n, q, k, 0);
                    assert_eq!(counts[0], usize::from(k == q));
                    if k == q {
                        assert_eq!(syms[0].index_set, (1..=q).collect::<Vec<_>>());
                        assert!(syms[0].p.iter().all(|&p| p == 0));
                    }
                }
            }
        }
    }

    #[test]
    fn one_dimensional_counts() {
        let (_, counts) = enumerate_symbols(1, 0, 0, 5);
        assert_eq!(counts, vec![1; 6]);
    }

    #[test]
    fn brute_force_ladder() {
        let s = brute_force_model_spectrum(1, 0, 0, 1.0, 8).unwrap();
        for (j, v) in s.iter().take(5).enumerate() {
            assert!((v - 2.0 * j as f64).abs() < 1e-10);
        }
        let s = brute_force_model_spectrum(2, 1, 1, 2.0, 7).unwrap();
        assert!(s[0].abs() < 1e-10 && s[1] > 1.0);
    }

    #[test]
    fn ground_form_normalised() {
        let (syms, _) = enumerate_symbols(2, 1, 1, 0);
        let t = 3.0;
        let h = 0.02;
        let mut sum = 0.0;
        for i in -200..=200 {
            for j in -200..=200 {
                let c = model_eigenform(&syms[0], t, &[i as f64 * h, j as f64 * h]);
                sum += c * c * h * h;
            }
        }
        assert!((sum - 1.0).abs() < 1e-8);
    }

    #[test]
    fn normalization_limits() {
        for n in 1..=3 {
            assert!((cutoff_normalization(n, 2.0, &CutoffProfile::None).unwrap() - 1.0).abs() < 1e-10);
            let eta: f64 = 0.3;
            let b = cutoff_normalization(n, 200.0 / (eta * eta), &CutoffProfile::Bump { eta }).unwrap();
            assert!((b - 1.0).abs() < 1e-6 && b <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn certificate_examples() {
        let diag = |a: f64, b: f64| Mat::from_fn(2, 2, |i, j| if i != j { 0.0 } else if i == 0 { a } else { b });
        let e1 = Mat::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
        let id = dense::identity(2);
        assert!(gap_certificate(&diag(0.1, 7.0), &id, &e1, 0.5, 5.0).unwrap().holds);
        assert!(gap_certificate(&diag(1.0, 2.0), &id, &e1, 1.5, 1.9).unwrap().holds);
        let mixed = Mat::from_fn(2, 1, |_, _| 1.0);
        assert!(!gap_certificate(&diag(1.0, 2.0), &id, &mixed, 1.2, 1.9).unwrap().holds);
    }

    #[test]
    fn finite_difference_oscillator() {
        let e = fd_oscillator_richardson(10.0, 2000, 6);
        for (j, v) in e.iter().enumerate() {
            assert!((v - (2 * j + 1) as f64).abs() < 1e-6, "{j}: {v}");
        }
    }
}
