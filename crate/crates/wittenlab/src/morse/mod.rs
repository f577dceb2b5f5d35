//! Morse complex of a gradient flow: critical points, signed trajectory counts,
//! the geometric complex, its scaling and the integration maps from mesh cochains.

mod flow;
mod functions;
mod int;
mod shooting;

use std::cmp::Ordering;

use faer::Mat;
use serde::Serialize;

use crate::complexes::{InnerProduct, InnerProductComplex};
use crate::error::{Error, Result};
use crate::linalg::{dense, integer, Csr};
use crate::oscillator::LocalChart;

pub use flow::{dopri5, flow_with_variation, integrate_flow, FlowControls, Trajectory};
pub use functions::{
    riemannian_gradient, riemannian_hessian, Constant, ExactChart, FunctionSpec, Manifold, MorseFunction, ProductCosine, SphereHeight,
};
pub use int::{int_matrix, integrate_over_unstable, unstable_chain};
pub use shooting::{count_signed_trajectories, ConnectingTrajectory, ShootOptions};

pub const GRADIENT_TOL: f64 = 1e-10;
pub const HESSIAN_TOL: f64 = 1e-6;
pub const DEDUP_DISTANCE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPoint {
    /// Fundamental-domain coordinates (torus) or a unit vector in R³ (sphere).
    pub location: Vec<f64>,
    pub index: usize,
    /// Hessian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Ambient × n eigenvector frame, unstable columns first. The unstable block is `O_x`
    /// and the full frame is positively oriented.
    #[serde(skip)]
    pub frame: Mat<f64>,
    pub value: f64,
}

impl CriticalPoint {
    pub fn frame_column(&self, j: usize) -> Vec<f64> {
        dense::col(self.frame.as_ref(), j)
    }

    /// Flat chart data for the oscillator placement map.
    pub fn local_chart(&self) -> LocalChart {
        LocalChart { center: self.location.clone(), frame: self.frame.clone(), eigenvalues: self.eigenvalues.clone(), index: self.index }
    }
}

/// Orients the unstable block by its dominant coordinate minor and the full frame by the manifold.
fn orient_frame(m: &Manifold, x: &[f64], frame: &mut Mat<f64>, k: usize) {
    let n = frame.ncols();
    let amb = frame.nrows();
    if k >= 1 && k < n {
        let mut best: Option<(f64, f64)> = None;
        for rows in combinations(amb, k) {
            let d = dense::determinant(Mat::from_fn(k, k, |i, j| frame[(rows[i], j)]).as_ref());
            if best.is_none_or(|(b, _)| d.abs() > b + 1e-12) {
                best = Some((d.abs(), d));
            }
        }
        if best.unwrap().1 < 0.0 {
            flip(frame, 0);
        }
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|j| dense::col(frame.as_ref(), j)).collect();
    if m.orientation(x, &cols) < 0.0 {
        flip(frame, if k == n { 0 } else { n - 1 });
    }
}

fn flip(frame: &mut Mat<f64>, j: usize) {
    for i in 0..frame.nrows() {
        frame[(i, j)] = -frame[(i, j)];
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    crate::complexes::axis_subsets(n, k).into_iter().map(crate::complexes::mask_axes).collect()
}

fn seeds(m: &Manifold, res: usize) -> Vec<Vec<f64>> {
    match m {
        Manifold::Torus { periods } => {
            let n = periods.len();
            let total = res.pow(n as u32);
            (0..total)
                .map(|mut lin| {
                    (0..n)
                        .map(|i| {
                            let c = lin % res;
                            lin /= res;
                            (c as f64 + 0.37) * periods[i] / res as f64
                        })
                        .collect()
                })
                .collect()
        }
        Manifold::Sphere => {
            let mut out = Vec::new();
            for a in 0..res {
                let theta = std::f64::consts::PI * (a as f64 + 0.5) / res as f64;
                for b in 0..2 * res {
                    let phi = std::f64::consts::PI * (b as f64 + 0.37) / res as f64;
                    out.push(vec![theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
                }
            }
            out
        }
    }
}

fn newton(mf: &dyn MorseFunction, x0: &[f64], max_step: f64) -> Option<Vec<f64>> {
    let m = mf.manifold();
    let mut x = x0.to_vec();
    for _ in 0..60 {
        let b = m.tangent_basis(&x);
        let g = riemannian_gradient(mf, &x);
        let gt: Vec<f64> = (0..b.ncols()).map(|j| (0..b.nrows()).map(|i| b[(i, j)] * g[i]).sum()).collect();
        if dense::norm(&gt) < 1e-15 {
            return Some(x);
        }
        let (h, _) = riemannian_hessian(mf, &x);
        let (vals, vecs) = dense::sym_eigen(h.as_ref()).ok()?;
        if vals.iter().all(|v| v.abs() < 1e-300) {
            return Some(x);
        }
        // Newton step through the pseudo-inverse of the Hessian
        let n = vals.len();
        let mut step = vec![0.0; n];
        for k in 0..n {
            if vals[k].abs() < 1e-14 * vals.iter().fold(0.0f64, |a, v| a.max(v.abs())) {
                continue;
            }
            let c: f64 = (0..n).map(|i| vecs[(i, k)] * gt[i]).sum::<f64>() / vals[k];
            for i in 0..n {
                step[i] -= c * vecs[(i, k)];
            }
        }
        let len = dense::norm(&step);
        if len > max_step {
            step.iter_mut().for_each(|s| *s *= max_step / len);
        }
        for i in 0..b.nrows() {
            x[i] += (0..n).map(|j| b[(i, j)] * step[j]).sum::<f64>();
        }
        m.retract(&mut x);
        if len < 1e-16 * (1.0 + dense::norm(&x)) {
            return Some(x);
        }
    }
    let g = riemannian_gradient(mf, &x);
    (dense::norm(&g) <= GRADIENT_TOL).then_some(x)
}

fn compare_points(a: &CriticalPoint, b: &CriticalPoint) -> Ordering {
    a.index.cmp(&b.index).then_with(|| {
        if (a.value - b.value).abs() > 1e-10 * (1.0 + a.value.abs()) {
            a.value.total_cmp(&b.value)
        } else {
            for (u, v) in a.location.iter().zip(&b.location) {
                if (u - v).abs() > 1e-9 {
                    return u.total_cmp(v);
                }
            }
            Ordering::Equal
        }
    })
}

/// Newton's method from an offset seed grid; results are deduplicated, validated and sorted
/// by (index, value, coordinates).
pub fn find_critical_points(mf: &dyn MorseFunction, seed_resolution: usize) -> Result<Vec<CriticalPoint>> {
    if seed_resolution < 8 {
        return Err(Error::InvalidArgument(format!("seed resolution {seed_resolution} < 8")));
    }
    let m = mf.manifold();
    let max_step = match m {
        Manifold::Torus { periods } => 0.5 * periods.iter().cloned().fold(f64::INFINITY, f64::min) / seed_resolution as f64,
        Manifold::Sphere => 0.5 / seed_resolution as f64,
    };
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut failed = 0;
    let all = seeds(m, seed_resolution);
    for s in &all {
        match newton(mf, s, max_step) {
            Some(x) => {
                let x = m.wrap(&x);
                if !found.iter().any(|y| m.distance(y, &x) < DEDUP_DISTANCE) {
                    found.push(x);
                }
            }
            None => failed += 1,
        }
    }
    if failed > 0 {
        log::warn!("Newton diverged from {failed} of {} seeds", all.len());
    }
    if found.is_empty() {
        return Err(Error::Invariant("no critical points found; f cannot be Morse on a closed manifold".into()));
    }
    let mut out = Vec::with_capacity(found.len());
    for x in found {
        let g = dense::norm(&riemannian_gradient(mf, &x));
        if g > GRADIENT_TOL {
            return Err(Error::Invariant(format!("critical point {x:?} has gradient norm {g:e}")));
        }
        let (vals, mut frame) = flow::hessian_frame(mf, &x)?;
        if let Some(v) = vals.iter().find(|v| v.abs() < HESSIAN_TOL) {
            return Err(Error::Invariant(format!("degenerate Hessian at {x:?} (eigenvalue {v:e})")));
        }
        let index = vals.iter().filter(|v| **v < 0.0).count();
        orient_frame(m, &x, &mut frame, index);
        out.push(CriticalPoint { value: mf.value(&x), location: x, index, eigenvalues: vals, frame });
    }
    out.sort_by(compare_points);
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseDiagnostics {
    pub capture_radius: f64,
    pub shoot_radius: f64,
    pub rtol: f64,
    pub shoot_samples: usize,
    pub trajectories: Vec<ConnectingTrajectory>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MorseData {
    pub dimension: usize,
    pub critical_points: Vec<CriticalPoint>,
    /// Positions in `critical_points` grouped by index.
    pub by_index: Vec<Vec<usize>>,
    /// `incidence[k]` maps `C^k → C^{k+1}`: entry `(y, x)` is `I(y, x)` for `ind y = k+1`, `ind x = k`.
    pub incidence: Vec<Csr<i64>>,
    pub diagnostics: MorseDiagnostics,
}

impl MorseData {
    pub fn counts(&self) -> Vec<usize> {
        self.by_index.iter().map(|v| v.len()).collect()
    }

    /// Dimensions of the cohomology of `(C, ∂)`.
    pub fn cohomology_ranks(&self) -> Vec<usize> {
        let ranks: Vec<usize> = self.incidence.iter().map(|d| integer::rank(&d.to_dense_i64())).collect();
        (0..=self.dimension)
            .map(|k| {
                let out = if k < self.dimension { ranks[k] } else { 0 };
                let inc = if k > 0 { ranks[k - 1] } else { 0 };
                self.by_index[k].len() - out - inc
            })
            .collect()
    }

    /// Largest entry of `∂^{k+1}∂^k` over all `k`.
    pub fn nilpotency_defect(&self) -> i64 {
        self.incidence
            .windows(2)
            .map(|w| w[1].matmul(&w[0]).values.iter().map(|v| v.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Morse inequalities `c_q ≥ β_q` against the given Betti numbers.
    pub fn morse_inequalities_hold(&self, betti: &[usize]) -> bool {
        self.counts().iter().zip(betti).all(|(c, b)| c >= b)
    }
}

/// Critical points, signed trajectory counts and the incidence matrices.
pub fn compute_morse_data(mf: &dyn MorseFunction, seed_resolution: usize, opts: &ShootOptions) -> Result<MorseData> {
    let crits = find_critical_points(mf, seed_resolution)?;
    morse_data_from(mf, crits, opts)
}

pub fn morse_data_from(mf: &dyn MorseFunction, crits: Vec<CriticalPoint>, opts: &ShootOptions) -> Result<MorseData> {
    let n = mf.manifold().dim();
    let mut by_index = vec![Vec::new(); n + 1];
    for (i, c) in crits.iter().enumerate() {
        by_index[c.index].push(i);
    }
    let mut incidence = Vec::with_capacity(n);
    let mut trajectories = Vec::new();
    for k in 0..n {
        let mut trip = Vec::new();
        for (row, &y) in by_index[k + 1].iter().enumerate() {
            for (col, &x) in by_index[k].iter().enumerate() {
                let (count, list) = count_signed_trajectories(mf, &crits, y, x, opts)?;
                if count != 0 {
                    trip.push((row, col, count));
                }
                trajectories.extend(list);
            }
        }
        incidence.push(Csr::from_triplets(by_index[k + 1].len(), by_index[k].len(), &trip));
    }
    let man = mf.manifold();
    let md = MorseData {
        dimension: n,
        critical_points: crits,
        by_index,
        incidence,
        diagnostics: MorseDiagnostics {
            capture_radius: opts.flow.capture_radius(man),
            shoot_radius: opts.flow.shoot_radius(man),
            rtol: opts.flow.rtol,
            shoot_samples: opts.samples,
            trajectories,
        },
    };
    let defect = md.nilpotency_defect();
    if defect != 0 {
        return Err(Error::Invariant(format!("Morse differential squares to nonzero (max entry {defect})")));
    }
    Ok(md)
}

/// The geometric complex with orthonormal `E_x` bases.
pub fn geometric_complex(md: &MorseData) -> Result<InnerProductComplex> {
    if md.nilpotency_defect() != 0 {
        return Err(Error::Invariant("Morse differential squares to nonzero".into()));
    }
    InnerProductComplex::new(
        md.by_index.iter().map(|v| InnerProduct::Diagonal(vec![1.0; v.len()])).collect(),
        md.incidence.iter().map(|d| d.to_f64()).collect(),
    )
}

/// Diagonal of `S^q(t)`: `(π/t)^{(n−2q)/4} e^{−t f(x)}` for `x ∈ Cr_q`.
pub fn scaling_map(md: &MorseData, q: usize, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("scaling needs t > 0, got {t}")));
    }
    let pre = (std::f64::consts::PI / t).powf((md.dimension as f64 - 2.0 * q as f64) / 4.0);
    Ok(md.by_index[q].iter().map(|&i| pre * (-t * md.critical_points[i].value).exp()).collect())
}

/// `∂^q(t) = S^{q+1} ∂^q S^{q,−1}`.
pub fn scaled_differential(md: &MorseData, q: usize, t: f64) -> Result<Csr<f64>> {
    let left = scaling_map(md, q + 1, t)?;
    let right: Vec<f64> = scaling_map(md, q, t)?.iter().map(|s| 1.0 / s).collect();
    Ok(md.incidence[q].to_f64().scale(&left, &right))
}
