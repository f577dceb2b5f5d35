//! Witten deformation `d(t) = e^{-tf} d e^{tf}`, its Laplacians and eigenvalue branches.

use serde::Serialize;

use crate::complexes::{CellComplex, InnerProductComplex};
use crate::derham::{group_multiplicities, kernel_split};
use crate::error::{Error, Result};
use crate::linalg::{assignment, dense, Csr, EigenOptions, FactoredOperator};

/// Largest admissible `|t·f|` before the conjugation weights overflow in practice.
pub const EXPONENT_GUARD: f64 = 300.0;

/// Samples `f` at the barycenters of every cell of every degree.
pub fn sample_function(cx: &CellComplex, f: impl Fn(&[f64]) -> f64) -> Vec<Vec<f64>> {
    cx.barycenters.iter().map(|cells| cells.iter().map(|x| f(x)).collect()).collect()
}

#[derive(Clone, Debug)]
pub struct DeformedComplex {
    pub t: f64,
    pub samples: Vec<Vec<f64>>,
    pub base: InnerProductComplex,
    /// Same inner products, deformed differentials.
    pub complex: InnerProductComplex,
}

fn check_samples(ipc: &InnerProductComplex, samples: &[Vec<f64>]) -> Result<()> {
    if samples.len() != ipc.top() + 1 {
        return Err(Error::InvalidArgument(format!("f sampled in {} degrees, complex has {}", samples.len(), ipc.top() + 1)));
    }
    for (q, s) in samples.iter().enumerate() {
        if s.len() != ipc.dim(q) {
            return Err(Error::InvalidArgument(format!("degree {q}: {} samples for {} cells", s.len(), ipc.dim(q))));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("degree {q}: non-finite sample of f")));
        }
    }
    Ok(())
}

/// `d^q(t) = W_{q+1}(−t) d^q W_q(t)` with `W_q(t) = diag(e^{t f(barycenter)})`.
pub fn deform(ipc: &InnerProductComplex, samples: &[Vec<f64>], t: f64) -> Result<DeformedComplex> {
    check_samples(ipc, samples)?;
    let fmax = samples.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if (t * fmax).abs() > EXPONENT_GUARD {
        return Err(Error::InvalidArgument(format!(
            "|t·f| reaches {:.1} > {EXPONENT_GUARD}; normalise f (max |f| = {fmax:e}) or lower t",
            (t * fmax).abs()
        )));
    }
    let diff = ipc
        .diff
        .iter()
        .enumerate()
        .map(|(q, d)| {
            let mut out = d.clone();
            if t != 0.0 {
                for r in 0..d.nrows {
                    for k in d.indptr[r]..d.indptr[r + 1] {
                        out.values[k] *= (t * (samples[q][d.indices[k]] - samples[q + 1][r])).exp();
                    }
                }
            }
            out
        })
        .collect();
    Ok(DeformedComplex {
        t,
        samples: samples.to_vec(),
        base: ipc.clone(),
        complex: InnerProductComplex::new(ipc.inner.clone(), diff)?,
    })
}

impl DeformedComplex {
    pub fn d(&self, q: usize) -> &Csr<f64> {
        &self.complex.diff[q]
    }

    /// `d^{q+1}(t) d^q(t)` formed as `W_{q+2}(−t) (d^{q+1} d^q) W_q(t)`.
    pub fn compose(&self, q: usize) -> Csr<f64> {
        let p = self.base.diff[q + 1].matmul(&self.base.diff[q]);
        let left: Vec<f64> = self.samples[q + 2].iter().map(|f| (-self.t * f).exp()).collect();
        let right: Vec<f64> = self.samples[q].iter().map(|f| (self.t * f).exp()).collect();
        p.scale(&left, &right)
    }

    /// Max-norm of `d(t)∘d(t)` over all degrees.
    pub fn nilpotency_defect(&self) -> f64 {
        (0..self.complex.top().saturating_sub(1)).map(|q| self.compose(q).max_abs()).fold(0.0, f64::max)
    }

    /// Same as [`Self::nilpotency_defect`] but multiplying the materialised matrices, relative to their norms.
    pub fn materialized_nilpotency_defect(&self) -> f64 {
        (0..self.complex.top().saturating_sub(1))
            .map(|q| {
                let p = self.d(q + 1).matmul(self.d(q)).max_abs();
                p / (self.d(q + 1).max_abs() * self.d(q).max_abs()).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

pub fn witten_laplacian(dc: &DeformedComplex, q: usize) -> Result<Csr<f64>> {
    dc.complex.laplacian(q)
}

/// `Δ^q(t) ≈ A + tB + t²C` interpolated from `t ∈ {0, 1, −1}`.
#[derive(Clone, Debug)]
pub struct QuadraticDecomposition {
    pub a: Csr<f64>,
    pub b: Csr<f64>,
    pub c: Csr<f64>,
    /// `‖Δ(2) − (A + 2B + 4C)‖_max / ‖Δ(2)‖_max`.
    pub residual: f64,
}

pub const QUADRATIC_TOLERANCE: f64 = 1e-8;

fn combine(n: usize, parts: &[(f64, &Csr<f64>)]) -> Csr<f64> {
    let mut t = Vec::new();
    for (w, m) in parts {
        t.extend(m.triplets().into_iter().map(|(r, c, v)| (r, c, w * v)));
    }
    Csr::from_triplets(n, n, &t)
}

/// Decomposition without the residual check.
pub fn quadratic_fit(ipc: &InnerProductComplex, samples: &[Vec<f64>], q: usize) -> Result<QuadraticDecomposition> {
    let n = ipc.dim(q);
    let lap = |t: f64| -> Result<Csr<f64>> { witten_laplacian(&deform(ipc, samples, t)?, q) };
    let (l0, lp, lm, l2) = (lap(0.0)?, lap(1.0)?, lap(-1.0)?, lap(2.0)?);
    let b = combine(n, &[(0.5, &lp), (-0.5, &lm)]);
    let c = combine(n, &[(0.5, &lp), (0.5, &lm), (-1.0, &l0)]);
    let pred = combine(n, &[(1.0, &l0), (2.0, &b), (4.0, &c), (-1.0, &l2)]);
    let residual = pred.max_abs() / l2.max_abs().max(f64::MIN_POSITIVE);
    Ok(QuadraticDecomposition { a: l0, b, c, residual })
}

/// As [`quadratic_fit`], failing when the family is not quadratic to [`QUADRATIC_TOLERANCE`].
pub fn quadratic_decomposition(ipc: &InnerProductComplex, samples: &[Vec<f64>], q: usize) -> Result<QuadraticDecomposition> {
    let d = quadratic_fit(ipc, samples, q)?;
    if d.residual > QUADRATIC_TOLERANCE {
        return Err(Error::Numeric(format!("Δ(2) deviates from A + 2B + 4C by {:e} (relative)", d.residual)));
    }
    Ok(d)
}

/// Grid spacing must resolve the Gaussian width `t^{-1/2}`.
pub fn check_resolution_cap(h: f64, t_max: f64) -> Result<()> {
    if t_max > 0.0 && h > 0.5 / t_max.sqrt() {
        return Err(Error::InvalidArgument(format!(
            "mesh size h = {h:.4} exceeds 0.5/sqrt(t_max) = {:.4}; need t_max <= 0.25/h^2 = {:.2}",
            0.5 / t_max.sqrt(),
            0.25 / (h * h)
        )));
    }
    Ok(())
}

/// Lowest `m` eigenpairs of `Δ^q(t)`, with scale `‖G‖_F²` for thresholding.
pub fn witten_spectrum(dc: &DeformedComplex, q: usize, m: usize, opts: &EigenOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let sf = dc.complex.symmetric_factor(q)?;
    let scale = sf.g.frobenius().powi(2);
    let e = FactoredOperator::new(sf.g.clone()).lowest(m, opts)?;
    let vectors = e.vectors.iter().map(|v| sf.to_cochain(v)).collect();
    Ok((e.values, vectors, scale))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClusterLabel {
    Cluster(u32),
    Unresolved,
}

impl ClusterLabel {
    pub fn cluster(&self) -> Option<u32> {
        match self {
            ClusterLabel::Cluster(k) => Some(*k),
            ClusterLabel::Unresolved => None,
        }
    }
}

impl std::fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterLabel::Cluster(k) => write!(f, "{k}"),
            ClusterLabel::Unresolved => write!(f, "unresolved"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BranchOptions {
    pub overlap_min: f64,
    pub tol_group: f64,
    pub max_depth: usize,
    pub eigen: EigenOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions { overlap_min: 0.8, tol_group: 1e-8, max_depth: 12, eigen: EigenOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct BranchFamily {
    pub degree: usize,
    pub t_grid: Vec<f64>,
    pub m: usize,
    /// `values[α][i] = λ_α(t_i)`.
    pub values: Vec<Vec<f64>>,
    /// `vectors[α][i]`, M-orthonormal at each `t_i`.
    pub vectors: Vec<Vec<Vec<f64>>>,
    /// Matched `|⟨ω_α(t_{i−1}), ω_α(t_i)⟩_M|`; 1 at `i = 0`.
    pub overlaps: Vec<Vec<f64>>,
    /// Grid steps at which the branch could not be matched above `overlap_min`.
    pub unresolved_steps: Vec<Vec<usize>>,
    pub labels: Vec<ClusterLabel>,
    /// Richardson slope estimate of `λ/(2t)` at the end of the grid.
    pub slopes: Vec<f64>,
    /// Sorted eigenvalues at each grid point.
    pub spectra: Vec<Vec<f64>>,
    /// `‖G‖_F²` at each grid point.
    pub scales: Vec<f64>,
    /// Bisections inserted before each grid point.
    pub refinements: Vec<usize>,
}

impl BranchFamily {
    pub fn is_resolved(&self, branch: usize) -> bool {
        self.unresolved_steps[branch].is_empty()
    }

    pub fn min_overlap(&self, branch: usize) -> f64 {
        self.overlaps[branch].iter().cloned().fold(1.0, f64::min)
    }

    pub fn unresolved_count(&self) -> usize {
        (0..self.m).filter(|&a| !self.is_resolved(a)).count()
    }

    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.t_grid
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or_else(|| Error::InvalidArgument(format!("t = {t} is not on the branch grid")))
    }
}

#[derive(Clone, Debug)]
struct Snapshot {
    t: f64,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    spectrum: Vec<f64>,
    scale: f64,
}

struct Tracker<'a> {
    ipc: &'a InnerProductComplex,
    samples: &'a [Vec<f64>],
    q: usize,
    m: usize,
    opts: &'a BranchOptions,
}

impl Tracker<'_> {
    fn solve(&self, t: f64) -> Result<Snapshot> {
        let dc = deform(self.ipc, self.samples, t)?;
        let (values, vectors, scale) = witten_spectrum(&dc, self.q, self.m, &self.opts.eigen)?;
        Ok(Snapshot { t, spectrum: values.clone(), values, vectors, scale })
    }

    fn overlap(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = &self.ipc.inner[self.q];
        let mb: Vec<Vec<f64>> = b.iter().map(|v| m.apply(v)).collect();
        a.iter().map(|u| mb.iter().map(|w| dense::dot(u, w)).collect()).collect()
    }

    /// Rotates `vecs[group]` by the orthogonal polar factor of `target` (g×g) so that
    /// the rotated vectors maximise their overlap with the selected partners.
    fn rotate_group(vecs: &mut [Vec<f64>], group: &[usize], target: &faer::Mat<f64>) -> Result<()> {
        let y = dense::polar(target.as_ref())?;
        let g = group.len();
        let old: Vec<Vec<f64>> = group.iter().map(|&i| vecs[i].clone()).collect();
        for j in 0..g {
            let v = &mut vecs[group[j]];
            v.iter_mut().for_each(|x| *x = 0.0);
            for (i, o) in old.iter().enumerate() {
                let c = y[(i, j)];
                v.iter_mut().zip(o).for_each(|(x, s)| *x += c * s);
            }
        }
        Ok(())
    }

    fn strongest(scores: Vec<f64>, g: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx.truncate(g);
        idx
    }

    /// Matches `next` to `prev`, rotating degenerate groups on both sides. Returns the
    /// reordered snapshot and per-branch overlaps.
    fn matched(&self, prev: &mut Snapshot, mut next: Snapshot) -> Result<(Snapshot, Vec<f64>)> {
        let tol = self.opts.tol_group;
        for ga in groups_by_value(&prev.values, tol).into_iter().filter(|g| g.len() > 1) {
            let o = self.overlap(&ga.iter().map(|&i| prev.vectors[i].clone()).collect::<Vec<_>>(), &next.vectors);
            let scores = (0..self.m).map(|j| o.iter().map(|r| r[j] * r[j]).sum()).collect();
            let cols = Self::strongest(scores, ga.len());
            let target = faer::Mat::from_fn(ga.len(), ga.len(), |i, j| o[i][cols[j]]);
            Self::rotate_group(&mut prev.vectors, &ga, &target)?;
        }
        for gb in groups_by_value(&next.values, tol).into_iter().filter(|g| g.len() > 1) {
            let o = self.overlap(&prev.vectors, &gb.iter().map(|&j| next.vectors[j].clone()).collect::<Vec<_>>());
            let scores = o.iter().map(|r| r.iter().map(|x| x * x).sum()).collect();
            let rows = Self::strongest(scores, gb.len());
            let target = faer::Mat::from_fn(gb.len(), gb.len(), |i, j| o[rows[j]][i]);
            Self::rotate_group(&mut next.vectors, &gb, &target)?;
        }
        let o = self.overlap(&prev.vectors, &next.vectors);
        let cost: Vec<Vec<f64>> = o.iter().map(|r| r.iter().map(|x| -x.abs()).collect()).collect();
        let perm = assignment(&cost);
        let mut values = Vec::with_capacity(self.m);
        let mut vectors = Vec::with_capacity(self.m);
        let mut ov = Vec::with_capacity(self.m);
        for (a, &j) in perm.iter().enumerate() {
            let mut v = next.vectors[j].clone();
            if o[a][j] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            values.push(next.values[j]);
            vectors.push(v);
            ov.push(o[a][j].abs());
        }
        Ok((Snapshot { t: next.t, values, vectors, spectrum: next.spectrum, scale: next.scale }, ov))
    }

    /// Advances `prev` to `t`, bisecting while the worst overlap is low and refinement keeps helping.
    fn advance(&self, prev: &mut Snapshot, t: f64, depth: usize, parent_deficit: Option<f64>) -> Result<(Snapshot, Vec<f64>, usize)> {
        let cand = self.solve(t)?;
        let (next, ov) = self.matched(prev, cand)?;
        let worst = ov.iter().cloned().fold(1.0, f64::min);
        let deficit = 1.0 - worst;
        let stalled = parent_deficit.is_some_and(|d| deficit > 0.5 * d);
        if worst >= self.opts.overlap_min || depth >= self.opts.max_depth || stalled {
            return Ok((next, ov, 0));
        }
        let mid = 0.5 * (prev.t + t);
        let (mut s_mid, ov1, r1) = self.advance(prev, mid, depth + 1, Some(deficit))?;
        let (s_end, ov2, r2) = self.advance(&mut s_mid, t, depth + 1, Some(deficit))?;
        let ov = ov1.iter().zip(&ov2).map(|(a, b)| a.min(*b)).collect();
        Ok((s_end, ov, r1 + r2 + 1))
    }
}

/// Near-degenerate groups of (not necessarily sorted) values, as lists of original indices.
fn groups_by_value(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    group_multiplicities(&sorted, tol).into_iter().map(|g| g.into_iter().map(|k| idx[k]).collect()).collect()
}

/// Follows the `m` lowest eigenpairs of `Δ^q(t)` along `t_grid`.
pub fn track_branches(ipc: &InnerProductComplex, samples: &[Vec<f64>], q: usize, t_grid: &[f64], m: usize, opts: &BranchOptions) -> Result<BranchFamily> {
    check_samples(ipc, samples)?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("t_grid must be non-empty and strictly increasing".into()));
    }
    if m == 0 || m > ipc.dim(q) {
        return Err(Error::InvalidArgument(format!("branch count {m} outside 1..={}", ipc.dim(q))));
    }
    if !(opts.overlap_min > 0.5 && opts.overlap_min < 1.0) {
        return Err(Error::InvalidArgument(format!("overlap_min {} outside (0.5, 1)", opts.overlap_min)));
    }
    let tr = Tracker { ipc, samples, q, m, opts };
    let steps = t_grid.len();
    let mut snaps: Vec<Snapshot> = Vec::with_capacity(steps);
    let mut overlaps = vec![vec![1.0; steps]; m];
    let mut unresolved_steps = vec![Vec::new(); m];
    let mut refinements = vec![0usize; steps];
    snaps.push(tr.solve(t_grid[0])?);
    for i in 1..steps {
        let mut prev = snaps[i - 1].clone();
        let (next, ov, r) = tr.advance(&mut prev, t_grid[i], 0, None)?;
        snaps[i - 1] = prev;
        refinements[i] = r;
        for a in 0..m {
            overlaps[a][i] = ov[a];
            if ov[a] < opts.overlap_min {
                unresolved_steps[a].push(i);
            }
        }
        log::debug!("q={q} t={:.4} min overlap {:.4} refinements {r}", t_grid[i], ov.iter().cloned().fold(1.0, f64::min));
        snaps.push(next);
    }
    let mut bf = BranchFamily {
        degree: q,
        t_grid: t_grid.to_vec(),
        m,
        values: (0..m).map(|a| snaps.iter().map(|s| s.values[a]).collect()).collect(),
        vectors: (0..m).map(|a| snaps.iter().map(|s| s.vectors[a].clone()).collect()).collect(),
        overlaps,
        unresolved_steps,
        labels: vec![ClusterLabel::Unresolved; m],
        slopes: vec![f64::NAN; m],
        spectra: snaps.iter().map(|s| s.spectrum.clone()).collect(),
        scales: snaps.iter().map(|s| s.scale).collect(),
        refinements,
    };
    classify_clusters(&mut bf);
    Ok(bf)
}

pub const LABEL_TOLERANCE: f64 = 0.25;

/// Labels each branch by the rounded Richardson slope of `λ/(2t)` over the two largest grid points.
pub fn classify_clusters(bf: &mut BranchFamily) {
    let n = bf.t_grid.len();
    for a in 0..bf.m {
        let s = if n >= 2 {
            let (t1, t2) = (bf.t_grid[n - 2], bf.t_grid[n - 1]);
            (bf.values[a][n - 1] - bf.values[a][n - 2]) / (2.0 * (t2 - t1))
        } else if bf.t_grid[0] > 0.0 {
            bf.values[a][0] / (2.0 * bf.t_grid[0])
        } else {
            f64::NAN
        };
        bf.slopes[a] = s;
        bf.labels[a] = if bf.is_resolved(a) && s.is_finite() && (s - s.round()).abs() < LABEL_TOLERANCE && s.round() >= 0.0 {
            ClusterLabel::Cluster(s.round() as u32)
        } else {
            ClusterLabel::Unresolved
        };
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub degree: usize,
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub ratio: f64,
    pub no_gap: bool,
}

pub const MIN_GAP: f64 = 10.0;

/// Largest ratio `λ_{i+1}/max(λ_i, floor)` in a sorted eigenvalue list.
pub fn detect_gap(values: &[f64], degree: usize, t: f64, floor: f64) -> Result<GapReport> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument("gap detection needs at least two eigenvalues".into()));
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..values.len() - 1 {
        let r = values[i + 1] / values[i].max(floor);
        if r > best.1 {
            best = (i, r);
        }
    }
    let (i, ratio) = best;
    Ok(GapReport { degree, t, lower: values[i], upper: values[i + 1], count: i + 1, ratio, no_gap: ratio < MIN_GAP })
}

/// Lowest `m` eigenvalues of `Δ^q(t)` and the gap among them.
pub fn gap_at(ipc: &InnerProductComplex, samples: &[Vec<f64>], q: usize, t: f64, m: usize, floor: f64, opts: &EigenOptions) -> Result<GapReport> {
    let dc = deform(ipc, samples, t)?;
    let (values, _, _) = witten_spectrum(&dc, q, m, opts)?;
    detect_gap(&values, q, t, floor)
}

/// Label-0 branches at one grid point, split into kernel (`vs,0`) and positive (`vs,+`) parts.
#[derive(Clone, Debug)]
pub struct VirtuallySmall {
    pub degree: usize,
    pub t: f64,
    pub branches: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Positions (into `branches`) of the kernel branches.
    pub zero: Vec<usize>,
    /// Positions of the remaining branches.
    pub positive: Vec<usize>,
}

/// Kernel branches are identified at the first grid point, where the kernel gap is widest.
pub fn virtually_small_package(bf: &BranchFamily, at_t: f64) -> Result<VirtuallySmall> {
    let i = bf.grid_index(at_t)?;
    let small: Vec<usize> = (0..bf.m).filter(|&a| bf.labels[a] == ClusterLabel::Cluster(0)).collect();
    if let Some(a) = (0..bf.m).find(|&a| !bf.is_resolved(a) && bf.slopes[a].abs() < LABEL_TOLERANCE) {
        return Err(Error::Invariant(format!("virtually small branch {a} of degree {} is unresolved", bf.degree)));
    }
    let split = kernel_split(&bf.spectra[0], bf.scales[0])?;
    let thr = split.map_or(f64::INFINITY, |s| s.threshold);
    let (mut zero, mut positive) = (Vec::new(), Vec::new());
    for (k, &a) in small.iter().enumerate() {
        if bf.values[a][0] <= thr {
            zero.push(k);
        } else {
            positive.push(k);
        }
    }
    Ok(VirtuallySmall {
        degree: bf.degree,
        t: bf.t_grid[i],
        values: small.iter().map(|&a| bf.values[a][i]).collect(),
        vectors: small.iter().map(|&a| bf.vectors[a][i].clone()).collect(),
        branches: small,
        zero,
        positive,
    })
}

impl VirtuallySmall {
    /// The same branches read off at another grid point.
    pub fn at(&self, bf: &BranchFamily, t: f64) -> Result<VirtuallySmall> {
        let i = bf.grid_index(t)?;
        Ok(VirtuallySmall {
            degree: self.degree,
            t: bf.t_grid[i],
            branches: self.branches.clone(),
            values: self.branches.iter().map(|&a| bf.values[a][i]).collect(),
            vectors: self.branches.iter().map(|&a| bf.vectors[a][i].clone()).collect(),
            zero: self.zero.clone(),
            positive: self.positive.clone(),
        })
    }

    /// Keeps the `count` branches with the smallest eigenvalues at `t`, for models where the
    /// label-0 set also picks up slowly varying branches above the (unresolved) gap.
    pub fn restrict_to(&self, count: usize) -> Result<VirtuallySmall> {
        if count > self.branches.len() {
            return Err(Error::Invariant(format!(
                "degree {}: {} virtually small branches, {count} required",
                self.degree,
                self.branches.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.branches.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        order.truncate(count);
        order.sort();
        Ok(VirtuallySmall {
            degree: self.degree,
            t: self.t,
            branches: order.iter().map(|&k| self.branches[k]).collect(),
            values: order.iter().map(|&k| self.values[k]).collect(),
            vectors: order.iter().map(|&k| self.vectors[k].clone()).collect(),
            zero: order.iter().enumerate().filter(|(_, k)| self.zero.contains(k)).map(|(i, _)| i).collect(),
            positive: order.iter().enumerate().filter(|(_, k)| self.positive.contains(k)).map(|(i, _)| i).collect(),
        })
    }
}

/// M-mass fraction of `v` outside the union of balls of `radius` around `centers` (periodic distance).
pub fn mass_outside(ipc: &InnerProductComplex, cx: &CellComplex, q: usize, v: &[f64], centers: &[Vec<f64>], radius: f64) -> f64 {
    let mv = ipc.inner[q].apply(v);
    let total: f64 = dense::dot(&mv, v);
    let mut outside = 0.0;
    for (k, x) in cx.barycenters[q].iter().enumerate() {
        let near = centers.iter().any(|c| periodic_distance(x, c, &cx.periods) <= radius);
        if !near {
            outside += mv[k] * v[k];
        }
    }
    if total > 0.0 {
        outside / total
    } else {
        0.0
    }
}

pub fn periodic_distance(a: &[f64], b: &[f64], periods: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let mut d = x - y;
            if let Some(&p) = periods.get(i) {
                d -= p * (d / p).round();
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::build_torus_grid;
    use std::f64::consts::PI;

    fn circle(n: usize) -> (CellComplex, InnerProductComplex) {
        let cx = build_torus_grid(1, n, &[1.0]).unwrap();
        let ipc = InnerProductComplex::from_cell_complex(&cx).unwrap();
        (cx, ipc)
    }

    #[test]
    fn constant_function_leaves_differential_unchanged() {
        let (cx, ipc) = circle(16);
        let s = sample_function(&cx, |_| 0.3);
        let dc = deform(&ipc, &s, 7.0).unwrap();
        assert_eq!(dc.d(0), &ipc.diff[0]);
    }

    #[test]
    fn deformation_keeps_rank() {
        let (cx, ipc) = circle(64);
        let s = sample_function(&cx, |x| (2.0 * PI * x[0]).cos());
        let d5 = deform(&ipc, &s, 5.0).unwrap();
        let sv = dense::singular_values(d5.d(0).to_dense().as_ref()).unwrap();
        let rank = sv.iter().filter(|&&x| x > 1e-10 * sv[0]).count();
        assert_eq!(rank, 63);
    }

    #[test]
    fn overflow_guard() {
        let (cx, ipc) = circle(8);
        let s = sample_function(&cx, |x| x[0]);
        assert!(deform(&ipc, &s, 1000.0).is_err());
    }

    #[test]
    fn gap_report_counts() {
        let g = detect_gap(&[0.0, 1e-9, 40.0, 41.0], 0, 10.0, 1.0).unwrap();
        assert_eq!(g.count, 2);
        assert!(!g.no_gap);
        assert!(detect_gap(&[0.0, 3.0, 5.0], 0, 1.0, 1.0).unwrap().no_gap);
    }

    #[test]
    fn resolution_cap() {
        assert!(check_resolution_cap(1.0 / 64.0, 30.0).is_ok());
        assert!(check_resolution_cap(0.25, 30.0).is_err());
    }

    #[test]
    fn constant_function_gives_flat_branches() {
        let (cx, ipc) = circle(32);
        let s = sample_function(&cx, |_| 0.0);
        let bf = track_branches(&ipc, &s, 0, &[0.0, 1.0, 2.0], 5, &BranchOptions::default()).unwrap();
        for a in 0..5 {
            assert!(bf.is_resolved(a));
            assert!((bf.values[a][0] - bf.values[a][2]).abs() < 1e-9 * (1.0 + bf.values[a][0]));
            assert_eq!(bf.labels[a], ClusterLabel::Cluster(0));
        }
    }
}
