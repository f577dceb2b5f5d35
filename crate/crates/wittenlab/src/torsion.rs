//! Torsion of finite inner-product complexes, volumes of chain maps, and the comparison
//! maps between the small-eigenvalue complex and the Morse complex.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complexes::{CellComplex, InnerProduct, InnerProductComplex};
use crate::derham::{harmonic_basis, kernel_split};
use crate::error::{Error, Result};
use crate::linalg::{dense, integer, Csr, EigenOptions};
use crate::morse::{int_matrix, scaling_map, MorseData, MorseFunction, ShootOptions};
use crate::oscillator::{place_on_mesh, CutoffProfile};
use crate::witten::VirtuallySmall;

/// Dense complexes above this size are refused by the exact torsion routines.
pub const DENSE_TORSION_LIMIT: usize = 2000;

/// Nonzero eigenvalues of `Δ^q` (ascending), thresholded like the kernel detection in `derham`.
pub fn nonzero_spectrum(ipc: &InnerProductComplex, q: usize) -> Result<Vec<f64>> {
    let dim = ipc.dim(q);
    if dim == 0 {
        return Ok(vec![]);
    }
    if dim > DENSE_TORSION_LIMIT {
        return Err(Error::InvalidArgument(format!("degree {q} has dimension {dim} > {DENSE_TORSION_LIMIT}")));
    }
    let g = ipc.symmetric_factor(q)?.g;
    let scale = g.frobenius().powi(2);
    let mut values: Vec<f64> = if g.nrows == 0 { vec![] } else { dense::singular_values(g.to_dense().as_ref())?.iter().map(|s| s * s).collect() };
    values.resize(dim, 0.0);
    values.sort_by(f64::total_cmp);
    Ok(match kernel_split(&values, scale)? {
        Some(k) => values[k.dimension..].to_vec(),
        None => vec![],
    })
}

/// `det′Δ^q`, the product of the nonzero eigenvalues (1 for an empty product).
pub fn detprime_laplacian(ipc: &InnerProductComplex, q: usize) -> Result<f64> {
    Ok(nonzero_spectrum(ipc, q)?.iter().map(|v| v.ln()).sum::<f64>().exp())
}

/// `ln T(C) = Σ_q (−1)^{q+1} (q/2) ln det′Δ^q`.
pub fn log_torsion(ipc: &InnerProductComplex) -> Result<f64> {
    let mut acc = 0.0;
    for q in 1..=ipc.top() {
        let ld: f64 = nonzero_spectrum(ipc, q)?.iter().map(|v| v.ln()).sum();
        let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * 0.5 * q as f64 * ld;
    }
    Ok(acc)
}

pub fn torsion(ipc: &InnerProductComplex) -> Result<f64> {
    Ok(log_torsion(ipc)?.exp())
}

/// Reference `ln T` for integer differentials with orthonormal bases, from lattice data only:
/// `Σ_q (−1)^q ln(∏ SNF(d^q) · covol(ker_Z d^q) · covol(ker_Z d^{qT}))`.
pub fn integer_log_torsion(diffs: &[Vec<Vec<i64>>], dims: &[usize]) -> f64 {
    diffs
        .iter()
        .enumerate()
        .map(|(q, d)| {
            let snf: f64 = integer::smith_invariants(d).iter().map(|v| (*v as f64).ln()).sum();
            let k = integer::covolume(&integer::kernel_basis(d, dims[q])).ln();
            let kt = integer::covolume(&integer::kernel_basis(&integer::transpose(d, dims[q]), dims[q + 1])).ln();
            let s = snf + k + kt;
            if q % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .sum()
}

/// `vol(φ) = det(φ^#φ)^{1/2}` for `φ` between inner-product spaces.
pub fn vol_map(phi: &Mat<f64>, source: &InnerProduct, target: &InnerProduct) -> Result<f64> {
    if phi.ncols() != source.dim() || phi.nrows() != target.dim() {
        return Err(Error::InvalidArgument(format!("map of shape {}x{} between spaces of dims {} and {}", phi.nrows(), phi.ncols(), source.dim(), target.dim())));
    }
    if phi.ncols() == 0 {
        return Ok(1.0);
    }
    let mt = target.to_dense();
    let ms = source.to_dense();
    let g = phi.transpose() * &mt * phi;
    let det = dense::determinant(g.as_ref()) / dense::determinant(ms.as_ref());
    Ok(det.max(0.0).sqrt())
}

/// Per-degree maps between two complexes.
#[derive(Clone, Debug)]
pub struct ChainMap {
    pub source: InnerProductComplex,
    pub target: InnerProductComplex,
    pub maps: Vec<Mat<f64>>,
}

impl ChainMap {
    pub fn new(source: InnerProductComplex, target: InnerProductComplex, maps: Vec<Mat<f64>>) -> Result<Self> {
        if source.top() != target.top() || maps.len() != source.top() + 1 {
            return Err(Error::InvalidArgument("chain map length mismatch".into()));
        }
        for q in 0..source.top() {
            let left = &target.diff[q].to_dense() * &maps[q];
            let right = &maps[q + 1] * &source.diff[q].to_dense();
            let err = dense::max_abs((&left - &right).as_ref());
            let scale = dense::max_abs(left.as_ref()).max(dense::max_abs(right.as_ref())).max(1.0);
            if err > 1e-10 * scale {
                return Err(Error::Invariant(format!("chain property fails in degree {q} (defect {err:e})")));
            }
        }
        Ok(ChainMap { source, target, maps })
    }

    pub fn identity(c: &InnerProductComplex) -> Self {
        let maps = (0..=c.top()).map(|q| dense::identity(c.dim(q))).collect();
        ChainMap { source: c.clone(), target: c.clone(), maps }
    }
}

/// `Vol(φ) = ∏ vol(φ^q)^{(−1)^q}`.
pub fn vol_alternating(phi: &ChainMap) -> Result<f64> {
    let mut acc = 0.0;
    for (q, m) in phi.maps.iter().enumerate() {
        let v = vol_map(m, &phi.source.inner[q], &phi.target.inner[q])?;
        if v == 0.0 {
            return Err(Error::Numeric(format!("map in degree {q} is not injective")));
        }
        acc += if q % 2 == 0 { v.ln() } else { -v.ln() };
    }
    Ok(acc.exp())
}

/// `Vol(H(φ)) = ∏ vol(H^q(φ))^{(−1)^q}` on harmonic representatives.
pub fn vol_cohomology(phi: &ChainMap) -> Result<f64> {
    let opts = EigenOptions::default();
    let mut acc = 0.0;
    for q in 0..=phi.source.top() {
        let hs = harmonic_basis(&phi.source, q, &opts)?;
        let ht = harmonic_basis(&phi.target, q, &opts)?;
        if hs.len() != ht.len() {
            return Err(Error::Invariant(format!("cohomology dimensions differ in degree {q}: {} vs {}", hs.len(), ht.len())));
        }
        if hs.is_empty() {
            continue;
        }
        let m = &phi.maps[q];
        let a = Mat::from_fn(ht.len(), hs.len(), |i, j| {
            let img: Vec<f64> = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)] * hs[j][c]).sum()).collect();
            phi.target.inner[q].inner(&ht[i], &img)
        });
        let v = dense::determinant(a.as_ref()).abs();
        if v == 0.0 {
            return Err(Error::Numeric(format!("induced map on H^{q} is singular")));
        }
        acc += if q % 2 == 0 { v.ln() } else { -v.ln() };
    }
    Ok(acc.exp())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityCheck {
    /// `T(C₂)/T(C₁)`.
    pub lhs: f64,
    /// `Vol(H(φ))/Vol(φ)`.
    pub rhs: f64,
    pub relative_error: f64,
}

/// Both sides of `T(C₂)/T(C₁) = Vol(H(φ))/Vol(φ)` for an isomorphism `φ: C₁ → C₂`.
pub fn check_anomaly_identity(phi: &ChainMap) -> Result<IdentityCheck> {
    let lhs = (log_torsion(&phi.target)? - log_torsion(&phi.source)?).exp();
    let rhs = vol_cohomology(phi)? / vol_alternating(phi)?;
    Ok(IdentityCheck { lhs, rhs, relative_error: (lhs - rhs).abs() / rhs.abs() })
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut m = &a * a.transpose();
    for i in 0..n {
        m[(i, i)] += 0.5;
    }
    m
}

fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| if i == j { 1.5 } else { 0.0 } + rng.random_range(-0.5..0.5))
}

/// Seeded random complex of length ≤ 4 with dims ≤ 5 and SPD inner products, together with a
/// random isomorphism onto a second such complex.
pub fn random_isomorphism(seed: u64) -> Result<ChainMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = rng.random_range(1..=3usize);
    let dims: Vec<usize> = (0..=top).map(|_| rng.random_range(1..=5usize)).collect();
    let mut ranks = vec![0usize; top];
    for q in 0..top {
        let prev = if q > 0 { ranks[q - 1] } else { 0 };
        ranks[q] = rng.random_range(0..=(dims[q] - prev).min(dims[q + 1]));
    }
    let std: Vec<Mat<f64>> = (0..top)
        .map(|q| {
            let mut d = Mat::zeros(dims[q + 1], dims[q]);
            for i in 0..ranks[q] {
                d[(i, dims[q] - ranks[q] + i)] = rng.random_range(0.5..2.0);
            }
            d
        })
        .collect();
    let p: Vec<Mat<f64>> = dims.iter().map(|&n| random_invertible(&mut rng, n)).collect();
    let d1: Vec<Mat<f64>> = (0..top).map(|q| &p[q + 1] * &std[q] * dense::inverse(p[q].as_ref())).collect();
    let phi: Vec<Mat<f64>> = dims.iter().map(|&n| random_invertible(&mut rng, n)).collect();
    let d2: Vec<Mat<f64>> = (0..top).map(|q| &phi[q + 1] * &d1[q] * dense::inverse(phi[q].as_ref())).collect();
    let m1: Vec<InnerProduct> = dims.iter().map(|&n| InnerProduct::Dense(random_spd(&mut rng, n))).collect();
    let m2: Vec<InnerProduct> = dims.iter().map(|&n| InnerProduct::Dense(random_spd(&mut rng, n))).collect();
    let c1 = InnerProductComplex::new(m1, d1.iter().map(|d| Csr::from_dense(d.as_ref())).collect())?;
    let c2 = InnerProductComplex::new(m2, d2.iter().map(|d| Csr::from_dense(d.as_ref())).collect())?;
    ChainMap::new(c1, c2, phi)
}

/// Comparison maps in one degree at one value of `t`.
#[derive(Clone, Debug)]
pub struct ComparisonBundle {
    pub t: f64,
    pub degree: usize,
    /// `J^q(t)E_x` as columns (mesh cochains).
    pub j: Mat<f64>,
    /// M-orthonormal basis of `Ω_vs^q(t)`; `Q = V Vᵀ M`.
    pub vs_basis: Mat<f64>,
    /// `I^q(t) = Q J` as columns.
    pub i: Mat<f64>,
    /// `R^q(t) = I (I^# I)^{−1/2}` as columns.
    pub r: Mat<f64>,
    /// `L^q(t) = S^q(t) Int^q(t)` restricted to `Ω_vs`, in the basis `V`.
    pub l_vs: Mat<f64>,
    /// `Int^q(t)` restricted to `Ω_vs`, in the basis `V`.
    pub int_vs: Mat<f64>,
    /// Coordinates of `I` in the basis `V`.
    i_coords: Mat<f64>,
    pub diagnostics: ComparisonDiagnostics,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComparisonDiagnostics {
    pub min_singular_i: f64,
    pub condition_i: f64,
    /// `‖VᵀMV − Id‖`, the idempotency and self-adjointness defect of `Q`.
    pub projector_defect: f64,
    /// `‖RᵀMR − Id‖`.
    pub isometry_defect: f64,
}

pub const MIN_SINGULAR_I: f64 = 1e-8;

/// Assembles `J, Q, I, R, L` in degree `vs.degree` at `t = vs.t`.
///
/// `samples[q]` holds `f` at the barycentres of `q`-cells (the same samples that define the
/// deformation), used for the `e^{tf}` twist of `Int`.
#[allow(clippy::too_many_arguments)]
pub fn build_comparison(
    cx: &CellComplex,
    ipc: &InnerProductComplex,
    samples: &[Vec<f64>],
    mf: &dyn MorseFunction,
    md: &MorseData,
    vs: &VirtuallySmall,
    profile: &CutoffProfile,
    opts: &ShootOptions,
) -> Result<ComparisonBundle> {
    let (q, t) = (vs.degree, vs.t);
    let n = ipc.dim(q);
    let c = md.by_index[q].len();
    let m = vs.vectors.len();
    let charts: Vec<_> = md.by_index[q].iter().map(|&x| md.critical_points[x].local_chart()).collect();
    let jcols = place_on_mesh(cx, &charts, q, t, profile)?;
    let j = dense::from_cols(n, &jcols);
    let v = dense::from_cols(n, &vs.vectors);
    let mv = Mat::from_fn(n, m, |r, k| ipc.inner[q].apply(&vs.vectors[k])[r]);
    let vtmv = v.transpose() * &mv;
    let projector_defect = dense::max_abs((&vtmv - dense::identity(m)).as_ref());
    let i_coords = mv.transpose() * &j;
    let i = &v * &i_coords;
    let (sv, _, _) = if c > 0 && m > 0 { dense::svd(i_coords.as_ref())? } else { (vec![], Mat::zeros(0, 0), Mat::zeros(0, 0)) };
    let smin = if m < c { 0.0 } else { sv.last().copied().unwrap_or(1.0) };
    let smax = sv.first().copied().unwrap_or(1.0);
    if c > 0 && smin < MIN_SINGULAR_I {
        return Err(Error::Numeric(format!("I^{q}({t}) is numerically singular (smallest singular value {smin:e})")));
    }
    let gram = i_coords.transpose() * &i_coords;
    let coeff = &i_coords * dense::inv_sqrt_spd(gram.as_ref())?;
    let r = &v * &coeff;
    let mr = Mat::from_fn(n, c, |row, k| ipc.inner[q].apply(&dense::col(r.as_ref(), k))[row]);
    let isometry_defect = dense::max_abs((r.transpose() * &mr - dense::identity(c)).as_ref());
    let int = int_matrix(cx, mf, md, q, opts)?;
    let twist: Vec<f64> = samples[q].iter().map(|f| (t * f).exp()).collect();
    let wv = Mat::from_fn(n, m, |row, k| twist[row] * vs.vectors[k][row]);
    let int_vs = int.to_dense() * &wv;
    let s = scaling_map(md, q, t)?;
    let l_vs = Mat::from_fn(c, m, |row, k| s[row] * int_vs[(row, k)]);
    Ok(ComparisonBundle {
        t,
        degree: q,
        j,
        vs_basis: v,
        i,
        r,
        l_vs,
        int_vs,
        i_coords,
        diagnostics: ComparisonDiagnostics { min_singular_i: smin, condition_i: smax / smin, projector_defect, isometry_defect },
    })
}

impl ComparisonBundle {
    /// `L^q(t) R^q(t)` as a `c_q × c_q` matrix.
    pub fn lr(&self) -> Result<Mat<f64>> {
        let gram = self.i_coords.transpose() * &self.i_coords;
        let coeff = &self.i_coords * dense::inv_sqrt_spd(gram.as_ref())?;
        Ok(&self.l_vs * coeff)
    }

    /// Spectral norm of `L R − Id`.
    pub fn lr_defect(&self) -> Result<f64> {
        let lr = self.lr()?;
        let c = lr.nrows();
        if c == 0 {
            return Ok(0.0);
        }
        dense::spectral_norm((lr - dense::identity(c)).as_ref())
    }

    /// `a^q(t) = Vol(Int_vs^q(t))`.
    pub fn a_value(&self) -> f64 {
        volume_of(&self.int_vs)
    }
}

/// `det(AᵀA)^{1/2}` for `A` expressed in orthonormal bases; 0 when `A` has more columns than rows.
pub fn volume_of(a: &Mat<f64>) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    if a.ncols() > a.nrows() {
        return 0.0;
    }
    let g = a.transpose() * a;
    dense::determinant(g.as_ref()).max(0.0).sqrt()
}

/// `a^q(t) = Vol(Int_vs^q(t))` from a virtually small package.
pub fn a_function(cx: &CellComplex, samples: &[Vec<f64>], mf: &dyn MorseFunction, md: &MorseData, vs: &VirtuallySmall, opts: &ShootOptions) -> Result<f64> {
    let q = vs.degree;
    let n = cx.count(q);
    let int = int_matrix(cx, mf, md, q, opts)?;
    let wv = Mat::from_fn(n, vs.vectors.len(), |row, k| (vs.t * samples[q][row]).exp() * vs.vectors[k][row]);
    Ok(volume_of(&(int.to_dense() * wv)))
}

/// `a(t) = ∏ a^q(t)^{(−1)^q}`.
pub fn a_alternating(a: &[f64]) -> f64 {
    a.iter().enumerate().map(|(q, v)| if q % 2 == 0 { v.ln() } else { -v.ln() }).sum::<f64>().exp()
}

/// The other printed convention, `∏_{q ≥ 1} a^q(t)^{−1/q}`.
pub fn a_inverse_degree(a: &[f64]) -> f64 {
    a.iter().enumerate().skip(1).map(|(q, v)| -v.ln() / q as f64).sum::<f64>().exp()
}

/// `½ Σ_q (−1)^{q+1} q Σ_{α ∈ vs,+} ln λ_α^q(0) + ln a(0) − Σ_i (−1)^i ln V^i`.
pub fn torsion_formula_rhs(vs_plus: &[Vec<f64>], a0: f64, lattice_volumes: &[f64]) -> f64 {
    let spectral: f64 = vs_plus
        .iter()
        .enumerate()
        .map(|(q, l)| {
            let sign = if q % 2 == 1 { 1.0 } else { -1.0 };
            sign * q as f64 * l.iter().map(|v| v.ln()).sum::<f64>()
        })
        .sum();
    let vol: f64 = lattice_volumes.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v.ln() } else { -v.ln() }).sum();
    0.5 * spectral + a0.ln() - vol
}
