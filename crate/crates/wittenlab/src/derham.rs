//! Hodge theory on a discretized manifold.

use faer::Mat;
use serde::Serialize;

use crate::complexes::{CellComplex, Cochain, InnerProductComplex};
use crate::error::{Error, Result};
use crate::linalg::{cgls, dense, EigenOptions, FactoredOperator};

pub const TOL_ZERO: f64 = 1e-6;
pub const MIN_GAP_RATIO: f64 = 10.0;

#[derive(Clone, Debug)]
pub struct SpectralPackage {
    pub degree: usize,
    pub values: Vec<f64>,
    /// M-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    /// Indices grouped by near-equal eigenvalues.
    pub groups: Vec<Vec<usize>>,
    pub tol_group: f64,
    pub residuals: Vec<f64>,
    /// Upper bound for the operator norm, used as noise reference.
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct HodgeSplit {
    pub exact: Cochain,
    pub coexact: Cochain,
    pub harmonic: Cochain,
}

/// Partitions sorted eigenvalues into chains with `|λ_i − λ_{i+1}| ≤ tol·(1 + λ_i)`.
pub fn group_multiplicities(values: &[f64], tol_group: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - values[*g.last().unwrap()]).abs() <= tol_group * (1.0 + v.abs()) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Lowest `count` eigenpairs of `Δ^q` with M-orthonormal vectors.
pub fn spectral_package(ipc: &InnerProductComplex, q: usize, count: usize, tol_group: f64, opts: &EigenOptions) -> Result<SpectralPackage> {
    let sf = ipc.symmetric_factor(q)?;
    let scale = sf.g.frobenius().powi(2);
    let op = FactoredOperator::new(sf.g.clone());
    let e = op.lowest(count, opts)?;
    let vectors: Vec<Vec<f64>> = e.vectors.iter().map(|v| sf.to_cochain(v)).collect();
    Ok(SpectralPackage {
        degree: q,
        groups: group_multiplicities(&e.values, tol_group),
        values: e.values,
        vectors,
        tol_group,
        residuals: e.residuals,
        scale,
    })
}

/// Kernel split of a sorted eigenvalue window.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelSplit {
    pub dimension: usize,
    pub threshold: f64,
    pub gap_ratio: f64,
}

/// Counts eigenvalues below `tol_zero · λ_first_nonzero`, where "nonzero" means above the roundoff
/// floor `1e-11·scale`. Values caught between the threshold and the floor make the split ambiguous.
/// Returns `None` when every eigenvalue in the window is numerically zero.
pub fn kernel_split(values: &[f64], scale: f64) -> Result<Option<KernelSplit>> {
    let floor = 1e-11 * scale;
    let Some(&fnz) = values.iter().find(|&&v| v > floor) else {
        return Ok(None);
    };
    let threshold = TOL_ZERO * fnz;
    let dimension = values.iter().filter(|&&v| v <= threshold).count();
    let kmax = values.iter().cloned().filter(|&v| v <= threshold).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let next = values.iter().cloned().filter(|&v| v > threshold).fold(f64::INFINITY, f64::min);
    let gap_ratio = if next <= floor { next / kmax.max(threshold) } else { next / kmax };
    if next <= floor || gap_ratio < MIN_GAP_RATIO {
        return Err(Error::AmbiguousKernel { ratio: gap_ratio.min(MIN_GAP_RATIO * (1.0 - f64::EPSILON)) });
    }
    Ok(Some(KernelSplit { dimension, threshold, gap_ratio }))
}

/// Spectral package large enough to contain the kernel and one nonzero eigenvalue.
pub fn kernel_package(ipc: &InnerProductComplex, q: usize, opts: &EigenOptions) -> Result<(SpectralPackage, KernelSplit)> {
    let dim = ipc.dim(q);
    let mut count = dim.min(6);
    loop {
        let pkg = spectral_package(ipc, q, count, 1e-8, opts)?;
        match kernel_split(&pkg.values, pkg.scale)? {
            Some(k) => return Ok((pkg, k)),
            None if count == dim => {
                let k = KernelSplit { dimension: dim, threshold: f64::INFINITY, gap_ratio: f64::INFINITY };
                return Ok((pkg, k));
            }
            None => count = (2 * count).min(dim),
        }
    }
}

pub fn betti_numbers(ipc: &InnerProductComplex, opts: &EigenOptions) -> Result<Vec<usize>> {
    (0..=ipc.top()).map(|q| Ok(kernel_package(ipc, q, opts)?.1.dimension)).collect()
}

/// M-orthonormal basis of harmonic cochains in degree `q`.
pub fn harmonic_basis(ipc: &InnerProductComplex, q: usize, opts: &EigenOptions) -> Result<Vec<Vec<f64>>> {
    let (pkg, k) = kernel_package(ipc, q, opts)?;
    Ok(pkg.vectors[..k.dimension].to_vec())
}

pub fn euler_characteristic(ipc: &InnerProductComplex) -> i64 {
    ipc.euler_characteristic()
}

pub fn harmonic_euler(ipc: &InnerProductComplex, opts: &EigenOptions) -> Result<i64> {
    Ok(betti_numbers(ipc, opts)?.iter().enumerate().map(|(q, &b)| if q % 2 == 0 { b as i64 } else { -(b as i64) }).sum())
}

/// Orthogonal Hodge decomposition `ω = dα + δβ + h`.
pub fn hodge_decompose(ipc: &InnerProductComplex, omega: &Cochain) -> Result<HodgeSplit> {
    let q = omega.degree;
    let n = ipc.dim(q);
    if omega.values.len() != n {
        return Err(Error::InvalidArgument(format!("cochain length {} != {n}", omega.values.len())));
    }
    let w = ipc.to_frame(q, &omega.values)?;
    let exact_f = match ipc.down_block(q)? {
        Some(a) => {
            let (x, _) = cgls(|v| a.matvec(v), |v| a.matvec_t(v), &w, a.ncols, 1e-15, 20 * n + 100);
            a.matvec(&x)
        }
        None => vec![0.0; n],
    };
    let coexact_f = match ipc.up_block(q)? {
        Some(b) => {
            let (x, _) = cgls(|v| b.matvec_t(v), |v| b.matvec(v), &w, b.nrows, 1e-15, 20 * n + 100);
            b.matvec_t(&x)
        }
        None => vec![0.0; n],
    };
    let exact = ipc.from_frame(q, &exact_f)?;
    let coexact = ipc.from_frame(q, &coexact_f)?;
    let harmonic: Vec<f64> = (0..n).map(|i| omega.values[i] - exact[i] - coexact[i]).collect();
    Ok(HodgeSplit {
        exact: Cochain { degree: q, values: exact },
        coexact: Cochain { degree: q, values: coexact },
        harmonic: Cochain { degree: q, values: harmonic },
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LatticeVolume {
    /// `V^q`, normalised so that `V^0 = 1` and `V^n = vol`.
    pub value: f64,
    /// Covolume of the lattice of harmonic forms with integral periods, `sqrt(det(P⁻ᵀ G P⁻¹))`.
    pub period_covolume: f64,
}

/// Lattice volume from a harmonic basis and an integral cycle basis.
pub fn lattice_volume_from(harmonic: &[Vec<f64>], ipc: &InnerProductComplex, q: usize, cycles: &[Vec<f64>], total_volume: f64) -> Result<LatticeVolume> {
    let b = harmonic.len();
    if cycles.len() != b {
        return Err(Error::InvalidArgument(format!("{} cycles for {b} harmonic forms in degree {q}", cycles.len())));
    }
    if b == 0 {
        return Ok(LatticeVolume { value: 1.0, period_covolume: 1.0 });
    }
    let g = Mat::from_fn(b, b, |i, j| ipc.inner[q].inner(&harmonic[i], &harmonic[j]));
    let p = Mat::from_fn(b, b, |i, j| dense::dot(&cycles[i], &harmonic[j]));
    let detp = dense::determinant(p.as_ref()).abs();
    let pscale: f64 = (0..b).map(|j| dense::norm(&dense::col(p.as_ref(), j))).product();
    if !(detp > 1e-10 * pscale) {
        return Err(Error::Numeric(format!("singular period matrix in degree {q}")));
    }
    let naive = dense::determinant(g.as_ref()).sqrt() / detp;
    Ok(LatticeVolume { value: total_volume.powf(b as f64 / 2.0) / naive, period_covolume: naive })
}

pub fn lattice_volume(ipc: &InnerProductComplex, cx: &CellComplex, q: usize, opts: &EigenOptions) -> Result<LatticeVolume> {
    let h = harmonic_basis(ipc, q, opts)?;
    lattice_volume_from(&h, ipc, q, &cx.integral_cycle_basis(q), cx.total_volume())
}

/// `∏ (V^i)^{(−1)^i}`.
pub fn volume_product(volumes: &[f64]) -> f64 {
    volumes.iter().enumerate().map(|(i, v)| if i % 2 == 0 { *v } else { 1.0 / v }).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::build_torus_grid;

    #[test]
    fn grouping_chains() {
        let g = group_multiplicities(&[0.0, 1.0, 1.0 + 1e-12, 2.0], 1e-8);
        assert_eq!(g, vec![vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn kernel_split_rejects_straddling_values() {
        assert!(kernel_split(&[1e-20, 1e-12, 1e-8], 1.0).is_err());
        let k = kernel_split(&[1e-20, 1.0, 2.0], 10.0).unwrap().unwrap();
        assert_eq!(k.dimension, 1);
    }

    #[test]
    fn circle_package_double_eigenvalue() {
        let n = 64;
        let cx = build_torus_grid(1, n, &[1.0]).unwrap();
        let ipc = InnerProductComplex::from_cell_complex(&cx).unwrap();
        let p = spectral_package(&ipc, 0, 5, 1e-8, &EigenOptions::default()).unwrap();
        let exact = (2.0 * n as f64 * (std::f64::consts::PI / n as f64).sin()).powi(2);
        assert!(p.values[0].abs() < 1e-9);
        assert!((p.values[1] / exact - 1.0).abs() < 1e-12);
        assert_eq!(p.groups[1], vec![1, 2]);
    }
}
