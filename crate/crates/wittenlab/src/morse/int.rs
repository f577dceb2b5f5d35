//! Integration of mesh cochains over unstable cells.

use super::flow::integrate_flow;
use super::functions::{Manifold, MorseFunction};
use super::{MorseData, ShootOptions};
use crate::complexes::{CellComplex, CellShape, Cochain, Topology};
use crate::error::{Error, Result};
use crate::linalg::{dense, Csr};

const ALIGN_TOL: f64 = 1e-9;

/// Chain representative of the unstable cell of critical point `x` (position in
/// `md.critical_points`) as `(cell id, coefficient)` pairs in degree `ind x`.
pub fn unstable_chain(cx: &CellComplex, mf: &dyn MorseFunction, md: &MorseData, x: usize, opts: &ShootOptions) -> Result<Vec<(usize, f64)>> {
    let cp = &md.critical_points[x];
    let q = cp.index;
    let n = cx.dimension;
    check_manifold(cx, mf.manifold())?;
    if q == 0 {
        return Ok(vec![(nearest_vertex(cx, &cp.location), 1.0)]);
    }
    if cx.topology == Topology::Torus && mf.separable() {
        return product_cell(cx, mf, md, x, opts);
    }
    if q == n {
        let labels = basin_labels(cx, mf, md, opts)?;
        return Ok(labels.iter().enumerate().filter(|(_, &l)| l == x).map(|(c, _)| (c, 1.0)).collect());
    }
    if q == 1 && cx.topology == Topology::Torus {
        return separatrix_chain(cx, mf, md, x, opts);
    }
    Err(Error::InvalidArgument(format!("unstable cell of index-{q} point {:?} is not representable on this mesh", cp.location)))
}

/// `Int^q` as a `c_q × #cells_q` matrix (rows follow `md.by_index[q]`).
pub fn int_matrix(cx: &CellComplex, mf: &dyn MorseFunction, md: &MorseData, q: usize, opts: &ShootOptions) -> Result<Csr<f64>> {
    let rows = &md.by_index[q];
    let mut trip = Vec::new();
    if q == cx.dimension && q > 0 && !(cx.topology == Topology::Torus && mf.separable()) {
        let labels = basin_labels(cx, mf, md, opts)?;
        for (c, &l) in labels.iter().enumerate() {
            if let Some(r) = rows.iter().position(|&x| x == l) {
                trip.push((r, c, 1.0));
            }
        }
    } else {
        for (r, &x) in rows.iter().enumerate() {
            for (c, v) in unstable_chain(cx, mf, md, x, opts)? {
                trip.push((r, c, v));
            }
        }
    }
    Ok(Csr::from_triplets(rows.len(), cx.count(q), &trip))
}

/// `Int(ω)(x)`, optionally twisted by `e^{t f}` with `f` sampled on the cells of degree `q`.
pub fn integrate_over_unstable(
    cx: &CellComplex,
    mf: &dyn MorseFunction,
    md: &MorseData,
    omega: &Cochain,
    x: usize,
    twist: Option<(&[f64], f64)>,
    opts: &ShootOptions,
) -> Result<f64> {
    let q = md.critical_points[x].index;
    if omega.degree != q || omega.values.len() != cx.count(q) {
        return Err(Error::InvalidArgument(format!("cochain of degree {} does not match index {q}", omega.degree)));
    }
    let chain = unstable_chain(cx, mf, md, x, opts)?;
    Ok(chain
        .iter()
        .map(|&(c, v)| {
            let w = twist.map_or(1.0, |(f, t)| (t * f[c]).exp());
            v * w * omega.values[c]
        })
        .sum())
}

fn check_manifold(cx: &CellComplex, m: &Manifold) -> Result<()> {
    let ok = match m {
        Manifold::Torus { periods } => {
            cx.topology == Topology::Torus && periods.len() == cx.dimension && periods.iter().zip(&cx.periods).all(|(a, b)| (a - b).abs() <= 1e-12 * b)
        }
        Manifold::Sphere => cx.topology == Topology::Sphere,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument("mesh does not discretize the function's manifold".into()))
    }
}

fn nearest_vertex(cx: &CellComplex, p: &[f64]) -> usize {
    match cx.topology {
        Topology::Torus => {
            let multi: Vec<i64> = (0..cx.dimension).map(|i| (p[i] * cx.resolution as f64 / cx.periods[i]).round() as i64).collect();
            cx.torus_vertex(&multi)
        }
        Topology::Sphere => (0..cx.count(0))
            .min_by(|&a, &b| {
                let da: f64 = cx.barycenters[0][a].iter().zip(p).map(|(u, v)| (u - v) * (u - v)).sum();
                let db: f64 = cx.barycenters[0][b].iter().zip(p).map(|(u, v)| (u - v) * (u - v)).sum();
                da.total_cmp(&db)
            })
            .unwrap(),
    }
}

fn grid_index(v: f64, h: f64, what: &str) -> Result<i64> {
    let r = v / h;
    if (r - r.round()).abs() > ALIGN_TOL * (1.0 + r.abs()) {
        return Err(Error::InvalidArgument(format!("{what} at {v} is not aligned with the mesh (spacing {h}); unstable cell not representable")));
    }
    Ok(r.round() as i64)
}

/// Forward flow from `x ± r v` returning the capture point unwrapped to the trajectory's sheet.
fn separatrix(mf: &dyn MorseFunction, md: &MorseData, x: usize, v: &[f64], side: f64, opts: &ShootOptions) -> Result<(Vec<Vec<f64>>, usize, Vec<f64>)> {
    let man = mf.manifold();
    let cp = &md.critical_points[x];
    let r = opts.flow.shoot_radius(man);
    let start: Vec<f64> = cp.location.iter().zip(v).map(|(a, b)| a + side * r * b).collect();
    let tr = integrate_flow(mf, &md.critical_points, &start, 1.0, &opts.flow)?;
    let last = tr.points.last().unwrap().clone();
    let lim = &md.critical_points[tr.limit].location;
    let end: Vec<f64> = last.iter().zip(man.displacement(&last, lim)).map(|(a, d)| a + d).collect();
    Ok((tr.points, tr.limit, end))
}

/// Grid-aligned product of one-dimensional unstable intervals.
fn product_cell(cx: &CellComplex, mf: &dyn MorseFunction, md: &MorseData, x: usize, opts: &ShootOptions) -> Result<Vec<(usize, f64)>> {
    let cp = &md.critical_points[x];
    let (n, q) = (cx.dimension, cp.index);
    let h: Vec<f64> = cx.periods.iter().map(|p| p / cx.resolution as f64).collect();
    let mut axes = Vec::with_capacity(q);
    let mut ranges = vec![(0i64, 0i64); n];
    for j in 0..q {
        let col = cp.frame_column(j);
        let axis = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs())).unwrap();
        if (col[axis].abs() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("separable function with non-axial unstable direction".into()));
        }
        let mut e = vec![0.0; n];
        e[axis] = 1.0;
        let (_, _, a) = separatrix(mf, md, x, &e, 1.0, opts)?;
        let (_, _, b) = separatrix(mf, md, x, &e, -1.0, opts)?;
        let (lo, hi) = if a[axis] < b[axis] { (a[axis], b[axis]) } else { (b[axis], a[axis]) };
        ranges[axis] = (grid_index(lo, h[axis], "unstable interval end")?, grid_index(hi, h[axis], "unstable interval end")?);
        axes.push(axis);
    }
    for i in 0..n {
        if !axes.contains(&i) {
            let g = grid_index(cp.location[i], h[i], "critical coordinate")?;
            ranges[i] = (g, g + 1);
        }
    }
    let mut sorted = axes.clone();
    sorted.sort_unstable();
    let minor = dense::determinant(faer::Mat::from_fn(q, q, |i, j| cp.frame[(sorted[i], j)]).as_ref());
    let sign = minor.signum();
    let mask: u8 = axes.iter().fold(0, |m, a| m | (1 << a));
    let mut out = Vec::new();
    let mut multi: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        out.push((cx.torus_cell(mask, cx.torus_vertex(&multi)), sign));
        let mut i = 0;
        loop {
            if i == n {
                return Ok(out);
            }
            multi[i] += 1;
            if multi[i] < ranges[i].1 {
                break;
            }
            multi[i] = ranges[i].0;
            i += 1;
        }
    }
}

/// Basin of every top cell under the ascending flow from its barycentre.
fn basin_labels(cx: &CellComplex, mf: &dyn MorseFunction, md: &MorseData, opts: &ShootOptions) -> Result<Vec<usize>> {
    let n = cx.dimension;
    let labels: Vec<usize> = cx.barycenters[n]
        .iter()
        .map(|b| {
            let mut p = b.clone();
            mf.manifold().retract(&mut p);
            Ok(integrate_flow(mf, &md.critical_points, &p, -1.0, &opts.flow)?.limit)
        })
        .collect::<Result<_>>()?;
    if let Some(&bad) = labels.iter().find(|&&l| md.critical_points[l].index != n) {
        return Err(Error::Numeric(format!("ascending flow from a top cell ended at a point of index {}", md.critical_points[bad].index)));
    }
    let orient: Vec<f64> = (0..cx.count(n)).map(|c| top_orientation(cx, c)).collect();
    if orient.iter().any(|o| *o < 0.0) {
        return Err(Error::Invariant("top cells are not positively oriented".into()));
    }
    Ok(labels)
}

fn top_orientation(cx: &CellComplex, c: usize) -> f64 {
    match &cx.cells[cx.dimension][c] {
        CellShape::Cube { .. } => 1.0,
        CellShape::Simplex(_) => {
            let (edges, _) = cx.cell_span(cx.dimension, c);
            Manifold::Sphere.orientation(&cx.barycenters[cx.dimension][c], &edges)
        }
    }
}

/// Whitney pairing functional of the separatrix polyline through an index-1 point.
fn separatrix_chain(cx: &CellComplex, mf: &dyn MorseFunction, md: &MorseData, x: usize, opts: &ShootOptions) -> Result<Vec<(usize, f64)>> {
    let cp = &md.critical_points[x];
    let u = cp.frame_column(0);
    let (plus, _, end_plus) = separatrix(mf, md, x, &u, 1.0, opts)?;
    let (minus, _, end_minus) = separatrix(mf, md, x, &u, -1.0, opts)?;
    let mut path = vec![end_minus];
    path.extend(minus.into_iter().rev());
    path.push(cp.location.clone());
    path.extend(plus);
    path.push(end_plus);
    let mut acc = std::collections::BTreeMap::new();
    for w in path.windows(2) {
        whitney_segment(cx, &w[0], &w[1], &mut acc);
    }
    Ok(acc.into_iter().filter(|(_, v)| *v != 0.0).collect())
}

/// Adds the coefficients of `∫_{[a,b]} W(ω)` for the Whitney 1-form interpolant on a cubical torus.
fn whitney_segment(cx: &CellComplex, a: &[f64], b: &[f64], acc: &mut std::collections::BTreeMap<usize, f64>) {
    let n = cx.dimension;
    let h: Vec<f64> = cx.periods.iter().map(|p| p / cx.resolution as f64).collect();
    let d: Vec<f64> = (0..n).map(|i| b[i] - a[i]).collect();
    // split at cell faces so the integrand is polynomial on each piece
    let mut cuts = vec![0.0, 1.0];
    for i in 0..n {
        if d[i] == 0.0 {
            continue;
        }
        let (u0, u1) = (a[i] / h[i], b[i] / h[i]);
        let (lo, hi) = (u0.min(u1).ceil() as i64, u0.max(u1).floor() as i64);
        for g in lo..=hi {
            let s = (g as f64 - u0) / (u1 - u0);
            if s > 0.0 && s < 1.0 {
                cuts.push(s);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        for g in gauss {
            let s = w[0] + g * len;
            let p: Vec<f64> = (0..n).map(|i| a[i] + s * d[i]).collect();
            let u: Vec<f64> = (0..n).map(|i| p[i] / h[i]).collect();
            let base: Vec<i64> = u.iter().map(|v| v.floor() as i64).collect();
            for axis in 0..n {
                if d[axis] == 0.0 {
                    continue;
                }
                let others: Vec<usize> = (0..n).filter(|&j| j != axis).collect();
                for corner in 0..(1usize << others.len()) {
                    let mut multi = base.clone();
                    let mut wgt = 0.5 * len * d[axis] / h[axis];
                    for (bit, &j) in others.iter().enumerate() {
                        let frac = u[j] - base[j] as f64;
                        if corner & (1 << bit) != 0 {
                            multi[j] += 1;
                            wgt *= frac;
                        } else {
                            wgt *= 1.0 - frac;
                        }
                    }
                    let id = cx.torus_cell(1 << axis, cx.torus_vertex(&multi));
                    *acc.entry(id).or_insert(0.0) += wgt;
                }
            }
        }
    }
}
