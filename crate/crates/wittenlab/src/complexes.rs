//! Oriented cell complexes of closed manifolds and finite inner-product cochain complexes.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dense, Csr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Sphere,
}

/// Orientation data of a single cell.
#[derive(Clone, Debug, PartialEq)]
pub enum CellShape {
    /// Cube spanned from vertex `base` along the axes in `dirs` (bit mask), oriented lexicographically.
    Cube { base: usize, dirs: u8 },
    /// Simplex with ordered vertices.
    Simplex(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct CellComplex {
    pub dimension: usize,
    pub topology: Topology,
    /// Cells per axis (torus) or subdivision level (sphere).
    pub resolution: usize,
    pub periods: Vec<f64>,
    pub cells: Vec<Vec<CellShape>>,
    /// Barycenters in covering-space coordinates (torus) or on the unit sphere in R³.
    pub barycenters: Vec<Vec<Vec<f64>>>,
    /// `coboundary[q]` has shape `#cells_{q+1} × #cells_q`.
    pub coboundary: Vec<Csr<i64>>,
    pub primal_volume: Vec<Vec<f64>>,
    pub dual_volume: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexDescription {
    pub dimension: usize,
    pub topology: Topology,
    pub resolution: usize,
    pub periods: Vec<f64>,
    pub cell_counts: Vec<usize>,
}

/// Axis subsets of size `q` of `{0..n-1}` as bit masks, in lexicographic order of sorted tuples.
pub fn axis_subsets(n: usize, q: usize) -> Vec<u8> {
    fn rec(start: usize, n: usize, left: usize, cur: u8, out: &mut Vec<u8>) {
        if left == 0 {
            out.push(cur);
            return;
        }
        for i in start..n {
            rec(i + 1, n, left - 1, cur | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, q, 0, &mut out);
    out
}

pub fn mask_axes(mask: u8) -> Vec<usize> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

impl CellComplex {
    pub fn count(&self, q: usize) -> usize {
        self.cells[q].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        (0..=self.dimension).map(|q| self.count(q)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts().iter().enumerate().map(|(q, &c)| if q % 2 == 0 { c as i64 } else { -(c as i64) }).sum()
    }

    pub fn describe(&self) -> ComplexDescription {
        ComplexDescription {
            dimension: self.dimension,
            topology: self.topology,
            resolution: self.resolution,
            periods: self.periods.clone(),
            cell_counts: self.counts(),
        }
    }

    /// Grid spacing (torus: largest period/resolution; sphere: longest edge).
    pub fn mesh_size(&self) -> f64 {
        match self.topology {
            Topology::Torus => self.periods.iter().fold(0.0, |m: f64, p| m.max(p / self.resolution as f64)),
            Topology::Sphere => self.primal_volume[1].iter().fold(0.0, |m: f64, &l| m.max(l)),
        }
    }

    pub fn total_volume(&self) -> f64 {
        let n = self.dimension;
        self.primal_volume[n].iter().sum()
    }

    /// Max-norm of every `D^{q+1} D^q`, computed in integer arithmetic.
    pub fn nilpotency_defect(&self) -> i64 {
        (0..self.dimension.saturating_sub(1))
            .map(|q| {
                let p = self.coboundary[q + 1].matmul(&self.coboundary[q]);
                p.values.iter().map(|v| v.abs()).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Linear vertex index of a torus multi-index (wrapped).
    pub fn torus_vertex(&self, multi: &[i64]) -> usize {
        let n = self.resolution as i64;
        let mut lin = 0usize;
        for &m in multi.iter().rev() {
            lin = lin * self.resolution + m.rem_euclid(n) as usize;
        }
        lin
    }

    pub fn torus_multi(&self, lin: usize) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.dimension);
        let mut r = lin;
        for _ in 0..self.dimension {
            out.push((r % self.resolution) as i64);
            r /= self.resolution;
        }
        out
    }

    /// Cell id of the torus cube `(base vertex, axis mask)` of degree `popcount(mask)`.
    pub fn torus_cell(&self, mask: u8, base: usize) -> usize {
        let q = mask.count_ones() as usize;
        let subsets = axis_subsets(self.dimension, q);
        let s = subsets.iter().position(|&m| m == mask).expect("valid mask");
        s * self.resolution.pow(self.dimension as u32) + base
    }

    /// Oriented edge vectors of a cell and the factor turning `det(Eᵀ·edges)` into `∫_cell` of a constant form.
    pub fn cell_span(&self, q: usize, id: usize) -> (Vec<Vec<f64>>, f64) {
        match &self.cells[q][id] {
            CellShape::Cube { dirs, .. } => {
                let edges = mask_axes(*dirs)
                    .into_iter()
                    .map(|s| {
                        let mut e = vec![0.0; self.dimension];
                        e[s] = self.periods[s] / self.resolution as f64;
                        e
                    })
                    .collect();
                (edges, 1.0)
            }
            CellShape::Simplex(vs) => {
                let p0 = &self.barycenters[0][vs[0]];
                let edges = vs[1..].iter().map(|&v| self.barycenters[0][v].iter().zip(p0).map(|(a, b)| a - b).collect()).collect();
                (edges, 1.0 / (1..=q).product::<usize>() as f64)
            }
        }
    }

    /// Integral cycle basis in degree `q`: coordinate subtori (torus) or the fundamental class (sphere).
    pub fn integral_cycle_basis(&self, q: usize) -> Vec<Vec<f64>> {
        let n = self.dimension;
        match self.topology {
            Topology::Torus => axis_subsets(n, q)
                .into_iter()
                .map(|mask| {
                    let mut chain = vec![0.0; self.count(q)];
                    for (id, cell) in self.cells[q].iter().enumerate() {
                        if let CellShape::Cube { base, dirs } = cell {
                            if *dirs == mask {
                                let m = self.torus_multi(*base);
                                if (0..n).all(|j| mask & (1 << j) != 0 || m[j] == 0) {
                                    chain[id] = 1.0;
                                }
                            }
                        }
                    }
                    chain
                })
                .collect(),
            Topology::Sphere => match q {
                0 => {
                    let mut c = vec![0.0; self.count(0)];
                    c[0] = 1.0;
                    vec![c]
                }
                2 => vec![vec![1.0; self.count(2)]],
                _ => vec![],
            },
        }
    }
}

/// Cubical complex of the flat torus `R^n / (periods · Z^n)`.
pub fn build_torus_grid(n: usize, resolution: usize, periods: &[f64]) -> Result<CellComplex> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument(format!("torus dimension {n} not in 1..3")));
    }
    if resolution < 4 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} < 4 gives degenerate stencils")));
    }
    if periods.len() != n || periods.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument(format!("periods {periods:?} must be {n} positive numbers")));
    }
    let nv = resolution.pow(n as u32);
    let h: Vec<f64> = periods.iter().map(|p| p / resolution as f64).collect();
    let mut cx = CellComplex {
        dimension: n,
        topology: Topology::Torus,
        resolution,
        periods: periods.to_vec(),
        cells: vec![],
        barycenters: vec![],
        coboundary: vec![],
        primal_volume: vec![],
        dual_volume: vec![],
    };
    for q in 0..=n {
        let mut cells = Vec::new();
        let mut bary = Vec::new();
        let mut prim = Vec::new();
        let mut dual = Vec::new();
        for mask in axis_subsets(n, q) {
            for v in 0..nv {
                cells.push(CellShape::Cube { base: v, dirs: mask });
                let m = cx.torus_multi(v);
                bary.push(
                    (0..n)
                        .map(|i| (m[i] as f64 + if mask & (1 << i) != 0 { 0.5 } else { 0.0 }) * h[i])
                        .collect(),
                );
                prim.push((0..n).filter(|i| mask & (1 << i) != 0).map(|i| h[i]).product());
                dual.push((0..n).filter(|i| mask & (1 << i) == 0).map(|i| h[i]).product());
            }
        }
        cx.cells.push(cells);
        cx.barycenters.push(bary);
        cx.primal_volume.push(prim);
        cx.dual_volume.push(dual);
    }
    for q in 0..n {
        let mut trip = Vec::new();
        for (row, cell) in cx.cells[q + 1].iter().enumerate() {
            let CellShape::Cube { base, dirs } = *cell else { unreachable!() };
            let m = cx.torus_multi(base);
            for (p, &s) in mask_axes(dirs).iter().enumerate() {
                let face = dirs & !(1 << s);
                let sign = if p % 2 == 0 { 1 } else { -1 };
                let mut shifted = m.clone();
                shifted[s] += 1;
                trip.push((row, cx.torus_cell(face, cx.torus_vertex(&shifted)), sign));
                trip.push((row, cx.torus_cell(face, base), -sign));
            }
        }
        cx.coboundary.push(Csr::from_triplets(cx.count(q + 1), cx.count(q), &trip));
    }
    Ok(cx)
}

/// Icosahedral triangulation of the unit sphere, refined by 1-to-4 splits.
pub fn build_icosphere(subdivisions: usize) -> Result<CellComplex> {
    if subdivisions > 6 {
        return Err(Error::InvalidArgument(format!("subdivisions {subdivisions} not in 0..6")));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = Vec::new();
    for &a in &[-1.0, 1.0] {
        for &b in &[-phi, phi] {
            verts.push([0.0, a, b]);
            verts.push([a, b, 0.0]);
            verts.push([b, 0.0, a]);
        }
    }
    for v in verts.iter_mut() {
        *v = normalize3(*v);
    }
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let edge = (0..12).flat_map(|j| (0..12).map(move |k| (j, k))).filter(|(j, k)| j != k);
    let lmin = edge.map(|(j, k)| dist3(verts[j], verts[k])).fold(f64::INFINITY, f64::min);
    let near = |a: [f64; 3], b: [f64; 3]| (dist3(a, b) - lmin).abs() < 1e-9;
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if near(verts[a], verts[b]) && near(verts[b], verts[c]) && near(verts[a], verts[c]) {
                    faces.push(orient_outward(&verts, [a, b, c]));
                }
            }
        }
    }
    for _ in 0..subdivisions {
        let mut cache = std::collections::BTreeMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let mut edges: Vec<[usize; 2]> = faces
        .iter()
        .flat_map(|f| [[f[0], f[1]], [f[1], f[2]], [f[2], f[0]]])
        .map(|[a, b]| [a.min(b), a.max(b)])
        .collect();
    edges.sort();
    edges.dedup();
    let edge_id: std::collections::HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();

    let nv = verts.len();
    let (ne, nf) = (edges.len(), faces.len());
    let mut d0 = Vec::with_capacity(2 * ne);
    for (i, e) in edges.iter().enumerate() {
        d0.push((i, e[1], 1i64));
        d0.push((i, e[0], -1i64));
    }
    let mut d1 = Vec::with_capacity(3 * nf);
    for (i, f) in faces.iter().enumerate() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            let id = edge_id[&[a.min(b), a.max(b)]];
            d1.push((i, id, if a < b { 1i64 } else { -1 }));
        }
    }

    // Circumcentric duals via cotangent formulas on flat triangles.
    let mut vert_dual = vec![0.0; nv];
    let mut edge_dual = vec![0.0; ne];
    let mut areas = vec![0.0; nf];
    for (fi, f) in faces.iter().enumerate() {
        let p = [verts[f[0]], verts[f[1]], verts[f[2]]];
        areas[fi] = 0.5 * norm3(cross3(sub3(p[1], p[0]), sub3(p[2], p[0])));
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            // angle at vertex k, opposite edge (i, j)
            let u = sub3(p[i], p[k]);
            let w = sub3(p[j], p[k]);
            let cot = dot3(u, w) / norm3(cross3(u, w));
            let len2 = dot3(sub3(p[i], p[j]), sub3(p[i], p[j]));
            let eid = edge_id[&[f[i].min(f[j]), f[i].max(f[j])]];
            edge_dual[eid] += 0.5 * len2.sqrt() * cot;
            vert_dual[f[i]] += len2 * cot / 8.0;
            vert_dual[f[j]] += len2 * cot / 8.0;
        }
    }
    let edge_len: Vec<f64> = edges.iter().map(|e| dist3(verts[e[0]], verts[e[1]])).collect();

    let cx = CellComplex {
        dimension: 2,
        topology: Topology::Sphere,
        resolution: subdivisions,
        periods: vec![],
        cells: vec![
            (0..nv).map(|v| CellShape::Simplex(vec![v])).collect(),
            edges.iter().map(|e| CellShape::Simplex(e.to_vec())).collect(),
            faces.iter().map(|f| CellShape::Simplex(f.to_vec())).collect(),
        ],
        barycenters: vec![
            verts.iter().map(|v| v.to_vec()).collect(),
            edges
                .iter()
                .map(|e| normalize3(add3(verts[e[0]], verts[e[1]])).to_vec())
                .collect(),
            faces
                .iter()
                .map(|f| normalize3(add3(add3(verts[f[0]], verts[f[1]]), verts[f[2]])).to_vec())
                .collect(),
        ],
        coboundary: vec![Csr::from_triplets(ne, nv, &d0), Csr::from_triplets(nf, ne, &d1)],
        primal_volume: vec![vec![1.0; nv], edge_len, areas],
        dual_volume: vec![vert_dual, edge_dual, vec![1.0; nf]],
    };
    Ok(cx)
}

fn orient_outward(verts: &[[f64; 3]], f: [usize; 3]) -> [usize; 3] {
    let n = cross3(sub3(verts[f[1]], verts[f[0]]), sub3(verts[f[2]], verts[f[0]]));
    if dot3(n, verts[f[0]]) > 0.0 {
        f
    } else {
        [f[0], f[2], f[1]]
    }
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3(sub3(a, b))
}
fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let r = norm3(a);
    [a[0] / r, a[1] / r, a[2] / r]
}

/// Diagonal Hodge-star masses `M^q = |dual cell| / |primal cell|`.
pub fn hodge_inner_products(cx: &CellComplex) -> Result<Vec<Vec<f64>>> {
    (0..=cx.dimension)
        .map(|q| {
            cx.primal_volume[q]
                .iter()
                .zip(&cx.dual_volume[q])
                .enumerate()
                .map(|(i, (&p, &d))| {
                    if d > 0.0 && p > 0.0 {
                        Ok(d / p)
                    } else {
                        Err(Error::InvalidArgument(format!(
                            "non-positive volume at cell {i} of degree {q} (primal {p:e}, dual {d:e})"
                        )))
                    }
                })
                .collect()
        })
        .collect()
}

/// Per-degree inner product.
#[derive(Clone, Debug)]
pub enum InnerProduct {
    Diagonal(Vec<f64>),
    Dense(Mat<f64>),
}

impl InnerProduct {
    pub fn dim(&self) -> usize {
        match self {
            InnerProduct::Diagonal(d) => d.len(),
            InnerProduct::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            InnerProduct::Diagonal(d) => x.iter().zip(d).map(|(a, b)| a * b).collect(),
            InnerProduct::Dense(m) => (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect(),
        }
    }

    pub fn solve(&self, x: &[f64]) -> Vec<f64> {
        match self {
            InnerProduct::Diagonal(d) => x.iter().zip(d).map(|(a, b)| a / b).collect(),
            InnerProduct::Dense(m) => {
                let inv = dense::inverse(m.as_ref());
                (0..inv.nrows()).map(|i| (0..inv.ncols()).map(|j| inv[(i, j)] * x[j]).sum()).collect()
            }
        }
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        dense::dot(&self.apply(a), b)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            InnerProduct::Diagonal(d) => Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 }),
            InnerProduct::Dense(m) => m.clone(),
        }
    }

    /// Factor `F` with `M = F Fᵀ`: diagonal square roots or the lower Cholesky factor.
    fn factor(&self) -> Result<Factor> {
        match self {
            InnerProduct::Diagonal(d) => Ok(Factor::Diagonal(d.iter().map(|x| x.sqrt()).collect())),
            InnerProduct::Dense(m) => {
                let l = dense::cholesky(m.as_ref())?;
                let linv = dense::inverse(l.as_ref());
                Ok(Factor::Dense { l, linv })
            }
        }
    }
}

enum Factor {
    Diagonal(Vec<f64>),
    Dense { l: Mat<f64>, linv: Mat<f64> },
}

/// Finite cochain complex `C^0 → C^1 → … → C^n` with inner products.
#[derive(Clone, Debug)]
pub struct InnerProductComplex {
    pub inner: Vec<InnerProduct>,
    /// `diff[q]: C^q → C^{q+1}`.
    pub diff: Vec<Csr<f64>>,
}

/// A degree-tagged coefficient vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub values: Vec<f64>,
}

impl InnerProductComplex {
    pub fn new(inner: Vec<InnerProduct>, diff: Vec<Csr<f64>>) -> Result<Self> {
        if inner.len() != diff.len() + 1 {
            return Err(Error::InvalidArgument("need one more inner product than differentials".into()));
        }
        for (q, d) in diff.iter().enumerate() {
            if d.ncols != inner[q].dim() || d.nrows != inner[q + 1].dim() {
                return Err(Error::InvalidArgument(format!("differential {q} has shape {}x{}", d.nrows, d.ncols)));
            }
        }
        Ok(InnerProductComplex { inner, diff })
    }

    pub fn from_cell_complex(cx: &CellComplex) -> Result<Self> {
        let m = hodge_inner_products(cx)?;
        InnerProductComplex::new(
            m.into_iter().map(InnerProduct::Diagonal).collect(),
            cx.coboundary.iter().map(|d| d.to_f64()).collect(),
        )
    }

    /// Top degree `n`.
    pub fn top(&self) -> usize {
        self.diff.len()
    }

    pub fn dim(&self, q: usize) -> usize {
        self.inner[q].dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        (0..=self.top()).map(|q| self.dim(q)).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.dims().iter().enumerate().map(|(q, &c)| if q % 2 == 0 { c as i64 } else { -(c as i64) }).sum()
    }

    pub fn d(&self, q: usize, x: &[f64]) -> Vec<f64> {
        if q < self.top() {
            self.diff[q].matvec(x)
        } else {
            vec![]
        }
    }

    /// `δ^q = (M^{q-1})^{-1} (d^{q-1})ᵀ M^q`, mapping degree `q` to `q-1`.
    pub fn delta(&self, q: usize, x: &[f64]) -> Vec<f64> {
        if q == 0 {
            return vec![];
        }
        self.inner[q - 1].solve(&self.diff[q - 1].matvec_t(&self.inner[q].apply(x)))
    }

    pub fn adjoint_differential(&self, q: usize) -> Result<Csr<f64>> {
        if q == 0 || q > self.top() {
            return Err(Error::InvalidArgument(format!("adjoint differential needs 1 <= q <= {}", self.top())));
        }
        let dt = self.diff[q - 1].transpose();
        Ok(match (&self.inner[q - 1], &self.inner[q]) {
            (InnerProduct::Diagonal(a), InnerProduct::Diagonal(b)) => {
                let ainv: Vec<f64> = a.iter().map(|x| 1.0 / x).collect();
                dt.scale(&ainv, b)
            }
            (a, b) => {
                let m = &(&dense::inverse(a.to_dense().as_ref()) * &dt.to_dense()) * &b.to_dense();
                Csr::from_dense(m.as_ref())
            }
        })
    }

    pub fn laplacian_apply(&self, q: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        if q < self.top() {
            let up = self.delta(q + 1, &self.d(q, x));
            out.iter_mut().zip(up).for_each(|(o, u)| *o += u);
        }
        if q > 0 {
            let down = self.d(q - 1, &self.delta(q, x));
            out.iter_mut().zip(down).for_each(|(o, u)| *o += u);
        }
        out
    }

    /// `Δ^q = δ^{q+1} d^q + d^{q-1} δ^q` as an explicit matrix.
    pub fn laplacian(&self, q: usize) -> Result<Csr<f64>> {
        let n = self.dim(q);
        let mut acc = Csr::zeros(n, n);
        let mut parts = Vec::new();
        if q < self.top() {
            parts.push(self.adjoint_differential(q + 1)?.matmul(&self.diff[q]));
        }
        if q > 0 {
            parts.push(self.diff[q - 1].matmul(&self.adjoint_differential(q)?));
        }
        for p in parts {
            let mut t = acc.triplets();
            t.extend(p.triplets());
            acc = Csr::from_triplets(n, n, &t);
        }
        Ok(acc)
    }

    /// `F_{q+1}ᵀ d^q F_q⁻ᵀ`: the differential out of degree `q` in symmetric frames (`M = FFᵀ`).
    pub fn up_block(&self, q: usize) -> Result<Option<Csr<f64>>> {
        if q >= self.top() {
            return Ok(None);
        }
        Ok(Some(conjugate(&self.diff[q], &self.inner[q + 1].factor()?, &self.inner[q].factor()?)))
    }

    /// `F_qᵀ d^{q-1} F_{q-1}⁻ᵀ`: the differential into degree `q` in symmetric frames.
    pub fn down_block(&self, q: usize) -> Result<Option<Csr<f64>>> {
        if q == 0 {
            return Ok(None);
        }
        Ok(Some(conjugate(&self.diff[q - 1], &self.inner[q].factor()?, &self.inner[q - 1].factor()?)))
    }

    /// Factored form of `Δ^q` in the symmetric frame `x̃ = Fᵀx`: `F⁻¹ M Δ F⁻ᵀ = GᵀG` with `G = [up; downᵀ]`.
    pub fn symmetric_factor(&self, q: usize) -> Result<SymmetricFactor> {
        let mut blocks = Vec::new();
        if let Some(b) = self.up_block(q)? {
            blocks.push(b);
        }
        if let Some(a) = self.down_block(q)? {
            blocks.push(a.transpose());
        }
        let n = self.dim(q);
        let g = if blocks.is_empty() { Csr::zeros(0, n) } else { Csr::vstack(&blocks.iter().collect::<Vec<_>>()) };
        Ok(SymmetricFactor { g, back: self.inner[q].factor()? })
    }

    /// `Fᵀ x` for the factor of `M^q`.
    pub fn to_frame(&self, q: usize, x: &[f64]) -> Result<Vec<f64>> {
        Ok(match self.inner[q].factor()? {
            Factor::Diagonal(s) => x.iter().zip(&s).map(|(a, b)| a * b).collect(),
            Factor::Dense { l, .. } => (0..l.ncols()).map(|i| (0..l.nrows()).map(|k| l[(k, i)] * x[k]).sum()).collect(),
        })
    }

    /// `F⁻ᵀ x̃` for the factor of `M^q`.
    pub fn from_frame(&self, q: usize, v: &[f64]) -> Result<Vec<f64>> {
        Ok(SymmetricFactor { g: Csr::zeros(0, 0), back: self.inner[q].factor()? }.to_cochain(v))
    }

    /// Max over degrees of `‖d^{q+1} d^q‖_max` in floating point.
    pub fn nilpotency_defect(&self) -> f64 {
        (0..self.top().saturating_sub(1))
            .map(|q| self.diff[q + 1].matmul(&self.diff[q]).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        for (q, m) in self.inner.iter().enumerate() {
            let lo = match m {
                InnerProduct::Diagonal(d) => d.iter().cloned().fold(f64::INFINITY, f64::min),
                InnerProduct::Dense(m) => dense::sym_eigen(m.as_ref())?.0.first().copied().unwrap_or(1.0),
            };
            if !(lo > 0.0) {
                return Err(Error::Invariant(format!("inner product in degree {q} not positive definite")));
            }
        }
        for q in 0..self.top().saturating_sub(1) {
            let bound = 1e-12 * dense::spectral_norm(self.diff[q + 1].to_dense().as_ref())? * dense::spectral_norm(self.diff[q].to_dense().as_ref())?;
            let defect = self.diff[q + 1].matmul(&self.diff[q]).max_abs();
            if defect > bound {
                return Err(Error::Invariant(format!("d∘d = {defect:e} in degree {q}")));
            }
        }
        Ok(())
    }

    /// `M Δ^q − (M Δ^q)ᵀ` relative to `‖M Δ^q‖`.
    pub fn self_adjointness_defect(&self, q: usize) -> Result<f64> {
        let l = self.laplacian(q)?;
        let ml = match &self.inner[q] {
            InnerProduct::Diagonal(d) => l.scale(d, &vec![1.0; l.ncols]),
            InnerProduct::Dense(m) => Csr::from_dense((m * l.to_dense()).as_ref()),
        };
        let t = ml.transpose();
        let mut diff = ml.triplets();
        diff.extend(t.triplets().into_iter().map(|(r, c, v)| (r, c, -v)));
        let d = Csr::from_triplets(ml.nrows, ml.ncols, &diff);
        let scale = ml.max_abs();
        Ok(if scale == 0.0 { 0.0 } else { d.max_abs() / scale })
    }
}

/// `Fₗᵀ d Fᵣ⁻ᵀ` for factors of the target (`left`) and source (`right`) inner products.
fn conjugate(d: &Csr<f64>, left: &Factor, right: &Factor) -> Csr<f64> {
    match (left, right) {
        (Factor::Diagonal(a), Factor::Diagonal(b)) => {
            let binv: Vec<f64> = b.iter().map(|x| 1.0 / x).collect();
            d.scale(a, &binv)
        }
        _ => {
            let lt = match left {
                Factor::Diagonal(a) => Mat::from_fn(a.len(), a.len(), |i, j| if i == j { a[i] } else { 0.0 }),
                Factor::Dense { l, .. } => l.transpose().to_owned(),
            };
            let rinvt = match right {
                Factor::Diagonal(b) => Mat::from_fn(b.len(), b.len(), |i, j| if i == j { 1.0 / b[i] } else { 0.0 }),
                Factor::Dense { linv, .. } => linv.transpose().to_owned(),
            };
            Csr::from_dense((&(&lt * d.to_dense()) * &rinvt).as_ref())
        }
    }
}

pub struct SymmetricFactor {
    pub g: Csr<f64>,
    back: Factor,
}

impl SymmetricFactor {
    /// Maps a symmetric-frame vector `x̃` to the cochain `x = F⁻ᵀ x̃`.
    pub fn to_cochain(&self, v: &[f64]) -> Vec<f64> {
        match &self.back {
            Factor::Diagonal(s) => v.iter().zip(s).map(|(a, b)| a / b).collect(),
            Factor::Dense { linv, .. } => (0..linv.ncols()).map(|i| (0..linv.nrows()).map(|k| linv[(k, i)] * v[k]).sum()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_counts_and_cyclic_difference() {
        let cx = build_torus_grid(1, 8, &[1.0]).unwrap();
        assert_eq!(cx.counts(), vec![8, 8]);
        let d = cx.coboundary[0].to_dense_i64();
        for (i, row) in d.iter().enumerate() {
            assert_eq!(row[i], -1);
            assert_eq!(row[(i + 1) % 8], 1);
            assert_eq!(row.iter().map(|v| v.abs()).sum::<i64>(), 2);
        }
    }

    #[test]
    fn torus_counts_and_euler() {
        let cx = build_torus_grid(2, 4, &[1.0, 1.0]).unwrap();
        assert_eq!(cx.counts(), vec![16, 32, 16]);
        assert_eq!(cx.euler_characteristic(), 0);
        assert_eq!(cx.nilpotency_defect(), 0);
    }

    #[test]
    fn three_torus_nilpotent_and_faces() {
        let cx = build_torus_grid(3, 5, &[1.0, 2.0, 1.5]).unwrap();
        assert_eq!(cx.nilpotency_defect(), 0);
        for q in 0..3 {
            for r in 0..cx.count(q + 1) {
                assert_eq!(cx.coboundary[q].row(r).count(), 2 * (q + 1));
            }
        }
        for q in 0..=3 {
            for b in &cx.barycenters[q] {
                for (x, p) in b.iter().zip(&cx.periods) {
                    assert!(*x >= 0.0 && x < p);
                }
            }
        }
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(build_torus_grid(2, 3, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn icosphere_counts() {
        let s0 = build_icosphere(0).unwrap();
        assert_eq!(s0.counts(), vec![12, 30, 20]);
        let s1 = build_icosphere(1).unwrap();
        assert_eq!(s1.counts(), vec![42, 120, 80]);
        assert_eq!(s1.euler_characteristic(), 2);
        assert_eq!(s1.nilpotency_defect(), 0);
        assert!(build_icosphere(7).is_err());
    }

    #[test]
    fn icosphere_masses_positive() {
        let s = build_icosphere(2).unwrap();
        let m = hodge_inner_products(&s).unwrap();
        assert!(m.iter().flatten().all(|&x| x > 0.0));
        // dual areas tile the polyhedron
        let total: f64 = s.dual_volume[0].iter().sum();
        assert!((total - s.total_volume()).abs() < 1e-12);
    }

    #[test]
    fn unit_circle_masses() {
        let cx = build_torus_grid(1, 8, &[1.0]).unwrap();
        let m = hodge_inner_products(&cx).unwrap();
        assert!(m[0].iter().all(|&x| (x - 0.125).abs() < 1e-15));
        assert!(m[1].iter().all(|&x| (x - 8.0).abs() < 1e-12));
    }

    #[test]
    fn constant_function_has_unit_norm() {
        let cx = build_torus_grid(2, 6, &[1.0, 1.0]).unwrap();
        let ipc = InnerProductComplex::from_cell_complex(&cx).unwrap();
        let one = vec![1.0; cx.count(0)];
        assert!((ipc.inner[0].inner(&one, &one) - 1.0).abs() < 1e-12);
    }
}
