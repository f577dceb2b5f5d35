//! Test manifolds and the catalog of Morse functions.

use std::f64::consts::PI;
use std::fmt::Debug;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameterized test manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Manifold {
    /// Flat torus in covering coordinates.
    Torus { periods: Vec<f64> },
    /// Unit sphere S² embedded in R³.
    Sphere,
}

impl Manifold {
    pub fn dim(&self) -> usize {
        match self {
            Manifold::Torus { periods } => periods.len(),
            Manifold::Sphere => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Torus { periods } => periods.len(),
            Manifold::Sphere => 3,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Manifold::Torus { periods } => 0.5 * periods.iter().map(|p| p * p).sum::<f64>().sqrt(),
            Manifold::Sphere => PI,
        }
    }

    /// Shortest displacement from `a` to `b` (minimal image on the torus, chord on the sphere).
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match self {
            Manifold::Torus { periods } => a
                .iter()
                .zip(b)
                .zip(periods)
                .map(|((x, y), p)| {
                    let d = y - x;
                    d - p * (d / p).round()
                })
                .collect(),
            Manifold::Sphere => a.iter().zip(b).map(|(x, y)| y - x).collect(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let c = self.displacement(a, b).iter().map(|d| d * d).sum::<f64>().sqrt();
        match self {
            Manifold::Torus { .. } => c,
            Manifold::Sphere => 2.0 * (0.5 * c).min(1.0).asin(),
        }
    }

    /// Representative in the fundamental domain `[0, p)` (torus) or on the unit sphere.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Manifold::Torus { periods } => x
                .iter()
                .zip(periods)
                .map(|(v, p)| {
                    let w = v.rem_euclid(*p);
                    if p - w < 1e-9 * p || w < 1e-12 * p {
                        0.0
                    } else {
                        w
                    }
                })
                .collect(),
            Manifold::Sphere => normalized(x),
        }
    }

    /// Orthonormal basis of the tangent space at `x` as columns of an ambient × n matrix.
    pub fn tangent_basis(&self, x: &[f64]) -> Mat<f64> {
        match self {
            Manifold::Torus { periods } => Mat::identity(periods.len(), periods.len()),
            Manifold::Sphere => {
                let p = normalized(x);
                let k = (0..3).min_by(|&i, &j| p[i].abs().total_cmp(&p[j].abs())).unwrap();
                let mut e = [0.0; 3];
                e[k] = 1.0;
                let dot = p[k];
                let u = normalized(&[e[0] - dot * p[0], e[1] - dot * p[1], e[2] - dot * p[2]]);
                let v = cross(&p, &u);
                Mat::from_fn(3, 2, |i, j| if j == 0 { u[i] } else { v[i] })
            }
        }
    }

    /// Sign of the orientation of `n` tangent vectors at `x`.
    pub fn orientation(&self, x: &[f64], vectors: &[Vec<f64>]) -> f64 {
        let m = self.ambient_dim();
        let det = match self {
            Manifold::Torus { .. } => crate::linalg::dense::determinant(Mat::from_fn(m, m, |i, j| vectors[j][i]).as_ref()),
            Manifold::Sphere => {
                let p = normalized(x);
                crate::linalg::dense::determinant(Mat::from_fn(3, 3, |i, j| if j == 0 { p[i] } else { vectors[j - 1][i] }).as_ref())
            }
        };
        det.signum()
    }

    pub(crate) fn retract(&self, x: &mut [f64]) {
        if let Manifold::Sphere = self {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= r);
        }
    }
}

pub(crate) fn normalized(x: &[f64]) -> Vec<f64> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter().map(|v| v / r).collect()
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Smooth function with value, gradient and Hessian oracles in ambient coordinates.
///
/// On the sphere the oracles describe an extension to a neighbourhood in R³;
/// Riemannian quantities are obtained with [`riemannian_gradient`] and [`riemannian_hessian`].
pub trait MorseFunction: Send + Sync + Debug {
    fn manifold(&self) -> &Manifold;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hessian(&self, x: &[f64]) -> Mat<f64>;

    /// True when `f` is a sum of one-variable profiles in the torus coordinates.
    fn separable(&self) -> bool {
        false
    }
}

pub fn riemannian_gradient(mf: &dyn MorseFunction, x: &[f64]) -> Vec<f64> {
    let g = mf.gradient(x);
    match mf.manifold() {
        Manifold::Torus { .. } => g,
        Manifold::Sphere => {
            let p = normalized(x);
            let r: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
            g.iter().zip(&p).map(|(a, b)| a - r * b).collect()
        }
    }
}

/// Hessian in the tangent basis returned together with it.
pub fn riemannian_hessian(mf: &dyn MorseFunction, x: &[f64]) -> (Mat<f64>, Mat<f64>) {
    let m = mf.manifold();
    let b = m.tangent_basis(x);
    let mut h = mf.hessian(x);
    if let Manifold::Sphere = m {
        let p = normalized(x);
        let r: f64 = p.iter().zip(mf.gradient(x)).map(|(a, b)| a * b).sum();
        for i in 0..3 {
            h[(i, i)] -= r;
        }
    }
    let hb = &h * &b;
    let bt = b.transpose().to_owned();
    let mut out = &bt * &hb;
    let n = out.nrows();
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    (out, b)
}

/// `f(x) = Σ A_i cos(2π m_i x_i / p_i)` on the torus with periods `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCosine {
    pub manifold: Manifold,
    pub amplitudes: Vec<f64>,
    pub modes: Vec<u32>,
}

impl ProductCosine {
    pub fn new(periods: Vec<f64>, amplitudes: Vec<f64>, modes: Vec<u32>) -> Result<Self> {
        let n = periods.len();
        if amplitudes.len() != n || modes.len() != n {
            return Err(Error::InvalidArgument(format!("product cosine needs {n} amplitudes and modes")));
        }
        if amplitudes.iter().any(|a| *a == 0.0 || !a.is_finite()) || modes.contains(&0) {
            return Err(Error::InvalidArgument("product cosine amplitudes and modes must be nonzero".into()));
        }
        Ok(ProductCosine { manifold: Manifold::Torus { periods }, amplitudes, modes })
    }

    /// `(cos 4πx + cos 2πy)/(4π²)` on the unit 2-torus, with critical point counts (2, 4, 2).
    pub fn two_four_two() -> Self {
        let a = 1.0 / (4.0 * PI * PI);
        ProductCosine::new(vec![1.0, 1.0], vec![a, a], vec![2, 1]).unwrap()
    }

    /// `Σ cos(2πx_i)/(4π²)` on the unit n-torus (one critical point per vertex of {0, ½}^n).
    pub fn standard(n: usize) -> Self {
        let a = 1.0 / (4.0 * PI * PI);
        ProductCosine::new(vec![1.0; n], vec![a; n], vec![1; n]).unwrap()
    }

    fn periods(&self) -> &[f64] {
        match &self.manifold {
            Manifold::Torus { periods } => periods,
            Manifold::Sphere => unreachable!(),
        }
    }

    fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.modes[i] as f64 / self.periods()[i]
    }

    /// Critical points of the profile along each axis, sorted in `[0, p_i)`.
    pub fn axis_critical_points(&self, i: usize) -> Vec<f64> {
        let m = self.modes[i] as usize;
        (0..2 * m).map(|j| j as f64 * self.periods()[i] / (2 * m) as f64).collect()
    }
}

impl MorseFunction for ProductCosine {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..x.len()).map(|i| self.amplitudes[i] * (self.wavenumber(i) * x[i]).cos()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let k = self.wavenumber(i);
                -self.amplitudes[i] * k * (k * x[i]).sin()
            })
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> Mat<f64> {
        Mat::from_fn(x.len(), x.len(), |i, j| {
            if i == j {
                let k = self.wavenumber(i);
                -self.amplitudes[i] * k * k * (k * x[i]).cos()
            } else {
                0.0
            }
        })
    }

    fn separable(&self) -> bool {
        true
    }
}

/// Height `⟨a, x⟩` on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereHeight {
    pub axis: [f64; 3],
    #[serde(skip, default = "sphere")]
    manifold: Manifold,
}

fn sphere() -> Manifold {
    Manifold::Sphere
}

impl SphereHeight {
    pub fn new(axis: [f64; 3]) -> Result<Self> {
        if axis.iter().all(|a| *a == 0.0) {
            return Err(Error::InvalidArgument("height axis must be nonzero".into()));
        }
        Ok(SphereHeight { axis, manifold: Manifold::Sphere })
    }
}

impl MorseFunction for SphereHeight {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.axis.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    fn gradient(&self, _: &[f64]) -> Vec<f64> {
        self.axis.to_vec()
    }

    fn hessian(&self, _: &[f64]) -> Mat<f64> {
        Mat::zeros(3, 3)
    }
}

/// Constant function; every point is a degenerate critical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub manifold: Manifold,
    pub value: f64,
}

impl MorseFunction for Constant {
    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn value(&self, _: &[f64]) -> f64 {
        self.value
    }

    fn gradient(&self, _: &[f64]) -> Vec<f64> {
        vec![0.0; self.manifold.ambient_dim()]
    }

    fn hessian(&self, _: &[f64]) -> Mat<f64> {
        let m = self.manifold.ambient_dim();
        Mat::zeros(m, m)
    }

    fn separable(&self) -> bool {
        matches!(self.manifold, Manifold::Torus { .. })
    }
}

/// Product cosine replaced by its exact quadratic part inside balls around the
/// critical points, glued with a quintic smoothstep on `r ∈ [ρ/2, ρ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactChart {
    pub base: ProductCosine,
    pub radius: f64,
    #[serde(skip)]
    centers: Vec<Vec<f64>>,
}

impl ExactChart {
    pub fn new(base: ProductCosine, radius: f64) -> Result<Self> {
        let n = base.amplitudes.len();
        let axes: Vec<Vec<f64>> = (0..n).map(|i| base.axis_critical_points(i)).collect();
        let mut centers = vec![vec![]];
        for a in &axes {
            centers = centers.into_iter().flat_map(|c| a.iter().map(move |v| [c.clone(), vec![*v]].concat())).collect();
        }
        let spacing = (0..n).map(|i| axes[i].get(1).copied().unwrap_or(base.periods()[i])).fold(f64::INFINITY, f64::min);
        if !(radius > 0.0) || 2.0 * radius >= spacing {
            return Err(Error::InvalidArgument(format!("chart radius {radius} must lie in (0, {})", 0.5 * spacing)));
        }
        Ok(ExactChart { base, radius, centers })
    }

    fn blend(&self, r: f64) -> (f64, f64, f64) {
        let a = 0.5 * self.radius;
        if r <= a {
            return (1.0, 0.0, 0.0);
        }
        if r >= self.radius {
            return (0.0, 0.0, 0.0);
        }
        let s = (r - a) / a;
        let v = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let d = -30.0 * s * s * (1.0 - s) * (1.0 - s) / a;
        let dd = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (a * a);
        (v, d, dd)
    }

    /// Nearest centre within the chart radius and the displacement to it.
    fn chart(&self, x: &[f64]) -> Option<(&[f64], Vec<f64>)> {
        self.centers.iter().find_map(|c| {
            let d = self.base.manifold.displacement(c, x);
            (d.iter().map(|v| v * v).sum::<f64>().sqrt() < self.radius).then_some((c.as_slice(), d))
        })
    }

    fn quadratic(&self, c: &[f64], d: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let h = self.base.hessian(c);
        let hd: Vec<f64> = (0..d.len()).map(|i| h[(i, i)] * d[i]).collect();
        let v = self.base.value(c) + 0.5 * d.iter().zip(&hd).map(|(a, b)| a * b).sum::<f64>();
        (v, hd, (0..d.len()).map(|i| h[(i, i)]).collect())
    }
}

impl MorseFunction for ExactChart {
    fn manifold(&self) -> &Manifold {
        &self.base.manifold
    }

    fn value(&self, x: &[f64]) -> f64 {
        let b = self.base.value(x);
        match self.chart(x) {
            Some((c, d)) => {
                let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                let (chi, _, _) = self.blend(r);
                b + chi * (self.quadratic(c, &d).0 - b)
            }
            None => b,
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let gb = self.base.gradient(x);
        let Some((c, d)) = self.chart(x) else { return gb };
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (chi, dchi, _) = self.blend(r);
        let (q, gq, _) = self.quadratic(c, &d);
        let diff = q - self.base.value(x);
        (0..x.len())
            .map(|i| {
                let radial = if r > 0.0 { dchi * d[i] / r } else { 0.0 };
                gb[i] + chi * (gq[i] - gb[i]) + diff * radial
            })
            .collect()
    }

    fn hessian(&self, x: &[f64]) -> Mat<f64> {
        let hb = self.base.hessian(x);
        let Some((c, d)) = self.chart(x) else { return hb };
        let n = x.len();
        let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (chi, dchi, ddchi) = self.blend(r);
        let (q, gq, hq) = self.quadratic(c, &d);
        let gb = self.base.gradient(x);
        let diff = q - self.base.value(x);
        let u: Vec<f64> = if r > 0.0 { d.iter().map(|v| v / r).collect() } else { vec![0.0; n] };
        let h = Mat::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            let gchi_i = dchi * u[i];
            let gchi_j = dchi * u[j];
            let hchi = if r > 0.0 { ddchi * u[i] * u[j] + dchi / r * (delta - u[i] * u[j]) } else { 0.0 };
            hb[(i, j)] + chi * (delta * hq[i] - hb[(i, j)]) + gchi_i * (gq[j] - gb[j]) + (gq[i] - gb[i]) * gchi_j + diff * hchi
        });
        Mat::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]))
    }
}

/// Catalog entry selecting a Morse function by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    ProductCosine { periods: Vec<f64>, amplitudes: Vec<f64>, modes: Vec<u32> },
    SphereHeight { axis: [f64; 3] },
    Constant { manifold: Manifold, value: f64 },
    ExactChart { periods: Vec<f64>, amplitudes: Vec<f64>, modes: Vec<u32>, radius: f64 },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<Box<dyn MorseFunction>> {
        Ok(match self {
            FunctionSpec::ProductCosine { periods, amplitudes, modes } => {
                Box::new(ProductCosine::new(periods.clone(), amplitudes.clone(), modes.clone())?)
            }
            FunctionSpec::SphereHeight { axis } => Box::new(SphereHeight::new(*axis)?),
            FunctionSpec::Constant { manifold, value } => Box::new(Constant { manifold: manifold.clone(), value: *value }),
            FunctionSpec::ExactChart { periods, amplitudes, modes, radius } => {
                Box::new(ExactChart::new(ProductCosine::new(periods.clone(), amplitudes.clone(), modes.clone())?, *radius)?)
            }
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            FunctionSpec::ProductCosine { .. } => "product_cosine",
            FunctionSpec::SphereHeight { .. } => "sphere_height",
            FunctionSpec::Constant { .. } => "constant",
            FunctionSpec::ExactChart { .. } => "exact_chart",
        }
    }
}
