//! Adaptive Dormand–Prince integration of gradient flows.

use serde::Serialize;

use super::functions::{riemannian_gradient, riemannian_hessian, Manifold, MorseFunction};
use super::CriticalPoint;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowControls {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Fraction of the manifold diameter.
    pub capture_fraction: f64,
    pub shoot_fraction: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        FlowControls { rtol: 1e-10, atol: 1e-13, max_steps: 200_000, capture_fraction: 1e-4, shoot_fraction: 1e-3 }
    }
}

impl FlowControls {
    pub fn capture_radius(&self, m: &Manifold) -> f64 {
        self.capture_fraction * m.diameter()
    }

    pub fn shoot_radius(&self, m: &Manifold) -> f64 {
        self.shoot_fraction * m.diameter()
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates `y' = rhs(y)` with 5(4) error control. After every accepted step `observe` may
/// modify the state (projection) and returns `true` to stop. Returns the number of steps taken.
pub fn dopri5(
    y: &mut Vec<f64>,
    rhs: impl Fn(&[f64]) -> Vec<f64>,
    controls: &FlowControls,
    h0: f64,
    mut observe: impl FnMut(f64, &mut Vec<f64>) -> bool,
) -> Result<usize> {
    let m = y.len();
    let mut h = h0;
    let mut t = 0.0;
    let mut k: Vec<Vec<f64>> = vec![rhs(y); 1];
    let mut steps = 0;
    while steps < controls.max_steps {
        k.truncate(1);
        let mut tmp = vec![0.0; m];
        for s in 0..6 {
            for i in 0..m {
                tmp[i] = y[i] + h * (0..=s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k.push(rhs(&tmp));
        }
        // tmp now holds the 5th-order solution (FSAL row)
        let mut err = 0.0f64;
        for i in 0..m {
            let e = h * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
            let sc = controls.atol + controls.rtol * y[i].abs().max(tmp[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::Numeric("non-finite state in flow integration".into()));
        }
        if err <= 1.0 {
            t += h;
            steps += 1;
            *y = tmp;
            if observe(t, y) {
                return Ok(steps);
            }
            // the observer may have projected y
            k[0] = rhs(y);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 {
            return Err(Error::Numeric("step size underflow in flow integration".into()));
        }
    }
    Err(Error::Numeric(format!("flow step limit {} exceeded at state {:?}", controls.max_steps, y)))
}

/// Polyline of a gradient trajectory and the critical point it was captured by.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
    /// Index into the critical point list.
    pub limit: usize,
    /// Distance to the limit point at capture.
    pub final_distance: f64,
    pub steps: usize,
}

fn nearest(m: &Manifold, crits: &[CriticalPoint], x: &[f64]) -> (usize, f64) {
    crits
        .iter()
        .enumerate()
        .map(|(i, c)| (i, m.distance(&c.location, x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((usize::MAX, f64::INFINITY))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates `direction · (−grad f)` from `x0` until it enters the capture ball of a critical
/// point with `‖grad f‖` decreasing.
pub fn integrate_flow(mf: &dyn MorseFunction, crits: &[CriticalPoint], x0: &[f64], direction: f64, controls: &FlowControls) -> Result<Trajectory> {
    flow_with_variation(mf, crits, x0, &[], direction, controls).map(|(t, _)| t)
}

/// Like [`integrate_flow`], also transporting tangent vectors by the linearised flow
/// `J' = −direction · Hess f · J` (torus only).
pub fn flow_with_variation(
    mf: &dyn MorseFunction,
    crits: &[CriticalPoint],
    x0: &[f64],
    variations: &[Vec<f64>],
    direction: f64,
    controls: &FlowControls,
) -> Result<(Trajectory, Vec<Vec<f64>>)> {
    let man = mf.manifold();
    let n = x0.len();
    if !variations.is_empty() && !matches!(man, Manifold::Torus { .. }) {
        return Err(Error::InvalidArgument("variational transport needs a torus".into()));
    }
    let r_cap = controls.capture_radius(man);
    let rhs = |y: &[f64]| {
        let g = riemannian_gradient(mf, &y[..n]);
        let mut out: Vec<f64> = g.iter().map(|v| -direction * v).collect();
        if y.len() > n {
            let h = mf.hessian(&y[..n]);
            for blk in 0..(y.len() - n) / n {
                let j = &y[n + blk * n..n + (blk + 1) * n];
                for i in 0..n {
                    out.push(-direction * (0..n).map(|c| h[(i, c)] * j[c]).sum::<f64>());
                }
            }
        }
        out
    };
    let mut y: Vec<f64> = x0.to_vec();
    for v in variations {
        y.extend_from_slice(v);
    }
    let mut points = vec![x0.to_vec()];
    let mut gprev = norm(&riemannian_gradient(mf, x0));
    let (i0, _) = nearest(man, crits, x0);
    let mut left_start = false;
    let mut captured = None;
    let speed = gprev.max(1e-300);
    let h0 = (1e-3 * man.diameter() / speed).min(1.0);
    let steps = dopri5(&mut y, rhs, controls, h0, |_, y| {
        man.retract(&mut y[..n]);
        points.push(y[..n].to_vec());
        let g = norm(&riemannian_gradient(mf, &y[..n]));
        let (i, d) = nearest(man, crits, &y[..n]);
        if i != i0 || d > 2.0 * r_cap {
            left_start = true;
        }
        let stop = d < r_cap && g < gprev && (i != i0 || left_start);
        gprev = g;
        if stop {
            captured = Some((i, d));
        }
        stop
    })?;
    let (limit, final_distance) = captured.expect("integration stops only on capture");
    let var = (0..variations.len()).map(|b| y[n + b * n..n + (b + 1) * n].to_vec()).collect();
    Ok((Trajectory { points, limit, final_distance, steps }, var))
}

/// Riemannian Hessian eigen-decomposition at `x` (eigenvalues ascending, ambient eigenvector columns).
pub(crate) fn hessian_frame(mf: &dyn MorseFunction, x: &[f64]) -> Result<(Vec<f64>, faer::Mat<f64>)> {
    let (h, b) = riemannian_hessian(mf, x);
    let (vals, vecs) = crate::linalg::dense::sym_eigen(h.as_ref())?;
    Ok((vals, &b * &vecs))
}
