//! Signed counts of connecting gradient trajectories.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::flow::{flow_with_variation, integrate_flow, FlowControls, Trajectory};
use super::functions::{riemannian_gradient, Manifold, MorseFunction};
use super::CriticalPoint;
use crate::error::{Error, Result};
use crate::linalg::dense;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootOptions {
    /// Samples on one-dimensional shooting spheres.
    pub samples: usize,
    pub flow: FlowControls,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { samples: 64, flow: FlowControls::default() }
    }
}

/// A trajectory from `from` (index k+1) down to `to` (index k).
#[derive(Clone, Debug, Serialize)]
pub struct ConnectingTrajectory {
    pub from: usize,
    pub to: usize,
    pub sign: i64,
    /// Shooting parameter: side `±1` on a 0-sphere, angle on a circle.
    pub parameter: f64,
    /// Polyline in the direction of the flow.
    pub points: Vec<Vec<f64>>,
}

fn axpy(x: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(p, q)| p + a * q).collect()
}

/// `I(x, y)` for `ind x = ind y + 1` together with the connecting trajectories.
///
/// Each trajectory carries `ε = +1` when the forward tangent followed by `O_y` is `O_x`
/// (the outward-normal-first boundary orientation of the unstable cell of `x`).
pub fn count_signed_trajectories(mf: &dyn MorseFunction, crits: &[CriticalPoint], x: usize, y: usize, opts: &ShootOptions) -> Result<(i64, Vec<ConnectingTrajectory>)> {
    let (cx, cy) = (&crits[x], &crits[y]);
    if cx.index != cy.index + 1 {
        return Err(Error::InvalidArgument(format!("index {} does not exceed index {} by one", cx.index, cy.index)));
    }
    let n = mf.manifold().dim();
    let k = cy.index;
    let list = if k == 0 {
        forward_zero_sphere(mf, crits, x, y, &opts.flow)?
    } else if k + 1 == n {
        backward_zero_sphere(mf, crits, x, y, &opts.flow)?
    } else if n == 3 && k == 1 {
        let a = circle_search(mf, crits, x, y, opts.samples, &opts.flow)?;
        let b = circle_search(mf, crits, x, y, 2 * opts.samples, &opts.flow)?;
        let signs = |l: &[ConnectingTrajectory]| l.iter().map(|t| t.sign).collect::<Vec<_>>();
        if signs(&a) != signs(&b) {
            return Err(Error::Numeric(format!(
                "trajectory set {x}->{y} changed under doubled shoot density ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        a
    } else {
        return Err(Error::InvalidArgument(format!("no shooting strategy for indices {}->{} in dimension {n}", cx.index, cy.index)));
    };
    Ok((list.iter().map(|t| t.sign).sum(), list))
}

/// `y` a minimum: the unstable 0-sphere of `x` is `x ± r u`, and `ε = ±1` with the side.
fn forward_zero_sphere(mf: &dyn MorseFunction, crits: &[CriticalPoint], x: usize, y: usize, fc: &FlowControls) -> Result<Vec<ConnectingTrajectory>> {
    let man = mf.manifold();
    let r = fc.shoot_radius(man);
    let u = crits[x].frame_column(0);
    let mut out = Vec::new();
    for side in [1.0, -1.0] {
        let mut start = axpy(&crits[x].location, side * r, &u);
        man.retract(&mut start);
        let tr = integrate_flow(mf, crits, &start, 1.0, fc)?;
        if tr.limit == y {
            let mut points = vec![crits[x].location.clone()];
            points.extend(tr.points);
            out.push(ConnectingTrajectory { from: x, to: y, sign: side as i64, parameter: side, points });
        }
    }
    Ok(out)
}

/// `x` of top index: shoot up along the stable 0-sphere of `y`; `ε = sign det(t, O_y)`.
fn backward_zero_sphere(mf: &dyn MorseFunction, crits: &[CriticalPoint], x: usize, y: usize, fc: &FlowControls) -> Result<Vec<ConnectingTrajectory>> {
    let man = mf.manifold();
    let r = fc.shoot_radius(man);
    let n = man.dim();
    let cy = &crits[y];
    let s = cy.frame_column(n - 1);
    let w: Vec<Vec<f64>> = (0..n - 1).map(|j| cy.frame_column(j)).collect();
    let mut out = Vec::new();
    for side in [1.0, -1.0] {
        let mut start = axpy(&cy.location, side * r, &s);
        man.retract(&mut start);
        let tr = integrate_flow(mf, crits, &start, -1.0, fc)?;
        if tr.limit == x {
            let tangent: Vec<f64> = s.iter().map(|v| -side * v).collect();
            let mut frame = vec![tangent];
            frame.extend(w.iter().cloned());
            let sign = man.orientation(&cy.location, &frame) as i64;
            let mut points: Vec<Vec<f64>> = tr.points.into_iter().rev().collect();
            points.push(cy.location.clone());
            out.push(ConnectingTrajectory { from: x, to: y, sign, parameter: side, points });
        }
    }
    Ok(out)
}

struct Shot {
    trajectory: Trajectory,
    /// Closest approach to the target and the trajectory index where it occurs.
    distance: f64,
    /// State and variation at the closest approach.
    at: (Vec<f64>, Vec<f64>),
}

fn shoot_angle(mf: &dyn MorseFunction, crits: &[CriticalPoint], x: usize, y: usize, theta: f64, fc: &FlowControls) -> Result<Shot> {
    let man = mf.manifold();
    let r = fc.shoot_radius(man);
    let (u1, u2) = (crits[x].frame_column(0), crits[x].frame_column(1));
    let (c, s) = (theta.cos(), theta.sin());
    let start: Vec<f64> = (0..u1.len()).map(|i| crits[x].location[i] + r * (c * u1[i] + s * u2[i])).collect();
    let var: Vec<f64> = (0..u1.len()).map(|i| r * (-s * u1[i] + c * u2[i])).collect();
    let (tr, end) = flow_with_variation(mf, crits, &start, std::slice::from_ref(&var), 1.0, fc)?;
    let (best, distance) = tr
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, man.distance(p, &crits[y].location)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let at = if best + 1 == tr.points.len() {
        (tr.points[best].clone(), end[0].clone())
    } else {
        transport_to(mf, &start, &var, best, fc)?
    };
    Ok(Shot { trajectory: tr, distance, at })
}

/// Re-integrates and stops after `steps` accepted steps, returning state and variation.
fn transport_to(mf: &dyn MorseFunction, start: &[f64], var: &[f64], steps: usize, fc: &FlowControls) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = start.len();
    let mut y: Vec<f64> = start.iter().chain(var).cloned().collect();
    if steps == 0 {
        return Ok((start.to_vec(), var.to_vec()));
    }
    let rhs = |s: &[f64]| {
        let g = riemannian_gradient(mf, &s[..n]);
        let h = mf.hessian(&s[..n]);
        let mut out: Vec<f64> = g.iter().map(|v| -v).collect();
        for i in 0..n {
            out.push(-(0..n).map(|c| h[(i, c)] * s[n + c]).sum::<f64>());
        }
        out
    };
    let speed = dense::norm(&riemannian_gradient(mf, start)).max(1e-300);
    let h0 = (1e-3 * mf.manifold().diameter() / speed).min(1.0);
    let mut count = 0;
    super::flow::dopri5(&mut y, rhs, fc, h0, |_, _| {
        count += 1;
        count == steps
    })?;
    Ok((y[..n].to_vec(), y[n..].to_vec()))
}

/// Index 2 → index 1 in dimension 3: scan the unstable circle of `x` for angles whose
/// trajectories pass through `y`, refine by golden-section search on the closest approach,
/// and orient with the transported unstable frame.
fn circle_search(mf: &dyn MorseFunction, crits: &[CriticalPoint], x: usize, y: usize, samples: usize, fc: &FlowControls) -> Result<Vec<ConnectingTrajectory>> {
    let man = mf.manifold();
    if !matches!(man, Manifold::Torus { .. }) {
        return Err(Error::InvalidArgument("circle shooting needs a torus".into()));
    }
    let separation = crits
        .iter()
        .filter(|c| !std::ptr::eq(*c, &crits[y]))
        .map(|c| man.distance(&c.location, &crits[y].location))
        .fold(f64::INFINITY, f64::min);
    let thetas: Vec<f64> = (0..samples).map(|i| 2.0 * PI * (i as f64 + 0.123) / samples as f64).collect();
    let shots: Vec<Shot> = thetas.iter().map(|&t| shoot_angle(mf, crits, x, y, t, fc)).collect::<Result<_>>()?;
    let mut found: Vec<(f64, Shot)> = Vec::new();
    for i in 0..samples {
        let (prev, next) = ((i + samples - 1) % samples, (i + 1) % samples);
        let d = shots[i].distance;
        if d > shots[prev].distance || d > shots[next].distance || d > 0.5 * separation {
            continue;
        }
        let step = 2.0 * PI / samples as f64;
        let (theta, shot) = golden(|t| shoot_angle(mf, crits, x, y, t, fc), thetas[i] - step, thetas[i] + step, y)?;
        if shot.trajectory.limit != y {
            continue;
        }
        let theta = theta.rem_euclid(2.0 * PI);
        let dup = found.iter().any(|(t, _)| {
            let d = (t - theta).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d) < 1e-6
        });
        if !dup {
            found.push((theta, shot));
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = crits[y].frame_column(0);
    found
        .into_iter()
        .map(|(theta, shot)| {
            let (p, j) = shot.at;
            let g = riemannian_gradient(mf, &p);
            let t: Vec<f64> = g.iter().map(|v| -v).collect();
            let tn = dense::norm(&t);
            let tu: Vec<f64> = t.iter().map(|v| v / tn).collect();
            let jp = axpy(&j, -dense::dot(&j, &tu), &tu);
            let c = dense::dot(&jp, &w);
            if !(c.abs() > 1e-8 * dense::norm(&j)) {
                return Err(Error::Numeric(format!("degenerate orientation on trajectory {x}->{y} at angle {theta}")));
            }
            let mut points = vec![crits[x].location.clone()];
            points.extend(shot.trajectory.points);
            Ok(ConnectingTrajectory { from: x, to: y, sign: c.signum() as i64, parameter: theta, points })
        })
        .collect()
}

fn golden(mut eval: impl FnMut(f64) -> Result<Shot>, mut a: f64, mut b: f64, target: usize) -> Result<(f64, Shot)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..80 {
        if fc.trajectory.limit == target {
            return Ok((c, fc));
        }
        if fd.trajectory.limit == target {
            return Ok((d, fd));
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc.distance < fd.distance {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(if fc.distance < fd.distance { (c, fc) } else { (d, fd) })
}
