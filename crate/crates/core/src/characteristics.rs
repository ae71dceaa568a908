//! Characteristic curves of the nonlocal model: solutions of
//! `dX/dt = V(w(t, X))` through the forward-average field `w` of a
//! completed run.
//!
//! The field is reconstructed from run snapshots, linear in `x` between the
//! edge-anchored samples and linear in `t` between snapshots; the curve is
//! advanced with one classical fourth-order Runge-Kutta step per snapshot
//! interval, which is why tracing insists the snapshot spacing stays within
//! a small multiple of the solver step. Along such curves the density flux
//! relative to the curve vanishes, so the mass between two curves is a
//! conserved quantity; [`mass_between`] measures it at every snapshot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::nonlocal::NonlocalRun;

/// How many solver steps a snapshot interval may span while still giving
/// the integrator a temporally resolved field.
pub const MAX_SPACING_STEPS: f64 = 5.0;

/// A traced curve, stored with times increasing regardless of the tracing
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl CharacteristicPath {
    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation along the curve; `None` outside its time range.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let tol = 1e-12 * self.end_time().abs().max(1.0);
        if t < self.start_time() - tol || t > self.end_time() + tol {
            return None;
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Some(self.positions[0]);
        }
        if i == self.times.len() {
            return Some(*self.positions.last().unwrap());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let frac = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        Some(self.positions[i - 1] * (1.0 - frac) + self.positions[i] * frac)
    }
}

/// Samples an edge-anchored field at `x`, linearly between samples and
/// constant beyond the grid (the right end blends into the far-field state
/// across the final cell).
fn interp_edge_field(p: &Profile, x: f64) -> f64 {
    let g = &p.grid;
    let n = p.len();
    let pos = (x - g.x_left) / g.cell_width;
    if pos <= 0.0 {
        return p.values[0];
    }
    if pos >= n as f64 {
        return g.boundary_right;
    }
    let j = (pos.floor() as usize).min(n - 1);
    let frac = pos - j as f64;
    let right = if j + 1 < n { p.values[j + 1] } else { g.boundary_right };
    p.values[j] * (1.0 - frac) + right * frac
}

/// One classical Runge-Kutta step of `dX/dt = s(t, X)` from `(t, x)` over a
/// signed step `h`.
fn rk4_step(speed: &impl Fn(f64, f64) -> f64, t: f64, x: f64, h: f64) -> f64 {
    let k1 = speed(t, x);
    let k2 = speed(t + 0.5 * h, x + 0.5 * h * k1);
    let k3 = speed(t + 0.5 * h, x + 0.5 * h * k2);
    let k4 = speed(t + h, x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Traces the curve through `(t_from, x0)` until `t_to`, forward or
/// backward. Both endpoints must be snapshot times of the run. Leaving the
/// grid raises [`Error::DomainExit`] carrying the partial curve and the
/// interpolated crossing time.
pub fn trace(run: &NonlocalRun, x0: f64, t_from: f64, t_to: f64) -> Result<CharacteristicPath> {
    let tol = 1e-12 * run.t_end.max(1.0);
    let snap_index = |t: f64| -> Result<usize> {
        run.snapshots
            .iter()
            .position(|s| (s.t - t).abs() <= tol)
            .ok_or_else(|| Error::Domain(format!("time {t} is not a snapshot time of the run")))
    };
    let i_from = snap_index(t_from)?;
    let i_to = snap_index(t_to)?;
    let grid = run.final_u.grid;
    if x0 < grid.x_left || x0 > grid.x_right() {
        return Err(Error::Domain(format!("start position {x0} outside the grid")));
    }

    let backward = i_to < i_from;
    let indices: Vec<usize> = if backward {
        (i_to..=i_from).rev().collect()
    } else {
        (i_from..=i_to).collect()
    };
    for pair in indices.windows(2) {
        let gap = (run.snapshots[pair[1]].t - run.snapshots[pair[0]].t).abs();
        if gap > MAX_SPACING_STEPS * run.dt_max * (1.0 + 1e-9) {
            return Err(Error::Resolution(format!(
                "snapshot spacing {gap} exceeds {MAX_SPACING_STEPS} solver steps of {}",
                run.dt_max
            )));
        }
    }

    let mut times = vec![run.snapshots[indices[0]].t];
    let mut positions = vec![x0];
    let mut x = x0;
    for pair in indices.windows(2) {
        let (sa, sb) = (&run.snapshots[pair[0]], &run.snapshots[pair[1]]);
        let h = sb.t - sa.t;
        let speed = |t: f64, y: f64| -> f64 {
            let theta = if h != 0.0 { (t - sa.t) / h } else { 0.0 };
            let w = (1.0 - theta) * interp_edge_field(&sa.w, y)
                + theta * interp_edge_field(&sb.w, y);
            run.velocity.v(w)
        };
        let next = rk4_step(&speed, sa.t, x, h);
        if next < grid.x_left || next > grid.x_right() {
            let edge = if next < grid.x_left { grid.x_left } else { grid.x_right() };
            let frac = if next != x { (edge - x) / (next - x) } else { 1.0 };
            let exit_time = sa.t + frac.clamp(0.0, 1.0) * h;
            times.push(exit_time);
            positions.push(edge);
            if backward {
                times.reverse();
                positions.reverse();
            }
            return Err(Error::DomainExit {
                exit_time,
                partial: CharacteristicPath { times, positions },
            });
        }
        x = next;
        times.push(sb.t);
        positions.push(x);
    }
    if backward {
        times.reverse();
        positions.reverse();
    }
    Ok(CharacteristicPath { times, positions })
}

/// Mass of the solution between two traced curves, reported at every
/// snapshot time the curves share. The left curve must stay left of the
/// right one.
pub fn mass_between(
    run: &NonlocalRun,
    left: &CharacteristicPath,
    right: &CharacteristicPath,
) -> Result<Vec<(f64, f64)>> {
    let tol = 1e-12 * run.t_end.max(1.0);
    let mut out = Vec::new();
    for snap in &run.snapshots {
        let (Some(xl), Some(xr)) = (left.position_at(snap.t), right.position_at(snap.t)) else {
            continue;
        };
        if xl > xr + tol.max(1e-12 * xr.abs()) {
            return Err(Error::PathOrder(format!(
                "curves cross at t = {}: left {xl} > right {xr}",
                snap.t
            )));
        }
        let mass = if xr > xl { snap.u.integrate(xl, xr) } else { 0.0 };
        out.push((snap.t, mass));
    }
    Ok(out)
}
