//! Measurement tools: total-variation monitoring, compactly supported test
//! functions, a discrete entropy-defect quadrature for the forward average,
//! convergence-rate fitting, and variation over moving windows.
//!
//! The entropy quadrature is written in "difference form": test-function
//! increments multiply entropy values, so that for constant fields the sums
//! telescope and the result vanishes to round-off, and for thresholds `c`
//! outside the range of the field it reduces exactly to the weak-form
//! residual of the field itself. Those two identities are what make the
//! dissipation constant measured here trustworthy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::nonlocal::{NonlocalRun, StepRecord};

/// Verdict on a total-variation time series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Largest rise of the series above its running minimum.
    pub worst_rise: f64,
    /// Time at which that rise is attained.
    pub worst_time: f64,
    pub initial_tv: f64,
    pub final_tv: f64,
    pub peak_tv: f64,
    pub peak_time: f64,
}

/// Checks whether `tv_w` is non-increasing along the run up to `tolerance`.
pub fn monotonicity_verdict(steps: &[StepRecord], tolerance: f64) -> MonotonicityReport {
    assert!(!steps.is_empty(), "empty step series");
    let mut running_min = f64::INFINITY;
    let mut worst_rise = 0.0_f64;
    let mut worst_time = steps[0].t;
    let mut peak_tv = f64::NEG_INFINITY;
    let mut peak_time = steps[0].t;
    for r in steps {
        running_min = running_min.min(r.tv_w);
        let rise = r.tv_w - running_min;
        if rise > worst_rise {
            worst_rise = rise;
            worst_time = r.t;
        }
        if r.tv_w > peak_tv {
            peak_tv = r.tv_w;
            peak_time = r.t;
        }
    }
    MonotonicityReport {
        passed: worst_rise <= tolerance,
        tolerance,
        worst_rise,
        worst_time,
        initial_tv: steps[0].tv_w,
        final_tv: steps[steps.len() - 1].tv_w,
        peak_tv,
        peak_time,
    }
}

/// First time at which `tv_w` reaches `level`, if it ever does.
pub fn first_time_above(steps: &[StepRecord], level: f64) -> Option<f64> {
    steps.iter().find(|r| r.tv_w >= level).map(|r| r.t)
}

fn least_squares_slope(points: &[(f64, f64)]) -> Result<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Fit("need at least two points for a slope".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Least-squares growth rate of `tv_w` over the records with `t <= window`.
pub fn early_growth_rate(steps: &[StepRecord], window: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .take_while(|r| r.t <= window * (1.0 + 1e-12))
        .map(|r| (r.t, r.tv_w))
        .collect();
    least_squares_slope(&pts)
}

/// Smooth space-time test function `phi(t, x) = psi(t) chi(x)`, each factor
/// the sixth-degree bump `(1 - s^2)^3` scaled to its own support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpTestFunction {
    pub t_center: f64,
    pub t_halfwidth: f64,
    pub x_center: f64,
    pub x_halfwidth: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        q * q * q
    }
}

/// `integral of (1 - s^2)^3 over [-1, 1]`.
const BUMP_MASS: f64 = 32.0 / 35.0;
/// `max |d/ds (1 - s^2)^3|`, attained at `s = 1/sqrt(5)`.
const BUMP_MAX_SLOPE: f64 = 1.7173002067198384; // 96 / (25 sqrt(5))

impl BumpTestFunction {
    pub fn new(t_center: f64, t_halfwidth: f64, x_center: f64, x_halfwidth: f64) -> Result<Self> {
        if !(t_halfwidth > 0.0 && x_halfwidth > 0.0) {
            return Err(Error::Domain("test-function halfwidths must be positive".into()));
        }
        Ok(BumpTestFunction { t_center, t_halfwidth, x_center, x_halfwidth })
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        bump((t - self.t_center) / self.t_halfwidth)
    }

    pub fn space_factor(&self, x: f64) -> f64 {
        bump((x - self.x_center) / self.x_halfwidth)
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.time_factor(t) * self.space_factor(x)
    }

    pub fn support_t(&self) -> (f64, f64) {
        (self.t_center - self.t_halfwidth, self.t_center + self.t_halfwidth)
    }

    pub fn support_x(&self) -> (f64, f64) {
        (self.x_center - self.x_halfwidth, self.x_center + self.x_halfwidth)
    }

    /// `integral over t of sup_x |d phi / dx|`, in closed form.
    pub fn l1_linf_dx_norm(&self) -> f64 {
        BUMP_MASS * self.t_halfwidth * BUMP_MAX_SLOPE / self.x_halfwidth
    }
}

/// Shared difference-form quadrature over the snapshot ladder of a run:
/// `sum alpha(w) d_t phi + sum beta(w) d_x phi` with `w` sampled at the
/// cell left edges where the forward average is anchored.
fn difference_quadrature(
    run: &NonlocalRun,
    phi: &BumpTestFunction,
    alpha: impl Fn(f64) -> f64,
    beta: impl Fn(f64) -> f64,
) -> Result<f64> {
    let snaps = &run.snapshots;
    if snaps.len() < 2 {
        return Err(Error::Support("need at least two snapshots to integrate in time".into()));
    }
    let tol = 1e-12 * run.t_end.max(1.0);
    let (t_lo, t_hi) = phi.support_t();
    if t_lo < snaps[0].t - tol || t_hi > snaps[snaps.len() - 1].t + tol {
        return Err(Error::Support(format!(
            "time support [{t_lo}, {t_hi}] not covered by snapshots [{}, {}]",
            snaps[0].t,
            snaps[snaps.len() - 1].t
        )));
    }
    let grid = &snaps[0].u.grid;
    let n = snaps[0].w.len();
    let (x_lo, x_hi) = phi.support_x();
    if x_lo < grid.x_edge(0) || x_hi > grid.x_edge(n - 1) {
        return Err(Error::Support(format!(
            "space support [{x_lo}, {x_hi}] not inside the sampled edges [{}, {}]",
            grid.x_edge(0),
            grid.x_edge(n - 1)
        )));
    }

    let chi: Vec<f64> = (0..n).map(|j| phi.space_factor(grid.x_edge(j))).collect();
    // Only edges where phi can be nonzero contribute; restricting the loops
    // keeps the quadrature cheap for narrow bumps.
    let j_lo = ((x_lo - grid.x_left) / grid.cell_width).floor().max(0.0) as usize;
    let j_hi = (((x_hi - grid.x_left) / grid.cell_width).ceil() as usize + 1).min(n - 1);

    let dx = grid.cell_width;
    let mut total = 0.0_f64;
    for m in 0..snaps.len() - 1 {
        let (sa, sb) = (&snaps[m], &snaps[m + 1]);
        let psi_a = phi.time_factor(sa.t);
        let psi_b = phi.time_factor(sb.t);
        let psi_mid = phi.time_factor(0.5 * (sa.t + sb.t));
        let dt = sb.t - sa.t;
        let (wa, wb) = (&sa.w.values, &sb.w.values);
        if psi_b != psi_a {
            let dpsi = psi_b - psi_a;
            for j in j_lo..=j_hi {
                if chi[j] != 0.0 {
                    total += dx * alpha(0.5 * (wa[j] + wb[j])) * dpsi * chi[j];
                }
            }
        }
        if psi_mid != 0.0 {
            for j in j_lo..j_hi {
                let dchi = chi[j + 1] - chi[j];
                if dchi != 0.0 {
                    let corner = 0.25 * (wa[j] + wa[j + 1] + wb[j] + wb[j + 1]);
                    total += dt * psi_mid * beta(corner) * dchi;
                }
            }
        }
    }
    Ok(total)
}

/// Kruzkov entropy production of the forward-average field against `phi`:
/// nonnegative values mean the pair `(|w - c|, q(w, c))` behaves like an
/// entropy solution for this probe; negative values measure the defect.
pub fn entropy_residual(run: &NonlocalRun, c: f64, phi: &BumpTestFunction) -> Result<f64> {
    let pair = run.velocity.kruzkov(c)?;
    difference_quadrature(run, phi, |u| pair.alpha(u), |u| pair.beta(u))
}

/// Weak-form residual of the forward average under the local flux, with the
/// same quadrature and averaging as [`entropy_residual`]; the two agree
/// exactly (up to sign) when `c` clears the range of the field.
pub fn weak_form_residual(run: &NonlocalRun, phi: &BumpTestFunction) -> Result<f64> {
    let vel = run.velocity.clone();
    difference_quadrature(run, phi, |u| u, |u| vel.flux_clamped(u))
}

/// One `(c, phi)` probe of the entropy defect.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EntropyProbe {
    pub c: f64,
    pub t_center: f64,
    pub t_halfwidth: f64,
    pub x_center: f64,
    pub x_halfwidth: f64,
    pub residual: f64,
    /// `integral over t of sup_x |d phi/dx|` for this probe.
    pub norm_dx: f64,
}

/// Measured dissipation bound over a probe family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyReport {
    pub epsilon: f64,
    /// Largest variation of the forward average seen along the run.
    pub sup_tv_w: f64,
    /// Worst normalized deficit `max(0, -residual / norm_dx)` over probes.
    pub worst_deficit: f64,
    /// `worst_deficit / (epsilon * sup_tv_w)`: the measured constant in the
    /// dissipation bound `residual >= -K eps TV ||d_x phi||`.
    pub k_hat: f64,
    pub probes: Vec<EntropyProbe>,
}

impl EntropyReport {
    /// The probe attaining the worst deficit, if any residual is negative.
    pub fn worst_probe(&self) -> Option<&EntropyProbe> {
        self.probes
            .iter()
            .filter(|p| p.residual < 0.0)
            .min_by(|a, b| {
                (a.residual / a.norm_dx).partial_cmp(&(b.residual / b.norm_dx)).unwrap()
            })
    }
}

/// Evaluates the entropy defect for every pair from `cs x phis` (in
/// parallel; the report order is deterministic) and condenses the worst
/// normalized deficit into a measured dissipation constant.
pub fn dissipation_bound_fit(
    run: &NonlocalRun,
    cs: &[f64],
    phis: &[BumpTestFunction],
) -> Result<EntropyReport> {
    if cs.is_empty() || phis.is_empty() {
        return Err(Error::Domain("need at least one threshold and one test function".into()));
    }
    let jobs: Vec<(f64, &BumpTestFunction)> =
        cs.iter().flat_map(|&c| phis.iter().map(move |p| (c, p))).collect();
    let probes: Vec<EntropyProbe> = jobs
        .par_iter()
        .map(|&(c, phi)| -> Result<EntropyProbe> {
            let residual = entropy_residual(run, c, phi)?;
            Ok(EntropyProbe {
                c,
                t_center: phi.t_center,
                t_halfwidth: phi.t_halfwidth,
                x_center: phi.x_center,
                x_halfwidth: phi.x_halfwidth,
                residual,
                norm_dx: phi.l1_linf_dx_norm(),
            })
        })
        .collect::<Result<_>>()?;
    let sup_tv_w = run.steps.iter().map(|r| r.tv_w).fold(0.0, f64::max);
    let worst_deficit =
        probes.iter().map(|p| (-p.residual / p.norm_dx).max(0.0)).fold(0.0, f64::max);
    let scale = run.epsilon * sup_tv_w;
    let k_hat = if worst_deficit == 0.0 || scale == 0.0 { 0.0 } else { worst_deficit / scale };
    Ok(EntropyReport { epsilon: run.epsilon, sup_tv_w, worst_deficit, k_hat, probes })
}

/// Region where the forward average differs measurably from its far
/// fields, swept over every snapshot and the final state. Falls back to the
/// full sampled region for featureless runs. Anchoring the probe family
/// here (instead of on the padded numerical domain) keeps the measured
/// dissipation constant comparable across look-ahead scales: the padding
/// grows with the kernel reach, but the entropy structure lives where the
/// field actually varies.
fn feature_window(run: &NonlocalRun) -> (f64, f64) {
    let grid = &run.final_u.grid;
    let n = run.final_u.len();
    let (a, b) = (grid.x_edge(0), grid.x_edge(n - 1));
    let (bl, br) = (grid.boundary_left, grid.boundary_right);
    let threshold = 1e-3;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    // A sample belongs to the left (right) plateau while it matches the far
    // field of its own side; the feature window is what's left in between.
    let mut scan = |w: &Profile| {
        if let Some(j) = w.values.iter().position(|v| (v - bl).abs() > threshold) {
            lo = lo.min(grid.x_edge(j));
        }
        if let Some(j) = w.values.iter().rposition(|v| (v - br).abs() > threshold) {
            hi = hi.max(grid.x_edge(j + 1));
        }
    };
    for snap in &run.snapshots {
        scan(&snap.w);
    }
    scan(&run.final_w);
    if !(lo < hi) {
        return (a, b);
    }
    // Pad a little, keep a workable minimum width, stay inside the samples.
    let pad = 0.05 * (hi - lo) + 2.0 * grid.cell_width;
    let (mut lo, mut hi) = (lo - pad, hi + pad);
    let min_span = 40.0 * grid.cell_width;
    if hi - lo < min_span {
        let mid = 0.5 * (lo + hi);
        lo = mid - 0.5 * min_span;
        hi = mid + 0.5 * min_span;
    }
    (lo.max(a), hi.min(b))
}

/// The stock probe family for a run: thresholds spread over `(0, 1)` and
/// bumps of three widths at five centers each, anchored on the feature
/// window of the run, with one time window spanning most of the run.
pub fn default_probes(run: &NonlocalRun) -> Result<(Vec<f64>, Vec<BumpTestFunction>)> {
    if run.t_end <= 0.0 {
        return Err(Error::Domain("probe family needs a positive time horizon".into()));
    }
    let cs: Vec<f64> = (0..8).map(|k| 0.1 + 0.8 * k as f64 / 7.0).collect();
    let (a, b) = feature_window(run);
    let span = b - a;
    let mut phis = Vec::new();
    for frac in [0.08, 0.16, 0.3] {
        let hw = span * frac;
        let margin = 0.01 * span;
        let (lo, hi) = (a + hw + margin, b - hw - margin);
        for k in 0..5 {
            let center = lo + (hi - lo) * k as f64 / 4.0;
            phis.push(BumpTestFunction::new(
                0.5 * run.t_end,
                0.45 * run.t_end,
                center,
                hw,
            )?);
        }
    }
    Ok((cs, phis))
}

/// One point of an error-versus-scale study.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatePoint {
    pub epsilon: f64,
    pub error: f64,
}

/// Least-squares power-law fit of errors against the look-ahead length.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    /// Slope of `ln error` against `ln epsilon`.
    pub rate: f64,
    /// Fitted prefactor: `error ~ prefactor * epsilon^rate`.
    pub prefactor: f64,
    /// Largest `error / ((eps + sqrt(eps t)) tv0)` over the points.
    pub c_factor: f64,
    pub points: Vec<RatePoint>,
}

/// Fits `error = C eps^p` over at least four scales spanning at least two
/// octaves. `t_end` and `tv0` feed the normalized constant `c_factor`.
pub fn rate_fit(points: &[RatePoint], t_end: f64, tv0: f64) -> Result<RateReport> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 scales, got {}", points.len())));
    }
    let mut eps_min = f64::INFINITY;
    let mut eps_max = 0.0_f64;
    for p in points {
        if !(p.epsilon > 0.0 && p.epsilon.is_finite()) {
            return Err(Error::Fit(format!("scale {} is not positive", p.epsilon)));
        }
        if !(p.error > 0.0 && p.error.is_finite()) {
            return Err(Error::Fit(format!(
                "error {} at scale {} is not positive; a log-log fit is meaningless there",
                p.error, p.epsilon
            )));
        }
        eps_min = eps_min.min(p.epsilon);
        eps_max = eps_max.max(p.epsilon);
    }
    if eps_max / eps_min < 4.0 * (1.0 - 1e-12) {
        return Err(Error::Fit(format!(
            "scales span a factor {:.3}, need at least 4 (two octaves)",
            eps_max / eps_min
        )));
    }
    if !(tv0 > 0.0) {
        return Err(Error::Fit("variation scale of the data must be positive".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|p| (p.epsilon.ln(), p.error.ln())).collect();
    let rate = least_squares_slope(&logs)?;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / logs.len() as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / logs.len() as f64;
    let prefactor = (my - rate * mx).exp();
    let c_factor = points
        .iter()
        .map(|p| p.error / ((p.epsilon + (p.epsilon * t_end).sqrt()) * tv0))
        .fold(0.0, f64::max);
    Ok(RateReport { rate, prefactor, c_factor, points: points.to_vec() })
}

/// Variation over `[a, b]` of the continuous field obtained by joining the
/// edge-anchored samples linearly (ending on the far-field state across the
/// last cell); partial segments count proportionally.
pub fn windowed_variation(p: &Profile, a: f64, b: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::Domain(format!("window [{a}, {b}] is empty")));
    }
    let g = &p.grid;
    let n = p.len();
    let mut total = 0.0;
    for j in 0..n {
        let (ea, eb) = (g.x_edge(j), g.x_edge(j + 1));
        let lo = ea.max(a);
        let hi = eb.min(b);
        if hi <= lo {
            continue;
        }
        let next = if j + 1 < n { p.values[j + 1] } else { g.boundary_right };
        total += (next - p.values[j]).abs() * (hi - lo) / g.cell_width;
    }
    Ok(total)
}
