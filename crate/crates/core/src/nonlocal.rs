//! Upwind finite-volume solver for the nonlocal conservation law
//! `d/dt u + d/dx [ V(w) u ] = 0`, where `w` is the forward (look-ahead)
//! average of `u` produced by [`crate::kernel::convolve`].
//!
//! The marching scheme reads, with `lam = dt / dx` and `w_i` the forward
//! average anchored at edge `i`,
//!
//! ```text
//! u_j <- u_j - lam * ( V(w_{j+1}) u_j - V(w_j) u_{j-1} )
//! ```
//!
//! i.e. the edge flux carries the density of the cell behind the edge at the
//! speed set by the average ahead of it. For non-increasing `V >= 0` this
//! update is monotone once `lam * (V_max + gamma_0 * Lip(V)) <= 1`, where
//! `gamma_0` is the first kernel weight; the time step is chosen from that
//! bound scaled by the `cfl` safety factor. Models that allow negative
//! speeds are integrated with a Lax-Friedrichs flux instead (logged, and
//! flagged on the run record) since pure upwinding is then invalid.
//!
//! Every run keeps an exact mass ledger: the update telescopes, so the mass
//! change per step equals `dt * (F_in - F_out)` to round-off, and
//! [`MassLedger::balance_residual`] exposes the defect.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Profile;
use crate::kernel::{convolve, discretize_with, DiscreteKernel, DiscretizeOpts, KernelSpec};
use crate::velocity::VelocityModel;

/// Everything needed to run the nonlocal solver on some initial profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonlocalConfig {
    pub kernel: KernelSpec,
    pub epsilon: f64,
    pub velocity: VelocityModel,
    pub t_end: f64,
    /// Safety factor in `(0, 1]` applied to the monotonicity time-step bound.
    pub cfl: f64,
    /// Times at which full `(u, w)` snapshots are captured; hit exactly by
    /// shortening sub-steps. Need not be sorted; duplicates are merged.
    pub snapshot_times: Vec<f64>,
    pub discretize: DiscretizeOpts,
}

impl NonlocalConfig {
    pub fn new(kernel: KernelSpec, epsilon: f64, velocity: VelocityModel, t_end: f64) -> Self {
        NonlocalConfig {
            kernel,
            epsilon,
            velocity,
            t_end,
            cfl: 0.5,
            snapshot_times: Vec::new(),
            discretize: DiscretizeOpts::default(),
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    /// Largest stable step for cell width `dx`:
    /// `cfl * dx / (V_max + gamma_0 * Lip(V))`.
    pub fn max_time_step(&self, dx: f64, dk: &DiscreteKernel) -> f64 {
        let speed_scale = self.velocity.max_abs_v + dk.weights[0] * self.velocity.lip_const;
        self.cfl * dx / speed_scale.max(1e-12)
    }
}

/// State pair captured at one requested time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Profile,
    pub w: Profile,
}

/// Per-step record, captured at `t = 0` (with `dt = 0`) and after every
/// step. Variations refer to the state at time `t`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub tv_u: f64,
    pub tv_w: f64,
    /// Negative part of the increments of `w` (zero iff `w` is monotone
    /// between its far fields, boundary transitions included).
    pub neg_part_w: f64,
}

/// Exact accounting of mass entering and leaving the domain.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct MassLedger {
    pub initial_mass: f64,
    /// Time integral of the flux through the left boundary.
    pub inflow: f64,
    /// Time integral of the flux through the right boundary.
    pub outflow: f64,
}

impl MassLedger {
    /// `mass(t) - mass(0) - inflow + outflow`; zero to round-off for every
    /// run because the interior fluxes telescope.
    pub fn balance_residual(&self, current_mass: f64) -> f64 {
        current_mass - self.initial_mass - self.inflow + self.outflow
    }
}

/// Result of a nonlocal run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonlocalRun {
    pub epsilon: f64,
    pub t_end: f64,
    /// The step bound actually used (snapshots may shorten single steps).
    pub dt_max: f64,
    pub n_steps: usize,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    pub ledger: MassLedger,
    pub final_u: Profile,
    pub final_w: Profile,
    /// Extremes of the cell values over the whole run, for bound audits.
    pub min_seen: f64,
    pub max_seen: f64,
    /// Extremes of the forward average over the whole run (every substep
    /// recomputes `w`, and each recomputation feeds these).
    pub w_min_seen: f64,
    pub w_max_seen: f64,
    /// True when the model admits negative speeds and the run was integrated
    /// with the Lax-Friedrichs flux.
    pub used_fallback: bool,
    pub kernel: DiscreteKernel,
    pub velocity: VelocityModel,
}

impl NonlocalRun {
    /// Snapshot captured at time `t`, if one was requested there.
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        let tol = 1e-12 * self.t_end.max(1.0);
        self.snapshots.iter().find(|s| (s.t - t).abs() <= tol)
    }

    pub fn final_mass(&self) -> f64 {
        self.steps.last().map_or(self.ledger.initial_mass, |s| s.mass)
    }
}

struct Stepper<'a> {
    velocity: &'a VelocityModel,
    dx: f64,
    bl: f64,
    br: f64,
    lo: f64,
    hi: f64,
    flux: Vec<f64>,
    use_fallback: bool,
    ledger: MassLedger,
    min_seen: f64,
    max_seen: f64,
}

impl Stepper<'_> {
    fn apply(&mut self, u: &mut [f64], w: &[f64], dt: f64, t: f64) -> Result<()> {
        let n = u.len();
        let vel = self.velocity;
        if self.use_fallback {
            // Lax-Friedrichs with the global speed bound; valid (monotone
            // under the same step restriction) even when V changes sign.
            let a = vel.max_abs_v;
            for i in 0..=n {
                let left = if i == 0 { self.bl } else { u[i - 1] };
                let right = if i == n { self.br } else { u[i] };
                let w_edge = if i == n { self.br } else { w[i] };
                self.flux[i] = 0.5 * vel.v(w_edge) * (left + right) - 0.5 * a * (right - left);
            }
        } else {
            self.flux[0] = vel.v(w[0]) * self.bl;
            for i in 1..n {
                self.flux[i] = vel.v(w[i]) * u[i - 1];
            }
            self.flux[n] = vel.v(self.br) * u[n - 1];
        }
        let lam = dt / self.dx;
        for (j, uj) in u.iter_mut().enumerate() {
            *uj -= lam * (self.flux[j + 1] - self.flux[j]);
        }
        self.ledger.inflow += dt * self.flux[0];
        self.ledger.outflow += dt * self.flux[n];

        let mut lo = u[0];
        let mut hi = u[0];
        for &v in u.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::NumericalBlowup(format!("non-finite state at t = {t}")));
        }
        if lo < self.lo - 1e-9 || hi > self.hi + 1e-9 {
            return Err(Error::NumericalBlowup(format!(
                "state left [{}, {}] at t = {t}: range [{lo}, {hi}]",
                self.lo, self.hi
            )));
        }
        self.min_seen = self.min_seen.min(lo);
        self.max_seen = self.max_seen.max(hi);
        Ok(())
    }
}

/// Runs the nonlocal solver from `u0` according to `cfg`.
pub fn solve(u0: &Profile, cfg: &NonlocalConfig) -> Result<NonlocalRun> {
    if !(cfg.t_end.is_finite() && cfg.t_end >= 0.0) {
        return Err(Error::Domain(format!("final time must be nonnegative, got {}", cfg.t_end)));
    }
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return Err(Error::Domain(format!("cfl factor must lie in (0, 1], got {}", cfg.cfl)));
    }
    let grid = u0.grid;
    let lo = u0.min_value().min(grid.boundary_left).min(grid.boundary_right);
    let hi = u0.max_value().max(grid.boundary_left).max(grid.boundary_right);
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::Domain(format!("initial data range [{lo}, {hi}] outside [0, 1]")));
    }

    let dk = discretize_with(&cfg.kernel, cfg.epsilon, grid.cell_width, cfg.discretize)?;
    let dt_max = cfg.max_time_step(grid.cell_width, &dk);
    // Defensive restatement of the monotonicity bound; unreachable unless
    // the step selection above is edited inconsistently.
    let speed_scale = cfg.velocity.max_abs_v + dk.weights[0] * cfg.velocity.lip_const;
    if dt_max * speed_scale / grid.cell_width > 1.0 + 1e-12 {
        return Err(Error::Stability(format!(
            "time step {dt_max} violates the monotonicity bound"
        )));
    }

    let use_fallback = cfg.velocity.min_v < 0.0;
    if use_fallback {
        log::warn!(
            "velocity model admits negative speeds (min {}); switching to the \
             Lax-Friedrichs flux",
            cfg.velocity.min_v
        );
    }

    let time_tol = 1e-12 * cfg.t_end.max(1.0);
    let mut events: Vec<f64> = cfg.snapshot_times.clone();
    for &s in &events {
        if !s.is_finite() || s < -time_tol || s > cfg.t_end + time_tol {
            return Err(Error::Domain(format!(
                "snapshot time {s} outside [0, {}]",
                cfg.t_end
            )));
        }
    }
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() <= time_tol);
    let n_snapshots = events.len();
    if events.last().map_or(true, |&s| s < cfg.t_end - time_tol) {
        events.push(cfg.t_end); // plain integration target, not a snapshot
    }

    let mut u = u0.clone();
    let mut w = convolve(&u, &dk)?;
    let mut w_min_seen = w.min_value();
    let mut w_max_seen = w.max_value();
    let mut stepper = Stepper {
        velocity: &cfg.velocity,
        dx: grid.cell_width,
        bl: grid.boundary_left,
        br: grid.boundary_right,
        lo,
        hi,
        flux: vec![0.0; u.len() + 1],
        use_fallback,
        ledger: MassLedger { initial_mass: u.mass(), ..Default::default() },
        min_seen: u0.min_value(),
        max_seen: u0.max_value(),
    };

    let record = |t: f64, dt: f64, u: &Profile, w: &Profile| StepRecord {
        t,
        dt,
        mass: u.mass(),
        tv_u: u.total_variation(),
        tv_w: w.total_variation(),
        neg_part_w: w.tv_decomposition().negative_part,
    };

    let mut steps = vec![record(0.0, 0.0, &u, &w)];
    let mut snapshots = Vec::with_capacity(n_snapshots);
    let mut t = 0.0_f64;
    for (k, &target) in events.iter().enumerate() {
        let target = target.clamp(0.0, cfg.t_end);
        while target - t > time_tol {
            let dt = dt_max.min(target - t);
            stepper.apply(&mut u.values, &w.values, dt, t)?;
            t = if target - (t + dt) <= time_tol { target } else { t + dt };
            w = convolve(&u, &dk)?;
            w_min_seen = w_min_seen.min(w.min_value());
            w_max_seen = w_max_seen.max(w.max_value());
            steps.push(record(t, dt, &u, &w));
        }
        t = target;
        if k < n_snapshots {
            snapshots.push(Snapshot { t, u: u.clone(), w: w.clone() });
        }
    }

    Ok(NonlocalRun {
        epsilon: cfg.epsilon,
        t_end: cfg.t_end,
        dt_max,
        n_steps: steps.len() - 1,
        snapshots,
        steps,
        ledger: stepper.ledger,
        final_u: u,
        final_w: w,
        min_seen: stepper.min_seen,
        max_seen: stepper.max_seen,
        w_min_seen,
        w_max_seen,
        used_fallback: use_fallback,
        kernel: dk,
        velocity: cfg.velocity.clone(),
    })
}
