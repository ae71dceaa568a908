//! Classical (zero look-ahead) reference solver for
//! `d/dt u + d/dx f(u) = 0`, `f(u) = u V(u)`, used as the comparison target
//! when the look-ahead length shrinks.
//!
//! Two independent routes are provided and cross-checked in tests:
//! a monotone finite-volume marcher (Godunov flux for the quadratic
//! fundamental diagram, Engquist-Osher flux for tabulated speed laws), and
//! the exact self-similar solution of single-jump data, sampled by exact
//! cell averages. Entropy compliance of the marcher can be audited with the
//! numerical entropy flux of [`LocalFlux::entropy_flux`], which satisfies a
//! per-cell inequality for monotone schemes.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Profile};
use crate::nonlocal::MassLedger;
use crate::velocity::{VelocityFamily, VelocityModel};

/// Cumulative splitting of the flux derivative into its positive and
/// negative parts, exact for piecewise-linear speed tables (the flux is
/// piecewise quadratic, so sign changes are located algebraically).
#[derive(Debug, Clone)]
struct EoTables {
    /// Segment endpoints in `[0, 1]`, including interior sign changes.
    breaks: Vec<f64>,
    /// Cumulative positive part of `f'` up to each break.
    plus: Vec<f64>,
    /// True when `f' >= 0` on `(breaks[i], breaks[i+1])`.
    rising: Vec<bool>,
}

impl EoTables {
    fn build(model: &VelocityModel) -> Result<Self> {
        let table = match &model.family {
            VelocityFamily::Custom { table } => table,
            VelocityFamily::Greenshields => {
                return Err(Error::UnsupportedModel(
                    "splitting tables are only built for tabulated speed laws".into(),
                ))
            }
        };
        let mut breaks = vec![0.0];
        for seg in table.windows(2) {
            let (u0, v0) = seg[0];
            let (u1, v1) = seg[1];
            let s = (v1 - v0) / (u1 - u0);
            // f'(u) = V(u) + u V'(u) = v0 + s (2u - u0) on this segment.
            if s != 0.0 {
                let root = (s * u0 - v0) / (2.0 * s);
                if root > u0 && root < u1 {
                    breaks.push(root);
                }
            }
            breaks.push(u1);
        }
        let f = |u: f64| model.flux_clamped(u);
        let mut plus = vec![0.0];
        let mut rising = Vec::with_capacity(breaks.len() - 1);
        for pair in breaks.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            let up = model.flux_prime(mid) >= 0.0;
            rising.push(up);
            let gain = if up { f(pair[1]) - f(pair[0]) } else { 0.0 };
            plus.push(plus.last().unwrap() + gain);
        }
        Ok(EoTables { breaks, plus, rising })
    }

    /// `integral of max(f', 0) from 0 to u` (the rising part of the flux).
    fn f_plus(&self, model: &VelocityModel, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.breaks.partition_point(|&b| b < u).saturating_sub(1);
        let i = i.min(self.rising.len() - 1);
        let within = if self.rising[i] {
            model.flux_clamped(u) - model.flux_clamped(self.breaks[i])
        } else {
            0.0
        };
        self.plus[i] + within
    }

    /// `integral of min(f', 0) from 0 to u  =  f(u) - f(0) - f_plus(u)`.
    fn f_minus(&self, model: &VelocityModel, u: f64) -> f64 {
        model.flux_clamped(u.clamp(0.0, 1.0)) - model.flux_clamped(0.0) - self.f_plus(model, u)
    }
}

/// Monotone two-point numerical flux for the local model.
#[derive(Debug, Clone)]
pub struct LocalFlux<'a> {
    model: &'a VelocityModel,
    eo: Option<EoTables>,
}

impl<'a> LocalFlux<'a> {
    pub fn new(model: &'a VelocityModel) -> Result<Self> {
        let eo = match model.family {
            VelocityFamily::Greenshields => None,
            VelocityFamily::Custom { .. } => Some(EoTables::build(model)?),
        };
        Ok(LocalFlux { model, eo })
    }

    /// Numerical flux through an edge with states `a` (behind) and `b`
    /// (ahead). Godunov for the quadratic diagram, Engquist-Osher otherwise;
    /// both are monotone and consistent (`flux(u, u) = f(u)`).
    pub fn flux(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        match &self.eo {
            None => {
                // f(u) = u (1 - u): concave with its maximum at 1/2.
                let f = |u: f64| u * (1.0 - u);
                if a <= b {
                    f(a).min(f(b))
                } else {
                    f(0.5f64.clamp(b, a))
                }
            }
            Some(eo) => {
                eo.f_plus(self.model, a) + eo.f_minus(self.model, b) + self.model.flux_clamped(0.0)
            }
        }
    }

    /// Numerical entropy flux paired with `|u - c|`: monotone fluxes pass
    /// the per-cell inequality
    /// `|u_j' - c| <= |u_j - c| - lam (Q_{j+1/2} - Q_{j-1/2})`.
    pub fn entropy_flux(&self, a: f64, b: f64, c: f64) -> f64 {
        self.flux(a.max(c), b.max(c)) - self.flux(a.min(c), b.min(c))
    }
}

/// Largest characteristic speed `max |f'|` over `[0, 1]`, exact for both
/// model families (the derivative is piecewise linear).
pub fn max_wave_speed(model: &VelocityModel) -> f64 {
    match &model.family {
        VelocityFamily::Greenshields => 1.0,
        VelocityFamily::Custom { table } => {
            let mut m = 0.0_f64;
            for seg in table.windows(2) {
                let (u0, v0) = seg[0];
                let (u1, v1) = seg[1];
                let s = (v1 - v0) / (u1 - u0);
                // f' is linear on the segment, so extremes sit at the ends.
                m = m.max((v0 + s * u0).abs()).max((v1 + s * u1).abs());
            }
            m
        }
    }
}

/// Result of a local reference run.
#[derive(Debug, Clone)]
pub struct LocalRun {
    pub t_end: f64,
    pub dt_max: f64,
    pub n_steps: usize,
    pub final_u: Profile,
    pub ledger: MassLedger,
    pub min_seen: f64,
    pub max_seen: f64,
    pub tv_initial: f64,
    pub tv_final: f64,
}

/// Marches the local model from `u0` to `t_end` with the monotone flux.
pub fn solve_local(u0: &Profile, model: &VelocityModel, t_end: f64, cfl: f64) -> Result<LocalRun> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Domain(format!("final time must be nonnegative, got {t_end}")));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Domain(format!("cfl factor must lie in (0, 1], got {cfl}")));
    }
    let grid = u0.grid;
    let lo = u0.min_value().min(grid.boundary_left).min(grid.boundary_right);
    let hi = u0.max_value().max(grid.boundary_left).max(grid.boundary_right);
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::Domain(format!("initial data range [{lo}, {hi}] outside [0, 1]")));
    }
    let flux = LocalFlux::new(model)?;
    let dt_max = cfl * grid.cell_width / max_wave_speed(model).max(1e-12);
    let (bl, br) = (grid.boundary_left, grid.boundary_right);

    let mut u = u0.clone();
    let n = u.len();
    let mut f = vec![0.0; n + 1];
    let mut ledger = MassLedger { initial_mass: u.mass(), ..Default::default() };
    let mut t = 0.0_f64;
    let mut n_steps = 0usize;
    let (mut min_seen, mut max_seen) = (u0.min_value(), u0.max_value());
    let time_tol = 1e-12 * t_end.max(1.0);
    while t_end - t > time_tol {
        let dt = dt_max.min(t_end - t);
        f[0] = flux.flux(bl, u.values[0]);
        for i in 1..n {
            f[i] = flux.flux(u.values[i - 1], u.values[i]);
        }
        f[n] = flux.flux(u.values[n - 1], br);
        let lam = dt / grid.cell_width;
        for (j, uj) in u.values.iter_mut().enumerate() {
            *uj -= lam * (f[j + 1] - f[j]);
        }
        ledger.inflow += dt * f[0];
        ledger.outflow += dt * f[n];
        for &v in &u.values {
            if !v.is_finite() {
                return Err(Error::NumericalBlowup(format!("non-finite state at t = {t}")));
            }
            min_seen = min_seen.min(v);
            max_seen = max_seen.max(v);
        }
        if min_seen < lo - 1e-9 || max_seen > hi + 1e-9 {
            return Err(Error::NumericalBlowup(format!(
                "state left [{lo}, {hi}] at t = {t}: range [{min_seen}, {max_seen}]"
            )));
        }
        t = if t_end - (t + dt) <= time_tol { t_end } else { t + dt };
        n_steps += 1;
    }
    Ok(LocalRun {
        t_end,
        dt_max,
        n_steps,
        tv_initial: u0.total_variation(),
        tv_final: u.total_variation(),
        final_u: u,
        ledger,
        min_seen,
        max_seen,
    })
}

/// Exact self-similar solution of the local model with single-jump data
/// (quadratic fundamental diagram only): an admissible discontinuity when
/// the density jumps up, a smooth fan when it jumps down.
#[derive(Debug, Clone, Copy)]
pub struct RiemannSolution {
    pub left: f64,
    pub right: f64,
}

impl RiemannSolution {
    pub fn new(model: &VelocityModel, left: f64, right: f64) -> Result<Self> {
        if !matches!(model.family, VelocityFamily::Greenshields) {
            return Err(Error::UnsupportedModel(
                "closed-form jump solutions are implemented for the quadratic diagram only".into(),
            ));
        }
        for v in [left, right] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("state {v} outside [0, 1]")));
            }
        }
        Ok(RiemannSolution { left, right })
    }

    /// Speed of the jump when one forms (`left < right`).
    pub fn shock_speed(&self) -> Option<f64> {
        (self.left < self.right).then(|| 1.0 - self.left - self.right)
    }

    /// Slowest and fastest signal speeds emanating from the jump.
    pub fn speed_range(&self) -> (f64, f64) {
        match self.shock_speed() {
            Some(s) => (s, s),
            None => (1.0 - 2.0 * self.left, 1.0 - 2.0 * self.right),
        }
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        if t <= 0.0 {
            return if x < 0.0 { self.left } else { self.right };
        }
        let xi = x / t;
        if let Some(s) = self.shock_speed() {
            return if xi < s { self.left } else { self.right };
        }
        let (a, b) = self.speed_range();
        if xi <= a {
            self.left
        } else if xi >= b {
            self.right
        } else {
            (1.0 - xi) / 2.0
        }
    }

    /// Exact integral of the solution at time `t` over `[a, b]`.
    pub fn integrate(&self, t: f64, a: f64, b: f64) -> f64 {
        debug_assert!(b >= a);
        if t <= 0.0 || self.left == self.right {
            let cut = 0.0f64.clamp(a, b);
            return self.left * (cut - a) + self.right * (b - cut);
        }
        if let Some(s) = self.shock_speed() {
            let cut = (s * t).clamp(a, b);
            return self.left * (cut - a) + self.right * (b - cut);
        }
        let (sa, sb) = self.speed_range();
        let (xa, xb) = (sa * t, sb * t);
        let la = xa.clamp(a, b);
        let lb = xb.clamp(a, b);
        // Antiderivative of (1 - x/t)/2 inside the fan.
        let anti = |x: f64| x / 2.0 - x * x / (4.0 * t);
        self.left * (la - a) + (anti(lb) - anti(la)) + self.right * (b - lb)
    }

    /// Exact cell averages on `grid` at time `t`. The grid must contain the
    /// fan so the far fields are genuinely `left` / `right`.
    pub fn cell_averages(&self, grid: &Grid1D, t: f64) -> Result<Profile> {
        let (sa, sb) = self.speed_range();
        if grid.x_left > sa * t || grid.x_right() < sb * t {
            return Err(Error::Grid(format!(
                "grid [{}, {}] does not contain the wave fan [{}, {}]",
                grid.x_left,
                grid.x_right(),
                sa * t,
                sb * t
            )));
        }
        let grid = Grid1D::new(grid.x_left, grid.cell_width, grid.n_cells, self.left, self.right)?;
        let values = (0..grid.n_cells)
            .map(|j| self.integrate(t, grid.x_edge(j), grid.x_edge(j + 1)) / grid.cell_width)
            .collect();
        Profile::new(grid, values)
    }
}
