//! Look-ahead averaging kernels and their grid discretizations.
//!
//! A kernel is a probability density `eta` supported on the non-positive
//! half-line, non-decreasing there, so that the rescaled family
//! `eta_eps(x) = eta(x / eps) / eps` produces the weighted forward average
//!
//! ```text
//! w(x) = (1 / eps) * integral_x^inf eta((x - y) / eps) u(y) dy
//! ```
//!
//! i.e. a driver at `x` looks at the traffic *ahead* of them, weighted by
//! distance. On a grid the average becomes `w_j = sum_k gamma_k u_{j+k}`
//! where `gamma_k` is the cell average of `eta_eps` over the k-th cell to the
//! right of the evaluation point. `w_j` is therefore the forward average
//! anchored at the **left edge** of cell `j`; the value anchored at the
//! interface between cells `i` and `i+1` is entry `i + 1` of the output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Profile;

/// Default relative mass allowed to be dropped when truncating infinite tails.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
/// Default minimum number of cells the look-ahead length must span.
pub const DEFAULT_MIN_CELLS_PER_EPS: usize = 8;
/// Hard cap on the number of discrete weights.
pub const MAX_WEIGHT_CELLS: usize = 1_000_000;
/// Sub-samples per cell for midpoint quadrature of non-closed-form densities.
const MIDPOINT_SUBSAMPLES: usize = 32;

/// Supported kernel shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(x)` on the non-positive half-line. Infinite support, convex.
    Exponential,
    /// Indicator of `(-1, 0)`. Finite support, not convex.
    Uniform,
    /// Triangular ramp `(2 / a^2) (a + x)` on `[-a, 0]`. Convex.
    PiecewiseLinear,
    /// Linear interpolation of a user-supplied sample table.
    Custom,
}

/// Description of a kernel density before discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Length of the support; `None` for infinite tails.
    pub support_radius: Option<f64>,
    /// Whether the density is convex on the non-positive half-line.
    pub is_convex: bool,
    /// Left limit of the density at zero (its supremum).
    pub left_limit_at_zero: f64,
    /// Sample table `(xi, eta(xi))` for the `Custom` family, sorted by `xi`,
    /// ending exactly at `xi = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<(f64, f64)>>,
}

impl KernelSpec {
    pub fn exponential() -> Self {
        KernelSpec {
            family: KernelFamily::Exponential,
            support_radius: None,
            is_convex: true,
            left_limit_at_zero: 1.0,
            table: None,
        }
    }

    pub fn uniform() -> Self {
        KernelSpec {
            family: KernelFamily::Uniform,
            support_radius: Some(1.0),
            is_convex: false,
            left_limit_at_zero: 1.0,
            table: None,
        }
    }

    pub fn piecewise_linear(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidKernel(format!("ramp radius must be positive, got {radius}")));
        }
        Ok(KernelSpec {
            family: KernelFamily::PiecewiseLinear,
            support_radius: Some(radius),
            is_convex: true,
            left_limit_at_zero: 2.0 / radius,
            table: None,
        })
    }

    /// Kernel interpolating `(xi, eta(xi))` samples. The table must be sorted,
    /// start at negative `xi`, end exactly at `xi = 0`, and carry unit mass.
    pub fn custom(table: Vec<(f64, f64)>, is_convex: bool) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::InvalidKernel("custom table needs at least two samples".into()));
        }
        for pair in table.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::InvalidKernel("custom table must be strictly increasing in xi".into()));
            }
        }
        let first = table[0];
        let last = *table.last().unwrap();
        if last.0 != 0.0 {
            return Err(Error::InvalidKernel(format!(
                "custom table must end at xi = 0, ends at {}",
                last.0
            )));
        }
        if !(first.0 < 0.0) {
            return Err(Error::InvalidKernel("custom table must start at negative xi".into()));
        }
        if table.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidKernel("custom table contains non-finite entries".into()));
        }
        Ok(KernelSpec {
            family: KernelFamily::Custom,
            support_radius: Some(-first.0),
            is_convex,
            left_limit_at_zero: last.1,
            table: Some(table),
        })
    }

    /// Density value at `xi`.
    pub fn density(&self, xi: f64) -> f64 {
        if xi > 0.0 {
            return 0.0;
        }
        match self.family {
            KernelFamily::Exponential => xi.exp(),
            KernelFamily::Uniform => {
                // Closed at both ends so the boundary samples report the
                // one-sided limits; single points carry no mass.
                if xi >= -1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelFamily::PiecewiseLinear => {
                let a = self.support_radius.expect("ramp has a radius");
                if xi >= -a {
                    (2.0 / (a * a)) * (a + xi)
                } else {
                    0.0
                }
            }
            KernelFamily::Custom => {
                let table = self.table.as_ref().expect("custom kernel has a table");
                let first = table[0].0;
                if xi < first {
                    return 0.0;
                }
                match table.binary_search_by(|probe| probe.0.partial_cmp(&xi).unwrap()) {
                    Ok(i) => table[i].1,
                    Err(i) => {
                        let (x0, v0) = table[i - 1];
                        let (x1, v1) = table[i];
                        v0 + (v1 - v0) * (xi - x0) / (x1 - x0)
                    }
                }
            }
        }
    }

    /// Mass of the density. Closed form where available, exact trapezoid of
    /// the interpolant for tables.
    pub fn mass(&self) -> f64 {
        match self.family {
            KernelFamily::Exponential | KernelFamily::Uniform | KernelFamily::PiecewiseLinear => 1.0,
            KernelFamily::Custom => {
                let table = self.table.as_ref().expect("custom kernel has a table");
                table
                    .windows(2)
                    .map(|p| 0.5 * (p[0].1 + p[1].1) * (p[1].0 - p[0].0))
                    .sum()
            }
        }
    }

    /// First absolute moment `integral |eta(xi) xi| d xi` of the unscaled
    /// density; scales linearly with the look-ahead length.
    pub fn first_moment(&self) -> f64 {
        match self.family {
            KernelFamily::Exponential => 1.0,
            KernelFamily::Uniform => 0.5,
            KernelFamily::PiecewiseLinear => self.support_radius.expect("radius") / 3.0,
            KernelFamily::Custom => {
                // Exact moment of the piecewise-linear interpolant.
                let table = self.table.as_ref().expect("table");
                table
                    .windows(2)
                    .map(|p| {
                        let (x0, v0) = p[0];
                        let (x1, v1) = p[1];
                        let h = x1 - x0;
                        // integral of -(v0 + s (v1 - v0)/h)(x0 + s) ds over [0, h]
                        -(v0 * (x0 * h + h * h / 2.0)
                            + (v1 - v0) * (x0 * h / 2.0 + h * h / 3.0))
                    })
                    .sum()
            }
        }
    }

    /// Distance beyond which the scaled density carries at most `tail_tol`
    /// mass. Used for domain padding.
    pub fn reach(&self, epsilon: f64, tail_tol: f64) -> f64 {
        match self.support_radius {
            Some(r) => epsilon * r,
            None => epsilon * (1.0 / tail_tol).ln(),
        }
    }
}

/// Result of checking one admissibility condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub passed: bool,
    /// Location and magnitude of the worst violation, when one exists.
    pub worst: Option<(f64, f64)>,
}

/// Outcome of [`validate_kernel`]: one entry per admissibility condition plus
/// the convexity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    /// All conditions required for this spec hold (convexity only when the
    /// spec claims it).
    pub fn passed(&self, spec: &KernelSpec) -> bool {
        self.checks.iter().all(|c| c.passed || (c.name == "midpoint_convexity" && !spec.is_convex))
    }

    pub fn check(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the admissibility conditions of a kernel density on a sample
/// lattice: finiteness, support on the non-positive half-line, nonnegativity,
/// monotone growth toward zero, unit mass, and midpoint convexity.
pub fn validate_kernel(spec: &KernelSpec) -> Result<ValidationReport> {
    let radius = match spec.support_radius {
        Some(r) => r,
        None => (1e12f64).ln(), // tail below 1e-12 beyond this for the exponential
    };
    let lattice_left = -1.25 * radius;
    let n = 801usize;
    // Anchor the last sample at exactly zero: overshooting into xi > 0 by a
    // rounding error would read the density outside its support.
    let xs: Vec<f64> = (0..n)
        .map(|i| lattice_left * (n - 1 - i) as f64 / (n - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| spec.density(x)).collect();

    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidKernel("density not finite on sample lattice".into()));
    }

    let mut checks = Vec::new();

    checks.push(ConditionCheck {
        name: "integrable_and_bounded".into(),
        passed: vals.iter().all(|v| v.is_finite()) && spec.mass().is_finite(),
        worst: None,
    });

    // Support must avoid the positive half-line.
    let mut worst_support: Option<(f64, f64)> = None;
    for i in 1..=200 {
        let x = i as f64 * (radius / 200.0);
        let v = spec.density(x);
        if v > 0.0 && worst_support.map_or(true, |(_, w)| v > w) {
            worst_support = Some((x, v));
        }
    }
    checks.push(ConditionCheck {
        name: "supported_on_nonpositive".into(),
        passed: worst_support.is_none(),
        worst: worst_support,
    });

    let mut worst_neg: Option<(f64, f64)> = None;
    for (&x, &v) in xs.iter().zip(&vals) {
        if v < -1e-12 && worst_neg.map_or(true, |(_, w)| -v > w) {
            worst_neg = Some((x, -v));
        }
    }
    checks.push(ConditionCheck {
        name: "nonnegative".into(),
        passed: worst_neg.is_none(),
        worst: worst_neg,
    });

    let scale = spec.left_limit_at_zero.abs().max(1.0);
    let mut worst_decrease: Option<(f64, f64)> = None;
    for i in 1..n {
        let drop = vals[i - 1] - vals[i];
        if drop > 1e-12 * scale && worst_decrease.map_or(true, |(_, w)| drop > w) {
            worst_decrease = Some((xs[i], drop));
        }
    }
    checks.push(ConditionCheck {
        name: "nondecreasing_toward_zero".into(),
        passed: worst_decrease.is_none(),
        worst: worst_decrease,
    });

    let mass = spec.mass();
    checks.push(ConditionCheck {
        name: "unit_mass".into(),
        passed: (mass - 1.0).abs() <= 1e-12,
        worst: if (mass - 1.0).abs() <= 1e-12 { None } else { Some((0.0, (mass - 1.0).abs())) },
    });

    // Midpoint convexity over same-parity lattice pairs.
    let mut worst_convex: Option<(f64, f64)> = None;
    for i in 0..n {
        for j in (i + 2..n).step_by(2) {
            let mid = (i + j) / 2;
            let excess = vals[mid] - 0.5 * (vals[i] + vals[j]);
            if excess > 1e-12 * scale && worst_convex.map_or(true, |(_, w)| excess > w) {
                worst_convex = Some((xs[mid], excess));
            }
        }
    }
    checks.push(ConditionCheck {
        name: "midpoint_convexity".into(),
        passed: worst_convex.is_none(),
        worst: worst_convex,
    });

    Ok(ValidationReport { checks })
}

/// Grid discretization of a scaled kernel: `weights[k]` is the cell average
/// of `eta_eps` over the k-th cell to the right of the evaluation point,
/// renormalized so the weights sum to one exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteKernel {
    pub spec: KernelSpec,
    pub epsilon: f64,
    pub cell_width: f64,
    pub weights: Vec<f64>,
    /// Mass dropped by tail truncation before renormalization.
    pub truncation_mass: f64,
}

/// Tunable limits for [`discretize_with`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretizeOpts {
    pub tail_tol: f64,
    pub min_cells_per_eps: usize,
    pub max_cells: usize,
}

impl Default for DiscretizeOpts {
    fn default() -> Self {
        DiscretizeOpts {
            tail_tol: DEFAULT_TAIL_TOL,
            min_cells_per_eps: DEFAULT_MIN_CELLS_PER_EPS,
            max_cells: MAX_WEIGHT_CELLS,
        }
    }
}

/// [`discretize_with`] under default limits.
pub fn discretize(spec: &KernelSpec, epsilon: f64, cell_width: f64) -> Result<DiscreteKernel> {
    discretize_with(spec, epsilon, cell_width, DiscretizeOpts::default())
}

/// Turns a kernel spec into per-cell weights for look-ahead length `epsilon`
/// on cells of width `cell_width`. Closed-form cell integrals are used for
/// the uniform and exponential families, composite midpoint quadrature
/// otherwise. Infinite tails are cut once the remaining mass drops below
/// `tail_tol`, then the weights are renormalized to unit sum.
pub fn discretize_with(
    spec: &KernelSpec,
    epsilon: f64,
    cell_width: f64,
    opts: DiscretizeOpts,
) -> Result<DiscreteKernel> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Domain(format!("look-ahead length must be positive, got {epsilon}")));
    }
    if !(cell_width.is_finite() && cell_width > 0.0) {
        return Err(Error::Grid(format!("cell width must be positive, got {cell_width}")));
    }
    let report = validate_kernel(spec)?;
    if !report.passed(spec) {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed && (c.name != "midpoint_convexity" || spec.is_convex))
            .map(|c| c.name.as_str())
            .collect();
        return Err(Error::InvalidKernel(format!("conditions failed: {}", failed.join(", "))));
    }
    if epsilon < opts.min_cells_per_eps as f64 * cell_width * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "look-ahead length {epsilon} spans fewer than {} cells of width {cell_width}",
            opts.min_cells_per_eps
        )));
    }

    // r = cell width in units of the look-ahead length.
    let r = cell_width / epsilon;
    let m = match spec.family {
        KernelFamily::Exponential => {
            let cells = ((1.0 / opts.tail_tol).ln() / r).ceil();
            if cells > opts.max_cells as f64 {
                return Err(Error::Truncation(format!(
                    "exponential tail needs {cells} cells, cap is {}",
                    opts.max_cells
                )));
            }
            cells as usize
        }
        _ => {
            let radius = spec.support_radius.expect("finite support");
            let cells = (radius / r).ceil();
            if cells > opts.max_cells as f64 {
                return Err(Error::Truncation(format!(
                    "support needs {cells} cells, cap is {}",
                    opts.max_cells
                )));
            }
            cells as usize
        }
    };

    // Mirrored density g(s) = eta(-s) integrated over [k r, (k+1) r].
    let mut weights = Vec::with_capacity(m);
    match spec.family {
        KernelFamily::Uniform => {
            for k in 0..m {
                let lo = (k as f64 * r).min(1.0);
                let hi = ((k + 1) as f64 * r).min(1.0);
                weights.push(hi - lo);
            }
        }
        KernelFamily::Exponential => {
            // exp(-k r) - exp(-(k+1) r), evaluated in factored form.
            let decay = (-r).exp();
            let mut front = 1.0 - decay;
            for _ in 0..m {
                weights.push(front * 1.0);
                front *= decay;
            }
        }
        KernelFamily::PiecewiseLinear | KernelFamily::Custom => {
            let sub = MIDPOINT_SUBSAMPLES as f64;
            for k in 0..m {
                let mut acc = 0.0;
                for s in 0..MIDPOINT_SUBSAMPLES {
                    let sigma = k as f64 * r + (s as f64 + 0.5) * r / sub;
                    acc += spec.density(-sigma);
                }
                weights.push(acc * r / sub);
            }
        }
    }

    let raw_sum: f64 = weights.iter().sum();
    if !(raw_sum > 0.0) {
        return Err(Error::InvalidKernel("discretized weights carry no mass".into()));
    }
    let truncation_mass = (1.0 - raw_sum).max(0.0);
    for w in &mut weights {
        *w /= raw_sum;
    }
    // Nudge the largest weight until the floating-point sum is exactly one.
    for _ in 0..4 {
        let s: f64 = weights.iter().sum();
        if s == 1.0 {
            break;
        }
        let imax = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        weights[imax] += 1.0 - s;
    }

    Ok(DiscreteKernel {
        spec: spec.clone(),
        epsilon,
        cell_width,
        weights,
        truncation_mass,
    })
}

impl DiscreteKernel {
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let ra = ca.remainder();
    let rb = cb.remainder();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// Forward weighted average `w_j = sum_k gamma_k u_{j+k}`, with the profile
/// extended by its right far-field state. Entry `j` is the average anchored
/// at the left edge of cell `j`.
pub fn convolve(u: &Profile, dk: &DiscreteKernel) -> Result<Profile> {
    let dx = u.grid.cell_width;
    if (dk.cell_width - dx).abs() > 1e-9 * dx {
        return Err(Error::Grid(format!(
            "kernel discretized for cell width {}, profile uses {}",
            dk.cell_width, dx
        )));
    }
    let n = u.len();
    let m = dk.n_cells();
    let br = u.grid.boundary_right;
    // suffix[k] = sum of weights from k on; closes the window over the far field.
    let mut suffix = vec![0.0f64; m + 1];
    for k in (0..m).rev() {
        suffix[k] = suffix[k + 1] + dk.weights[k];
    }
    let mut w = vec![0.0f64; n];
    for j in 0..n {
        let t = m.min(n - j);
        w[j] = dot(&dk.weights[..t], &u.values[j..j + t]) + suffix[t] * br;
    }
    Profile::new(u.grid, w)
}

/// Exact spatial slope of the forward average for the *uniform* window:
/// `(u(x + eps) - u(x)) / eps` per cell. Requires the look-ahead length to be
/// an integer number of cells. Serves as an independent oracle for
/// [`convolve`]: the forward difference of the convolution output must match
/// this profile cell by cell.
pub fn uniform_dx_w(u: &Profile, epsilon: f64) -> Result<Profile> {
    let dx = u.grid.cell_width;
    let ratio = epsilon / dx;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 || k < 1.0 {
        return Err(Error::Grid(format!(
            "look-ahead length {epsilon} is not a positive integer multiple of cell width {dx}"
        )));
    }
    let k = k as usize;
    let n = u.len();
    let br = u.grid.boundary_right;
    let values = (0..n)
        .map(|j| {
            let ahead = if j + k < n { u.values[j + k] } else { br };
            (ahead - u.values[j]) / epsilon
        })
        .collect();
    let grid = crate::grid::Grid1D { boundary_left: 0.0, boundary_right: 0.0, ..u.grid };
    Profile::new(grid, values)
}
