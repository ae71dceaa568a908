//! Shared fixtures for the integration suites: data builders, padded grids,
//! per-run audit rows, and the slope-oracle helpers used by more than one
//! test binary.
#![allow(dead_code)]

use nonlocal_lwr::grid::Grid1D;
use nonlocal_lwr::kernel::{convolve, discretize, uniform_dx_w, KernelSpec, DEFAULT_TAIL_TOL};
use nonlocal_lwr::nonlocal::NonlocalRun;
use nonlocal_lwr::scenarios::{building_block, standard_datum, PiecewiseConstant, StandardKind};
use nonlocal_lwr::velocity::VelocityModel;

pub fn greenshields() -> VelocityModel {
    VelocityModel::greenshields()
}

/// Empty road behind `x = 0`, fully congested ahead.
pub fn unit_step() -> PiecewiseConstant {
    PiecewiseConstant::new(vec![0.0], vec![0.0, 1.0]).unwrap()
}

/// A two-rectangle block of height `h` at scale `ell` with the congested
/// half-line ahead of it.
pub fn block_plus_step(h: f64, ell: f64) -> PiecewiseConstant {
    building_block(h, ell).unwrap().add(&unit_step())
}

/// Evenly spaced times `0, t_end/k, ..., t_end`.
pub fn ladder(t_end: f64, k: usize) -> Vec<f64> {
    (0..=k).map(|i| t_end * i as f64 / k as f64).collect()
}

/// Grid that covers the feature window padded by the look-ahead reach on
/// both sides (the forward average reads that far ahead, and smeared tails
/// extend that far past a front) plus the forward sweep of the fastest wave.
pub fn padded_grid(kernel: &KernelSpec, epsilon: f64, dx: f64, features: (f64, f64), t_end: f64) -> Grid1D {
    let reach = kernel.reach(epsilon, DEFAULT_TAIL_TOL);
    let left = features.0 - reach - 0.25;
    let right = features.1 + t_end + reach + 0.25;
    Grid1D::covering(left, right, dx, 0.0, 0.0).expect("padded grid")
}

/// Summary row kept for every solver run in a suite, so global bound and
/// bookkeeping checks can sweep the whole set at the end.
#[derive(Debug, Clone)]
pub struct RunAudit {
    pub label: String,
    pub t_end: f64,
    pub tv_u0: f64,
    pub tv_w0: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_w: f64,
    pub max_w: f64,
    pub mass_residual: f64,
}

pub fn audit(label: impl Into<String>, run: &NonlocalRun) -> RunAudit {
    RunAudit {
        label: label.into(),
        t_end: run.t_end,
        tv_u0: run.steps[0].tv_u,
        tv_w0: run.steps[0].tv_w,
        min_u: run.min_seen,
        max_u: run.max_seen,
        min_w: run.w_min_seen,
        max_w: run.w_max_seen,
        mass_residual: run.ledger.balance_residual(run.final_mass()),
    }
}

/// Worst deviation between the forward difference of the convolution output
/// and the closed-form uniform-window slope, over seeded random data. The
/// two sides are computed by independent code paths; for an integer
/// cell/window ratio they agree to round-off.
pub fn uniform_slope_identity_worst_dev(seeds: std::ops::Range<u64>) -> f64 {
    let dx = 1.0 / 32.0;
    let eps = 0.25;
    let grid = Grid1D::covering(-2.0, 2.0, dx, 0.0, 0.0).expect("grid");
    let dk = discretize(&KernelSpec::uniform(), eps, dx).expect("uniform weights");
    let mut worst = 0.0_f64;
    for seed in seeds {
        let kind = StandardKind::RandomBv { seed, n_jumps: 12, span: (-1.5, 1.5) };
        let u0 = standard_datum(&kind, &grid).expect("datum");
        let w = convolve(&u0, &dk).expect("convolve");
        let oracle = uniform_dx_w(&u0, eps).expect("slope oracle");
        for j in 0..u0.len() - 1 {
            let fd = (w.values[j + 1] - w.values[j]) / dx;
            worst = worst.max((fd - oracle.values[j]).abs());
        }
    }
    worst
}

/// One branch of the matched-scale slope table: the expected plateau of the
/// forward-average slope on an open interval, and the worst deviation over
/// every grid cell whose window sits inside that interval.
#[derive(Debug, Clone)]
pub struct BranchCheck {
    pub lo: f64,
    pub hi: f64,
    pub expected: f64,
    pub worst_dev: f64,
    pub cells: usize,
}

/// Slope table of the forward average for the block-plus-step datum at the
/// matched scale (look-ahead = four block scales). Nine plateaus, checked
/// branch by branch with the closed-form uniform-window slope.
pub fn matched_scale_slope_table(h: f64) -> Vec<BranchCheck> {
    let ell = 0.25;
    let eps = 4.0 * ell;
    let dx = 1.0 / 128.0;
    let grid = Grid1D::covering(-3.25, 0.5, dx, 0.0, 1.0).expect("grid");
    let u0 = block_plus_step(h, ell).to_profile(&grid).expect("datum");
    let slopes = uniform_dx_w(&u0, eps).expect("slope oracle");
    let branches = [
        (grid.x_edge(0), -11.0 * ell, 0.0),
        (-11.0 * ell, -10.0 * ell, h / eps),
        (-10.0 * ell, -7.0 * ell, 0.0),
        (-7.0 * ell, -6.0 * ell, 0.0),
        (-6.0 * ell, -4.0 * ell, 0.0),
        (-4.0 * ell, -3.0 * ell, 1.0 / eps),
        (-3.0 * ell, -2.0 * ell, (1.0 - h) / eps),
        (-2.0 * ell, 0.0, 1.0 / eps),
        (0.0, grid.x_edge(grid.n_cells), 0.0),
    ];
    branches
        .iter()
        .map(|&(lo, hi, expected)| {
            let mut worst = 0.0_f64;
            let mut cells = 0;
            for j in 0..u0.len() {
                // The slope entry at edge j averages over [x_j, x_j + dx].
                if grid.x_edge(j) >= lo - 1e-12 && grid.x_edge(j + 1) <= hi + 1e-12 {
                    worst = worst.max((slopes.values[j] - expected).abs());
                    cells += 1;
                }
            }
            BranchCheck { lo, hi, expected, worst_dev: worst, cells }
        })
        .collect()
}

/// Largest absolute deviation across all branches of the slope table.
pub fn slope_table_worst(checks: &[BranchCheck]) -> f64 {
    checks.iter().map(|b| b.worst_dev).fold(0.0, f64::max)
}
