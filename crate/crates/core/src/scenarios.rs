//! Initial data used by the experiments: two-rectangle blocks, nested
//! multiscale families that drive the variation of the look-ahead average
//! upward, and standard Riemann / ramp / random bounded-variation data.
//!
//! All constructions are exact: data are represented as piecewise-constant
//! functions with explicit breakpoints and sampled onto grids by exact cell
//! averages, so stated total variations hold to round-off.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Profile};

/// A piecewise-constant function on the line: `levels[i]` on
/// `(breakpoints[i-1], breakpoints[i])`, with `levels[0]` before the first
/// breakpoint and `levels.last()` after the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::Domain(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        for pair in breakpoints.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::Domain("breakpoints must be strictly increasing".into()));
            }
        }
        Ok(PiecewiseConstant { breakpoints, levels })
    }

    pub fn constant(level: f64) -> Self {
        PiecewiseConstant { breakpoints: vec![], levels: vec![level] }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b <= x);
        self.levels[i]
    }

    pub fn far_left(&self) -> f64 {
        self.levels[0]
    }

    pub fn far_right(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// `sum |level_{i+1} - level_i|`; exact because the representation is.
    pub fn total_variation(&self) -> f64 {
        self.levels.windows(2).map(|p| (p[1] - p[0]).abs()).sum()
    }

    /// Pointwise sum of two piecewise-constant functions.
    pub fn add(&self, other: &PiecewiseConstant) -> PiecewiseConstant {
        let mut breakpoints: Vec<f64> =
            self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        let mut levels = Vec::with_capacity(breakpoints.len() + 1);
        // Evaluate on each open interval; breakpoint values are irrelevant
        // for cell averages.
        let probe_before = breakpoints.first().map_or(0.0, |b| b - 1.0);
        levels.push(self.value_at(probe_before) + other.value_at(probe_before));
        for i in 0..breakpoints.len() {
            let probe = match breakpoints.get(i + 1) {
                Some(next) => 0.5 * (breakpoints[i] + next),
                None => breakpoints[i] + 1.0,
            };
            levels.push(self.value_at(probe) + other.value_at(probe));
        }
        PiecewiseConstant { breakpoints, levels }
    }

    /// Exact average over `[a, b]`.
    pub fn average(&self, a: f64, b: f64) -> f64 {
        debug_assert!(b > a);
        let mut acc = 0.0;
        let mut left = a;
        let start = self.breakpoints.partition_point(|&bp| bp <= a);
        for i in start..self.breakpoints.len() {
            let bp = self.breakpoints[i];
            if bp >= b {
                break;
            }
            acc += (bp - left) * self.levels[i];
            left = bp;
        }
        let i = self.breakpoints.partition_point(|&bp| bp < b);
        acc += (b - left) * self.levels[i];
        acc / (b - a)
    }

    /// Exact cell averages on `grid`; the profile's far-field states are set
    /// to the function's own far values.
    pub fn to_profile(&self, grid: &Grid1D) -> Result<Profile> {
        let grid = Grid1D::new(
            grid.x_left,
            grid.cell_width,
            grid.n_cells,
            self.far_left(),
            self.far_right(),
        )?;
        let values = (0..grid.n_cells)
            .map(|j| self.average(grid.x_edge(j), grid.x_edge(j + 1)))
            .collect();
        Profile::new(grid, values)
    }
}

/// Two rectangles of height `h` and width `ell`, sitting at distances
/// `2 ell` and `6 ell` behind the origin. The gap between them equals the
/// look-ahead length when `eps = 4 ell`, which is what makes the pair
/// interact through the forward average.
pub fn building_block(h: f64, ell: f64) -> Result<PiecewiseConstant> {
    if !(0.0 < h && h <= 1.0) {
        return Err(Error::Domain(format!("block height must lie in (0, 1], got {h}")));
    }
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::Domain(format!("block width must be positive, got {ell}")));
    }
    PiecewiseConstant::new(
        vec![-7.0 * ell, -6.0 * ell, -3.0 * ell, -2.0 * ell],
        vec![0.0, h, 0.0, h, 0.0],
    )
}

/// A nested family of two-rectangle blocks plus a fully congested half-line
/// ahead. Block `n` is tuned to look-ahead length `epsilons[n]` via
/// `ell_n = epsilons[n] / 4`; successive scales must shrink by at least 16
/// so the blocks stay disjoint and non-interacting across scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub epsilons: Vec<f64>,
    pub heights: Vec<f64>,
}

impl CounterexampleSpec {
    pub fn new(epsilons: Vec<f64>, heights: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() || epsilons.len() != heights.len() {
            return Err(Error::Domain(
                "need one height per scale and at least one scale".into(),
            ));
        }
        for (n, pair) in epsilons.windows(2).enumerate() {
            if !(pair[1] <= pair[0] / 16.0 * (1.0 + 1e-12)) {
                return Err(Error::Scale(format!(
                    "scale {} must shrink by at least 16: {} after {}",
                    n + 2,
                    pair[1],
                    pair[0]
                )));
            }
        }
        for (n, &h) in heights.iter().enumerate() {
            if !(0.0 < h && h <= 1.0) {
                return Err(Error::Domain(format!("height {} of block {} outside (0, 1]", h, n + 1)));
            }
            if h == 1.0 {
                log::warn!("block {} saturates the density bound (h = 1)", n + 1);
            }
        }
        if epsilons.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
            return Err(Error::Domain("scales must be positive".into()));
        }
        Ok(CounterexampleSpec { epsilons, heights })
    }

    /// The default family: `epsilons[n] = eps1 / 16^n`, `heights[n] = 2^-(n+1)`.
    pub fn with_defaults(n_blocks: usize, eps1: f64) -> Result<Self> {
        let epsilons = (0..n_blocks).map(|n| eps1 / 16f64.powi(n as i32)).collect();
        let heights = (0..n_blocks).map(|n| 0.5f64.powi(n as i32 + 1)).collect();
        CounterexampleSpec::new(epsilons, heights)
    }

    pub fn n_blocks(&self) -> usize {
        self.epsilons.len()
    }

    pub fn ell(&self, n: usize) -> f64 {
        self.epsilons[n] / 4.0
    }

    /// Exact total variation of the datum: four jumps of `h_n` per block
    /// plus the unit step ahead.
    pub fn tv_initial(&self) -> f64 {
        4.0 * self.heights.iter().sum::<f64>() + 1.0
    }

    /// The datum as a piecewise-constant function: all blocks plus the
    /// congested half-line `u = 1` on `x > 0`.
    pub fn datum(&self) -> Result<PiecewiseConstant> {
        let mut acc = PiecewiseConstant::new(vec![0.0], vec![0.0, 1.0])?;
        for n in 0..self.n_blocks() {
            acc = acc.add(&building_block(self.heights[n], self.ell(n))?);
        }
        Ok(acc)
    }
}

/// Samples a nested block family onto a grid. The grid must resolve the
/// finest block (`dx <= ell_min / 16`) and cover `[-8 ell_1, 0]`; the
/// profile's far fields are empty road behind and full congestion ahead.
pub fn counterexample_datum(spec: &CounterexampleSpec, grid: &Grid1D) -> Result<Profile> {
    let finest = spec.ell(spec.n_blocks() - 1);
    if grid.cell_width > finest / 16.0 * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!(
            "cell width {} does not resolve block {} (need <= {})",
            grid.cell_width,
            spec.n_blocks(),
            finest / 16.0
        )));
    }
    let ell1 = spec.ell(0);
    if grid.x_left > -8.0 * ell1 || grid.x_right() <= 0.0 {
        return Err(Error::Grid(format!(
            "grid [{}, {}] must cover [-8 ell_1, 0] = [{}, 0]",
            grid.x_left,
            grid.x_right(),
            -8.0 * ell1
        )));
    }
    spec.datum()?.to_profile(grid)
}

/// One two-rectangle block plus the congested half-line, with the scales
/// separated so each of the four slope bumps of the forward average stays
/// isolated: requires `ell > max(eps + delta, 2 eps)`. When `delta > 0` a
/// saturated stretch `u = 1` on `(-delta, 0)` is added.
pub fn isolated_block_datum(h: f64, ell: f64, epsilon: f64, delta: f64) -> Result<PiecewiseConstant> {
    if delta < 0.0 {
        return Err(Error::Domain(format!("perturbation width must be nonnegative, got {delta}")));
    }
    if !(ell > (epsilon + delta).max(2.0 * epsilon)) {
        return Err(Error::Scale(format!(
            "need ell > max(eps + delta, 2 eps): ell = {ell}, eps = {epsilon}, delta = {delta}"
        )));
    }
    let mut acc = building_block(h, ell)?.add(&PiecewiseConstant::new(vec![0.0], vec![0.0, 1.0])?);
    if delta > 0.0 {
        acc = acc.add(&PiecewiseConstant::new(vec![-delta, 0.0], vec![0.0, 1.0, 0.0])?);
    }
    Ok(acc)
}

/// Families of standard initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StandardKind {
    /// Jump from `left` to `right` at the origin.
    Riemann { left: f64, right: f64 },
    /// Linear ramp from 0 to 1 across `[a, b]`, exactly cell averaged.
    MonotoneRamp { a: f64, b: f64 },
    /// `n_jumps` jumps at distinct random cell edges inside `span`, levels
    /// drawn uniformly from `[0, 1)`. Bit-reproducible for a given seed.
    RandomBv { seed: u64, n_jumps: usize, span: (f64, f64) },
}

/// Builds a standard datum on `grid`. Far-field states are taken from the
/// datum itself; all values lie in `[0, 1]`.
pub fn standard_datum(kind: &StandardKind, grid: &Grid1D) -> Result<Profile> {
    match *kind {
        StandardKind::Riemann { left, right } => {
            for v in [left, right] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Domain(format!("state {v} outside [0, 1]")));
                }
            }
            PiecewiseConstant::new(vec![0.0], vec![left, right])?.to_profile(grid)
        }
        StandardKind::MonotoneRamp { a, b } => {
            if !(b > a) {
                return Err(Error::Domain(format!("ramp needs a < b, got [{a}, {b}]")));
            }
            // Antiderivative of clamp((x - a)/(b - a), 0, 1).
            let anti = |x: f64| -> f64 {
                if x <= a {
                    0.0
                } else if x <= b {
                    (x - a) * (x - a) / (2.0 * (b - a))
                } else {
                    (x - b) + (b - a) / 2.0
                }
            };
            let grid = Grid1D::new(grid.x_left, grid.cell_width, grid.n_cells, 0.0, 1.0)?;
            let values = (0..grid.n_cells)
                .map(|j| {
                    let (l, r) = (grid.x_edge(j), grid.x_edge(j + 1));
                    (anti(r) - anti(l)) / (r - l)
                })
                .collect();
            Profile::new(grid, values)
        }
        StandardKind::RandomBv { seed, n_jumps, span } => {
            let (a, b) = span;
            if !(b > a) || a < grid.x_left || b > grid.x_right() {
                return Err(Error::Grid(format!(
                    "span [{a}, {b}] must be nonempty and inside the grid"
                )));
            }
            let lo = ((a - grid.x_left) / grid.cell_width).ceil() as usize;
            let hi = ((b - grid.x_left) / grid.cell_width).floor() as usize;
            let candidates: Vec<usize> = (lo.max(1)..=hi.min(grid.n_cells - 1)).collect();
            if candidates.len() < n_jumps {
                return Err(Error::Resolution(format!(
                    "span offers {} interior edges, need {n_jumps}",
                    candidates.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let picked = rand::seq::index::sample(&mut rng, candidates.len(), n_jumps);
            let mut edges: Vec<usize> = picked.iter().map(|i| candidates[i]).collect();
            edges.sort_unstable();
            let levels: Vec<f64> =
                (0..=n_jumps).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
            let grid =
                Grid1D::new(grid.x_left, grid.cell_width, grid.n_cells, levels[0], levels[n_jumps])?;
            let mut values = vec![0.0; grid.n_cells];
            let mut seg = 0usize;
            for (j, v) in values.iter_mut().enumerate() {
                while seg < edges.len() && j >= edges[seg] {
                    seg += 1;
                }
                *v = levels[seg];
            }
            Profile::new(grid, values)
        }
    }
}
