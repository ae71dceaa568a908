//! Uniform one-dimensional grids and cell-valued profiles.
//!
//! A [`Profile`] stores one value per cell together with constant far-field
//! states on both sides. Total variation and L1 distances are always taken
//! with respect to that constant extension, so a profile represents a
//! function of bounded variation on the whole line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing grids for compatibility.
const GRID_EQ_TOL: f64 = 1e-9;

/// A uniform grid of cells `[x_left + j*dx, x_left + (j+1)*dx)` with
/// far-field boundary states used for constant extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_left: f64,
    pub cell_width: f64,
    pub n_cells: usize,
    pub boundary_left: f64,
    pub boundary_right: f64,
}

impl Grid1D {
    pub fn new(
        x_left: f64,
        cell_width: f64,
        n_cells: usize,
        boundary_left: f64,
        boundary_right: f64,
    ) -> Result<Self> {
        if !(cell_width.is_finite() && cell_width > 0.0) {
            return Err(Error::Grid(format!("cell width must be positive, got {cell_width}")));
        }
        if n_cells < 2 {
            return Err(Error::Grid(format!("need at least 2 cells, got {n_cells}")));
        }
        if !x_left.is_finite() {
            return Err(Error::Grid(format!("x_left must be finite, got {x_left}")));
        }
        for (name, b) in [("boundary_left", boundary_left), ("boundary_right", boundary_right)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Grid(format!("{name} must lie in [0, 1], got {b}")));
            }
        }
        Ok(Self { x_left, cell_width, n_cells, boundary_left, boundary_right })
    }

    /// Smallest grid with edges on multiples of `dx` (relative to x = 0)
    /// whose interior covers `[a, b]`.
    pub fn covering(a: f64, b: f64, dx: f64, boundary_left: f64, boundary_right: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Grid(format!("empty cover requested: [{a}, {b}]")));
        }
        let left_index = (a / dx).floor();
        let x_left = left_index * dx;
        let n = ((b - x_left) / dx).ceil().max(2.0) as usize;
        Grid1D::new(x_left, dx, n, boundary_left, boundary_right)
    }

    #[inline]
    pub fn x_edge(&self, j: usize) -> f64 {
        self.x_left + j as f64 * self.cell_width
    }

    #[inline]
    pub fn x_center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.cell_width
    }

    #[inline]
    pub fn x_right(&self) -> f64 {
        self.x_edge(self.n_cells)
    }

    /// Index of the cell containing `x`, if inside the domain.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if x < self.x_left || x >= self.x_right() {
            return None;
        }
        let j = ((x - self.x_left) / self.cell_width).floor() as usize;
        Some(j.min(self.n_cells - 1))
    }

    /// True when the two grids describe the same cells and far fields.
    pub fn compatible_with(&self, other: &Grid1D) -> bool {
        let tol = GRID_EQ_TOL * self.cell_width;
        self.n_cells == other.n_cells
            && (self.x_left - other.x_left).abs() <= tol
            && (self.cell_width - other.cell_width).abs() <= GRID_EQ_TOL * self.cell_width
            && self.boundary_left == other.boundary_left
            && self.boundary_right == other.boundary_right
    }
}

/// Direction-split decomposition of the total variation: the net jump across
/// the domain plus twice the integral of the negative part of the slope
/// (jump transitions included, boundary transitions among them).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvDecomposition {
    pub jump_across: f64,
    pub negative_part: f64,
}

/// Cell values on a [`Grid1D`]. All values must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells {
            return Err(Error::Grid(format!(
                "value count {} does not match cell count {}",
                values.len(),
                grid.n_cells
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("profile contains non-finite value {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid1D, value: f64) -> Result<Self> {
        Profile::new(grid, vec![value; grid.n_cells])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of the piecewise-constant extension at `x` (far fields outside).
    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.grid.x_left {
            self.grid.boundary_left
        } else if x >= self.grid.x_right() {
            self.grid.boundary_right
        } else {
            self.values[self.grid.cell_of(x).expect("in range")]
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `dx * sum(values)`: the mass carried by the grid cells.
    pub fn mass(&self) -> f64 {
        self.grid.cell_width * self.values.iter().sum::<f64>()
    }

    /// Total variation of the constant extension:
    /// `|p_0 - bl| + sum |p_{j+1} - p_j| + |br - p_{n-1}|`.
    pub fn total_variation(&self) -> f64 {
        let mut tv = (self.values[0] - self.grid.boundary_left).abs();
        for pair in self.values.windows(2) {
            tv += (pair[1] - pair[0]).abs();
        }
        tv + (self.grid.boundary_right - self.values[self.len() - 1]).abs()
    }

    /// Splits the total variation as `tv = jump_across + 2 * negative_part`,
    /// with `jump_across = boundary_right - boundary_left` and
    /// `negative_part` the sum of all downward transitions (boundary
    /// transitions included). The identity holds exactly for every profile.
    pub fn tv_decomposition(&self) -> TvDecomposition {
        let mut neg = f64::max(0.0, -(self.values[0] - self.grid.boundary_left));
        for pair in self.values.windows(2) {
            neg += f64::max(0.0, -(pair[1] - pair[0]));
        }
        neg += f64::max(0.0, -(self.grid.boundary_right - self.values[self.len() - 1]));
        TvDecomposition {
            jump_across: self.grid.boundary_right - self.grid.boundary_left,
            negative_part: neg,
        }
    }

    /// L1 distance `dx * sum |p_j - q_j|` between profiles on one grid.
    pub fn l1_distance(&self, other: &Profile) -> Result<f64> {
        if !self.grid.compatible_with(&other.grid) {
            return Err(Error::Grid("L1 distance requires a shared grid".into()));
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(self.grid.cell_width * sum)
    }

    /// Exact integral of the piecewise-constant extension over `[a, b]`,
    /// with partial end cells weighted by their overlap.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let dx = self.grid.cell_width;
        let mut total = 0.0;
        // Far-field portions.
        if a < self.grid.x_left {
            total += (self.grid.x_left.min(b) - a) * self.grid.boundary_left;
        }
        if b > self.grid.x_right() {
            total += (b - self.grid.x_right().max(a)) * self.grid.boundary_right;
        }
        let lo = a.max(self.grid.x_left);
        let hi = b.min(self.grid.x_right());
        if hi <= lo {
            return total;
        }
        let j_lo = self.grid.cell_of(lo).expect("in range");
        // `hi` may sit exactly on the right edge.
        let j_hi = self.grid.cell_of(hi).unwrap_or(self.grid.n_cells - 1);
        if j_lo == j_hi {
            return total + (hi - lo) * self.values[j_lo];
        }
        total += (self.grid.x_edge(j_lo + 1) - lo) * self.values[j_lo];
        for j in j_lo + 1..j_hi {
            total += dx * self.values[j];
        }
        total += (hi - self.grid.x_edge(j_hi)) * self.values[j_hi];
        total
    }

    /// Copy shifted right by `m` cells (left for negative `m`), with far-field
    /// values filling the uncovered cells. Used to probe translation bounds.
    pub fn shifted_cells(&self, m: i64) -> Profile {
        let n = self.len() as i64;
        let values = (0..n)
            .map(|j| {
                let src = j - m;
                if src < 0 {
                    self.grid.boundary_left
                } else if src >= n {
                    self.grid.boundary_right
                } else {
                    self.values[src as usize]
                }
            })
            .collect();
        Profile { grid: self.grid, values }
    }

    /// Aggregates blocks of `factor` cells by averaging. The cell count must
    /// be divisible by `factor`. Used for self-convergence measurements.
    pub fn coarsened(&self, factor: usize) -> Result<Profile> {
        if factor == 0 || self.len() % factor != 0 {
            return Err(Error::Grid(format!(
                "cannot coarsen {} cells by factor {factor}",
                self.len()
            )));
        }
        let grid = Grid1D::new(
            self.grid.x_left,
            self.grid.cell_width * factor as f64,
            self.len() / factor,
            self.grid.boundary_left,
            self.grid.boundary_right,
        )?;
        let values = self
            .values
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect();
        Profile::new(grid, values)
    }
}

/// Padded spatial interval for a run: the feature span extended by the kernel
/// reach on the left and by `t_end * max_speed` plus the reach on the right,
/// so far fields stay exact over the whole horizon.
pub fn padded_domain(
    feature_left: f64,
    feature_right: f64,
    t_end: f64,
    max_speed: f64,
    reach: f64,
) -> (f64, f64) {
    (
        feature_left - reach,
        feature_right + t_end * max_speed + reach,
    )
}

/// L1 defect `|| p * k - p ||` between a profile and its look-ahead average.
/// Bounded by `epsilon * C * TV(p)` where `C` is the first absolute moment of
/// the kernel density.
pub fn mollify_defect(p: &Profile, dk: &crate::kernel::DiscreteKernel) -> Result<f64> {
    let smoothed = crate::kernel::convolve(p, dk)?;
    smoothed.l1_distance(p)
}
