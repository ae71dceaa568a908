//! JSON experiment configurations: schema, defaults, validation, labels.
//!
//! A config file is a single JSON object (see [`ExperimentConfig`]). Unknown
//! fields are rejected so typos surface as parse errors instead of silently
//! falling back to defaults. Validation never touches the filesystem, which
//! lets the runner guarantee that a bad config produces no artifacts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nonlocal_lwr::kernel::{validate_kernel, KernelSpec};
use nonlocal_lwr::local::RiemannSolution;
use nonlocal_lwr::scenarios::{
    counterexample_datum, isolated_block_datum, standard_datum, CounterexampleSpec, StandardKind,
};
use nonlocal_lwr::{Grid1D, Profile, VelocityModel};

use crate::error::{CliError, Result};

/// The five study kinds the runner can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Verdict: the variation of the forward average never rises above
    /// tolerance along any run of the sweep.
    TvMonotonicity,
    /// Verdict: the variation rise *is* observed (the monotonicity check is
    /// expected to fail) at every scale of the sweep.
    Counterexample,
    /// Verdict: the forward average converges to the exact sharp-interface
    /// solution at an acceptable fitted rate as the look-ahead shrinks.
    RateStudy,
    /// Verdict: the measured entropy-dissipation constant stays stable
    /// across the scale sweep.
    EntropyCheck,
    /// No verdict: one sweep of runs dumped as artifacts.
    SingleRun,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::TvMonotonicity,
        ExperimentKind::Counterexample,
        ExperimentKind::RateStudy,
        ExperimentKind::EntropyCheck,
        ExperimentKind::SingleRun,
    ];

    /// Directory-name form, identical to the config-file spelling.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::TvMonotonicity => "tv_monotonicity",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::RateStudy => "rate_study",
            ExperimentKind::EntropyCheck => "entropy_check",
            ExperimentKind::SingleRun => "single_run",
        }
    }
}

/// Initial-datum descriptor. Every variant produces exact cell averages on
/// whatever grid the runner sizes for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Single jump between two constant states at the origin.
    Riemann { left: f64, right: f64 },
    /// Linear ramp from 0 to 1 across `[a, b]`.
    MonotoneRamp { a: f64, b: f64 },
    /// Seeded piecewise-constant datum with `n_jumps` jumps inside `span`.
    /// Without an explicit seed the config-level `seed` is used.
    RandomBv {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_n_jumps")]
        n_jumps: usize,
        #[serde(default = "default_span")]
        span: (f64, f64),
    },
    /// Nested two-rectangle blocks tuned to the uniform look-ahead window;
    /// built to drive the variation of the forward average upward.
    Counterexample {
        #[serde(default = "default_n_blocks")]
        n_blocks: usize,
        #[serde(default = "default_eps1")]
        eps1: f64,
    },
    /// One isolated block ahead of a congested half-line, with an optional
    /// saturated notch of width `delta` at the origin.
    IsolatedBlock {
        h: f64,
        ell: f64,
        #[serde(default)]
        delta: f64,
    },
}

impl ScenarioSpec {
    /// Span of the datum's features (jumps and ramps), before any padding.
    pub fn features(&self) -> (f64, f64) {
        match self {
            ScenarioSpec::Riemann { .. } => (0.0, 0.0),
            ScenarioSpec::MonotoneRamp { a, b } => (*a, *b),
            ScenarioSpec::RandomBv { span, .. } => *span,
            ScenarioSpec::Counterexample { eps1, .. } => (-2.0 * eps1, 0.0),
            ScenarioSpec::IsolatedBlock { ell, delta, .. } => (-7.0 * ell - delta, 0.0),
        }
    }

    /// Cell width the datum itself requires, if any. The nested-block datum
    /// must resolve its finest rectangle, whatever `epsilon` the run uses.
    pub fn required_dx(&self) -> Option<f64> {
        match self {
            ScenarioSpec::Counterexample { n_blocks, eps1 } => {
                let ell_min = eps1 / 4.0 / 16f64.powi(*n_blocks as i32 - 1);
                Some(ell_min / 16.0)
            }
            _ => None,
        }
    }

    /// Exact cell averages on `grid`, resolving the scenario seed against
    /// the config-level default.
    pub fn datum(&self, grid: &Grid1D, epsilon: f64, default_seed: u64) -> Result<Profile> {
        let profile = match self {
            ScenarioSpec::Riemann { left, right } => {
                standard_datum(&StandardKind::Riemann { left: *left, right: *right }, grid)?
            }
            ScenarioSpec::MonotoneRamp { a, b } => {
                standard_datum(&StandardKind::MonotoneRamp { a: *a, b: *b }, grid)?
            }
            ScenarioSpec::RandomBv { seed, n_jumps, span } => standard_datum(
                &StandardKind::RandomBv {
                    seed: seed.unwrap_or(default_seed),
                    n_jumps: *n_jumps,
                    span: *span,
                },
                grid,
            )?,
            ScenarioSpec::Counterexample { n_blocks, eps1 } => {
                let spec = CounterexampleSpec::with_defaults(*n_blocks, *eps1)?;
                counterexample_datum(&spec, grid)?
            }
            ScenarioSpec::IsolatedBlock { h, ell, delta } => {
                isolated_block_datum(*h, *ell, epsilon, *delta)?.to_profile(grid)?
            }
        };
        Ok(profile)
    }
}

/// Look-ahead weight descriptor, built through the validating constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelChoice {
    /// `exp(-xi)` over the whole road ahead (convex).
    Exponential,
    /// Flat window of exactly one look-ahead length (not convex).
    Uniform,
    /// Triangular ramp hitting zero at `radius` look-ahead lengths (convex).
    PiecewiseLinear { radius: f64 },
    /// Linear interpolation of `(xi, density)` samples, sorted, starting at
    /// negative `xi` and ending at `xi = 0`, given inline as `table` or as a
    /// two-column CSV file via `table_csv` (exactly one of the two). Set
    /// `convex` only if the samples really are midpoint-convex.
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<(f64, f64)>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table_csv: Option<PathBuf>,
        #[serde(default)]
        convex: bool,
    },
}

impl KernelChoice {
    /// The sample table, reading the referenced CSV if that is the source.
    fn samples(table: &Option<Vec<(f64, f64)>>, csv: &Option<PathBuf>) -> Result<Vec<(f64, f64)>> {
        match (table, csv) {
            (Some(t), None) => Ok(t.clone()),
            (None, Some(p)) => read_xy_csv(p),
            (Some(_), Some(_)) => Err(CliError::Invalid(
                "custom kernel: give either table or table_csv, not both".into(),
            )),
            (None, None) => Err(CliError::Invalid(
                "custom kernel: give table or table_csv".into(),
            )),
        }
    }

    /// Inlines a CSV-sourced table so the descriptor no longer references
    /// any file; manifests embed the result.
    pub fn resolve(&mut self) -> Result<()> {
        if let KernelChoice::Custom { table, table_csv, .. } = self {
            if table_csv.is_some() {
                *table = Some(Self::samples(table, table_csv)?);
                *table_csv = None;
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<KernelSpec> {
        let spec = match self {
            KernelChoice::Exponential => KernelSpec::exponential(),
            KernelChoice::Uniform => KernelSpec::uniform(),
            KernelChoice::PiecewiseLinear { radius } => KernelSpec::piecewise_linear(*radius)?,
            KernelChoice::Custom { table, table_csv, convex } => {
                KernelSpec::custom(Self::samples(table, table_csv)?, *convex)?
            }
        };
        let report = validate_kernel(&spec)?;
        if !report.passed(&spec) {
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            return Err(CliError::Invalid(format!(
                "kernel fails admissibility checks: {}",
                failed.join(", ")
            )));
        }
        Ok(spec)
    }
}

/// Reads a two-column `x,y` CSV, tolerating one header line.
fn read_xy_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read table {}: {e}", path.display())))?;
    let bad = |line: usize, what: &str| {
        CliError::Invalid(format!("{}:{line}: {what}", path.display()))
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (a, b) = (fields.next().unwrap_or(""), fields.next().unwrap_or(""));
        if fields.next().is_some() {
            return Err(bad(i + 1, "expected exactly two columns"));
        }
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(x), Ok(y)) => rows.push((x, y)),
            _ if rows.is_empty() && i == 0 => {} // header
            _ => return Err(bad(i + 1, "cannot parse row as two numbers")),
        }
    }
    if rows.is_empty() {
        return Err(CliError::Invalid(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Speed-law descriptor.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityChoice {
    /// `V(w) = 1 - w`.
    #[default]
    Greenshields,
    /// Linear interpolation of a non-increasing `(w, V)` table over `[0, 1]`.
    Custom { table: Vec<(f64, f64)> },
}

impl VelocityChoice {
    pub fn build(&self) -> Result<VelocityModel> {
        Ok(match self {
            VelocityChoice::Greenshields => VelocityModel::greenshields(),
            VelocityChoice::Custom { table } => VelocityModel::custom(table.clone())?,
        })
    }
}

/// How the runner sizes grids. The default domain spans the scenario
/// features widened by the kernel reach, the wave travel over `[0, t_end]`,
/// and `padding` on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    /// Cells per look-ahead length: `dx = epsilon / cells_per_eps` unless
    /// `dx` is set. Scenarios with finer internal scales tighten the width
    /// further on their own.
    pub cells_per_eps: u32,
    /// Extra margin (in x units) added on both sides of the computed span.
    pub padding: f64,
    /// Fixed cell width, overriding `cells_per_eps` at every scale.
    pub dx: Option<f64>,
    /// Explicit domain override; both ends or neither.
    pub x_left: Option<f64>,
    pub x_right: Option<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { cells_per_eps: 32, padding: 0.25, dx: None, x_left: None, x_right: None }
    }
}

/// Snapshot times: an evenly spaced count over `[0, t_end]`, or an explicit
/// list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnapshotSchedule {
    Count { count: u32 },
    Times { times: Vec<f64> },
}

impl Default for SnapshotSchedule {
    fn default() -> Self {
        SnapshotSchedule::Count { count: 9 }
    }
}

impl SnapshotSchedule {
    /// Concrete capture times for a run of length `t_end`.
    pub fn times(&self, t_end: f64) -> Vec<f64> {
        match self {
            SnapshotSchedule::Count { count } => match *count {
                0 => Vec::new(),
                1 => vec![t_end],
                c => (0..c).map(|i| t_end * f64::from(i) / f64::from(c - 1)).collect(),
            },
            SnapshotSchedule::Times { times } => times.clone(),
        }
    }
}

/// One experiment, fully described: what to study, on which datum, with
/// which kernel and speed law, over which scales, grids and horizon, and
/// where to put the artifacts. Identical configs produce byte-identical
/// artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Artifact directory name; defaults to a digest of the config itself.
    #[serde(default)]
    pub label: Option<String>,
    pub scenario: ScenarioSpec,
    #[serde(default = "default_kernel")]
    pub kernel: KernelChoice,
    #[serde(default)]
    pub velocity: VelocityChoice,
    /// Look-ahead lengths; one run per entry.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Safety factor in `(0, 1]` on the stable step bound.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub snapshots: SnapshotSchedule,
    /// Variation-verdict tolerance as a fraction of the initial variation.
    #[serde(default = "default_tolerance_fraction")]
    pub tolerance_fraction: f64,
    /// Smallest acceptable fitted convergence rate for rate studies.
    #[serde(default = "default_rate_threshold")]
    pub rate_threshold: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Default stream seed for seedless random scenarios.
    #[serde(default)]
    pub seed: u64,
}

fn default_kernel() -> KernelChoice {
    KernelChoice::Exponential
}
fn default_epsilons() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_t_end() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_tolerance_fraction() -> f64 {
    0.02
}
fn default_rate_threshold() -> f64 {
    0.45
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n_jumps() -> usize {
    20
}
fn default_span() -> (f64, f64) {
    (-1.0, 1.0)
}
fn default_n_blocks() -> usize {
    1
}
fn default_eps1() -> f64 {
    1.0
}

impl ExperimentConfig {
    /// Reads and validates a config file. Nothing is written here: callers
    /// only create artifact directories after this succeeds. A relative
    /// `table_csv` is resolved against the config file's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ReadConfig { path: path.into(), source })?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|source| CliError::ParseConfig { path: path.into(), source })?;
        if let KernelChoice::Custom { table_csv: Some(p), .. } = &mut cfg.kernel {
            if p.is_relative() {
                if let Some(parent) = path.parent() {
                    *p = parent.join(&p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every cross-field constraint a run relies on.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(CliError::Invalid(msg));

        if self.epsilons.is_empty() {
            return invalid("epsilons must list at least one scale".into());
        }
        for &e in &self.epsilons {
            if !(e.is_finite() && e > 0.0) {
                return invalid(format!("look-ahead lengths must be positive and finite, got {e}"));
            }
        }
        let mut sorted = self.epsilons.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|p| p[0] == p[1]) {
            return invalid("epsilons contains a duplicate scale".into());
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return invalid(format!("t_end must be a nonnegative time, got {}", self.t_end));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return invalid(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.tolerance_fraction.is_finite() && self.tolerance_fraction >= 0.0) {
            return invalid(format!(
                "tolerance_fraction must be nonnegative, got {}",
                self.tolerance_fraction
            ));
        }
        if !self.rate_threshold.is_finite() {
            return invalid(format!("rate_threshold must be finite, got {}", self.rate_threshold));
        }

        let g = &self.grid;
        if g.dx.is_none() && g.cells_per_eps == 0 {
            return invalid("grid.cells_per_eps must be at least 1 when grid.dx is unset".into());
        }
        if let Some(dx) = g.dx {
            if !(dx.is_finite() && dx > 0.0) {
                return invalid(format!("grid.dx must be a positive width, got {dx}"));
            }
        }
        if !(g.padding.is_finite() && g.padding >= 0.0) {
            return invalid(format!("grid.padding must be nonnegative, got {}", g.padding));
        }
        match (g.x_left, g.x_right) {
            (Some(l), Some(r)) if !(l < r) => {
                return invalid(format!("grid domain [{l}, {r}] is empty"));
            }
            (Some(_), None) | (None, Some(_)) => {
                return invalid("grid.x_left and grid.x_right must be set together".into());
            }
            _ => {}
        }

        for t in self.snapshots.times(self.t_end) {
            if !(t.is_finite() && (0.0..=self.t_end).contains(&t)) {
                return invalid(format!("snapshot time {t} falls outside [0, {}]", self.t_end));
            }
        }

        match &self.scenario {
            ScenarioSpec::Riemann { left, right } => {
                for v in [*left, *right] {
                    if !(0.0..=1.0).contains(&v) {
                        return invalid(format!("Riemann states must lie in [0, 1], got {v}"));
                    }
                }
            }
            ScenarioSpec::MonotoneRamp { a, b } => {
                if !(a < b) {
                    return invalid(format!("ramp needs a < b, got [{a}, {b}]"));
                }
            }
            ScenarioSpec::RandomBv { n_jumps, span, .. } => {
                if *n_jumps == 0 {
                    return invalid("random datum needs at least one jump".into());
                }
                if !(span.0 < span.1) {
                    return invalid(format!("span [{}, {}] is empty", span.0, span.1));
                }
            }
            ScenarioSpec::Counterexample { n_blocks, eps1 } => {
                // Re-checks the constructor's own constraints early, without
                // building the datum.
                if *n_blocks == 0 {
                    return invalid("nested-block datum needs at least one block".into());
                }
                if !(eps1.is_finite() && *eps1 > 0.0) {
                    return invalid(format!("eps1 must be a positive length, got {eps1}"));
                }
            }
            ScenarioSpec::IsolatedBlock { h, ell, delta } => {
                if !(*h > 0.0 && *h <= 1.0) {
                    return invalid(format!("block height must lie in (0, 1], got {h}"));
                }
                if *delta < 0.0 {
                    return invalid(format!("notch width must be nonnegative, got {delta}"));
                }
                for &eps in &self.epsilons {
                    if !(*ell > (eps + delta).max(2.0 * eps)) {
                        return invalid(format!(
                            "isolated block needs ell > max(eps + delta, 2 eps); \
                             ell = {ell} fails at eps = {eps} with delta = {delta}"
                        ));
                    }
                }
            }
        }

        let velocity = self.velocity.build()?;
        self.kernel.build()?;

        match self.experiment {
            ExperimentKind::RateStudy => {
                if self.epsilons.len() < 4 {
                    return invalid(format!(
                        "a rate study needs at least 4 scales, got {}",
                        self.epsilons.len()
                    ));
                }
                if self.t_end <= 0.0 {
                    return invalid("a rate study needs t_end > 0".into());
                }
                match &self.scenario {
                    ScenarioSpec::Riemann { left, right } => {
                        // The error reference is the exact single-jump
                        // solution, which not every speed law provides.
                        RiemannSolution::new(&velocity, *left, *right)?;
                    }
                    _ => {
                        return invalid(
                            "a rate study needs a riemann scenario (the exact reference \
                             is the single-jump solution)"
                                .into(),
                        );
                    }
                }
            }
            ExperimentKind::EntropyCheck => {
                if self.t_end <= 0.0 {
                    return invalid("an entropy check needs t_end > 0".into());
                }
                // The residual quadrature integrates over the snapshot
                // ladder, and the probe family lives on [5%, 95%] of the
                // horizon; the schedule has to cover that.
                let mut times = self.snapshots.times(self.t_end);
                times.sort_by(f64::total_cmp);
                let covered = times.len() >= 2
                    && times[0] <= 0.05 * self.t_end
                    && times[times.len() - 1] >= 0.95 * self.t_end;
                if !covered {
                    return invalid(
                        "an entropy check needs snapshots covering [0.05 t_end, 0.95 t_end]; \
                         use a count schedule or widen the times list"
                            .into(),
                    );
                }
            }
            ExperimentKind::TvMonotonicity | ExperimentKind::Counterexample => {
                if self.t_end <= 0.0 {
                    return invalid(format!(
                        "experiment '{}' needs t_end > 0",
                        self.experiment.name()
                    ));
                }
            }
            ExperimentKind::SingleRun => {}
        }

        Ok(())
    }

    /// Artifact directory name: the command-line override, the config's own
    /// label, or a deterministic digest of the canonical serialization.
    pub fn resolve_label(&self, override_label: Option<&str>) -> Result<String> {
        let raw = match override_label {
            Some(l) => l.to_string(),
            None => match &self.label {
                Some(l) => l.clone(),
                None => {
                    format!("cfg-{:016x}", fnv1a64(serde_json::to_string(self)?.as_bytes()))
                }
            },
        };
        let ok = !raw.is_empty()
            && raw.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && !raw.starts_with('.');
        if !ok {
            return Err(CliError::Invalid(format!(
                "label '{raw}' must be nonempty, use only [A-Za-z0-9._-], and not start with '.'"
            )));
        }
        Ok(raw)
    }
}

/// 64-bit FNV-1a digest; stable across runs, platforms, and toolchains,
/// which the default hasher does not promise.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "experiment": "tv_monotonicity",
            "scenario": {"kind": "riemann", "left": 0.8, "right": 0.2},
        })
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_value(base()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kernel, KernelChoice::Exponential);
        assert_eq!(cfg.velocity, VelocityChoice::Greenshields);
        assert_eq!(cfg.epsilons, vec![0.4, 0.2, 0.1, 0.05]);
        assert_eq!(cfg.grid.cells_per_eps, 32);
        assert_eq!(cfg.t_end, 1.0);
        assert_eq!(cfg.snapshots.times(1.0).len(), 9);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = base();
        v["surprise"] = 1.into();
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }

    #[test]
    fn snapshot_schedules_accept_count_or_times() {
        let mut v = base();
        v["snapshots"] = serde_json::json!({"count": 3});
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.snapshots.times(1.0), vec![0.0, 0.5, 1.0]);

        let mut v = base();
        v["snapshots"] = serde_json::json!({"times": [0.0, 0.25]});
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert_eq!(cfg.snapshots.times(1.0), vec![0.0, 0.25]);
    }

    #[test]
    fn validation_rejects_bad_scales_and_schedules() {
        let mut v = base();
        v["epsilons"] = serde_json::json!([]);
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(cfg.validate().is_err());

        let mut v = base();
        v["epsilons"] = serde_json::json!([0.2, 0.2]);
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(cfg.validate().is_err());

        let mut v = base();
        v["snapshots"] = serde_json::json!({"times": [2.0]});
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rate_study_requires_riemann_and_enough_scales() {
        let mut v = base();
        v["experiment"] = "rate_study".into();
        v["scenario"] = serde_json::json!({"kind": "monotone_ramp", "a": -1.0, "b": 1.0});
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(cfg.validate().is_err());

        let mut v = base();
        v["experiment"] = "rate_study".into();
        v["epsilons"] = serde_json::json!([0.4, 0.2, 0.1]);
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn isolated_block_scale_guard_checks_every_epsilon() {
        let mut v = base();
        v["scenario"] = serde_json::json!({"kind": "isolated_block", "h": 0.5, "ell": 0.4});
        v["epsilons"] = serde_json::json!([0.1, 0.3]);
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        assert!(cfg.validate().is_err());

        let mut v = base();
        v["scenario"] = serde_json::json!({"kind": "isolated_block", "h": 0.5, "ell": 0.4});
        v["epsilons"] = serde_json::json!([0.1]);
        let cfg: ExperimentConfig = serde_json::from_value(v).unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn custom_kernel_tables_load_from_csv_and_inline() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("ramp.csv");
        std::fs::write(&csv, "xi,eta\n-1.0,0.0\n0.0,2.0\n").unwrap();

        let mut choice = KernelChoice::Custom {
            table: None,
            table_csv: Some(csv.clone()),
            convex: true,
        };
        let spec = choice.build().unwrap();
        assert_eq!(spec.reach(1.0, 1e-10), 1.0);

        // Resolving inlines the samples and drops the file reference.
        choice.resolve().unwrap();
        match &choice {
            KernelChoice::Custom { table: Some(t), table_csv: None, .. } => {
                assert_eq!(t, &vec![(-1.0, 0.0), (0.0, 2.0)]);
            }
            other => panic!("unresolved: {other:?}"),
        }

        let both = KernelChoice::Custom {
            table: Some(vec![(-1.0, 0.0), (0.0, 2.0)]),
            table_csv: Some(csv),
            convex: true,
        };
        assert!(both.build().is_err());

        let missing = KernelChoice::Custom {
            table: None,
            table_csv: Some(dir.path().join("absent.csv")),
            convex: false,
        };
        assert!(missing.build().is_err());

        // A density that shrinks toward the origin fails admissibility.
        let shrinking = KernelChoice::Custom {
            table: Some(vec![(-1.0, 2.0), (0.0, 0.0)]),
            table_csv: None,
            convex: false,
        };
        let err = shrinking.build().unwrap_err().to_string();
        assert!(err.contains("admissibility") || err.contains("kernel"), "got: {err}");
    }

    #[test]
    fn labels_are_deterministic_and_checked() {
        let cfg: ExperimentConfig = serde_json::from_value(base()).unwrap();
        let a = cfg.resolve_label(None).unwrap();
        let b = cfg.resolve_label(None).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("cfg-"));
        assert_eq!(cfg.resolve_label(Some("night-7")).unwrap(), "night-7");
        assert!(cfg.resolve_label(Some("a/b")).is_err());
        assert!(cfg.resolve_label(Some("")).is_err());
    }
}
