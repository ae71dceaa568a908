//! Drives validated configs into on-disk artifacts and a pass/fail verdict.
//!
//! Layout, per experiment: `out_dir/<kind>/<label>/` holding
//! `manifest.json` (tool + resolved config + one record per run, enough to
//! reproduce the artifacts without the original config file),
//! `verdicts.json` (the machine-readable verdict the exit code reflects),
//! `series/*.csv` (per-step `t,tv_w,tv_u,neg_part` traces, plus
//! `epsilon,l1_error` for rate studies) and `snapshots/*.csv`
//! (`x_center,u,w` states). All artifacts are byte-identical across reruns
//! of the same config: labels are content digests, files carry no
//! timestamps, and workers own disjoint files so `--jobs` cannot reorder
//! anything that lands on disk.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nonlocal_lwr::diagnostics::{
    default_probes, dissipation_bound_fit, monotonicity_verdict, rate_fit, MonotonicityReport,
    RatePoint,
};
use nonlocal_lwr::io as artifacts;
use nonlocal_lwr::kernel::{KernelSpec, DEFAULT_TAIL_TOL};
use nonlocal_lwr::local::RiemannSolution;
use nonlocal_lwr::nonlocal::{solve, NonlocalConfig, NonlocalRun};
use nonlocal_lwr::{Grid1D, VelocityModel};

use crate::config::{ExperimentConfig, ExperimentKind, ScenarioSpec};
use crate::error::{CliError, Result};

/// Absolute slack added to every variation tolerance so that exactly
/// conserved series (tolerance zero) still absorb round-off.
pub const VERDICT_ABS_SLACK: f64 = 1e-12;

/// When the experiment *expects* a variation rise, the rise must clear this
/// absolute level to count as a genuine break rather than noise.
pub const VARIATION_BREAK_TOL: f64 = 1e-3;

/// Measured dissipation constants below this are treated as "no defect
/// resolved" and excluded from the cross-scale stability ratio.
pub const K_HAT_FLOOR: f64 = 1e-9;

/// Largest admissible ratio between measured dissipation constants across
/// the scale sweep.
pub const K_HAT_MAX_SPREAD: f64 = 2.0;

/// Hard cap on cells per run; a config that exceeds it is rejected before
/// any allocation.
pub const MAX_CELLS: usize = 2_000_000;

/// Knobs taken from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the artifact directory name.
    pub label: Option<String>,
    /// Worker threads for the scale sweep; 0 or 1 means sequential.
    pub jobs: usize,
    /// Suppresses progress output on stderr.
    pub quiet: bool,
}

/// What a finished experiment reports back for the process exit code.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub dir: PathBuf,
    pub passed: bool,
    pub headline: String,
}

/// `manifest.json` body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub label: String,
    /// The fully resolved configuration (label filled in); running it
    /// through `nlwr run` again reproduces these artifacts byte for byte.
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo { name: "nlwr".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

/// Everything recorded about one run of the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub epsilon: f64,
    pub dx: f64,
    pub n_cells: usize,
    pub x_left: f64,
    pub x_right: f64,
    pub boundary_left: f64,
    pub boundary_right: f64,
    pub dt_max: f64,
    pub n_steps: usize,
    pub kernel_cells: usize,
    /// True when negative speeds routed the run to the dissipative scheme.
    pub used_fallback: bool,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub inflow: f64,
    pub outflow: f64,
    /// `mass(t_end) - mass(0) - inflow + outflow`; round-off sized.
    pub mass_residual: f64,
    pub tv_u0: f64,
    pub tv_w0: f64,
    pub u_range: (f64, f64),
    pub w_range: (f64, f64),
    pub snapshot_times: Vec<f64>,
    pub series_csv: String,
    pub snapshot_csvs: Vec<String>,
    pub final_state_csv: String,
}

/// `verdicts.json` body.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictsFile {
    pub experiment: ExperimentKind,
    pub label: String,
    /// Mirrored by the exit code: `true` is 0, `false` is 2.
    pub passed: bool,
    pub headline: String,
    pub scales: Vec<ScaleVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityVerdict>,
}

/// Per-scale slice of the verdict. For `counterexample` experiments
/// `passed` means "the expected variation rise was observed", so it is the
/// *negation* of the embedded report's own flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleVerdict {
    pub epsilon: f64,
    pub passed: bool,
    pub detail: ScaleDetail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleDetail {
    Monotonicity { report: MonotonicityReport },
    Error { l1_error: f64 },
    Entropy { k_hat: f64, worst_deficit: f64, sup_tv_w: f64, n_probes: usize },
    Completed {},
}

/// Cross-scale verdict of a rate study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateVerdict {
    pub rate: f64,
    pub threshold: f64,
    pub prefactor: f64,
    /// Largest `error / ((eps + sqrt(eps t)) tv0)` over the sweep.
    pub c_factor: f64,
    pub passed: bool,
}

/// Cross-scale verdict of an entropy check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub k_hats: Vec<KHatPoint>,
    /// Scales whose measured constant cleared [`K_HAT_FLOOR`].
    pub active: usize,
    /// Max over min of the active constants (1.0 when fewer than two).
    pub spread: f64,
    pub max_spread: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KHatPoint {
    pub epsilon: f64,
    pub k_hat: f64,
}

struct ScaleOutcome {
    record: RunRecord,
    verdict: ScaleVerdict,
    rate_point: Option<RatePoint>,
    k_hat: Option<f64>,
}

/// Loads, validates, runs, and writes one experiment.
pub fn run_config_path(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = ExperimentConfig::load(path)?;
    run_config(&cfg, opts)
}

/// Runs an already-parsed config. Validation happens first and nothing is
/// written unless it succeeds.
pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    // Inline any file-referenced tables so labels and manifests depend only
    // on the experiment's content, never on paths.
    let mut cfg = cfg.clone();
    cfg.kernel.resolve()?;
    let cfg = &cfg;
    cfg.validate()?;
    let kernel = cfg.kernel.build()?;
    let velocity = cfg.velocity.build()?;
    let label = cfg.resolve_label(opts.label.as_deref())?;
    let dir = cfg.out_dir.join(cfg.experiment.name()).join(&label);

    // Reruns must not inherit stale files from a previous layout.
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(dir.join("series"))?;
    fs::create_dir_all(dir.join("snapshots"))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<ScaleOutcome> = pool.install(|| {
        cfg.epsilons
            .par_iter()
            .enumerate()
            .map(|(idx, &epsilon)| run_scale(cfg, &kernel, &velocity, idx, epsilon, &dir, opts))
            .collect::<Result<Vec<_>>>()
    })?;

    let (passed, headline, rate, stability) = judge(cfg, &dir, &outcomes)?;

    let mut resolved = cfg.clone();
    resolved.label = Some(label.clone());
    let manifest = Manifest {
        tool: ToolInfo::default(),
        label: label.clone(),
        config: resolved,
        runs: outcomes.iter().map(|o| o.record.clone()).collect(),
    };
    artifacts::write_json(&dir.join("manifest.json"), &manifest)?;

    let verdicts = VerdictsFile {
        experiment: cfg.experiment,
        label: label.clone(),
        passed,
        headline: headline.clone(),
        scales: outcomes.into_iter().map(|o| o.verdict).collect(),
        rate,
        stability,
    };
    artifacts::write_json(&dir.join("verdicts.json"), &verdicts)?;

    Ok(RunSummary { label, dir, passed, headline })
}

/// Sizes the grid for one scale: scenario features widened by the kernel
/// reach, the wave travel over the horizon, and the configured padding. The
/// datum installs its own far-field boundary states afterwards.
fn build_grid(
    cfg: &ExperimentConfig,
    kernel: &KernelSpec,
    velocity: &VelocityModel,
    epsilon: f64,
) -> Result<(Grid1D, f64)> {
    let mut dx = cfg.grid.dx.unwrap_or(epsilon / f64::from(cfg.grid.cells_per_eps));
    if let Some(required) = cfg.scenario.required_dx() {
        dx = dx.min(required);
    }
    let (a, b) = match (cfg.grid.x_left, cfg.grid.x_right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            let (f0, f1) = cfg.scenario.features();
            let reach = kernel.reach(epsilon, DEFAULT_TAIL_TOL);
            let left_travel = (-velocity.min_v).max(0.0) * cfg.t_end;
            let right_travel = velocity.max_abs_v.max(0.0) * cfg.t_end;
            (
                f0 - reach - left_travel - cfg.grid.padding,
                f1 + reach + right_travel + cfg.grid.padding,
            )
        }
    };
    let needed = ((b - a) / dx).ceil();
    if !(needed.is_finite() && needed <= MAX_CELLS as f64) {
        return Err(CliError::Invalid(format!(
            "scale {epsilon} would need {needed} cells over [{a}, {b}] at dx = {dx} \
             (cap {MAX_CELLS}); coarsen the grid or shrink the domain"
        )));
    }
    let grid = Grid1D::covering(a, b, dx, 0.0, 0.0)?;
    Ok((grid, dx))
}

/// Runs one scale, writes the files it owns, and returns its verdict slice.
fn run_scale(
    cfg: &ExperimentConfig,
    kernel: &KernelSpec,
    velocity: &VelocityModel,
    idx: usize,
    epsilon: f64,
    dir: &Path,
    opts: &RunOptions,
) -> Result<ScaleOutcome> {
    let (grid, dx) = build_grid(cfg, kernel, velocity, epsilon)?;
    let u0 = cfg.scenario.datum(&grid, epsilon, cfg.seed)?;

    let mut solver_cfg = NonlocalConfig::new(kernel.clone(), epsilon, velocity.clone(), cfg.t_end);
    solver_cfg.cfl = cfg.cfl;
    solver_cfg.snapshot_times = cfg.snapshots.times(cfg.t_end);
    let run = solve(&u0, &solver_cfg)?;

    let tag = format!("{idx:02}_eps{epsilon}");
    let series_csv = format!("series/{tag}.csv");
    artifacts::write_series_csv(&dir.join(&series_csv), &run.steps)?;
    let mut snapshot_csvs = Vec::with_capacity(run.snapshots.len());
    for (k, snap) in run.snapshots.iter().enumerate() {
        let rel = format!("snapshots/{tag}_s{k:02}.csv");
        artifacts::write_state_csv(&dir.join(&rel), &snap.u, &snap.w)?;
        snapshot_csvs.push(rel);
    }
    let final_state_csv = format!("snapshots/{tag}_final.csv");
    artifacts::write_state_csv(&dir.join(&final_state_csv), &run.final_u, &run.final_w)?;

    let mut rate_point = None;
    let mut k_hat = None;
    let verdict = match cfg.experiment {
        ExperimentKind::TvMonotonicity => {
            let tolerance = cfg.tolerance_fraction * run.steps[0].tv_u + VERDICT_ABS_SLACK;
            let report = monotonicity_verdict(&run.steps, tolerance);
            ScaleVerdict {
                epsilon,
                passed: report.passed,
                detail: ScaleDetail::Monotonicity { report },
            }
        }
        ExperimentKind::Counterexample => {
            let report = monotonicity_verdict(&run.steps, VARIATION_BREAK_TOL);
            // The claim holds when the check fails with a clear rise.
            let upheld = !report.passed && report.worst_rise > VARIATION_BREAK_TOL;
            ScaleVerdict { epsilon, passed: upheld, detail: ScaleDetail::Monotonicity { report } }
        }
        ExperimentKind::RateStudy => {
            let (left, right) = match cfg.scenario {
                ScenarioSpec::Riemann { left, right } => (left, right),
                // validate() pinned the scenario kind already
                _ => unreachable!("rate studies only accept riemann scenarios"),
            };
            let exact = RiemannSolution::new(velocity, left, right)?
                .cell_averages(&run.final_w.grid, cfg.t_end)?;
            let l1_error = run.final_w.l1_distance(&exact)?;
            rate_point = Some(RatePoint { epsilon, error: l1_error });
            ScaleVerdict { epsilon, passed: true, detail: ScaleDetail::Error { l1_error } }
        }
        ExperimentKind::EntropyCheck => {
            let (cs, phis) = default_probes(&run)?;
            let report = dissipation_bound_fit(&run, &cs, &phis)?;
            k_hat = Some(report.k_hat);
            ScaleVerdict {
                epsilon,
                passed: true,
                detail: ScaleDetail::Entropy {
                    k_hat: report.k_hat,
                    worst_deficit: report.worst_deficit,
                    sup_tv_w: report.sup_tv_w,
                    n_probes: report.probes.len(),
                },
            }
        }
        ExperimentKind::SingleRun => {
            ScaleVerdict { epsilon, passed: true, detail: ScaleDetail::Completed {} }
        }
    };

    if !opts.quiet {
        eprintln!(
            "[{}] eps={epsilon}: {} cells, {} steps{}",
            cfg.experiment.name(),
            grid.n_cells,
            run.n_steps,
            if verdict.passed { "" } else { " (verdict fails here)" },
        );
    }
    log::debug!(
        "scale {epsilon}: dx={dx}, dt_max={}, mass residual {:.3e}",
        run.dt_max,
        run.ledger.balance_residual(run.final_mass()),
    );

    let record = record_run(&run, dx, series_csv, snapshot_csvs, final_state_csv);
    Ok(ScaleOutcome { record, verdict, rate_point, k_hat })
}

fn record_run(
    run: &NonlocalRun,
    dx: f64,
    series_csv: String,
    snapshot_csvs: Vec<String>,
    final_state_csv: String,
) -> RunRecord {
    let grid = &run.final_u.grid;
    RunRecord {
        epsilon: run.epsilon,
        dx,
        n_cells: grid.n_cells,
        x_left: grid.x_left,
        x_right: grid.x_right(),
        boundary_left: grid.boundary_left,
        boundary_right: grid.boundary_right,
        dt_max: run.dt_max,
        n_steps: run.n_steps,
        kernel_cells: run.kernel.n_cells(),
        used_fallback: run.used_fallback,
        initial_mass: run.ledger.initial_mass,
        final_mass: run.final_mass(),
        inflow: run.ledger.inflow,
        outflow: run.ledger.outflow,
        mass_residual: run.ledger.balance_residual(run.final_mass()),
        tv_u0: run.steps[0].tv_u,
        tv_w0: run.steps[0].tv_w,
        u_range: (run.min_seen, run.max_seen),
        w_range: (run.w_min_seen, run.w_max_seen),
        snapshot_times: run.snapshots.iter().map(|s| s.t).collect(),
        series_csv,
        snapshot_csvs,
        final_state_csv,
    }
}

/// Condenses per-scale outcomes into the experiment verdict, writing any
/// cross-scale artifacts (the rate table) on the way.
fn judge(
    cfg: &ExperimentConfig,
    dir: &Path,
    outcomes: &[ScaleOutcome],
) -> Result<(bool, String, Option<RateVerdict>, Option<StabilityVerdict>)> {
    let n = outcomes.len();
    let failing = outcomes.iter().filter(|o| !o.verdict.passed).count();
    match cfg.experiment {
        ExperimentKind::TvMonotonicity => {
            let passed = failing == 0;
            let headline = if passed {
                format!("variation stays non-increasing (within tolerance) at all {n} scales")
            } else {
                format!("variation rises above tolerance at {failing} of {n} scales")
            };
            Ok((passed, headline, None, None))
        }
        ExperimentKind::Counterexample => {
            let passed = failing == 0;
            let headline = if passed {
                format!("variation rise observed at all {n} scales; the break is upheld")
            } else {
                format!("no variation rise at {failing} of {n} scales; the break is not upheld")
            };
            Ok((passed, headline, None, None))
        }
        ExperimentKind::RateStudy => {
            let points: Vec<RatePoint> = outcomes.iter().filter_map(|o| o.rate_point).collect();
            artifacts::write_rate_csv(&dir.join("series").join("rate.csv"), &points)?;
            let tv0 = outcomes[0].record.tv_u0;
            let report = rate_fit(&points, cfg.t_end, tv0)?;
            let passed = report.rate >= cfg.rate_threshold;
            let headline = format!(
                "fitted L1 rate {:.3} against threshold {} (prefactor {:.3})",
                report.rate, cfg.rate_threshold, report.prefactor
            );
            let rate = RateVerdict {
                rate: report.rate,
                threshold: cfg.rate_threshold,
                prefactor: report.prefactor,
                c_factor: report.c_factor,
                passed,
            };
            Ok((passed, headline, Some(rate), None))
        }
        ExperimentKind::EntropyCheck => {
            let k_hats: Vec<KHatPoint> = outcomes
                .iter()
                .map(|o| KHatPoint {
                    epsilon: o.record.epsilon,
                    k_hat: o.k_hat.expect("entropy scales carry a measured constant"),
                })
                .collect();
            let active: Vec<f64> =
                k_hats.iter().map(|p| p.k_hat).filter(|&k| k > K_HAT_FLOOR).collect();
            let spread = if active.len() < 2 {
                1.0
            } else {
                let max = active.iter().cloned().fold(f64::MIN, f64::max);
                let min = active.iter().cloned().fold(f64::MAX, f64::min);
                max / min
            };
            let passed = spread <= K_HAT_MAX_SPREAD;
            let headline = format!(
                "dissipation constant spread {spread:.3} across {} active of {n} scales \
                 (max allowed {K_HAT_MAX_SPREAD})",
                active.len()
            );
            let stability = StabilityVerdict {
                k_hats,
                active: active.len(),
                spread,
                max_spread: K_HAT_MAX_SPREAD,
                passed,
            };
            Ok((passed, headline, None, Some(stability)))
        }
        ExperimentKind::SingleRun => {
            Ok((true, format!("completed {n} run(s); artifacts written"), None, None))
        }
    }
}
