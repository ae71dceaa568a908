//! Acceptance gate for the library: eleven criteria, one test each, every
//! test printing a single `criterion NN PASS/FAIL` line. All tolerances are
//! pinned as constants at the top of this file.
//!
//! The heavy solver sweeps are shared: the first test to run builds the
//! whole suite behind a `OnceLock`, later tests only inspect the recorded
//! outcomes. Every solver run performed anywhere in the suite leaves an
//! audit row, and the global bound/bookkeeping criteria sweep those rows.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{
    audit, block_plus_step, greenshields, ladder, matched_scale_slope_table, padded_grid,
    uniform_slope_identity_worst_dev, RunAudit,
};
use nonlocal_lwr::characteristics::{mass_between, trace};
use nonlocal_lwr::diagnostics::{
    default_probes, dissipation_bound_fit, early_growth_rate, monotonicity_verdict, rate_fit,
    windowed_variation, RatePoint, RateReport,
};
use nonlocal_lwr::grid::Grid1D;
use nonlocal_lwr::kernel::{convolve, discretize, KernelSpec};
use nonlocal_lwr::local::RiemannSolution;
use nonlocal_lwr::nonlocal::{solve, NonlocalConfig, NonlocalRun};
use nonlocal_lwr::scenarios::{
    counterexample_datum, isolated_block_datum, standard_datum, CounterexampleSpec, StandardKind,
};

// ---------------------------------------------------------------------------
// Pinned tolerances and thresholds.
// ---------------------------------------------------------------------------

/// Criterion 1: a rise of the forward-average variation counts as a
/// violation only above this fraction of the initial variation.
const MONOTONE_TOL_FRACTION: f64 = 0.02;
/// Criterion 1: measured rises below this floor are round-off, not worth a
/// refinement study.
const RISE_REFINE_FLOOR: f64 = 1e-10;
/// Criterion 1: under halving the cell width a genuine discretization rise
/// must shrink at least this much (or drop below round-off outright).
const RISE_REFINE_RATIO: f64 = 0.6;
/// Criterion 2: allowed slack in the initial-variation contraction.
const TV_W0_SLACK: f64 = 1e-10;
/// Criterion 3: tolerance on the matched-scale initial variation.
const MATCHED_TV_TOL: f64 = 1e-9;
/// Criterion 4: required fraction of the predicted initial growth rate.
const GROWTH_RATE_FACTOR: f64 = 0.8;
/// Criteria 4: a rise above this absolute level flips the monotonicity
/// verdict to FAIL (well above round-off, well below the predicted rise).
const FAIL_VERDICT_TOL: f64 = 1e-3;
/// Criterion 5: tolerance on the two-scale initial variation.
const TWO_SCALE_TV_TOL: f64 = 1e-6;
/// Criterion 5: a record must exceed the initial variation by this much to
/// count as genuine growth.
const GROWTH_MARGIN: f64 = 1e-9;
/// Criterion 6: tolerance on the initial windowed variation.
const PERSISTENCE_TOL: f64 = 1e-6;
/// Criterion 6: allowed loss of windowed variation by the probe time.
const PERSISTENCE_LOSS: f64 = 0.05;
/// Criterion 7: required fitted convergence rate of the forward average.
const RATE_THRESHOLD: f64 = 0.45;
/// Criterion 7: allowed spread of the fitted error prefactor across data.
const PREFACTOR_SPREAD: f64 = 2.0;
/// Criterion 8: allowed spread of the measured dissipation constant across
/// the scale sweep.
const KHAT_SPREAD: f64 = 2.0;
/// Criterion 8: dissipation constants below this are "no measurable
/// deficit" and carry no information about the spread.
const KHAT_FLOOR: f64 = 1e-9;
/// Criterion 8: absolute round-off slack in the dissipation bound.
const DISSIPATION_SLACK: f64 = 1e-12;
/// Criterion 9: allowed excursion of cell values and forward averages
/// outside [0, 1] (round-off only).
const BOUND_SLACK: f64 = 1e-12;
/// Criterion 9: allowed mass-ledger drift per unit time.
const MASS_DRIFT_PER_TIME: f64 = 1e-10;
/// Criterion 11: identity tolerance between the convolution forward
/// difference and the closed-form slope.
const SLOPE_IDENTITY_TOL: f64 = 1e-12;
/// Criterion 11: per-branch tolerance of the matched-scale slope table.
const SLOPE_TABLE_TOL: f64 = 1e-9;

// Wall-clock budgets stated by the individual criteria.
const BUDGET_GROWTH: Duration = Duration::from_secs(10);
const BUDGET_TWO_SCALE: Duration = Duration::from_secs(60);
const BUDGET_RATE: Duration = Duration::from_secs(180);

// ---------------------------------------------------------------------------
// Suite state shared by the criteria.
// ---------------------------------------------------------------------------

struct RefineOutcome {
    coarse_rise: f64,
    fine_rise: f64,
}

struct MonotoneCase {
    label: String,
    tolerance: f64,
    worst_rise: f64,
    passed: bool,
    refine: Option<RefineOutcome>,
    /// Entropy audit of this run: worst normalized deficit and its scale.
    worst_deficit: f64,
    deficit_scale: f64,
}

struct GrowthCase {
    h: f64,
    measured_rate: f64,
    required_rate: f64,
    verdict_failed: bool,
}

struct TwoScaleOutcome {
    tv_w0: f64,
    expected_tv: f64,
    grew_immediately: bool,
    t_star: f64,
}

struct PersistenceOutcome {
    initial_window: f64,
    later_window: f64,
}

struct RateStudy {
    label: String,
    tv0: f64,
    points: Vec<RatePoint>,
    report: RateReport,
    k_hats: Vec<(f64, f64)>,
}

struct StationOutcome {
    max_abs_station: f64,
    station_tol: f64,
    pair_drifts: Vec<(String, f64)>,
    drift_tol: f64,
}

struct Suite {
    audits: Vec<RunAudit>,
    monotone: Vec<MonotoneCase>,
    monotone_elapsed: Duration,
    growth: Vec<GrowthCase>,
    growth_elapsed: Duration,
    two_scale: TwoScaleOutcome,
    two_scale_elapsed: Duration,
    persistence: PersistenceOutcome,
    rate_studies: Vec<RateStudy>,
    rate_elapsed: Duration,
    station: StationOutcome,
}

fn suite() -> &'static Suite {
    static CELL: OnceLock<Result<Suite, String>> = OnceLock::new();
    let entry = CELL.get_or_init(|| {
        catch_unwind(AssertUnwindSafe(build_suite)).map_err(|p| {
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "suite construction panicked".into())
        })
    });
    match entry {
        Ok(s) => s,
        Err(e) => panic!("shared suite construction failed: {e}"),
    }
}

// ---------------------------------------------------------------------------
// Suite construction.
// ---------------------------------------------------------------------------

fn monotone_suite_data() -> Vec<(String, StandardKind)> {
    let mut out = vec![
        ("riemann(0.8,0.2)".to_string(), StandardKind::Riemann { left: 0.8, right: 0.2 }),
        ("riemann(0.2,0.8)".to_string(), StandardKind::Riemann { left: 0.2, right: 0.8 }),
        ("riemann(1.0,0.0)".to_string(), StandardKind::Riemann { left: 1.0, right: 0.0 }),
        ("riemann(0.0,1.0)".to_string(), StandardKind::Riemann { left: 0.0, right: 1.0 }),
    ];
    for seed in 0..20 {
        out.push((
            format!("random_bv(seed={seed})"),
            StandardKind::RandomBv { seed, n_jumps: 20, span: (-1.0, 1.0) },
        ));
    }
    out
}

fn run_standard(kernel: &KernelSpec, eps: f64, dx: f64, kind: &StandardKind, snapshots: Vec<f64>) -> NonlocalRun {
    let grid = padded_grid(kernel, eps, dx, (-1.0, 1.0), 1.0);
    let u0 = standard_datum(kind, &grid).expect("standard datum");
    let cfg = NonlocalConfig::new(kernel.clone(), eps, greenshields(), 1.0).with_snapshots(snapshots);
    solve(&u0, &cfg).expect("monotone-suite run")
}

fn build_monotone_suite(audits: &mut Vec<RunAudit>) -> Vec<MonotoneCase> {
    let kernels =
        [("exponential", KernelSpec::exponential()), ("piecewise_linear", KernelSpec::piecewise_linear(1.0).expect("kernel"))];
    let mut cases = Vec::new();
    for (kname, kernel) in &kernels {
        for eps in [0.4, 0.1] {
            let dx = eps / 32.0;
            for (dlabel, kind) in monotone_suite_data() {
                let label = format!("monotone {kname} eps={eps} {dlabel}");
                let run = run_standard(kernel, eps, dx, &kind, ladder(1.0, 16));
                audits.push(audit(&label, &run));

                let tolerance = MONOTONE_TOL_FRACTION * run.steps[0].tv_u;
                let report = monotonicity_verdict(&run.steps, tolerance);

                let refine = if report.worst_rise > RISE_REFINE_FLOOR {
                    let fine = run_standard(kernel, eps, dx / 2.0, &kind, Vec::new());
                    audits.push(audit(format!("{label} refined"), &fine));
                    let fine_report = monotonicity_verdict(&fine.steps, tolerance);
                    Some(RefineOutcome {
                        coarse_rise: report.worst_rise,
                        fine_rise: fine_report.worst_rise,
                    })
                } else {
                    None
                };

                let (cs, phis) = default_probes(&run).expect("probe family");
                let entropy = dissipation_bound_fit(&run, &cs, &phis).expect("entropy fit");

                cases.push(MonotoneCase {
                    label,
                    tolerance,
                    worst_rise: report.worst_rise,
                    passed: report.passed,
                    refine,
                    worst_deficit: entropy.worst_deficit,
                    deficit_scale: entropy.epsilon * entropy.sup_tv_w,
                });
            }
        }
    }
    cases
}

fn build_growth_cases(audits: &mut Vec<RunAudit>) -> Vec<GrowthCase> {
    let mut out = Vec::new();
    for h in [0.5, 1.0] {
        let dx = 1.0 / 128.0;
        let grid = Grid1D::covering(-3.25, 0.5, dx, 0.0, 1.0).expect("grid");
        let u0 = block_plus_step(h, 0.25).to_profile(&grid).expect("datum");
        let cfg = NonlocalConfig::new(KernelSpec::uniform(), 1.0, greenshields(), 0.02)
            .with_snapshots(vec![0.0, 0.02]);
        let run = solve(&u0, &cfg).expect("matched-scale run");
        audits.push(audit(format!("growth h={h}"), &run));

        let measured_rate = early_growth_rate(&run.steps, 0.02).expect("growth rate");
        let required_rate = GROWTH_RATE_FACTOR * 2.0 * ((2.0 - h) / 4.0) * h;
        let verdict_failed = !monotonicity_verdict(&run.steps, FAIL_VERDICT_TOL).passed;
        out.push(GrowthCase { h, measured_rate, required_rate, verdict_failed });
    }
    out
}

fn build_two_scale(audits: &mut Vec<RunAudit>) -> TwoScaleOutcome {
    let spec = CounterexampleSpec::with_defaults(2, 1.0).expect("two-scale family");
    let eps = spec.epsilons[1];
    let dx = spec.ell(1) / 16.0;
    let grid = Grid1D::covering(-8.0 * spec.ell(0) - eps - 0.25, 0.25, dx, 0.0, 0.0).expect("grid");
    let u0 = counterexample_datum(&spec, &grid).expect("two-scale datum");
    let cfg = NonlocalConfig::new(KernelSpec::uniform(), eps, greenshields(), 0.05)
        .with_snapshots(vec![0.05]);
    let run = solve(&u0, &cfg).expect("two-scale run");
    audits.push(audit("two-scale eps2", &run));

    let tv_w0 = run.steps[0].tv_w;
    let expected_tv = 4.0 * spec.heights[0] + 1.0;
    let first_drop = run.steps.iter().skip(1).find(|r| r.tv_w <= tv_w0 + GROWTH_MARGIN);
    let t_star = first_drop.map_or(run.t_end, |r| r.t);
    let grew_immediately = run.steps.get(1).is_some_and(|r| r.tv_w > tv_w0 + GROWTH_MARGIN);
    TwoScaleOutcome { tv_w0, expected_tv, grew_immediately, t_star }
}

fn build_persistence(audits: &mut Vec<RunAudit>) -> PersistenceOutcome {
    let (h, ell, eps) = (0.5, 0.4, 0.1);
    let dx = 1.0 / 160.0;
    let grid = Grid1D::covering(-3.3, 0.3, dx, 0.0, 0.0).expect("grid");
    let u0 = isolated_block_datum(h, ell, eps, 0.0)
        .expect("isolated block")
        .to_profile(&grid)
        .expect("datum");
    let cfg = NonlocalConfig::new(KernelSpec::uniform(), eps, greenshields(), 0.02)
        .with_snapshots(vec![0.0, 0.02]);
    let run = solve(&u0, &cfg).expect("persistence run");
    audits.push(audit("persistence block", &run));

    // The four slope bumps of the forward average live in
    // [-7 ell - eps, -2 ell]; the window is widened by the largest wave
    // sweep so nothing escapes it by the probe time, while staying clear of
    // the stationary bump of the congested front at [-eps, 0].
    let w0 = &run.snapshot_at(0.0).expect("initial snapshot").w;
    let wt = &run.snapshot_at(0.02).expect("final snapshot").w;
    let initial_window = windowed_variation(w0, -7.0 * ell - eps - 0.05, -2.0 * ell + 0.05)
        .expect("initial window");
    let later_window = windowed_variation(wt, -7.0 * ell - eps - 0.08, -2.0 * ell + 0.08)
        .expect("later window");
    PersistenceOutcome { initial_window, later_window }
}

fn build_rate_studies(audits: &mut Vec<RunAudit>) -> Vec<RateStudy> {
    let kernel = KernelSpec::exponential();
    let data = [
        ("riemann(0.8,0.2)", 0.8, 0.2),
        ("riemann(0.0,1.0)", 0.0, 1.0),
    ];
    let mut out = Vec::new();
    for (dlabel, left, right) in data {
        let kind = StandardKind::Riemann { left, right };
        let exact = RiemannSolution::new(&greenshields(), left, right).expect("exact solution");
        let mut points = Vec::new();
        let mut k_hats = Vec::new();
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let dx = eps / 32.0;
            let label = format!("rate {dlabel} eps={eps}");
            let run = run_standard(&kernel, eps, dx, &kind, ladder(1.0, 16));
            audits.push(audit(&label, &run));

            let reference = exact.cell_averages(&run.final_u.grid, 1.0).expect("exact averages");
            let error = run.final_w.l1_distance(&reference).expect("error norm");
            points.push(RatePoint { epsilon: eps, error });

            let (cs, phis) = default_probes(&run).expect("probe family");
            let entropy = dissipation_bound_fit(&run, &cs, &phis).expect("entropy fit");
            k_hats.push((eps, entropy.k_hat));
        }
        let tv0 = (left - right).abs();
        let report = rate_fit(&points, 1.0, tv0).expect("rate fit");
        out.push(RateStudy { label: dlabel.to_string(), tv0, points, report, k_hats });
    }
    out
}

fn build_station(audits: &mut Vec<RunAudit>) -> StationOutcome {
    let dx = 1.0 / 128.0;
    let eps = 0.5;
    let grid = Grid1D::covering(-3.5, 0.5, dx, 0.0, 0.0).expect("grid");
    let u0 = block_plus_step(0.5, 0.25).to_profile(&grid).expect("datum");
    let cfg = NonlocalConfig::new(KernelSpec::uniform(), eps, greenshields(), 1.0)
        .with_snapshots(ladder(1.0, 100));
    let run = solve(&u0, &cfg).expect("station run");
    audits.push(audit("station block+front", &run));

    // The curve launched at the congested front must not move.
    let station = trace(&run, 0.0, 0.0, 1.0).expect("front curve");
    let max_abs_station = station.positions.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));

    // Mass between traced curves over the first half of the run.
    let a = trace(&run, -2.5, 0.0, 0.5).expect("left curve");
    let b = trace(&run, -1.0, 0.0, 0.5).expect("middle curve");
    let c = trace(&run, 0.0, 0.0, 0.5).expect("front curve (short)");
    let drift_tol = 2.0 * dx + 5.0 * run.dt_max;
    let mut pair_drifts = Vec::new();
    for (name, l, r) in [("left-middle", &a, &b), ("middle-front", &b, &c)] {
        let masses = mass_between(&run, l, r).expect("mass between curves");
        let m0 = masses.first().expect("at least one shared time").1;
        let drift = masses.iter().map(|&(_, m)| (m - m0).abs()).fold(0.0, f64::max);
        pair_drifts.push((name.to_string(), drift));
    }
    StationOutcome { max_abs_station, station_tol: 2.0 * dx, pair_drifts, drift_tol }
}

fn build_suite() -> Suite {
    let mut audits = Vec::new();

    let t0 = Instant::now();
    let rate_studies = build_rate_studies(&mut audits);
    let rate_elapsed = t0.elapsed();

    let t0 = Instant::now();
    let monotone = build_monotone_suite(&mut audits);
    let monotone_elapsed = t0.elapsed();

    let t0 = Instant::now();
    let growth = build_growth_cases(&mut audits);
    let growth_elapsed = t0.elapsed();

    let t0 = Instant::now();
    let two_scale = build_two_scale(&mut audits);
    let two_scale_elapsed = t0.elapsed();

    let persistence = build_persistence(&mut audits);
    let station = build_station(&mut audits);

    Suite {
        audits,
        monotone,
        monotone_elapsed,
        growth,
        growth_elapsed,
        two_scale,
        two_scale_elapsed,
        persistence,
        rate_studies,
        rate_elapsed,
        station,
    }
}

// ---------------------------------------------------------------------------
// The criteria.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_convex_kernels_keep_variation_monotone() {
    let s = suite();
    let mut worst_rise = 0.0_f64;
    let mut refined = 0usize;
    for case in &s.monotone {
        assert!(
            case.passed,
            "criterion 01 FAIL — {}: variation rose by {:.3e} (tolerance {:.3e})",
            case.label, case.worst_rise, case.tolerance
        );
        if let Some(r) = &case.refine {
            refined += 1;
            let shrunk = r.fine_rise <= RISE_REFINE_RATIO * r.coarse_rise
                || r.fine_rise <= RISE_REFINE_FLOOR / 100.0;
            assert!(
                shrunk,
                "criterion 01 FAIL — {}: rise {:.3e} did not shrink under refinement (got {:.3e})",
                case.label, r.coarse_rise, r.fine_rise
            );
        }
        worst_rise = worst_rise.max(case.worst_rise);
    }
    println!(
        "criterion 01 PASS — {} convex-kernel runs monotone (worst rise {:.2e}, {} refinement studies, {:.1?})",
        s.monotone.len(),
        worst_rise,
        refined,
        s.monotone_elapsed
    );
}

#[test]
fn criterion_02_initial_average_contracts_variation() {
    let s = suite();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_label = String::new();
    for a in &s.audits {
        let excess = a.tv_w0 - a.tv_u0;
        if excess > worst {
            worst = excess;
            worst_label = a.label.clone();
        }
        assert!(
            excess <= TV_W0_SLACK,
            "criterion 02 FAIL — {}: TV(w(0)) = {} exceeds TV(u0) = {} by {excess:.3e}",
            a.label,
            a.tv_w0,
            a.tv_u0
        );
    }
    println!(
        "criterion 02 PASS — initial forward average contracted variation in all {} runs (worst excess {:.2e}, at {})",
        s.audits.len(),
        worst,
        worst_label
    );
}

#[test]
fn criterion_03_matched_scale_initial_variation_collapses_to_one() {
    for h in [0.5, 1.0] {
        let dx = 1.0 / 128.0;
        let grid = Grid1D::covering(-3.25, 0.5, dx, 0.0, 1.0).expect("grid");
        let u0 = block_plus_step(h, 0.25).to_profile(&grid).expect("datum");
        let dk = discretize(&KernelSpec::uniform(), 1.0, dx).expect("weights");
        let w0 = convolve(&u0, &dk).expect("forward average");
        let tv = w0.total_variation();
        assert!(
            (tv - 1.0).abs() <= MATCHED_TV_TOL,
            "criterion 03 FAIL — h = {h}: TV(w(0)) = {tv}, expected 1"
        );
    }
    println!("criterion 03 PASS — matched-scale TV(w(0)) = 1 within {MATCHED_TV_TOL:.0e} for h in {{0.5, 1}}");
}

#[test]
fn criterion_04_matched_scale_variation_grows_at_predicted_rate() {
    let s = suite();
    for case in &s.growth {
        assert!(
            case.measured_rate >= case.required_rate,
            "criterion 04 FAIL — h = {}: measured growth rate {:.4} below required {:.4}",
            case.h,
            case.measured_rate,
            case.required_rate
        );
        assert!(
            case.verdict_failed,
            "criterion 04 FAIL — h = {}: monotonicity verdict did not flip to FAIL",
            case.h
        );
    }
    assert!(
        s.growth_elapsed <= BUDGET_GROWTH,
        "criterion 04 FAIL — runtime {:?} over budget {:?}",
        s.growth_elapsed,
        BUDGET_GROWTH
    );
    let rates: Vec<String> =
        s.growth.iter().map(|c| format!("h={}: {:.3}>={:.3}", c.h, c.measured_rate, c.required_rate)).collect();
    println!(
        "criterion 04 PASS — variation grows and verdict FAILs ({}; {:.1?})",
        rates.join(", "),
        s.growth_elapsed
    );
}

#[test]
fn criterion_05_two_scale_family_grows_at_the_finer_scale() {
    let s = suite();
    let t = &s.two_scale;
    assert!(
        (t.tv_w0 - t.expected_tv).abs() <= TWO_SCALE_TV_TOL,
        "criterion 05 FAIL — TV(w(0)) = {} but expected {}",
        t.tv_w0,
        t.expected_tv
    );
    assert!(
        t.grew_immediately && t.t_star > 0.0,
        "criterion 05 FAIL — variation did not exceed its initial value on an initial interval"
    );
    assert!(
        s.two_scale_elapsed <= BUDGET_TWO_SCALE,
        "criterion 05 FAIL — runtime {:?} over budget {:?}",
        s.two_scale_elapsed,
        BUDGET_TWO_SCALE
    );
    println!(
        "criterion 05 PASS — TV(w(0)) = {:.8} ~ {} and TV(w(t)) > TV(w(0)) on ]0, {:.4}] ({:.1?})",
        t.tv_w0,
        t.expected_tv,
        t.t_star,
        s.two_scale_elapsed
    );
}

#[test]
fn criterion_06_isolated_block_variation_persists() {
    let s = suite();
    let p = &s.persistence;
    assert!(
        (p.initial_window - 2.0).abs() <= PERSISTENCE_TOL,
        "criterion 06 FAIL — initial windowed variation {} != 2",
        p.initial_window
    );
    assert!(
        p.later_window >= 2.0 - PERSISTENCE_LOSS,
        "criterion 06 FAIL — windowed variation dropped to {} at the probe time",
        p.later_window
    );
    println!(
        "criterion 06 PASS — windowed variation {:.9} at t=0, {:.6} at t=0.02 (floor {})",
        p.initial_window,
        p.later_window,
        2.0 - PERSISTENCE_LOSS
    );
}

#[test]
fn criterion_07_forward_average_converges_at_half_order() {
    let s = suite();
    let mut prefactors = Vec::new();
    for study in &s.rate_studies {
        assert!(
            study.report.rate >= RATE_THRESHOLD,
            "criterion 07 FAIL — {}: fitted rate {:.3} below {RATE_THRESHOLD}",
            study.label,
            study.report.rate
        );
        for p in &study.points {
            let bound = study.report.c_factor * (p.epsilon + p.epsilon.sqrt()) * study.tv0;
            assert!(
                p.error <= bound * (1.0 + 1e-9),
                "criterion 07 FAIL — {}: error {:.3e} at eps {} above fitted envelope {:.3e}",
                study.label,
                p.error,
                p.epsilon,
                bound
            );
        }
        prefactors.push(study.report.c_factor);
    }
    let (lo, hi) = (
        prefactors.iter().cloned().fold(f64::INFINITY, f64::min),
        prefactors.iter().cloned().fold(0.0_f64, f64::max),
    );
    assert!(
        hi <= PREFACTOR_SPREAD * lo,
        "criterion 07 FAIL — fitted prefactors {prefactors:?} spread by more than {PREFACTOR_SPREAD}x"
    );
    assert!(
        s.rate_elapsed <= BUDGET_RATE,
        "criterion 07 FAIL — runtime {:?} over budget {:?}",
        s.rate_elapsed,
        BUDGET_RATE
    );
    let rates: Vec<String> =
        s.rate_studies.iter().map(|r| format!("{}: rate {:.3}, C {:.3}", r.label, r.report.rate, r.report.c_factor)).collect();
    println!("criterion 07 PASS — {} ({:.1?})", rates.join("; "), s.rate_elapsed);
}

#[test]
fn criterion_08_dissipation_constant_is_stable_and_transfers() {
    let s = suite();
    // (a) stability of the measured constant across the scale sweep.
    let mut k_star = 0.0_f64;
    for study in &s.rate_studies {
        let active: Vec<f64> =
            study.k_hats.iter().map(|&(_, k)| k).filter(|&k| k > KHAT_FLOOR).collect();
        if active.len() >= 2 {
            let (lo, hi) = (
                active.iter().cloned().fold(f64::INFINITY, f64::min),
                active.iter().cloned().fold(0.0_f64, f64::max),
            );
            assert!(
                hi <= KHAT_SPREAD * lo,
                "criterion 08 FAIL — {}: dissipation constants {:?} spread by more than {KHAT_SPREAD}x",
                study.label,
                study.k_hats
            );
        }
        for &(_, k) in &study.k_hats {
            k_star = k_star.max(k);
        }
    }
    // (b) the same constant bounds every residual of the monotone suite.
    let mut worst_ratio = 0.0_f64;
    for case in &s.monotone {
        let allowed = k_star * case.deficit_scale + DISSIPATION_SLACK;
        assert!(
            case.worst_deficit <= allowed,
            "criterion 08 FAIL — {}: normalized deficit {:.3e} above the transferred bound {:.3e}",
            case.label,
            case.worst_deficit,
            allowed
        );
        if case.deficit_scale > 0.0 {
            worst_ratio = worst_ratio.max(case.worst_deficit / case.deficit_scale);
        }
    }
    let k_lists: Vec<String> = s
        .rate_studies
        .iter()
        .map(|r| {
            let ks: Vec<String> = r.k_hats.iter().map(|(e, k)| format!("{e}:{k:.3e}")).collect();
            format!("{} [{}]", r.label, ks.join(", "))
        })
        .collect();
    println!(
        "criterion 08 PASS — K^ = {k_star:.3e} stable across scales ({}) and bounds the monotone suite (worst implied {worst_ratio:.3e})",
        k_lists.join("; ")
    );
}

#[test]
fn criterion_09_states_stay_in_the_unit_interval_and_mass_balances() {
    let s = suite();
    let mut worst_excursion = 0.0_f64;
    let mut worst_drift = 0.0_f64;
    for a in &s.audits {
        let excursion = (-a.min_u)
            .max(a.max_u - 1.0)
            .max(-a.min_w)
            .max(a.max_w - 1.0)
            .max(0.0);
        assert!(
            excursion <= BOUND_SLACK,
            "criterion 09 FAIL — {}: state left [0,1] by {excursion:.3e} (u in [{}, {}], w in [{}, {}])",
            a.label,
            a.min_u,
            a.max_u,
            a.min_w,
            a.max_w
        );
        let drift = a.mass_residual.abs() / a.t_end.max(1.0);
        assert!(
            drift <= MASS_DRIFT_PER_TIME,
            "criterion 09 FAIL — {}: mass drift {drift:.3e} per unit time",
            a.label
        );
        worst_excursion = worst_excursion.max(excursion);
        worst_drift = worst_drift.max(drift);
    }
    println!(
        "criterion 09 PASS — {} runs stayed in [0,1] (worst excursion {:.2e}) with mass drift <= {:.2e}/unit time",
        s.audits.len(),
        worst_excursion,
        worst_drift
    );
}

#[test]
fn criterion_10_characteristics_freeze_at_the_front_and_conserve_mass() {
    let s = suite();
    let st = &s.station;
    assert!(
        st.max_abs_station <= st.station_tol,
        "criterion 10 FAIL — curve at the congested front wandered to |x| = {:.3e} (allowed {:.3e})",
        st.max_abs_station,
        st.station_tol
    );
    for (name, drift) in &st.pair_drifts {
        assert!(
            *drift <= st.drift_tol,
            "criterion 10 FAIL — mass between {name} curves drifted by {drift:.3e} (allowed {:.3e})",
            st.drift_tol
        );
    }
    let drifts: Vec<String> =
        st.pair_drifts.iter().map(|(n, d)| format!("{n}: {d:.2e}")).collect();
    println!(
        "criterion 10 PASS — front curve pinned (|X| <= {:.2e} <= {:.2e}); mass drift {} <= {:.2e}",
        st.max_abs_station,
        st.station_tol,
        drifts.join(", "),
        st.drift_tol
    );
}

#[test]
fn criterion_11_slope_oracle_identity_and_table() {
    let worst_identity = uniform_slope_identity_worst_dev(0..100);
    assert!(
        worst_identity <= SLOPE_IDENTITY_TOL,
        "criterion 11 FAIL — forward difference deviates from the slope oracle by {worst_identity:.3e}"
    );
    let mut worst_table = 0.0_f64;
    for h in [0.5, 1.0] {
        for b in matched_scale_slope_table(h) {
            assert!(b.cells > 0, "criterion 11 FAIL — empty branch ]{}, {}[", b.lo, b.hi);
            assert!(
                b.worst_dev <= SLOPE_TABLE_TOL,
                "criterion 11 FAIL — h = {h}, branch ]{}, {}[: slope off by {:.3e}",
                b.lo,
                b.hi,
                b.worst_dev
            );
            worst_table = worst_table.max(b.worst_dev);
        }
    }
    println!(
        "criterion 11 PASS — slope identity to {worst_identity:.2e} over 100 random data; table branches to {worst_table:.2e}"
    );
}
