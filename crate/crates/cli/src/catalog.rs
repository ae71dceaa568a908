//! Human- and machine-readable catalog of experiment kinds and the config
//! schema, backing `nlwr list`.

use serde::Serialize;

/// One experiment kind as the catalog describes it.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub kind: &'static str,
    /// What the experiment measures and claims.
    pub claim: &'static str,
    /// How the verdict (and exit code 0 vs 2) is decided.
    pub verdict: &'static str,
    /// Kind-specific requirements beyond the shared schema.
    pub requires: &'static [&'static str],
}

/// One field of the shared config schema.
#[derive(Debug, Clone, Serialize)]
pub struct FieldHelp {
    pub name: &'static str,
    pub required: bool,
    pub default: &'static str,
    pub help: &'static str,
}

/// The whole catalog, serialized as-is for `nlwr list --json`.
#[derive(Debug, Clone, Serialize)]
pub struct Catalog {
    pub experiments: Vec<CatalogEntry>,
    pub config_fields: Vec<FieldHelp>,
    pub scenarios: Vec<CatalogEntry>,
}

pub fn catalog() -> Catalog {
    let experiments = vec![
        CatalogEntry {
            kind: "tv_monotonicity",
            claim: "Tracks the total variation of the forward average along each run; \
                    with convex look-ahead weights it should never rise.",
            verdict: "Pass when, at every scale, the variation never climbs more than \
                      tolerance_fraction times the initial variation above its running minimum.",
            requires: &["t_end > 0"],
        },
        CatalogEntry {
            kind: "counterexample",
            claim: "Runs data built to break variation monotonicity under the uniform \
                    window: nested blocks whose gaps match the look-ahead length.",
            verdict: "Pass when the monotonicity check fails with a rise above 1e-3 at \
                      every scale, i.e. the expected break is actually observed.",
            requires: &["t_end > 0", "a uniform (or otherwise non-convex) kernel to break"],
        },
        CatalogEntry {
            kind: "rate_study",
            claim: "Measures how fast the forward average approaches the exact \
                    single-jump solution of the sharp local law as the look-ahead \
                    length shrinks.",
            verdict: "Pass when the fitted L1 convergence rate meets rate_threshold.",
            requires: &["scenario.kind = riemann", "at least 4 scales", "t_end > 0"],
        },
        CatalogEntry {
            kind: "entropy_check",
            claim: "Probes entropy production of the forward average with a family of \
                    smooth bumps and condenses the worst normalized deficit into a \
                    measured dissipation constant per scale.",
            verdict: "Pass when the active constants stay within a factor 2 of each \
                      other across the scale sweep.",
            requires: &["t_end > 0", "snapshots covering [0.05 t_end, 0.95 t_end]; count >= 9 recommended"],
        },
        CatalogEntry {
            kind: "single_run",
            claim: "One sweep of runs dumped as artifacts: step series, snapshot \
                    states, mass ledger.",
            verdict: "Always passes unless a run errors.",
            requires: &[],
        },
    ];

    let config_fields = vec![
        FieldHelp {
            name: "experiment",
            required: true,
            default: "-",
            help: "One of the kinds listed above.",
        },
        FieldHelp {
            name: "scenario",
            required: true,
            default: "-",
            help: "Initial-datum descriptor; see the scenario list.",
        },
        FieldHelp {
            name: "label",
            required: false,
            default: "digest of the config",
            help: "Artifact directory name under out_dir/<experiment>/.",
        },
        FieldHelp {
            name: "kernel",
            required: false,
            default: "{\"family\": \"exponential\"}",
            help: "Look-ahead weights: exponential, uniform, \
                   piecewise_linear {radius}, or custom {table | table_csv, convex} \
                   with (xi, density) samples ending at xi = 0.",
        },
        FieldHelp {
            name: "velocity",
            required: false,
            default: "{\"family\": \"greenshields\"}",
            help: "Speed law: greenshields (V = 1 - w) or custom {table}.",
        },
        FieldHelp {
            name: "epsilons",
            required: false,
            default: "[0.4, 0.2, 0.1, 0.05]",
            help: "Look-ahead lengths; one run per entry, no duplicates.",
        },
        FieldHelp {
            name: "grid",
            required: false,
            default: "{\"cells_per_eps\": 32, \"padding\": 0.25}",
            help: "dx = epsilon / cells_per_eps unless dx is set; domain is sized \
                   from the scenario unless x_left/x_right are both given.",
        },
        FieldHelp {
            name: "t_end",
            required: false,
            default: "1.0",
            help: "Run horizon.",
        },
        FieldHelp {
            name: "cfl",
            required: false,
            default: "0.5",
            help: "Safety factor in (0, 1] on the stable step bound.",
        },
        FieldHelp {
            name: "snapshots",
            required: false,
            default: "{\"count\": 9}",
            help: "Either {count: N} evenly over [0, t_end] or {times: [...]}.",
        },
        FieldHelp {
            name: "tolerance_fraction",
            required: false,
            default: "0.02",
            help: "Variation-verdict tolerance as a fraction of TV(u0).",
        },
        FieldHelp {
            name: "rate_threshold",
            required: false,
            default: "0.45",
            help: "Smallest acceptable fitted rate for rate studies.",
        },
        FieldHelp {
            name: "out_dir",
            required: false,
            default: "\"out\"",
            help: "Artifact root; experiments write to out_dir/<kind>/<label>/.",
        },
        FieldHelp {
            name: "seed",
            required: false,
            default: "0",
            help: "Default stream seed for seedless random scenarios.",
        },
    ];

    let scenarios = vec![
        CatalogEntry {
            kind: "riemann",
            claim: "Single jump between two constant states in [0, 1] at the origin.",
            verdict: "-",
            requires: &["left", "right"],
        },
        CatalogEntry {
            kind: "monotone_ramp",
            claim: "Linear ramp from 0 to 1 across [a, b].",
            verdict: "-",
            requires: &["a < b"],
        },
        CatalogEntry {
            kind: "random_bv",
            claim: "Seeded piecewise-constant datum with n_jumps jumps inside span.",
            verdict: "-",
            requires: &["optional seed (defaults to the config seed)", "n_jumps (default 20)", "span (default [-1, 1])"],
        },
        CatalogEntry {
            kind: "counterexample",
            claim: "Nested two-rectangle blocks tuned to the uniform window; the grid \
                    is refined automatically to resolve the finest block.",
            verdict: "-",
            requires: &["n_blocks (default 1)", "eps1 (default 1.0)"],
        },
        CatalogEntry {
            kind: "isolated_block",
            claim: "One isolated block ahead of a congested half-line, optional \
                    saturated notch of width delta at the origin.",
            verdict: "-",
            requires: &["h in (0, 1]", "ell > max(eps + delta, 2 eps) for every scale", "optional delta"],
        },
    ];

    Catalog { experiments, config_fields, scenarios }
}

/// Plain-text rendering for `nlwr list`.
pub fn render_text(c: &Catalog) -> String {
    let mut out = String::new();
    out.push_str("experiment kinds\n");
    for e in &c.experiments {
        out.push_str(&format!("\n  {}\n", e.kind));
        out.push_str(&format!("    claim:   {}\n", squeeze(e.claim)));
        out.push_str(&format!("    verdict: {}\n", squeeze(e.verdict)));
        if !e.requires.is_empty() {
            out.push_str(&format!("    needs:   {}\n", e.requires.join("; ")));
        }
    }
    out.push_str("\nconfig fields (JSON object)\n\n");
    for f in &c.config_fields {
        let req = if f.required { "required" } else { "optional" };
        out.push_str(&format!("  {:<20} {:<8} default {}\n", f.name, req, f.default));
        out.push_str(&format!("  {:<20} {}\n", "", squeeze(f.help)));
    }
    out.push_str("\nscenario kinds\n");
    for s in &c.scenarios {
        out.push_str(&format!("\n  {}\n", s.kind));
        out.push_str(&format!("    {}\n", squeeze(s.claim)));
        if !s.requires.is_empty() {
            out.push_str(&format!("    fields: {}\n", s.requires.join("; ")));
        }
    }
    out
}

/// Collapses the multi-line string literals into single-spaced prose.
fn squeeze(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
