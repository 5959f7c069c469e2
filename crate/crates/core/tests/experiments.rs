use fpp_core::experiments::{run_experiment, ExperimentConfig, ExperimentOutput};
use fpp_core::FppError;

const F2: &str = "[model]\nkind = \"free\"\nrank = 2\n";
const MIXED: &str = "[model]\nkind = \"free-mixed\"\ngenerators = [\"a\", \"a^-1\", \"b^2\", \"b^-2\", \"b\", \"b^-1\"]\n";
const UNIFORM: &str = "[distribution]\nkind = \"uniform\"\na = 0.0\nb = 1.0\n";

fn run(model: &str, dist: &str, experiment: &str) -> ExperimentOutput {
    let cfg = ExperimentConfig::parse(&format!("{model}{dist}[experiment]\n{experiment}")).unwrap();
    run_experiment(&cfg).unwrap()
}

fn summary_f64(out: &ExperimentOutput, pointer: &str) -> f64 {
    out.summary.pointer(pointer).and_then(|v| v.as_f64()).unwrap_or_else(|| panic!("{pointer} missing: {}", out.summary))
}

#[test]
fn tree_velocity_is_mean_weight() {
    let out = run(F2, UNIFORM, "kind = \"velocity\"\nseed = 12\nreplications = 200\nn = [10, 30]\nexpect = 0.5\n");
    let v = summary_f64(&out, "/directions/0/estimates/1/velocity/mean");
    assert!((0.47..=0.53).contains(&v), "{v}");
    assert!(out.gates_passed(), "{:?}", out.gates);
    assert_eq!(out.table.rows.len(), 400);
}

#[test]
fn tree_variance_slope_is_weight_variance() {
    let out = run(F2, UNIFORM, "kind = \"variance\"\nseed = 5\nreplications = 2000\nn = [10, 20, 30]\nb = 1\n");
    let slope = summary_f64(&out, "/fit/slope");
    assert!((slope - 1.0 / 12.0).abs() <= 0.1 / 12.0, "{slope}");
    // on a tree E ℓ = n, so the Kesten ratio is the per-step variance
    let c = summary_f64(&out, "/kesten_constant");
    assert!((c - 1.0 / 12.0).abs() < 0.015, "{c}");
}

#[test]
fn tree_concentration_has_no_long_geodesics() {
    let out = run(F2, UNIFORM, "kind = \"concentration\"\nseed = 1\nreplications = 300\nn = [5, 10]\nratio_threshold = 1.01\n");
    let ratio = out.table.column("edge_ratio").unwrap();
    assert!(out.table.rows.iter().all(|r| r[ratio].to_string() == "1"));
    assert_eq!(summary_f64(&out, "/long_geodesic_frequency/1"), 0.0);
}

#[test]
fn clt_diagnostics() {
    let out = run(F2, UNIFORM, "kind = \"clt\"\nseed = 2\nreplications = 5000\nn = [1, 100]\nb = 0\n");
    let per_n = &out.summary["per_n"];
    // n = 1 is the uniform law itself: flat, clearly not normal
    assert_eq!(per_n[0]["normal_at_1pct"], false);
    assert!(per_n[0]["excess_kurtosis"].as_f64().unwrap() < -1.0);
    assert_eq!(per_n[1]["normal_at_1pct"], true);
    assert!(out.gates.is_empty());
}

#[test]
fn tree_direction_statistics_are_exact() {
    let out = run(
        F2,
        UNIFORM,
        "kind = \"direction\"\nseed = 3\nreplications = 20\nn = [6, 12]\ndirections = [\"pole:a\", \"pole:a^-1\"]\n",
    );
    for row in out.summary["rays"].as_array().unwrap() {
        assert_eq!(row["tail_defect_max"], 0.0);
    }
    for row in out.summary["midpoints"].as_array().unwrap() {
        assert_eq!(row["max"], 0.0);
    }
}

#[test]
fn direction_rejects_far_midpoints() {
    let cfg = ExperimentConfig::parse(&format!(
        "{F2}[experiment]\nkind = \"direction\"\nreplications = 2\nn = [5]\nc = 0\ndirections = [\"pole:a\", \"pole:ab\"]\n"
    ))
    .unwrap();
    assert!(matches!(run_experiment(&cfg), Err(FppError::Domain(_))));
}

#[test]
fn tree_coalescence_is_certain() {
    let out = run(F2, UNIFORM, "kind = \"coalescence\"\nseed = 4\nreplications = 30\nn = [5, 10]\nbasepoints = [\"1\", \"b\"]\n");
    assert!(out.gates_passed(), "{:?}", out.gates);
    assert_eq!(summary_f64(&out, "/per_n/1/coalesced_fraction"), 1.0);
}

#[test]
fn mixed_coalescence_through_bridge() {
    let dist = "[distribution]\nkind = \"bounded-away\"\na = 1.0\nb = 2.0\n";
    let out = run(MIXED, dist, "kind = \"coalescence\"\nseed = 4\nreplications = 30\nn = [5, 10]\ndirections = [\"pole:a\"]\n");
    assert!(out.gates_passed(), "{:?}", out.gates);
    let idx = out.table.column("meeting_distance").unwrap();
    assert!(out.table.rows.iter().all(|r| r[idx].to_string() == "0"));
}

#[test]
fn tree_coarse_grain_matches_prediction() {
    let out = run(F2, UNIFORM, "kind = \"coarse-grain\"\nseed = 6\nreplications = 200\nscale = 2\nlength = 10\ndirections = [\"sampled:3\"]\n");
    assert!(out.gates_passed(), "{:?}", out.gates);
    // every admissible 2-word has frequency 1/12 on F2
    for w in out.summary["words"].as_array().unwrap() {
        assert!((w["frequency"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-9);
    }
}

#[test]
fn frequency_of_inadmissible_word_is_zero() {
    let out = run(F2, "", "kind = \"frequency\"\nreplications = 2\nlength = 20000\nwords = [\"a a^-1\", \"ab\", \"a\"]\n");
    let words = out.summary["words"].as_array().unwrap();
    let find = |name: &str| words.iter().find(|w| w["word"] == name).unwrap();
    assert_eq!(find("a a^-1")["predicted"], 0.0);
    assert_eq!(find("a a^-1")["empirical"]["mean"], 0.0);
    assert!((find("a b")["predicted"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-12);
    assert!((find("a")["predicted"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!(out.gates_passed());
}

#[test]
fn b_velocity_is_monotone_in_radius() {
    let out = run(
        MIXED,
        UNIFORM,
        "kind = \"b-velocity\"\nseed = 8\nreplications = 40\nn = [8, 16]\nb = 2\nb_grid = [0, 1, 2]\nb_ref = 4\nepsilon = 0.05\ndirections = [\"pole:b\"]\n",
    );
    assert!(out.gate("monotone_in_b").unwrap().passed);
    assert_eq!(out.summary["b_ref"], 4);
}

#[test]
fn counterexample_small_scale() {
    let out = run("", UNIFORM, "kind = \"counterexample\"\nseed = 9\nreplications = 200\nn = [60]\nalternation_levels = 3\n");
    assert!(out.gates_passed(), "{:?}", out.gates);
    let bound = summary_f64(&out, "/min_one_vs_two_bound");
    assert!((bound - 11.0 / 24.0).abs() < 1e-4, "{bound}");
    assert_eq!(out.summary["alternation"].as_array().unwrap().len(), 3);
}

#[test]
fn counterexample_notes_failed_precondition() {
    let dist = "[distribution]\nkind = \"bounded-away\"\na = 1.0\nb = 1.5\n";
    let out = run("", dist, "kind = \"counterexample\"\nreplications = 20\nn = [10]\nalternation_levels = 0\n");
    assert!(out.gate("z_velocity_below_mean").is_none());
    assert!(!out.notes.is_empty());
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let base = format!("{MIXED}{UNIFORM}[experiment]\nkind = \"velocity\"\nseed = 3\nreplications = 37\nn = [5, 9]\ndirections = [\"pole:b\", \"sampled:2\"]\n");
    let tables: Vec<_> = [1, 2, 5]
        .iter()
        .map(|w| {
            let cfg = ExperimentConfig::parse(&format!("{base}workers = {w}\n")).unwrap();
            run_experiment(&cfg).unwrap().table
        })
        .collect();
    assert_eq!(tables[0], tables[1]);
    assert_eq!(tables[0], tables[2]);
}

#[test]
fn oversized_domains_are_resource_errors() {
    let cfg = ExperimentConfig::parse(&format!(
        "{F2}[experiment]\nkind = \"velocity\"\nreplications = 2\nn = [20]\nb = 3\nmax_domain_vertices = 100\n"
    ))
    .unwrap();
    assert!(matches!(run_experiment(&cfg), Err(FppError::Resource { .. })));
}

#[test]
fn invalid_configs_are_rejected() {
    for bad in [
        "[experiment]\nkind = \"velocity\"\nn = [20, 10]\n",
        "[experiment]\nkind = \"velocity\"\nreplications = 0\n",
        "[experiment]\nkind = \"variance\"\nreplications = 1\nn = [5]\n",
        "[experiment]\nkind = \"warp\"\n",
        "[experiment]\nkind = \"velocity\"\nbogus = 1\n",
        "[distribution]\nkind = \"bernoulli\"\n[experiment]\nkind = \"velocity\"\n",
    ] {
        assert!(matches!(ExperimentConfig::parse(bad), Err(FppError::Config(_))), "{bad}");
    }
}
