use std::path::Path;
use std::process::Command;

use fpp_core::cli::{run_cli, EXIT_CONFIG, EXIT_GATE, EXIT_OK, EXIT_RESOURCE};

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_cli(std::iter::once("fpp").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const VELOCITY: &str = r#"
[model]
kind = "free"
rank = 2

[distribution]
kind = "uniform"
a = 0.0
b = 1.0

[experiment]
kind = "velocity"
seed = 21
replications = 60
n = [5, 10]
directions = ["pole:ab", "sampled:4"]
expect = 0.5
jsonl = true
"#;

#[test]
fn query_examples() {
    let (code, out) = cli(&["query", "cone", "a"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&out)["cone"], 0.25);

    let (_, out) = cli(&["query", "gromov", "a^2", "b^2", "1"]);
    assert_eq!(json(&out)["gromov"], 0.0);

    let (_, out) = cli(&["query", "passage", "1", "a^3", "--seed", "7"]);
    let v = json(&out);
    assert_eq!(v["path_edges"], 3);
    assert_eq!(v["path"], serde_json::json!(["1", "a", "a^2", "a^3"]));

    let (_, out) = cli(&["query", "sphere", "4"]);
    assert_eq!(json(&out)["count"], "108");
    let (_, out) = cli(&["query", "distance", "1", "abab"]);
    assert_eq!(json(&out)["distance"], 4);
    let (_, out) = cli(&["query", "lambda"]);
    assert!((json(&out)["lambda"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn tree_passage_query_is_geodesic_weight_sum() {
    use fpp_core::environment::{Environment, WeightDistribution};
    use fpp_core::group::GroupModel;
    let (_, out) = cli(&["query", "passage", "1", "a^3", "--seed", "7"]);
    let f2 = GroupModel::free(2);
    let env = Environment::new(7, WeightDistribution::Uniform { a: 0.0, b: 1.0 });
    let path = f2.word_geodesic(&f2.parse_element("1").unwrap(), &f2.parse_element("a^3").unwrap()).unwrap();
    let expect = fpp_core::metric::path_weight(&f2, &env, &path).unwrap();
    assert_eq!(json(&out)["time"].as_f64().unwrap(), expect);
}

#[test]
fn query_errors() {
    assert_eq!(cli(&["query", "cone", "q"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["query", "gromov", "a"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["query", "cone", "a", "--config", "/no/such/file.toml"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["frobnicate"]).0, EXIT_CONFIG);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn validate_builtin_and_defective_automata() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = cli(&["validate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!(dir.path().join("validate.json").exists());

    // one state looping on every label accepts non-geodesic words
    write(dir.path(), "loop.aut", "states 1 initial 1\n1 a 1\n1 a^-1 1\n1 b 1\n1 b^-1 1\n");
    let cfg = write(dir.path(), "bad.toml", "[model]\nkind = \"automatic\"\npowers = [1, 1]\nautomaton = \"loop.aut\"\n");
    let (code, out) = cli(&["validate", "--config", &cfg, "--radius", "3"]);
    assert_eq!(code, EXIT_GATE);
    let violations = json(&out)["verification"]["violations"].as_array().unwrap().len();
    assert!(violations > 0);

    let cfg = write(dir.path(), "garbled.toml", "[model]\nkind = \"automatic\"\npowers = [1, 1]\nautomaton = \"nope.aut\"\n");
    assert_eq!(cli(&["validate", "--config", &cfg]).0, EXIT_CONFIG);
}

#[test]
fn run_writes_manifest_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.toml", VELOCITY);
    let out_dir = dir.path().join("out");
    let (code, stdout) = cli(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    assert!(stdout.contains("PASS"));
    let manifest = json(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap());
    assert_eq!(manifest["seed"], 21);
    assert_eq!(manifest["experiment"], "velocity");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert!(csv.starts_with("replication,direction,n,time,velocity,path_edges,near_tie\n"));
    assert_eq!(csv.lines().count(), 1 + 60 * 4);
    let jsonl = std::fs::read_to_string(out_dir.join("records.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 60 * 4);
    assert_eq!(json(jsonl.lines().next().unwrap())["replication"], 0);

    let (code, report) = cli(&["report", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&report)["gates_passed"], true);
}

#[test]
fn records_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.toml", VELOCITY);
    let mut files = Vec::new();
    for w in ["1", "3", "8"] {
        let out = dir.path().join(format!("w{w}"));
        let (code, _) = cli(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", w]);
        assert_eq!(code, EXIT_OK);
        files.push(["records.csv", "records.jsonl", "summary.json", "manifest.json"].map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);
}

#[test]
fn seed_override_changes_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.toml", VELOCITY);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    cli(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    cli(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--seed", "22"]);
    assert_ne!(std::fs::read(a.join("records.csv")).unwrap(), std::fs::read(b.join("records.csv")).unwrap());
    let m = json(&std::fs::read_to_string(b.join("manifest.json")).unwrap());
    assert_eq!(m["seed"], 22);
}

#[test]
fn exit_codes_from_binary() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_fpp");
    let run = |cfg: &str| {
        Command::new(bin)
            .args(["run", "--config", cfg, "--out"])
            .arg(dir.path().join("o"))
            .output()
            .unwrap()
    };

    let ok = write(dir.path(), "ok.toml", VELOCITY);
    assert_eq!(run(&ok).status.code(), Some(EXIT_OK));

    let gate = write(dir.path(), "gate.toml", &VELOCITY.replace("expect = 0.5", "expect = 0.9"));
    let out = run(&gate);
    assert_eq!(out.status.code(), Some(EXIT_GATE));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));

    let bad = write(dir.path(), "bad.toml", "[experiment]\nkind = \"velocity\"\nn = [3, 2]\n");
    assert_eq!(run(&bad).status.code(), Some(EXIT_CONFIG));

    let big = write(dir.path(), "big.toml", &VELOCITY.replace("jsonl = true", "max_domain_vertices = 10"));
    let out = run(&big);
    assert_eq!(out.status.code(), Some(EXIT_RESOURCE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resource"));
}

#[test]
fn manifest_precedes_failed_run() {
    let dir = tempfile::tempdir().unwrap();
    let big = write(dir.path(), "big.toml", &VELOCITY.replace("jsonl = true", "max_domain_vertices = 10"));
    let out = dir.path().join("partial");
    assert_eq!(cli(&["run", "--config", &big, "--out", out.to_str().unwrap()]).0, EXIT_RESOURCE);
    assert!(out.join("manifest.json").exists());
    assert!(!out.join("records.csv").exists());
}
