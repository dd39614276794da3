use std::process::{Command, Output};

use graphstein::graph::io::{read_edge_list_file, write_edge_list_file};
use graphstein::graph::{count_four_cycles, gen_gnp, Graph};
use serde_json::Value;
use tempfile::TempDir;

fn graphstein(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphstein"))
        .args(args)
        .env_remove("GRAPHSTEIN_SEED")
        .output()
        .expect("spawn graphstein")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn two_cliques(n: usize) -> Graph {
    let h = n / 2;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (i < h) == (j < h) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

#[test]
fn gen_then_count_matches_library() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.txt");
    let o = graphstein(&["gen", "--n", "60", "--p", "0.4", "--seed", "7", "--out", &g]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = graphstein(&["--no-timestamp", "count", "--in", &g]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["n"], 60);
    assert_eq!(v["t2"].as_u64().unwrap(), count_four_cycles(&gen_gnp(60, 0.4, 7).unwrap()));
    assert!(v.get("timestamp").is_none());
}

#[test]
fn count_patterns() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "k4.txt");
    write_edge_list_file(&Graph::complete(4).unwrap(), &f).unwrap();
    for (pat, key, want) in [("k2", "t1", 6), ("k3", "triangles", 4), ("c4", "t2", 3)] {
        let v = json(&graphstein(&["count", "--in", &f, "--pattern", pat]));
        assert_eq!(v[key], want, "{pat}");
    }
}

#[test]
fn gen_round_trip_preserves_graph() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "g.txt");
    assert_eq!(code(&graphstein(&["gen", "--n", "33", "--p", "0.3", "--seed", "11", "--out", &f])), 0);
    assert!(read_edge_list_file(&f).unwrap() == gen_gnp(33, 0.3, 11).unwrap());
    let stdout = graphstein(&["gen", "--n", "33", "--p", "0.3", "--seed", "11"]).stdout;
    assert_eq!(stdout, std::fs::read(&f).unwrap());
}

#[test]
fn test_exit_codes() {
    let dir = TempDir::new().unwrap();
    let homo = p(&dir, "homo.txt");
    let het = p(&dir, "het.txt");
    write_edge_list_file(&gen_gnp(200, 0.5, 3).unwrap(), &homo).unwrap();
    write_edge_list_file(&two_cliques(200), &het).unwrap();

    let o = graphstein(&["test", "--in", &homo]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["reject"], false);
    assert!(!v["intervals"].as_array().unwrap().is_empty());

    let o = graphstein(&["test", "--in", &het]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["reject"], true);

    // confset reports the same empty set but succeeds
    let o = graphstein(&["confset", "--in", &het]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["intervals"].as_array().unwrap().is_empty());
}

#[test]
fn verify_graph_coupling_exact() {
    let o = graphstein(&["verify-coupling", "--builtin", "graph", "--n", "5", "--p", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    for f in v["functions"].as_array().unwrap() {
        let r = f["residual"].as_f64().unwrap().abs();
        let s = f["scale"].as_f64().unwrap().max(1.0);
        assert!(r <= 1e-10 * s, "{}: {r}", f["name"]);
    }
}

#[test]
fn verify_builtins() {
    for b in ["coins", "sign-flip", "reflection", "size-bias", "fulman"] {
        let o = graphstein(&["verify-coupling", "--builtin", b, "--n", "4", "--p", "0.3"]);
        assert_eq!(code(&o), 0, "{b}: {}", String::from_utf8_lossy(&o.stdout));
    }
    let o = graphstein(&["verify-coupling", "--builtin", "graph", "--n", "5", "--bounds"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["bound_terms"]["b1"].as_f64().unwrap() >= 0.0);
}

#[test]
fn same_seed_is_byte_identical() {
    let run = || {
        graphstein(&[
            "--no-timestamp",
            "experiment",
            "--kind",
            "coverage",
            "--n",
            "30,40",
            "--p",
            "0.5",
            "--reps",
            "40",
            "--seed",
            "5",
        ])
    };
    let (a, b) = (run(), run());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let one_job = graphstein(&[
        "--no-timestamp",
        "experiment",
        "--kind",
        "coverage",
        "--n",
        "30,40",
        "--p",
        "0.5",
        "--reps",
        "40",
        "--seed",
        "5",
        "--jobs",
        "1",
    ]);
    // the config echo records --jobs; the results must not depend on it
    let (mut x, mut y) = (json(&a), json(&one_job));
    x["config"]["jobs"] = Value::Null;
    y["config"]["jobs"] = Value::Null;
    assert_eq!(x, y);
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_graphstein"));
        c.args(["gen", "--n", "20", "--p", "0.5"]).args(extra).env_remove("GRAPHSTEIN_SEED");
        if let Some(s) = env {
            c.env("GRAPHSTEIN_SEED", s);
        }
        c.output().unwrap()
    };
    let from_env = run(Some("99"), &[]);
    let from_flag = run(None, &["--seed", "99"]);
    assert_eq!(code(&from_env), 0);
    assert_eq!(from_env.stdout, from_flag.stdout);
}

#[test]
fn missing_seed_is_usage_error() {
    let o = graphstein(&["gen", "--n", "10", "--p", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("GRAPHSTEIN_SEED"));
    let o = graphstein(&["permstat", "--n", "10"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(code(&graphstein(&["gen", "--n", "ten", "--p", "0.5", "--seed", "1"])), 2);
    assert_eq!(code(&graphstein(&["count"])), 2);
    assert_eq!(code(&graphstein(&["frobnicate"])), 2);
    assert_eq!(code(&graphstein(&["gen", "--n", "10", "--p", "1.5", "--seed", "1"])), 2);
    assert_eq!(code(&graphstein(&["verify-coupling", "--builtin", "graph", "--mode", "mc"])), 2);
    assert_eq!(code(&graphstein(&["--help"])), 0);
}

#[test]
fn malformed_graph_reports_line() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("bad.txt");
    std::fs::write(&f, "4 2\n0 1\n2 x\n").unwrap();
    let o = graphstein(&["count", "--in", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&f, "3 1\n1 1\n").unwrap();
    let err = String::from_utf8_lossy(&graphstein(&["count", "--in", f.to_str().unwrap()]).stderr).into_owned();
    assert!(err.contains("line 2") && err.contains("self-loop"), "{err}");
    assert_eq!(code(&graphstein(&["count", "--in", dir.path().join("missing").to_str().unwrap()])), 2);
}

#[test]
fn permstat_single_and_sampled() {
    let v = json(&graphstein(&["permstat", "--perm", "2 1 4 3"]));
    assert_eq!(v["descents"], 2);
    assert_eq!(v["inversions"], 2);

    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "w.csv");
    let o = graphstein(&["permstat", "--n", "20", "--reps", "300", "--seed", "4", "--csv", &csv]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("rep,w1,w2"));
    assert_eq!(text.lines().count(), 301);
    assert_eq!(json(&o)["reps"], 300);
}

#[test]
fn experiment_csv_and_kernel() {
    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "m.csv");
    let o = graphstein(&[
        "experiment",
        "--kind",
        "distance",
        "--n",
        "20",
        "--p",
        "0.5",
        "--reps",
        "50",
        "--seed",
        "1",
        "--csv",
        &csv,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,rep"));
    assert_eq!(text.lines().count(), 51);
    let o = graphstein(&[
        "experiment",
        "--kind",
        "power",
        "--n",
        "30",
        "--kernel",
        "const:0.5",
        "--reps",
        "20",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&graphstein(&["experiment", "--kind", "power", "--n", "20", "--reps", "5", "--seed", "1"])), 2);
}
