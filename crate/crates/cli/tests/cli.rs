use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablegraph")).args(args).output().expect("binary runs")
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablegraph"))
        .args(args)
        .env("STABLEGRAPH_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn enumerate_reproduces_the_s2_table() {
    let out = stdout(&run(&["enumerate", "--surplus", "2", "--leaves", "0", "--alpha", "5/4"]));
    let rows: Vec<Value> = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.len(), 7);
    let mut probs: Vec<(String, String)> =
        rows.iter().map(|r| (r["prob_num"].as_str().unwrap().into(), r["prob_den"].as_str().unwrap().into())).collect();
    probs.sort();
    let mut want: Vec<(String, String)> =
        [("1", "2"), ("1", "7"), ("2", "21"), ("1", "21"), ("1", "7"), ("1", "21"), ("1", "42")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    want.sort();
    assert_eq!(probs, want);
    assert!(rows.iter().all(|r| r["graph"]["surplus"] == 2));
}

#[test]
fn enumerate_brownian_csv() {
    let out = stdout(&run(&["enumerate", "--surplus", "2", "--leaves", "0", "--brownian", "--format", "csv"]));
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "code,sl,weight_product,mult_product,sym,prob_num,prob_den");
    let mut nonzero: Vec<String> = rows[1..]
        .iter()
        .map(|r| r.split(',').collect::<Vec<_>>())
        .filter(|c| c[5] != "0")
        .map(|c| format!("{}/{}", c[5], c[6]))
        .collect();
    nonzero.sort();
    assert_eq!(nonzero, vec!["1/5", "2/5", "2/5"]);
}

#[test]
fn enumerate_needs_a_law() {
    assert!(!run(&["enumerate", "--surplus", "1", "--leaves", "0"]).status.success());
}

#[test]
fn marchal_output_is_reproducible_and_thread_independent() {
    let args = ["marchal", "--surplus", "2", "--alpha", "5/4", "--steps", "5", "--samples", "700", "--seed", "11"];
    let a = stdout(&run_with_threads(&args, "1"));
    let b = stdout(&run_with_threads(&args, "3"));
    let c = stdout(&run(&args));
    assert_eq!(a, b);
    assert_eq!(a, c);
    let rows = lines(&a);
    assert_eq!(rows[0]["header"]["seed"], 11);
    assert_eq!(rows[0]["header"]["streams"]["count"], 3);
    assert_eq!(rows.len(), 701);
    assert!(rows[1..].iter().all(|r| r["n"] == 5));
}

#[test]
fn marchal_trajectory_lists_every_step() {
    let out = stdout(&run(&["marchal", "--surplus", "0", "--alpha", "3/2", "--steps", "3", "--seed", "2", "--emit", "trajectory"]));
    let rows = lines(&out);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4]["graph"]["leaves"], 4);
}

#[test]
fn decimal_alpha_warns() {
    let o = run(&["marchal", "--surplus", "1", "--alpha", "1.3", "--steps", "2", "--seed", "1"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn dist_draws_and_moments() {
    let out = stdout(&run(&["dist", "--law", "dirichlet", "--params", "1,2,3", "--samples", "5", "--seed", "4"]));
    let rows: Vec<&str> = out.lines().collect();
    assert!(rows[0].starts_with("# "));
    assert_eq!(rows[1], "x0,x1,x2");
    assert_eq!(rows.len(), 7);
    for r in &rows[2..] {
        let s: f64 = r.split(',').map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
    let m = stdout(&run(&["dist", "--law", "pd", "--params", "0.25,0.25", "--moments", "2"]));
    let v: f64 = m.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.6).abs() < 1e-12);
    let ml = stdout(&run(&["dist", "--law", "ml", "--params", "0.5,1", "--moments", "1,2"]));
    for line in ml.lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((c[1] / c[2] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn urn_csv_has_one_row_per_rep() {
    let out = stdout(&run(&["urn", "--scheme", "triangular", "--params", "1,1,1,2", "--steps", "1000", "--reps", "10", "--seed", "3"]));
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[1], "red,red_rescaled");
    assert_eq!(rows.len(), 12);
    let tt = stdout(&run(&["urn", "--scheme", "threetype", "--alpha", "3/2", "--params", "3,3", "--steps", "500", "--reps", "2", "--seed", "3"]));
    assert_eq!(tt.lines().nth(1).unwrap(), "a0,a1,a2,a3,b0,b1,b2,b3,c0,c1,c2,c3");
    assert!(!run(&["urn", "--scheme", "threetype", "--params", "3,3", "--steps", "5", "--seed", "3"]).status.success());
}

#[test]
fn conditioned_configuration_model_on_two_vertices_is_the_figure_eight() {
    let out = stdout(&run(&["cm", "--alpha", "5/4", "--vertices", "2", "--condition", "2,0", "--samples", "20", "--seed", "5"]));
    let rows = lines(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["count"], 20);
    assert_eq!(rows[1]["exact"], 1.0);
}

#[test]
fn unconditioned_configuration_model_emits_graphs() {
    let out = stdout(&run(&["cm", "--alpha", "3/2", "--vertices", "30", "--samples", "4", "--seed", "5"]));
    assert_eq!(lines(&out).len(), 5);
}

#[test]
fn bijection_checks_pass() {
    for check in ["roundtrip", "fibers", "plans"] {
        let out = stdout(&run(&["bijection", "--check", check, "--surplus", "2", "--leaves", "0"]));
        assert!(out.starts_with("PASS"), "{out}");
    }
}

#[test]
fn continuum_linebreak_graph_json() {
    let args = ["continuum", "--method", "linebreak", "--surplus", "1", "--alpha", "3/2", "--n", "3", "--samples", "3", "--seed", "8", "--emit", "graphjson"];
    let out = stdout(&run(&args));
    assert_eq!(out, stdout(&run(&args)));
    let rows = lines(&out);
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let g = &r["graph"];
        assert_eq!(g["surplus"], 1);
        assert_eq!(g["leaves"], 3);
        assert!(g["edges"].as_array().unwrap().iter().all(|e| e["len"].as_f64().unwrap() > 0.0));
        assert!(g["eta"].as_object().unwrap().contains_key("L0"));
    }
}

#[test]
fn continuum_glue_metric() {
    let out = stdout(&run(&["continuum", "--method", "glue", "--surplus", "2", "--alpha", "5/4", "--samples", "2", "--seed", "9", "--emit", "metric"]));
    let rows = lines(&out);
    for r in &rows[1..] {
        assert_eq!(r["metric"]["labels"], serde_json::json!([0, 1]));
        assert!(r["remainder"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn verify_figure2_exits_zero_with_report() {
    let out = stdout(&run(&["verify", "--suite", "figure2"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["suites"][0]["suite"], "figure2");
}

#[test]
fn bad_flags_are_rejected() {
    assert!(!run(&["verify", "--suite", "nope"]).status.success());
    assert!(!run(&["continuum", "--surplus", "1", "--alpha", "3", "--seed", "1"]).status.success());
    assert!(!run(&["frobnicate"]).status.success());
}

#[test]
fn out_flag_writes_a_file() {
    let path = std::env::temp_dir().join(format!("stablegraph-cli-{}.json", std::process::id()));
    let o = run(&["enumerate", "--surplus", "1", "--leaves", "0", "--alpha", "3/2", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let rows: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    std::fs::remove_file(path).unwrap();
}
