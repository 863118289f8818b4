use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String) {
    let Output { status, stdout, .. } = Command::new(env!("CARGO_BIN_EXE_cpltl")).args(args).output().unwrap();
    (status.code().unwrap(), String::from_utf8(stdout).unwrap())
}

fn field<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn check_for_some_valuation() {
    let (code, out) = run(&["check", &fixture("sys_a.sys"), "G(q -> F[<=x] p)"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "verdict"), Some("holds"));
    let bound: u64 = field(&out, "bound").unwrap().parse().unwrap();
    assert!(bound >= 3);
}

#[test]
fn check_fixed_valuation_prints_a_replayable_counterexample() {
    let dir = std::env::temp_dir().join(format!("cpltl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cex = dir.join("cex.trace");
    let (code, out) = run(&[
        "check",
        &fixture("sys_a.sys"),
        "G(q -> F[<=x] p)",
        "--valuation",
        "x=2",
        "--counterexample-out",
        cex.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert_eq!(field(&out, "verdict"), Some("fails"));
    assert_eq!(field(&out, "path"), Some("(s0 s1)^w"));
    let cex = cex.to_str().unwrap();
    assert_eq!(run(&["eval-trace", cex, "G(q -> F[<=x] p)", "--valuation", "x=2"]).0, 1);
    assert_eq!(run(&["eval-trace", cex, "G(q -> F[<=x] p)", "--valuation", "x=3"]).0, 0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_and_format_errors_exit_with_two() {
    assert_eq!(run(&["check", "missing.sys", "tt"]).0, 2);
    assert_eq!(run(&["check", &fixture("sys_a.sys"), "G(q ->"]).0, 2);
    assert_eq!(run(&["check", &fixture("sys_a.sys"), "F[<=x] p & G[<=x] q"]).0, 2);
    assert_eq!(run(&["check", &fixture("sys_a.sys"), "F[<=x] p", "--valuation", "y=1"]).0, 2);
    assert_eq!(run(&["check", &fixture("sys_a.sys"), "F[<=x@2] p"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["eval-trace", &fixture("bad_kappa.trace"), "tt"]).0, 2);
}

#[test]
fn optimize_objectives() {
    let (code, out) = run(&["optimize", &fixture("sys_a.sys"), "G(q -> F[<=x] p)", "--objective", "min-min"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "value"), Some("3"));
    assert!(out.contains("witness: x=3"));
    let (code, out) = run(&["optimize", &fixture("sys_a.sys"), "G[<=y] q", "--objective", "max-max"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "value"), Some("2"));
    let (code, out) = run(&["optimize", &fixture("sys_a.sys"), "G[<=y] (p | q)", "--objective", "max-min"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "result"), Some("unbounded"));
    let (code, out) = run(&["optimize", &fixture("sys_a.sys"), "F[<=x] (p & q)", "--objective", "min-max"]);
    assert_eq!(code, 1);
    assert_eq!(field(&out, "result"), Some("infeasible"));
    assert_eq!(run(&["optimize", &fixture("sys_a.sys"), "G[<=y] q", "--objective", "min-min"]).0, 2);
    assert_eq!(run(&["optimize", &fixture("sys_a.sys"), "G[<=y] q", "--objective", "cheapest"]).0, 2);
}

#[test]
fn formula_from_file() {
    let (code, out) = run(&["check", &fixture("sys_a.sys"), "--formula-file", &fixture("response.ltl")]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "verdict"), Some("holds"));
}

#[test]
fn eval_trace_on_t1() {
    let t1 = fixture("t1.trace");
    assert_eq!(run(&["eval-trace", &t1, "G(q -> F[<=x] p)", "--valuation", "x=3"]), (0, "value=true\n".into()));
    assert_eq!(run(&["eval-trace", &t1, "G(q -> F[<=x] p)", "--valuation", "x=2"]), (1, "value=false\n".into()));
    assert_eq!(run(&["eval-trace", &t1, "p", "--position", "1"]).0, 0);
    // Every variable must be bound.
    assert_eq!(run(&["eval-trace", &t1, "F[<=x] p"]).0, 2);
}

#[test]
fn translate_artifacts() {
    let (code, out) = run(&["translate", "F[<=x] q", "--emit", "relativized"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "relativized"), Some("(!p@1 | p@1 U !p@1 U q) & (p@1 | !p@1 U p@1 U q)"));
    let (_, out) = run(&["translate", "G p", "--emit", "nba"]);
    assert!(out.starts_with("states 1\n"));
    let (code, out) = run(&["translate", "tt", "--emit", "product", "--system", &fixture("sys_a.sys")]);
    assert_eq!(code, 0);
    let n: usize = out.lines().next().unwrap().strip_prefix("vertices ").unwrap().parse().unwrap();
    assert!(n <= 4);
    assert_eq!(run(&["translate", "tt", "--emit", "product"]).0, 2);
}

#[test]
fn selftest_is_reproducible() {
    let a = run(&["selftest", "--seed", "11", "--cases", "30"]);
    assert_eq!(a.0, 0);
    assert_eq!(field(&a.1, "failures"), Some("0"));
    assert_eq!(run(&["selftest", "--seed", "11", "--cases", "30"]), a);
}
