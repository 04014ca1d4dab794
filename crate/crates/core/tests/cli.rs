use std::process::Command;

use autoseq::cli::run_captured;

fn run(args: &[&str]) -> (i32, String, String) {
    run_captured(std::iter::once("autoseq").chain(args.iter().copied()))
}

fn body(out: &str) -> Vec<&str> {
    out.lines().filter(|l| !l.starts_with('#')).collect()
}

const THUE_MORSE: &str = "\
# Thue-Morse
base: 2
states: s0 s1
initial: s0
output: 0 1
delta s0: s0 s1
delta s1: s1 s0
";

#[test]
fn header_echoes_parameters() {
    let (code, out, _) = run(&["freq", "--builtin", "thue-morse", "--c", "3/2", "--N", "1000"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# autoseq "));
    for key in ["# command=freq", "# builtin=thue-morse", "# c=3/2", "# N=1000", "# workers=1"] {
        assert!(out.lines().any(|l| l == key), "missing {key}");
    }
    assert_eq!(body(&out), ["letter,count,rate", "0,522,0.522", "1,478,0.478"]);
}

#[test]
fn subwords_small() {
    let (code, out, _) = run(&["subwords", "--builtin", "thue-morse", "--c", "3/2", "--N", "1000", "--Hmax", "4"]);
    assert_eq!(code, 0);
    assert_eq!(body(&out)[..5], ["H,N_H,log2_N_H_over_H", "1,2,1.0", "2,4,1.0", "3,8,1.0", "4,16,1.0"]);
}

#[test]
fn sync_cerny() {
    let (code, out, _) = run(&["sync", "--builtin", "cerny:4"]);
    assert_eq!(code, 0);
    // (n-1)^2 for the Cerny automaton on 4 states
    assert_eq!(body(&out)[1], "true,011101110,9,4");
}

#[test]
fn json_is_one_document() {
    let (code, out, _) = run(&["sieve", "--N", "100", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).expect("valid json");
    assert_eq!(v["command"], "sieve");
    assert_eq!(v["config"]["N"], "100");
    assert!(v["rows"].is_array());
}

#[test]
fn emit_alias() {
    let a = run(&["sieve", "--N", "50", "--emit", "json"]);
    let b = run(&["sieve", "--N", "50", "--format", "json"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1.replace("\"emit\"", "\"format\""), b.1);
}

#[test]
fn automaton_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tm.txt");
    std::fs::write(&path, THUE_MORSE).unwrap();
    let p = path.to_str().unwrap();
    let (code, from_file, err) = run(&["eval", "--automaton", p, "--c", "3/2", "--count", "50"]);
    assert_eq!(code, 0, "{err}");
    let (_, builtin, _) = run(&["eval", "--builtin", "thue-morse", "--c", "3/2", "--count", "50"]);
    assert_eq!(body(&from_file), body(&builtin));
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let (code, out, _) = run(&["sieve", "--N", "1000", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    let (_, direct, _) = run(&["sieve", "--N", "1000"]);
    assert_eq!(body(&written), body(&direct));
}

#[test]
fn dry_run_stops_before_computing() {
    // would exceed any budget if it ran
    let (code, out, _) = run(&["freq", "--builtin", "thue-morse", "--c", "3/2", "--N", "1000000000000", "--dry-run"]);
    assert_eq!(code, 0);
    assert!(out.lines().all(|l| l.starts_with('#')));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bogus"]).0, 2);
    assert_eq!(run(&["freq", "--builtin", "nope", "--N", "10"]).0, 2);
    assert_eq!(run(&["freq", "--builtin", "thue-morse", "--c", "3/0", "--N", "10"]).0, 2);
    assert_eq!(run(&["sieve", "--N", "10", "--workers", "0"]).0, 2);
    assert_eq!(run(&["eval", "--automaton", "/nonexistent/a.txt"]).0, 1);

    let (code, _, err) = run(&["cells", "--m", "21", "--H", "10"]);
    assert_eq!(code, 3);
    assert!(err.contains("resource limit"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let (code, out, err) = run(&["sieve", "--N", "10", "--frobnicate"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(!err.is_empty());
}

#[test]
fn help_goes_to_stdout() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("subwords"));
}

#[test]
fn binary_exit_status() {
    let bin = env!("CARGO_BIN_EXE_autoseq");
    let ok = Command::new(bin).args(["sync", "--builtin", "cerny:3"]).output().unwrap();
    assert!(ok.status.success());
    let bad = Command::new(bin).args(["cells", "--m", "21", "--H", "10"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
}
