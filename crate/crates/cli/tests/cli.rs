use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new(specs: &[(&str, &str)]) -> Sandbox {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in specs {
            std::fs::write(dir.path().join(name), body).unwrap();
        }
        Sandbox { dir }
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_algcover"))
            .current_dir(self.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn json(&self, args: &[&str]) -> (Value, i32) {
        let mut all = args.to_vec();
        all.extend(["--format", "json", "--quiet"]);
        let out = self.run(&all);
        let doc = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
        (doc, out.status.code().unwrap())
    }
}

fn standard() -> Sandbox {
    Sandbox::new(&[
        ("sqrt.poly", "poly: w^2 - z\n"),
        ("cbrt.poly", "poly: w^3 - z\n"),
        ("linear.poly", "poly: w - z\n"),
        ("w6.poly", "poly: w^6 - z\n"),
        ("cubic.poly", "# S3 monodromy\npoly: w^3 - 3*w - z\nbase: auto\n"),
        ("reducible.poly", "poly: (w^2 - z)*(w - z - 1)\n"),
    ])
}

#[test]
fn analyze_square_root() {
    let s = standard();
    let (doc, code) = s.json(&["analyze", "sqrt.poly"]);
    assert_eq!(code, 0);
    assert_eq!(doc["schema"], 1);
    let m = &doc["monodromy"];
    assert_eq!(m["degree"], 2);
    assert_eq!(m["group_order"], 2);
    assert_eq!(m["transitive"], true);
    assert_eq!(m["infinity"], true);
    assert_eq!(m["branch_points"].as_array().unwrap().len(), 1);
    assert_eq!(m["loops"][0]["sigma"], "(1 2)");
}

#[test]
fn analyze_linear_is_trivial() {
    let (doc, code) = standard().json(&["analyze", "linear.poly"]);
    assert_eq!(code, 0);
    assert_eq!(doc["monodromy"]["group_order"], 1);
    assert_eq!(doc["monodromy"]["sigma_inf"], "()");
}

#[test]
fn missing_file_exits_one() {
    let out = standard().run(&["analyze", "missing.poly"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file not found"));
}

#[test]
fn parse_errors_exit_one() {
    let s = Sandbox::new(&[("bad.poly", "poly: w^2 - z\ncolour: red\n"), ("syntax.poly", "poly: w^2 - * z\n")]);
    for f in ["bad.poly", "syntax.poly"] {
        let out = s.run(&["analyze", f]);
        assert_eq!(out.status.code(), Some(1), "{f}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("line "), "{f}");
    }
}

#[test]
fn lattice_examples() {
    let s = standard();
    let (doc, code) = s.json(&["lattice", "w6.poly"]);
    assert_eq!(code, 0);
    let nodes = doc["correspondence"]["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 4);
    assert!(nodes.iter().all(|n| n["galois"] == true));

    let (doc, code) = s.json(&["lattice", "cubic.poly"]);
    assert_eq!(code, 0);
    let nodes = doc["correspondence"]["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 6);
    assert_eq!(nodes.iter().filter(|n| n["galois"] == false).count(), 3);

    let (doc, code) = s.json(&["lattice", "linear.poly"]);
    assert_eq!(code, 0);
    assert_eq!(doc["correspondence"]["nodes"].as_array().unwrap().len(), 1);
}

#[test]
fn lattice_failure_codes() {
    let s = standard();
    assert_eq!(s.json(&["lattice", "cubic.poly", "--max-group-order", "5"]).1, 3);
    assert_eq!(s.json(&["lattice", "reducible.poly"]).1, 2);
}

#[test]
fn cap_from_spec_file_and_flag_override() {
    let s = Sandbox::new(&[("capped.poly", "poly: w^3 - 3*w - z\ncap: 4\n")]);
    assert_eq!(s.json(&["lattice", "capped.poly"]).1, 3);
    let (doc, code) = s.json(&["lattice", "capped.poly", "--max-group-order", "6"]);
    assert_eq!(code, 0);
    assert_eq!(doc["job"]["max_group_order"], 6);
}

#[test]
fn combine_examples() {
    let s = standard();
    let cases = [
        ("sqrt.poly", "cbrt.poly", "add", "t^6 - 3*z*t^4 - 2*z*t^3 + 3*z^2*t^2 - 6*z^2*t - z^3 + z^2"),
        ("linear.poly", "sqrt.poly", "add", "t^2 - 2*z*t + z^2 - z"),
        ("sqrt.poly", "sqrt.poly", "mul", "t - z"),
    ];
    for (a, b, op, want) in cases {
        let (doc, code) = s.json(&["combine", a, b, "--op", op]);
        assert_eq!(code, 0, "{a} {op} {b}");
        assert_eq!(doc["result"]["poly"], want);
    }
    let (doc, _) = s.json(&["combine", "sqrt.poly", "sqrt.poly", "--op", "mul", "--start", "1,2"]);
    assert_eq!(doc["result"]["poly"], "t + z");
}

#[test]
fn combine_float_only_exits_four() {
    let s = Sandbox::new(&[
        ("odd.poly", "poly: w^2 - 3/7*z - 1/1234567\n"),
        ("linear.poly", "poly: w - z\n"),
    ]);
    let (doc, code) = s.json(&["combine", "odd.poly", "linear.poly", "--op", "mul"]);
    assert_eq!(code, 4);
    assert_eq!(doc["result"]["exact"], false);
    assert!(doc["result"]["float_coefficients"].is_array());
}

#[test]
fn verify_examples() {
    let s = standard();
    for f in ["w6.poly", "cubic.poly", "linear.poly"] {
        let out = s.run(&["verify", f, "--quiet"]);
        assert_eq!(out.status.code(), Some(0), "{f}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
    }
}

#[test]
fn json_reports_are_deterministic() {
    let s = standard();
    for cmd in [vec!["lattice", "cubic.poly"], vec!["combine", "sqrt.poly", "cbrt.poly", "--op", "add"]] {
        let a = s.run(&[&cmd[..], &["--format", "json", "--quiet"]].concat());
        let b = s.run(&[&cmd[..], &["--format", "json", "--quiet"]].concat());
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn cache_round_trip() {
    let s = standard();
    let cache: PathBuf = s.path().join("cache");
    let cache_arg = cache.to_str().unwrap();
    let args = ["lattice", "cubic.poly", "--format", "json", "--cache-dir", cache_arg];
    let first = s.run(&args);
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let second = s.run(&args);
    assert!(String::from_utf8_lossy(&second.stderr).contains("loaded from cache"));
    assert_eq!(first.stdout, second.stdout);

    let doc: Value = serde_json::from_slice(&first.stdout).unwrap();
    let stored: Value =
        serde_json::from_str(&std::fs::read_to_string(entries[0].as_ref().unwrap().path()).unwrap()).unwrap();
    assert_eq!(doc["monodromy"], stored);

    // a different tolerance is a different key
    s.run(&["analyze", "cubic.poly", "--tol", "1e-11", "--cache-dir", cache_arg]);
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 2);
}

#[test]
fn corrupt_cache_is_recomputed() {
    let s = standard();
    let cache = s.path().join("cache");
    let cache_arg = cache.to_str().unwrap();
    let clean = s.run(&["analyze", "sqrt.poly", "--format", "json", "--cache-dir", cache_arg]);
    let entry = std::fs::read_dir(&cache).unwrap().next().unwrap().unwrap().path();
    std::fs::write(&entry, "{\"degree\": 2}").unwrap();
    let again = s.run(&["analyze", "sqrt.poly", "--format", "json", "--cache-dir", cache_arg]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(clean.stdout, again.stdout);
}
