use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn imgent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imgent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> String {
    let out = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&out)]);
    let o = imgent(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    path_str(&out).to_string()
}

fn label1_len(path: &str) -> usize {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["label1"].as_array().unwrap().len()
}

#[test]
fn gen_examples() {
    let dir = tempfile::tempdir().unwrap();
    let loops = gen(dir.path(), "t.json", &["--task", "loops", "--k", "2", "--periodic"]);
    assert_eq!(label1_len(&loops), 32);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(&loops).unwrap()).unwrap();
    assert_eq!(meta["meta"]["generator"], "loops");
    assert_eq!(meta["meta"]["edge_lattice"]["k"], 2);

    let parity = gen(dir.path(), "p.json", &["--task", "parity", "--lx", "2", "--ly", "2"]);
    assert_eq!(label1_len(&parity), 8);

    let args = ["--task", "random", "--lx", "4", "--ly", "3", "--count", "64", "--seed", "7"];
    let a = gen(dir.path(), "a.json", &args);
    let b = gen(dir.path(), "b.json", &args);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn gen_errors_exit_2() {
    let o = imgent(&["gen", "--task", "random", "--lx", "2", "--ly", "2", "--count", "17"]);
    assert_eq!(o.status.code(), Some(2));
    let o = imgent(&["gen", "--task", "loops"]);
    assert_eq!(o.status.code(), Some(2));
    let o = imgent(&["gen", "--task", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn entropy_examples() {
    let dir = tempfile::tempdir().unwrap();
    let parity = gen(dir.path(), "p.json", &["--task", "parity", "--lx", "3", "--ly", "3"]);
    let v = json(&imgent(&["entropy", "--task", &parity, "--cut", "cols<1"]));
    assert!((v["entropy_bits"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["rank"], 2);
    assert!(v.get("entropy_nats").is_none());

    let v = json(&imgent(&["entropy", "--task", &parity, "--cut", "cols<1", "--nats"]));
    assert!((v["entropy_nats"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-9);
    assert!(v.get("entropy_bits").is_none());

    let single = gen(dir.path(), "s.json", &["--task", "single", "--lx", "3", "--ly", "3", "--image", "1a5"]);
    for cut in ["cols<1", "rows<2", "mask:155"] {
        let v = json(&imgent(&["entropy", "--task", &single, "--cut", cut]));
        assert_eq!(v["entropy_bits"].as_f64().unwrap(), 0.0);
    }

    for path in ["dense", "sparse"] {
        let v = json(&imgent(&["entropy", "--task", &parity, "--cut", "mask:1b", "--path", path]));
        assert_eq!(v["path"], path);
        assert!((v["entropy_bits"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn malformed_cut_names_grammar() {
    let dir = tempfile::tempdir().unwrap();
    let parity = gen(dir.path(), "p.json", &["--task", "parity", "--lx", "2", "--ly", "2"]);
    for cut in ["cols<", "diag<1", "mask:zz", "cols<2"] {
        let o = imgent(&["entropy", "--task", &parity, "--cut", cut]);
        assert_eq!(o.status.code(), Some(2), "{cut}");
        let err = String::from_utf8_lossy(&o.stderr);
        if cut != "cols<2" {
            assert!(err.contains("cols<K"), "{err}");
        }
    }
}

#[test]
fn scan_loops_area_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let loops = gen(dir.path(), "l.json", &["--task", "loops", "--k", "3", "--periodic"]);
    let csv = dir.path().join("s.csv");
    let v = json(&imgent(&["scan", "--task", &loops, "--cuts", "vertical", "--out", path_str(&csv)]));
    assert_eq!(v["verdict"], "area");
    assert!((v["fit"]["slope"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("cut_id,n_a,n_b,l_ab,entropy_bits,rank\n"));
    assert_eq!(text.lines().count(), 9);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.fit.json")).unwrap()).unwrap();
    assert_eq!(sidecar["verdict"], "area");

    let csv2 = dir.path().join("s2.csv");
    json(&imgent(&["scan", "--task", &loops, "--cuts", "vertical", "--out", path_str(&csv2)]));
    assert_eq!(text, std::fs::read_to_string(&csv2).unwrap());
}

#[test]
fn scan_random_family_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let task = gen(dir.path(), "r.json", &["--task", "random", "--lx", "4", "--ly", "3", "--count", "512", "--seed", "1"]);
    let run = |name: &str| {
        let csv = dir.path().join(name);
        json(&imgent(&[
            "scan", "--task", &task, "--cuts", "random", "--count", "12", "--seed", "5", "--out", path_str(&csv),
        ]));
        std::fs::read_to_string(csv).unwrap()
    };
    assert_eq!(run("x.csv"), run("y.csv"));
}

#[test]
fn scan_too_few_cuts_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let parity = gen(dir.path(), "p.json", &["--task", "parity", "--lx", "2", "--ly", "2"]);
    let csv = dir.path().join("s.csv");
    let o = imgent(&["scan", "--task", &parity, "--cuts", "vertical", "--out", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn range_parity() {
    let dir = tempfile::tempdir().unwrap();
    let parity = gen(dir.path(), "parity.json", &["--task", "parity", "--lx", "4", "--ly", "3"]);
    let v = json(&imgent(&["range", "--task", &parity, "--cut", "cols<1", "--max-r", "3"]));
    assert_eq!(v["r_star"], 1);
    assert_eq!(v["bound_bits"].as_f64(), Some(3.0));
    assert_eq!(v["bound_holds"], true);
}

#[test]
fn capacity_example() {
    let v = json(&imgent(&["capacity", "--r", "4", "--nc", "1,2,4"]));
    let d: Vec<u64> = v["rows"].as_array().unwrap().iter().map(|r| r["d"].as_u64().unwrap()).collect();
    assert_eq!(d, vec![16, 4, 2]);
    assert!(v["note"].as_str().unwrap().contains("log L"));
    assert_eq!(imgent(&["capacity", "--r", "-1"]).status.code(), Some(2));
}

#[test]
fn verify_suite() {
    let dir = tempfile::tempdir().unwrap();
    let product = gen(dir.path(), "prod.json", &["--task", "product", "--lx", "4", "--ly", "3", "--seed", "3"]);
    let v = json(&imgent(&["verify", "--task", &product]));
    assert_eq!(v["pass"], true);
    assert!(v["max_entropy_bits"].as_f64().unwrap() < 1e-9);

    let loops = gen(dir.path(), "l.json", &["--task", "loops", "--k", "2", "--periodic"]);
    let v = json(&imgent(&["verify", "--task", &loops]));
    assert_eq!(v["pass"], true);
    assert!(v["assumption1_fails"].as_u64().unwrap() > 0);

    let corrupt = dir.path().join("bad.json");
    std::fs::write(&corrupt, r#"{"lx":2,"ly":2,"label1":["3","3"]}"#).unwrap();
    let o = imgent(&["verify", "--task", path_str(&corrupt)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate"));
}
