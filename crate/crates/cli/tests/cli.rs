use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bowforge::bowdata::BowDatum;
use bowforge::generator::{canonical_example, standard_topology};
use bowforge::io::{self, BowFile};
use bowforge::linalg::c;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-{name}"))
}

fn bowforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bowforge"))
        .args(args)
        .env_remove("BOWFORGE_TOL")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_datum(name: &str, b: BowDatum) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, io::serialize(&BowFile::new(b)).unwrap()).unwrap();
    path
}

#[test]
fn fixtures_round_trip_byte_for_byte() {
    let mut seen = 0;
    for entry in std::fs::read_dir(fixture("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let again = if text.contains(io::TOPOLOGY_FORMAT) {
            io::serialize_topology(&io::parse_topology(text.as_bytes()).unwrap()).unwrap()
        } else {
            io::serialize(&io::parse(text.as_bytes()).unwrap()).unwrap()
        };
        assert_eq!(again, text, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 8);
}

#[test]
fn validate_passes_on_canonical_fixtures() {
    for name in ["u1-single-nut", "u1-charge", "u2-basic", "so2-mirror", "sp1-mirror"] {
        let out = bowforge(&["validate", path_str(&fixture(&format!("{name}.json")))]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn validate_fails_on_perturbed_data() {
    let mut b = canonical_example("u2-basic").unwrap().datum;
    b.a[0][(0, 0)] += c(1e-3, 0.0);
    let path = write_datum("perturbed.json", b);
    let out = bowforge(&["validate", path_str(&path)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("sylvester[0]"));
}

#[test]
fn structural_errors_exit_two() {
    let out = bowforge(&["validate", path_str(&fixture("invalid/bad-shape.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("A[1]"));

    let out = bowforge(&["validate", path_str(&fixture("invalid/malformed.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));

    let out = bowforge(&["validate", path_str(&fixture("does-not-exist.json"))]);
    assert_eq!(code(&out), 2);

    let out = bowforge(&["pairing", path_str(&fixture("u2-basic.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn dims_reports_violations() {
    let out = bowforge(&["dims", path_str(&fixture("topo-u2.json"))]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("d  = [2, 2, 1]"));
    let out = bowforge(&["--format", "machine", "dims", path_str(&fixture("topo-negative.json"))]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["d"], serde_json::json!([0, -1]));
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn gen_is_deterministic_and_valid() {
    let topo = fixture("topo-two-nuts.json");
    let (a, b) = (scratch("gen-a.json"), scratch("gen-b.json"));
    for p in [&a, &b] {
        let out = bowforge(&["gen", path_str(&topo), "--seed", "5", "-o", path_str(p)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for cmd in ["validate", "exactness", "invariants"] {
        assert_eq!(code(&bowforge(&[cmd, path_str(&a)])), 0, "{cmd}");
    }
    let out = bowforge(&["gen", path_str(&fixture("topo-negative.json")), "-o", path_str(&scratch("neg.json"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn exactness_flags_the_degenerate_datum() {
    let mut b = BowDatum::zeros(standard_topology(&[0], &[0], 1)).unwrap();
    b.alpha[0][(0, 0)] = c(1.0, 0.0);
    let path = write_datum("degenerate.json", b);
    let out = bowforge(&["--format", "machine", "exactness", path_str(&path)]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exactness"][0]["outcome"], "fail");
    assert!(v["exactness"][0]["witness"].is_array());
    let out = bowforge(&["scan", path_str(&path), "--n", "5"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn tolerance_comes_from_env_unless_flagged() {
    let file = fixture("u2-basic.json");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bowforge"));
        cmd.env_remove("BOWFORGE_TOL");
        if let Some(e) = env {
            cmd.env("BOWFORGE_TOL", e);
        }
        if let Some(f) = flag {
            cmd.args(["--tol", f]);
        }
        code(&cmd.args(["validate", path_str(&file)]).output().unwrap())
    };
    assert_eq!(run(None, None), 0);
    assert_eq!(run(Some("1e-30"), None), 1);
    assert_eq!(run(Some("1e-30"), Some("1e-6")), 0);
}

#[test]
fn fiber_scan_and_pairing_pass_on_good_data() {
    let u2 = fixture("u2-basic.json");
    let out = bowforge(&["--format", "machine", "fiber", path_str(&u2), "--xi", "1", "--eta", "-0.5+2i"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rank"], 2);
    assert_eq!(code(&bowforge(&["scan", path_str(&u2), "--n", "20", "--seed", "3"])), 0);
    for name in ["so2-mirror.json", "sp1-mirror.json"] {
        let out = bowforge(&["pairing", path_str(&fixture(name))]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn bad_complex_arguments_are_rejected() {
    let out = bowforge(&["fiber", path_str(&fixture("u2-basic.json")), "--xi", "one", "--eta", "0"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn export_writes_a_complex_document() {
    let out_path = scratch("export.json");
    let out = bowforge(&["export-bow", path_str(&fixture("u1-single-nut.json")), "-o", path_str(&out_path)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    let ranks: Vec<i64> = v["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["rank"].as_i64().unwrap())
        .collect();
    assert_eq!(ranks, [0, 1]);
    assert_eq!(v["format"], io::EXPORT_FORMAT);
}
