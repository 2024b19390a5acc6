use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use torusforge::vfields::{lift_to_3d, SystemFile};

fn systems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torusforge"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("JSON line"))
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn lift_reports_degrees() {
    let tmp = tempfile::tempdir().unwrap();
    let lienard = systems().join("lienard6.json");
    let o = run(tmp.path(), &["lift", lienard.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(lines(&o)[0]["degree"], "8");

    let generic = write(
        tmp.path(),
        "quad.json",
        r#"{"planar": {"P": "x^2 - x*y + 1", "Q": "x^2 + y^2 + 3*x - 2"}}"#,
    );
    let o = run(tmp.path(), &["lift", generic.to_str().unwrap()]);
    assert_eq!(lines(&o)[0]["degree"], "6");
}

#[test]
fn lift_output_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let input = systems().join("reference.json");
    let o = run(tmp.path(), &["lift", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("reference.lift.json")).unwrap();
    let SystemFile::Spatial(back) = SystemFile::from_json_str(&text).unwrap() else {
        panic!("spatial output expected");
    };
    let SystemFile::Planar { field, .. } =
        SystemFile::from_json_str(&fs::read_to_string(&input).unwrap()).unwrap()
    else {
        panic!("planar input expected");
    };
    assert_eq!(back, lift_to_3d(&field));
}

#[test]
fn malformed_input_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\"planar\": {\"P\": \"x\",\n");
    let o = run(tmp.path(), &["lift", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = run(tmp.path(), &["lift", "no/such/file.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn double_degree_and_identity() {
    let tmp = tempfile::tempdir().unwrap();
    let generic = write(
        tmp.path(),
        "quad.json",
        r#"{"planar": {"P": "x^2 - x*y + 1", "Q": "x^2 + y^2 + 3*x - 2"}}"#,
    );
    run(tmp.path(), &["lift", generic.to_str().unwrap()]);
    let lifted = tmp.path().join("quad.lift.json");
    let o = run(tmp.path(), &["double", lifted.to_str().unwrap(), "--eps", "1/50", "-k", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let l = lines(&o);
    assert_eq!(l[0]["degree_in"], 6);
    assert_eq!(l[0]["degree_out"], 14);
    assert_eq!(l[0]["identity"], "holds");
    assert_eq!(l[0]["tori_out"], "8");

    // An unbound parameter must be bound first.
    let o = run(tmp.path(), &["double", lifted.to_str().unwrap(), "-k", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn double_zero_times_copies_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let input = systems().join("reference.json");
    run(tmp.path(), &["lift", input.to_str().unwrap()]);
    let lifted = tmp.path().join("reference.lift.json");
    let o = run(tmp.path(), &["double", lifted.to_str().unwrap(), "-k", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read(&lifted).unwrap(),
        fs::read(tmp.path().join("reference.lift.double0.json")).unwrap()
    );
}

#[test]
fn memory_guard_refuses_large_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let input = systems().join("reference.json");
    run(tmp.path(), &["lift", input.to_str().unwrap()]);
    let lifted = tmp.path().join("reference.lift.json");
    let o = run(
        tmp.path(),
        &["double", lifted.to_str().unwrap(), "--eps", "1/50", "--max-terms", "100"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--max-terms"));
}

#[test]
fn tables_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["tables"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("bounds.csv")).unwrap();
    assert!(csv.contains("88,2272,\"hyperbolic planar bound H(43) >= 2272, lifted\"\n"));
    assert!(csv.contains("14,32,doubling sequence m0=6 tau0=4 d=2 k=1\n"));

    let own = write(tmp.path(), "mine.csv", "k,bound\n2,5\n");
    let o = run(tmp.path(), &["tables", own.to_str().unwrap(), "--sequence", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("bounds.csv")).unwrap();
    assert_eq!(
        csv,
        "m,bound,provenance\n6,5,\"mine planar bound H(2) >= 5, lifted\"\n7,5,monotone in degree from m=6\n"
    );

    let empty = write(tmp.path(), "empty.csv", "k,bound\n");
    assert_eq!(run(tmp.path(), &["tables", empty.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_certifies_and_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let reference = systems().join("reference.json");
    let o = run(
        tmp.path(),
        &["verify", reference.to_str().unwrap(), "--eps", "0.02", "--emit", "json,csv,svg"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let l = lines(&o);
    let torus = l.iter().find(|v| v["kind"] == "torus").unwrap();
    assert_eq!(torus["status"], "certified");
    assert_eq!(torus["stability"], "attracting");
    for f in ["reports.jsonl", "cycle0.json", "cycle0_eps0.02.csv", "cycle0_eps0.02.svg"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }

    let reversed = systems().join("reversed.json");
    let o = run(tmp.path(), &["verify", reversed.to_str().unwrap(), "--eps", "0.02"]);
    assert_eq!(o.status.code(), Some(0));
    let l = lines(&o);
    assert_eq!(l.iter().find(|v| v["kind"] == "torus").unwrap()["stability"], "repelling");

    let focus = systems().join("linear.json");
    let o = run(tmp.path(), &["verify", focus.to_str().unwrap(), "--eps", "0.02"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(tmp.path(), &["verify", reference.to_str().unwrap(), "--eps", "-0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let reference = systems().join("reference.json");
    for d in [&a, &b] {
        run(d.path(), &["verify", reference.to_str().unwrap(), "--eps", "0.04,0.02"]);
    }
    assert_eq!(
        fs::read(a.path().join("reports.jsonl")).unwrap(),
        fs::read(b.path().join("reports.jsonl")).unwrap()
    );
}

#[test]
fn verify_doubled_octants() {
    let tmp = tempfile::tempdir().unwrap();
    let reference = systems().join("reference.json");
    let o = run(
        tmp.path(),
        &["verify", reference.to_str().unwrap(), "--eps", "1/50", "--octants", "+++,-++"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let oct: Vec<Value> = lines(&o).into_iter().filter(|v| v["kind"] == "octant").collect();
    assert_eq!(oct.len(), 2);
    assert_eq!(oct[0]["stability"], "attracting");
    assert_eq!(oct[1]["stability"], "repelling");
    assert_eq!(oct[1]["integration"], "backward");
}

#[test]
fn selftest_and_thread_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["selftest", "--trials", "5", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(lines(&o).iter().all(|v| v["ok"] == true));

    let o = Command::new(env!("CARGO_BIN_EXE_torusforge"))
        .args(["--out", tmp.path().to_str().unwrap(), "tables"])
        .env("TORUSFORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
