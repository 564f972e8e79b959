use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn logspiral(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logspiral")).args(args).arg("--out-dir").arg(dir).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Every file except the wall-clock record, by name.
fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn kernel_run_writes_csv_sidecar_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(dir.path(), &["kernel", "--beta", "1", "--samples", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    let mut lines = csv.lines();
    let id_line = lines.next().unwrap();
    assert_eq!(lines.next(), Some("theta,K,Kprime"));
    assert_eq!(lines.count(), 100);
    let side = json(&dir.path().join("kernel.json"));
    assert!((side["jump"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!(side["identity_max_abs"].as_f64().unwrap() < 1e-8);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(id_line, format!("# run_id={}", manifest["run_id"].as_str().unwrap()));
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["config"]["beta"], "1");
    assert!(json(&dir.path().join("timing.json"))["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn zero_beta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(dir.path(), &["dirac", "--beta", "0", "--m", "1", "--atoms", "1:0.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta must be nonzero"), "{}", stderr(&o));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn valid_dirac_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(dir.path(), &["dirac", "--beta", "1", "--m", "1", "--atoms", "1:0.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = json(&dir.path().join("dirac.json"));
    assert_eq!(rec["outcome"], "completed");
    assert!(rec["event"].is_null());
}

#[test]
fn resolution_guard_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(
        dir.path(),
        &["evolve", "--beta", "1", "--ic", "mollified_dirac", "--atoms", "1:1", "--epsilon", "0.05", "--n", "512"],
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("n:") && e.contains("resolution guard"), "{e}");
}

#[test]
fn errors_are_collected_per_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(dir.path(), &["evolve", "--beta", "x", "--n", "100", "--method", "euler"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for key in ["beta:", "n:", "method:"] {
        assert!(e.contains(key), "{key} missing from {e}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    fs::write(&cfg, "# evolve settings\nbeta = 2\nn = 64\nt_end = 0.1\n; trailing comment\nic = constant\n").unwrap();
    let out = dir.path().join("out");
    let o = logspiral(&out, &["evolve", "--config", cfg.to_str().unwrap(), "--beta", "-1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["beta"], "-1");
    assert_eq!(m["config"]["n"], "64");

    fs::write(&cfg, "beta = 1\nsmoothness = 3\n").unwrap();
    let o = logspiral(&out, &["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key `smoothness`"), "{}", stderr(&o));
}

#[test]
fn blowup_exits_with_event_code_and_keeps_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(dir.path(), &["dirac", "--beta", "1", "--atoms", "-1:0", "--t-end", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let rec = json(&dir.path().join("dirac.json"));
    assert_eq!(rec["outcome"], "singular_event");
    let pole = rec["blowup_time"].as_f64().unwrap();
    let want = 2.0 * std::f64::consts::PI.tanh();
    assert!((pole - want).abs() < 1e-2 * want, "{pole}");
    assert_eq!(json(&dir.path().join("manifest.json"))["exit_code"], 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let runs: &[&[&str]] = &[
        &["kernel", "--beta", "0.5", "--m", "2", "--samples", "50"],
        &["evolve", "--beta", "1", "--n", "128", "--t-end", "0.3", "--ic", "random", "--record-every", "0.1"],
        &["dirac", "--beta", "1", "--random-atoms", "3", "--t-end", "2"],
        &["selfsimilar", "--scan", "--beta-range", "0.05:5:9"],
        &["selfsimilar", "--beta", "0.2", "--M", "3"],
        &["sheetlimit", "--beta", "1", "--epsilons", "0.2,0.1", "--n", "1024", "--t-end", "0.2"],
        &[
            "reconstruct",
            "--beta",
            "1",
            "--n",
            "64",
            "--n-r",
            "4",
            "--n-theta",
            "8",
            "--format",
            "binary",
            "--pressure",
        ],
    ];
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let mut with_seed = args.to_vec();
        with_seed.extend(["--seed", "11"]);
        let oa = logspiral(a.path(), &with_seed);
        with_seed.extend(["--threads", "1"]);
        let ob = logspiral(b.path(), &with_seed);
        assert_eq!(oa.status.code(), ob.status.code(), "{args:?}");
        let (ca, cb) = (contents(a.path()), contents(b.path()));
        assert!(ca.contains_key("manifest.json"), "{args:?}: {}", stderr(&oa));
        assert_eq!(ca, cb, "{args:?}");
    }
}

#[test]
fn seed_changes_random_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["dirac", "--beta", "1", "--random-atoms", "2", "--t-end", "0.5"];
    logspiral(a.path(), &[&args[..], &["--seed", "1"]].concat());
    logspiral(b.path(), &[&args[..], &["--seed", "2"]].concat());
    assert_ne!(fs::read(a.path().join("dirac.csv")).unwrap(), fs::read(b.path().join("dirac.csv")).unwrap());
}

#[test]
fn binary_grid_matches_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = logspiral(
        dir.path(),
        &["reconstruct", "--beta", "1", "--n-r", "5", "--n-theta", "7", "--format", "binary", "--fields", "psi,omega"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let header = json(&dir.path().join("plane.json"));
    assert_eq!(header["fields"], serde_json::json!(["psi", "omega"]));
    let bytes = fs::read(dir.path().join("plane.bin")).unwrap();
    assert_eq!(bytes.len(), 8 * 2 * 5 * 7);
    // omega at (r_min, θ = 0) for h = cos: cos(−β ln r_min)
    let at = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let want = (-(0.1f64).ln()).cos();
    assert!((at(35) - want).abs() < 1e-12, "{} vs {want}", at(35));
}

#[test]
fn from_csv_round_trips_a_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let ic = dir.path().join("h.csv");
    let mut s = String::from("theta,h\n");
    for k in 0..64 {
        let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
        s.push_str(&format!("{t},{}\n", 1.0 + t.sin()));
    }
    fs::write(&ic, s).unwrap();
    let out = dir.path().join("out");
    let o = logspiral(
        &out,
        &[
            "evolve",
            "--beta",
            "1",
            "--n",
            "64",
            "--t-end",
            "0.1",
            "--ic",
            "from_csv",
            "--ic-file",
            ic.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&out.join("summary.json"));
    let i0 = summary["initial"]["intensity"].as_f64().unwrap();
    assert!((i0 - 2.0 * std::f64::consts::PI).abs() < 1e-12, "{i0}");

    let o = logspiral(
        &out,
        &["evolve", "--beta", "1", "--n", "128", "--ic", "from_csv", "--ic-file", ic.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ic_file"), "{}", stderr(&o));
}
