use std::path::Path;
use std::process::{Command, Output};

use bertrand_core::experiments::{DynamicsConfig, SweepConfig};

fn bertrand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bertrand")).args(args).output().expect("run bertrand")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn construct_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bertrand(&["construct", "cce_symmetric", "--k", "100", "--cost", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
    let file = dir.path().join("cce_symmetric.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cce_symmetric_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    let o = bertrand(&["verify", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    // The tail construction is a CCE but not a CE.
    let o = bertrand(&["verify", file.to_str().unwrap(), "--phi", "ce"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_point_masses() {
    let dir = tempfile::tempdir().unwrap();
    let top = write(&dir.path().join("top.json"), r#"{"k":4,"n":2,"repr":"sparse","entries":[[4,4,1.0]]}"#);
    let o = bertrand(&["verify", &top, "--cost", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("worst gain 2.500e-1"));
    let low = write(&dir.path().join("low.json"), r#"{"k":4,"n":2,"repr":"sparse","entries":[[2,2,1.0]]}"#);
    let o = bertrand(&["verify", &low, "--cost", "0", "--phi", "ce"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bertrand(&["construct", "phi_ce_symmetric", "--k", "2", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let o = bertrand(&["construct", "cce_asymmetric", "--k", "10", "--costs", "0,0.5", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("condition 1"));
    let o = bertrand(&["construct", "no_such", "--k", "10", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let bad = write(&dir.path().join("bad.json"), "{not json");
    assert_eq!(bertrand(&["verify", &bad]).status.code(), Some(2));
    assert_eq!(bertrand(&["sweep-fig1", "--kind", "ratio_vs_x", "--out", out]).status.code(), Some(2));
    assert_eq!(bertrand(&["verify"]).status.code(), Some(2));
}

#[test]
fn best_cce_symmetrize_and_best_ce() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = bertrand(&["best-cce", "--k", "10", "--cost", "0", "--demand", "linear", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let o = bertrand(&["symmetrize", dir.path().join("best_cce.json").to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("symmetrized.json")).unwrap()).unwrap();
    assert_eq!(doc["distribution"]["repr"], "diagonal");
    let before = doc["total_utility_before"].as_f64().unwrap();
    let after = doc["total_utility_after"].as_f64().unwrap();
    assert!((before - after).abs() < 1e-12);
    let o = bertrand(&["best-ce", "--k", "10", "--cost", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value 0.100000000000"));
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["sweep-fig1", "--kind", "ratio_vs_k", "--ks", "5..8", "--demand", "quadratic", "--out", out];
    assert_eq!(bertrand(&args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("ratio_vs_k.csv")).unwrap();
    assert_eq!(bertrand(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("ratio_vs_k.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("k,n,demand,c1,c2,objective,value"));
}

#[test]
fn sweep_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("small_n.json"),
        r#"{"sweep": "ratio_vs_n", "k": 12, "ns": [2, 3, 4], "threads": 1}"#,
    );
    let o = bertrand(&["sweep-fig1", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("small_n.csv")).unwrap();
    let ratios: Vec<f64> =
        text.lines().skip(1).map(|l| l.split(',').nth(11).unwrap().parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["simulate-fig2", "--k", "10", "--rounds", "500", "--seeds", "1,2", "--family", "rm", "--out", out];
    assert_eq!(bertrand(&args).status.code(), Some(0));
    let csv = std::fs::read(dir.path().join("dynamics.csv")).unwrap();
    assert_eq!(bertrand(&args).status.code(), Some(0));
    assert_eq!(csv, std::fs::read(dir.path().join("dynamics.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("price,freq_p1,freq_p2,freq_transaction"));
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dynamics.json")).unwrap()).unwrap();
    assert_eq!(side["seeds"].as_array().unwrap().len(), 2);
    assert!(side["runtime_secs"].is_number());
}

#[test]
fn shipped_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.starts_with("fig1") {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert!(v["sweep"].is_string(), "{name}");
            let mut v = v;
            v.as_object_mut().unwrap().remove("threads");
            serde_json::from_value::<SweepConfig>(v).unwrap_or_else(|e| panic!("{name}: {e}"));
        } else {
            serde_json::from_str::<DynamicsConfig>(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        seen += 1;
    }
    assert!(seen >= 10);
}
