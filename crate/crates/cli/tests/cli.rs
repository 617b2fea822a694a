use std::path::Path;
use std::process::{Command, Output};

fn liouville(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("LIOUVILLE_OUT")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn oracle_check_succeeds_with_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = liouville(dir.path(), &["oracle-check", "--seed", "0", "--instances", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle.json")).unwrap()).unwrap();
    assert_eq!(report["equivalence"].as_array().unwrap().len(), 4);
    let m = manifest(dir.path());
    assert_eq!(m["command"], "oracle-check");
    assert_eq!(m["master_seed"], 0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = liouville(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn zero_samples_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = liouville(dir.path(), &["experiment", "rsw", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn bad_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "gamma = 2.5\n").unwrap();
    let out = liouville(dir.path(), &["sample-field", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn config_hash_matches_file_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let text = "# small run\ngamma = 0.5\n";
    std::fs::write(&cfg, text).unwrap();
    let out = liouville(
        dir.path(),
        &["measure", "--config", cfg.to_str().unwrap(), "--width", "16", "--height", "8"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    assert_eq!(m["config_sha256"], liouville_core::io::sha256_hex(text.as_bytes()));
    assert_eq!(m["parameters"]["config"]["gamma"], 0.5);
    let measure = liouville_core::io::read_measure(&dir.path().join("measure.bin")).unwrap();
    assert_eq!(measure.cell_mass.len(), 16 * 8);
}

#[test]
fn field_round_trips_through_its_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = liouville(dir.path(), &["sample-field", "--seed", "3", "--width", "12", "--height", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let f = liouville_core::io::read_field(&dir.path().join("field.bin")).unwrap();
    let again = liouville_core::field::sample_dgff(&f.spec, 3).unwrap();
    assert_eq!(f.values, again.values);
}

#[test]
fn distance_writes_record_and_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = liouville(
        dir.path(),
        &["distance", "--scale-ladder", "16", "--kind", "count", "--from", "1.5,1.5", "--to", "14.5,6.5"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("distance.json")).unwrap()).unwrap();
    let chain = std::fs::read_to_string(dir.path().join("chain.csv")).unwrap();
    assert!(chain.starts_with("center_x,center_y,radius,mass\n"));
    if rec["reached"] == true {
        assert_eq!(chain.lines().count() - 1, rec["count"].as_u64().unwrap() as usize);
    }
}

#[test]
fn reruns_give_identical_csv_regardless_of_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["experiment", "quantiles", "--scale-ladder", "16,32", "--samples", "6", "--seed", "9"];
    let one = liouville(a.path(), &[&args[..], &["--threads", "1"]].concat());
    let two = liouville(b.path(), &[&args[..], &["--threads", "2"]].concat());
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(two.status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("crossings.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert!(String::from_utf8(read(a.path())).unwrap().starts_with("seed,scale,sample,delta,"));
}

#[test]
fn output_directory_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(["sample-field", "--width", "8", "--height", "8"])
        .env("LIOUVILLE_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("field.bin").exists());
    assert!(dir.path().join("manifest.json").exists());
}
