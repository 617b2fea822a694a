use liouville_core::config::{config_to_toml, load_config, load_config_bytes};
use liouville_core::experiments::{run_crossings, CrossingRecord, ExperimentConfig};
use liouville_core::field::sample_dgff;
use liouville_core::io::{
    csv_string, read_field, read_json, read_measure, sha256_hex, write_csv, write_field, write_measure, RunManifest,
};
use liouville_core::measure::cell_measures;
use liouville_core::{Error, GridSpec};
use proptest::prelude::*;

#[test]
fn empty_file_gives_defaults_and_hash_covers_raw_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    std::fs::write(&path, "").unwrap();
    let (cfg, bytes) = load_config_bytes(&path).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    assert_eq!(sha256_hex(&bytes), sha256_hex(b""));
}

#[test]
fn defaults_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("defaults.toml");
    std::fs::write(&path, config_to_toml(&ExperimentConfig::default())).unwrap();
    assert_eq!(load_config(&path).unwrap(), ExperimentConfig::default());
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_config(std::path::Path::new("/nonexistent/x.toml")), Err(Error::Io(_))));
}

#[test]
fn field_and_measure_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(12, 8, 0.5).unwrap();
    let f = sample_dgff(&spec, 11).unwrap();
    let written = write_field(&dir.path().join("f.bin"), &f).unwrap();
    assert_eq!(written.len(), 2);
    assert_eq!(read_field(&written[0]).unwrap(), f);
    let m = cell_measures(&f, 0.8, 1.0).unwrap();
    write_measure(&dir.path().join("m.bin"), &m).unwrap();
    let back = read_measure(&dir.path().join("m.bin")).unwrap();
    assert_eq!(back.cell_mass, m.cell_mass);
    assert_eq!((back.gamma, back.epsilon), (m.gamma, m.epsilon));
}

#[test]
fn truncated_field_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = sample_dgff(&GridSpec::new(6, 6, 1.0).unwrap(), 1).unwrap();
    let path = dir.path().join("f.bin");
    write_field(&path, &f).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
    assert!(read_field(&path).is_err());
}

fn parse_opt(s: &str) -> Option<f64> {
    (!s.is_empty()).then(|| s.parse().unwrap())
}

#[test]
fn crossing_csv_parses_back_exactly() {
    let cfg = ExperimentConfig {
        scales: vec![16],
        samples: 5,
        ..ExperimentConfig::default()
    };
    let records = run_crossings(&cfg).unwrap();
    let text = csv_string(&records);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "seed,scale,sample,delta,lr,easy,hard,unreachable");
    for (line, r) in lines.zip(&records) {
        let f: Vec<&str> = line.split(',').collect();
        let back = CrossingRecord {
            seed: f[0].parse().unwrap(),
            scale: f[1].parse().unwrap(),
            sample: f[2].parse().unwrap(),
            delta: f[3].parse().unwrap(),
            lr: parse_opt(f[4]),
            easy: parse_opt(f[5]),
            hard: parse_opt(f[6]),
        };
        assert_eq!(&back, r);
    }
}

#[test]
fn manifest_lists_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_bytes = b"gamma = 0.5\n";
    let mut m = RunManifest::start("experiment quantiles", cfg_bytes, 7, serde_json::json!({ "scales": [16] }));
    let csv = dir.path().join("crossings.csv");
    write_csv::<CrossingRecord>(&csv, &[]).unwrap();
    m.add_output(&csv);
    let path = m.finish(dir.path()).unwrap();
    let back: RunManifest = read_json(&path).unwrap();
    assert_eq!(back.config_sha256, sha256_hex(cfg_bytes));
    assert_eq!(back.master_seed, 7);
    assert_eq!(back.outputs, vec![csv.display().to_string()]);
    assert!(back.finished >= back.started);
}

proptest! {
    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = liouville_core::io::fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
