//! Artifacts: binary arrays with JSON sidecars, CSV tables and run manifests.
//!
//! Binary files hold little-endian `f64` values in row-major order. CSV
//! floats are written with 17 significant digits so they parse back to the
//! same bits; missing values are empty fields.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::BallCatalog;
use crate::distance::DistanceResult;
use crate::error::{Error, Result};
use crate::experiments::{CrossingRecord, DiameterRecord, EsRecord, HolderSample};
use crate::field::{FieldSample, SamplerKind};
use crate::grid::GridSpec;
use crate::measure::MeasureGrid;

/// Version of every CSV layout below; bumped when a header changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn f64_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn read_f64s(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(io_err(path, "length is not a multiple of 8"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub spec: GridSpec,
    pub calibration: f64,
    pub seed: Vec<u64>,
    pub sampler: SamplerKind,
    pub rows: usize,
    pub cols: usize,
}

/// Writes `path` (padded-grid vertex values) and its `.json` sidecar.
pub fn write_field(path: &Path, field: &FieldSample) -> Result<Vec<PathBuf>> {
    write_bytes(path, &f64_bytes(&field.values))?;
    let meta = FieldSidecar {
        spec: field.spec.clone(),
        calibration: field.calibration,
        seed: field.seed_record.clone(),
        sampler: field.sampler,
        rows: field.spec.vertex_rows(),
        cols: field.spec.vertex_cols(),
    };
    write_json(&sidecar(path), &meta)?;
    Ok(vec![path.to_path_buf(), sidecar(path)])
}

pub fn read_field(path: &Path) -> Result<FieldSample> {
    let meta: FieldSidecar = read_json(&sidecar(path))?;
    let values = read_f64s(path)?;
    if values.len() != meta.rows * meta.cols {
        return Err(io_err(path, "value count does not match the sidecar"));
    }
    Ok(FieldSample {
        spec: meta.spec,
        values,
        calibration: meta.calibration,
        seed_record: meta.seed,
        sampler: meta.sampler,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSidecar {
    pub gamma: f64,
    pub epsilon: f64,
    pub spec: GridSpec,
    pub field_seed: Vec<u64>,
}

/// Writes inner-cell masses (row-major) and their `.json` sidecar.
pub fn write_measure(path: &Path, m: &MeasureGrid) -> Result<Vec<PathBuf>> {
    write_bytes(path, &f64_bytes(&m.cell_mass))?;
    let meta = MeasureSidecar {
        gamma: m.gamma,
        epsilon: m.epsilon,
        spec: m.spec.clone(),
        field_seed: m.field_seed.clone(),
    };
    write_json(&sidecar(path), &meta)?;
    Ok(vec![path.to_path_buf(), sidecar(path)])
}

pub fn read_measure(path: &Path) -> Result<MeasureGrid> {
    let meta: MeasureSidecar = read_json(&sidecar(path))?;
    MeasureGrid::from_masses(&meta.spec, meta.gamma, meta.epsilon, read_f64s(path)?, meta.field_seed)
}

/// Round-trip float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// A type written as one CSV row.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn csv_string<T: CsvRecord>(rows: &[T]) -> String {
    let mut out = T::header().join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.fields().join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv<T: CsvRecord>(path: &Path, rows: &[T]) -> Result<()> {
    write_bytes(path, csv_string(rows).as_bytes())
}

impl CsvRecord for CrossingRecord {
    fn header() -> &'static [&'static str] {
        &["seed", "scale", "sample", "delta", "lr", "easy", "hard", "unreachable"]
    }

    fn fields(&self) -> Vec<String> {
        let unreachable = self.lr.is_none() || self.easy.is_none() || self.hard.is_none();
        vec![
            self.seed.to_string(),
            self.scale.to_string(),
            self.sample.to_string(),
            fmt_f64(self.delta),
            fmt_opt(self.lr),
            fmt_opt(self.easy),
            fmt_opt(self.hard),
            u8::from(unreachable).to_string(),
        ]
    }
}

impl CsvRecord for DiameterRecord {
    fn header() -> &'static [&'static str] {
        &["seed", "scale", "sample", "diameter", "lr", "unreachable"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.scale.to_string(),
            self.sample.to_string(),
            fmt_opt(self.diameter),
            fmt_opt(self.lr),
            u8::from(self.diameter.is_none() || self.lr.is_none()).to_string(),
        ]
    }
}

impl CsvRecord for EsRecord {
    fn header() -> &'static [&'static str] {
        &["seed", "sample", "f", "coarse_sq", "block_sq", "dropped"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.sample.to_string(),
            fmt_f64(self.f),
            fmt_f64(self.coarse_sq),
            fmt_f64(self.block_sq),
            self.dropped.to_string(),
        ]
    }
}

/// One row per Hölder sample; pair and separation lists go to JSON.
impl CsvRecord for HolderSample {
    fn header() -> &'static [&'static str] {
        &["seed", "scale", "sample", "hard", "pairs", "separations"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.scale.to_string(),
            self.sample.to_string(),
            fmt_opt(self.hard),
            self.pairs.len().to_string(),
            self.separated.len().to_string(),
        ]
    }
}

/// A distance with the query parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    /// `None` when unreachable.
    pub value: Option<f64>,
    pub count: usize,
    pub chain: Vec<u32>,
    pub reached: bool,
    pub parameters: serde_json::Value,
}

impl DistanceRecord {
    pub fn new(d: &DistanceResult, parameters: serde_json::Value) -> Self {
        Self {
            value: d.reached.then_some(d.value),
            count: d.count,
            chain: d.chain.clone(),
            reached: d.reached,
            parameters,
        }
    }
}

/// Chain balls for plotting.
pub struct ChainBall {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub mass: f64,
}

impl CsvRecord for ChainBall {
    fn header() -> &'static [&'static str] {
        &["center_x", "center_y", "radius", "mass"]
    }

    fn fields(&self) -> Vec<String> {
        vec![fmt_f64(self.center_x), fmt_f64(self.center_y), fmt_f64(self.radius), fmt_f64(self.mass)]
    }
}

pub fn chain_balls(cat: &BallCatalog, chain: &[u32]) -> Vec<ChainBall> {
    chain
        .iter()
        .map(|&b| {
            let ball = cat.ball(b as usize);
            ChainBall {
                center_x: ball.center.x,
                center_y: ball.center.y,
                radius: ball.radius,
                mass: ball.mass,
            }
        })
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Provenance of a run: what was run, with which config, and what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the config file bytes (of the serialized defaults when no
    /// file was given).
    pub config_sha256: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub csv_schema_version: u32,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, config_bytes: &[u8], master_seed: u64, parameters: serde_json::Value) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sha256: sha256_hex(config_bytes),
            master_seed,
            started: unix_now(),
            finished: 0.0,
            csv_schema_version: CSV_SCHEMA_VERSION,
            parameters,
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Stamps the end time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished = unix_now();
        let path = dir.join("manifest.json");
        write_json(&path, &self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02e23, -7.5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
