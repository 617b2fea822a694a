//! Monte Carlo experiments on crossing distances and their inputs.
//!
//! A scale `N` is the wide box of `N x N/2` cells, so its hard crossing is
//! left to right and its easy crossing is bottom to top. Sample `i` at scale
//! `N` draws its field from `derive(derive(seed, N), i)`, which makes every
//! experiment reproducible and independent of the worker count.

mod crossings;
mod field_checks;
mod holder;
mod resampling;

pub use crossings::*;
pub use field_checks::*;
pub use holder::*;
pub use resampling::*;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{BallCatalog, CatalogOptions};
use crate::error::{Error, Result};
use crate::field::{FieldSample, SpectralSampler, DEFAULT_CALIBRATION};
use crate::grid::GridSpec;
use crate::measure::{cell_measures, MeasureGrid};
use crate::rng;
use crate::stats::Interval;

/// Every experiment parameter. Field names are the keys of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gamma: f64,
    /// Long side of each box in cells; the short side is half of it.
    pub scales: Vec<usize>,
    pub cell_size: f64,
    pub padding_factor: f64,
    /// Circle-average radius in cells.
    pub epsilon_cells: f64,
    /// Mass thresholds; the first one is used by single-threshold experiments.
    pub deltas: Vec<f64>,
    /// Radius cap as a fraction of the short side.
    pub r_cap_fraction: f64,
    /// Smallest catalog radius in cells; radii double from here.
    pub min_radius_cells: f64,
    pub stride: usize,
    pub samples: usize,
    /// Samples for the per-sample expensive experiments (diameter, Hölder).
    pub aux_samples: usize,
    pub percentiles: Vec<f64>,
    pub p0: f64,
    pub p1: f64,
    /// Percentile of both quantiles in the RSW ratio.
    pub rsw_p: f64,
    pub seed: u64,
    pub confidence: f64,
    pub bootstrap_resamples: usize,
    /// Scale over block side in the white-noise decomposition.
    pub block_ratio: usize,
    /// Blocks farther than this many block sides from the inner box are not
    /// resampled.
    pub es_reach_blocks: f64,
    /// Sub-lattice points along the long side for diameters.
    pub diameter_points: usize,
    pub holder_sources: usize,
    pub holder_targets: usize,
    /// Separations, as fractions of the inner diameter, for the inverse
    /// exponent.
    pub holder_separations: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            scales: vec![64, 128, 256],
            cell_size: 1.0,
            padding_factor: 2.0,
            epsilon_cells: 2.0,
            deltas: vec![20.0],
            r_cap_fraction: 0.5,
            min_radius_cells: 2.0,
            stride: 2,
            samples: 300,
            aux_samples: 100,
            percentiles: vec![0.1, 0.5, 0.9],
            p0: 0.1,
            p1: 0.9,
            rsw_p: 0.5,
            seed: 0,
            confidence: 0.95,
            bootstrap_resamples: crate::stats::BOOTSTRAP_RESAMPLES,
            block_ratio: 4,
            es_reach_blocks: 1.0,
            diameter_points: 5,
            holder_sources: 8,
            holder_targets: 32,
            holder_separations: vec![0.0625, 0.125, 0.25, 0.5],
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in (0, 1), got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(Error::param("gamma", format!("must lie in (0, 2), got {}", self.gamma)));
        }
        if self.scales.is_empty() {
            return Err(Error::param("scales", "must be nonempty"));
        }
        if let Some(&n) = self.scales.iter().find(|&&n| n < 4 || n % 2 == 1) {
            return Err(Error::param("scales", format!("{n} is not an even size of at least 4")));
        }
        positive("cell_size", self.cell_size)?;
        positive("padding_factor", self.padding_factor)?;
        positive("epsilon_cells", self.epsilon_cells)?;
        if self.deltas.is_empty() {
            return Err(Error::param("deltas", "must be nonempty"));
        }
        for &d in &self.deltas {
            positive("deltas", d)?;
        }
        positive("r_cap_fraction", self.r_cap_fraction)?;
        positive("min_radius_cells", self.min_radius_cells)?;
        if self.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        if self.aux_samples == 0 {
            return Err(Error::param("aux_samples", "must be at least 1"));
        }
        for &p in &self.percentiles {
            fraction("percentiles", p)?;
        }
        fraction("p0", self.p0)?;
        fraction("p1", self.p1)?;
        fraction("rsw_p", self.rsw_p)?;
        fraction("confidence", self.confidence)?;
        if self.bootstrap_resamples == 0 {
            return Err(Error::param("bootstrap_resamples", "must be at least 1"));
        }
        if self.block_ratio == 0 {
            return Err(Error::param("block_ratio", "must be at least 1"));
        }
        positive("es_reach_blocks", self.es_reach_blocks)?;
        if self.diameter_points < 2 {
            return Err(Error::param("diameter_points", "must be at least 2"));
        }
        if self.holder_sources == 0 || self.holder_targets == 0 {
            return Err(Error::param("holder_sources", "sources and targets must be nonzero"));
        }
        for &a in &self.holder_separations {
            fraction("holder_separations", a)?;
        }
        for &n in &self.scales {
            ScaleSetup::new(self, n)?;
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.deltas[0]
    }
}

/// Outcome of a statistical target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// Pass when the whole interval satisfies `ok`, fail when none of it does.
    pub fn from_interval(ci: Interval, ok: impl Fn(f64) -> bool) -> Self {
        match (ok(ci.lo), ok(ci.hi)) {
            (true, true) => Verdict::Pass,
            (false, false) if !ok(0.5 * (ci.lo + ci.hi)) => Verdict::Fail,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }
}

/// Grid, sampler and catalog parameters for one scale.
#[derive(Debug, Clone)]
pub struct ScaleSetup {
    pub scale: usize,
    pub spec: GridSpec,
    pub catalog: CatalogOptions,
    pub gamma: f64,
    pub epsilon: f64,
    master_seed: u64,
    sampler: SpectralSampler,
}

impl ScaleSetup {
    pub fn new(cfg: &ExperimentConfig, scale: usize) -> Result<Self> {
        let spec = GridSpec::with_padding(scale, scale / 2, cfg.cell_size, cfg.padding_factor)?;
        let r_cap = cfg.r_cap_fraction * (scale / 2) as f64 * cfg.cell_size;
        let mut catalog = CatalogOptions::new(cfg.stride, r_cap);
        catalog.min_radius_cells = cfg.min_radius_cells;
        if r_cap < cfg.min_radius_cells * cfg.cell_size {
            return Err(Error::param("r_cap_fraction", format!("radius cap {r_cap} is below the smallest radius")));
        }
        Ok(Self {
            scale,
            sampler: SpectralSampler::new(&spec, DEFAULT_CALIBRATION)?,
            spec,
            catalog,
            gamma: cfg.gamma,
            epsilon: cfg.epsilon_cells * cfg.cell_size,
            master_seed: cfg.seed,
        })
    }

    /// Same box geometry with every length multiplied by `factor` cells.
    pub fn scaled(cfg: &ExperimentConfig, scale: usize, factor: usize) -> Result<Self> {
        let mut c = cfg.clone();
        c.stride *= factor;
        c.min_radius_cells *= factor as f64;
        c.epsilon_cells *= factor as f64;
        Self::new(&c, scale * factor)
    }

    pub fn short_side(&self) -> f64 {
        self.spec.inner_height()
    }

    pub fn r_cap(&self) -> f64 {
        self.catalog.r_cap
    }

    pub fn sample_seed(&self, index: usize) -> u64 {
        rng::derive(rng::derive(self.master_seed, self.scale as u64), index as u64)
    }

    pub fn field(&self, seed: u64) -> FieldSample {
        self.sampler.sample(seed)
    }

    pub fn measure(&self, field: &FieldSample) -> Result<MeasureGrid> {
        cell_measures(field, self.gamma, self.epsilon)
    }

    pub fn catalog(&self, measure: &MeasureGrid) -> Result<BallCatalog> {
        BallCatalog::new(measure, &self.catalog)
    }

    /// Field, measure and catalog of sample `index`.
    pub fn instance(&self, index: usize) -> Result<BallCatalog> {
        let f = self.field(self.sample_seed(index));
        self.catalog(&self.measure(&f)?)
    }
}

/// Runs `f` on `0..n` in parallel, keeping index order.
pub(crate) fn par_samples<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Spread `max / min` of positive values.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}
