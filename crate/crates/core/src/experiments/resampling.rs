use serde::{Deserialize, Serialize};

use super::{par_samples, ExperimentConfig, ScaleSetup, Verdict};
use crate::distance::{crossing_distance, CrossingMode};
use crate::error::{Error, Result};
use crate::field::{FieldSample, DEFAULT_CALIBRATION};
use crate::grid::CellRect;
use crate::noise::{LocalResampler, WhiteNoiseDecomposition, DEFAULT_REACH_FACTOR};
use crate::rng;
use crate::stats::{bootstrap_groups, mean, variance, Interval};

/// Per-sample ingredients of the Efron–Stein bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsRecord {
    pub sample: usize,
    pub seed: u64,
    pub f: f64,
    /// `(f - f_coarse)^2`.
    pub coarse_sq: f64,
    /// `sum_i (f - f_i)^2` over resampled blocks.
    pub block_sq: f64,
    /// `(f - f_i)^2` per resampled block, in the order of `EsReport::blocks`.
    pub per_block: Vec<f64>,
    /// Resampled instances dropped as unreachable.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsReport {
    pub scale: usize,
    pub block_side: usize,
    pub blocks_total: usize,
    pub blocks_used: usize,
    /// Resampled block ids with their gap to the inner box in cells.
    pub blocks: Vec<(usize, f64)>,
    pub samples: usize,
    pub variance: f64,
    pub variance_ci: Interval,
    /// `E[(f - f_coarse)^2] / 2`.
    pub coarse_term: f64,
    /// `sum_i E[(f - f_i)^2] / 2`.
    pub block_term: f64,
    /// `coarse_term + block_term - variance`.
    pub margin: f64,
    pub margin_ci: Interval,
    /// The same interval at three standard deviations.
    pub margin_ci3: Interval,
    /// Share of the bound coming from the coarse term.
    pub coarse_share: f64,
    /// Target value of the variance when it is known in closed form.
    pub analytic_variance: Option<f64>,
    pub verdict: Verdict,
    pub records: Vec<EsRecord>,
}

/// Confidence of a two-sided three-sigma interval.
const THREE_SIGMA: f64 = 0.997_300_203_936_74;

fn summarize(
    cfg: &ExperimentConfig,
    head: (usize, usize, usize, Vec<(usize, f64)>),
    records: Vec<EsRecord>,
    analytic: Option<f64>,
) -> EsReport {
    let (scale, block_side, blocks_total, blocks) = head;
    let f: Vec<f64> = records.iter().map(|r| r.f).collect();
    let c: Vec<f64> = records.iter().map(|r| r.coarse_sq).collect();
    let b: Vec<f64> = records.iter().map(|r| r.block_sq).collect();
    let margin_of = |idx: &[usize]| {
        let pick = |x: &[f64]| idx.iter().map(|&i| x[i]).collect::<Vec<_>>();
        0.5 * mean(&pick(&c)) + 0.5 * mean(&pick(&b)) - variance(&pick(&f))
    };
    let n = records.len();
    let all: Vec<usize> = (0..n).collect();
    let ci = |level: f64, salt: u64| bootstrap_groups(&[n], |g| margin_of(&g[0]), cfg.bootstrap_resamples, level, cfg.seed ^ salt);
    let variance_ci = bootstrap_groups(
        &[n],
        |g| variance(&g[0].iter().map(|&i| f[i]).collect::<Vec<_>>()),
        cfg.bootstrap_resamples,
        THREE_SIGMA,
        cfg.seed ^ 0xE5,
    );
    let coarse_term = 0.5 * mean(&c);
    let block_term = 0.5 * mean(&b);
    let margin = margin_of(&all);
    let margin_ci3 = ci(THREE_SIGMA, 0xE53);
    let verdict = match analytic {
        // Equality is expected: both the margin and the variance must match.
        Some(v) => {
            if margin_ci3.contains(0.0) && variance_ci.contains(v) {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        None if margin >= 0.0 => Verdict::Pass,
        None if margin_ci3.hi >= 0.0 => Verdict::Inconclusive,
        None => Verdict::Fail,
    };
    EsReport {
        scale,
        block_side,
        blocks_total,
        blocks_used: blocks.len(),
        blocks,
        samples: n,
        variance: variance(&f),
        variance_ci,
        coarse_term,
        block_term,
        margin,
        margin_ci: ci(cfg.confidence, 0xE52),
        margin_ci3,
        coarse_share: coarse_term / (coarse_term + block_term),
        analytic_variance: analytic,
        verdict,
        records,
    }
}

/// Euclidean gap in cells between two rectangles of the same grid.
fn rect_gap(a: CellRect, b: CellRect) -> f64 {
    let gap = |lo0: usize, hi0: usize, lo1: usize, hi1: usize| {
        if hi0 <= lo1 {
            (lo1 - hi0) as f64
        } else if hi1 <= lo0 {
            (lo0 - hi1) as f64
        } else {
            0.0
        }
    };
    gap(a.x0, a.x1(), b.x0, b.x1()).hypot(gap(a.y0, a.y1(), b.y0, b.y1()))
}

/// Vertices read by the measure of the inner box: the inner vertices plus a
/// margin covering the circle averages.
fn measure_window(setup: &ScaleSetup) -> Result<CellRect> {
    let spec = &setup.spec;
    let (pl, _, pb, _) = spec.pads();
    let m = (setup.epsilon / spec.cell_size).ceil() as usize + 1;
    if pl <= m || pb <= m {
        return Err(Error::param("padding_factor", "padding too thin for the circle averages"));
    }
    Ok(CellRect::new(
        pl - m,
        pb - m,
        spec.inner_width_cells + 2 * m + 1,
        spec.inner_height_cells + 2 * m + 1,
    ))
}

fn log_hard(setup: &ScaleSetup, field: &FieldSample, delta: f64) -> Result<Option<f64>> {
    let cat = setup.catalog(&setup.measure(field)?)?;
    let d = crossing_distance(&cat, delta, setup.r_cap(), CrossingMode::Hard)?;
    Ok(d.reached.then(|| d.value.ln()))
}

/// Efron–Stein check for `f = log` hard crossing at the first scale, with
/// blocks of side `scale / block_ratio`.
pub fn efron_stein_decomposition(cfg: &ExperimentConfig) -> Result<EsReport> {
    cfg.validate()?;
    let scale = cfg.scales[0];
    let setup = ScaleSetup::new(cfg, scale)?;
    let side = (scale / cfg.block_ratio).max(1);
    let window = measure_window(&setup)?;
    let probe = WhiteNoiseDecomposition::new(&setup.spec, side, DEFAULT_CALIBRATION, 0)?;
    let resampler = LocalResampler::new(&probe, window, DEFAULT_REACH_FACTOR);
    let (pl, _, pb, _) = setup.spec.pads();
    let inner = CellRect::new(pl, pb, setup.spec.inner_width_cells, setup.spec.inner_height_cells);
    let reach = cfg.es_reach_blocks * side as f64;
    let used: Vec<(usize, f64)> = (0..probe.block_count())
        .map(|i| (i, rect_gap(probe.block_partition[i], inner)))
        .filter(|&(_, g)| g <= reach)
        .collect();
    let delta = cfg.delta();
    let records = par_samples(cfg.samples, |s| {
        let seed = setup.sample_seed(s);
        let dec = WhiteNoiseDecomposition::new(&setup.spec, side, DEFAULT_CALIBRATION, seed)?;
        let base = dec.field();
        let Some(f) = log_hard(&setup, &base, delta)? else {
            return Ok(None);
        };
        let mut dropped = 0;
        let coarse_sq = match log_hard(&setup, &dec.resample_coarse(rng::derive(seed, u64::MAX)), delta)? {
            Some(g) => (f - g) * (f - g),
            None => {
                dropped += 1;
                0.0
            }
        };
        let mut per_block = Vec::with_capacity(used.len());
        for &(id, _) in &used {
            let fresh = rng::derive(seed, id as u64 + 1);
            let field = if resampler.applicable(&dec, dec.block_partition[id]) {
                resampler.apply(&base, &resampler.block_delta(&dec, id, fresh)?)
            } else {
                dec.resample_block(id, fresh)?
            };
            match log_hard(&setup, &field, delta)? {
                Some(g) => per_block.push((f - g) * (f - g)),
                None => {
                    dropped += 1;
                    per_block.push(0.0);
                }
            }
        }
        Ok(Some(EsRecord {
            sample: s,
            seed,
            f,
            coarse_sq,
            block_sq: per_block.iter().sum(),
            per_block,
            dropped,
        }))
    })?;
    let records: Vec<EsRecord> = records.into_iter().flatten().collect();
    if records.len() < 2 {
        return Err(Error::param("samples", "fewer than two reachable samples"));
    }
    Ok(summarize(cfg, (scale, side, probe.block_count(), used), records, None))
}

/// Standardized sum of the noise of one block, over every fine slice.
fn block_statistic(dec: &WhiteNoiseDecomposition, noise: &[Vec<f64>], block: CellRect, local: bool) -> f64 {
    let nx = dec.spec.interior_nx();
    let a2 = dec.spec.cell_area();
    let mut sum = 0.0;
    for (k, slice) in noise.iter().enumerate() {
        let sd = (a2 * dec.time_slices[k].len()).sqrt();
        for j in 0..block.h {
            for i in 0..block.w {
                let v = if local {
                    slice[j * block.w + i]
                } else {
                    slice[(block.y0 + j - 1) * nx + (block.x0 + i - 1)]
                };
                sum += v / sd;
            }
        }
    }
    sum / ((block.w * block.h * noise.len()) as f64).sqrt()
}

fn coarse_statistic(noise: &[Vec<f64>]) -> f64 {
    let n: usize = noise.iter().map(|v| v.len()).sum();
    noise.iter().flatten().sum::<f64>() / (n as f64).sqrt()
}

/// Efron–Stein on `f = sum over blocks of standardized block noise + the
/// standardized coarse noise`, where the bound is an equality with value
/// `blocks + 1`. Uses the first scale and every block.
pub fn efron_stein_linear(cfg: &ExperimentConfig) -> Result<EsReport> {
    cfg.validate()?;
    let scale = cfg.scales[0];
    let setup = ScaleSetup::new(cfg, scale)?;
    let side = (scale / cfg.block_ratio).max(1);
    let records = par_samples(cfg.samples, |s| {
        let seed = setup.sample_seed(s);
        let dec = WhiteNoiseDecomposition::new(&setup.spec, side, DEFAULT_CALIBRATION, seed)?;
        let fine = dec.fine_noise();
        let stats: Vec<f64> = dec.block_partition.iter().map(|&b| block_statistic(&dec, fine, b, false)).collect();
        let x0 = coarse_statistic(dec.coarse_noise());
        let f = stats.iter().sum::<f64>() + x0;
        let x0_new = coarse_statistic(dec.with_coarse_resampled(rng::derive(seed, u64::MAX)).coarse_noise());
        let mut per_block = Vec::with_capacity(stats.len());
        for (id, &b) in dec.block_partition.iter().enumerate() {
            let fresh = dec.fresh_block_noise(id, rng::derive(seed, id as u64 + 1))?;
            let d = stats[id] - block_statistic(&dec, &fresh, b, true);
            per_block.push(d * d);
        }
        Ok(EsRecord {
            sample: s,
            seed,
            f,
            coarse_sq: (x0 - x0_new) * (x0 - x0_new),
            block_sq: per_block.iter().sum(),
            per_block,
            dropped: 0,
        })
    })?;
    let probe = WhiteNoiseDecomposition::new(&setup.spec, side, DEFAULT_CALIBRATION, 0)?;
    let (pl, _, pb, _) = setup.spec.pads();
    let inner = CellRect::new(pl, pb, setup.spec.inner_width_cells, setup.spec.inner_height_cells);
    let blocks: Vec<(usize, f64)> =
        probe.block_partition.iter().enumerate().map(|(i, &b)| (i, rect_gap(b, inner))).collect();
    let analytic = blocks.len() as f64 + 1.0;
    Ok(summarize(cfg, (scale, side, probe.block_count(), blocks), records, Some(analytic)))
}
