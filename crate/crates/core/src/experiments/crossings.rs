use serde::{Deserialize, Serialize};

use super::{par_samples, spread, ExperimentConfig, ScaleSetup, Verdict};
use crate::catalog::BallCatalog;
use crate::distance::{crossing_distance, distance_to_point, distances_from_point, fixed_to_f64, CrossingMode, Weighting};
use crate::error::{Error, Result};
use crate::grid::Point;
use crate::stats::{
    bootstrap_groups, jackknife, ks_two_sample, linear_fit, lower_quantile, lower_quantile_sorted, median, normal_z,
    sorted, variance, Interval,
};

/// Crossing distances of one sample at one threshold; `None` is unreachable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub scale: usize,
    pub sample: usize,
    pub seed: u64,
    pub delta: f64,
    pub lr: Option<f64>,
    pub easy: Option<f64>,
    pub hard: Option<f64>,
}

fn reached(r: crate::distance::DistanceResult) -> Option<f64> {
    r.reached.then_some(r.value)
}

/// Crossings of one catalog at every threshold.
pub fn crossings_of(cat: &BallCatalog, setup: &ScaleSetup, deltas: &[f64], sample: usize) -> Result<Vec<CrossingRecord>> {
    let r = setup.r_cap();
    deltas
        .iter()
        .map(|&delta| {
            // The box is wide, so its hard crossing is the left-right one.
            let hard = reached(crossing_distance(cat, delta, r, CrossingMode::Hard)?);
            let easy = reached(crossing_distance(cat, delta, r, CrossingMode::Easy)?);
            Ok(CrossingRecord {
                scale: setup.scale,
                sample,
                seed: setup.sample_seed(sample),
                delta,
                lr: hard,
                easy,
                hard,
            })
        })
        .collect()
}

/// All crossing records for every scale, sample and threshold, sorted by
/// `(scale order, sample, threshold order)`.
pub fn run_crossings(cfg: &ExperimentConfig) -> Result<Vec<CrossingRecord>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &scale in &cfg.scales {
        let setup = ScaleSetup::new(cfg, scale)?;
        let per = par_samples(cfg.samples, |i| crossings_of(&setup.instance(i)?, &setup, &cfg.deltas, i))?;
        out.extend(per.into_iter().flatten());
    }
    Ok(out)
}

fn select(records: &[CrossingRecord], scale: usize, delta: f64) -> Vec<&CrossingRecord> {
    records.iter().filter(|r| r.scale == scale && r.delta == delta).collect()
}

/// Reachable `(hard, easy)` pairs and the unreachable rate.
fn pairs(records: &[&CrossingRecord]) -> (Vec<f64>, Vec<f64>, f64) {
    let (mut h, mut e) = (Vec::new(), Vec::new());
    for r in records {
        if let (Some(a), Some(b)) = (r.hard, r.easy) {
            h.push(a);
            e.push(b);
        }
    }
    let rate = if records.is_empty() {
        0.0
    } else {
        1.0 - h.len() as f64 / records.len() as f64
    };
    (h, e, rate)
}

/// Maximum share of unreachable samples for a table cell to stay valid.
pub const MAX_UNREACHABLE_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub p: f64,
    pub value: f64,
    pub ci: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileCell {
    pub scale: usize,
    pub delta: f64,
    pub samples: usize,
    pub unreachable_rate: f64,
    pub valid: bool,
    pub lr: Vec<QuantileEstimate>,
    pub easy: Vec<QuantileEstimate>,
    pub hard: Vec<QuantileEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub percentiles: Vec<f64>,
    pub cells: Vec<QuantileCell>,
}

fn quantile_row(x: &[f64], ps: &[f64], cfg: &ExperimentConfig, seed: u64) -> Vec<QuantileEstimate> {
    if x.is_empty() {
        return Vec::new();
    }
    let s = sorted(x);
    ps.iter()
        .map(|&p| QuantileEstimate {
            p,
            value: lower_quantile_sorted(&s, p),
            ci: crate::stats::bootstrap_ci(x, |v| lower_quantile(v, p), cfg.bootstrap_resamples, cfg.confidence, seed),
        })
        .collect()
}

impl QuantileTable {
    pub fn from_records(cfg: &ExperimentConfig, records: &[CrossingRecord]) -> Self {
        let mut cells = Vec::new();
        for &scale in &cfg.scales {
            for &delta in &cfg.deltas {
                let sel = select(records, scale, delta);
                let (h, e, rate) = pairs(&sel);
                let seed = crate::rng::derive(cfg.seed, scale as u64 ^ delta.to_bits());
                cells.push(QuantileCell {
                    scale,
                    delta,
                    samples: sel.len(),
                    unreachable_rate: rate,
                    valid: !sel.is_empty() && rate <= MAX_UNREACHABLE_RATE,
                    lr: quantile_row(&h, &cfg.percentiles, cfg, seed),
                    easy: quantile_row(&e, &cfg.percentiles, cfg, seed ^ 1),
                    hard: quantile_row(&h, &cfg.percentiles, cfg, seed ^ 2),
                });
            }
        }
        Self {
            percentiles: cfg.percentiles.clone(),
            cells,
        }
    }

    pub fn cell(&self, scale: usize, delta: f64) -> Option<&QuantileCell> {
        self.cells.iter().find(|c| c.scale == scale && c.delta == delta)
    }

    /// Descriptions of broken monotonicity: quantiles must not decrease in
    /// the percentile, nor as the threshold decreases.
    pub fn monotonicity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let rows = |c: &QuantileCell| [("lr", c.lr.clone()), ("easy", c.easy.clone()), ("hard", c.hard.clone())];
        for c in self.cells.iter().filter(|c| c.valid) {
            for (name, row) in rows(c) {
                for w in row.windows(2) {
                    if w[0].p <= w[1].p && w[0].value > w[1].value {
                        out.push(format!("{name} at scale {} delta {}: p {} > p {}", c.scale, c.delta, w[0].p, w[1].p));
                    }
                }
            }
        }
        for a in self.cells.iter().filter(|c| c.valid) {
            for b in self.cells.iter().filter(|c| c.valid && c.scale == a.scale && c.delta < a.delta) {
                for ((name, ra), (_, rb)) in rows(a).into_iter().zip(rows(b)) {
                    for (qa, qb) in ra.iter().zip(&rb) {
                        if qb.value < qa.value {
                            out.push(format!(
                                "{name} at scale {}: p {} smaller at delta {} than at {}",
                                a.scale, qa.p, b.delta, a.delta
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Quantile table from fresh samples, together with the per-sample records.
pub fn estimate_quantiles(cfg: &ExperimentConfig) -> Result<(QuantileTable, Vec<CrossingRecord>)> {
    let records = run_crossings(cfg)?;
    Ok((QuantileTable::from_records(cfg, &records), records))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDeltaPoint {
    pub delta: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDeltaScan {
    pub scale: usize,
    pub points: Vec<QDeltaPoint>,
    /// Least-squares slope of `log Q` against `log(1/delta)`.
    pub slope: f64,
    pub slope_ci: Interval,
    /// Samples whose left-right distance decreased as the threshold decreased.
    pub monotone_violations: usize,
    pub samples: usize,
    pub verdict: Verdict,
}

fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    linear_fit(x, y, 0.95).map(|f| f.slope).unwrap_or(f64::NAN)
}

/// Median left-right crossing against the threshold at the first scale.
pub fn q_delta_scan(cfg: &ExperimentConfig, records: &[CrossingRecord]) -> Result<QDeltaScan> {
    let scale = cfg.scales[0];
    let mut deltas = cfg.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    if deltas.len() < 3 || deltas[0] / deltas[deltas.len() - 1] < 8.0 * (1.0 - 1e-12) {
        return Err(Error::param("deltas", "need at least three thresholds spanning three octaves"));
    }
    // Per sample, left-right distances ordered by decreasing threshold.
    let n = records.iter().filter(|r| r.scale == scale).map(|r| r.sample + 1).max().unwrap_or(0);
    let mut table: Vec<Vec<Option<f64>>> = vec![vec![None; deltas.len()]; n];
    for r in records.iter().filter(|r| r.scale == scale) {
        if let Some(k) = deltas.iter().position(|&d| d == r.delta) {
            table[r.sample][k] = r.lr;
        }
    }
    let complete: Vec<Vec<f64>> = table.iter().filter_map(|row| row.iter().cloned().collect()).collect();
    if complete.len() * 2 < n.max(1) {
        return Err(Error::param("deltas", "more than half of the samples are unreachable"));
    }
    let monotone_violations = complete.iter().filter(|row| row.windows(2).any(|w| w[1] < w[0])).count();
    let x: Vec<f64> = deltas.iter().map(|d| (1.0 / d).ln()).collect();
    let medians_of = |idx: &[usize]| -> Vec<f64> {
        (0..deltas.len())
            .map(|k| median(&idx.iter().map(|&i| complete[i][k]).collect::<Vec<_>>()))
            .collect()
    };
    let all: Vec<usize> = (0..complete.len()).collect();
    let med = medians_of(&all);
    let slope = ols_slope(&x, &med.iter().map(|m| m.ln()).collect::<Vec<_>>());
    let slope_ci = bootstrap_groups(
        &[complete.len()],
        |g| ols_slope(&x, &medians_of(&g[0]).iter().map(|m| m.ln()).collect::<Vec<_>>()),
        cfg.bootstrap_resamples,
        cfg.confidence,
        cfg.seed ^ 0x0D17,
    );
    let verdict = Verdict::from_interval(slope_ci, |s| s > 0.0).and(if monotone_violations == 0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    });
    Ok(QDeltaScan {
        scale,
        points: deltas.iter().zip(&med).map(|(&delta, &median)| QDeltaPoint { delta, median }).collect(),
        slope,
        slope_ci,
        monotone_violations,
        samples: complete.len(),
        verdict,
    })
}

/// Reachable hard/easy pairs at the first threshold, per scale.
fn scale_pairs(cfg: &ExperimentConfig, records: &[CrossingRecord]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    cfg.scales
        .iter()
        .map(|&s| {
            let (h, e, rate) = pairs(&select(records, s, cfg.delta()));
            if h.is_empty() || rate > MAX_UNREACHABLE_RATE {
                return Err(Error::param("deltas", format!("scale {s} is degenerate (unreachable rate {rate})")));
            }
            Ok((h, e))
        })
        .collect()
}

fn pick(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RswScale {
    pub scale: usize,
    pub ratio: f64,
    pub ci: Interval,
    /// Share of samples whose hard crossing is shorter than the easy one.
    pub per_sample_violation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RswReport {
    pub p: f64,
    pub scales: Vec<RswScale>,
    /// `max / min` of the ratio across scales.
    pub stability: f64,
    pub stability_ci: Interval,
    pub verdict: Verdict,
}

/// Largest ratio spread across scales accepted as stable.
pub const RSW_STABILITY_LIMIT: f64 = 3.0;

/// `Theta_hard(p) / Theta_easy(p)` per scale and its spread across scales.
pub fn rsw_ratio(cfg: &ExperimentConfig, records: &[CrossingRecord]) -> Result<RswReport> {
    let data = scale_pairs(cfg, records)?;
    let p = cfg.rsw_p;
    let ratio = |h: &[f64], e: &[f64]| lower_quantile(h, p) / lower_quantile(e, p);
    let scales: Vec<RswScale> = cfg
        .scales
        .iter()
        .zip(&data)
        .map(|(&scale, (h, e))| RswScale {
            scale,
            ratio: ratio(h, e),
            ci: crate::stats::bootstrap_ci_paired(h, e, ratio, cfg.bootstrap_resamples, cfg.confidence, cfg.seed ^ scale as u64),
            per_sample_violation_rate: h.iter().zip(e).filter(|(a, b)| a < b).count() as f64 / h.len() as f64,
        })
        .collect();
    let stability = spread(&scales.iter().map(|s| s.ratio).collect::<Vec<_>>());
    let sizes: Vec<usize> = data.iter().map(|d| d.0.len()).collect();
    let stability_ci = bootstrap_groups(
        &sizes,
        |g| {
            let r: Vec<f64> = g.iter().zip(&data).map(|(i, (h, e))| ratio(&pick(h, i), &pick(e, i))).collect();
            spread(&r)
        },
        cfg.bootstrap_resamples,
        cfg.confidence,
        cfg.seed ^ 0x5257,
    );
    let verdict = Verdict::from_interval(stability_ci, |s| s < RSW_STABILITY_LIMIT);
    Ok(RswReport {
        p,
        scales,
        stability,
        stability_ci,
        verdict,
    })
}

/// `exp(sqrt(variance) ((1 - q)^{-1/2} + p^{-1/2}))`, the largest possible
/// ratio `Theta(q) / Theta(p)` of a positive variable with that log-variance.
pub fn quantile_gap_bound(variance: f64, p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", "must lie in (0, 1)"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q", "must lie in (0, 1)"));
    }
    if !(variance >= 0.0) || variance.is_infinite() {
        return Err(Error::param("variance", "must be finite and nonnegative"));
    }
    Ok((variance.sqrt() * ((1.0 - q).powf(-0.5) + p.powf(-0.5))).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogVarScale {
    pub scale: usize,
    pub variance: f64,
    pub se: f64,
    pub ci: Interval,
    /// Empirical `Theta_hard(p1) / Theta_hard(p0)`.
    pub quantile_gap: f64,
    pub quantile_gap_ci: Interval,
    /// The bound on that gap implied by the variance.
    pub gap_bound: f64,
    pub gap_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogVarReport {
    pub scales: Vec<LogVarScale>,
    /// `max over scales / first scale`.
    pub growth: f64,
    pub growth_ci: Interval,
    pub verdict: Verdict,
}

/// Largest accepted growth of the log-variance over the first scale.
pub const LOGVAR_GROWTH_LIMIT: f64 = 2.0;

/// Variance of the log hard crossing per scale.
pub fn logvar_scan(cfg: &ExperimentConfig, records: &[CrossingRecord]) -> Result<LogVarReport> {
    let data = scale_pairs(cfg, records)?;
    let z = normal_z(cfg.confidence);
    let logs: Vec<Vec<f64>> = data.iter().map(|(h, _)| h.iter().map(|v| v.ln()).collect()).collect();
    let gap = |h: &[f64]| lower_quantile(h, cfg.p1) / lower_quantile(h, cfg.p0);
    let mut scales = Vec::new();
    for ((&scale, l), (h, _)) in cfg.scales.iter().zip(&logs).zip(&data) {
        let (v, se) = jackknife(l, variance);
        let ci = Interval {
            lo: (v - z * se).max(0.0),
            hi: v + z * se,
        };
        let quantile_gap = gap(h);
        let quantile_gap_ci =
            crate::stats::bootstrap_ci(h, gap, cfg.bootstrap_resamples, cfg.confidence, cfg.seed ^ 0x6A9 ^ scale as u64);
        let gap_bound = quantile_gap_bound(v, cfg.p0, cfg.p1)?;
        let hi_bound = quantile_gap_bound(ci.hi, cfg.p0, cfg.p1)?;
        scales.push(LogVarScale {
            scale,
            variance: v,
            se,
            ci,
            quantile_gap,
            quantile_gap_ci,
            gap_bound,
            gap_ok: quantile_gap_ci.lo <= hi_bound,
        });
    }
    let growth_of = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / v[0];
    let growth = growth_of(&scales.iter().map(|s| s.variance).collect::<Vec<_>>());
    let sizes: Vec<usize> = logs.iter().map(|l| l.len()).collect();
    let growth_ci = bootstrap_groups(
        &sizes,
        |g| growth_of(&g.iter().zip(&logs).map(|(i, l)| variance(&pick(l, i))).collect::<Vec<_>>()),
        cfg.bootstrap_resamples,
        cfg.confidence,
        cfg.seed ^ 0x10C5,
    );
    let gaps = if scales.iter().all(|s| s.gap_ok) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let verdict = Verdict::from_interval(growth_ci, |g| g < LOGVAR_GROWTH_LIMIT).and(gaps);
    Ok(LogVarReport {
        scales,
        growth,
        growth_ci,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiScale {
    pub scale: usize,
    pub chi: f64,
    pub ci: Interval,
    /// Running maximum of `chi` over this and smaller scales.
    pub chi_bar: f64,
    /// `Theta_hard(1/2)`.
    pub theta_star: f64,
    pub easy_normalized: f64,
    pub hard_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiEstimate {
    pub scales: Vec<ChiScale>,
    /// Largest spread across scales of `Theta_easy(p0) / Theta*` and of
    /// `Theta_hard(p1) / Theta*`.
    pub band_width: f64,
    pub verdict: Verdict,
}

/// Largest accepted band width.
pub const CHI_BAND_LIMIT: f64 = 4.0;

/// `chi_U = Theta_hard(p1) / Theta_easy(p0)` per scale, scales in the order
/// given (which should be increasing for the running maximum to mean much).
pub fn chi_estimate(cfg: &ExperimentConfig, records: &[CrossingRecord]) -> Result<ChiEstimate> {
    let data = scale_pairs(cfg, records)?;
    let chi = |h: &[f64], e: &[f64]| lower_quantile(h, cfg.p1) / lower_quantile(e, cfg.p0);
    let mut scales: Vec<ChiScale> = Vec::new();
    let mut running = 0.0f64;
    for (&scale, (h, e)) in cfg.scales.iter().zip(&data) {
        let c = chi(h, e);
        running = running.max(c);
        let theta_star = lower_quantile(h, 0.5);
        scales.push(ChiScale {
            scale,
            chi: c,
            ci: crate::stats::bootstrap_ci_paired(h, e, chi, cfg.bootstrap_resamples, cfg.confidence, cfg.seed ^ 0xC41 ^ scale as u64),
            chi_bar: running,
            theta_star,
            easy_normalized: lower_quantile(e, cfg.p0) / theta_star,
            hard_normalized: lower_quantile(h, cfg.p1) / theta_star,
        });
    }
    let band_width = spread(&scales.iter().map(|s| s.easy_normalized).collect::<Vec<_>>())
        .max(spread(&scales.iter().map(|s| s.hard_normalized).collect::<Vec<_>>()));
    let verdict = if band_width < CHI_BAND_LIMIT {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ChiEstimate {
        scales,
        band_width,
        verdict,
    })
}

/// Sub-lattice points spanning the inner box: `k` columns and `ceil(k/2)`
/// rows of cell centers, corners included.
pub fn diameter_lattice(setup: &ScaleSetup, k: usize) -> Vec<Point> {
    let (w, h) = (setup.spec.inner_width_cells, setup.spec.inner_height_cells);
    let rows = k.div_ceil(2).max(2);
    let pos = |n: usize, m: usize, i: usize| (i * (n - 1)) / (m - 1);
    let mut out = Vec::new();
    for j in 0..rows {
        for i in 0..k {
            out.push(setup.spec.cell_center(pos(w, k, i), pos(h, rows, j)));
        }
    }
    out
}

/// Largest distance between two points of `points`; `None` if some pair is
/// unreachable.
pub fn lattice_diameter(cat: &BallCatalog, weighting: Weighting, points: &[Point]) -> Result<Option<f64>> {
    let mut best = 0u128;
    for (i, &p) in points.iter().enumerate().take(points.len().saturating_sub(1)) {
        let table = distances_from_point(cat, weighting, p)?;
        for &q in &points[i + 1..] {
            match distance_to_point(cat, &table, q) {
                Some(d) => best = best.max(d),
                None => return Ok(None),
            }
        }
    }
    Ok(Some(fixed_to_f64(best)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterRecord {
    pub scale: usize,
    pub sample: usize,
    pub seed: u64,
    pub diameter: Option<f64>,
    pub lr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterScale {
    pub scale: usize,
    pub median_lr: f64,
    pub ratios: Vec<f64>,
    pub q90: f64,
    /// `None` for a single sample.
    pub q90_ci: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub scales: Vec<DiameterScale>,
    /// Spread of the 90th percentile ratio across scales.
    pub stability: f64,
    pub stability_ci: Option<Interval>,
    pub verdict: Verdict,
    pub records: Vec<DiameterRecord>,
}

/// Largest accepted spread of the 90th percentile ratio.
pub const DIAMETER_STABILITY_LIMIT: f64 = 2.0;

fn q90_ratio(diam: &[f64], lr: &[f64]) -> f64 {
    let m = median(lr);
    lower_quantile(&diam.iter().map(|d| d / m).collect::<Vec<_>>(), 0.9)
}

/// Sub-lattice diameter over the median left-right crossing, per sample,
/// using `aux_samples` samples per scale.
pub fn diameter_ratio(cfg: &ExperimentConfig) -> Result<DiameterReport> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &scale in &cfg.scales {
        let setup = ScaleSetup::new(cfg, scale)?;
        let points = diameter_lattice(&setup, cfg.diameter_points);
        let weighting = Weighting::Kappa {
            delta: cfg.delta(),
            r_max: setup.r_cap(),
        };
        records.extend(par_samples(cfg.aux_samples, |i| {
            let cat = setup.instance(i)?;
            Ok(DiameterRecord {
                scale,
                sample: i,
                seed: setup.sample_seed(i),
                diameter: lattice_diameter(&cat, weighting, &points)?,
                lr: reached(crossing_distance(&cat, cfg.delta(), setup.r_cap(), CrossingMode::LeftRight)?),
            })
        })?);
    }
    let data: Vec<(Vec<f64>, Vec<f64>)> = cfg
        .scales
        .iter()
        .map(|&s| {
            let (mut d, mut l) = (Vec::new(), Vec::new());
            for r in records.iter().filter(|r| r.scale == s) {
                if let (Some(a), Some(b)) = (r.diameter, r.lr) {
                    d.push(a);
                    l.push(b);
                }
            }
            (d, l)
        })
        .collect();
    if data.iter().any(|(d, _)| d.is_empty()) {
        return Err(Error::param("deltas", "a scale has no reachable sample"));
    }
    let single = data.iter().any(|(d, _)| d.len() < 2);
    let scales: Vec<DiameterScale> = cfg
        .scales
        .iter()
        .zip(&data)
        .map(|(&scale, (d, l))| {
            let m = median(l);
            DiameterScale {
                scale,
                median_lr: m,
                ratios: d.iter().map(|v| v / m).collect(),
                q90: q90_ratio(d, l),
                q90_ci: (d.len() >= 2).then(|| {
                    crate::stats::bootstrap_ci_paired(d, l, q90_ratio, cfg.bootstrap_resamples, cfg.confidence, cfg.seed ^ 0xD1A)
                }),
            }
        })
        .collect();
    let stability = spread(&scales.iter().map(|s| s.q90).collect::<Vec<_>>());
    let stability_ci = (!single).then(|| {
        let sizes: Vec<usize> = data.iter().map(|x| x.0.len()).collect();
        bootstrap_groups(
            &sizes,
            |g| spread(&g.iter().zip(&data).map(|(i, (d, l))| q90_ratio(&pick(d, i), &pick(l, i))).collect::<Vec<_>>()),
            cfg.bootstrap_resamples,
            cfg.confidence,
            cfg.seed ^ 0xD1B,
        )
    });
    let verdict = match stability_ci {
        Some(ci) => Verdict::from_interval(ci, |s| s < DIAMETER_STABILITY_LIMIT),
        None => Verdict::Inconclusive,
    };
    Ok(DiameterReport {
        scales,
        stability,
        stability_ci,
        verdict,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub scale: usize,
    pub factor: usize,
    pub delta: f64,
    pub scaled_delta: f64,
    pub small: Vec<f64>,
    pub large: Vec<f64>,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
}

/// Smallest accepted KS p-value.
pub const SCALING_P_LIMIT: f64 = 0.01;

/// Left-right distances at the first scale against those of the box twice as
/// large, with every length doubled and the threshold multiplied by
/// `2^{2 + gamma^2/2}`.
pub fn scaling_covariance_test(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let scale = cfg.scales[0];
    let factor = 2usize;
    let delta = cfg.delta();
    let scaled_delta = delta * (factor as f64).powf(2.0 + 0.5 * cfg.gamma * cfg.gamma);
    let small_setup = ScaleSetup::new(cfg, scale)?;
    let large_setup = ScaleSetup::scaled(cfg, scale, factor)?;
    let run = |setup: &ScaleSetup, d: f64| -> Result<Vec<f64>> {
        let v = par_samples(cfg.samples, |i| {
            let cat = setup.instance(i)?;
            Ok(reached(crossing_distance(&cat, d, setup.r_cap(), CrossingMode::LeftRight)?))
        })?;
        Ok(v.into_iter().flatten().collect())
    };
    let small = run(&small_setup, delta)?;
    let large = run(&large_setup, scaled_delta)?;
    if small.is_empty() || large.is_empty() {
        return Err(Error::param("deltas", "no reachable sample"));
    }
    let (d, p) = ks_two_sample(&small, &large);
    Ok(ScalingReport {
        scale,
        factor,
        delta,
        scaled_delta,
        small,
        large,
        ks_statistic: d,
        p_value: p,
        verdict: if p > SCALING_P_LIMIT { Verdict::Pass } else { Verdict::Fail },
    })
}
