use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{par_samples, ExperimentConfig, ScaleSetup, Verdict};
use crate::catalog::BallCatalog;
use crate::distance::{
    crossing_distance, distance_to_point, distances_from_point, fixed_to_f64, has_far_center, CrossingMode, Weighting,
};
use crate::error::Result;
use crate::grid::Point;
use crate::rng;
use crate::stats::{bootstrap_groups, linear_fit, lower_quantile, Interval, LinearFit};

/// Distances gathered from one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderSample {
    pub scale: usize,
    pub sample: usize,
    pub seed: u64,
    pub hard: Option<f64>,
    /// `(|x - y|, d(x, y))` for random point pairs.
    pub pairs: Vec<(f64, f64)>,
    /// `(a, d(min; a))` per separation fraction, minimized over the sources.
    pub separated: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub ci: Interval,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// `Theta^hard(1/2)` per scale.
    pub normalizers: Vec<(usize, f64)>,
    /// Slope of `log(d / Theta*)` against `log(|x - y| / S)`.
    pub forward: Option<HolderFit>,
    /// Slope of `log a` against `log(d(min; a) / Theta*)`.
    pub inverse: Option<HolderFit>,
    /// Too few points for a regression.
    pub degenerate: bool,
    pub verdict: Verdict,
    pub samples: Vec<HolderSample>,
}

fn random_cell_center(setup: &ScaleSetup, r: &mut impl Rng) -> Point {
    let spec = &setup.spec;
    spec.cell_center(r.random_range(0..spec.inner_width_cells), r.random_range(0..spec.inner_height_cells))
}

/// Distances of one sample: random pairs from each source and, per
/// separation, the least distance from a source to a point that far away.
pub fn holder_sample(
    cat: &BallCatalog,
    setup: &ScaleSetup,
    cfg: &ExperimentConfig,
    sample: usize,
    seed: u64,
) -> Result<HolderSample> {
    let weighting = Weighting::Kappa {
        delta: cfg.delta(),
        r_max: setup.r_cap(),
    };
    let hard = crossing_distance(cat, cfg.delta(), setup.r_cap(), CrossingMode::Hard)?;
    let mut r = rng::stream(seed, 0x401D);
    let diam = setup.spec.inner_diameter();
    let mut pairs = Vec::new();
    let mut best = vec![f64::INFINITY; cfg.holder_separations.len()];
    for _ in 0..cfg.holder_sources {
        let s = random_cell_center(setup, &mut r);
        let table = distances_from_point(cat, weighting, s)?;
        for _ in 0..cfg.holder_targets {
            let y = random_cell_center(setup, &mut r);
            let e = s.dist(&y);
            if e == 0.0 {
                continue;
            }
            if let Some(d) = distance_to_point(cat, &table, y) {
                pairs.push((e, fixed_to_f64(d)));
            }
        }
        for (k, &a) in cfg.holder_separations.iter().enumerate() {
            let sep = a * diam;
            for (b, &d) in table.iter().enumerate() {
                let v = fixed_to_f64(d);
                if d != u128::MAX && v < best[k] && has_far_center(cat, b, s, sep) {
                    best[k] = v;
                }
            }
        }
    }
    Ok(HolderSample {
        scale: setup.scale,
        sample,
        seed,
        hard: hard.reached.then_some(hard.value),
        pairs,
        separated: cfg
            .holder_separations
            .iter()
            .zip(best)
            .filter(|(_, d)| d.is_finite())
            .map(|(&a, d)| (a, d))
            .collect(),
    })
}

/// Regression points of each sample, grouped by scale.
type Points = Vec<Vec<Vec<(f64, f64)>>>;

fn fit(points: &Points, cfg: &ExperimentConfig, salt: u64) -> Option<HolderFit> {
    let flat = |groups: &[Vec<usize>]| {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (g, idx) in points.iter().zip(groups) {
            for &i in idx {
                for &(a, b) in &g[i] {
                    x.push(a);
                    y.push(b);
                }
            }
        }
        (x, y)
    };
    let all: Vec<Vec<usize>> = points.iter().map(|g| (0..g.len()).collect()).collect();
    let (x, y) = flat(&all);
    let LinearFit { slope, n, .. } = linear_fit(&x, &y, cfg.confidence).ok()?;
    let sizes: Vec<usize> = points.iter().map(Vec::len).collect();
    let ci = bootstrap_groups(
        &sizes,
        |g| {
            let (x, y) = flat(g);
            linear_fit(&x, &y, cfg.confidence).map_or(f64::NAN, |f| f.slope)
        },
        cfg.bootstrap_resamples,
        cfg.confidence,
        cfg.seed ^ salt,
    );
    Some(HolderFit {
        exponent: slope,
        ci,
        points: n,
    })
}

/// Forward and inverse Hölder exponents pooled over the configured scales,
/// with distances normalized by `Theta^hard(1/2)` and Euclidean lengths by the
/// short side. Uses `aux_samples` samples per scale.
pub fn holder_scan(cfg: &ExperimentConfig) -> Result<HolderReport> {
    cfg.validate()?;
    let mut normalizers = Vec::new();
    let mut forward: Points = Vec::new();
    let mut inverse: Points = Vec::new();
    let mut samples = Vec::new();
    for &scale in &cfg.scales {
        let setup = ScaleSetup::new(cfg, scale)?;
        let rows = par_samples(cfg.aux_samples, |i| {
            let seed = setup.sample_seed(i);
            holder_sample(&setup.instance(i)?, &setup, cfg, i, seed)
        })?;
        let hard: Vec<f64> = rows.iter().filter_map(|r| r.hard).collect();
        if hard.is_empty() {
            continue;
        }
        let theta = lower_quantile(&hard, 0.5);
        let s = setup.short_side();
        normalizers.push((scale, theta));
        forward.push(
            rows.iter()
                .map(|r| r.pairs.iter().map(|&(e, d)| ((e / s).ln(), (d / theta).ln())).collect())
                .collect(),
        );
        inverse.push(
            rows.iter()
                .map(|r| r.separated.iter().map(|&(a, d)| ((d / theta).ln(), a.ln())).collect())
                .collect(),
        );
        samples.extend(rows);
    }
    let forward = fit(&forward, cfg, 0x401E);
    let inverse = fit(&inverse, cfg, 0x401F);
    let degenerate = forward.is_none() || inverse.is_none();
    let verdict = match (&forward, &inverse) {
        (Some(f), Some(i)) => Verdict::from_interval(f.ci, |v| v > 0.0).and(Verdict::from_interval(i.ci, |v| v > 0.0)),
        _ => Verdict::Inconclusive,
    };
    Ok(HolderReport {
        normalizers,
        forward,
        inverse,
        degenerate,
        verdict,
        samples,
    })
}
