use serde::{Deserialize, Serialize};

use super::{par_samples, ExperimentConfig, Verdict};
use crate::error::{Error, Result};
use crate::field::{
    circle_average, circle_average_variance, circle_averages_inner, exact_covariance, subbox_residual, SpectralSampler,
    DEFAULT_CALIBRATION,
};
use crate::grid::{CellRect, GridSpec, Point};
use crate::rng;
use crate::stats::{bootstrap_groups, covariance, linear_fit, mean, variance, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSlopeReport {
    pub grid: usize,
    pub samples: usize,
    pub probes: usize,
    /// Radii in cells.
    pub epsilons: Vec<f64>,
    /// Sample variance per radius, averaged over probes.
    pub variances: Vec<f64>,
    /// Exact variance per radius, averaged over probes.
    pub exact: Vec<f64>,
    pub slope: f64,
    pub slope_ci: Interval,
    pub exact_slope: f64,
    pub verdict: Verdict,
}

pub const CIRCLE_SLOPE_TOLERANCE: f64 = 0.1;

/// A `side x side` lattice of probe centers around the middle of the box,
/// spaced `spacing` cells apart.
fn probe_centers(spec: &GridSpec, side: usize, spacing: usize) -> Vec<Point> {
    let (cx, cy) = (spec.inner_width_cells / 2, spec.inner_height_cells / 2);
    let half = (side * spacing) / 2;
    let mut out = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            let p = spec.cell_center(cx - half + i * spacing, cy - half + j * spacing);
            // Cell centers sit half a cell off the lattice; move onto a vertex.
            out.push(Point::new(p.x - 0.5 * spec.cell_size, p.y - 0.5 * spec.cell_size));
        }
    }
    out
}

/// Slope of the circle-average variance against `log(1/eps)` on a
/// `grid x grid` box, pooling an 8x8 lattice of probe centers over the middle half.
pub fn circle_slope(cfg: &ExperimentConfig, grid: usize, samples: usize, epsilons: &[f64]) -> Result<CircleSlopeReport> {
    if epsilons.len() < 3 {
        return Err(Error::param("epsilons", "need at least three radii"));
    }
    if samples < 2 {
        return Err(Error::param("samples", "need at least two samples"));
    }
    let spec = GridSpec::with_padding(grid, grid, 1.0, cfg.padding_factor)?;
    let centers = probe_centers(&spec, 8, (grid / 16).max(1));
    let sampler = SpectralSampler::new(&spec, DEFAULT_CALIBRATION)?;
    let base = rng::derive(cfg.seed, 0xC12C);
    // values[s][e * probes + p]
    let values = par_samples(samples, |s| {
        let f = sampler.sample(rng::derive(base, s as u64));
        let mut row = Vec::with_capacity(epsilons.len() * centers.len());
        for &e in epsilons {
            for &c in &centers {
                row.push(circle_average(&f, c, e)?);
            }
        }
        Ok(row)
    })?;
    let np = centers.len();
    let x: Vec<f64> = epsilons.iter().map(|e| -e.ln()).collect();
    let pooled = |idx: &[usize]| -> Vec<f64> {
        (0..epsilons.len())
            .map(|e| {
                let per_probe: Vec<f64> = (0..np)
                    .map(|p| variance(&idx.iter().map(|&s| values[s][e * np + p]).collect::<Vec<_>>()))
                    .collect();
                mean(&per_probe)
            })
            .collect()
    };
    let all: Vec<usize> = (0..samples).collect();
    let variances = pooled(&all);
    let slope = linear_fit(&x, &variances, cfg.confidence)?.slope;
    let slope_ci = bootstrap_groups(
        &[samples],
        |g| linear_fit(&x, &pooled(&g[0]), cfg.confidence).map_or(f64::NAN, |f| f.slope),
        cfg.bootstrap_resamples,
        cfg.confidence,
        cfg.seed ^ 0xC12D,
    );
    let exact = epsilons
        .iter()
        .map(|&e| {
            let v: Result<Vec<f64>> = centers
                .iter()
                .map(|&c| circle_average_variance(&spec, c, e, DEFAULT_CALIBRATION))
                .collect();
            v.map(|v| mean(&v))
        })
        .collect::<Result<Vec<f64>>>()?;
    let exact_slope = linear_fit(&x, &exact, cfg.confidence)?.slope;
    Ok(CircleSlopeReport {
        grid,
        samples,
        probes: np,
        epsilons: epsilons.to_vec(),
        variances,
        exact,
        slope,
        slope_ci,
        exact_slope,
        verdict: Verdict::from_interval(slope_ci, |s| (s - 1.0).abs() <= CIRCLE_SLOPE_TOLERANCE),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePair {
    /// Subbox interior vertex indices, row-major.
    pub u: usize,
    pub v: usize,
    pub cross_cov: f64,
    pub cross_se: f64,
    pub residual_cov: f64,
    pub residual_se: f64,
    pub green: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsMarkovReport {
    pub grid: usize,
    pub subbox: usize,
    pub samples: usize,
    pub pairs: Vec<ProbePair>,
    /// Largest `|cross_cov| / cross_se`.
    pub max_cross_z: f64,
    /// Largest `|residual_cov - green| / residual_se`.
    pub max_residual_z: f64,
    pub verdict: Verdict,
}

/// Standard error of the sample covariance of paired data.
fn covariance_se(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    (variance(&prods) / x.len() as f64).sqrt()
}

/// Ten fixed pairs of interior vertices of a `side x side` subbox.
fn gm_pairs(side: usize) -> Vec<(usize, usize)> {
    let n = side - 1;
    let at = |i: usize, j: usize| j * n + i;
    let (c, e) = (n / 2, n - 1);
    vec![
        (at(c, c), at(c, c)),
        (at(c, c), at(c + 1, c)),
        (at(c, c), at(c, c + 2)),
        (at(0, 0), at(0, 0)),
        (at(0, 0), at(e, e)),
        (at(1, c), at(e - 1, c)),
        (at(c, 0), at(c, e)),
        (at(0, e), at(1, e)),
        (at(e, 0), at(c, c)),
        (at(2, 3), at(3, 2)),
    ]
}

/// Gibbs–Markov check: inside a subbox the field minus its harmonic
/// extension is uncorrelated with the extension and has the subbox Green's
/// function as covariance.
pub fn gibbs_markov_check(cfg: &ExperimentConfig, grid: usize, subbox: usize, samples: usize) -> Result<GibbsMarkovReport> {
    if subbox < 4 || subbox + 2 > grid {
        return Err(Error::param("subbox", "must be at least 4 and fit strictly inside the grid"));
    }
    let spec = GridSpec::with_pad_cells(grid, grid, 1.0, 0)?;
    let o = (grid - subbox) / 2;
    let rect = CellRect::new(o, o, subbox, subbox);
    let sampler = SpectralSampler::new(&spec, DEFAULT_CALIBRATION)?;
    let base = rng::derive(cfg.seed, 0x6B3A);
    let rows = par_samples(samples, |s| subbox_residual(&sampler.sample(rng::derive(base, s as u64)), rect))?;
    let green = exact_covariance(&GridSpec::with_pad_cells(subbox, subbox, 1.0, 0)?)?;
    let col = |k: usize, res: bool| -> Vec<f64> { rows.iter().map(|(r, e)| if res { r[k] } else { e[k] }).collect() };
    let pairs: Vec<ProbePair> = gm_pairs(subbox)
        .into_iter()
        .map(|(u, v)| {
            let (ru, rv, ev) = (col(u, true), col(v, true), col(v, false));
            ProbePair {
                u,
                v,
                cross_cov: covariance(&ru, &ev),
                cross_se: covariance_se(&ru, &ev),
                residual_cov: covariance(&ru, &rv),
                residual_se: covariance_se(&ru, &rv),
                green: green[(u, v)],
            }
        })
        .collect();
    let max_cross_z = pairs.iter().map(|p| p.cross_cov.abs() / p.cross_se).fold(0.0, f64::max);
    let max_residual_z = pairs
        .iter()
        .map(|p| (p.residual_cov - p.green).abs() / p.residual_se)
        .fold(0.0, f64::max);
    let verdict = if max_cross_z <= 3.0 && max_residual_z <= 3.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(GibbsMarkovReport {
        grid,
        subbox,
        samples,
        pairs,
        max_cross_z,
        max_residual_z,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConvergenceReport {
    pub grid: usize,
    pub samples: usize,
    /// `eps_k = 2^{-k}` on the unit box, from `k = 3`.
    pub epsilons: Vec<f64>,
    /// Per sample, `|mu_{k+1} - mu_k|` of the central quarter box.
    pub increments: Vec<Vec<f64>>,
    /// Share of samples whose increments decrease at every step.
    pub share_decreasing: f64,
    pub share_ci: Interval,
    /// Per step, share of samples with a smaller next increment.
    pub step_rates: Vec<f64>,
    pub verdict: Verdict,
}

pub const CONVERGENCE_SHARE: f64 = 0.8;

/// Dyadic convergence diagnostic of the measure of the central quarter box of
/// `[0, 1]^2` resolved by `grid x grid` cells, for `eps = 2^{-k}`, `k >= 3`,
/// down to two cells.
pub fn measure_convergence(cfg: &ExperimentConfig, grid: usize, samples: usize) -> Result<MeasureConvergenceReport> {
    if !grid.is_power_of_two() || grid < 64 {
        return Err(Error::param("grid", "must be a power of two of at least 64"));
    }
    let a = 1.0 / grid as f64;
    let spec = GridSpec::with_padding(grid, grid, a, cfg.padding_factor)?;
    let kmax = (grid / 2).trailing_zeros() as i32;
    let epsilons: Vec<f64> = (3..=kmax).map(|k| 2f64.powi(-k)).collect();
    let sampler = SpectralSampler::new(&spec, DEFAULT_CALIBRATION)?;
    let base = rng::derive(cfg.seed, 0x3EA5);
    let g = cfg.gamma;
    let (q0, q1) = (grid / 4, 3 * grid / 4);
    let increments = par_samples(samples, |s| {
        let f = sampler.sample(rng::derive(base, s as u64));
        let masses = epsilons
            .iter()
            .map(|&e| {
                let h = circle_averages_inner(&f, e)?;
                let pre = e.powf(0.5 * g * g) * a * a;
                let mut m = 0.0;
                for cy in q0..q1 {
                    for cx in q0..q1 {
                        m += pre * (g * h[cy * grid + cx]).exp();
                    }
                }
                Ok(m)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(masses.windows(2).map(|w| (w[1] - w[0]).abs()).collect::<Vec<f64>>())
    })?;
    let decreasing: Vec<f64> = increments
        .iter()
        .map(|inc| if inc.windows(2).all(|w| w[1] < w[0]) { 1.0 } else { 0.0 })
        .collect();
    let steps = increments.first().map_or(0, |v| v.len().saturating_sub(1));
    let step_rates = (0..steps)
        .map(|k| mean(&increments.iter().map(|v| if v[k + 1] < v[k] { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
        .collect();
    let share_decreasing = mean(&decreasing);
    let share_ci = bootstrap_groups(
        &[samples],
        |g| mean(&g[0].iter().map(|&i| decreasing[i]).collect::<Vec<_>>()),
        cfg.bootstrap_resamples,
        cfg.confidence,
        cfg.seed ^ 0x3EA6,
    );
    Ok(MeasureConvergenceReport {
        grid,
        samples,
        epsilons,
        increments,
        share_decreasing,
        share_ci,
        step_rates,
        verdict: if share_decreasing >= CONVERGENCE_SHARE {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}
