//! Summary statistics: order-statistic quantiles, bootstrap and jackknife
//! intervals, least squares and the two-sample Kolmogorov–Smirnov test.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::rng;

/// Closed interval estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn std_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Sample covariance of paired data.
pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

/// Lower order statistic: the value at 1-based index `ceil(p n)` of the
/// sorted sample (index 1 when `p n < 1`).
pub fn lower_quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

pub fn lower_quantile(x: &[f64], p: f64) -> f64 {
    lower_quantile_sorted(&sorted(x), p)
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(x: &[f64]) -> f64 {
    lower_quantile(x, 0.5)
}

/// Percentile bootstrap interval for `stat`, deterministic in `seed`.
pub fn bootstrap_ci<F>(x: &[f64], stat: F, resamples: usize, level: f64, seed: u64) -> Interval
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let mut r = rng::stream(seed, 0xB007);
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = x[r.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    Interval {
        lo: lower_quantile_sorted(&stats, alpha),
        hi: lower_quantile_sorted(&stats, 1.0 - alpha),
    }
}

/// Bootstrap interval for a statistic of paired samples resampled jointly.
pub fn bootstrap_ci_paired<F>(x: &[f64], y: &[f64], stat: F, resamples: usize, level: f64, seed: u64) -> Interval
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = x.len();
    let mut r = rng::stream(seed, 0xB008);
    let (mut bx, mut by) = (vec![0.0; n], vec![0.0; n]);
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for i in 0..n {
                let k = r.random_range(0..n);
                bx[i] = x[k];
                by[i] = y[k];
            }
            stat(&bx, &by)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    Interval {
        lo: lower_quantile_sorted(&stats, alpha),
        hi: lower_quantile_sorted(&stats, 1.0 - alpha),
    }
}

/// Percentile bootstrap over several independent groups of samples. Each
/// resample draws indices with replacement within every group (sizes given
/// by `sizes`) and hands them to `stat`; `NaN` statistics are dropped.
pub fn bootstrap_groups<F>(sizes: &[usize], stat: F, resamples: usize, level: f64, seed: u64) -> Interval
where
    F: Fn(&[Vec<usize>]) -> f64,
{
    let mut r = rng::stream(seed, 0xB009);
    let mut idx: Vec<Vec<usize>> = sizes.iter().map(|&n| vec![0; n]).collect();
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for (g, &n) in idx.iter_mut().zip(sizes) {
            for v in g.iter_mut() {
                *v = r.random_range(0..n);
            }
        }
        let s = stat(&idx);
        if !s.is_nan() {
            stats.push(s);
        }
    }
    if stats.is_empty() {
        return Interval { lo: f64::NAN, hi: f64::NAN };
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 0.5 * (1.0 - level);
    Interval {
        lo: lower_quantile_sorted(&stats, alpha),
        hi: lower_quantile_sorted(&stats, 1.0 - alpha),
    }
}

/// Jackknife estimate and standard error of `stat`.
pub fn jackknife<F>(x: &[f64], stat: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let full = stat(x);
    if n < 2 {
        return (full, f64::NAN);
    }
    let mut buf = Vec::with_capacity(n - 1);
    let leave: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend(x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| *v));
            stat(&buf)
        })
        .collect();
    let m = mean(&leave);
    let var = (n - 1) as f64 / n as f64 * leave.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    (full, var.sqrt())
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn normal_z(level: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + 0.5 * level)
}

/// Ordinary least squares fit of `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub slope_ci: Interval,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64], level: f64) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::param("regression", "need at least three paired points"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("regression", "abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_se = (rss / (n - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).unwrap().inverse_cdf(0.5 + 0.5 * level);
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        slope_ci: Interval {
            lo: slope - t * slope_se,
            hi: slope + t * slope_se,
        },
        n,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (sa, sb) = (sorted(a), sorted(b));
    let (n, m) = (sa.len(), sb.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let x = sa[i].min(sb[j]);
        while i < n && sa[i] <= x {
            i += 1;
        }
        while j < m && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
