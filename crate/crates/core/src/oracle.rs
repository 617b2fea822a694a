//! Exact per-instance checks: fast distances against the brute-force
//! reference, the comparison inequalities, and count versus modified
//! distance. Shared by the acceptance suite and the `oracle-check` command.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brute::brute_force_distance;
use crate::catalog::{build_catalog, BallCatalog, CatalogOptions};
use crate::distance::{count_distance, modified_distance, DistanceResult};
use crate::error::Result;
use crate::field::{exact_covariance, sample_dgff, SpectralSampler, DEFAULT_CALIBRATION};
use crate::grid::{CellRect, GridSpec, Point};
use crate::measure::{cell_measures, MeasureGrid};
use crate::rng;

/// A random catalog with a threshold and two endpoints.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub catalog: BallCatalog,
    pub gamma: f64,
    pub delta: f64,
    pub x: Point,
    pub y: Point,
    pub seed: u64,
}

/// LQG measure on a `w x h` box of unit cells with `epsilon = 2` cells.
pub fn random_measure(w: usize, h: usize, gamma: f64, seed: u64) -> Result<MeasureGrid> {
    let spec = GridSpec::new(w, h, 1.0)?;
    cell_measures(&sample_dgff(&spec, seed)?, gamma, 2.0)
}

fn random_point(r: &mut impl Rng, w: usize, h: usize) -> Point {
    Point::new(r.random_range(0.0..w as f64), r.random_range(0.0..h as f64))
}

/// Random `gamma` in `[0.3, 1.7)`, threshold between the 20th and 90th
/// percentile of ball masses, endpoints uniform in the box.
pub fn random_instance(w: usize, h: usize, stride: usize, r_cap: f64, seed: u64) -> Result<OracleInstance> {
    let mut r = rng::stream(seed, 99);
    let gamma = r.random_range(0.3..1.7);
    let catalog = build_catalog(&random_measure(w, h, gamma, seed)?, stride, r_cap)?;
    let mut masses = catalog.masses().to_vec();
    masses.sort_by(f64::total_cmp);
    let q = r.random_range(0.2..0.9);
    let delta = masses[(q * masses.len() as f64) as usize];
    let x = random_point(&mut r, w, h);
    let y = random_point(&mut r, w, h);
    Ok(OracleInstance {
        catalog,
        gamma,
        delta,
        x,
        y,
        seed,
    })
}

/// Outcome of one exact property over many instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    /// Instances where the premise could not be set up.
    pub skipped: usize,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            instances: 0,
            violations: 0,
            skipped: 0,
        }
    }

    fn record(&mut self, ok: bool) {
        self.instances += 1;
        if !ok {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.instances > 0
    }
}

fn same(a: &DistanceResult, b: &DistanceResult) -> bool {
    (a.reached, a.fixed, a.count) == (b.reached, b.fixed, b.count)
}

/// Count and modified distances against the brute-force reference on
/// `instances` random instances per grid (8x8 and 8x16).
pub fn oracle_equivalence(instances: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (w, h) in [(8, 8), (8, 16)] {
        let mut count = CheckResult::new(&format!("count_distance {w}x{h}"));
        let mut modified = CheckResult::new(&format!("modified_distance {w}x{h}"));
        for i in 0..instances {
            let inst = random_instance(w, h, 1, 4.0, rng::derive(seed, (w * h * 1000 + i) as u64))?;
            let c = &inst.catalog;
            let fast = count_distance(c, inst.delta, inst.x, inst.y)?;
            let weighting = crate::distance::Weighting::Count { delta: inst.delta };
            count.record(same(&fast, &brute_force_distance(c, weighting, inst.x, inst.y)?));
            let fast = modified_distance(c, inst.delta, 4.0, inst.x, inst.y)?;
            let weighting = crate::distance::Weighting::Kappa {
                delta: inst.delta,
                r_max: 4.0,
            };
            modified.record(same(&fast, &brute_force_distance(c, weighting, inst.x, inst.y)?));
        }
        out.push(count);
        out.push(modified);
    }
    Ok(out)
}

/// Grid and catalog of the comparison suite.
const SUITE_GRID: usize = 32;
const SUITE_CAP: f64 = 16.0;

/// Cellwise larger measure: about 30% of the cells grow by a factor in
/// `[1, 2)`, so the total grows by less than a factor 2 and requantization
/// can only round masses up.
fn dominating_measure(m: &MeasureGrid, r: &mut impl Rng) -> Result<MeasureGrid> {
    let masses = m
        .cell_mass
        .iter()
        .map(|&v| if r.random_bool(0.3) { v * (1.0 + r.random::<f64>()) } else { v })
        .collect();
    MeasureGrid::from_masses(&m.spec, m.gamma, m.epsilon, masses, m.field_seed.clone())
}

/// Random sub-box of the inner box containing both endpoints.
fn box_around(r: &mut impl Rng, x: Point, y: Point, w: usize, h: usize) -> CellRect {
    let lo_x = x.x.min(y.x).floor() as usize;
    let hi_x = (x.x.max(y.x).floor() as usize + 1).min(w);
    let lo_y = x.y.min(y.y).floor() as usize;
    let hi_y = (x.y.max(y.y).floor() as usize + 1).min(h);
    let x0 = r.random_range(0..=lo_x);
    let y0 = r.random_range(0..=lo_y);
    let x1 = r.random_range(hi_x..=w);
    let y1 = r.random_range(hi_y..=h);
    CellRect::new(x0, y0, x1 - x0, y1 - y0)
}

/// The comparison inequalities, each on `instances` random 32x32 instances.
/// All comparisons are on exact fixed-point values.
pub fn comparison_suite(instances: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let names = [
        "delta comparison",
        "radius comparison",
        "measure comparison",
        "box comparison",
        "scaling bound",
        "exchange identity",
        "triangle inequality",
    ];
    let mut checks: Vec<CheckResult> = names.iter().map(|n| CheckResult::new(n)).collect();
    let n = SUITE_GRID;
    for i in 0..instances {
        let inst = random_instance(n, n, 1, SUITE_CAP, rng::derive(seed, i as u64))?;
        let mut r = rng::stream(inst.seed, 0xC0DE);
        let (c, delta, x, y) = (&inst.catalog, inst.delta, inst.x, inst.y);
        let d = modified_distance(c, delta, SUITE_CAP, x, y)?;

        let larger = delta * (1.0 + 4.0 * r.random::<f64>());
        checks[0].record(d.fixed >= modified_distance(c, larger, SUITE_CAP, x, y)?.fixed);

        let smaller_cap = [2.0, 4.0, 8.0][r.random_range(0..3)];
        checks[1].record(modified_distance(c, delta, smaller_cap, x, y)?.fixed >= d.fixed);

        let nu = dominating_measure(&c.measure, &mut r)?;
        if nu.cell_mass.iter().zip(&c.measure.cell_mass).all(|(a, b)| a >= b) {
            let cn = build_catalog(&nu, 1, SUITE_CAP)?;
            checks[2].record(d.fixed <= modified_distance(&cn, delta, SUITE_CAP, x, y)?.fixed);
        } else {
            checks[2].skipped += 1;
        }

        let sub = box_around(&mut r, x, y, n, n);
        let mut opts = CatalogOptions::new(1, SUITE_CAP);
        opts.domain = Some(sub);
        let small = BallCatalog::new(&c.measure, &opts)?;
        checks[3].record(modified_distance(&small, delta, SUITE_CAP, x, y)?.fixed >= d.fixed);

        // Powers of two keep masses and thresholds exact.
        let alpha = [2.0, 4.0, 8.0][r.random_range(0..3)];
        let scaled = build_catalog(&c.measure.scale_measure(alpha)?, 1, SUITE_CAP)?;
        let ds = modified_distance(&scaled, delta, SUITE_CAP, x, y)?;
        checks[4].record(ds.fixed <= d.fixed.saturating_mul(alpha as u128));
        checks[5].record(ds.fixed == modified_distance(c, delta / alpha, SUITE_CAP, x, y)?.fixed);

        let z = random_point(&mut r, n, n);
        let xz = modified_distance(c, delta, SUITE_CAP, x, z)?;
        let zy = modified_distance(c, delta, SUITE_CAP, z, y)?;
        checks[6].record(d.fixed <= xz.fixed.saturating_add(zy.fixed));
    }
    Ok(checks)
}

/// Count distance against modified distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountVsModified {
    pub instances: usize,
    /// Instances where the count distance is finite.
    pub reached: usize,
    /// Violations of `d <= count`.
    pub lower_violations: usize,
    /// Reached instances whose catalog has at least four radii.
    pub eligible: usize,
    /// Eligible instances with `count > 2 d + slack`.
    pub slack_violations: usize,
    pub slack: f64,
    pub slack_violation_rate: f64,
}

pub const COUNT_SLACK: f64 = 4.0;
pub const COUNT_SLACK_RATE: f64 = 0.05;

impl CountVsModified {
    pub fn passed(&self) -> bool {
        self.lower_violations == 0 && self.eligible > 0 && self.slack_violation_rate <= COUNT_SLACK_RATE
    }
}

/// `d <= count <= 2 d + slack` on `instances` random 32x32 instances.
pub fn count_vs_modified(instances: usize, seed: u64) -> Result<CountVsModified> {
    let mut out = CountVsModified {
        instances,
        reached: 0,
        lower_violations: 0,
        eligible: 0,
        slack_violations: 0,
        slack: COUNT_SLACK,
        slack_violation_rate: 0.0,
    };
    for i in 0..instances {
        let inst = random_instance(SUITE_GRID, SUITE_GRID, 1, SUITE_CAP, rng::derive(seed ^ 0xD0D, i as u64))?;
        let c = &inst.catalog;
        let count = count_distance(c, inst.delta, inst.x, inst.y)?;
        if !count.reached {
            continue;
        }
        out.reached += 1;
        let d = modified_distance(c, inst.delta, SUITE_CAP, inst.x, inst.y)?;
        if d.fixed > count.fixed {
            out.lower_violations += 1;
        }
        if c.radii.len() >= 4 {
            out.eligible += 1;
            if count.value > 2.0 * d.value + COUNT_SLACK {
                out.slack_violations += 1;
            }
        }
    }
    out.slack_violation_rate = if out.eligible > 0 {
        out.slack_violations as f64 / out.eligible as f64
    } else {
        0.0
    };
    Ok(out)
}

/// Largest entrywise gap between the covariance implied by the spectral
/// sampler (built column by column) and the dense Green's function.
pub fn sampler_covariance_gap(spec: &GridSpec) -> Result<f64> {
    let exact = exact_covariance(spec)?;
    let sampler = SpectralSampler::new(spec, DEFAULT_CALIBRATION)?;
    let n = exact.nrows();
    let mut map = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        map.set_column(k, &DVector::from_vec(sampler.apply(&e)));
        e[k] = 0.0;
    }
    Ok((&map * map.transpose() - exact).abs().max())
}
