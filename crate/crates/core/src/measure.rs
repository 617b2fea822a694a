//! Piecewise-constant LQG measure on the inner cells.
//!
//! Masses are stored as integer multiples of a power-of-two unit chosen so
//! that every partial sum is exactly representable. Ball and box masses are
//! then exact regardless of summation order, which keeps comparisons between
//! distances reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{circle_averages_inner, FieldSample};
use crate::grid::{CellRect, GridSpec, Point};
use crate::stats::{bootstrap_ci, Interval, BOOTSTRAP_RESAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureGrid {
    pub spec: GridSpec,
    pub gamma: f64,
    pub epsilon: f64,
    /// Row-major over inner cells, `cy * width + cx`.
    pub cell_mass: Vec<f64>,
    /// Per row, `width + 1` running sums starting at zero.
    pub row_prefix: Vec<f64>,
    /// Every mass is a positive multiple of this power of two.
    pub unit: f64,
    pub field_seed: Vec<u64>,
}

/// Power-of-two quantum for masses summing to about `total`.
fn unit_for(total: f64) -> f64 {
    let e = total.log2().ceil() as i32 + 1;
    2f64.powi(e - 53)
}

fn quantize(masses: &mut [f64]) -> f64 {
    let total: f64 = masses.iter().sum();
    let unit = unit_for(total);
    for m in masses.iter_mut() {
        *m = ((*m / unit).round() * unit).max(unit);
    }
    unit
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

/// `eps^{gamma^2/2} exp(gamma h_eps(center)) a^2` for every inner cell.
pub fn cell_measures(field: &FieldSample, gamma: f64, epsilon: f64) -> Result<MeasureGrid> {
    check_gamma(gamma)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let avg = circle_averages_inner(field, epsilon)
        .map_err(|_| Error::param("epsilon", format!("circles of radius {epsilon} leave the padded domain")))?;
    let spec = &field.spec;
    let pre = epsilon.powf(0.5 * gamma * gamma) * spec.cell_area();
    let masses = avg.iter().map(|h| pre * (gamma * h).exp()).collect();
    MeasureGrid::from_masses(spec, gamma, epsilon, masses, field.seed_record.clone())
}

impl MeasureGrid {
    /// Builds a measure from raw per-cell masses (quantized on entry).
    pub fn from_masses(
        spec: &GridSpec,
        gamma: f64,
        epsilon: f64,
        mut cell_mass: Vec<f64>,
        field_seed: Vec<u64>,
    ) -> Result<Self> {
        if cell_mass.len() != spec.inner_cells() {
            return Err(Error::param("cell_mass", "length must equal the inner cell count"));
        }
        if let Some(&m) = cell_mass.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::NonpositiveMass(m));
        }
        let unit = quantize(&mut cell_mass);
        let mut out = Self {
            spec: spec.clone(),
            gamma,
            epsilon,
            cell_mass,
            row_prefix: Vec::new(),
            unit,
            field_seed,
        };
        out.rebuild_prefix();
        Ok(out)
    }

    /// Every cell carries mass `a^2` (the Lebesgue measure, up to quantization).
    pub fn uniform(spec: &GridSpec) -> Self {
        Self::from_masses(spec, 0.0, 0.0, vec![spec.cell_area(); spec.inner_cells()], Vec::new())
            .expect("uniform masses are positive")
    }

    fn rebuild_prefix(&mut self) {
        let w = self.width();
        let mut prefix = Vec::with_capacity(self.height() * (w + 1));
        for row in self.cell_mass.chunks(w) {
            let mut s = 0.0;
            prefix.push(0.0);
            for m in row {
                s += m;
                prefix.push(s);
            }
        }
        self.row_prefix = prefix;
    }

    pub fn width(&self) -> usize {
        self.spec.inner_width_cells
    }

    pub fn height(&self) -> usize {
        self.spec.inner_height_cells
    }

    pub fn mass(&self, cx: usize, cy: usize) -> f64 {
        self.cell_mass[cy * self.width() + cx]
    }

    /// Sum of masses in `[x0, x1)` of row `cy`.
    pub fn row_sum(&self, cy: usize, x0: usize, x1: usize) -> f64 {
        let base = cy * (self.width() + 1);
        self.row_prefix[base + x1] - self.row_prefix[base + x0]
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.height()).map(|cy| self.row_sum(cy, 0, self.width())).sum()
    }

    /// Mass of a rectangle of inner cells (clipped to the inner box).
    pub fn box_mass(&self, r: CellRect) -> f64 {
        let x1 = r.x1().min(self.width());
        let y1 = r.y1().min(self.height());
        if r.x0 >= x1 {
            return 0.0;
        }
        (r.y0..y1).map(|cy| self.row_sum(cy, r.x0, x1)).sum()
    }

    /// Whether the center of cell `(cx, cy)` lies in the open ball.
    #[inline]
    pub fn center_in_ball(&self, cx: usize, cy: usize, center: Point, radius: f64) -> bool {
        let a = self.spec.cell_size;
        let dx = (cx as f64 + 0.5) * a - center.x;
        let dy = (cy as f64 + 0.5) * a - center.y;
        dx * dx + dy * dy < radius * radius
    }

    /// Column range `[lo, hi)` of row `cy` whose centers lie in the open ball.
    pub fn ball_row_range(&self, cy: usize, center: Point, radius: f64) -> Option<(usize, usize)> {
        let a = self.spec.cell_size;
        let w = self.width() as i64;
        let dy = (cy as f64 + 0.5) * a - center.y;
        let rem = radius * radius - dy * dy;
        if rem <= 0.0 {
            return None;
        }
        let half = rem.sqrt();
        // Estimate, then settle endpoints with the exact predicate.
        let mut lo = (((center.x - half) / a - 0.5).ceil() as i64).clamp(0, w);
        let mut hi = (((center.x + half) / a - 0.5).floor() as i64 + 1).clamp(0, w);
        while lo > 0 && self.center_in_ball((lo - 1) as usize, cy, center, radius) {
            lo -= 1;
        }
        while lo < hi && !self.center_in_ball(lo as usize, cy, center, radius) {
            lo += 1;
        }
        while hi < w && self.center_in_ball(hi as usize, cy, center, radius) {
            hi += 1;
        }
        while hi > lo && !self.center_in_ball((hi - 1) as usize, cy, center, radius) {
            hi -= 1;
        }
        (lo < hi).then_some((lo as usize, hi as usize))
    }

    /// Rows that can meet the open ball.
    pub fn ball_rows(&self, center: Point, radius: f64) -> std::ops::Range<usize> {
        let a = self.spec.cell_size;
        let lo = ((center.y - radius) / a - 0.5).floor().max(0.0) as usize;
        let hi = (((center.y + radius) / a - 0.5).ceil() + 1.0).clamp(0.0, self.height() as f64) as usize;
        lo.min(hi)..hi
    }

    /// Mass of the cells whose centers lie in the open ball `B(center, radius)`.
    pub fn ball_mass(&self, center: Point, radius: f64) -> f64 {
        if !(radius > 0.0) {
            return 0.0;
        }
        self.ball_rows(center, radius)
            .filter_map(|cy| self.ball_row_range(cy, center, radius).map(|(lo, hi)| self.row_sum(cy, lo, hi)))
            .sum()
    }

    /// Every mass multiplied by `alpha`. Exact for powers of two; otherwise
    /// the result is requantized.
    pub fn scale_measure(&self, alpha: f64) -> Result<MeasureGrid> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param("alpha", "must be positive"));
        }
        let masses = self.cell_mass.iter().map(|m| m * alpha).collect();
        Self::from_masses(&self.spec, self.gamma, self.epsilon, masses, self.field_seed.clone())
    }

    /// Measure restricted to a sub-box, as its own inner grid.
    pub fn restrict(&self, r: CellRect) -> Result<MeasureGrid> {
        if r.w == 0 || r.h == 0 || r.x1() > self.width() || r.y1() > self.height() {
            return Err(Error::InvalidSubbox(format!("{r:?} is not inside the inner box")));
        }
        let spec = GridSpec::with_pad_cells(r.w, r.h, self.spec.cell_size, 1)?;
        let mut masses = Vec::with_capacity(r.w * r.h);
        for cy in r.y0..r.y1() {
            masses.extend_from_slice(&self.cell_mass[cy * self.width() + r.x0..cy * self.width() + r.x1()]);
        }
        Self::from_masses(&spec, self.gamma, self.epsilon, masses, self.field_seed.clone())
    }
}

/// Mean of `mass^nu` with a percentile bootstrap interval.
pub fn moment_estimate(samples: &[f64], nu: f64, seed: u64) -> Result<(f64, Interval)> {
    if samples.is_empty() {
        return Err(Error::param("samples", "must be nonempty"));
    }
    if let Some(&m) = samples.iter().find(|m| !(**m > 0.0)) {
        return Err(Error::NonpositiveMass(m));
    }
    if nu == 0.0 {
        return Ok((1.0, Interval::point(1.0)));
    }
    let powered: Vec<f64> = samples.iter().map(|m| m.powf(nu)).collect();
    let est = crate::stats::mean(&powered);
    if powered.iter().all(|&p| p == powered[0]) {
        return Ok((powered[0], Interval::point(powered[0])));
    }
    let ci = bootstrap_ci(&powered, crate::stats::mean, BOOTSTRAP_RESAMPLES, 0.95, seed);
    Ok((est, ci))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> GridSpec {
        GridSpec::with_padding(8, 8, 0.25, 1.0).unwrap()
    }

    #[test]
    fn zero_field_gives_constant_masses() {
        let s = spec();
        let f = FieldSample::zeros(&s);
        let m = cell_measures(&f, 1.0, 0.5).unwrap();
        let want = 0.5f64.powf(0.5) * s.cell_area();
        for &c in &m.cell_mass {
            assert!((c - want).abs() <= m.unit);
        }
    }

    #[test]
    fn vanishing_gamma_is_lebesgue() {
        let s = spec();
        let f = crate::field::sample_dgff(&s, 2).unwrap();
        let m = cell_measures(&f, 1e-12, 0.5).unwrap();
        for &c in &m.cell_mass {
            assert!((c / s.cell_area() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gamma_and_epsilon_validation() {
        let s = spec();
        let f = FieldSample::zeros(&s);
        assert_eq!(cell_measures(&f, 2.0, 0.5), Err(Error::GammaOutOfRange(2.0)));
        assert!(cell_measures(&f, 0.0, 0.5).is_err());
        assert!(cell_measures(&f, 1.0, 100.0).is_err());
    }

    #[test]
    fn ball_mass_edge_cases() {
        let s = spec();
        let f = crate::field::sample_dgff(&s, 5).unwrap();
        let m = cell_measures(&f, 1.0, 0.5).unwrap();
        let c = Point::new(1.0, 1.0);
        assert_eq!(m.ball_mass(c, 0.0), 0.0);
        assert_eq!(m.ball_mass(c, s.inner_diameter()), m.total_mass());
        assert_eq!(m.box_mass(CellRect::new(0, 0, 8, 8)), m.total_mass());
    }

    #[test]
    fn scaling_round_trip_is_exact() {
        let s = spec();
        let f = crate::field::sample_dgff(&s, 6).unwrap();
        let m = cell_measures(&f, 1.3, 0.5).unwrap();
        let back = m.scale_measure(2.0).unwrap().scale_measure(0.5).unwrap();
        assert_eq!(back.cell_mass, m.cell_mass);
        assert_eq!(m.scale_measure(1.0).unwrap(), m);
        let p = Point::new(0.9, 1.1);
        assert_eq!(m.scale_measure(2.0).unwrap().ball_mass(p, 0.6), 2.0 * m.ball_mass(p, 0.6));
    }

    #[test]
    fn moments_of_constant_data() {
        let (e, ci) = moment_estimate(&[3.0; 10], 2.0, 0).unwrap();
        assert_eq!(e, 9.0);
        assert_eq!(ci.width(), 0.0);
        assert_eq!(moment_estimate(&[1.0, 2.0], 0.0, 0).unwrap().0, 1.0);
        assert!(moment_estimate(&[1.0, 0.0], 1.0, 0).is_err());
        assert!(moment_estimate(&[], 1.0, 0).is_err());
    }
}
