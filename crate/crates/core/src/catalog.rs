//! Admissible Euclidean balls over a measure.
//!
//! Centers are inner cell centers on a sub-lattice of stride `stride` anchored
//! at cell `(0, 0)`, restricted to a rectangular domain and optionally to a
//! mask. Radii are `r_min * 2^j` up to the cap. Ball `level * n_centers + c`
//! has radius `radii[level]` and center `c` (row-major over the lattice); the
//! lattice itself serves as the spatial index for neighbour queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellRect, Point};
use crate::measure::MeasureGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
    pub mass: f64,
}

/// Catalog construction options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogOptions {
    pub stride: usize,
    /// Smallest radius in cells; radii double from here.
    pub min_radius_cells: f64,
    /// Radius cap in continuum units.
    pub r_cap: f64,
    /// Restrict centers to this rectangle of inner cells.
    pub domain: Option<CellRect>,
}

impl CatalogOptions {
    pub fn new(stride: usize, r_cap: f64) -> Self {
        Self {
            stride,
            min_radius_cells: 2.0,
            r_cap,
            domain: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallCatalog {
    pub measure: MeasureGrid,
    pub centers_stride: usize,
    pub radii: Vec<f64>,
    pub r_cap: f64,
    /// Rectangle of inner cells containing every center.
    pub domain: CellRect,
    /// First lattice cell and lattice dimensions.
    pub(crate) cx0: usize,
    pub(crate) cy0: usize,
    pub(crate) ncx: usize,
    pub(crate) ncy: usize,
    /// Centers excluded by a mask.
    pub(crate) active: Vec<bool>,
    pub(crate) masses: Vec<f64>,
}

/// `build_catalog` with default minimum radius (two cells).
pub fn build_catalog(measure: &MeasureGrid, stride: usize, r_cap: f64) -> Result<BallCatalog> {
    BallCatalog::new(measure, &CatalogOptions::new(stride, r_cap))
}

impl BallCatalog {
    pub fn new(measure: &MeasureGrid, opts: &CatalogOptions) -> Result<Self> {
        Self::with_mask(measure, opts, |_, _| true)
    }

    /// Catalog whose centers must also satisfy `keep(cx, cy)`.
    pub fn with_mask<F>(measure: &MeasureGrid, opts: &CatalogOptions, keep: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> bool,
    {
        let spec = &measure.spec;
        let a = spec.cell_size;
        if opts.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        if !(opts.min_radius_cells > 0.0) {
            return Err(Error::param("min_radius_cells", "must be positive"));
        }
        let r_min = opts.min_radius_cells * a;
        if !(opts.r_cap >= r_min) {
            return Err(Error::param(
                "r_cap",
                format!("{} is below the minimum radius {}", opts.r_cap, r_min),
            ));
        }
        if opts.r_cap > spec.inner_diameter() * (1.0 + 1e-12) {
            return Err(Error::param("r_cap", "exceeds the inner diameter"));
        }
        let full = CellRect::new(0, 0, spec.inner_width_cells, spec.inner_height_cells);
        let domain = opts.domain.unwrap_or(full);
        if domain.w == 0 || domain.h == 0 || !full.contains_rect(&domain) {
            return Err(Error::param("domain", "must be a nonempty rectangle of inner cells"));
        }
        let mut radii = Vec::new();
        let mut r = r_min;
        while r <= opts.r_cap * (1.0 + 1e-12) {
            radii.push(r);
            r *= 2.0;
        }
        let s = opts.stride;
        let cx0 = domain.x0.div_ceil(s) * s;
        let cy0 = domain.y0.div_ceil(s) * s;
        let count = |lo: usize, hi: usize| if lo < hi { (hi - lo).div_ceil(s) } else { 0 };
        let ncx = count(cx0, domain.x1());
        let ncy = count(cy0, domain.y1());
        if ncx == 0 || ncy == 0 {
            return Err(Error::param("domain", "contains no lattice center"));
        }
        let mut active = Vec::with_capacity(ncx * ncy);
        for j in 0..ncy {
            for i in 0..ncx {
                active.push(keep(cx0 + i * s, cy0 + j * s));
            }
        }
        let mut cat = Self {
            measure: measure.clone(),
            centers_stride: s,
            radii,
            r_cap: opts.r_cap,
            domain,
            cx0,
            cy0,
            ncx,
            ncy,
            active,
            masses: Vec::new(),
        };
        let n = cat.n_centers();
        let mut masses = Vec::with_capacity(n * cat.radii.len());
        for &r in &cat.radii {
            for c in 0..n {
                masses.push(cat.measure.ball_mass(cat.center(c), r));
            }
        }
        cat.masses = masses;
        Ok(cat)
    }

    pub fn n_centers(&self) -> usize {
        self.ncx * self.ncy
    }

    pub fn n_levels(&self) -> usize {
        self.radii.len()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn lattice_dims(&self) -> (usize, usize) {
        (self.ncx, self.ncy)
    }

    /// Inner cell of lattice center `c`.
    pub fn center_cell(&self, c: usize) -> (usize, usize) {
        let s = self.centers_stride;
        (self.cx0 + (c % self.ncx) * s, self.cy0 + (c / self.ncx) * s)
    }

    pub fn center(&self, c: usize) -> Point {
        let (cx, cy) = self.center_cell(c);
        self.measure.spec.cell_center(cx, cy)
    }

    pub fn level_of(&self, ball: usize) -> usize {
        ball / self.n_centers()
    }

    pub fn center_of(&self, ball: usize) -> usize {
        ball % self.n_centers()
    }

    pub fn is_active(&self, ball: usize) -> bool {
        self.active[self.center_of(ball)]
    }

    pub fn ball(&self, i: usize) -> Ball {
        Ball {
            center: self.center(self.center_of(i)),
            radius: self.radii[self.level_of(i)],
            mass: self.masses[i],
        }
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Open-overlap adjacency: center distance below the radius sum.
    #[inline]
    pub fn overlaps(&self, i: usize, j: usize) -> bool {
        let (p, q) = (self.center(self.center_of(i)), self.center(self.center_of(j)));
        let r = self.radii[self.level_of(i)] + self.radii[self.level_of(j)];
        let (dx, dy) = (p.x - q.x, p.y - q.y);
        dx * dx + dy * dy < r * r
    }

    /// Whether the open ball contains the point.
    #[inline]
    pub fn contains_point(&self, i: usize, x: Point) -> bool {
        let p = self.center(self.center_of(i));
        let r = self.radii[self.level_of(i)];
        let (dx, dy) = (p.x - x.x, p.y - x.y);
        dx * dx + dy * dy < r * r
    }

    /// Whether the open ball meets the closed continuum rectangle of cells.
    pub fn meets_rect(&self, i: usize, rect: CellRect) -> bool {
        let a = self.measure.spec.cell_size;
        let p = self.center(self.center_of(i));
        let r = self.radii[self.level_of(i)];
        let dx = (rect.x0 as f64 * a - p.x).max(0.0).max(p.x - rect.x1() as f64 * a);
        let dy = (rect.y0 as f64 * a - p.y).max(0.0).max(p.y - rect.y1() as f64 * a);
        dx * dx + dy * dy < r * r
    }

    /// Lattice rows `[lo, hi)` whose centers can lie within `reach` of `y`.
    pub(crate) fn rows_within(&self, y: f64, reach: f64) -> (usize, usize) {
        let step = self.centers_stride as f64 * self.measure.spec.cell_size;
        let y0 = self.measure.spec.cell_center(0, self.cy0).y;
        let lo = ((y - reach - y0) / step).floor() - 1.0;
        let hi = ((y + reach - y0) / step).ceil() + 2.0;
        (clamp_index(lo, self.ncy), clamp_index(hi, self.ncy))
    }

    /// Lattice columns `[lo, hi)` that can lie within `half` of `x`.
    pub(crate) fn cols_within(&self, x: f64, half: f64) -> (usize, usize) {
        let step = self.centers_stride as f64 * self.measure.spec.cell_size;
        let x0 = self.measure.spec.cell_center(self.cx0, 0).x;
        let lo = ((x - half - x0) / step).floor() - 1.0;
        let hi = ((x + half - x0) / step).ceil() + 2.0;
        (clamp_index(lo, self.ncx), clamp_index(hi, self.ncx))
    }

    pub(crate) fn row_center_y(&self, row: usize) -> f64 {
        self.measure.spec.cell_center(0, self.cy0 + row * self.centers_stride).y
    }

    /// Balls whose open disk contains `x` (active centers only).
    pub fn balls_containing(&self, x: Point) -> Vec<u32> {
        let mut out = Vec::new();
        for (level, &r) in self.radii.iter().enumerate() {
            let (r0, r1) = self.rows_within(x.y, r);
            for row in r0..r1 {
                let dy = self.row_center_y(row) - x.y;
                if dy * dy >= r * r {
                    continue;
                }
                let (c0, c1) = self.cols_within(x.x, (r * r - dy * dy).sqrt());
                for col in c0..c1 {
                    let b = level * self.n_centers() + row * self.ncx + col;
                    if self.active[row * self.ncx + col] && self.contains_point(b, x) {
                        out.push(b as u32);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Balls whose open disk meets the rectangle of cells (active only).
    pub fn balls_meeting(&self, rect: CellRect) -> Vec<u32> {
        let a = self.measure.spec.cell_size;
        let mut out = Vec::new();
        for (level, &r) in self.radii.iter().enumerate() {
            let y_mid = 0.5 * (rect.y0 + rect.y1()) as f64 * a;
            let x_mid = 0.5 * (rect.x0 + rect.x1()) as f64 * a;
            let (r0, r1) = self.rows_within(y_mid, r + 0.5 * rect.h as f64 * a);
            let (c0, c1) = self.cols_within(x_mid, r + 0.5 * rect.w as f64 * a);
            for row in r0..r1 {
                for col in c0..c1 {
                    let b = level * self.n_centers() + row * self.ncx + col;
                    if self.active[row * self.ncx + col] && self.meets_rect(b, rect) {
                        out.push(b as u32);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn clamp_index(v: f64, n: usize) -> usize {
    if v <= 0.0 {
        0
    } else {
        (v as usize).min(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn uniform(w: usize, h: usize) -> MeasureGrid {
        MeasureGrid::uniform(&GridSpec::with_pad_cells(w, h, 1.0, 1).unwrap())
    }

    #[test]
    fn counting() {
        let m = uniform(8, 8);
        let c = build_catalog(&m, 1, 4.0).unwrap();
        assert_eq!(c.radii, vec![2.0, 4.0]);
        assert_eq!(c.n_centers(), 64);
        assert_eq!(c.len(), 128);
        let c2 = build_catalog(&m, 2, 4.0).unwrap();
        assert_eq!(c2.lattice_dims(), (4, 4));
    }

    #[test]
    fn radius_cap_validation() {
        let m = uniform(8, 8);
        assert!(build_catalog(&m, 1, 1.5).is_err());
        assert!(build_catalog(&m, 0, 4.0).is_err());
        assert!(build_catalog(&m, 1, 100.0).is_err());
    }

    #[test]
    fn stored_masses_are_fresh_ball_masses() {
        let spec = GridSpec::with_padding(12, 10, 0.5, 1.0).unwrap();
        let f = crate::field::sample_dgff(&spec, 1).unwrap();
        let m = crate::measure::cell_measures(&f, 1.0, 1.0).unwrap();
        let c = build_catalog(&m, 2, 4.0).unwrap();
        for i in 0..c.len() {
            let b = c.ball(i);
            assert_eq!(b.mass, m.ball_mass(b.center, b.radius));
        }
    }

    #[test]
    fn point_and_rect_queries_match_scans() {
        let m = uniform(11, 7);
        let c = build_catalog(&m, 2, 8.0).unwrap();
        let x = Point::new(3.3, 2.9);
        let scan: Vec<u32> = (0..c.len()).filter(|&b| c.contains_point(b, x)).map(|b| b as u32).collect();
        assert_eq!(c.balls_containing(x), scan);
        let rect = CellRect::new(10, 0, 1, 7);
        let scan: Vec<u32> = (0..c.len()).filter(|&b| c.meets_rect(b, rect)).map(|b| b as u32).collect();
        assert_eq!(c.balls_meeting(rect), scan);
    }

    #[test]
    fn domain_restricts_centers() {
        let m = uniform(16, 16);
        let opts = CatalogOptions {
            domain: Some(CellRect::new(3, 5, 6, 4)),
            ..CatalogOptions::new(2, 4.0)
        };
        let c = BallCatalog::new(&m, &opts).unwrap();
        for i in 0..c.n_centers() {
            let (cx, cy) = c.center_cell(i);
            assert!(c.domain.contains_cell(cx, cy));
            assert!(cx % 2 == 0 && cy % 2 == 0);
        }
        assert_eq!(c.lattice_dims(), (3, 2));
    }
}
