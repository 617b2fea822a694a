//! Discrete Gaussian free field sampling, circle averages and harmonic
//! extensions on the padded grid.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellRect, GridSpec, Point};
use crate::rng;
use crate::spectral::Dst2;

/// Field scale making the circle-average variance grow by one per e-fold of
/// radius. The raw covariance `(4I - A)^{-1}` grows like `log(n) / (2 pi)`.
pub const DEFAULT_CALIBRATION: f64 = 2.506_628_274_631_000_5; // sqrt(2 pi)

/// Largest interior vertex count for the dense Cholesky sampler.
pub const DENSE_SAMPLER_LIMIT: usize = 32 * 32;
/// Largest padded grid (vertices per side) for `exact_covariance`.
pub const EXACT_COVARIANCE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Eigenbasis sampler through the 2D sine transform.
    Spectral,
    /// Cholesky factor of the dense covariance; small grids only.
    Dense,
    /// Heat-kernel white-noise construction.
    WhiteNoise,
}

/// A DGFF realization on every vertex of the padded grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub spec: GridSpec,
    /// Row-major over `spec.vertex_rows() x spec.vertex_cols()`.
    pub values: Vec<f64>,
    pub calibration: f64,
    pub seed_record: Vec<u64>,
    pub sampler: SamplerKind,
}

impl FieldSample {
    /// The identically zero field.
    pub fn zeros(spec: &GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    /// Constant field (not a GFF sample; handy for deterministic checks).
    pub fn constant(spec: &GridSpec, c: f64) -> Self {
        Self {
            spec: spec.clone(),
            values: vec![c; spec.vertex_count()],
            calibration: DEFAULT_CALIBRATION,
            seed_record: Vec::new(),
            sampler: SamplerKind::Spectral,
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.vertex_index(i, j)]
    }

    /// Interior vertex values in `(j - 1) * nx + (i - 1)` order.
    pub fn interior(&self) -> Vec<f64> {
        let (nx, ny) = (self.spec.interior_nx(), self.spec.interior_ny());
        let mut out = Vec::with_capacity(nx * ny);
        for j in 1..=ny {
            for i in 1..=nx {
                out.push(self.value(i, j));
            }
        }
        out
    }

    pub(crate) fn from_interior(
        spec: &GridSpec,
        interior: &[f64],
        calibration: f64,
        seed_record: Vec<u64>,
        sampler: SamplerKind,
    ) -> Self {
        let (nx, ny) = (spec.interior_nx(), spec.interior_ny());
        debug_assert_eq!(interior.len(), nx * ny);
        let mut values = vec![0.0; spec.vertex_count()];
        for j in 0..ny {
            let row = spec.vertex_index(1, j + 1);
            values[row..row + nx].copy_from_slice(&interior[j * nx..(j + 1) * nx]);
        }
        Self {
            spec: spec.clone(),
            values,
            calibration,
            seed_record,
            sampler,
        }
    }

    /// Bilinear interpolation at fractional vertex coordinates.
    fn interpolate(&self, u: f64, v: f64) -> f64 {
        let cols = self.spec.vertex_cols();
        let max_i = (cols - 2) as f64;
        let max_j = (self.spec.vertex_rows() - 2) as f64;
        let i0 = u.floor().clamp(0.0, max_i);
        let j0 = v.floor().clamp(0.0, max_j);
        let fx = u - i0;
        let fy = v - j0;
        let base = j0 as usize * cols + i0 as usize;
        let a = self.values[base];
        let b = self.values[base + 1];
        let c = self.values[base + cols];
        let d = self.values[base + cols + 1];
        (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d)
    }

    /// Pointwise sum over vertices of two fields on the same grid.
    pub fn add(&self, other: &FieldSample) -> FieldSample {
        assert_eq!(self.spec, other.spec);
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
        out
    }

    /// Pointwise difference `self - other`.
    pub fn sub(&self, other: &FieldSample) -> FieldSample {
        assert_eq!(self.spec, other.spec);
        let mut out = self.clone();
        out.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a -= b);
        out
    }
}

/// Reusable spectral sampler for one grid: plans the transforms once.
#[derive(Debug, Clone)]
pub struct SpectralSampler {
    spec: GridSpec,
    dst: Dst2,
    /// `calibration / sqrt(lambda)` per mode.
    multipliers: Vec<f64>,
    calibration: f64,
}

impl SpectralSampler {
    pub fn new(spec: &GridSpec, calibration: f64) -> Result<Self> {
        spec.validate()?;
        if !(calibration.is_finite() && calibration > 0.0) {
            return Err(Error::param("calibration", "must be positive"));
        }
        let dst = Dst2::new(spec.interior_nx(), spec.interior_ny());
        let multipliers = dst.laplacian_eigenvalues().into_iter().map(|l| calibration / l.sqrt()).collect();
        Ok(Self {
            spec: spec.clone(),
            dst,
            multipliers,
            calibration,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dst(&self) -> &Dst2 {
        &self.dst
    }

    /// The sampler's linear map applied to a vector of standard normals.
    pub fn apply(&self, noise: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = noise.iter().zip(&self.multipliers).map(|(z, m)| z * m).collect();
        self.dst.transform(&mut x);
        x
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let mut rng = rng::stream(seed, 0);
        let z: Vec<f64> = (0..self.dst.len()).map(|_| rng.sample(StandardNormal)).collect();
        let interior = self.apply(&z);
        FieldSample::from_interior(&self.spec, &interior, self.calibration, vec![seed], SamplerKind::Spectral)
    }
}

/// Samples the calibrated DGFF on the padded grid with the spectral sampler.
pub fn sample_dgff(spec: &GridSpec, seed: u64) -> Result<FieldSample> {
    SpectralSampler::new(spec, DEFAULT_CALIBRATION).map(|s| s.sample(seed))
}

/// Samples with an explicit sampler kind and calibration.
pub fn sample_dgff_with(spec: &GridSpec, seed: u64, kind: SamplerKind, calibration: f64) -> Result<FieldSample> {
    match kind {
        SamplerKind::Spectral => SpectralSampler::new(spec, calibration).map(|s| s.sample(seed)),
        SamplerKind::Dense => {
            spec.validate()?;
            let n = spec.interior_nx() * spec.interior_ny();
            if n > DENSE_SAMPLER_LIMIT {
                return Err(Error::SizeGuard {
                    what: "dense sampler interior vertices",
                    actual: n,
                    limit: DENSE_SAMPLER_LIMIT,
                });
            }
            let cov = covariance_matrix(spec, calibration);
            let chol = cov
                .cholesky()
                .ok_or_else(|| Error::InvalidGrid("covariance not positive definite".into()))?;
            let mut rng = rng::stream(seed, 0);
            let z = nalgebra::DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let h = chol.l() * z;
            Ok(FieldSample::from_interior(spec, h.as_slice(), calibration, vec![seed], SamplerKind::Dense))
        }
        SamplerKind::WhiteNoise => {
            let block = spec.inner_width_cells.max(spec.inner_height_cells).max(1);
            crate::noise::build_decomposition(spec, block, seed).map(|(_, f)| f)
        }
    }
}

/// `calibration^2 (4I - A)^{-1}` over interior vertices, ordered
/// `(j - 1) * nx + (i - 1)`.
pub fn exact_covariance(spec: &GridSpec) -> Result<DMatrix<f64>> {
    exact_covariance_with(spec, DEFAULT_CALIBRATION)
}

pub fn exact_covariance_with(spec: &GridSpec, calibration: f64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let side = spec.vertex_cols().max(spec.vertex_rows());
    if side > EXACT_COVARIANCE_LIMIT {
        return Err(Error::SizeGuard {
            what: "padded grid vertices per side",
            actual: side,
            limit: EXACT_COVARIANCE_LIMIT,
        });
    }
    Ok(covariance_matrix(spec, calibration))
}

fn covariance_matrix(spec: &GridSpec, calibration: f64) -> DMatrix<f64> {
    let lap = laplacian_matrix(spec.interior_nx(), spec.interior_ny());
    let inv = lap
        .cholesky()
        .expect("Dirichlet Laplacian is positive definite")
        .inverse();
    let c2 = calibration * calibration;
    let n = inv.nrows();
    DMatrix::from_fn(n, n, |r, c| 0.5 * c2 * (inv[(r, c)] + inv[(c, r)]))
}

/// Dense `4I - A` on an `nx x ny` interior block.
pub fn laplacian_matrix(nx: usize, ny: usize) -> DMatrix<f64> {
    let n = nx * ny;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            m[(k, k)] = 4.0;
            if i > 0 {
                m[(k, k - 1)] = -1.0;
            }
            if i + 1 < nx {
                m[(k, k + 1)] = -1.0;
            }
            if j > 0 {
                m[(k, k - nx)] = -1.0;
            }
            if j + 1 < ny {
                m[(k, k + nx)] = -1.0;
            }
        }
    }
    m
}

/// Number of quadrature points on a circle of the given radius.
pub fn circle_points(radius: f64, cell_size: f64) -> usize {
    16usize.max((2.0 * std::f64::consts::PI * radius / cell_size).ceil() as usize)
}

/// Average of the bilinearly interpolated field over `K` equispaced points of
/// the circle. Radii below half a cell return the interpolated center value.
pub fn circle_average(field: &FieldSample, center: Point, radius: f64) -> Result<f64> {
    let spec = &field.spec;
    let (u, v) = spec.to_vertex_coords(center);
    let r = radius / spec.cell_size;
    let reach = r.max(0.0);
    if !(radius >= 0.0)
        || u - reach < 0.0
        || v - reach < 0.0
        || u + reach > spec.padded_width_cells() as f64
        || v + reach > spec.padded_height_cells() as f64
    {
        return Err(Error::CircleOutOfDomain {
            x: center.x,
            y: center.y,
            radius,
        });
    }
    if radius < 0.5 * spec.cell_size {
        return Ok(field.interpolate(u, v));
    }
    let k = circle_points(radius, spec.cell_size);
    let step = 2.0 * std::f64::consts::PI / k as f64;
    let sum: f64 = (0..k)
        .map(|m| {
            let (s, c) = (m as f64 * step).sin_cos();
            field.interpolate(u + r * c, v + r * s)
        })
        .sum();
    Ok(sum / k as f64)
}

/// Circle averages at every inner cell center, row-major over inner cells.
pub fn circle_averages_inner(field: &FieldSample, radius: f64) -> Result<Vec<f64>> {
    let spec = &field.spec;
    let (w, h) = (spec.inner_width_cells, spec.inner_height_cells);
    // Corners bound the reach of every other center.
    for (cx, cy) in [(0, 0), (w - 1, h - 1)] {
        circle_average(field, spec.cell_center(cx, cy), radius)?;
    }
    let mut out = Vec::with_capacity(w * h);
    if radius < 0.5 * spec.cell_size {
        for cy in 0..h {
            for cx in 0..w {
                let (u, v) = spec.to_vertex_coords(spec.cell_center(cx, cy));
                out.push(field.interpolate(u, v));
            }
        }
        return Ok(out);
    }
    let r = radius / spec.cell_size;
    let k = circle_points(radius, spec.cell_size);
    let step = 2.0 * std::f64::consts::PI / k as f64;
    let offsets: Vec<(f64, f64)> = (0..k)
        .map(|m| {
            let (s, c) = (m as f64 * step).sin_cos();
            (r * c, r * s)
        })
        .collect();
    for cy in 0..h {
        for cx in 0..w {
            let (u, v) = spec.to_vertex_coords(spec.cell_center(cx, cy));
            let sum: f64 = offsets.iter().map(|&(du, dv)| field.interpolate(u + du, v + dv)).sum();
            out.push(sum / k as f64);
        }
    }
    Ok(out)
}

/// The circle average as a linear functional: `(vertex index, weight)` pairs,
/// unmerged. Same quadrature and interpolation as `circle_average`.
pub fn circle_average_weights(spec: &GridSpec, center: Point, radius: f64) -> Result<Vec<(usize, f64)>> {
    // Reuse the domain check.
    circle_average(&FieldSample::zeros(spec), center, radius)?;
    let (u, v) = spec.to_vertex_coords(center);
    let cols = spec.vertex_cols();
    let max_i = (cols - 2) as f64;
    let max_j = (spec.vertex_rows() - 2) as f64;
    let bilinear = |u: f64, v: f64, scale: f64, out: &mut Vec<(usize, f64)>| {
        let i0 = u.floor().clamp(0.0, max_i);
        let j0 = v.floor().clamp(0.0, max_j);
        let (fx, fy) = (u - i0, v - j0);
        let base = j0 as usize * cols + i0 as usize;
        out.push((base, scale * (1.0 - fy) * (1.0 - fx)));
        out.push((base + 1, scale * (1.0 - fy) * fx));
        out.push((base + cols, scale * fy * (1.0 - fx)));
        out.push((base + cols + 1, scale * fy * fx));
    };
    let mut out = Vec::new();
    if radius < 0.5 * spec.cell_size {
        bilinear(u, v, 1.0, &mut out);
        return Ok(out);
    }
    let r = radius / spec.cell_size;
    let k = circle_points(radius, spec.cell_size);
    let step = 2.0 * std::f64::consts::PI / k as f64;
    for m in 0..k {
        let (s, c) = (m as f64 * step).sin_cos();
        bilinear(u + r * c, v + r * s, 1.0 / k as f64, &mut out);
    }
    Ok(out)
}

/// Exact variance of `circle_average` under the calibrated DGFF, computed as a
/// quadratic form with one Laplacian solve.
pub fn circle_average_variance(spec: &GridSpec, center: Point, radius: f64, calibration: f64) -> Result<f64> {
    spec.validate()?;
    let weights = circle_average_weights(spec, center, radius)?;
    let (nx, ny) = (spec.interior_nx(), spec.interior_ny());
    let cols = spec.vertex_cols();
    let mut w = vec![0.0; nx * ny];
    for (idx, x) in weights {
        let (i, j) = (idx % cols, idx / cols);
        // Boundary vertices carry zero field.
        if (1..=nx).contains(&i) && (1..=ny).contains(&j) {
            w[(j - 1) * nx + (i - 1)] += x;
        }
    }
    let g = Dst2::new(nx, ny).solve_laplacian(&w);
    Ok(calibration * calibration * w.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>())
}

/// Discrete harmonic extension of the field's values on the boundary of
/// `subbox` (padded-grid cells) into its interior.
///
/// Returns values on all `(w + 1) x (h + 1)` subbox vertices, row-major;
/// boundary entries equal the field.
pub fn harmonic_extension(field: &FieldSample, subbox: CellRect) -> Result<Vec<f64>> {
    let spec = &field.spec;
    if subbox.w < 2 || subbox.h < 2 {
        return Err(Error::InvalidSubbox(format!("{}x{} has no interior vertex", subbox.w, subbox.h)));
    }
    if subbox.x0 == 0
        || subbox.y0 == 0
        || subbox.x1() >= spec.padded_width_cells()
        || subbox.y1() >= spec.padded_height_cells()
    {
        return Err(Error::InvalidSubbox("subbox must lie strictly inside the padded grid".into()));
    }
    let (nx, ny) = (subbox.w - 1, subbox.h - 1);
    let mut rhs = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (gi, gj) = (subbox.x0 + 1 + i, subbox.y0 + 1 + j);
            let mut b = 0.0;
            if i == 0 {
                b += field.value(gi - 1, gj);
            }
            if i + 1 == nx {
                b += field.value(gi + 1, gj);
            }
            if j == 0 {
                b += field.value(gi, gj - 1);
            }
            if j + 1 == ny {
                b += field.value(gi, gj + 1);
            }
            rhs[j * nx + i] = b;
        }
    }
    let interior = Dst2::new(nx, ny).solve_laplacian(&rhs);
    let cols = subbox.w + 1;
    let mut out = Vec::with_capacity(cols * (subbox.h + 1));
    for j in 0..=subbox.h {
        for i in 0..=subbox.w {
            let on_boundary = i == 0 || j == 0 || i == subbox.w || j == subbox.h;
            out.push(if on_boundary {
                field.value(subbox.x0 + i, subbox.y0 + j)
            } else {
                interior[(j - 1) * nx + (i - 1)]
            });
        }
    }
    Ok(out)
}

/// `field - harmonic_extension` on the subbox interior vertices, i.e. the
/// conditionally independent DGFF of the subbox.
pub fn subbox_residual(field: &FieldSample, subbox: CellRect) -> Result<(Vec<f64>, Vec<f64>)> {
    let ext = harmonic_extension(field, subbox)?;
    let cols = subbox.w + 1;
    let mut residual = Vec::with_capacity((subbox.w - 1) * (subbox.h - 1));
    let mut extension = Vec::with_capacity(residual.capacity());
    for j in 1..subbox.h {
        for i in 1..subbox.w {
            let e = ext[j * cols + i];
            residual.push(field.value(subbox.x0 + i, subbox.y0 + j) - e);
            extension.push(e);
        }
    }
    Ok((residual, extension))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex_variance_is_one_quarter() {
        let spec = GridSpec::with_pad_cells(2, 2, 1.0, 0).unwrap();
        assert_eq!(spec.interior_nx() * spec.interior_ny(), 1);
        let cov = exact_covariance_with(&spec, 1.0).unwrap();
        assert_eq!(cov[(0, 0)], 0.25);
    }

    #[test]
    fn same_seed_same_field() {
        let spec = GridSpec::new(8, 8, 1.0).unwrap();
        let a = sample_dgff(&spec, 11).unwrap();
        let b = sample_dgff(&spec, 11).unwrap();
        let c = sample_dgff(&spec, 12).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
        assert!(a.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn boundary_is_zero() {
        let spec = GridSpec::with_padding(6, 4, 0.5, 1.0).unwrap();
        let f = sample_dgff(&spec, 3).unwrap();
        let (cols, rows) = (spec.vertex_cols(), spec.vertex_rows());
        for i in 0..cols {
            assert_eq!(f.value(i, 0), 0.0);
            assert_eq!(f.value(i, rows - 1), 0.0);
        }
        for j in 0..rows {
            assert_eq!(f.value(0, j), 0.0);
            assert_eq!(f.value(cols - 1, j), 0.0);
        }
    }

    #[test]
    fn covariance_symmetric_and_positive() {
        let spec = GridSpec::with_pad_cells(5, 4, 1.0, 0).unwrap();
        let cov = exact_covariance(&spec).unwrap();
        let n = cov.nrows();
        for r in 0..n {
            for c in 0..n {
                assert_eq!(cov[(r, c)], cov[(c, r)]);
                assert!(cov[(r, c)] > 0.0);
            }
        }
    }

    #[test]
    fn covariance_size_guard() {
        let spec = GridSpec::with_pad_cells(70, 10, 1.0, 0).unwrap();
        assert!(matches!(exact_covariance(&spec), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn dense_sampler_guard() {
        let spec = GridSpec::with_pad_cells(40, 40, 1.0, 0).unwrap();
        assert!(sample_dgff_with(&spec, 0, SamplerKind::Dense, 1.0).is_err());
        let small = GridSpec::with_pad_cells(6, 6, 1.0, 0).unwrap();
        let f = sample_dgff_with(&small, 0, SamplerKind::Dense, 1.0).unwrap();
        assert_eq!(f.sampler, SamplerKind::Dense);
    }

    #[test]
    fn circle_average_of_constant() {
        let spec = GridSpec::with_pad_cells(10, 10, 0.25, 4).unwrap();
        let f = FieldSample::constant(&spec, 1.75);
        for (x, y, r) in [(1.0, 1.0, 0.5), (0.3, 2.1, 1.0), (1.25, 1.25, 0.01)] {
            let a = circle_average(&f, Point::new(x, y), r).unwrap();
            assert!((a - 1.75).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_radius_returns_point_value() {
        let spec = GridSpec::with_pad_cells(4, 4, 1.0, 2).unwrap();
        let mut f = FieldSample::zeros(&spec);
        // Affine in the vertex coordinates, so bilinear interpolation is exact.
        for j in 0..spec.vertex_rows() {
            for i in 0..spec.vertex_cols() {
                let k = spec.vertex_index(i, j);
                f.values[k] = 2.0 * i as f64 - j as f64;
            }
        }
        let p = Point::new(1.3, 0.6);
        let (u, v) = spec.to_vertex_coords(p);
        let a = circle_average(&f, p, 0.2).unwrap();
        assert!((a - (2.0 * u - v)).abs() < 1e-12);
    }

    #[test]
    fn circle_leaving_domain_is_rejected() {
        let spec = GridSpec::with_pad_cells(4, 4, 1.0, 1).unwrap();
        let f = FieldSample::zeros(&spec);
        assert!(circle_average(&f, Point::new(0.0, 0.0), 1.5).is_err());
        assert!(circle_average(&f, Point::new(2.0, 2.0), 3.0).is_ok());
    }

    #[test]
    fn harmonic_extension_fixes_affine_fields() {
        let spec = GridSpec::with_pad_cells(10, 10, 1.0, 2).unwrap();
        let mut f = FieldSample::zeros(&spec);
        for j in 0..spec.vertex_rows() {
            for i in 0..spec.vertex_cols() {
                let k = spec.vertex_index(i, j);
                f.values[k] = 0.5 * i as f64 + 1.5 * j as f64 - 3.0;
            }
        }
        let b = CellRect::new(3, 2, 6, 5);
        let ext = harmonic_extension(&f, b).unwrap();
        for j in 0..=b.h {
            for i in 0..=b.w {
                let want = f.value(b.x0 + i, b.y0 + j);
                assert!((ext[j * (b.w + 1) + i] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn harmonic_extension_rejects_bad_subboxes() {
        let spec = GridSpec::with_pad_cells(8, 8, 1.0, 1).unwrap();
        let f = FieldSample::zeros(&spec);
        assert!(harmonic_extension(&f, CellRect::new(1, 1, 1, 4)).is_err());
        assert!(harmonic_extension(&f, CellRect::new(0, 1, 4, 4)).is_err());
        assert!(harmonic_extension(&f, CellRect::new(2, 2, 8, 4)).is_err());
    }
}
