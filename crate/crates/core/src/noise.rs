//! Heat-kernel white-noise representation of the DGFF.
//!
//! With `L = 4I - A` the Dirichlet graph Laplacian, `L^{-1} = int_0^inf e^{-sL} ds`,
//! so `h = c int_0^inf e^{-sL/2} dW_s` has covariance `c^2 L^{-1}` when `W` is
//! a vertex-indexed white noise in time. Continuum time `t` and lattice time
//! `s` are related by `s = t / (2 a^2)` with `a` the cell size.
//!
//! Time is cut into slices. Slice `k` covering `(s0, s1]` contributes
//! `c G_k (xi_k / sqrt(a^2 dt_k))` where `G_k` has spectral multiplier
//! `sqrt((e^{-s0 lambda} - e^{-s1 lambda}) / lambda)`, so the sum over slices is
//! exact in law. Slices at or below `S^2` (the fine field) keep their noise in
//! physical space so it can be resampled block by block. Later slices (the
//! coarse field) keep it in the sine basis.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSample, SamplerKind, DEFAULT_CALIBRATION};
use crate::grid::{next_smooth, CellRect, GridSpec};
use crate::rng;
use crate::spectral::{transpose, Dst2};

/// Numerical tolerance on the assembled covariance. The time tail beyond the
/// last cut is folded into the final slice, so nothing is truncated.
pub const TRUNCATION_TOLERANCE: f64 = 1e-9;

/// Interval of continuum time `(t0, t1]`; `t1` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    pub t0: f64,
    pub t1: f64,
}

impl TimeSlice {
    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn is_empty(&self) -> bool {
        self.t1 <= self.t0
    }
}

#[derive(Debug, Clone)]
pub struct WhiteNoiseDecomposition {
    pub spec: GridSpec,
    pub calibration: f64,
    pub block_side_cells: usize,
    /// `S^2`, the fine/coarse split in continuum time.
    pub split_time: f64,
    pub time_slices: Vec<TimeSlice>,
    /// Slices `0..fine_slices` lie below the split.
    pub fine_slices: usize,
    /// Blocks as rectangles of interior vertex indices (1-based, padded grid).
    pub block_partition: Vec<CellRect>,
    /// Share of the field variance (trace) carried by times beyond the last cut.
    pub tail_fraction: f64,
    pub truncation_tolerance: f64,
    pub seed: u64,
    /// Fine noise per slice over interior vertices, variance `a^2 dt`.
    fine_noise: Vec<Vec<f64>>,
    /// Coarse noise per slice as standard normal sine-basis coefficients.
    coarse_noise: Vec<Vec<f64>>,
    fine_spectrum: Vec<f64>,
    coarse_spectrum: Vec<f64>,
    dst: Dst2,
    eigen: Arc<Vec<f64>>,
}

/// Lattice-time multiplier `sqrt(int_{s0}^{s1} e^{-s lambda} ds)`.
pub fn slice_multiplier(lambda: f64, s0: f64, s1: f64) -> f64 {
    if s1.is_infinite() {
        return ((-s0 * lambda).exp() / lambda).sqrt();
    }
    let x = (s1 - s0) * lambda;
    // e^{-s0 l} (1 - e^{-(s1-s0) l}) / l, stable for small l.
    let v = if x < 1e-8 {
        (s1 - s0) * (1.0 - 0.5 * x)
    } else {
        -(-x).exp_m1() / lambda
    };
    ((-s0 * lambda).exp() * v).sqrt()
}

/// Slice boundaries: `a^2 2^k` up to `(padded diameter)^2`, with `S^2`
/// inserted exactly and a final infinite slice.
pub fn time_slices(spec: &GridSpec, block_side_cells: usize) -> (Vec<TimeSlice>, usize) {
    let a2 = spec.cell_area();
    let split = (block_side_cells as f64 * spec.cell_size).powi(2);
    let t_max = (spec.padded_width_cells() as f64).hypot(spec.padded_height_cells() as f64).powi(2) * a2;
    let mut cuts = vec![0.0];
    let mut t = a2;
    while t < t_max {
        cuts.push(t);
        t *= 2.0;
    }
    if !cuts.iter().any(|&c| (c - split).abs() <= 1e-12 * split) {
        cuts.push(split);
        cuts.sort_by(f64::total_cmp);
    }
    let mut slices: Vec<TimeSlice> = cuts.windows(2).map(|w| TimeSlice { t0: w[0], t1: w[1] }).collect();
    slices.push(TimeSlice {
        t0: *cuts.last().unwrap(),
        t1: f64::INFINITY,
    });
    let fine = slices.iter().filter(|s| s.t1 <= split * (1.0 + 1e-12)).count();
    (slices, fine)
}

/// Splits `1..=n` at multiples of `side` offset by `origin`, merging edge
/// pieces shorter than `ceil(side / 10)` into their neighbour.
fn axis_segments(n: usize, origin: usize, side: usize) -> Vec<(usize, usize)> {
    let mut cuts = vec![1];
    let first = if origin % side == 0 { side } else { origin % side };
    let mut c = first;
    while c < n + 1 {
        if c > 1 {
            cuts.push(c);
        }
        c += side;
    }
    cuts.push(n + 1);
    let min = side.div_ceil(10);
    if cuts.len() > 2 && cuts[1] - cuts[0] < min {
        cuts.remove(1);
    }
    let k = cuts.len();
    if k > 2 && cuts[k - 1] - cuts[k - 2] < min {
        cuts.remove(k - 2);
    }
    cuts.windows(2).map(|w| (w[0], w[1] - w[0])).collect()
}

/// Blocks of side `side` aligned with the inner box corner.
pub fn block_partition(spec: &GridSpec, side: usize) -> Vec<CellRect> {
    let (pl, _, pb, _) = spec.pads();
    let xs = axis_segments(spec.interior_nx(), pl, side);
    let ys = axis_segments(spec.interior_ny(), pb, side);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &(y0, h) in &ys {
        for &(x0, w) in &xs {
            out.push(CellRect::new(x0, y0, w, h));
        }
    }
    out
}

fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, stream);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

/// Builds the decomposition from fresh noise and returns it with its field.
pub fn build_decomposition(
    spec: &GridSpec,
    block_side_cells: usize,
    seed: u64,
) -> Result<(WhiteNoiseDecomposition, FieldSample)> {
    WhiteNoiseDecomposition::new(spec, block_side_cells, DEFAULT_CALIBRATION, seed).map(|d| {
        let f = d.field();
        (d, f)
    })
}

impl WhiteNoiseDecomposition {
    pub fn new(spec: &GridSpec, block_side_cells: usize, calibration: f64, seed: u64) -> Result<Self> {
        let mut d = Self::empty(spec, block_side_cells, calibration)?;
        d.seed = seed;
        let n = d.dst.len();
        let a2 = spec.cell_area();
        for k in 0..d.time_slices.len() {
            let z = standard_normals(seed, k as u64, n);
            if k < d.fine_slices {
                let sd = (a2 * d.time_slices[k].len()).sqrt();
                d.fine_noise.push(z.into_iter().map(|v| v * sd).collect());
            } else {
                d.coarse_noise.push(z);
            }
        }
        d.refresh();
        Ok(d)
    }

    /// Decomposition with explicit noise arrays (fine in physical space with
    /// variance `a^2 dt`, coarse as standard sine-basis coefficients).
    pub fn from_noise(
        spec: &GridSpec,
        block_side_cells: usize,
        calibration: f64,
        fine_noise: Vec<Vec<f64>>,
        coarse_noise: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut d = Self::empty(spec, block_side_cells, calibration)?;
        let n = d.dst.len();
        if fine_noise.len() != d.fine_slices
            || coarse_noise.len() != d.time_slices.len() - d.fine_slices
            || fine_noise.iter().chain(&coarse_noise).any(|v| v.len() != n)
        {
            return Err(Error::param("noise", "shape does not match the slice layout"));
        }
        d.fine_noise = fine_noise;
        d.coarse_noise = coarse_noise;
        d.refresh();
        Ok(d)
    }

    fn empty(spec: &GridSpec, block_side_cells: usize, calibration: f64) -> Result<Self> {
        spec.validate()?;
        if block_side_cells == 0
            || block_side_cells > spec.padded_width_cells()
            || block_side_cells > spec.padded_height_cells()
        {
            return Err(Error::param(
                "block_side_cells",
                format!("{block_side_cells} does not fit the padded grid"),
            ));
        }
        if !(calibration.is_finite() && calibration > 0.0) {
            return Err(Error::param("calibration", "must be positive"));
        }
        let (time_slices, fine_slices) = time_slices(spec, block_side_cells);
        let dst = Dst2::new(spec.interior_nx(), spec.interior_ny());
        let eigen = Arc::new(dst.laplacian_eigenvalues());
        let two_a2 = 2.0 * spec.cell_area();
        let s_last = time_slices.last().unwrap().t0 / two_a2;
        let (mut tail, mut total) = (0.0, 0.0);
        for &l in eigen.iter() {
            tail += (-s_last * l).exp() / l;
            total += 1.0 / l;
        }
        Ok(Self {
            spec: spec.clone(),
            calibration,
            block_side_cells,
            split_time: (block_side_cells as f64 * spec.cell_size).powi(2),
            time_slices,
            fine_slices,
            block_partition: block_partition(spec, block_side_cells),
            tail_fraction: tail / total,
            truncation_tolerance: TRUNCATION_TOLERANCE,
            seed: 0,
            fine_noise: Vec::new(),
            coarse_noise: Vec::new(),
            fine_spectrum: Vec::new(),
            coarse_spectrum: Vec::new(),
            dst,
            eigen,
        })
    }

    fn lattice_times(&self, k: usize) -> (f64, f64) {
        let two_a2 = 2.0 * self.spec.cell_area();
        let s = self.time_slices[k];
        (s.t0 / two_a2, s.t1 / two_a2)
    }

    /// Adds the sine-basis image of one fine slice's noise into `acc`.
    fn accumulate_fine(&self, k: usize, noise: &[f64], acc: &mut [f64]) {
        let mut x = noise.to_vec();
        self.dst.transform(&mut x);
        let (s0, s1) = self.lattice_times(k);
        let inv_sd = 1.0 / (self.spec.cell_area() * self.time_slices[k].len()).sqrt();
        for ((a, v), &l) in acc.iter_mut().zip(&x).zip(self.eigen.iter()) {
            *a += slice_multiplier(l, s0, s1) * inv_sd * v;
        }
    }

    fn coarse_spectrum_of(&self, coarse: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dst.len()];
        for (m, z) in coarse.iter().enumerate() {
            let (s0, s1) = self.lattice_times(self.fine_slices + m);
            for ((a, v), &l) in acc.iter_mut().zip(z).zip(self.eigen.iter()) {
                *a += slice_multiplier(l, s0, s1) * v;
            }
        }
        acc
    }

    fn refresh(&mut self) {
        let mut fine = vec![0.0; self.dst.len()];
        for k in 0..self.fine_slices {
            self.accumulate_fine(k, &self.fine_noise[k], &mut fine);
        }
        self.fine_spectrum = fine;
        self.coarse_spectrum = self.coarse_spectrum_of(&self.coarse_noise);
    }

    fn synthesize(&self, spectrum: &[f64], seed_record: Vec<u64>) -> FieldSample {
        let mut x: Vec<f64> = spectrum.iter().map(|v| v * self.calibration).collect();
        self.dst.transform(&mut x);
        FieldSample::from_interior(&self.spec, &x, self.calibration, seed_record, SamplerKind::WhiteNoise)
    }

    fn sum_spectra(a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    /// The assembled field.
    pub fn field(&self) -> FieldSample {
        self.synthesize(&Self::sum_spectra(&self.fine_spectrum, &self.coarse_spectrum), vec![self.seed])
    }

    /// Contribution of times up to `S^2` only.
    pub fn fine_field(&self) -> FieldSample {
        self.synthesize(&self.fine_spectrum, vec![self.seed])
    }

    /// Contribution of times beyond `S^2` only.
    pub fn coarse_field(&self) -> FieldSample {
        self.synthesize(&self.coarse_spectrum, vec![self.seed])
    }

    pub fn block_count(&self) -> usize {
        self.block_partition.len()
    }

    pub fn fine_noise(&self) -> &[Vec<f64>] {
        &self.fine_noise
    }

    pub fn coarse_noise(&self) -> &[Vec<f64>] {
        &self.coarse_noise
    }

    fn block(&self, block_id: usize) -> Result<CellRect> {
        self.block_partition.get(block_id).copied().ok_or(Error::InvalidBlock {
            index: block_id,
            count: self.block_partition.len(),
        })
    }

    /// Fresh fine noise on one block: slice `k` gets a standard normal stream
    /// `(seed, k)` read in block row-major order, scaled to variance `a^2 dt`.
    pub fn fresh_block_noise(&self, block_id: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let b = self.block(block_id)?;
        let a2 = self.spec.cell_area();
        Ok((0..self.fine_slices)
            .map(|k| {
                let sd = (a2 * self.time_slices[k].len()).sqrt();
                standard_normals(seed, k as u64, b.w * b.h).into_iter().map(|z| z * sd).collect()
            })
            .collect())
    }

    /// Per-slice noise change `new - old` on a block, as full interior arrays.
    fn block_deltas(&self, block_id: usize, fresh: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let b = self.block_partition[block_id];
        let nx = self.spec.interior_nx();
        (0..self.fine_slices)
            .map(|k| {
                let mut d = vec![0.0; self.dst.len()];
                for j in 0..b.h {
                    for i in 0..b.w {
                        let idx = (b.y0 + j - 1) * nx + (b.x0 + i - 1);
                        d[idx] = fresh[k][j * b.w + i] - self.fine_noise[k][idx];
                    }
                }
                d
            })
            .collect()
    }

    /// Field with the noise on block `C_i` and times below `S^2` replaced.
    pub fn resample_block(&self, block_id: usize, seed: u64) -> Result<FieldSample> {
        let fresh = self.fresh_block_noise(block_id, seed)?;
        let mut spectrum = Self::sum_spectra(&self.fine_spectrum, &self.coarse_spectrum);
        for (k, d) in self.block_deltas(block_id, &fresh).iter().enumerate() {
            self.accumulate_fine(k, d, &mut spectrum);
        }
        Ok(self.synthesize(&spectrum, vec![self.seed, block_id as u64, seed]))
    }

    /// The decomposition after `resample_block`, noise included.
    pub fn with_block_resampled(&self, block_id: usize, seed: u64) -> Result<Self> {
        let fresh = self.fresh_block_noise(block_id, seed)?;
        let b = self.block_partition[block_id];
        let nx = self.spec.interior_nx();
        let mut out = self.clone();
        for k in 0..self.fine_slices {
            for j in 0..b.h {
                for i in 0..b.w {
                    out.fine_noise[k][(b.y0 + j - 1) * nx + (b.x0 + i - 1)] = fresh[k][j * b.w + i];
                }
            }
        }
        out.refresh();
        Ok(out)
    }

    fn fresh_coarse_noise(&self, seed: u64) -> Vec<Vec<f64>> {
        (self.fine_slices..self.time_slices.len())
            .map(|k| standard_normals(seed, k as u64, self.dst.len()))
            .collect()
    }

    /// Field with all noise at times beyond `S^2` replaced.
    pub fn resample_coarse(&self, seed: u64) -> FieldSample {
        let coarse = self.coarse_spectrum_of(&self.fresh_coarse_noise(seed));
        self.synthesize(&Self::sum_spectra(&self.fine_spectrum, &coarse), vec![self.seed, u64::MAX, seed])
    }

    pub fn with_coarse_resampled(&self, seed: u64) -> Self {
        let mut out = self.clone();
        out.coarse_noise = self.fresh_coarse_noise(seed);
        out.coarse_spectrum = out.coarse_spectrum_of(&out.coarse_noise);
        out
    }

    /// Same decomposition with every coarse noise entry set to zero.
    pub fn with_coarse_zeroed(&self) -> Self {
        let mut out = self.clone();
        out.coarse_noise.iter_mut().for_each(|v| v.fill(0.0));
        out.coarse_spectrum.fill(0.0);
        out
    }
}

/// Spatial reach (cells) beyond which slice kernels are dropped by the local
/// resampler, as a multiple of `sqrt(s1)`.
pub const DEFAULT_REACH_FACTOR: f64 = 8.0;

struct SliceWindow {
    reach: usize,
    mx: usize,
    my: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    /// Torus multipliers in transposed (x-frequency major) layout.
    multipliers: Vec<f64>,
}

/// Local block resampling by torus convolution on a window around the block.
///
/// Far from the Dirichlet boundary the slice kernels are translation
/// invariant and decay exponentially, so the change caused by new noise on a
/// block can be computed on a window of the block plus a kernel reach. Only
/// the change inside `output` (interior vertex rectangle) is returned.
pub struct LocalResampler {
    block_side: usize,
    output: CellRect,
    windows: Vec<SliceWindow>,
}

impl LocalResampler {
    pub fn new(dec: &WhiteNoiseDecomposition, output: CellRect, reach_factor: f64) -> Self {
        let mut planner = FftPlanner::new();
        let a2 = dec.spec.cell_area();
        let side = dec.block_partition.iter().map(|b| b.w.max(b.h)).max().unwrap_or(1);
        let windows = (0..dec.fine_slices)
            .map(|k| {
                let (s0, s1) = dec.lattice_times(k);
                let reach = (reach_factor * s1.sqrt()).ceil() as usize + 2;
                let mx = next_smooth(side + 2 * reach);
                let my = mx;
                let inv_sd = 1.0 / (a2 * dec.time_slices[k].len()).sqrt();
                let ex = torus_axis(mx);
                let ey = torus_axis(my);
                let scale = dec.calibration * inv_sd / (mx * my) as f64;
                let mut multipliers = Vec::with_capacity(mx * my);
                for &lx in &ex {
                    for &ly in &ey {
                        multipliers.push(slice_multiplier(lx + ly, s0, s1) * scale);
                    }
                }
                SliceWindow {
                    reach,
                    mx,
                    my,
                    fwd_x: planner.plan_fft_forward(mx),
                    inv_x: planner.plan_fft_inverse(mx),
                    fwd_y: planner.plan_fft_forward(my),
                    inv_y: planner.plan_fft_inverse(my),
                    multipliers,
                }
            })
            .collect();
        Self {
            block_side: side,
            output,
            windows,
        }
    }

    pub fn output(&self) -> CellRect {
        self.output
    }

    /// Whether every slice window around `block` stays inside the interior.
    pub fn applicable(&self, dec: &WhiteNoiseDecomposition, block: CellRect) -> bool {
        let reach = self.windows.iter().map(|w| w.reach).max().unwrap_or(0);
        block.w.max(block.h) <= self.block_side
            && block.x0 > reach
            && block.y0 > reach
            && block.x1() + reach <= dec.spec.interior_nx()
            && block.y1() + reach <= dec.spec.interior_ny()
    }

    /// Field change on `output` (row-major) caused by `resample_block`.
    pub fn block_delta(&self, dec: &WhiteNoiseDecomposition, block_id: usize, seed: u64) -> Result<Vec<f64>> {
        let b = dec.block(block_id)?;
        if !self.applicable(dec, b) {
            return Err(Error::param("block_id", "block too close to the boundary for local resampling"));
        }
        let fresh = dec.fresh_block_noise(block_id, seed)?;
        let nx = dec.spec.interior_nx();
        let out = self.output;
        let mut delta = vec![0.0; out.w * out.h];
        for (k, win) in self.windows.iter().enumerate() {
            // Window origin in interior vertex coordinates.
            let (ox, oy) = (b.x0 - win.reach, b.y0 - win.reach);
            let mut buf = vec![Complex64::new(0.0, 0.0); win.mx * win.my];
            for j in 0..b.h {
                for i in 0..b.w {
                    let idx = (b.y0 + j - 1) * nx + (b.x0 + i - 1);
                    let v = fresh[k][j * b.w + i] - dec.fine_noise[k][idx];
                    buf[(j + win.reach) * win.mx + i + win.reach] = Complex64::new(v, 0.0);
                }
            }
            win.fwd_x.process(&mut buf);
            let mut t = transpose(&buf, win.mx, win.my);
            win.fwd_y.process(&mut t);
            t.iter_mut().zip(&win.multipliers).for_each(|(z, m)| *z *= m);
            win.inv_y.process(&mut t);
            let mut buf = transpose(&t, win.my, win.mx);
            win.inv_x.process(&mut buf);
            // Accumulate the window's overlap with the output rectangle.
            let x_lo = ox.max(out.x0);
            let x_hi = (ox + win.mx).min(out.x1());
            let y_lo = oy.max(out.y0);
            let y_hi = (oy + win.my).min(out.y1());
            for y in y_lo..y_hi {
                for x in x_lo..x_hi {
                    delta[(y - out.y0) * out.w + (x - out.x0)] += buf[(y - oy) * win.mx + (x - ox)].re;
                }
            }
        }
        Ok(delta)
    }

    /// Applies a delta from `block_delta` to a copy of `base`.
    pub fn apply(&self, base: &FieldSample, delta: &[f64]) -> FieldSample {
        let mut f = base.clone();
        let out = self.output;
        for j in 0..out.h {
            let row = f.spec.vertex_index(out.x0, out.y0 + j);
            f.values[row..row + out.w]
                .iter_mut()
                .zip(&delta[j * out.w..(j + 1) * out.w])
                .for_each(|(v, d)| *v += d);
        }
        f
    }
}

fn torus_axis(m: usize) -> Vec<f64> {
    (0..m)
        .map(|p| {
            let s = (std::f64::consts::PI * p as f64 / m as f64).sin();
            4.0 * s * s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_split_at_block_scale() {
        let spec = GridSpec::with_pad_cells(12, 12, 0.5, 2).unwrap();
        let (slices, fine) = time_slices(&spec, 3);
        let split = (3.0 * 0.5f64).powi(2);
        assert_eq!(slices[fine - 1].t1, split);
        assert_eq!(slices[fine].t0, split);
        assert!(slices.last().unwrap().t1.is_infinite());
        for w in slices.windows(2) {
            assert_eq!(w[0].t1, w[1].t0);
        }
    }

    #[test]
    fn blocks_cover_interior_once() {
        let spec = GridSpec::with_pad_cells(20, 13, 1.0, 7).unwrap();
        let blocks = block_partition(&spec, 10);
        let mut seen = vec![0u8; spec.interior_nx() * spec.interior_ny()];
        for b in &blocks {
            assert!(b.w >= 1 && b.h >= 1);
            for j in b.y0..b.y1() {
                for i in b.x0..b.x1() {
                    seen[(j - 1) * spec.interior_nx() + (i - 1)] += 1;
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        // The inner box corner is a block corner.
        let (pl, _, pb, _) = spec.pads();
        assert!(blocks.iter().any(|b| b.x0 == pl && b.y0 == pb));
    }

    #[test]
    fn short_edge_pieces_are_merged() {
        assert_eq!(axis_segments(25, 11, 10), vec![(1, 10), (11, 10), (21, 5)]);
        assert_eq!(axis_segments(45, 22, 20), vec![(1, 21), (22, 20), (42, 4)]);
        assert_eq!(axis_segments(42, 22, 20), vec![(1, 21), (22, 21)]);
    }

    #[test]
    fn rejects_oversized_block() {
        let spec = GridSpec::with_pad_cells(4, 4, 1.0, 1).unwrap();
        assert!(build_decomposition(&spec, 7, 0).is_err());
        assert!(build_decomposition(&spec, 0, 0).is_err());
    }

    #[test]
    fn deterministic_and_zero_noise() {
        let spec = GridSpec::with_pad_cells(6, 6, 1.0, 1).unwrap();
        let (d1, f1) = build_decomposition(&spec, 2, 5).unwrap();
        let (_, f2) = build_decomposition(&spec, 2, 5).unwrap();
        assert_eq!(f1.values, f2.values);
        let fine = vec![vec![0.0; d1.fine_noise[0].len()]; d1.fine_slices];
        let coarse = vec![vec![0.0; d1.fine_noise[0].len()]; d1.time_slices.len() - d1.fine_slices];
        let z = WhiteNoiseDecomposition::from_noise(&spec, 2, 1.0, fine, coarse).unwrap();
        assert!(z.field().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_coarse_noise_leaves_fine_field() {
        let spec = GridSpec::with_pad_cells(6, 6, 1.0, 1).unwrap();
        let (d, _) = build_decomposition(&spec, 2, 9).unwrap();
        let a = d.with_coarse_zeroed().field();
        let b = d.fine_field();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-14);
        }
        let sum = d.fine_field().add(&d.coarse_field());
        for (x, y) in sum.values.iter().zip(&d.field().values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn resampled_block_matches_rebuilt_decomposition() {
        let spec = GridSpec::with_pad_cells(8, 8, 1.0, 2).unwrap();
        let (d, f) = build_decomposition(&spec, 4, 1).unwrap();
        let g = d.resample_block(3, 77).unwrap();
        let h = d.with_block_resampled(3, 77).unwrap().field();
        for (x, y) in g.values.iter().zip(&h.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_ne!(f.values, g.values);
        assert!(d.resample_block(d.block_count(), 0).is_err());
    }

    #[test]
    fn multiplier_limits() {
        assert!((slice_multiplier(1e-12, 0.0, 2.0) - 2f64.sqrt()).abs() < 1e-9);
        let l = 0.3;
        let whole = slice_multiplier(l, 0.0, f64::INFINITY).powi(2);
        let parts = slice_multiplier(l, 0.0, 1.5).powi(2) + slice_multiplier(l, 1.5, f64::INFINITY).powi(2);
        assert!((whole - 1.0 / l).abs() < 1e-12);
        assert!((parts - whole).abs() < 1e-12);
    }
}
