use liouville_core::field::{
    exact_covariance, exact_covariance_with, laplacian_matrix, sample_dgff_with, SamplerKind,
    DEFAULT_CALIBRATION,
};
use liouville_core::noise::{build_decomposition, LocalResampler, WhiteNoiseDecomposition, DEFAULT_REACH_FACTOR};
use liouville_core::oracle::sampler_covariance_gap;
use liouville_core::{CellRect, GridSpec};
use nalgebra::DMatrix;

#[test]
fn spectral_sampler_covariance_matches_dense_inverse() {
    for (w, h, pad) in [(3, 3, 0), (4, 4, 0), (5, 3, 1), (10, 6, 3), (16, 16, 0)] {
        let spec = GridSpec::with_pad_cells(w, h, 1.0, pad).unwrap();
        let gap = sampler_covariance_gap(&spec).unwrap();
        assert!(gap < 1e-10, "{w}x{h}+{pad}: {gap}");
    }
}

#[test]
fn three_by_three_center_entry_matches_hand_inverse() {
    // 4x4 cells give a 3x3 interior block.
    let spec = GridSpec::with_pad_cells(4, 4, 1.0, 0).unwrap();
    let cov = exact_covariance_with(&spec, 1.0).unwrap();
    let lap = laplacian_matrix(3, 3);
    let inv = lap.try_inverse().unwrap();
    assert!((cov[(4, 4)] - inv[(4, 4)]).abs() < 1e-14);
    // Exact rational value on the 3x3 block.
    assert!((cov[(4, 4)] - 3.0 / 8.0).abs() < 1e-14);
}

#[test]
fn dense_sampler_is_deterministic() {
    let spec = GridSpec::with_pad_cells(6, 5, 1.0, 0).unwrap();
    let a = sample_dgff_with(&spec, 4, SamplerKind::Dense, 1.0).unwrap();
    let b = sample_dgff_with(&spec, 4, SamplerKind::Dense, 1.0).unwrap();
    assert_eq!(a.values, b.values);
}

/// Implied covariance of the decomposition, from unit noise in every slice.
fn decomposition_covariance(spec: &GridSpec, block: usize) -> DMatrix<f64> {
    let (d, _) = build_decomposition(spec, block, 0).unwrap();
    let n = spec.interior_nx() * spec.interior_ny();
    let fine = d.fine_slices;
    let total = d.time_slices.len();
    let a2 = spec.cell_area();
    let mut cov = DMatrix::zeros(n, n);
    for k in 0..total {
        let var = if k < fine { a2 * d.time_slices[k].len() } else { 1.0 };
        for e in 0..n {
            let mut fine_noise = vec![vec![0.0; n]; fine];
            let mut coarse_noise = vec![vec![0.0; n]; total - fine];
            if k < fine {
                fine_noise[k][e] = 1.0;
            } else {
                coarse_noise[k - fine][e] = 1.0;
            }
            let z = WhiteNoiseDecomposition::from_noise(spec, block, DEFAULT_CALIBRATION, fine_noise, coarse_noise)
                .unwrap();
            let col = z.field().interior();
            for r in 0..n {
                for c in 0..n {
                    cov[(r, c)] += var * col[r] * col[c];
                }
            }
        }
    }
    cov
}

#[test]
fn decomposition_reproduces_green_function() {
    let spec = GridSpec::with_pad_cells(8, 8, 1.0, 0).unwrap();
    let (d, _) = build_decomposition(&spec, 2, 0).unwrap();
    let cov = decomposition_covariance(&spec, 2);
    let exact = exact_covariance(&spec).unwrap();
    let diff = (&cov - &exact).abs().max();
    assert!(diff < d.truncation_tolerance, "max deviation {diff}");
    assert!(d.tail_fraction > 0.0 && d.tail_fraction < 1.0);
}

#[test]
fn local_resampler_matches_global_resampling() {
    let spec = GridSpec::with_pad_cells(24, 24, 0.5, 60).unwrap();
    let (d, f) = build_decomposition(&spec, 4, 3).unwrap();
    let (pl, _, pb, _) = spec.pads();
    let output = CellRect::new(pl, pb, 25, 25);
    let local = LocalResampler::new(&d, output, DEFAULT_REACH_FACTOR);
    let mut checked = 0;
    for id in 0..d.block_count() {
        let b = d.block_partition[id];
        if !output.contains_rect(&b) {
            continue;
        }
        assert!(local.applicable(&d, b));
        let delta = local.block_delta(&d, id, 91 + id as u64).unwrap();
        let fast = local.apply(&f, &delta);
        let global = d.resample_block(id, 91 + id as u64).unwrap();
        let mut err: f64 = 0.0;
        for j in output.y0..output.y1() {
            for i in output.x0..output.x1() {
                err = err.max((fast.value(i, j) - global.value(i, j)).abs());
            }
        }
        assert!(err < 1e-10, "block {id}: {err}");
        checked += 1;
    }
    assert!(checked >= 9);
}
