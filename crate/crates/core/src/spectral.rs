//! Orthonormal discrete sine transforms and the Dirichlet lattice Laplacian.
//!
//! The graph Laplacian `L = 4I - A` on an `nx x ny` block of interior
//! vertices with zero boundary data is diagonalized by the tensor-product
//! DST-I basis, with eigenvalues
//! `4 sin^2(pi j / (2(nx+1))) + 4 sin^2(pi k / (2(ny+1)))`.
//! The orthonormal DST-I is its own inverse.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Rows processed per FFT batch.
const BATCH_PAIRS: usize = 32;

/// Orthonormal DST-I of a fixed length, computed through a complex FFT of
/// length `2(n+1)` with two real rows packed per transform.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "DST length must be positive");
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * (n + 1));
        Self {
            n,
            fft,
            scale: (2.0 / (n + 1) as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms every contiguous row of length `n` in `data` in place.
    pub fn transform_rows(&self, data: &mut [f64]) {
        let n = self.n;
        assert_eq!(data.len() % n, 0);
        let rows = data.len() / n;
        let big = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); BATCH_PAIRS * big];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut r = 0;
        while r < rows {
            let pairs = ((rows - r + 1) / 2).min(BATCH_PAIRS);
            let used = &mut buf[..pairs * big];
            for (p, chunk) in used.chunks_mut(big).enumerate() {
                let ra = r + 2 * p;
                let rb = ra + 1;
                chunk.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
                for j in 0..n {
                    let a = data[ra * n + j];
                    let b = if rb < rows { data[rb * n + j] } else { 0.0 };
                    chunk[j + 1] = Complex64::new(a, b);
                    chunk[big - 1 - j] = Complex64::new(-a, -b);
                }
            }
            self.fft.process_with_scratch(used, &mut scratch);
            for (p, chunk) in used.chunks(big).enumerate() {
                let ra = r + 2 * p;
                let rb = ra + 1;
                for k in 0..n {
                    let z = chunk[k + 1];
                    data[ra * n + k] = -0.5 * z.im * self.scale;
                    if rb < rows {
                        data[rb * n + k] = 0.5 * z.re * self.scale;
                    }
                }
            }
            r += 2 * pairs;
        }
    }
}

/// Separable 2D orthonormal DST-I on a row-major `nx x ny` array.
#[derive(Debug, Clone)]
pub struct Dst2 {
    nx: usize,
    ny: usize,
    rows: Dst1,
    cols: Dst1,
}

impl Dst2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let rows = Dst1::new(nx);
        let cols = if ny == nx { rows.clone() } else { Dst1::new(ny) };
        Self { nx, ny, rows, cols }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place transform; applying it twice is the identity.
    pub fn transform(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.len());
        self.rows.transform_rows(data);
        let mut t = transpose(data, self.nx, self.ny);
        self.cols.transform_rows(&mut t);
        let back = transpose(&t, self.ny, self.nx);
        data.copy_from_slice(&back);
    }

    /// Eigenvalues of `4I - A`, laid out like the transformed array.
    pub fn laplacian_eigenvalues(&self) -> Vec<f64> {
        let ex = axis_eigenvalues(self.nx);
        let ey = axis_eigenvalues(self.ny);
        let mut out = Vec::with_capacity(self.len());
        for &b in &ey {
            for &a in &ex {
                out.push(a + b);
            }
        }
        out
    }

    /// Solves `(4I - A) u = rhs` with zero Dirichlet data.
    pub fn solve_laplacian(&self, rhs: &[f64]) -> Vec<f64> {
        let mut u = rhs.to_vec();
        self.transform(&mut u);
        for (v, l) in u.iter_mut().zip(self.laplacian_eigenvalues()) {
            *v /= l;
        }
        self.transform(&mut u);
        u
    }
}

/// `4 sin^2(pi j / (2(n+1)))` for `j = 1..=n`.
pub fn axis_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| {
            let s = (std::f64::consts::PI * j as f64 / (2.0 * (n + 1) as f64)).sin();
            4.0 * s * s
        })
        .collect()
}

pub(crate) fn transpose<T: Copy + Default>(data: &[T], w: usize, h: usize) -> Vec<T> {
    let mut out = vec![T::default(); w * h];
    const T: usize = 32;
    for jb in (0..h).step_by(T) {
        for ib in (0..w).step_by(T) {
            for j in jb..(jb + T).min(h) {
                for i in ib..(ib + T).min(w) {
                    out[i * h + j] = data[j * w + i];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dst(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let s = (2.0 / (n + 1) as f64).sqrt();
        (1..=n)
            .map(|k| {
                s * (1..=n)
                    .map(|j| x[j - 1] * (std::f64::consts::PI * (j * k) as f64 / (n + 1) as f64).sin())
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn matches_naive_transform() {
        for n in [1, 2, 5, 8, 13] {
            let rows = 3;
            let data: Vec<f64> = (0..n * rows).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            let mut fast = data.clone();
            Dst1::new(n).transform_rows(&mut fast);
            for r in 0..rows {
                let slow = naive_dst(&data[r * n..(r + 1) * n]);
                for k in 0..n {
                    assert!((fast[r * n + k] - slow[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_dimensional_transform_is_involution() {
        let d = Dst2::new(7, 4);
        let data: Vec<f64> = (0..28).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = data.clone();
        d.transform(&mut x);
        d.transform(&mut x);
        for (a, b) in x.iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_solve_inverts_laplacian() {
        let (nx, ny) = (6, 5);
        let d = Dst2::new(nx, ny);
        let u: Vec<f64> = (0..nx * ny).map(|i| ((i * 13) % 7) as f64).collect();
        let mut rhs = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let mut s = 4.0 * u[j * nx + i];
                if i > 0 {
                    s -= u[j * nx + i - 1];
                }
                if i + 1 < nx {
                    s -= u[j * nx + i + 1];
                }
                if j > 0 {
                    s -= u[(j - 1) * nx + i];
                }
                if j + 1 < ny {
                    s -= u[(j + 1) * nx + i];
                }
                rhs[j * nx + i] = s;
            }
        }
        let back = d.solve_laplacian(&rhs);
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
