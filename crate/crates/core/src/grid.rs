//! Grid geometry: the inner box, its padded ambient box, and coordinates.
//!
//! Continuum coordinates are measured from the lower-left corner of the
//! inner box. The padded grid has `padded_width_cells() x
//! padded_height_cells()` cells and one more vertex per axis; the field lives
//! on vertices and vanishes on the outer ring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in continuum coordinates of the inner box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle of whole cells, `[x0, x0 + w) x [y0, y0 + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl CellRect {
    pub const fn new(x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn x1(&self) -> usize {
        self.x0 + self.w
    }

    pub fn y1(&self) -> usize {
        self.y0 + self.h
    }

    pub fn contains_cell(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1() && y >= self.y0 && y < self.y1()
    }

    pub fn contains_rect(&self, other: &CellRect) -> bool {
        other.x0 >= self.x0 && other.x1() <= self.x1() && other.y0 >= self.y0 && other.y1() <= self.y1()
    }
}

/// Discretization of a continuum box together with its padded ambient box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub inner_width_cells: usize,
    pub inner_height_cells: usize,
    pub cell_size: f64,
    pub padding_factor: f64,
    pad_left: usize,
    pad_right: usize,
    pad_bottom: usize,
    pad_top: usize,
}

pub const DEFAULT_PADDING: f64 = 2.0;

/// Smallest integer `>= n` with no prime factor above 5.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

impl GridSpec {
    /// Inner box of `w x h` cells with the default padding (twice the inner
    /// diameter on each side).
    pub fn new(w: usize, h: usize, cell_size: f64) -> Result<Self> {
        Self::with_padding(w, h, cell_size, DEFAULT_PADDING)
    }

    /// Pads by `ceil(factor * diameter)` cells on each side, then grows the
    /// padded extent to a 5-smooth cell count so the sine transforms stay
    /// fast. The extra cells are split evenly between the two sides.
    pub fn with_padding(w: usize, h: usize, cell_size: f64, factor: f64) -> Result<Self> {
        check_dims(w, h, cell_size)?;
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidGrid(format!("padding factor must be positive, got {factor}")));
        }
        let diam = (w as f64).hypot(h as f64);
        let pad = (factor * diam).ceil() as usize;
        let pw = next_smooth(w + 2 * pad);
        let ph = next_smooth(h + 2 * pad);
        let pad_left = (pw - w) / 2;
        let pad_bottom = (ph - h) / 2;
        Ok(Self {
            inner_width_cells: w,
            inner_height_cells: h,
            cell_size,
            padding_factor: factor,
            pad_left,
            pad_right: pw - w - pad_left,
            pad_bottom,
            pad_top: ph - h - pad_bottom,
        })
    }

    /// Exact uniform padding of `pad` cells. `pad = 0` makes the inner box its
    /// own ambient box, i.e. a field with Dirichlet data on the inner boundary.
    pub fn with_pad_cells(w: usize, h: usize, cell_size: f64, pad: usize) -> Result<Self> {
        check_dims(w, h, cell_size)?;
        let diam = (w as f64).hypot(h as f64);
        Ok(Self {
            inner_width_cells: w,
            inner_height_cells: h,
            cell_size,
            padding_factor: pad as f64 / diam,
            pad_left: pad,
            pad_right: pad,
            pad_bottom: pad,
            pad_top: pad,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(self.inner_width_cells, self.inner_height_cells, self.cell_size)?;
        if self.interior_nx() == 0 || self.interior_ny() == 0 {
            return Err(Error::InvalidGrid("padded grid has no interior vertex".into()));
        }
        Ok(())
    }

    pub fn pads(&self) -> (usize, usize, usize, usize) {
        (self.pad_left, self.pad_right, self.pad_bottom, self.pad_top)
    }

    pub fn padded_width_cells(&self) -> usize {
        self.inner_width_cells + self.pad_left + self.pad_right
    }

    pub fn padded_height_cells(&self) -> usize {
        self.inner_height_cells + self.pad_bottom + self.pad_top
    }

    /// Vertices per row of the padded grid, boundary included.
    pub fn vertex_cols(&self) -> usize {
        self.padded_width_cells() + 1
    }

    pub fn vertex_rows(&self) -> usize {
        self.padded_height_cells() + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_cols() * self.vertex_rows()
    }

    /// Interior (non-boundary) vertices per row.
    pub fn interior_nx(&self) -> usize {
        self.padded_width_cells().saturating_sub(1)
    }

    pub fn interior_ny(&self) -> usize {
        self.padded_height_cells().saturating_sub(1)
    }

    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * self.vertex_cols() + i
    }

    pub fn inner_cells(&self) -> usize {
        self.inner_width_cells * self.inner_height_cells
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn inner_width(&self) -> f64 {
        self.inner_width_cells as f64 * self.cell_size
    }

    pub fn inner_height(&self) -> f64 {
        self.inner_height_cells as f64 * self.cell_size
    }

    pub fn inner_diameter(&self) -> f64 {
        self.inner_width().hypot(self.inner_height())
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.inner_width_cells as f64 / self.inner_height_cells as f64
    }

    /// Aspect ratio within `[1/3, 3]`, as required by crossing experiments.
    pub fn aspect_ok(&self) -> bool {
        let ar = self.aspect_ratio();
        (1.0 / 3.0..=3.0).contains(&ar)
    }

    /// The inner box as a rectangle of padded-grid cells.
    pub fn inner_rect(&self) -> CellRect {
        CellRect::new(self.pad_left, self.pad_bottom, self.inner_width_cells, self.inner_height_cells)
    }

    /// Continuum point to fractional vertex coordinates of the padded grid.
    pub fn to_vertex_coords(&self, p: Point) -> (f64, f64) {
        (p.x / self.cell_size + self.pad_left as f64, p.y / self.cell_size + self.pad_bottom as f64)
    }

    /// Continuum position of padded-grid vertex `(i, j)`.
    pub fn vertex_point(&self, i: usize, j: usize) -> Point {
        Point::new(
            (i as f64 - self.pad_left as f64) * self.cell_size,
            (j as f64 - self.pad_bottom as f64) * self.cell_size,
        )
    }

    /// Center of inner cell `(cx, cy)`.
    pub fn cell_center(&self, cx: usize, cy: usize) -> Point {
        Point::new((cx as f64 + 0.5) * self.cell_size, (cy as f64 + 0.5) * self.cell_size)
    }
}

fn check_dims(w: usize, h: usize, cell_size: f64) -> Result<()> {
    if w == 0 || h == 0 {
        return Err(Error::InvalidGrid(format!("dimensions must be positive, got {w}x{h}")));
    }
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::InvalidGrid(format!("cell size must be positive, got {cell_size}")));
    }
    Ok(())
}
