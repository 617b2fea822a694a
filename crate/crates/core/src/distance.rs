//! Liouville graph distances over a ball catalog.
//!
//! Path values are sums of node weights in fixed point (`2^-32` resolution,
//! rounded up), so comparisons between distances are exact integer
//! comparisons. A ball counts as reached the first time it is discovered:
//! weights sit on nodes, so the first discoverer is always the cheapest.
//! Discovered balls are removed from a per-(level, row) "next alive" index so
//! each is examined a bounded number of times.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::catalog::BallCatalog;
use crate::error::{Error, Result};
use crate::grid::{CellRect, Point};

/// Fixed-point scale of path values.
pub const FIXED_ONE: u128 = 1 << 32;
const INADMISSIBLE: u128 = u128::MAX;
const WEIGHT_CAP: f64 = 1e27;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    /// Sum of weights along the chain (ball count for the count distance).
    pub value: f64,
    /// Number of balls in the chain.
    pub count: usize,
    pub chain: Vec<u32>,
    pub reached: bool,
    #[serde(skip)]
    pub fixed: u128,
}

impl DistanceResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            count: 0,
            chain: Vec::new(),
            reached: true,
            fixed: 0,
        }
    }

    pub fn unreachable() -> Self {
        Self {
            value: f64::INFINITY,
            count: 0,
            chain: Vec::new(),
            reached: false,
            fixed: INADMISSIBLE,
        }
    }

    fn from_fixed(fixed: u128, chain: Vec<u32>) -> Self {
        Self {
            value: fixed_to_f64(fixed),
            count: chain.len(),
            chain,
            reached: true,
            fixed,
        }
    }
}

pub fn fixed_to_f64(v: u128) -> f64 {
    v as f64 / FIXED_ONE as f64
}

/// `kappa_delta(t) = max(1, t / delta)` in fixed point, rounded up.
pub fn kappa_fixed(mass: f64, delta: f64) -> u128 {
    let k = (mass / delta).max(1.0).min(WEIGHT_CAP);
    (k * FIXED_ONE as f64).ceil() as u128
}

/// Node weights of a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Unit weight on balls of mass below `delta`, others excluded.
    Count { delta: f64 },
    /// `kappa_delta(mass)` on balls of radius at most `r_max`.
    Kappa { delta: f64, r_max: f64 },
}

impl Weighting {
    pub fn weights(&self, cat: &BallCatalog) -> Vec<u128> {
        let nc = cat.n_centers();
        (0..cat.len())
            .map(|b| {
                if !cat.active[b % nc] {
                    return INADMISSIBLE;
                }
                let m = cat.masses[b];
                match *self {
                    Weighting::Count { delta } => {
                        if m < delta {
                            FIXED_ONE
                        } else {
                            INADMISSIBLE
                        }
                    }
                    Weighting::Kappa { delta, r_max } => {
                        if cat.radii[b / nc] <= r_max {
                            kappa_fixed(m, delta)
                        } else {
                            INADMISSIBLE
                        }
                    }
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let delta = match *self {
            Weighting::Count { delta } | Weighting::Kappa { delta, .. } => delta,
        };
        if delta > 0.0 {
            Ok(())
        } else {
            Err(Error::param("delta", "must be positive"))
        }
    }
}

/// "Next alive" index over one lattice row: union-find with path halving.
struct AliveRows {
    next: Vec<u32>,
    width: usize,
}

impl AliveRows {
    fn new(rows: usize, width: usize) -> Self {
        let w1 = width + 1;
        let mut next = Vec::with_capacity(rows * w1);
        for _ in 0..rows {
            next.extend(0..w1 as u32);
        }
        Self { next, width }
    }

    /// First alive column `>= col` in `row` (`width` if none).
    #[inline]
    fn find(&mut self, row: usize, col: usize) -> usize {
        let base = row * (self.width + 1);
        let mut c = col;
        loop {
            let n = self.next[base + c] as usize;
            if n == c {
                return c;
            }
            let nn = self.next[base + n] as usize;
            self.next[base + c] = nn as u32;
            c = nn;
        }
    }

    #[inline]
    fn remove(&mut self, row: usize, col: usize) {
        let base = row * (self.width + 1);
        self.next[base + col] = (col + 1) as u32;
    }
}

/// Sheet-flip rule for the lifted (double cover) graph.
pub(crate) trait Lift {
    fn flips(&self, cat: &BallCatalog, u: usize, v: usize) -> bool;
}

pub(crate) struct NoLift;

impl Lift for NoLift {
    fn flips(&self, _: &BallCatalog, _: usize, _: usize) -> bool {
        false
    }
}

/// Node-weighted shortest-path search over the catalog (optionally lifted to
/// `sheets` copies). Nodes are `sheet * n_balls + ball`.
pub(crate) struct Search<'a, L: Lift> {
    cat: &'a BallCatalog,
    weights: &'a [u128],
    sheets: usize,
    lift: L,
    alive: AliveRows,
    pub(crate) dist: Vec<u128>,
    pub(crate) hops: Vec<u32>,
    pub(crate) parent: Vec<u32>,
    heap: BinaryHeap<Reverse<(u128, u32, u32)>>,
}

impl<'a, L: Lift> Search<'a, L> {
    pub(crate) fn new(cat: &'a BallCatalog, weights: &'a [u128], sheets: usize, lift: L) -> Self {
        let n = cat.len();
        let rows = sheets * cat.n_levels() * cat.ncy;
        let mut alive = AliveRows::new(rows, cat.ncx);
        for s in 0..sheets {
            for (b, &w) in weights.iter().enumerate() {
                if w == INADMISSIBLE {
                    let (row, col) = Self::slot(cat, s, b);
                    alive.remove(row, col);
                }
            }
        }
        Self {
            cat,
            weights,
            sheets,
            lift,
            alive,
            dist: vec![INADMISSIBLE; sheets * n],
            hops: vec![0; sheets * n],
            parent: vec![u32::MAX; sheets * n],
            heap: BinaryHeap::new(),
        }
    }

    #[inline]
    fn slot(cat: &BallCatalog, sheet: usize, b: usize) -> (usize, usize) {
        let nc = cat.n_centers();
        let level = b / nc;
        let c = b % nc;
        ((sheet * cat.n_levels() + level) * cat.ncy + c / cat.ncx, c % cat.ncx)
    }

    fn discover(&mut self, node: usize, value: u128, hops: u32, parent: u32) {
        let n = self.cat.len();
        let (row, col) = Self::slot(self.cat, node / n, node % n);
        self.alive.remove(row, col);
        self.dist[node] = value;
        self.hops[node] = hops;
        self.parent[node] = parent;
        self.heap.push(Reverse((value, hops, node as u32)));
    }

    /// Seeds the search with source balls on sheet 0.
    pub(crate) fn add_sources(&mut self, sources: &[u32]) {
        for &b in sources {
            let b = b as usize;
            let w = self.weights[b];
            if w != INADMISSIBLE && self.dist[b] == INADMISSIBLE {
                self.discover(b, w, 1, u32::MAX);
            }
        }
    }

    /// Runs until a node satisfying `is_target` is popped (or exhaustion).
    pub(crate) fn run<F: FnMut(usize) -> bool>(&mut self, mut is_target: F) -> Option<usize> {
        let cat = self.cat;
        let n = cat.len();
        let nc = cat.n_centers();
        while let Some(Reverse((value, hops, node))) = self.heap.pop() {
            let node = node as usize;
            if is_target(node) {
                return Some(node);
            }
            let sheet = node / n;
            let b = node % n;
            let p = cat.center(b % nc);
            let ru = cat.radii[b / nc];
            for (level, &rl) in cat.radii.iter().enumerate() {
                let reach = ru + rl;
                let reach2 = reach * reach;
                let (r0, r1) = cat.rows_within(p.y, reach);
                for row in r0..r1 {
                    let dy = cat.row_center_y(row) - p.y;
                    if dy * dy >= reach2 {
                        continue;
                    }
                    let (c0, c1) = cat.cols_within(p.x, (reach2 - dy * dy).sqrt());
                    for target_sheet in 0..self.sheets {
                        let arow = (target_sheet * cat.n_levels() + level) * cat.ncy + row;
                        let mut col = self.alive.find(arow, c0);
                        while col < c1 {
                            let v = level * nc + row * cat.ncx + col;
                            if cat.overlaps(b, v) {
                                let flip = self.lift.flips(cat, b, v);
                                let vs = if flip { 1 - sheet } else { sheet };
                                if vs == target_sheet {
                                    let w = self.weights[v];
                                    self.discover(vs * n + v, value + w, hops + 1, node as u32);
                                }
                            }
                            col = self.alive.find(arow, col + 1);
                        }
                    }
                }
            }
        }
        None
    }

    /// Pops everything reachable.
    pub(crate) fn run_all(&mut self) {
        self.run(|_| false);
    }

    pub(crate) fn chain(&self, node: usize) -> Vec<u32> {
        let n = self.cat.len();
        let mut out = Vec::new();
        let mut v = node as u32;
        while v != u32::MAX {
            out.push(v % n as u32);
            v = self.parent[v as usize];
        }
        out.reverse();
        out
    }

    pub(crate) fn result(&self, node: usize) -> DistanceResult {
        DistanceResult::from_fixed(self.dist[node], self.chain(node))
    }
}

fn target_mask(cat: &BallCatalog, targets: &[u32]) -> Vec<bool> {
    let mut m = vec![false; cat.len()];
    for &t in targets {
        m[t as usize] = true;
    }
    m
}

/// Shortest chain from any source ball to any target ball.
pub fn set_distance(cat: &BallCatalog, weighting: Weighting, sources: &[u32], targets: &[u32]) -> Result<DistanceResult> {
    weighting.validate()?;
    let w = weighting.weights(cat);
    Ok(search_sets(cat, &w, sources, targets))
}

pub(crate) fn search_sets(cat: &BallCatalog, weights: &[u128], sources: &[u32], targets: &[u32]) -> DistanceResult {
    let mask = target_mask(cat, targets);
    let mut s = Search::new(cat, weights, 1, NoLift);
    s.add_sources(sources);
    match s.run(|v| mask[v]) {
        Some(v) => s.result(v),
        None => DistanceResult::unreachable(),
    }
}

fn point_distance(cat: &BallCatalog, weighting: Weighting, x: Point, y: Point) -> Result<DistanceResult> {
    weighting.validate()?;
    if x == y {
        return Ok(DistanceResult::zero());
    }
    set_distance(cat, weighting, &cat.balls_containing(x), &cat.balls_containing(y))
}

/// Ball-count distance over balls of mass below `delta`.
pub fn count_distance(cat: &BallCatalog, delta: f64, x: Point, y: Point) -> Result<DistanceResult> {
    point_distance(cat, Weighting::Count { delta }, x, y)
}

/// `kappa_delta`-weighted distance over balls of radius at most `r`.
pub fn modified_distance(cat: &BallCatalog, delta: f64, r: f64, x: Point, y: Point) -> Result<DistanceResult> {
    point_distance(cat, Weighting::Kappa { delta, r_max: r }, x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingMode {
    /// Left side to right side.
    LeftRight,
    /// Bottom side to top side.
    BottomTop,
    /// Between the longer sides.
    Easy,
    /// Between the shorter sides.
    Hard,
}

/// Source and target strips (one cell thick) of a crossing of `domain`.
pub fn crossing_strips(domain: CellRect, mode: CrossingMode) -> Result<(CellRect, CellRect)> {
    let lr = (
        CellRect::new(domain.x0, domain.y0, 1, domain.h),
        CellRect::new(domain.x1() - 1, domain.y0, 1, domain.h),
    );
    let bt = (
        CellRect::new(domain.x0, domain.y0, domain.w, 1),
        CellRect::new(domain.x0, domain.y1() - 1, domain.w, 1),
    );
    let wide = domain.w > domain.h;
    match mode {
        CrossingMode::LeftRight => Ok(lr),
        CrossingMode::BottomTop => Ok(bt),
        CrossingMode::Easy | CrossingMode::Hard if domain.w == domain.h => {
            Err(Error::param("mode", "easy and hard crossings need a non-square box"))
        }
        CrossingMode::Easy => Ok(if wide { bt } else { lr }),
        CrossingMode::Hard => Ok(if wide { lr } else { bt }),
    }
}

/// Crossing of the catalog's domain between the strips given by `mode`.
pub fn crossing_distance(cat: &BallCatalog, delta: f64, r: f64, mode: CrossingMode) -> Result<DistanceResult> {
    let (from, to) = crossing_strips(cat.domain, mode)?;
    set_distance(cat, Weighting::Kappa { delta, r_max: r }, &cat.balls_meeting(from), &cat.balls_meeting(to))
}

/// Same as `crossing_distance` with an arbitrary weighting.
pub fn crossing_distance_with(cat: &BallCatalog, weighting: Weighting, mode: CrossingMode) -> Result<DistanceResult> {
    let (from, to) = crossing_strips(cat.domain, mode)?;
    set_distance(cat, weighting, &cat.balls_meeting(from), &cat.balls_meeting(to))
}

/// Rectangular annulus `outer \ inner` in inner-cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annulus {
    pub outer: CellRect,
    pub inner: CellRect,
}

impl Annulus {
    pub fn validate(&self) -> Result<()> {
        let (o, i) = (self.outer, self.inner);
        if !(i.w > 0 && i.h > 0 && i.x0 > o.x0 && i.y0 > o.y0 && i.x1() < o.x1() && i.y1() < o.y1()) {
            return Err(Error::param("annulus", "inner box must lie strictly inside the outer box"));
        }
        Ok(())
    }

    pub fn contains_cell(&self, cx: usize, cy: usize) -> bool {
        self.outer.contains_cell(cx, cy) && !self.inner.contains_cell(cx, cy)
    }

    /// Center of the inner box in continuum units.
    pub fn center(&self, cell_size: f64) -> Point {
        let i = self.inner;
        Point::new(
            0.5 * (i.x0 + i.x1()) as f64 * cell_size,
            0.5 * (i.y0 + i.y1()) as f64 * cell_size,
        )
    }
}

/// Clip rectangle in signed cell coordinates (may extend past the grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl ClipRect {
    fn contains_cell(&self, cx: usize, cy: usize) -> bool {
        let (x, y) = (cx as i64, cy as i64);
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    fn on_boundary(&self, cx: usize, cy: usize) -> bool {
        let (x, y) = (cx as i64, cy as i64);
        self.contains_cell(cx, cy) && (x == self.x0 || x == self.x1 - 1 || y == self.y0 || y == self.y1 - 1)
    }
}

/// Flips the sheet when the segment between two centers crosses the
/// horizontal ray to the right of `origin`.
struct RayCut {
    origin: Point,
}

impl Lift for RayCut {
    fn flips(&self, cat: &BallCatalog, u: usize, v: usize) -> bool {
        let p = cat.center(cat.center_of(u));
        let q = cat.center(cat.center_of(v));
        let above_p = p.y >= self.origin.y;
        let above_q = q.y >= self.origin.y;
        if above_p == above_q {
            return false;
        }
        let t = (self.origin.y - p.y) / (q.y - p.y);
        p.x + t * (q.x - p.x) > self.origin.x
    }
}

/// Catalog over the same measure with centers restricted to the annulus
/// (and the clip, if given).
pub fn annulus_catalog(cat: &BallCatalog, annulus: &Annulus, clip: Option<&ClipRect>) -> Result<BallCatalog> {
    annulus.validate()?;
    let opts = crate::catalog::CatalogOptions {
        stride: cat.centers_stride,
        min_radius_cells: cat.radii[0] / cat.measure.spec.cell_size,
        r_cap: cat.r_cap,
        domain: Some(annulus.outer),
    };
    BallCatalog::with_mask(&cat.measure, &opts, |cx, cy| {
        annulus.contains_cell(cx, cy) && clip.is_none_or(|c| c.contains_cell(cx, cy))
    })
}

/// Distance around an annulus: the cheapest circuit if `clip` is `None`,
/// otherwise the distance between the two components of the clip boundary
/// inside the annulus.
pub fn around_distance(
    cat: &BallCatalog,
    delta: f64,
    r: f64,
    annulus: &Annulus,
    clip: Option<&ClipRect>,
) -> Result<DistanceResult> {
    let sub = annulus_catalog(cat, annulus, clip)?;
    let weighting = Weighting::Kappa { delta, r_max: r };
    weighting.validate()?;
    let weights = weighting.weights(&sub);
    match clip {
        None => Ok(circuit_distance(&sub, &weights, annulus.center(sub.measure.spec.cell_size))),
        Some(c) => {
            let (xs, ys) = clip_components(annulus, c)?;
            let from = balls_meeting_cells(&sub, &xs);
            let to = balls_meeting_cells(&sub, &ys);
            Ok(search_sets(&sub, &weights, &from, &to))
        }
    }
}

/// The two 8-connected components of clip-boundary cells inside the annulus.
fn clip_components(annulus: &Annulus, clip: &ClipRect) -> Result<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    let o = annulus.outer;
    let mut cells = Vec::new();
    for cy in o.y0..o.y1() {
        for cx in o.x0..o.x1() {
            if annulus.contains_cell(cx, cy) && clip.on_boundary(cx, cy) {
                cells.push((cx, cy));
            }
        }
    }
    let mut label = vec![usize::MAX; cells.len()];
    let mut comps = 0;
    for start in 0..cells.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = comps;
        while let Some(i) = stack.pop() {
            let (x, y) = cells[i];
            for (j, &(u, v)) in cells.iter().enumerate() {
                if label[j] == usize::MAX && x.abs_diff(u) <= 1 && y.abs_diff(v) <= 1 {
                    label[j] = comps;
                    stack.push(j);
                }
            }
        }
        comps += 1;
    }
    if comps != 2 {
        return Err(Error::param(
            "clip",
            format!("clip boundary meets the annulus in {comps} components, expected 2"),
        ));
    }
    let xs = cells.iter().zip(&label).filter(|(_, &l)| l == 0).map(|(c, _)| *c).collect();
    let ys = cells.iter().zip(&label).filter(|(_, &l)| l == 1).map(|(c, _)| *c).collect();
    Ok((xs, ys))
}

fn balls_meeting_cells(cat: &BallCatalog, cells: &[(usize, usize)]) -> Vec<u32> {
    let mut out: Vec<u32> = cells
        .iter()
        .flat_map(|&(x, y)| cat.balls_meeting(CellRect::new(x, y, 1, 1)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Cheapest closed chain winding once around `origin`: for each candidate
/// start ball, the shortest lifted path to its copy on the other sheet.
fn circuit_distance(cat: &BallCatalog, weights: &[u128], origin: Point) -> DistanceResult {
    let n = cat.len();
    // Every circuit uses an edge crossing the ray; its first endpoint lies
    // within the largest radius sum of the ray.
    let reach = 2.0 * cat.radii.last().copied().unwrap_or(0.0);
    let starts: Vec<usize> = (0..n)
        .filter(|&b| {
            let p = cat.center(cat.center_of(b));
            weights[b] != INADMISSIBLE && p.x > origin.x - reach && (p.y - origin.y).abs() < reach
        })
        .collect();
    let mut best: Option<(u128, usize, u32, Vec<u32>)> = None;
    for &b in &starts {
        let mut s = Search::new(cat, weights, 2, RayCut { origin });
        s.add_sources(&[b as u32]);
        let goal = n + b;
        if let Some(found) = s.run(|v| v == goal) {
            // The start ball is paid for once.
            let value = s.dist[found] - weights[b];
            let count = s.hops[found] as usize - 1;
            let key = (value, count, b as u32);
            if best.as_ref().is_none_or(|(bv, bc, bb, _)| key < (*bv, *bc, *bb)) {
                let mut chain = s.chain(found);
                chain.pop();
                best = Some((value, count, b as u32, chain));
            }
        }
    }
    match best {
        Some((value, _, _, chain)) => DistanceResult::from_fixed(value, chain),
        None => DistanceResult::unreachable(),
    }
}

/// Minimum over sources `s` on a sub-lattice of cell centers of the distance
/// from `s` to the cell centers at distance at least `a * diam` from it.
pub fn min_separated_distance(cat: &BallCatalog, delta: f64, r: f64, a: f64, source_stride: usize) -> Result<DistanceResult> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param("a", "must lie in (0, 1)"));
    }
    if source_stride == 0 {
        return Err(Error::param("source_stride", "must be at least 1"));
    }
    let weighting = Weighting::Kappa { delta, r_max: r };
    weighting.validate()?;
    let weights = weighting.weights(cat);
    let spec = &cat.measure.spec;
    let d = cat.domain;
    let sep = a * (d.w as f64).hypot(d.h as f64) * spec.cell_size;
    let mut best = DistanceResult::unreachable();
    for cy in (d.y0..d.y1()).step_by(source_stride) {
        for cx in (d.x0..d.x1()).step_by(source_stride) {
            let s = spec.cell_center(cx, cy);
            let targets: Vec<u32> = (0..cat.len())
                .filter(|&b| weights[b] != INADMISSIBLE && has_far_center(cat, b, s, sep))
                .map(|b| b as u32)
                .collect();
            let res = search_sets(cat, &weights, &cat.balls_containing(s), &targets);
            if res.reached && (!best.reached || (res.fixed, res.count) < (best.fixed, best.count)) {
                best = res;
            }
        }
    }
    Ok(best)
}

/// Whether ball `b` contains a domain cell center at distance `>= sep` from `s`.
pub(crate) fn has_far_center(cat: &BallCatalog, b: usize, s: Point, sep: f64) -> bool {
    let ball = cat.ball(b);
    let dc = ball.center.dist(&s);
    if dc + ball.radius < sep {
        return false;
    }
    let m = &cat.measure;
    let d = cat.domain;
    for cy in m.ball_rows(ball.center, ball.radius) {
        if cy < d.y0 || cy >= d.y1() {
            continue;
        }
        if let Some((lo, hi)) = m.ball_row_range(cy, ball.center, ball.radius) {
            for cx in lo.max(d.x0)..hi.min(d.x1()) {
                let y = m.spec.cell_center(cx, cy);
                let (dx, dy) = (y.x - s.x, y.y - s.y);
                if dx * dx + dy * dy >= sep * sep {
                    return true;
                }
            }
        }
    }
    false
}

/// Distances from `x` to every ball (fixed point; `u128::MAX` if unreached).
pub fn distances_from_point(cat: &BallCatalog, weighting: Weighting, x: Point) -> Result<Vec<u128>> {
    weighting.validate()?;
    let w = weighting.weights(cat);
    let mut s = Search::new(cat, &w, 1, NoLift);
    s.add_sources(&cat.balls_containing(x));
    s.run_all();
    Ok(s.dist)
}

/// Point-to-point distance read off a single-source distance table.
pub fn distance_to_point(cat: &BallCatalog, table: &[u128], y: Point) -> Option<u128> {
    cat.balls_containing(y).iter().map(|&b| table[b as usize]).filter(|&v| v != INADMISSIBLE).min()
}

/// Whether consecutive chain balls overlap.
pub fn chain_is_connected(cat: &BallCatalog, chain: &[u32]) -> bool {
    chain.windows(2).all(|w| cat.overlaps(w[0] as usize, w[1] as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::build_catalog;
    use crate::grid::GridSpec;
    use crate::measure::MeasureGrid;

    fn uniform_catalog(w: usize, h: usize, stride: usize, cap: f64) -> BallCatalog {
        let m = MeasureGrid::uniform(&GridSpec::with_pad_cells(w, h, 1.0, 1).unwrap());
        build_catalog(&m, stride, cap).unwrap()
    }

    #[test]
    fn same_point_is_zero() {
        let c = uniform_catalog(8, 8, 1, 4.0);
        let x = Point::new(2.5, 3.5);
        assert_eq!(count_distance(&c, 10.0, x, x).unwrap().value, 0.0);
    }

    #[test]
    fn tiny_delta_is_unreachable() {
        let c = uniform_catalog(8, 8, 1, 4.0);
        let r = count_distance(&c, 1.0, Point::new(0.5, 0.5), Point::new(7.5, 7.5)).unwrap();
        assert!(!r.reached);
    }

    #[test]
    fn single_expensive_ball() {
        let c = uniform_catalog(8, 8, 1, 8.0);
        let x = Point::new(3.5, 3.5);
        let y = Point::new(4.5, 4.5);
        let big = c.masses().iter().cloned().fold(0.0, f64::max);
        let r = modified_distance(&c, big / 3.0, 8.0, x, y).unwrap();
        assert!(r.value <= 3.0 + 1e-9);
        assert!(chain_is_connected(&c, &r.chain));
    }

    #[test]
    fn chains_cover_endpoints() {
        let c = uniform_catalog(16, 8, 1, 4.0);
        let x = Point::new(0.5, 0.5);
        let y = Point::new(15.5, 7.5);
        let r = count_distance(&c, 100.0, x, y).unwrap();
        assert!(r.reached);
        assert!(c.contains_point(r.chain[0] as usize, x));
        assert!(c.contains_point(*r.chain.last().unwrap() as usize, y));
        assert!(chain_is_connected(&c, &r.chain));
        assert_eq!(r.value, r.count as f64);
    }

    #[test]
    fn easy_not_harder_than_hard_on_uniform() {
        let c = uniform_catalog(16, 8, 1, 4.0);
        let e = crossing_distance(&c, 1e9, 4.0, CrossingMode::Easy).unwrap();
        let h = crossing_distance(&c, 1e9, 4.0, CrossingMode::Hard).unwrap();
        assert!(e.value <= h.value);
        let (from, _) = crossing_strips(c.domain, CrossingMode::Hard).unwrap();
        assert_eq!(from, CellRect::new(0, 0, 1, 8));
    }

    #[test]
    fn square_box_has_no_easy_direction() {
        let c = uniform_catalog(8, 8, 1, 4.0);
        assert!(crossing_distance(&c, 1.0, 4.0, CrossingMode::Easy).is_err());
        assert!(crossing_distance(&c, 1e9, 4.0, CrossingMode::LeftRight).unwrap().reached);
    }

    #[test]
    fn kappa_rounds_up() {
        assert_eq!(kappa_fixed(0.5, 1.0), FIXED_ONE);
        assert_eq!(kappa_fixed(3.0, 1.0), 3 * FIXED_ONE);
        assert!(kappa_fixed(1.0 + 1e-12, 1.0) > FIXED_ONE);
    }
}
