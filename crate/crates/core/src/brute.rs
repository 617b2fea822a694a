//! Exhaustive reference distances for small catalogs.
//!
//! Explicit pairwise adjacency and label-correcting relaxation on
//! `(value, ball count)` labels, with no spatial index and no early exit.

use crate::catalog::BallCatalog;
use crate::distance::{has_far_center, DistanceResult, Weighting};
use crate::error::{Error, Result};
use crate::grid::Point;

pub const BRUTE_FORCE_LIMIT: usize = 2000;

const NONE: u128 = u128::MAX;

fn guard(cat: &BallCatalog) -> Result<()> {
    if cat.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard {
            what: "brute-force catalog balls",
            actual: cat.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok(())
}

fn adjacency(cat: &BallCatalog, weights: &[u128]) -> Vec<Vec<usize>> {
    let n = cat.len();
    (0..n)
        .map(|i| {
            if weights[i] == NONE {
                return Vec::new();
            }
            (0..n).filter(|&j| j != i && weights[j] != NONE && cat.overlaps(i, j)).collect()
        })
        .collect()
}

/// Labels `(value, count)` of the best chains from the sources to every ball.
fn relax(cat: &BallCatalog, weights: &[u128], adj: &[Vec<usize>], sources: &[u32]) -> Vec<(u128, usize)> {
    let n = cat.len();
    let mut label = vec![(NONE, usize::MAX); n];
    for &s in sources {
        let s = s as usize;
        if weights[s] != NONE {
            label[s] = label[s].min((weights[s], 1));
        }
    }
    loop {
        let mut changed = false;
        for u in 0..n {
            if label[u].0 == NONE {
                continue;
            }
            for &v in &adj[u] {
                let cand = (label[u].0 + weights[v], label[u].1 + 1);
                if cand < label[v] {
                    label[v] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

fn best_over(label: &[(u128, usize)], targets: impl Iterator<Item = usize>) -> DistanceResult {
    let best = targets.map(|t| label[t]).filter(|l| l.0 != NONE).min();
    match best {
        Some((v, c)) => DistanceResult {
            value: crate::distance::fixed_to_f64(v),
            count: c,
            chain: Vec::new(),
            reached: true,
            fixed: v,
        },
        None => DistanceResult::unreachable(),
    }
}

/// Reference distance between two points (the chain is not reconstructed).
pub fn brute_force_distance(cat: &BallCatalog, weighting: Weighting, x: Point, y: Point) -> Result<DistanceResult> {
    guard(cat)?;
    if x == y {
        return Ok(DistanceResult::zero());
    }
    let w = weighting.weights(cat);
    let adj = adjacency(cat, &w);
    let sources: Vec<u32> = (0..cat.len()).filter(|&b| cat.contains_point(b, x)).map(|b| b as u32).collect();
    let label = relax(cat, &w, &adj, &sources);
    Ok(best_over(&label, (0..cat.len()).filter(|&b| cat.contains_point(b, y))))
}

/// Reference set-to-set distance (sources and targets given by predicates).
pub fn brute_force_sets<S, T>(cat: &BallCatalog, weighting: Weighting, is_source: S, is_target: T) -> Result<DistanceResult>
where
    S: Fn(usize) -> bool,
    T: Fn(usize) -> bool,
{
    guard(cat)?;
    let w = weighting.weights(cat);
    let adj = adjacency(cat, &w);
    let sources: Vec<u32> = (0..cat.len()).filter(|&b| is_source(b)).map(|b| b as u32).collect();
    let label = relax(cat, &w, &adj, &sources);
    Ok(best_over(&label, (0..cat.len()).filter(|&b| is_target(b))))
}

/// Reference for `min_separated_distance`: one exhaustive run per source.
pub fn brute_force_min_separated(
    cat: &BallCatalog,
    weighting: Weighting,
    a: f64,
    source_stride: usize,
) -> Result<DistanceResult> {
    guard(cat)?;
    let w = weighting.weights(cat);
    let adj = adjacency(cat, &w);
    let spec = &cat.measure.spec;
    let d = cat.domain;
    let sep = a * (d.w as f64).hypot(d.h as f64) * spec.cell_size;
    let mut best = DistanceResult::unreachable();
    for cy in (d.y0..d.y1()).step_by(source_stride) {
        for cx in (d.x0..d.x1()).step_by(source_stride) {
            let s = spec.cell_center(cx, cy);
            let sources: Vec<u32> = (0..cat.len()).filter(|&b| cat.contains_point(b, s)).map(|b| b as u32).collect();
            let label = relax(cat, &w, &adj, &sources);
            let r = best_over(&label, (0..cat.len()).filter(|&b| w[b] != NONE && has_far_center(cat, b, s, sep)));
            if r.reached && (!best.reached || (r.fixed, r.count) < (best.fixed, best.count)) {
                best = r;
            }
        }
    }
    Ok(best)
}

/// Bounded reference for circuits around `origin`: relaxation on the double
/// cover limited to `max_len` balls, minimized over start balls.
pub fn brute_force_circuit(cat: &BallCatalog, weighting: Weighting, origin: Point, max_len: usize) -> Result<DistanceResult> {
    guard(cat)?;
    let w = weighting.weights(cat);
    let adj = adjacency(cat, &w);
    let n = cat.len();
    let flips = |u: usize, v: usize| {
        let p = cat.center(cat.center_of(u));
        let q = cat.center(cat.center_of(v));
        if (p.y >= origin.y) == (q.y >= origin.y) {
            return false;
        }
        let t = (origin.y - p.y) / (q.y - p.y);
        p.x + t * (q.x - p.x) > origin.x
    };
    let mut best: Option<(u128, usize)> = None;
    for b in 0..n {
        if w[b] == NONE {
            continue;
        }
        // label[sheet * n + v]: best (value, count) using at most `round` balls.
        let mut label = vec![(NONE, usize::MAX); 2 * n];
        label[b] = (w[b], 1);
        for _ in 1..=max_len {
            let prev = label.clone();
            for u in 0..2 * n {
                if prev[u].0 == NONE {
                    continue;
                }
                let (sheet, bu) = (u / n, u % n);
                for &v in &adj[bu] {
                    let vs = if flips(bu, v) { 1 - sheet } else { sheet };
                    let cand = (prev[u].0 + w[v], prev[u].1 + 1);
                    if cand < label[vs * n + v] {
                        label[vs * n + v] = cand;
                    }
                }
            }
        }
        let goal = label[n + b];
        if goal.0 != NONE && goal.1 <= max_len + 1 {
            let cand = (goal.0 - w[b], goal.1 - 1);
            if best.is_none_or(|bb| cand < bb) {
                best = Some(cand);
            }
        }
    }
    Ok(match best {
        Some((v, c)) => DistanceResult {
            value: crate::distance::fixed_to_f64(v),
            count: c,
            chain: Vec::new(),
            reached: true,
            fixed: v,
        },
        None => DistanceResult::unreachable(),
    })
}
