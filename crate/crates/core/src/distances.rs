//! Bottleneck and erosion distances between persistence diagrams, and their
//! time-aggregated forms on barcode series.
//!
//! Points with infinite death only ever match each other, at the cost of
//! their birth difference. Diagrams with different numbers of infinite points
//! are at distance `+∞` under both metrics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matching::max_matching;
use crate::metric::time_aggregate;
use crate::persistence::Barcode;
use crate::summaries::BarcodeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    /// Distance to the diagonal in the L∞ norm.
    fn half_persistence(&self) -> f64 {
        (self.death - self.birth) / 2.0
    }

    fn linf(&self, other: &Self) -> f64 {
        (self.birth - other.birth)
            .abs()
            .max((self.death - other.death).abs())
    }
}

pub fn diagram(b: &Barcode, dim: usize) -> Vec<DiagramPoint> {
    b.of_dim(dim)
        .map(|iv| DiagramPoint::new(iv.birth, iv.death))
        .collect()
}

fn split_infinite(points: &[DiagramPoint]) -> (Vec<DiagramPoint>, Vec<f64>) {
    let (inf, fin): (Vec<DiagramPoint>, Vec<DiagramPoint>) =
        points.iter().partition(|p| p.death.is_infinite());
    let mut births: Vec<f64> = inf.iter().map(|p| p.birth).collect();
    births.sort_by(f64::total_cmp);
    (fin, births)
}

/// Bottleneck distance between the infinite parts: sorted births pair up.
fn essential_cost(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Whether some matching of finite points has every cost `≤ r`.
///
/// Points farther than `r` from the diagonal must be matched across. A
/// matching saturating those of `a` and one saturating those of `b` can be
/// combined into one saturating both (Mendelsohn-Dulmage), so two one-sided
/// matchings decide feasibility.
fn finite_feasible(a: &[DiagramPoint], b: &[DiagramPoint], r: f64) -> bool {
    fn saturates(from: &[DiagramPoint], to: &[DiagramPoint], r: f64) -> bool {
        let adj: Vec<Vec<usize>> = from
            .iter()
            .filter(|p| p.half_persistence() > r)
            .map(|p| {
                to.iter()
                    .enumerate()
                    .filter(|(_, q)| p.linf(q) <= r)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        if adj.iter().any(Vec::is_empty) {
            return false;
        }
        max_matching(&adj, to.len()) == adj.len()
    }
    saturates(a, b, r) && saturates(b, a, r)
}

/// Whether the bottleneck distance between two point sets is at most `r`.
pub fn bottleneck_at_most(a: &[DiagramPoint], b: &[DiagramPoint], r: f64) -> bool {
    let (fa, ia) = split_infinite(a);
    let (fb, ib) = split_infinite(b);
    if ia.len() != ib.len() {
        return false;
    }
    essential_cost(&ia, &ib) <= r && finite_feasible(&fa, &fb, r)
}

/// Bottleneck distance between two multisets of diagram points.
pub fn bottleneck_points(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    let (fa, ia) = split_infinite(a);
    let (fb, ib) = split_infinite(b);
    if ia.len() != ib.len() {
        return f64::INFINITY;
    }
    let essential = essential_cost(&ia, &ib);

    let mut candidates: Vec<f64> = Vec::with_capacity(fa.len() * fb.len() + fa.len() + fb.len() + 1);
    candidates.push(0.0);
    candidates.extend(fa.iter().chain(&fb).map(DiagramPoint::half_persistence));
    for p in &fa {
        candidates.extend(fb.iter().map(|q| p.linf(q)));
    }
    // nothing below the essential cost can win
    candidates.retain(|&c| c >= essential);
    candidates.push(essential);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // every point to the diagonal is always feasible, so the search succeeds
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if finite_feasible(&fa, &fb, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

pub fn bottleneck_distance(d1: &Barcode, d2: &Barcode, dim: usize) -> f64 {
    bottleneck_points(&diagram(d1, dim), &diagram(d2, dim))
}

/// Number of bars of `p`, each shrunk by `delta` at both ends, containing `[s, t]`.
fn eroded_count(p: &[DiagramPoint], delta: f64, s: f64, t: f64) -> usize {
    p.iter()
        .filter(|k| k.birth + delta <= s && k.death - delta >= t)
        .count()
}

fn count(p: &[DiagramPoint], s: f64, t: f64) -> usize {
    p.iter().filter(|k| k.birth <= s && k.death >= t).count()
}

/// Checks `g_P(ε, α + δ) ≤ g_Q(ε, α)` for all `ε` and `α ≥ 0`.
///
/// A violation at `(s, t) = (ε - α, ε + α)` persists when `s` is lowered to
/// the largest eroded birth and `t` raised to the smallest eroded death among
/// the bars counted on the left, so only those critical pairs are checked.
fn dominated(p: &[DiagramPoint], q: &[DiagramPoint], delta: f64) -> bool {
    for i in p {
        let s = i.birth + delta;
        for j in p {
            let t = j.death - delta;
            if s <= t && eroded_count(p, delta, s, t) > count(q, s, t) {
                return false;
            }
        }
    }
    true
}

fn erosion_feasible(a: &[DiagramPoint], b: &[DiagramPoint], delta: f64) -> bool {
    dominated(a, b, delta) && dominated(b, a, delta)
}

/// Erosion distance: the infimum `δ ≥ 0` for which each rank function,
/// eroded by `δ`, is dominated by the other.
///
/// Feasibility only changes where two endpoints differ by `δ` or `2δ`, so the
/// infimum is one of those values. It is attained either at the candidate
/// itself or on the open interval just above it.
pub fn erosion_points(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    let ninf = |p: &[DiagramPoint]| p.iter().filter(|k| k.death.is_infinite()).count();
    if ninf(a) != ninf(b) {
        return f64::INFINITY;
    }
    let endpoints: Vec<f64> = a
        .iter()
        .chain(b)
        .flat_map(|k| [k.birth, k.death])
        .filter(|x| x.is_finite())
        .collect();
    let mut candidates = vec![0.0];
    for (i, x) in endpoints.iter().enumerate() {
        for y in &endpoints[i + 1..] {
            let d = (x - y).abs();
            candidates.push(d);
            candidates.push(d / 2.0);
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let last = *candidates.last().unwrap();
    candidates.push(last + 1.0);

    let feasible_from = |k: usize| -> bool {
        erosion_feasible(a, b, candidates[k])
            || (k + 1 < candidates.len()
                && erosion_feasible(a, b, 0.5 * (candidates[k] + candidates[k + 1])))
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible_from(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

pub fn erosion_distance(d1: &Barcode, d2: &Barcode, dim: usize) -> f64 {
    erosion_points(&diagram(d1, dim), &diagram(d2, dim))
}

fn check_grids(x: &BarcodeSeries, y: &BarcodeSeries) -> Result<()> {
    if x.times() != y.times() {
        return invalid("barcode series are sampled at different times");
    }
    Ok(())
}

/// Largest per-time bottleneck distance.
pub fn sup_bottleneck(x: &BarcodeSeries, y: &BarcodeSeries, dim: usize) -> Result<f64> {
    check_grids(x, y)?;
    let mut best = 0.0;
    for (bx, by) in x.barcodes().iter().zip(y.barcodes()) {
        let (a, b) = (diagram(bx, dim), diagram(by, dim));
        // one matching settles most slices
        if bottleneck_at_most(&a, &b, best) {
            continue;
        }
        best = bottleneck_points(&a, &b);
        if best.is_infinite() {
            break;
        }
    }
    Ok(best)
}

/// Per-time bottleneck distances aggregated with exponent `p ∈ [1, ∞]`.
pub fn p_bottleneck(x: &BarcodeSeries, y: &BarcodeSeries, dim: usize, p: f64) -> Result<f64> {
    check_grids(x, y)?;
    if p.is_infinite() {
        return sup_bottleneck(x, y, dim);
    }
    let per_time: Vec<f64> = x
        .barcodes()
        .iter()
        .zip(y.barcodes())
        .map(|(bx, by)| bottleneck_distance(bx, by, dim))
        .collect();
    time_aggregate(&per_time, x.times(), p)
}
