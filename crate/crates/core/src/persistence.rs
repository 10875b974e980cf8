//! Persistence barcodes and the rank invariant.
//!
//! Two routes compute the barcode of a Rips filtration:
//!
//! * [`compute_ph`] takes an explicit [`Filtration`] and reduces its boundary
//!   matrix column by column over GF(2). Dimension zero uses union-find with
//!   the elder rule.
//! * [`rips_barcode`] works straight from a distance matrix: union-find for
//!   dimension zero, then reduces the edge-to-triangle coboundary matrix with
//!   the spanning-tree edges cleared. It never materializes the triangle list
//!   and is the route the experiment pipeline uses.
//!
//! Both produce the same intervals; the tests check this on random clouds.
//!
//! Bars are closed intervals `[birth, death]`. A bar contributes to the rank
//! of `V(i) → V(j)` when `birth ≤ i` and `death ≥ j`.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::complex::Filtration;
use crate::error::{invalid, Result};
use crate::metric::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceInterval {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for classes alive at the end of the filtration.
    pub death: f64,
}

impl PersistenceInterval {
    pub fn new(dim: usize, birth: f64, death: f64) -> Self {
        Self { dim, birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_infinite(&self) -> bool {
        self.death.is_infinite()
    }

    /// Closed containment of `[i, j]`.
    pub fn contains(&self, i: f64, j: f64) -> bool {
        self.birth <= i && self.death >= j
    }

    fn sort_cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    intervals: Vec<PersistenceInterval>,
    /// Largest scale the filtration was built to.
    max_scale: f64,
}

impl Barcode {
    /// Drops zero-length bars and sorts by `(dim, birth, death)`.
    pub fn new(intervals: impl IntoIterator<Item = PersistenceInterval>, max_scale: f64) -> Self {
        let mut intervals: Vec<_> = intervals
            .into_iter()
            .filter(|iv| iv.birth != iv.death)
            .collect();
        intervals.sort_by(PersistenceInterval::sort_cmp);
        Self {
            intervals,
            max_scale,
        }
    }

    /// Barcode of a single dimension from `(birth, death)` pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, f64)], max_scale: f64) -> Self {
        Self::new(
            pairs.iter().map(|&(b, d)| PersistenceInterval::new(dim, b, d)),
            max_scale,
        )
    }

    pub fn intervals(&self) -> &[PersistenceInterval] {
        &self.intervals
    }

    pub fn of_dim(&self, dim: usize) -> impl Iterator<Item = &PersistenceInterval> + '_ {
        self.intervals.iter().filter(move |iv| iv.dim == dim)
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Number of bars of dimension `dim` containing `[i, j]`.
pub fn rank_between(b: &Barcode, dim: usize, i: f64, j: f64) -> Result<usize> {
    if i > j {
        return invalid(format!("rank_between needs i <= j, got [{i}, {j}]"));
    }
    Ok(count_containing(b, dim, i, j))
}

fn count_containing(b: &Barcode, dim: usize, i: f64, j: f64) -> usize {
    b.of_dim(dim).filter(|iv| iv.contains(i, j)).count()
}

/// Rank of `V(ε-α) → V(ε+α)` for `α ≥ 0`. Bars shorter than `2α` never count.
pub fn rank_function(b: &Barcode, dim: usize, eps: f64, alpha: f64) -> usize {
    debug_assert!(alpha >= 0.0);
    count_containing(b, dim, eps - alpha, eps + alpha)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Elder-rule component tracking. `order[v]` ranks vertices by entry into
/// the filtration; edges must arrive in filtration order.
struct ComponentTracker {
    uf: UnionFind,
    birth: Vec<f64>,
    order: Vec<usize>,
}

impl ComponentTracker {
    fn new(birth: Vec<f64>, order: Vec<usize>) -> Self {
        Self {
            uf: UnionFind::new(birth.len()),
            birth,
            order,
        }
    }

    /// Adds an edge; on a merge returns the birth of the younger component.
    fn add_edge(&mut self, u: usize, v: usize) -> Option<f64> {
        let (ru, rv) = (self.uf.find(u), self.uf.find(v));
        if ru == rv {
            return None;
        }
        let younger_first = (self.birth[ru], self.order[ru]) > (self.birth[rv], self.order[rv]);
        let (young, old) = if younger_first { (ru, rv) } else { (rv, ru) };
        self.uf.parent[young] = old;
        Some(self.birth[young])
    }

    fn roots(&mut self) -> Vec<usize> {
        (0..self.birth.len()).filter(|&v| self.uf.find(v) == v).collect()
    }
}

/// Symmetric difference of two ascending lists.
fn add_columns<T: Copy, F: Fn(&T, &T) -> Ordering>(a: &[T], b: &[T], cmp: F) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match cmp(&a[i], &b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Barcode of an explicit filtration in dimensions 0 and 1.
///
/// Fails if the filtration lists a face after one of its cofaces.
pub fn compute_ph(f: &Filtration) -> Result<Barcode> {
    f.validate()?;
    let simplices = f.simplices();
    let mut index: HashMap<&[usize], usize> = HashMap::with_capacity(simplices.len());
    for (k, s) in simplices.iter().enumerate() {
        index.insert(&s.vertices, k);
    }

    let vertices: Vec<usize> = simplices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.dim() == 0)
        .map(|(k, _)| k)
        .collect();
    let n = vertices
        .iter()
        .map(|&k| simplices[k].vertices[0] + 1)
        .max()
        .unwrap_or(0);
    let mut birth = vec![f64::INFINITY; n];
    let mut order = vec![usize::MAX; n];
    for &k in &vertices {
        let v = simplices[k].vertices[0];
        birth[v] = simplices[k].value;
        order[v] = k;
    }
    // vertex labels need not be contiguous; absent labels stay isolated roots
    let present: Vec<bool> = order.iter().map(|&o| o != usize::MAX).collect();

    let mut intervals = Vec::new();
    let mut tracker = ComponentTracker::new(birth.clone(), order);
    let mut negative_edge = vec![false; simplices.len()];
    for (k, s) in simplices.iter().enumerate().filter(|(_, s)| s.dim() == 1) {
        if let Some(b) = tracker.add_edge(s.vertices[0], s.vertices[1]) {
            negative_edge[k] = true;
            intervals.push(PersistenceInterval::new(0, b, s.value));
        }
    }
    for r in tracker.roots() {
        if present[r] {
            intervals.push(PersistenceInterval::new(0, birth[r], f64::INFINITY));
        }
    }

    // reduce the triangle columns; rows are global simplex indices
    let mut pivot_of: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut paired_edge = vec![false; simplices.len()];
    for s in simplices.iter().filter(|s| s.dim() == 2) {
        let mut column: Vec<usize> = s
            .facets()
            .iter()
            .map(|face| index[face.as_slice()])
            .collect();
        column.sort_unstable();
        while let Some(&low) = column.last() {
            match pivot_of.get(&low) {
                Some(other) => column = add_columns(&column, other, usize::cmp),
                None => break,
            }
        }
        if let Some(&low) = column.last() {
            paired_edge[low] = true;
            intervals.push(PersistenceInterval::new(1, simplices[low].value, s.value));
            pivot_of.insert(low, column);
        }
    }
    for (k, s) in simplices.iter().enumerate() {
        if s.dim() == 1 && !negative_edge[k] && !paired_edge[k] {
            intervals.push(PersistenceInterval::new(1, s.value, f64::INFINITY));
        }
    }
    Ok(Barcode::new(intervals, f.max_scale()))
}

#[derive(Debug, Clone, Copy)]
struct Triangle {
    value: f64,
    key: u64,
}

impl Triangle {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.key.cmp(&other.key))
    }
}

/// Barcode of the Rips filtration of `dm` up to `max_scale`, in dimensions
/// `0..=max_dim` with `max_dim ≤ 1`.
///
/// H1 comes from the coboundary matrix: edge columns in reverse filtration
/// order, pivot = earliest coface. Spanning-tree edges are skipped since
/// their columns always reduce to zero.
pub fn rips_barcode(dm: &DistanceMatrix, max_scale: f64, max_dim: usize) -> Result<Barcode> {
    if max_dim > 1 {
        return invalid(format!("rips_barcode computes dimensions 0 and 1, got {max_dim}"));
    }
    if !(max_scale >= 0.0) {
        return invalid("max_scale must be non-negative");
    }
    let n = dm.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = dm.get(i, j);
            if d <= max_scale {
                edges.push((d, i, j));
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut intervals = Vec::with_capacity(n);
    let mut tracker = ComponentTracker::new(vec![0.0; n], (0..n).collect());
    let mut cycle_edges = Vec::new();
    for &(d, i, j) in &edges {
        match tracker.add_edge(i, j) {
            Some(b) => intervals.push(PersistenceInterval::new(0, b, d)),
            None => cycle_edges.push((d, i, j)),
        }
    }
    for _ in tracker.roots() {
        intervals.push(PersistenceInterval::new(0, 0.0, f64::INFINITY));
    }

    if max_dim >= 1 {
        let nn = n as u64;
        let pack = |a: usize, b: usize, c: usize| (a as u64 * nn + b as u64) * nn + c as u64;
        let coboundary = |d: f64, i: usize, j: usize| -> Vec<Triangle> {
            let mut col: Vec<Triangle> = (0..n)
                .filter(|&k| k != i && k != j)
                .filter_map(|k| {
                    let (dik, djk) = (dm.get(i, k), dm.get(j, k));
                    let value = d.max(dik).max(djk);
                    if value > max_scale {
                        return None;
                    }
                    let mut v = [i, j, k];
                    v.sort_unstable();
                    Some(Triangle {
                        value,
                        key: pack(v[0], v[1], v[2]),
                    })
                })
                .collect();
            col.sort_by(Triangle::cmp);
            col
        };
        let mut reduced: HashMap<u64, Vec<Triangle>> = HashMap::new();
        for &(d, i, j) in cycle_edges.iter().rev() {
            let mut column = coboundary(d, i, j);
            loop {
                let Some(pivot) = column.first() else {
                    intervals.push(PersistenceInterval::new(1, d, f64::INFINITY));
                    break;
                };
                match reduced.get(&pivot.key) {
                    Some(other) => column = add_columns(&column, other, Triangle::cmp),
                    None => {
                        intervals.push(PersistenceInterval::new(1, d, pivot.value));
                        reduced.insert(pivot.key, column);
                        break;
                    }
                }
            }
        }
    }
    Ok(Barcode::new(intervals, max_scale))
}
