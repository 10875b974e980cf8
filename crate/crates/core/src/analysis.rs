//! Feature-vector analytics: PCA, Euclidean distance matrices, K-medoids
//! clustering (PAM) and accuracy scoring against known labels.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metric::DistanceMatrix;

/// One feature vector per simulation, labelled by the noise value that
/// generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return invalid("feature matrix needs at least one row");
        }
        if rows.len() != labels.len() {
            return invalid(format!("{} rows but {} labels", rows.len(), labels.len()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return invalid("feature rows have differing lengths");
        }
        Ok(Self { rows, labels })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }
}

/// Projects the centered rows onto their top `k` principal directions.
///
/// Works through the `N × N` Gram matrix, so the cost is driven by the
/// number of rows rather than the (possibly very long) feature length. Each
/// direction is signed so that its largest-magnitude component is positive.
/// Returns the projected matrix and the explained-variance ratio of each
/// kept component.
pub fn pca_reduce(fm: &FeatureMatrix, k: usize) -> Result<(FeatureMatrix, Vec<f64>)> {
    let (n, d) = (fm.n_rows(), fm.n_cols());
    if k > n.min(d) {
        return invalid(format!("cannot keep {k} components of a {n}x{d} matrix"));
    }
    let mut mean = vec![0.0; d];
    for r in fm.rows() {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = fm
        .rows()
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    let gram = DMatrix::from_fn(n, n, |i, j| {
        centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>()
    });
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalue = |i: usize| eig.eigenvalues[i].max(0.0);
    let total: f64 = (0..n).map(eigenvalue).sum();

    let mut projected = vec![Vec::with_capacity(k); n];
    let mut ratios = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let lambda = eigenvalue(c);
        let sigma = lambda.sqrt();
        let u = eig.eigenvectors.column(c);
        // right singular direction v = Xᵀu / σ; only its sign matters here
        let mut sign = 1.0;
        if sigma > 0.0 {
            let mut best = 0.0f64;
            for j in 0..d {
                let vj: f64 = (0..n).map(|i| centered[i][j] * u[i]).sum();
                if vj.abs() > best.abs() {
                    best = vj;
                }
            }
            if best < 0.0 {
                sign = -1.0;
            }
        }
        for i in 0..n {
            // score of row i is (X v)_i = σ u_i
            projected[i].push(if sigma > 0.0 { sign * sigma * u[i] } else { 0.0 });
        }
        ratios.push(if total > 0.0 { lambda / total } else { 0.0 });
    }
    Ok((FeatureMatrix::new(projected, fm.labels.clone())?, ratios))
}

pub fn euclidean_distance_matrix(fm: &FeatureMatrix) -> DistanceMatrix {
    let rows = fm.rows();
    DistanceMatrix::from_fn(rows.len(), |i, j| {
        rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Medoid row indices in ascending order; cluster `c` has medoid `medoid_indices[c]`.
    pub medoid_indices: Vec<usize>,
    /// Cluster id of every row.
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Sum of distances from every row to its medoid.
    pub cost: f64,
}

/// Nearest medoid for every point; ties go to the lowest medoid position.
fn assign(dm: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assignment = (0..dm.len())
        .map(|j| {
            let (c, d) = medoids
                .iter()
                .enumerate()
                .map(|(c, &m)| (c, dm.get(m, j)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            cost += d;
            c
        })
        .collect();
    (assignment, cost)
}

fn total_cost(dm: &DistanceMatrix, medoids: &[usize]) -> f64 {
    assign(dm, medoids).1
}

fn build(dm: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = dm.len();
    let first = (0..n)
        .map(|i| (i, dm.row(i).iter().sum::<f64>()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    let mut medoids = vec![first];
    let mut nearest: Vec<f64> = dm.row(first).to_vec();
    while medoids.len() < k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for i in (0..n).filter(|i| !medoids.contains(i)) {
            let gain: f64 = (0..n).map(|j| (nearest[j] - dm.get(i, j)).max(0.0)).sum();
            if gain > best.1 {
                best = (i, gain);
            }
        }
        let m = best.0;
        medoids.push(m);
        for j in 0..n {
            nearest[j] = nearest[j].min(dm.get(m, j));
        }
    }
    medoids
}

/// Best-improvement SWAP until no swap lowers the total cost.
fn swap(dm: &DistanceMatrix, medoids: &mut [usize]) {
    let n = dm.len();
    let k = medoids.len();
    loop {
        // nearest and second-nearest medoid distance per point
        let mut near = vec![(usize::MAX, f64::INFINITY); n];
        let mut second = vec![f64::INFINITY; n];
        for j in 0..n {
            for (c, &m) in medoids.iter().enumerate() {
                let d = dm.get(m, j);
                if d < near[j].1 {
                    second[j] = near[j].1;
                    near[j] = (c, d);
                } else if d < second[j] {
                    second[j] = d;
                }
            }
        }
        let mut best = (0.0, usize::MAX, usize::MAX);
        for c in 0..k {
            for h in (0..n).filter(|h| !medoids.contains(h)) {
                let delta: f64 = (0..n)
                    .map(|j| {
                        let dh = dm.get(h, j);
                        let new = if near[j].0 == c {
                            second[j].min(dh)
                        } else {
                            near[j].1.min(dh)
                        };
                        new - near[j].1
                    })
                    .sum();
                if delta < best.0 {
                    best = (delta, c, h);
                }
            }
        }
        // guard against rounding loops on zero-gain swaps
        if best.1 == usize::MAX || best.0 > -1e-12 * (1.0 + total_cost(dm, medoids)) {
            return;
        }
        medoids[best.1] = best.2;
    }
}

fn finish(dm: &DistanceMatrix, mut medoids: Vec<usize>) -> ClusterResult {
    medoids.sort_unstable();
    let (assignment, cost) = assign(dm, &medoids);
    ClusterResult {
        k: medoids.len(),
        medoid_indices: medoids,
        assignment,
        cost,
    }
}

/// K-medoids by PAM: greedy BUILD then best-improvement SWAP.
///
/// Deterministic. `restarts` additional runs start SWAP from random medoid
/// sets drawn from `seed`; the lowest-cost result wins, earlier runs winning
/// ties.
pub fn k_medoids_pam_with(dm: &DistanceMatrix, k: usize, seed: u64, restarts: usize) -> Result<ClusterResult> {
    let n = dm.len();
    if k == 0 || k > n {
        return invalid(format!("need 1 <= K <= {n}, got K = {k}"));
    }
    let mut medoids = build(dm, k);
    swap(dm, &mut medoids);
    let mut best = finish(dm, medoids);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        let mut start: Vec<usize> = sample(&mut rng, n, k).into_vec();
        swap(dm, &mut start);
        let candidate = finish(dm, start);
        if candidate.cost < best.cost {
            best = candidate;
        }
    }
    Ok(best)
}

pub fn k_medoids_pam(dm: &DistanceMatrix, k: usize, seed: u64) -> Result<ClusterResult> {
    k_medoids_pam_with(dm, k, seed, 0)
}

/// Rows are true labels, columns are the distinct labels of the medoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_labels: Vec<f64>,
    pub medoid_labels: Vec<f64>,
    pub counts: Vec<Vec<usize>>,
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn position(values: &[f64], x: f64) -> usize {
    values
        .binary_search_by(|v| v.total_cmp(&x))
        .expect("label present")
}

/// Scores a clustering: each cluster takes the label of its medoid, clusters
/// sharing a medoid label are merged, and accuracy is the fraction of rows
/// whose own label matches the label of their cluster.
pub fn clustering_accuracy(cr: &ClusterResult, labels: &[f64]) -> Result<(f64, Confusion)> {
    if labels.len() != cr.assignment.len() {
        return invalid(format!(
            "{} labels for {} clustered rows",
            labels.len(),
            cr.assignment.len()
        ));
    }
    let medoid_label: Vec<f64> = cr.medoid_indices.iter().map(|&m| labels[m]).collect();
    let true_labels = distinct(labels.iter().copied());
    let medoid_labels = distinct(medoid_label.iter().copied());
    let mut counts = vec![vec![0; medoid_labels.len()]; true_labels.len()];
    let mut correct = 0;
    for (row, &c) in cr.assignment.iter().enumerate() {
        let predicted = medoid_label[c];
        if predicted == labels[row] {
            correct += 1;
        }
        counts[position(&true_labels, labels[row])][position(&medoid_labels, predicted)] += 1;
    }
    let accuracy = correct as f64 / labels.len().max(1) as f64;
    Ok((
        accuracy,
        Confusion {
            true_labels,
            medoid_labels,
            counts,
        },
    ))
}
