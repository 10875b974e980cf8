//! Finite metric spaces.
//!
//! A [`PointCloud`] is a finite sample of a metric space: coordinate vectors
//! together with the metric used to compare them. Euclidean and flat-torus
//! metrics are supported. Everything downstream (Rips filtrations, Hausdorff
//! bounds) consumes a [`DistanceMatrix`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricKind {
    Euclidean,
    /// Flat torus with one period per axis.
    Toroidal(Vec<f64>),
}

impl MetricKind {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            MetricKind::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            MetricKind::Toroidal(periods) => a
                .iter()
                .zip(b)
                .zip(periods)
                .map(|((x, y), p)| {
                    let d = wrapped_difference(*x, *y, *p);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Shortest separation of two coordinates on a circle of circumference `period`.
pub fn wrapped_difference(x: f64, y: f64, period: f64) -> f64 {
    let d = (x - y).abs() % period;
    d.min(period - d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    metric: MetricKind,
}

impl PointCloud {
    /// Builds a cloud, checking that every point has the same dimension and
    /// that toroidal coordinates lie in `[0, period)`.
    pub fn new(points: Vec<Vec<f64>>, metric: MetricKind) -> Result<Self> {
        if let Some(first) = points.first() {
            let dim = first.len();
            if dim == 0 {
                return invalid("points must have dimension at least 1");
            }
            if points.iter().any(|p| p.len() != dim) {
                return invalid("points have differing dimensions");
            }
            if let MetricKind::Toroidal(periods) = &metric {
                if periods.len() != dim {
                    return invalid(format!(
                        "toroidal metric has {} periods for dimension {dim}",
                        periods.len()
                    ));
                }
                if periods.iter().any(|p| !(*p > 0.0)) {
                    return invalid("toroidal periods must be positive");
                }
                for p in &points {
                    for (x, period) in p.iter().zip(periods) {
                        if !(0.0..*period).contains(x) {
                            return invalid(format!("coordinate {x} outside [0, {period})"));
                        }
                    }
                }
            }
        }
        Ok(Self { points, metric })
    }

    pub fn euclidean(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(points, MetricKind::Euclidean)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn metric(&self) -> &MetricKind {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient dimension, or `None` for an empty cloud.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Vec::len)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.distance(&self.points[i], &self.points[j])
    }
}

/// A sequence of point clouds sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingPointCloud {
    times: Vec<f64>,
    clouds: Vec<PointCloud>,
}

impl TimeVaryingPointCloud {
    pub fn new(times: Vec<f64>, clouds: Vec<PointCloud>) -> Result<Self> {
        if times.is_empty() || times.len() != clouds.len() {
            return invalid(format!(
                "need matching non-empty times and clouds, got {} and {}",
                times.len(),
                clouds.len()
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("times must be strictly increasing");
        }
        let mut dims = clouds.iter().filter_map(PointCloud::dim);
        if let Some(d) = dims.next() {
            if dims.any(|e| e != d) {
                return invalid("clouds have differing dimensions");
            }
        }
        Ok(Self { times, clouds })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn clouds(&self) -> &[PointCloud] {
        &self.clouds
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Dense symmetric matrix of pairwise distances, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, a zero diagonal and non-negative entries.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("distance matrix must be square");
        }
        let entries: Vec<f64> = rows.into_iter().flatten().collect();
        let dm = Self { n, entries };
        for i in 0..n {
            if dm.get(i, i) != 0.0 {
                return invalid(format!("nonzero diagonal entry at {i}"));
            }
            for j in 0..i {
                let d = dm.get(i, j);
                if !(d >= 0.0) {
                    return invalid(format!("entry ({i},{j}) = {d} is not a distance"));
                }
                if d != dm.get(j, i) {
                    return invalid(format!("asymmetric entry at ({i},{j})"));
                }
            }
        }
        Ok(dm)
    }

    /// Fills the upper triangle from `f(i, j)` with `i < j` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Self { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.n.max(1)).take(self.n)
    }

    /// Largest entry (0 for fewer than two points).
    pub fn diameter(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

pub fn pairwise_distances(cloud: &PointCloud) -> Result<DistanceMatrix> {
    if cloud.is_empty() {
        return invalid("cannot compute distances of an empty cloud");
    }
    Ok(DistanceMatrix::from_fn(cloud.len(), |i, j| cloud.distance(i, j)))
}

fn check_comparable(x: &PointCloud, y: &PointCloud) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return invalid("Hausdorff distance needs non-empty clouds");
    }
    if x.dim() != y.dim() {
        return invalid("clouds have different dimensions");
    }
    if x.metric() != y.metric() {
        return invalid("clouds use different metrics");
    }
    Ok(())
}

fn directed_hausdorff(from: &PointCloud, to: &PointCloud) -> f64 {
    let metric = from.metric();
    from.points()
        .iter()
        .map(|p| {
            to.points()
                .iter()
                .map(|q| metric.distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two clouds living in the same ambient space.
pub fn hausdorff_distance(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    check_comparable(x, y)?;
    Ok(directed_hausdorff(x, y).max(directed_hausdorff(y, x)))
}

/// Upper bound on the Gromov-Hausdorff distance between `x` and `y`.
///
/// The clouds are taken as already embedded in a common metric space, so the
/// Hausdorff distance there bounds the Gromov-Hausdorff distance from above.
/// The exact Gromov-Hausdorff distance is never computed.
pub fn gh_upper_bound(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    hausdorff_distance(x, y)
}

/// Aggregates a per-time series of non-negative values into one number.
///
/// `p = ∞` gives the maximum. For finite `p ≥ 1` the result is the left
/// Riemann sum `(Σ w_k v_k^p)^(1/p)` where `w_k = t_{k+1} - t_k`; the last
/// sample reuses the previous spacing and a single sample has weight 1.
pub fn time_aggregate(values: &[f64], times: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return invalid("time_aggregate needs at least one sample");
    }
    if values.len() != times.len() {
        return invalid(format!(
            "{} values for {} time stamps",
            values.len(),
            times.len()
        ));
    }
    if !(p >= 1.0) {
        return invalid(format!("exponent p = {p} must be at least 1"));
    }
    if values.iter().any(|v| !(*v >= 0.0)) {
        return invalid("aggregated values must be non-negative");
    }
    if p.is_infinite() {
        return Ok(values.iter().copied().fold(0.0, f64::max));
    }
    let n = times.len();
    let weight = |k: usize| -> f64 {
        match n {
            1 => 1.0,
            _ if k + 1 < n => times[k + 1] - times[k],
            _ => times[n - 1] - times[n - 2],
        }
    };
    let sum: f64 = values
        .iter()
        .enumerate()
        .map(|(k, v)| weight(k) * v.powf(p))
        .sum();
    Ok(sum.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::euclidean(xs.iter().map(|x| vec![*x]).collect()).unwrap()
    }

    #[test]
    fn single_point_gives_zero_matrix() {
        let dm = pairwise_distances(&line(&[2.5])).unwrap();
        assert_eq!(dm.len(), 1);
        assert_eq!(dm.get(0, 0), 0.0);
    }

    #[test]
    fn euclidean_line_distance() {
        let dm = pairwise_distances(&line(&[0.0, 3.0])).unwrap();
        assert_eq!(dm.get(0, 1), 3.0);
        assert_eq!(dm.get(1, 0), 3.0);
    }

    #[test]
    fn toroidal_distance_wraps() {
        let cloud = PointCloud::new(
            vec![vec![0.1], vec![0.9]],
            MetricKind::Toroidal(vec![1.0]),
        )
        .unwrap();
        let dm = pairwise_distances(&cloud).unwrap();
        assert!((dm.get(0, 1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_cloud_is_rejected() {
        let cloud = PointCloud::euclidean(vec![]).unwrap();
        assert!(pairwise_distances(&cloud).is_err());
    }

    #[test]
    fn ragged_and_out_of_range_points_are_rejected() {
        assert!(PointCloud::euclidean(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(PointCloud::new(vec![vec![1.0]], MetricKind::Toroidal(vec![1.0])).is_err());
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff_distance(&line(&[0.0, 1.0]), &line(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&line(&[0.0]), &line(&[3.0])).unwrap(), 3.0);
        assert_eq!(hausdorff_distance(&line(&[0.0, 1.0]), &line(&[0.0, 2.0])).unwrap(), 1.0);
        assert_eq!(gh_upper_bound(&line(&[0.0, 1.0]), &line(&[0.0, 2.0])).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_rejects_mismatch() {
        let plane = PointCloud::euclidean(vec![vec![0.0, 0.0]]).unwrap();
        assert!(hausdorff_distance(&line(&[0.0]), &plane).is_err());
        let torus = PointCloud::new(vec![vec![0.0]], MetricKind::Toroidal(vec![1.0])).unwrap();
        assert!(hausdorff_distance(&line(&[0.0]), &torus).is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(time_aggregate(&[0.0, 0.0], &[0.0, 1.0], 2.0).unwrap(), 0.0);
        assert_eq!(
            time_aggregate(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0], f64::INFINITY).unwrap(),
            3.0
        );
        let v = time_aggregate(&[1.0, 1.0], &[0.0, 1.0], 2.0).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        // single sample: weight 1, independent of p
        for p in [1.0, 2.0, 7.5, f64::INFINITY] {
            assert!((time_aggregate(&[0.4], &[3.0], p).unwrap() - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_errors() {
        assert!(time_aggregate(&[], &[], 1.0).is_err());
        assert!(time_aggregate(&[1.0], &[0.0], 0.5).is_err());
        assert!(time_aggregate(&[1.0], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn time_varying_cloud_invariants() {
        let a = line(&[0.0]);
        let b = PointCloud::euclidean(vec![vec![0.0, 0.0]]).unwrap();
        assert!(TimeVaryingPointCloud::new(vec![0.0, 1.0], vec![a.clone(), a.clone()]).is_ok());
        assert!(TimeVaryingPointCloud::new(vec![1.0, 1.0], vec![a.clone(), a.clone()]).is_err());
        assert!(TimeVaryingPointCloud::new(vec![0.0, 1.0], vec![a.clone(), b]).is_err());
        assert!(TimeVaryingPointCloud::new(vec![], vec![]).is_err());
    }

    fn cloud_strategy(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.0..1.0f64, dim), 1..6)
    }

    proptest! {
        #[test]
        fn triangle_inequality(pts in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 3),
                               toroidal in any::<bool>()) {
            let metric = if toroidal { MetricKind::Toroidal(vec![1.0, 1.0]) } else { MetricKind::Euclidean };
            let cloud = PointCloud::new(pts, metric).unwrap();
            let dm = pairwise_distances(&cloud).unwrap();
            prop_assert!(dm.get(0, 2) <= dm.get(0, 1) + dm.get(1, 2) + 1e-12);
        }

        #[test]
        fn hausdorff_is_a_metric(x in cloud_strategy(2), y in cloud_strategy(2), z in cloud_strategy(2)) {
            let (x, y, z) = (PointCloud::euclidean(x).unwrap(), PointCloud::euclidean(y).unwrap(), PointCloud::euclidean(z).unwrap());
            let xy = hausdorff_distance(&x, &y).unwrap();
            prop_assert_eq!(xy, hausdorff_distance(&y, &x).unwrap());
            prop_assert_eq!(hausdorff_distance(&x, &x).unwrap(), 0.0);
            let xz = hausdorff_distance(&x, &z).unwrap();
            let zy = hausdorff_distance(&z, &y).unwrap();
            prop_assert!(xy <= xz + zy + 1e-12);
            prop_assert!(gh_upper_bound(&x, &y).unwrap() >= 0.0);
        }
    }
}
