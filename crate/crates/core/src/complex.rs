//! Vietoris-Rips filtrations up to dimension two, plus a brute-force Betti
//! number oracle built from boundary-matrix ranks over GF(2).

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metric::DistanceMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex {
    /// Sorted vertex indices; one, two or three of them.
    pub vertices: Vec<usize>,
    /// Scale at which the simplex enters the filtration.
    pub value: f64,
}

impl Simplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Codimension-one faces, in lexicographic order.
    pub fn facets(&self) -> Vec<Vec<usize>> {
        if self.vertices.len() < 2 {
            return Vec::new();
        }
        (0..self.vertices.len())
            .rev()
            .map(|skip| {
                self.vertices
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect()
    }

    /// Filtration order: value, then dimension, then vertices.
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.vertices.len().cmp(&other.vertices.len()))
            .then_with(|| self.vertices.cmp(&other.vertices))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_scale: f64,
    max_dim: usize,
}

impl Filtration {
    /// Wraps simplices without checking the ordering; see [`Filtration::validate`].
    pub fn from_parts(simplices: Vec<Simplex>, max_scale: f64, max_dim: usize) -> Self {
        Self {
            simplices,
            max_scale,
            max_dim,
        }
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn max_scale(&self) -> f64 {
        self.max_scale
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Checks that every face precedes its cofaces, that values respect
    /// faces and stay below `max_scale`, and that no simplex is repeated.
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashMap<&[usize], f64> = HashMap::with_capacity(self.simplices.len());
        for s in &self.simplices {
            if s.vertices.is_empty() || s.vertices.len() > 3 {
                return invalid(format!("unsupported simplex {:?}", s.vertices));
            }
            if s.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("simplex {:?} is not sorted", s.vertices));
            }
            if s.value > self.max_scale {
                return invalid(format!("simplex value {} exceeds max scale", s.value));
            }
            for face in s.facets() {
                match seen.get(face.as_slice()) {
                    Some(v) if *v <= s.value => {}
                    Some(_) => {
                        return invalid(format!("face {face:?} enters after {:?}", s.vertices))
                    }
                    None => {
                        return invalid(format!(
                            "face {face:?} missing before {:?}",
                            s.vertices
                        ))
                    }
                }
            }
            if seen.insert(&s.vertices, s.value).is_some() {
                return invalid(format!("duplicate simplex {:?}", s.vertices));
            }
        }
        Ok(())
    }
}

/// Vietoris-Rips filtration truncated at `max_scale` and dimension `max_dim`.
pub fn build_vr_filtration(dm: &DistanceMatrix, max_scale: f64, max_dim: usize) -> Result<Filtration> {
    if max_dim > 2 {
        return invalid(format!("max_dim {max_dim} exceeds 2"));
    }
    if !(max_scale >= 0.0) {
        return invalid("max_scale must be non-negative");
    }
    let n = dm.len();
    let mut simplices: Vec<Simplex> = (0..n)
        .map(|v| Simplex {
            vertices: vec![v],
            value: 0.0,
        })
        .collect();
    if max_dim >= 1 {
        for i in 0..n {
            for j in i + 1..n {
                let d = dm.get(i, j);
                if d <= max_scale {
                    simplices.push(Simplex {
                        vertices: vec![i, j],
                        value: d,
                    });
                }
            }
        }
    }
    if max_dim >= 2 {
        for i in 0..n {
            for j in i + 1..n {
                let dij = dm.get(i, j);
                if dij > max_scale {
                    continue;
                }
                for k in j + 1..n {
                    let value = dij.max(dm.get(i, k)).max(dm.get(j, k));
                    if value <= max_scale {
                        simplices.push(Simplex {
                            vertices: vec![i, j, k],
                            value,
                        });
                    }
                }
            }
        }
    }
    simplices.sort_by(Simplex::filtration_cmp);
    Ok(Filtration {
        simplices,
        max_scale,
        max_dim,
    })
}

/// Rank over GF(2) of the given columns, each a list of row indices.
fn gf2_rank(columns: &[Vec<usize>], rows: usize) -> usize {
    let words = rows.div_ceil(64);
    let mut pivots: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut rank = 0;
    for col in columns {
        let mut bits = vec![0u64; words];
        for &r in col {
            bits[r / 64] ^= 1 << (r % 64);
        }
        loop {
            let Some(top) = highest_bit(&bits) else { break };
            match pivots.get(&top) {
                Some(p) => bits.iter_mut().zip(p).for_each(|(a, b)| *a ^= b),
                None => {
                    pivots.insert(top, bits);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

fn highest_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// Betti numbers `(β0, β1)` of the Rips complex at scale `eps`, computed
/// directly from boundary ranks. Quadratic in the number of edges; meant for
/// small inputs and cross-checks. `β1` is reported as 0 when `max_dim < 1`;
/// with `max_dim == 1` no triangles are added.
pub fn betti_numbers_at(dm: &DistanceMatrix, eps: f64, max_dim: usize) -> Result<(usize, usize)> {
    if !(eps >= 0.0) {
        return invalid("scale must be non-negative");
    }
    let n = dm.len();
    let mut edges = Vec::new();
    let mut edge_index = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            if dm.get(i, j) <= eps {
                edge_index.insert((i, j), edges.len());
                edges.push((i, j));
            }
        }
    }
    let d1: Vec<Vec<usize>> = edges.iter().map(|&(i, j)| vec![i, j]).collect();
    let rank1 = gf2_rank(&d1, n);
    let beta0 = n - rank1;
    if max_dim < 1 {
        return Ok((beta0, 0));
    }
    let mut d2 = Vec::new();
    if max_dim >= 2 {
        for (&(i, j), &ij) in &edge_index {
            for k in j + 1..n {
                if let (Some(&ik), Some(&jk)) = (edge_index.get(&(i, k)), edge_index.get(&(j, k))) {
                    d2.push(vec![ij, ik, jk]);
                }
            }
        }
    }
    let rank2 = gf2_rank(&d2, edges.len());
    Ok((beta0, edges.len() - rank1 - rank2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{pairwise_distances, PointCloud};

    fn square() -> DistanceMatrix {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        pairwise_distances(&PointCloud::euclidean(pts).unwrap()).unwrap()
    }

    fn uniform(n: usize, d: f64) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |_, _| d)
    }

    fn count_dims(f: &Filtration) -> [usize; 3] {
        let mut c = [0; 3];
        for s in f.simplices() {
            c[s.dim()] += 1;
        }
        c
    }

    #[test]
    fn single_vertex() {
        let f = build_vr_filtration(&uniform(1, 0.0), 1.0, 2).unwrap();
        assert_eq!(count_dims(&f), [1, 0, 0]);
    }

    #[test]
    fn equilateral_triangle() {
        let f = build_vr_filtration(&uniform(3, 1.0), 1.0, 2).unwrap();
        assert_eq!(count_dims(&f), [3, 3, 1]);
        assert!(f.simplices()[3..].iter().all(|s| s.value == 1.0));
        f.validate().unwrap();
    }

    #[test]
    fn square_has_no_triangles_below_diagonal() {
        let f = build_vr_filtration(&square(), 1.2, 2).unwrap();
        assert_eq!(count_dims(&f), [4, 4, 0]);
    }

    #[test]
    fn complete_counts() {
        let n = 7;
        let f = build_vr_filtration(&uniform(n, 0.5), 1.0, 2).unwrap();
        assert_eq!(count_dims(&f), [n, n * (n - 1) / 2, n * (n - 1) * (n - 2) / 6]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_vr_filtration(&uniform(2, 1.0), 1.0, 3).is_err());
        assert!(build_vr_filtration(&uniform(2, 1.0), -1.0, 1).is_err());
    }

    #[test]
    fn validate_catches_misordering() {
        let f = Filtration::from_parts(
            vec![
                Simplex { vertices: vec![0], value: 0.0 },
                Simplex { vertices: vec![0, 1], value: 1.0 },
                Simplex { vertices: vec![1], value: 0.0 },
            ],
            1.0,
            1,
        );
        assert!(f.validate().is_err());
    }

    #[test]
    fn betti_examples() {
        let delta = 0.1;
        let eps = 1.0 + delta / 2.0;
        assert_eq!(betti_numbers_at(&uniform(4, 1.0), eps, 2).unwrap().0, 1);
        assert_eq!(betti_numbers_at(&uniform(4, 1.0 + delta), eps, 2).unwrap().0, 4);
        assert_eq!(betti_numbers_at(&square(), 1.0, 2).unwrap(), (1, 1));
        assert_eq!(betti_numbers_at(&square(), 1.5, 2).unwrap(), (1, 0));
        assert_eq!(betti_numbers_at(&square(), 0.5, 2).unwrap(), (4, 0));
    }

    #[test]
    fn beta0_settles_at_diameter() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![(i * i) as f64 * 0.3, i as f64]).collect();
        let dm = pairwise_distances(&PointCloud::euclidean(pts).unwrap()).unwrap();
        let mut last = usize::MAX;
        for k in 0..=40 {
            let eps = dm.diameter() * k as f64 / 40.0;
            let b0 = betti_numbers_at(&dm, eps, 1).unwrap().0;
            assert!(b0 <= last);
            last = b0;
        }
        assert_eq!(last, 1);
    }
}
