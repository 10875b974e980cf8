//! Crocker plots, α-smoothed crocker plots and crocker stacks.
//!
//! Given one barcode per time slice, a crocker stack records
//!
//! ```text
//! f(t, ε, α) = rank( V_t(ε - α) → V_t(ε + α) )
//! ```
//!
//! on a grid of times, scales and smoothing values. The `α = 0` slice is the
//! ordinary crocker plot (Betti numbers over time and scale). Larger `α`
//! only keeps features that persist across the whole window, so the stack
//! is non-increasing in `α`.
//!
//! All values are evaluated on grid points only. A cell whose window reaches
//! past the scale the barcodes were computed to is *truncated*: bars still
//! alive at that point have death `+∞`, so the cell may overcount.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::persistence::{rank_function, Barcode};

/// Barcodes of a time-varying space, one per time stamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarcodeSeries {
    times: Vec<f64>,
    barcodes: Vec<Barcode>,
}

impl BarcodeSeries {
    pub fn new(times: Vec<f64>, barcodes: Vec<Barcode>) -> Result<Self> {
        if times.is_empty() || times.len() != barcodes.len() {
            return invalid(format!(
                "need matching non-empty times and barcodes, got {} and {}",
                times.len(),
                barcodes.len()
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("times must be strictly increasing");
        }
        Ok(Self { times, barcodes })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn barcodes(&self) -> &[Barcode] {
        &self.barcodes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Smallest computed scale over all slices.
    pub fn max_scale(&self) -> f64 {
        self.barcodes
            .iter()
            .map(Barcode::max_scale)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    epsilons: Vec<f64>,
    alphas: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(epsilons: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| *x >= 0.0);
        if epsilons.is_empty() || !ascending(&epsilons) {
            return invalid("epsilons must be non-empty, non-negative and strictly ascending");
        }
        if alphas.first() != Some(&0.0) || !ascending(&alphas) {
            return invalid("alphas must start at 0 and be strictly ascending");
        }
        Ok(Self { epsilons, alphas })
    }

    /// `count` equally spaced scales in `[0, max]` (inclusive) and the given
    /// smoothing values.
    pub fn linear(count: usize, max: f64, alphas: Vec<f64>) -> Result<Self> {
        if count < 2 {
            return invalid("need at least two scale values");
        }
        let last = (count - 1) as f64;
        Self::new((0..count).map(|k| max * k as f64 / last).collect(), alphas)
    }

    /// 50 scales in `[0, 0.35]` and α = 0, 0.01, …, 0.17.
    pub fn preset() -> Self {
        Self::linear(50, 0.35, (0..18).map(|k| k as f64 / 100.0).collect())
            .expect("preset grid is valid")
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Scale needed so that no cell of the grid is truncated.
    pub fn required_scale(&self) -> f64 {
        self.epsilons.last().copied().unwrap_or(0.0) + self.alphas.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrockerPlot {
    pub times: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `values[t][e]`.
    pub values: Vec<Vec<u32>>,
    pub dim: usize,
    pub alpha: f64,
    /// Scale the underlying barcodes were computed to.
    pub max_scale: f64,
}

impl CrockerPlot {
    /// Indices of scales whose window `[ε - α, ε + α]` exceeds `max_scale`.
    pub fn truncated_epsilons(&self) -> Vec<usize> {
        (0..self.epsilons.len())
            .filter(|&e| self.epsilons[e] + self.alpha > self.max_scale)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrockerStack {
    pub times: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub alphas: Vec<f64>,
    pub dim: usize,
    pub max_scale: f64,
    /// Row-major over `(t, ε, α)`: α varies fastest.
    values: Vec<u32>,
}

impl CrockerStack {
    pub fn from_values(
        times: Vec<f64>,
        epsilons: Vec<f64>,
        alphas: Vec<f64>,
        dim: usize,
        max_scale: f64,
        values: Vec<u32>,
    ) -> Result<Self> {
        if values.len() != times.len() * epsilons.len() * alphas.len() {
            return invalid(format!(
                "{} values for a {}x{}x{} stack",
                values.len(),
                times.len(),
                epsilons.len(),
                alphas.len()
            ));
        }
        Ok(Self {
            times,
            epsilons,
            alphas,
            dim,
            max_scale,
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.times.len(), self.epsilons.len(), self.alphas.len())
    }

    #[inline]
    pub fn get(&self, t: usize, e: usize, a: usize) -> u32 {
        let (_, ne, na) = self.shape();
        self.values[(t * ne + e) * na + a]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn is_truncated(&self, e: usize, a: usize) -> bool {
        self.epsilons[e] + self.alphas[a] > self.max_scale
    }

    /// The α-smoothed crocker plot at the `a`-th smoothing value.
    pub fn slice(&self, a: usize) -> CrockerPlot {
        let (nt, ne, _) = self.shape();
        CrockerPlot {
            times: self.times.clone(),
            epsilons: self.epsilons.clone(),
            values: (0..nt)
                .map(|t| (0..ne).map(|e| self.get(t, e, a)).collect())
                .collect(),
            dim: self.dim,
            alpha: self.alphas[a],
            max_scale: self.max_scale,
        }
    }

    /// True when every cell is non-increasing along α.
    pub fn is_monotone_in_alpha(&self) -> bool {
        let na = self.alphas.len();
        self.values
            .chunks(na.max(1))
            .all(|cell| cell.windows(2).all(|w| w[0] >= w[1]))
    }
}

fn check_scales(series: &BarcodeSeries, grid: &ScaleGrid) -> Result<()> {
    let top = grid.epsilons.last().copied().unwrap_or(0.0);
    let max_scale = series.max_scale();
    if top > max_scale {
        return invalid(format!(
            "scale {top} lies beyond the computed range {max_scale}"
        ));
    }
    Ok(())
}

pub fn crocker_plot(series: &BarcodeSeries, grid: &ScaleGrid, dim: usize) -> Result<CrockerPlot> {
    alpha_smoothed_plot(series, grid, dim, 0.0)
}

/// Crocker plot of `rank(V_t(ε-α) → V_t(ε+α))` for a single `α`.
pub fn alpha_smoothed_plot(
    series: &BarcodeSeries,
    grid: &ScaleGrid,
    dim: usize,
    alpha: f64,
) -> Result<CrockerPlot> {
    if !(alpha >= 0.0) {
        return invalid("alpha must be non-negative");
    }
    check_scales(series, grid)?;
    let values = series
        .barcodes()
        .iter()
        .map(|b| {
            grid.epsilons
                .iter()
                .map(|&eps| rank_function(b, dim, eps, alpha) as u32)
                .collect()
        })
        .collect();
    Ok(CrockerPlot {
        times: series.times().to_vec(),
        epsilons: grid.epsilons.clone(),
        values,
        dim,
        alpha,
        max_scale: series.max_scale(),
    })
}

pub fn crocker_stack(series: &BarcodeSeries, grid: &ScaleGrid, dim: usize) -> Result<CrockerStack> {
    check_scales(series, grid)?;
    let mut values =
        Vec::with_capacity(series.len() * grid.epsilons.len() * grid.alphas.len());
    for b in series.barcodes() {
        for &eps in &grid.epsilons {
            for &alpha in &grid.alphas {
                values.push(rank_function(b, dim, eps, alpha) as u32);
            }
        }
    }
    CrockerStack::from_values(
        series.times().to_vec(),
        grid.epsilons.clone(),
        grid.alphas.clone(),
        dim,
        series.max_scale(),
        values,
    )
}

/// Row-major flattening: time-major, then scale.
pub fn vectorize(plot: &CrockerPlot) -> Vec<f64> {
    plot.values.iter().flatten().map(|&v| v as f64).collect()
}

/// Concatenation of the vectorized α-slices in ascending α order.
pub fn vectorize_stack(stack: &CrockerStack) -> Vec<f64> {
    let (nt, ne, na) = stack.shape();
    let mut out = Vec::with_capacity(nt * ne * na);
    for a in 0..na {
        for t in 0..nt {
            for e in 0..ne {
                out.push(stack.get(t, e, a) as f64);
            }
        }
    }
    out
}

pub fn concat_dims(v0: &[f64], v1: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v0.len() + v1.len());
    out.extend_from_slice(v0);
    out.extend_from_slice(v1);
    out
}
