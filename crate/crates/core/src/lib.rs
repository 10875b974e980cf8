//! Topological summaries of time-varying point clouds.
//!
//! Point clouds ([`metric`]) are turned into Vietoris–Rips filtrations
//! ([`complex`]) and barcodes ([`persistence`]), then into crocker plots and
//! stacks ([`summaries`]). Barcodes are compared with bottleneck and erosion
//! distances ([`distances`]), and summaries are clustered with PCA and
//! k-medoids ([`analysis`]). [`vicsek`] simulates the flocking model used as
//! a test bed, and [`io`] holds the on-disk formats.
//!
//! ```
//! use crocker::metric::pairwise_distances;
//! use crocker::persistence::rips_barcode;
//! use crocker::summaries::{crocker_plot, BarcodeSeries, ScaleGrid};
//! use crocker::vicsek::{simulate, to_point_clouds, CloudMetric, VicsekParams};
//!
//! let trace = simulate(&VicsekParams { n: 20, steps: 20, ..Default::default() })?;
//! let clouds = to_point_clouds(&trace, 10, CloudMetric::Euclidean)?;
//! let grid = ScaleGrid::linear(5, 0.2, vec![0.0])?;
//! let bars = clouds
//!     .clouds()
//!     .iter()
//!     .map(|c| rips_barcode(&pairwise_distances(c)?, grid.required_scale(), 1))
//!     .collect::<crocker::Result<Vec<_>>>()?;
//! let series = BarcodeSeries::new(clouds.times().to_vec(), bars)?;
//! let plot = crocker_plot(&series, &grid, 0)?;
//! assert_eq!(plot.values[0][0], 20);
//! # Ok::<(), crocker::Error>(())
//! ```

pub mod analysis;
pub mod complex;
pub mod distances;
pub mod error;
pub mod io;
mod matching;
pub mod metric;
pub mod persistence;
pub mod summaries;
pub mod vicsek;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/metric.md")]
    struct Metric;
    #[doc = include_str!("../../../book/src/persistence.md")]
    struct Persistence;
    #[doc = include_str!("../../../book/src/crocker.md")]
    struct Crocker;
    #[doc = include_str!("../../../book/src/distances.md")]
    struct Distances;
    #[doc = include_str!("../../../book/src/vicsek.md")]
    struct Vicsek;
}
