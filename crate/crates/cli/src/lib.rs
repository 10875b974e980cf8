//! Experiment driver: corpus generation, summaries, distance matrices,
//! clustering and heatmap rendering for Vicsek simulations.

pub mod config;
pub mod pipeline;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
struct Experiments;
