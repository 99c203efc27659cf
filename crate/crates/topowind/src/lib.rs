//! Winding-number configurations on a discretized circle, a from-scratch 1D
//! convolutional autoencoder, and linear-probe analysis of what the
//! compressed representation retains.
//!
//! The pipeline: [`windgen`] draws labeled phase configurations, [`topo`]
//! measures their winding number directly, [`ae`] compresses them through a
//! conv/pool encoder trained only on reconstruction, and [`probe`] trains a
//! small supervised head on the frozen 4x16 feature maps to test whether the
//! winding class survived compression. Everything numeric is f64 and every
//! random draw flows from explicit seeds, so identical configs reproduce
//! byte-identical datasets, checkpoints, and reports.

pub mod ae;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod net;
pub mod probe;
pub mod report;
pub mod rng;
pub mod topo;
pub mod windgen;
